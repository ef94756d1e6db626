// qkdlc: loss-controlled QKD analysis tool.
//
// Subcommands: rates, natural-loss, tomography, montecarlo. All numeric file
// output is full-precision decimal text and every command is deterministic
// given its full flag set. Exit codes: 0 success, 2 usage error, 3 numerical
// degeneracy, 4 statistical validation failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "qkdlc/channel.hpp"
#include "qkdlc/exec.hpp"
#include "qkdlc/io.hpp"
#include "qkdlc/keyrates.hpp"
#include "qkdlc/montecarlo.hpp"
#include "qkdlc/natural_loss.hpp"
#include "qkdlc/optimize.hpp"
#include "qkdlc/tomography.hpp"

namespace {

using namespace qkdlc;

std::vector<double> parse_range(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() != 3) throw std::invalid_argument("range must be lo:hi:step");
  const double lo = parse_double(parts[0]);
  const double hi = parse_double(parts[1]);
  const double step = parse_double(parts[2]);
  if (!(step > 0.0) || hi < lo) throw std::invalid_argument("bad range " + text);
  std::vector<double> out;
  for (double v = lo; v <= hi + 0.5 * step; v += step) out.push_back(v);
  return out;
}

std::string trim_float(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::optional<nlohmann::json> load_config(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return nlohmann::json::parse(read_file(path));
}

// ---------------------------------------------------------------- rates ----

struct RatesArgs {
  std::string protocol;
  std::vector<double> r_e_list;
  std::string d_range = "50:250:1";
  bool optimize = false;
  double fixed_mu = -1.0;
  double p_err = 0.0;
  double p_err_x = -1.0;
  double p_err_z = -1.0;
  double xi = 0.02;
  std::string out = "rates";
  std::string format = "csv";
  std::string intensity_out;
  std::string error_sweep_out;
  double error_sweep_d = 200.0;
  std::string perr_grid = "0:0.12:0.01";
  std::string config;
};

int run_rates(RatesArgs& a) {
  if (const auto cfg = load_config(a.config)) {
    const auto& j = *cfg;
    if (j.contains("protocol")) a.protocol = j["protocol"].get<std::string>();
    if (j.contains("re")) a.r_e_list = j["re"].get<std::vector<double>>();
    if (j.contains("d")) a.d_range = j["d"].get<std::string>();
    if (j.contains("optimize-intensity")) a.optimize = j["optimize-intensity"].get<bool>();
    if (j.contains("mu")) a.fixed_mu = j["mu"].get<double>();
    if (j.contains("perr")) a.p_err = j["perr"].get<double>();
    if (j.contains("perr-x")) a.p_err_x = j["perr-x"].get<double>();
    if (j.contains("perr-z")) a.p_err_z = j["perr-z"].get<double>();
    if (j.contains("xi")) a.xi = j["xi"].get<double>();
    if (j.contains("out")) a.out = j["out"].get<std::string>();
    if (j.contains("format")) a.format = j["format"].get<std::string>();
    if (j.contains("intensity-out")) a.intensity_out = j["intensity-out"].get<std::string>();
    if (j.contains("error-sweep-out"))
      a.error_sweep_out = j["error-sweep-out"].get<std::string>();
    if (j.contains("error-sweep-d")) a.error_sweep_d = j["error-sweep-d"].get<double>();
    if (j.contains("perr-grid")) a.perr_grid = j["perr-grid"].get<std::string>();
  }
  const Protocol proto = protocol_from_name(a.protocol);
  if (a.r_e_list.empty()) throw std::invalid_argument("at least one --re required");
  if (!a.optimize && a.fixed_mu < 0.0) a.optimize = true;  // default mode
  if (a.format != "csv" && a.format != "json") {
    throw std::invalid_argument("format must be csv or json");
  }
  const std::vector<double> distances = parse_range(a.d_range);
  const ErrorRates errors{a.p_err_x >= 0.0 ? a.p_err_x : a.p_err,
                          a.p_err_z >= 0.0 ? a.p_err_z : a.p_err};
  const FormulaId enh_id = proto == Protocol::bb84 ? FormulaId::bb84_enh : FormulaId::cow_enh;
  const FormulaId orig_id =
      proto == Protocol::bb84 ? FormulaId::bb84_orig_ub : FormulaId::cow_orig_ub;

  for (const double r_e : a.r_e_list) {
    RateCurve enhanced, dashed, original, plob;
    enhanced.points.resize(distances.size());
    dashed.points.resize(distances.size());
    original.points.resize(distances.size());
    plob.points.resize(distances.size());

    const auto n = static_cast<long long>(distances.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
#endif
    for (long long i = 0; i < n; ++i) {
      const double d = distances[i];
      const Probability t = transmittance(FiberSpec(a.xi, d), d);
      const auto enh_obj = make_rate_objective(enh_id, r_e, errors, t);

      if (a.optimize) {
        const auto res = optimize_intensity(enh_obj);
        enhanced.points[i] = RatePoint::make(d, res.optimal_rate, res.optimal_mu, enh_id);
      } else {
        enhanced.points[i] = RatePoint::make(d, enh_obj(a.fixed_mu), a.fixed_mu, enh_id);
      }

      // dashed series: loss control applied at the original protocol's
      // intensity (mu = 1 for BB84; the BS-attack optimum for COW)
      const auto orig_res = optimize_intensity(make_rate_objective(orig_id, r_e, errors, t));
      const double mu_dashed = proto == Protocol::bb84 ? 1.0 : orig_res.optimal_mu;
      dashed.points[i] = RatePoint::make(d, enh_obj(mu_dashed), mu_dashed, enh_id);

      original.points[i] =
          RatePoint::make(d, orig_res.optimal_rate, orig_res.optimal_mu, orig_id);
      plob.points[i] = RatePoint::make(d, plob_bound(t), 0.0, FormulaId::plob);
    }

    const std::string re_tag =
        a.r_e_list.size() > 1 ? ".re" + trim_float(r_e) : std::string();
    const std::string ext = a.format == "csv" ? ".csv" : ".json";
    const auto save = [&](const RateCurve& curve, const char* series) {
      const std::string path = a.out + re_tag + "." + series + ext;
      write_file_atomic(path, a.format == "csv" ? curve.to_csv() : curve.to_json_string());
      std::cout << path << "\n";
    };
    save(enhanced, "enhanced");
    save(dashed, "enhanced_fixed_mu");
    save(original, "original");
    save(plob, "plob");

    if (!a.intensity_out.empty()) {
      const auto enh_curve = optimal_intensity_curve(enh_id, distances, r_e, errors);
      const auto orig_curve = optimal_intensity_curve(orig_id, distances, r_e, errors);
      const std::string enh_path = a.intensity_out + re_tag + ".enhanced.csv";
      const std::string orig_path = a.intensity_out + re_tag + ".original.csv";
      write_file_atomic(enh_path, intensity_curve_csv(enh_curve));
      write_file_atomic(orig_path, intensity_curve_csv(orig_curve));
      std::cout << enh_path << "\n" << orig_path << "\n";
    }
  }

  if (!a.error_sweep_out.empty()) {
    if (proto != Protocol::bb84) {
      throw std::invalid_argument("error sweep is a BB84 analysis");
    }
    const std::vector<double> perr = parse_range(a.perr_grid);
    const ErrorSweepTable table = error_sweep(a.error_sweep_d, a.r_e_list, perr);
    write_file_atomic(a.error_sweep_out, table.to_csv());
    std::cout << a.error_sweep_out << "\n";
    // two natural baselines for the error-penalty comparison; print both
    if (perr.size() >= 2) {
      const std::size_t last = perr.size() - 1;
      for (std::size_t k = 0; k < a.r_e_list.size(); ++k) {
        const double vs_errorfree =
            table.enhanced[0][k] > 0.0 ? table.enhanced[last][k] / table.enhanced[0][k] : 0.0;
        const double vs_original =
            table.original[last] > 0.0 ? table.enhanced[last][k] / table.original[last] : 0.0;
        std::cout << "rE=" << trim_float(a.r_e_list[k]) << " at p_err="
                  << trim_float(perr[last]) << ": enhanced/(error-free enhanced)="
                  << format_full(vs_errorfree)
                  << ", enhanced/(original at same errors)=" << format_full(vs_original)
                  << "\n";
      }
    }
  }
  return 0;
}

// ---------------------------------------------------------- natural loss ----

struct NaturalLossArgs {
  double mu = 100.0;
  std::string grid = "0:1:0.005";
  double threshold = 0.5;
  double xi = 0.02;
  std::string out = "natural_loss.csv";
  std::string config;
};

int run_natural_loss(NaturalLossArgs& a) {
  if (const auto cfg = load_config(a.config)) {
    const auto& j = *cfg;
    if (j.contains("mu")) a.mu = j["mu"].get<double>();
    if (j.contains("grid")) a.grid = j["grid"].get<std::string>();
    if (j.contains("threshold")) a.threshold = j["threshold"].get<double>();
    if (j.contains("xi")) a.xi = j["xi"].get<double>();
    if (j.contains("out")) a.out = j["out"].get<std::string>();
  }
  if (a.mu < 0.0) throw std::invalid_argument("negative intensity");
  const std::vector<double> grid = parse_range(a.grid);
  if (grid.empty()) throw std::invalid_argument("empty grid");
  const FiberSpec fiber(a.xi, grid.back());

  const auto dps = natural_loss_curve(EncodingKind::dps_like, fiber, grid, a.mu);
  const auto cow = natural_loss_curve(EncodingKind::cow_like, fiber, grid, a.mu);
  const auto pr = natural_loss_curve(EncodingKind::phase_randomized, fiber, grid, a.mu);

  std::string csv = "l_km,dps_bound,cow_bound,pr_bound\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    csv += format_full(grid[i]);
    csv += ',';
    csv += format_full(dps[i].bound);
    csv += ',';
    csv += format_full(cow[i].bound);
    csv += ',';
    csv += format_full(pr[i].bound);
    csv += '\n';
  }
  write_file_atomic(a.out, csv);
  std::cout << a.out << "\n";

  const auto report = [&](const char* name, const std::vector<NaturalLossPoint>& curve) {
    for (const auto& p : curve) {
      if (p.bound > a.threshold) {
        std::cout << name << " exceeds " << trim_float(a.threshold)
                  << " at l_km=" << format_full(p.l_km) << "\n";
        return;
      }
    }
    std::cout << name << " never exceeds " << trim_float(a.threshold) << " on grid\n";
  };
  report("dps_bound", dps);
  report("cow_bound", cow);
  report("pr_bound", pr);
  return 0;
}

// ------------------------------------------------------------ tomography ----

struct TomographyArgs {
  std::string channel_path;
  double resolution = 0.1;
  double noise = 0.0;
  int averages = 1;
  std::uint64_t seed = 1;
  double min_leak = 1e-4;
  std::string out = "tomogram.json";
  std::string reflectogram_out;
  bool accuracy = false;
  double confidence = 0.95;
  int trials = 200;
  std::string config;
};

int run_tomography(TomographyArgs& a) {
  if (const auto cfg = load_config(a.config)) {
    const auto& j = *cfg;
    if (j.contains("channel")) a.channel_path = j["channel"].get<std::string>();
    if (j.contains("resolution")) a.resolution = j["resolution"].get<double>();
    if (j.contains("noise")) a.noise = j["noise"].get<double>();
    if (j.contains("averages")) a.averages = j["averages"].get<int>();
    if (j.contains("seed")) a.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("min-leak")) a.min_leak = j["min-leak"].get<double>();
    if (j.contains("out")) a.out = j["out"].get<std::string>();
    if (j.contains("accuracy")) a.accuracy = j["accuracy"].get<bool>();
    if (j.contains("confidence")) a.confidence = j["confidence"].get<double>();
    if (j.contains("trials")) a.trials = j["trials"].get<int>();
  }

  if (a.accuracy) {
    DetectionScenario sc;
    sc.noise_sigma_db = a.noise;
    sc.n_averages = a.averages;
    sc.resolution_km = a.resolution;
    sc.min_leak_magnitude = a.min_leak;
    sc.seed = a.seed;
    const DetectionAccuracyResult res = detection_accuracy(sc, Probability(a.confidence), a.trials);
    nlohmann::json j;
    j["magnitude"] = res.magnitude;
    j["bracket_lo"] = res.bracket_lo;
    j["bracket_hi"] = res.bracket_hi;
    j["success_rate"] = res.success_rate;
    j["trials_per_probe"] = res.trials_per_probe;
    j["confidence"] = a.confidence;
    const std::string text = j.dump(2);
    write_file_atomic(a.out, text);
    std::cout << text << "\n";
    return 0;
  }

  if (a.channel_path.empty()) throw std::invalid_argument("--channel required");
  const ChannelState channel = ChannelState::from_json_string(read_file(a.channel_path));
  const Reflectogram r =
      synth_reflectogram(channel, a.resolution, a.noise, a.averages, a.seed);
  if (!a.reflectogram_out.empty()) write_file_atomic(a.reflectogram_out, r.to_csv());

  Tomogram tomo;
  try {
    tomo = fit_tomogram(r, a.min_leak);
  } catch (const std::exception& e) {
    std::cerr << "fit degenerate: " << e.what() << "\n";
    return 3;
  }

  nlohmann::json j;
  j["tomogram"] = nlohmann::json::parse(tomo.to_json_string());
  j["injected"] = nlohmann::json::array();
  for (const LocalLeak& leak : channel.leaks()) {
    j["injected"].push_back({{"position_km", leak.position_km},
                             {"magnitude", leak.magnitude}});
  }
  j["matches"] = nlohmann::json::array();
  for (const LocalLeak& truth : channel.leaks()) {
    const LocalLeak* best = nullptr;
    for (const LocalLeak& got : tomo.leaks) {
      if (!best ||
          std::abs(got.position_km - truth.position_km) <
              std::abs(best->position_km - truth.position_km)) {
        best = &got;
      }
    }
    nlohmann::json m;
    m["injected_position_km"] = truth.position_km;
    m["injected_magnitude"] = truth.magnitude;
    const bool matched =
        best != nullptr &&
        std::abs(best->position_km - truth.position_km) <= 5.0 * a.resolution;
    m["matched"] = matched;
    if (matched) {
      m["recovered_position_km"] = best->position_km;
      m["recovered_magnitude"] = best->magnitude;
      m["position_error_km"] = best->position_km - truth.position_km;
      m["magnitude_rel_error"] =
          truth.magnitude > 0.0 ? (best->magnitude - truth.magnitude) / truth.magnitude : 0.0;
    }
    j["matches"].push_back(m);
  }
  j["total_leak_injected"] = total_artificial_leak(channel).value();
  double survival = 1.0;
  for (const LocalLeak& leak : tomo.leaks) survival *= 1.0 - leak.magnitude;
  j["total_leak_recovered"] = 1.0 - survival;
  j["seed"] = a.seed;
  j["noise_sigma_db"] = a.noise;
  j["n_averages"] = a.averages;
  j["resolution_km"] = a.resolution;

  write_file_atomic(a.out, j.dump(2));
  std::cout << a.out << "\n";
  return 0;
}

// ------------------------------------------------------------ montecarlo ----

struct MonteCarloArgs {
  std::string protocol = "cow";
  double mu = 1.0;
  double d = 50.0;
  double r_e = 0.0;
  std::uint64_t n = 1000000;
  std::uint64_t seed = 1;
  std::string out;
  std::string config;
};

int run_montecarlo(MonteCarloArgs& a) {
  if (const auto cfg = load_config(a.config)) {
    const auto& j = *cfg;
    if (j.contains("protocol")) a.protocol = j["protocol"].get<std::string>();
    if (j.contains("mu")) a.mu = j["mu"].get<double>();
    if (j.contains("d")) a.d = j["d"].get<double>();
    if (j.contains("re")) a.r_e = j["re"].get<double>();
    if (j.contains("n")) a.n = j["n"].get<std::uint64_t>();
    if (j.contains("seed")) a.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("out")) a.out = j["out"].get<std::string>();
  }
  SimConfig cfg;
  cfg.protocol = protocol_from_name(a.protocol);
  cfg.intensity_mu = a.mu;
  cfg.distance_km = a.d;
  cfg.r_e = a.r_e;
  cfg.n_pulses = a.n;
  cfg.seed = a.seed;
  cfg.validate();

  const SimOutcome outcome = simulate(cfg);
  const ComparisonReport report = compare_to_analytic(outcome, cfg);
  const std::string text = report_json(cfg, outcome, report);
  std::cout << text << "\n";
  if (!a.out.empty()) write_file_atomic(a.out, text);
  return report.all_within(4.0) ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loss-controlled QKD analysis: key rates, line tomography, Monte Carlo"};
  app.require_subcommand(1);

  RatesArgs rates;
  CLI::App* cmd_rates = app.add_subcommand("rates", "Key-rate curves vs distance");
  cmd_rates->add_option("--protocol", rates.protocol, "bb84 or cow")->required();
  cmd_rates->add_option("--re", rates.r_e_list, "detectable-leak fraction(s)")->required();
  cmd_rates->add_option("--d", rates.d_range, "distance range lo:hi:step km");
  cmd_rates->add_flag("--optimize-intensity", rates.optimize, "optimize mu per distance");
  cmd_rates->add_option("--mu", rates.fixed_mu, "fixed signal intensity");
  cmd_rates->add_option("--perr", rates.p_err, "error probability (both bases)");
  cmd_rates->add_option("--perr-x", rates.p_err_x, "X-basis error probability");
  cmd_rates->add_option("--perr-z", rates.p_err_z, "Z-basis error probability");
  cmd_rates->add_option("--xi", rates.xi, "attenuation coefficient per km");
  cmd_rates->add_option("--out", rates.out, "output path prefix");
  cmd_rates->add_option("--format", rates.format, "csv or json");
  cmd_rates->add_option("--intensity-out", rates.intensity_out,
                        "also write optimal-intensity curves to this prefix");
  cmd_rates->add_option("--error-sweep-out", rates.error_sweep_out,
                        "also write a rate-vs-error table (bb84)");
  cmd_rates->add_option("--error-sweep-d", rates.error_sweep_d, "error-sweep distance km");
  cmd_rates->add_option("--perr-grid", rates.perr_grid, "error-sweep grid lo:hi:step");
  cmd_rates->add_option("--config", rates.config, "JSON file overriding flags");

  NaturalLossArgs nl;
  CLI::App* cmd_nl = app.add_subcommand("natural-loss",
                                        "Eavesdropping bounds for natural scattering");
  cmd_nl->add_option("--mu", nl.mu, "signal intensity");
  cmd_nl->add_option("--grid", nl.grid, "segment-length grid lo:hi:step km");
  cmd_nl->add_option("--threshold", nl.threshold, "report crossing of this bound");
  cmd_nl->add_option("--xi", nl.xi, "attenuation coefficient per km");
  cmd_nl->add_option("--out", nl.out, "output CSV path");
  cmd_nl->add_option("--config", nl.config, "JSON file overriding flags");

  TomographyArgs tomo;
  CLI::App* cmd_tomo = app.add_subcommand("tomography",
                                          "Reflectogram synthesis and leak recovery");
  cmd_tomo->add_option("--channel", tomo.channel_path, "channel JSON file");
  cmd_tomo->add_option("--resolution", tomo.resolution, "bin width km");
  cmd_tomo->add_option("--noise", tomo.noise, "per-trace noise std dB");
  cmd_tomo->add_option("--averages", tomo.averages, "averaged trace count")
      ->check(CLI::Range(1, 1000000000));
  cmd_tomo->add_option("--seed", tomo.seed, "RNG seed");
  cmd_tomo->add_option("--min-leak", tomo.min_leak, "reporting threshold");
  cmd_tomo->add_option("--out", tomo.out, "output JSON path");
  cmd_tomo->add_option("--reflectogram-out", tomo.reflectogram_out, "raw trace CSV path");
  cmd_tomo->add_flag("--accuracy", tomo.accuracy, "estimate minimal detectable leak");
  cmd_tomo->add_option("--confidence", tomo.confidence, "accuracy-mode confidence");
  cmd_tomo->add_option("--trials", tomo.trials, "accuracy-mode trials per probe")
      ->check(CLI::Range(1, 1000000));
  cmd_tomo->add_option("--config", tomo.config, "JSON file overriding flags");

  MonteCarloArgs mc;
  CLI::App* cmd_mc = app.add_subcommand("montecarlo",
                                        "Pulse-level validation against the closed forms");
  cmd_mc->add_option("--protocol", mc.protocol, "bb84 or cow");
  cmd_mc->add_option("--mu", mc.mu, "signal intensity");
  cmd_mc->add_option("--d", mc.d, "distance km");
  cmd_mc->add_option("--re", mc.r_e, "detectable-leak fraction");
  cmd_mc->add_option("--n", mc.n, "pulse count")
      ->check(CLI::Range(static_cast<std::uint64_t>(1), static_cast<std::uint64_t>(1) << 40));
  cmd_mc->add_option("--seed", mc.seed, "RNG seed");
  cmd_mc->add_option("--out", mc.out, "also write the JSON report here");
  cmd_mc->add_option("--config", mc.config, "JSON file overriding flags");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (cmd_rates->parsed()) return run_rates(rates);
    if (cmd_nl->parsed()) return run_natural_loss(nl);
    if (cmd_tomo->parsed()) return run_tomography(tomo);
    if (cmd_mc->parsed()) return run_montecarlo(mc);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

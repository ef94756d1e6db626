#include "qkdlc/montecarlo.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "qkdlc/channel.hpp"
#include "qkdlc/exec.hpp"
#include "qkdlc/rng.hpp"

namespace qkdlc {

void SimConfig::validate() const {
  if (!(intensity_mu >= 0.0)) throw std::invalid_argument("negative intensity");
  if (!(r_e >= 0.0 && r_e <= 1.0)) throw std::invalid_argument("r_E outside [0, 1]");
  if (!(distance_km >= 0.0)) throw std::invalid_argument("negative distance");
  if (n_pulses < 1) throw std::invalid_argument("n_pulses must be >= 1");
}

namespace {

struct PulseMeans {
  double tap = 0.0;
  double bob = 0.0;
};

PulseMeans pulse_means(const SimConfig& cfg) {
  const double t = transmittance(FiberSpec(0.02, cfg.distance_km), cfg.distance_km).value();
  return {cfg.r_e * cfg.intensity_mu, t * (1.0 - cfg.r_e) * cfg.intensity_mu};
}

// One pulse: Eve's tap and Bob's detector draw independent Poisson photon
// numbers; a fair coin decides the BB84 basis match. The draw order within a
// pulse stream is fixed: tap, bob, coin.
inline void run_pulse(const SimConfig& cfg, const PulseMeans& means, std::uint64_t index,
                      std::uint64_t& conclusive, std::uint64_t& sifted,
                      std::uint64_t& taps) {
  SplitMix64 rng = stream_rng(cfg.seed, index);
  const bool tap_click = poisson_draw(rng, means.tap) >= 1;
  const bool bob_click = poisson_draw(rng, means.bob) >= 1;
  taps += tap_click;
  conclusive += bob_click;
  if (cfg.protocol == Protocol::bb84) {
    const bool basis_match = rng.next_u01() < 0.5;
    sifted += bob_click && basis_match;
  } else {
    sifted += bob_click;  // COW keeps every conclusive result
  }
}

}  // namespace

SimOutcome simulate(const SimConfig& cfg) {
  cfg.validate();
  const PulseMeans means = pulse_means(cfg);
  std::uint64_t conclusive = 0, sifted = 0, taps = 0;
  const auto n = static_cast<long long>(cfg.n_pulses);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : conclusive, sifted, taps) \
    num_threads(thread_count())
#endif
  for (long long i = 0; i < n; ++i) {
    run_pulse(cfg, means, static_cast<std::uint64_t>(i), conclusive, sifted, taps);
  }
  return {conclusive, sifted, taps, cfg.n_pulses, cfg.seed};
}

SimOutcome simulate_serial(const SimConfig& cfg) {
  cfg.validate();
  const PulseMeans means = pulse_means(cfg);
  std::uint64_t conclusive = 0, sifted = 0, taps = 0;
  for (std::uint64_t i = 0; i < cfg.n_pulses; ++i) {
    run_pulse(cfg, means, i, conclusive, sifted, taps);
  }
  return {conclusive, sifted, taps, cfg.n_pulses, cfg.seed};
}

bool ComparisonReport::all_within(double z_max) const {
  for (const Comparison& c : entries) {
    if (!(std::abs(c.z) <= z_max)) return false;
  }
  return true;
}

static Comparison make_comparison(std::string name, std::uint64_t count,
                                  std::uint64_t n, double analytic) {
  Comparison c;
  c.name = std::move(name);
  c.empirical = static_cast<double>(count) / static_cast<double>(n);
  c.analytic = analytic;
  const double var = analytic * (1.0 - analytic) / static_cast<double>(n);
  if (var > 0.0) {
    c.z = (c.empirical - analytic) / std::sqrt(var);
  } else {
    c.z = c.empirical == analytic ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return c;
}

ComparisonReport compare_to_analytic(const SimOutcome& outcome, const SimConfig& cfg) {
  cfg.validate();
  if (outcome.n_pulses != cfg.n_pulses || outcome.seed != cfg.seed) {
    throw std::invalid_argument("outcome does not match config");
  }
  if (outcome.conclusive_count > outcome.n_pulses ||
      outcome.sifted_count > outcome.conclusive_count ||
      outcome.eve_tap_count > outcome.n_pulses) {
    throw std::invalid_argument("outcome counts inconsistent");
  }
  const PulseMeans means = pulse_means(cfg);
  const double p_click = -std::expm1(-means.bob);
  const double p_tap = -std::expm1(-means.tap);

  ComparisonReport report;
  report.entries.push_back(make_comparison("conclusive_fraction", outcome.conclusive_count,
                                           outcome.n_pulses, p_click));
  if (cfg.protocol == Protocol::bb84) {
    report.entries.push_back(make_comparison("sifted_fraction", outcome.sifted_count,
                                             outcome.n_pulses, 0.5 * p_click));
  }
  report.entries.push_back(
      make_comparison("tap_fraction", outcome.eve_tap_count, outcome.n_pulses, p_tap));
  return report;
}

std::string report_json(const SimConfig& cfg, const SimOutcome& outcome,
                        const ComparisonReport& report) {
  nlohmann::json j;
  j["config"] = {{"protocol", std::string(protocol_name(cfg.protocol))},
                 {"intensity_mu", cfg.intensity_mu},
                 {"distance_km", cfg.distance_km},
                 {"r_e", cfg.r_e},
                 {"n_pulses", cfg.n_pulses},
                 {"seed", cfg.seed}};
  j["outcome"] = {{"conclusive_count", outcome.conclusive_count},
                  {"sifted_count", outcome.sifted_count},
                  {"eve_tap_count", outcome.eve_tap_count},
                  {"n_pulses", outcome.n_pulses},
                  {"seed", outcome.seed}};
  j["comparisons"] = nlohmann::json::array();
  for (const Comparison& c : report.entries) {
    j["comparisons"].push_back({{"name", c.name},
                                {"empirical", c.empirical},
                                {"analytic", c.analytic},
                                {"z", c.z}});
  }
  return j.dump(2);
}

}  // namespace qkdlc

#include "qkdlc/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "qkdlc/exec.hpp"
#include "qkdlc/io.hpp"
#include "qkdlc/rng.hpp"

namespace qkdlc {

namespace {

constexpr int kWindowBins = 5;
constexpr double kMadMultiplier = 5.0;
constexpr double kTwoPi = 6.283185307179586476925287;

// full round-trip step height in dB for a leak of magnitude m
double step_db(double magnitude) { return -20.0 * std::log10(1.0 - magnitude); }

double magnitude_from_step(double height_db) {
  return 1.0 - std::pow(10.0, -height_db / 20.0);
}

double median_inplace(std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    const auto lower = std::max_element(v.begin(), v.begin() + mid);
    m = 0.5 * (m + *lower);
  }
  return m;
}

// Repeated-median slope: median over i of the median over j of pairwise
// slopes. Breakdown point 50%, so step contamination cannot drag it far.
double repeated_median_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<double> med_i(n);
  std::vector<double> slopes;
  slopes.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    slopes.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      slopes.push_back((y[j] - y[i]) / (x[j] - x[i]));
    }
    med_i[i] = median_inplace(slopes);
  }
  return median_inplace(med_i);
}

// Least squares for y = a + b x + sum_j s_j * [k >= step_idx_j].
// Returns {a, b, s_0, ...}. Normal equations solved by Gaussian elimination;
// the system stays tiny (2 + number of detected steps).
std::vector<double> fit_steps_ls(const std::vector<double>& x, const std::vector<double>& y,
                                 const std::vector<std::size_t>& step_idx) {
  const std::size_t n = x.size();
  const std::size_t dim = 2 + step_idx.size();
  std::vector<std::vector<double>> ata(dim, std::vector<double>(dim, 0.0));
  std::vector<double> aty(dim, 0.0);
  std::vector<double> row(dim);
  for (std::size_t k = 0; k < n; ++k) {
    row[0] = 1.0;
    row[1] = x[k];
    for (std::size_t j = 0; j < step_idx.size(); ++j) {
      row[2 + j] = k >= step_idx[j] ? 1.0 : 0.0;
    }
    for (std::size_t a = 0; a < dim; ++a) {
      aty[a] += row[a] * y[k];
      for (std::size_t b = a; b < dim; ++b) ata[a][b] += row[a] * row[b];
    }
  }
  for (std::size_t a = 0; a < dim; ++a) {
    for (std::size_t b = 0; b < a; ++b) ata[a][b] = ata[b][a];
  }
  // elimination with partial pivoting
  for (std::size_t col = 0; col < dim; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < dim; ++r) {
      if (std::abs(ata[r][col]) > std::abs(ata[pivot][col])) pivot = r;
    }
    std::swap(ata[col], ata[pivot]);
    std::swap(aty[col], aty[pivot]);
    if (ata[col][col] == 0.0) throw std::runtime_error("degenerate step fit");
    for (std::size_t r = 0; r < dim; ++r) {
      if (r == col) continue;
      const double f = ata[r][col] / ata[col][col];
      for (std::size_t c = col; c < dim; ++c) ata[r][c] -= f * ata[col][c];
      aty[r] -= f * aty[col];
    }
  }
  std::vector<double> beta(dim);
  for (std::size_t a = 0; a < dim; ++a) beta[a] = aty[a] / ata[a][a];
  return beta;
}

}  // namespace

std::string Reflectogram::to_csv() const {
  std::ostringstream out;
  out << "position_km,power_dB\n";
  for (std::size_t i = 0; i < positions_km.size(); ++i) {
    out << format_full(positions_km[i]) << ',' << format_full(power_db[i]) << '\n';
  }
  return out.str();
}

Reflectogram Reflectogram::from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "position_km,power_dB") {
    throw std::invalid_argument("bad reflectogram CSV header");
  }
  Reflectogram r;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 2) throw std::invalid_argument("bad reflectogram CSV row");
    r.positions_km.push_back(parse_double(cells[0]));
    r.power_db.push_back(parse_double(cells[1]));
  }
  if (r.positions_km.size() >= 2) {
    r.resolution_km = r.positions_km[1] - r.positions_km[0];
  }
  return r;
}

std::string Tomogram::to_json_string() const {
  nlohmann::json j;
  j["slope_dB_per_km"] = fitted_slope_db_per_km;
  j["leaks"] = nlohmann::json::array();
  for (const LocalLeak& leak : leaks) {
    j["leaks"].push_back({{"position_km", leak.position_km},
                          {"magnitude", leak.magnitude}});
  }
  j["residual_rms_dB"] = residual_rms_db;
  return j.dump();
}

Reflectogram synth_reflectogram(const ChannelState& channel, double resolution_km,
                                double noise_sigma_db, int n_averages,
                                std::uint64_t seed) {
  const double length = channel.fiber().length_km;
  if (!(resolution_km > 0.0)) throw std::invalid_argument("resolution must be positive");
  if (resolution_km > length) throw std::invalid_argument("resolution exceeds fiber length");
  if (noise_sigma_db < 0.0) throw std::invalid_argument("negative noise sigma");
  if (n_averages < 1) throw std::invalid_argument("n_averages must be >= 1");

  const auto n_bins = static_cast<std::size_t>(std::floor(length / resolution_km)) + 1;
  Reflectogram r;
  r.resolution_km = resolution_km;
  r.n_averages = n_averages;
  r.positions_km.resize(n_bins);
  r.power_db.resize(n_bins);

  const double slope = -2.0 * 10.0 * channel.fiber().attenuation_xi;
  const double sigma = noise_sigma_db / std::sqrt(static_cast<double>(n_averages));

  double step_sum = 0.0;
  std::size_t next_leak = 0;
  const auto& leaks = channel.leaks();
  for (std::size_t k = 0; k < n_bins; ++k) {
    const double z = static_cast<double>(k) * resolution_km;
    while (next_leak < leaks.size() && leaks[next_leak].position_km <= z) {
      step_sum += step_db(leaks[next_leak].magnitude);
      ++next_leak;
    }
    double noise = 0.0;
    if (sigma > 0.0) {
      SplitMix64 rng = stream_rng(seed, k);
      noise = sigma * rng.next_gaussian();
    }
    r.positions_km[k] = z;
    r.power_db[k] = slope * z - step_sum + noise;
  }
  return r;
}

Tomogram fit_tomogram(const Reflectogram& r, double min_leak_magnitude) {
  const std::vector<double>& x = r.positions_km;
  const std::vector<double>& y = r.power_db;
  const std::size_t n = x.size();
  const std::size_t w = kWindowBins;
  if (n < 3 * w) throw std::invalid_argument("trace shorter than 3 windows");
  if (!(min_leak_magnitude >= 0.0 && min_leak_magnitude < 1.0)) {
    throw std::invalid_argument("min_leak_magnitude outside [0, 1)");
  }

  // 1. robust detrend
  const double slope0 = repeated_median_slope(x, y);
  std::vector<double> tmp(n);
  for (std::size_t k = 0; k < n; ++k) tmp[k] = y[k] - slope0 * x[k];
  const double intercept0 = median_inplace(tmp);
  std::vector<double> resid(n);
  for (std::size_t k = 0; k < n; ++k) resid[k] = y[k] - (intercept0 + slope0 * x[k]);

  // 2. windowed discrete derivative of the residual
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) prefix[k + 1] = prefix[k] + resid[k];
  const auto window_mean = [&](std::size_t lo, std::size_t hi) {
    return (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  };
  const std::size_t d_lo = w, d_hi = n - w + 1;  // valid derivative indices [d_lo, d_hi)
  std::vector<double> deriv(n, 0.0);
  for (std::size_t k = d_lo; k < d_hi; ++k) {
    deriv[k] = window_mean(k, k + w) - window_mean(k - w, k);
  }

  // 3. MAD threshold, centered at the median so a detrend bias cancels
  tmp.assign(deriv.begin() + d_lo, deriv.begin() + d_hi);
  const double d_med = median_inplace(tmp);
  for (std::size_t i = 0; i < tmp.size(); ++i) {
    tmp[i] = std::abs(deriv[d_lo + i] - d_med);
  }
  const double mad = median_inplace(tmp);
  const double floor_db = 0.5 * step_db(std::max(min_leak_magnitude, 1e-6));
  const double threshold = std::max(kMadMultiplier * mad, floor_db);

  // 4. cluster exceedances, peak per cluster
  std::vector<std::size_t> change_points;
  std::size_t k = d_lo;
  while (k < d_hi) {
    if (std::abs(deriv[k] - d_med) <= threshold) {
      ++k;
      continue;
    }
    std::size_t peak = k;
    std::size_t last = k;
    std::size_t j = k;
    while (j < d_hi && j - last <= w) {
      if (std::abs(deriv[j] - d_med) > threshold) {
        last = j;
        if (std::abs(deriv[j] - d_med) > std::abs(deriv[peak] - d_med)) peak = j;
      }
      ++j;
    }
    change_points.push_back(peak);
    k = last + w + 1;
  }

  // 5. joint refit of slope and step heights at the detected positions,
  //    dropping sub-threshold or upward steps and refitting once
  Tomogram tomo;
  std::vector<std::size_t> kept = change_points;
  std::vector<double> beta;
  for (int pass = 0; pass < 2; ++pass) {
    beta = fit_steps_ls(x, y, kept);
    std::vector<std::size_t> filtered;
    for (std::size_t j = 0; j < kept.size(); ++j) {
      const double height = -beta[2 + j];  // downward steps are losses
      // relative slack keeps a leak sitting exactly at the threshold
      if (height > 0.0 &&
          magnitude_from_step(height) >= min_leak_magnitude * (1.0 - 1e-9)) {
        filtered.push_back(kept[j]);
      }
    }
    if (filtered.size() == kept.size()) break;
    kept = std::move(filtered);
  }

  tomo.fitted_slope_db_per_km = beta[1];
  for (std::size_t j = 0; j < kept.size(); ++j) {
    const double height = -beta[2 + j];
    tomo.leaks.push_back({x[kept[j]], magnitude_from_step(height)});
  }

  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double model = beta[0] + beta[1] * x[i];
    for (std::size_t j = 0; j < kept.size(); ++j) {
      if (i >= kept[j]) model += beta[2 + j];
    }
    ss += (y[i] - model) * (y[i] - model);
  }
  tomo.residual_rms_db = std::sqrt(ss / static_cast<double>(n));
  return tomo;
}

static bool recovery_trial(const DetectionScenario& sc, double magnitude,
                           std::uint64_t trial_seed) {
  const FiberSpec fiber(sc.attenuation_xi, sc.fiber_length_km);
  const ChannelState channel(fiber, {{sc.leak_position_km, magnitude}});
  const Reflectogram r = synth_reflectogram(channel, sc.resolution_km, sc.noise_sigma_db,
                                            sc.n_averages, trial_seed);
  const Tomogram tomo = fit_tomogram(r, sc.min_leak_magnitude);
  for (const LocalLeak& leak : tomo.leaks) {
    const double pos_err = std::abs(leak.position_km - sc.leak_position_km);
    const double mag_err = std::abs(leak.magnitude - magnitude) / magnitude;
    if (pos_err <= sc.position_tol_bins * sc.resolution_km &&
        mag_err <= sc.magnitude_rel_tol) {
      return true;
    }
  }
  return false;
}

double recovery_success_rate(const DetectionScenario& sc, double magnitude, int trials) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  long long successes = 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) reduction(+ : successes) \
    num_threads(thread_count())
#endif
  for (long long t = 0; t < trials; ++t) {
    successes += recovery_trial(sc, magnitude, sc.seed + static_cast<std::uint64_t>(t));
  }
  return static_cast<double>(successes) / static_cast<double>(trials);
}

double recovery_success_rate_serial(const DetectionScenario& sc, double magnitude,
                                    int trials) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  long long successes = 0;
  for (long long t = 0; t < trials; ++t) {
    successes += recovery_trial(sc, magnitude, sc.seed + static_cast<std::uint64_t>(t));
  }
  return static_cast<double>(successes) / static_cast<double>(trials);
}

DetectionAccuracyResult detection_accuracy(const DetectionScenario& sc,
                                           Probability confidence, int trials) {
  DetectionAccuracyResult res;
  res.trials_per_probe = trials;

  double lo = sc.min_leak_magnitude;
  if (recovery_success_rate(sc, lo, trials) >= confidence.value()) {
    // noise floor below the reporting threshold; the threshold itself limits
    res.magnitude = lo;
    res.bracket_lo = lo;
    res.bracket_hi = lo;
    res.success_rate = recovery_success_rate(sc, lo, trials);
    return res;
  }
  double hi = 0.2;
  double hi_rate = recovery_success_rate(sc, hi, trials);
  while (hi_rate < confidence.value() && hi < 0.9) {
    hi = std::min(0.9, hi * 2.0);
    hi_rate = recovery_success_rate(sc, hi, trials);
  }
  for (int iter = 0; iter < 20 && (hi - lo) > 0.05 * hi; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (recovery_success_rate(sc, mid, trials) >= confidence.value()) {
      hi = mid;
      hi_rate = recovery_success_rate(sc, mid, trials);
    } else {
      lo = mid;
    }
  }
  res.magnitude = hi;
  res.bracket_lo = lo;
  res.bracket_hi = hi;
  res.success_rate = hi_rate;
  return res;
}

void TransmittometryConfig::validate() const {
  if (!(mod_freq_hz > 0.0 && sample_rate_hz > 0.0 && duration_s > 0.0)) {
    throw std::invalid_argument("non-positive transmittometry timing");
  }
  if (!(mod_freq_hz < 0.5 * sample_rate_hz)) {
    throw std::invalid_argument("modulation frequency not resolvable");
  }
  const double cycles = mod_freq_hz * duration_s;
  if (cycles < 100.0) throw std::invalid_argument("fewer than 100 modulation cycles");
  if (std::abs(cycles - std::round(cycles)) > 1e-9 * std::max(1.0, cycles)) {
    throw std::invalid_argument("modulation tone not aligned to a spectral bin");
  }
  if (one_over_f_amp < 0.0 || white_noise_amp < 0.0) {
    throw std::invalid_argument("negative noise amplitude");
  }
}

namespace {

struct ToneChannel {
  double bin_mag = 0.0;  // |DFT| at the modulation bin
  double rms = 0.0;
};

// One synthesized channel: tone of the given amplitude plus octave-band 1/f
// components (amplitude ~ 1/sqrt(f), strongest at the lowest octave) and
// white noise. Returns the modulation-bin magnitude and the raw RMS.
ToneChannel synth_channel(const TransmittometryConfig& cfg, double tone_amp,
                          std::uint64_t channel_tag) {
  const auto n = static_cast<std::size_t>(std::llround(cfg.sample_rate_hz * cfg.duration_s));
  const double f_ratio = cfg.mod_freq_hz / cfg.sample_rate_hz;

  constexpr int kOctaves = 10;
  // amplitude ~ 1/sqrt(f), normalized so the lowest octave carries
  // one_over_f_amp, the strongest component
  const double f_lowest = cfg.mod_freq_hz / std::pow(2.0, kOctaves);
  double octave_amp[kOctaves];
  double octave_ratio[kOctaves];
  double octave_phase[kOctaves];
  SplitMix64 phase_rng = stream_rng(cfg.seed, channel_tag);
  for (int o = 0; o < kOctaves; ++o) {
    const double f = cfg.mod_freq_hz / std::pow(2.0, o + 1);
    octave_ratio[o] = f / cfg.sample_rate_hz;
    octave_amp[o] = cfg.one_over_f_amp * std::sqrt(f_lowest / f);
    octave_phase[o] = kTwoPi * phase_rng.next_u01();
  }

  SplitMix64 white_rng = stream_rng(cfg.seed, channel_tag + 1);
  double acc_cos = 0.0, acc_sin = 0.0, acc_sq = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double kd = static_cast<double>(k);
    double sample = tone_amp * std::sin(kTwoPi * std::fmod(kd * f_ratio, 1.0));
    for (int o = 0; o < kOctaves; ++o) {
      sample += octave_amp[o] *
                std::sin(kTwoPi * std::fmod(kd * octave_ratio[o], 1.0) + octave_phase[o]);
    }
    if (cfg.white_noise_amp > 0.0) sample += cfg.white_noise_amp * white_rng.next_gaussian();
    const double phase = kTwoPi * std::fmod(kd * f_ratio, 1.0);
    acc_cos += sample * std::cos(phase);
    acc_sin += sample * std::sin(phase);
    acc_sq += sample * sample;
  }
  ToneChannel ch;
  ch.bin_mag = std::sqrt(acc_cos * acc_cos + acc_sin * acc_sin);
  ch.rms = std::sqrt(acc_sq / static_cast<double>(n));
  return ch;
}

}  // namespace

TransmittometryResult transmittometry_trial(const TransmittometryConfig& cfg,
                                            Probability true_effective_t,
                                            Probability natural_t) {
  cfg.validate();
  if (!(true_effective_t.value() > 0.0) ||
      true_effective_t.value() > natural_t.value()) {
    throw std::invalid_argument("effective transmittance outside (0, natural]");
  }
  const double tone_amp = 1.0;
  const ToneChannel in = synth_channel(cfg, tone_amp, 0);
  const ToneChannel out = synth_channel(cfg, tone_amp * true_effective_t.value(), 100);

  TransmittometryResult res;
  res.t_lockin = out.bin_mag / in.bin_mag;
  res.t_naive = out.rms / in.rms;
  res.r_e_lockin = std::clamp(1.0 - res.t_lockin / natural_t.value(), 0.0, 1.0);
  res.r_e_naive = std::clamp(1.0 - res.t_naive / natural_t.value(), 0.0, 1.0);
  return res;
}

Probability transmittometry_estimate(const TransmittometryConfig& cfg,
                                     Probability true_effective_t,
                                     Probability natural_t) {
  return Probability(transmittometry_trial(cfg, true_effective_t, natural_t).r_e_lockin);
}

}  // namespace qkdlc

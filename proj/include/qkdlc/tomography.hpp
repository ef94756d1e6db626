#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qkdlc/channel.hpp"

namespace qkdlc {

// Backscatter power trace relative to launch, on a uniform position grid.
struct Reflectogram {
  std::vector<double> positions_km;
  std::vector<double> power_db;
  double resolution_km = 0.0;
  int n_averages = 1;

  // CSV with header position_km,power_dB
  std::string to_csv() const;
  static Reflectogram from_csv(const std::string& text);
};

// Fitted loss profile: global slope plus the extracted local leaks.
struct Tomogram {
  std::vector<LocalLeak> leaks;
  double fitted_slope_db_per_km = 0.0;
  double residual_rms_db = 0.0;

  std::string to_json_string() const;
};

// Round-trip OTDR model: power(z) = -2 (10 xi) z - sum of 2 Delta_i steps at
// leak positions, plus i.i.d. Gaussian noise of std noise_sigma/sqrt(n_averages)
// per bin, where Delta_i = -10 log10(1 - m_i).
Reflectogram synth_reflectogram(const ChannelState& channel, double resolution_km,
                                double noise_sigma_db, int n_averages,
                                std::uint64_t seed);

// Recovers the loss profile: repeated-median slope, MAD-thresholded windowed
// derivative for change points, then a joint least-squares refit of slope and
// step heights. Leaks below min_leak_magnitude are dropped.
Tomogram fit_tomogram(const Reflectogram& r, double min_leak_magnitude);

struct DetectionScenario {
  double noise_sigma_db = 0.0;
  int n_averages = 1;
  double resolution_km = 0.1;
  double fiber_length_km = 100.0;
  double attenuation_xi = 0.02;
  double leak_position_km = 50.0;
  double min_leak_magnitude = 1e-4;
  std::uint64_t seed = 1;
  // recovery tolerances
  double position_tol_bins = 2.0;
  double magnitude_rel_tol = 0.2;
};

// Fraction of seeded synth->fit trials that recover a single injected leak of
// the given magnitude within the scenario tolerances.
double recovery_success_rate(const DetectionScenario& sc, double magnitude, int trials);

// Plain-loop reference for the OpenMP trial kernel above.
double recovery_success_rate_serial(const DetectionScenario& sc, double magnitude,
                                    int trials);

struct DetectionAccuracyResult {
  double magnitude = 0.0;    // smallest reliably detectable leak magnitude
  double bracket_lo = 0.0;   // final bisection bracket
  double bracket_hi = 0.0;
  double success_rate = 0.0; // success rate at the returned magnitude
  int trials_per_probe = 0;
};

// Bisection over leak magnitude for the smallest one recovered with at least
// the requested confidence. With zero noise this returns the
// min_leak_magnitude threshold itself.
DetectionAccuracyResult detection_accuracy(const DetectionScenario& sc,
                                           Probability confidence, int trials = 200);

struct TransmittometryConfig {
  double mod_freq_hz = 1e6;
  double sample_rate_hz = 4e6;
  double duration_s = 1.024e-3;
  double one_over_f_amp = 0.0;   // amplitude of the lowest (strongest) 1/f component
  double white_noise_amp = 0.0;  // std of additive white noise
  std::uint64_t seed = 1;

  // Test-pulse bookkeeping, recorded but not consumed by the estimator.
  double test_pulse_photons = 1e11;
  double test_pulse_duration_s = 1e-6;
  double wavelength_nm = 1530.0;

  void validate() const;
};

struct TransmittometryResult {
  double r_e_lockin = 0.0;  // 1 - T_hat/T_natural from the modulation-bin ratio
  double r_e_naive = 0.0;   // same from the raw RMS ratio
  double t_lockin = 0.0;
  double t_naive = 0.0;
};

// Simulates one modulated test-pulse exchange: input tone and an output tone
// scaled by true_effective_t, both corrupted by octave-band 1/f noise and
// white noise, then estimates the leak fraction two ways.
TransmittometryResult transmittometry_trial(const TransmittometryConfig& cfg,
                                            Probability true_effective_t,
                                            Probability natural_t);

// The lock-in estimate alone.
Probability transmittometry_estimate(const TransmittometryConfig& cfg,
                                     Probability true_effective_t,
                                     Probability natural_t);

}  // namespace qkdlc

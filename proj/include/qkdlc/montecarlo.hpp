#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qkdlc/keyrates.hpp"

namespace qkdlc {

struct SimConfig {
  Protocol protocol = Protocol::cow;
  double intensity_mu = 0.0;
  double distance_km = 0.0;
  double r_e = 0.0;
  std::uint64_t n_pulses = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SimOutcome {
  std::uint64_t conclusive_count = 0;  // pulses with >= 1 photon at Bob
  std::uint64_t sifted_count = 0;      // BB84: conclusive and basis-matched
  std::uint64_t eve_tap_count = 0;     // pulses where Eve's mode has >= 1 photon
  std::uint64_t n_pulses = 0;
  std::uint64_t seed = 0;
};

// Pulse-level simulation: Eve's tap draws Poisson(r_E mu), Bob draws
// Poisson(T (1 - r_E) mu), independently (coherent states split on a
// beamsplitter have independent Poissonian outputs). Bit-exact for a fixed
// seed regardless of worker count.
SimOutcome simulate(const SimConfig& cfg);

// Plain-loop reference for the OpenMP kernel above.
SimOutcome simulate_serial(const SimConfig& cfg);

struct Comparison {
  std::string name;
  double empirical = 0.0;
  double analytic = 0.0;
  double z = 0.0;
};

struct ComparisonReport {
  std::vector<Comparison> entries;
  bool all_within(double z_max) const;
};

// Binomial z-scores of the empirical fractions against the closed-form
// probabilities. Rejects an outcome that does not match the config.
ComparisonReport compare_to_analytic(const SimOutcome& outcome, const SimConfig& cfg);

// {"config": {...}, "outcome": {...}, "comparisons": [...]}
std::string report_json(const SimConfig& cfg, const SimOutcome& outcome,
                        const ComparisonReport& report);

}  // namespace qkdlc

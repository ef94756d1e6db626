#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qkdlc/keyrates.hpp"

namespace qkdlc {

// Default search bracket for signal intensity, photons per pulse.
inline constexpr double kMuSearchLo = 1e-3;
inline constexpr double kMuSearchHi = 1e4;

struct OptimizationResult {
  double optimal_mu = 0.0;
  double optimal_rate = 0.0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  int evaluations = 0;
  bool degenerate = false;  // objective identically zero on the whole grid
};

// Maximizes a scalar objective over [search_lo, search_hi]: a 200-point
// log-spaced scan picks the bracket, golden-section refines it down to a
// relative width of 1e-6. Ties break toward smaller mu, and the refined
// point is never worse than the best coarse-grid point.
OptimizationResult optimize_intensity(const std::function<double(double)>& objective,
                                      double search_lo = kMuSearchLo,
                                      double search_hi = kMuSearchHi,
                                      double rel_tol = 1e-9);

struct ErrorRates {
  double x = 0.0;  // COW reads x as its single p_err
  double z = 0.0;
};

// Rate-vs-intensity objective for one formula at fixed channel parameters.
std::function<double(double)> make_rate_objective(FormulaId id, double r_e,
                                                  ErrorRates errors, Probability t);

struct IntensityPoint {
  double distance_km = 0.0;
  double optimal_mu = 0.0;
  double optimal_rate = 0.0;
};

std::vector<IntensityPoint> optimal_intensity_curve(FormulaId id,
                                                    std::span<const double> distances_km,
                                                    double r_e, ErrorRates errors);

// Plain-loop reference for the OpenMP kernel above.
std::vector<IntensityPoint> optimal_intensity_curve_serial(FormulaId id,
                                                           std::span<const double> distances_km,
                                                           double r_e, ErrorRates errors);

// CSV with header distance_km,optimal_mu,optimal_rate
std::string intensity_curve_csv(std::span<const IntensityPoint> points);

struct BoostResult {
  double value = 0.0;  // optimized enhanced rate / optimized original bound
  bool original_nonpositive = false;  // baseline <= 0: boost reported infinite
  double enhanced_rate = 0.0;
  double enhanced_mu = 0.0;
  double original_rate = 0.0;
  double original_mu = 0.0;
};

// Ratio of the intensity-optimized enhanced rate to the intensity-optimized
// original upper bound at one distance.
BoostResult boost_factor(Protocol protocol, double distance_km, double r_e,
                         ErrorRates errors);

// Distance where the optimized enhanced rate crosses the PLOB bound,
// located by bisection to a 0.1 km bracket. Empty when the difference has
// the same sign at both ends.
std::optional<double> plob_crossover(Protocol protocol, double r_e, ErrorRates errors,
                                     double d_lo_km, double d_hi_km);

// Optimized enhanced BB84 rates over an error grid, one column per r_E,
// plus the optimized original upper bound at the same error probability
// (applied to both bases). Rates are clamped at zero for reporting.
struct ErrorSweepTable {
  double distance_km = 0.0;
  std::vector<double> p_err_grid;
  std::vector<double> r_e_values;
  std::vector<std::vector<double>> enhanced;  // [p_err index][r_E index]
  std::vector<double> original;               // [p_err index]

  // CSV with header p_err,rate_rE_<value>,...,rate_original
  std::string to_csv() const;
};

ErrorSweepTable error_sweep(double distance_km, std::span<const double> r_e_list,
                            std::span<const double> p_err_grid);

}  // namespace qkdlc

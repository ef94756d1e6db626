#include "qkdlc/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "qkdlc/channel.hpp"
#include "qkdlc/exec.hpp"
#include "qkdlc/io.hpp"

namespace qkdlc {

namespace {
constexpr int kCoarsePoints = 200;
constexpr double kGoldenRelWidth = 1e-6;
constexpr double kInvPhi = 0.6180339887498948482;
constexpr double kDefaultXi = 0.02;
}  // namespace

OptimizationResult optimize_intensity(const std::function<double(double)>& objective,
                                      double search_lo, double search_hi,
                                      double rel_tol) {
  if (!(search_lo > 0.0 && search_lo < search_hi)) {
    throw std::invalid_argument("bad search bracket");
  }
  (void)rel_tol;  // the fixed coarse grid plus refinement already meets it

  OptimizationResult res;
  const double log_lo = std::log(search_lo);
  const double log_hi = std::log(search_hi);

  std::vector<double> grid(kCoarsePoints), value(kCoarsePoints);
  int best = 0;
  bool all_zero = true;
  for (int i = 0; i < kCoarsePoints; ++i) {
    grid[i] = std::exp(log_lo + (log_hi - log_lo) * i / (kCoarsePoints - 1));
    value[i] = objective(grid[i]);
    ++res.evaluations;
    if (value[i] != 0.0) all_zero = false;
    if (value[i] > value[best]) best = i;  // ties keep the smaller mu
  }
  if (all_zero) {
    res.optimal_mu = search_lo;
    res.optimal_rate = 0.0;
    res.bracket_lo = search_lo;
    res.bracket_hi = search_hi;
    res.degenerate = true;
    return res;
  }

  double a = grid[std::max(0, best - 1)];
  double b = grid[std::min(kCoarsePoints - 1, best + 1)];
  res.bracket_lo = a;
  res.bracket_hi = b;

  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = objective(c);
  double fd = objective(d);
  res.evaluations += 2;
  for (int iter = 0; iter < 200 && (b - a) > kGoldenRelWidth * b; ++iter) {
    if (fc >= fd) {  // keep the left subinterval on ties
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = objective(d);
    }
    ++res.evaluations;
  }
  const double mu = 0.5 * (a + b);
  const double val = objective(mu);
  ++res.evaluations;

  // never worse than the best coarse-grid point
  if (val >= value[best]) {
    res.optimal_mu = mu;
    res.optimal_rate = val;
  } else {
    res.optimal_mu = grid[best];
    res.optimal_rate = value[best];
  }
  return res;
}

std::function<double(double)> make_rate_objective(FormulaId id, double r_e,
                                                  ErrorRates errors, Probability t) {
  switch (id) {
    case FormulaId::bb84_enh:
      return [=](double mu) {
        return bb84_enhanced_rate(BB84Params(mu, r_e, errors.x, errors.z), t);
      };
    case FormulaId::bb84_orig_ub:
      return [=](double mu) {
        return bb84_original_upper(BB84Params(mu, r_e, errors.x, errors.z), t);
      };
    case FormulaId::cow_enh:
      return [=](double mu) {
        return cow_enhanced_rate(COWParams(mu, r_e, errors.x), t);
      };
    case FormulaId::cow_orig_ub:
      return [=](double mu) {
        return cow_original_upper(COWParams(mu, r_e, errors.x), t);
      };
    default:
      throw std::invalid_argument("formula has no intensity objective");
  }
}

static IntensityPoint optimize_at_distance(FormulaId id, double distance_km,
                                           double r_e, ErrorRates errors) {
  const Probability t = transmittance(FiberSpec(kDefaultXi, distance_km), distance_km);
  const OptimizationResult r = optimize_intensity(make_rate_objective(id, r_e, errors, t));
  return {distance_km, r.optimal_mu, r.optimal_rate};
}

std::vector<IntensityPoint> optimal_intensity_curve(FormulaId id,
                                                    std::span<const double> distances_km,
                                                    double r_e, ErrorRates errors) {
  std::vector<IntensityPoint> out(distances_km.size());
  const auto n = static_cast<long long>(distances_km.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
#endif
  for (long long i = 0; i < n; ++i) {
    out[i] = optimize_at_distance(id, distances_km[i], r_e, errors);
  }
  return out;
}

std::vector<IntensityPoint> optimal_intensity_curve_serial(FormulaId id,
                                                           std::span<const double> distances_km,
                                                           double r_e, ErrorRates errors) {
  std::vector<IntensityPoint> out;
  out.reserve(distances_km.size());
  for (const double d : distances_km) {
    out.push_back(optimize_at_distance(id, d, r_e, errors));
  }
  return out;
}

std::string intensity_curve_csv(std::span<const IntensityPoint> points) {
  std::string out = "distance_km,optimal_mu,optimal_rate\n";
  for (const IntensityPoint& p : points) {
    out += format_full(p.distance_km);
    out += ',';
    out += format_full(p.optimal_mu);
    out += ',';
    out += format_full(p.optimal_rate);
    out += '\n';
  }
  return out;
}

BoostResult boost_factor(Protocol protocol, double distance_km, double r_e,
                         ErrorRates errors) {
  const FormulaId enh = protocol == Protocol::bb84 ? FormulaId::bb84_enh : FormulaId::cow_enh;
  const FormulaId orig =
      protocol == Protocol::bb84 ? FormulaId::bb84_orig_ub : FormulaId::cow_orig_ub;
  const Probability t = transmittance(FiberSpec(kDefaultXi, distance_km), distance_km);

  const OptimizationResult e = optimize_intensity(make_rate_objective(enh, r_e, errors, t));
  const OptimizationResult o = optimize_intensity(make_rate_objective(orig, r_e, errors, t));

  BoostResult res;
  res.enhanced_rate = e.optimal_rate;
  res.enhanced_mu = e.optimal_mu;
  res.original_rate = o.optimal_rate;
  res.original_mu = o.optimal_mu;
  if (o.optimal_rate <= 0.0) {
    res.original_nonpositive = true;
    res.value = std::numeric_limits<double>::infinity();
  } else {
    res.value = e.optimal_rate / o.optimal_rate;
  }
  return res;
}

static double optimized_enhanced_rate(Protocol protocol, double distance_km, double r_e,
                                      ErrorRates errors) {
  const FormulaId enh = protocol == Protocol::bb84 ? FormulaId::bb84_enh : FormulaId::cow_enh;
  const Probability t = transmittance(FiberSpec(kDefaultXi, distance_km), distance_km);
  return optimize_intensity(make_rate_objective(enh, r_e, errors, t)).optimal_rate;
}

std::optional<double> plob_crossover(Protocol protocol, double r_e, ErrorRates errors,
                                     double d_lo_km, double d_hi_km) {
  if (!(d_lo_km < d_hi_km)) throw std::invalid_argument("bad distance bracket");
  const auto gap = [&](double d) {
    const Probability t = transmittance(FiberSpec(kDefaultXi, d), d);
    return optimized_enhanced_rate(protocol, d, r_e, errors) - plob_bound(t);
  };
  double lo = d_lo_km, hi = d_hi_km;
  double g_lo = gap(lo);
  const double g_hi = gap(hi);
  if (g_lo == 0.0) return lo;
  if (g_hi == 0.0) return hi;
  if ((g_lo > 0.0) == (g_hi > 0.0)) return std::nullopt;
  for (int iter = 0; iter < 60 && (hi - lo) > 0.1; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double g_mid = gap(mid);
    if (g_mid == 0.0) return mid;
    if ((g_mid > 0.0) == (g_lo > 0.0)) {
      lo = mid;
      g_lo = g_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

ErrorSweepTable error_sweep(double distance_km, std::span<const double> r_e_list,
                            std::span<const double> p_err_grid) {
  ErrorSweepTable table;
  table.distance_km = distance_km;
  table.p_err_grid.assign(p_err_grid.begin(), p_err_grid.end());
  table.r_e_values.assign(r_e_list.begin(), r_e_list.end());
  table.enhanced.assign(p_err_grid.size(), std::vector<double>(r_e_list.size(), 0.0));
  table.original.assign(p_err_grid.size(), 0.0);
  const Probability t = transmittance(FiberSpec(kDefaultXi, distance_km), distance_km);

  const auto n = static_cast<long long>(p_err_grid.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
#endif
  for (long long i = 0; i < n; ++i) {
    const ErrorRates errors{p_err_grid[i], p_err_grid[i]};
    for (std::size_t k = 0; k < table.r_e_values.size(); ++k) {
      const auto obj = make_rate_objective(FormulaId::bb84_enh, table.r_e_values[k], errors, t);
      table.enhanced[i][k] = std::max(0.0, optimize_intensity(obj).optimal_rate);
    }
    const auto orig = make_rate_objective(FormulaId::bb84_orig_ub, 0.0, errors, t);
    table.original[i] = std::max(0.0, optimize_intensity(orig).optimal_rate);
  }
  return table;
}

std::string ErrorSweepTable::to_csv() const {
  std::ostringstream out;
  out << "p_err";
  for (const double r : r_e_values) {
    char head[48];
    std::snprintf(head, sizeof(head), ",rate_rE_%g", r);
    out << head;
  }
  out << ",rate_original\n";
  for (std::size_t i = 0; i < p_err_grid.size(); ++i) {
    out << format_full(p_err_grid[i]);
    for (const double v : enhanced[i]) out << ',' << format_full(v);
    out << ',' << format_full(original[i]) << '\n';
  }
  return out.str();
}

}  // namespace qkdlc

#include "qkdlc/natural_loss.hpp"

#include <cmath>
#include <stdexcept>

#include "qkdlc/exec.hpp"

namespace qkdlc {

double natural_loss_info_bound(EncodingKind kind, const FiberSpec& fiber,
                               double segment_km, double intensity) {
  if (intensity < 0.0) throw std::domain_error("negative intensity");
  const double r_l = natural_scatter_fraction(fiber, segment_km).value();
  switch (kind) {
    case EncodingKind::dps_like:
      // scattered pair |g,g> vs |g,-g>: overlap exp(-2 r_l mu)
      return holevo_two_pure(std::exp(-2.0 * r_l * intensity));
    case EncodingKind::cow_like:
      // scattered pair |0,g> vs |g,0>: overlap exp(-r_l mu)
      return holevo_two_pure(std::exp(-r_l * intensity));
    case EncodingKind::phase_randomized:
      return nonvacuum_prob(r_l * intensity).value();
  }
  throw std::invalid_argument("unknown encoding kind");
}

static void check_grid(std::span<const double> l_grid) {
  for (std::size_t i = 1; i < l_grid.size(); ++i) {
    if (!(l_grid[i] > l_grid[i - 1])) {
      throw std::invalid_argument("grid must be strictly increasing");
    }
  }
}

std::vector<NaturalLossPoint> natural_loss_curve(EncodingKind kind,
                                                 const FiberSpec& fiber,
                                                 std::span<const double> l_grid,
                                                 double intensity) {
  check_grid(l_grid);
  std::vector<NaturalLossPoint> out(l_grid.size());
  const auto n = static_cast<long long>(l_grid.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(thread_count())
#endif
  for (long long i = 0; i < n; ++i) {
    out[i] = {l_grid[i], natural_loss_info_bound(kind, fiber, l_grid[i], intensity)};
  }
  return out;
}

std::vector<NaturalLossPoint> natural_loss_curve_serial(EncodingKind kind,
                                                        const FiberSpec& fiber,
                                                        std::span<const double> l_grid,
                                                        double intensity) {
  check_grid(l_grid);
  std::vector<NaturalLossPoint> out;
  out.reserve(l_grid.size());
  for (const double l : l_grid) {
    out.push_back({l, natural_loss_info_bound(kind, fiber, l, intensity)});
  }
  return out;
}

}  // namespace qkdlc

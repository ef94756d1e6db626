#pragma once

#include <span>
#include <vector>

#include "qkdlc/channel.hpp"

namespace qkdlc {

// Encoding families whose scattered components Eve would have to
// distinguish. The two-pulse encodings differ only in the overlap of the
// scattered states; the phase-randomized case reduces to photon counting.
enum class EncodingKind { dps_like, cow_like, phase_randomized };

// Upper bound (bits per pulse) on information extractable from the light
// scattered over a collection segment of length segment_km.
double natural_loss_info_bound(EncodingKind kind, const FiberSpec& fiber,
                               double segment_km, double intensity);

struct NaturalLossPoint {
  double l_km = 0.0;
  double bound = 0.0;
};

std::vector<NaturalLossPoint> natural_loss_curve(EncodingKind kind,
                                                 const FiberSpec& fiber,
                                                 std::span<const double> l_grid,
                                                 double intensity);

// Plain-loop reference for the OpenMP kernel above.
std::vector<NaturalLossPoint> natural_loss_curve_serial(EncodingKind kind,
                                                        const FiberSpec& fiber,
                                                        std::span<const double> l_grid,
                                                        double intensity);

}  // namespace qkdlc

#pragma once

#include <string>
#include <vector>

#include "qkdlc/quantum_info.hpp"

namespace qkdlc {

// Optical fiber with exponential (base-10) attenuation.
struct FiberSpec {
  double attenuation_xi = 0.02;  // per-km base-10 exponent coefficient
  double length_km = 0.0;

  FiberSpec() = default;
  FiberSpec(double xi, double length);
};

// A lumped artificial loss point: a fraction of the passing signal diverted.
struct LocalLeak {
  double position_km = 0.0;
  double magnitude = 0.0;  // in [0, 1)
};

// Fiber plus the ordered list of local leaks. Construction sorts leaks by
// position and merges coincident ones multiplicatively.
class ChannelState {
 public:
  explicit ChannelState(FiberSpec fiber, std::vector<LocalLeak> leaks = {});

  const FiberSpec& fiber() const { return fiber_; }
  const std::vector<LocalLeak>& leaks() const { return leaks_; }

  std::string to_json_string() const;
  static ChannelState from_json_string(const std::string& text);

 private:
  FiberSpec fiber_;
  std::vector<LocalLeak> leaks_;
};

// T = 10^(-xi * D).
Probability transmittance(const FiberSpec& fiber, double distance_km);

// r_l = 1 - 10^(-xi * l) for a segment of length l inside the fiber.
Probability natural_scatter_fraction(const FiberSpec& fiber, double segment_km);

// r_E = 1 - prod_i (1 - m_i) over all leaks.
Probability total_artificial_leak(const ChannelState& channel);

// 10^(-xi * length) * prod_i (1 - m_i).
Probability effective_transmittance(const ChannelState& channel);

}  // namespace qkdlc

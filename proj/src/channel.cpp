#include "qkdlc/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "qkdlc/io.hpp"

namespace qkdlc {

FiberSpec::FiberSpec(double xi, double length) : attenuation_xi(xi), length_km(length) {
  if (!(xi > 0.0)) throw std::invalid_argument("attenuation_xi must be positive");
  if (!(length >= 0.0)) throw std::invalid_argument("length_km must be non-negative");
}

ChannelState::ChannelState(FiberSpec fiber, std::vector<LocalLeak> leaks)
    : fiber_(fiber) {
  for (const LocalLeak& leak : leaks) {
    if (!(leak.magnitude >= 0.0 && leak.magnitude < 1.0)) {
      throw std::invalid_argument("leak magnitude outside [0, 1)");
    }
    if (!(leak.position_km >= 0.0 && leak.position_km <= fiber_.length_km)) {
      throw std::invalid_argument("leak position outside fiber span");
    }
  }
  std::stable_sort(leaks.begin(), leaks.end(),
                   [](const LocalLeak& a, const LocalLeak& b) {
                     return a.position_km < b.position_km;
                   });
  // coincident leaks merge multiplicatively
  for (const LocalLeak& leak : leaks) {
    if (!leaks_.empty() && leaks_.back().position_km == leak.position_km) {
      double& m = leaks_.back().magnitude;
      m = 1.0 - (1.0 - m) * (1.0 - leak.magnitude);
    } else {
      leaks_.push_back(leak);
    }
  }
}

std::string ChannelState::to_json_string() const {
  nlohmann::json j;
  j["xi_per_km"] = fiber_.attenuation_xi;
  j["length_km"] = fiber_.length_km;
  j["leaks"] = nlohmann::json::array();
  for (const LocalLeak& leak : leaks_) {
    j["leaks"].push_back({{"position_km", leak.position_km},
                          {"magnitude", leak.magnitude}});
  }
  return j.dump();
}

ChannelState ChannelState::from_json_string(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  FiberSpec fiber(j.at("xi_per_km").get<double>(), j.at("length_km").get<double>());
  std::vector<LocalLeak> leaks;
  for (const auto& item : j.at("leaks")) {
    leaks.push_back({item.at("position_km").get<double>(),
                     item.at("magnitude").get<double>()});
  }
  return ChannelState(fiber, std::move(leaks));
}

Probability transmittance(const FiberSpec& fiber, double distance_km) {
  if (distance_km < 0.0) throw std::domain_error("negative distance");
  return Probability(std::pow(10.0, -fiber.attenuation_xi * distance_km));
}

Probability natural_scatter_fraction(const FiberSpec& fiber, double segment_km) {
  if (segment_km < 0.0) throw std::domain_error("negative segment length");
  if (segment_km > fiber.length_km) {
    throw std::domain_error("segment longer than fiber");
  }
  return Probability(1.0 - std::pow(10.0, -fiber.attenuation_xi * segment_km));
}

Probability total_artificial_leak(const ChannelState& channel) {
  double survival = 1.0;
  for (const LocalLeak& leak : channel.leaks()) survival *= 1.0 - leak.magnitude;
  return Probability(1.0 - survival);
}

Probability effective_transmittance(const ChannelState& channel) {
  const double t = transmittance(channel.fiber(), channel.fiber().length_km).value();
  return Probability(t * (1.0 - total_artificial_leak(channel).value()));
}

}  // namespace qkdlc

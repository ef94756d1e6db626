#pragma once

#include <cstdint>
#include <stdexcept>

namespace qkdlc {

// A real number constrained to [0, 1]; construction rejects anything else.
class Probability {
 public:
  Probability() = default;
  explicit Probability(double v) : value_(v) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::domain_error("Probability outside [0, 1]");
    }
  }
  double value() const { return value_; }

 private:
  double value_ = 0.0;
};

// Complex amplitude of a coherent state; intensity() is the mean photon
// number per pulse.
struct CoherentAmplitude {
  double re = 0.0;
  double im = 0.0;
  double intensity() const { return re * re + im * im; }
};

namespace detail {
// h2 on a raw double already known to lie in [0, 1].
double h2(double p);
}  // namespace detail

// Binary entropy h2(p), with the 0*log(0) = 0 convention at the endpoints.
double binary_entropy(Probability p);

// |<a|b>| = exp(-|a-b|^2 / 2). Equals 1 iff a == b.
double coherent_overlap_mag(CoherentAmplitude a, CoherentAmplitude b);

// Holevo quantity of two equiprobable pure states with overlap magnitude s:
// h2((1 - s) / 2). Monotone non-increasing in s.
double holevo_two_pure(double overlap_mag);

// exp(-mu) mu^n / n!. Computed through log-gamma so that test-pulse scale
// intensities (mu ~ 1e11) stay finite.
Probability poisson_pmf(double mu, std::int64_t n);

// 1 - exp(-mu): probability of at least one photon.
Probability nonvacuum_prob(double mu);

}  // namespace qkdlc

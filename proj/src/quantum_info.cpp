#include "qkdlc/quantum_info.hpp"

#include <cmath>

namespace qkdlc {

namespace {
constexpr double kLn2 = 0.69314718055994530941723;
}

namespace detail {

double h2(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -(p * std::log(p) + (1.0 - p) * std::log1p(-p)) / kLn2;
}

}  // namespace detail

double binary_entropy(Probability p) { return detail::h2(p.value()); }

double coherent_overlap_mag(CoherentAmplitude a, CoherentAmplitude b) {
  const double dre = a.re - b.re;
  const double dim = a.im - b.im;
  return std::exp(-0.5 * (dre * dre + dim * dim));
}

double holevo_two_pure(double overlap_mag) {
  if (!(overlap_mag >= 0.0 && overlap_mag <= 1.0)) {
    throw std::domain_error("overlap magnitude outside [0, 1]");
  }
  return detail::h2(0.5 * (1.0 - overlap_mag));
}

Probability poisson_pmf(double mu, std::int64_t n) {
  if (mu < 0.0) throw std::domain_error("negative Poisson mean");
  if (n < 0) throw std::domain_error("negative photon count");
  if (mu == 0.0) return Probability(n == 0 ? 1.0 : 0.0);
  const double nd = static_cast<double>(n);
  const double log_pmf = -mu + nd * std::log(mu) - std::lgamma(nd + 1.0);
  return Probability(std::exp(log_pmf));
}

Probability nonvacuum_prob(double mu) {
  if (mu < 0.0) throw std::domain_error("negative Poisson mean");
  return Probability(-std::expm1(-mu));
}

}  // namespace qkdlc

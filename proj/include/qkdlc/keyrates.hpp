#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "qkdlc/quantum_info.hpp"

namespace qkdlc {

enum class Protocol { bb84, cow };

Protocol protocol_from_name(std::string_view name);
std::string_view protocol_name(Protocol p);

struct BB84Params {
  double intensity_mu = 0.0;
  double r_e = 0.0;      // detectable-leak fraction
  double p_err_x = 0.0;  // error probability, X basis
  double p_err_z = 0.0;  // error probability, Z basis

  BB84Params() = default;
  BB84Params(double mu, double re, double px, double pz);
};

struct COWParams {
  double intensity_mu = 0.0;
  double r_e = 0.0;
  double p_err = 0.0;

  COWParams() = default;
  COWParams(double mu, double re, double perr);
};

struct DecoyObservables {
  double gain_q = 0.0;         // gain of signal states
  double gain_q1 = 0.0;        // gain of single-photon states, <= gain_q
  double e1 = 0.0;             // single-photon error rate
  double p_err = 0.0;          // QBER
  double ec_efficiency_f = 1;  // error-correction efficiency, >= 1

  DecoyObservables() = default;
  DecoyObservables(double q, double q1, double e1_, double perr, double f = 1.0);
};

enum class FormulaId { bb84_enh, bb84_orig_ub, decoy, cow_enh, cow_orig_ub, plob };

std::string_view formula_name(FormulaId id);  // "BB84_ENH", ...
FormulaId formula_from_name(std::string_view name);

// One sample of a normalized key-rate curve. Raw values may be negative;
// the clamped value is max(0, raw).
struct RatePoint {
  double distance_km = 0.0;
  double raw_rate = 0.0;
  double clamped_rate = 0.0;
  double intensity_mu = 0.0;
  FormulaId formula = FormulaId::plob;

  static RatePoint make(double distance_km, double raw_rate, double intensity_mu,
                        FormulaId formula);
};

struct RateCurve {
  std::vector<RatePoint> points;

  // CSV with header distance_km,raw_rate,clamped_rate,intensity_mu,formula_id
  std::string to_csv() const;
  static RateCurve from_csv(const std::string& text);

  std::string to_json_string() const;
  static RateCurve from_json_string(const std::string& text);
};

// I(A,E) = 1 - exp(-r_E mu): every intercepted photon reveals the bit.
double bb84_eve_info(const BB84Params& p);

// p_check = (1 - exp(-T (1 - r_E) mu)) / 2; the 1/2 is basis sifting.
Probability bb84_conclusive_prob(const BB84Params& p, Probability t);

// Devetak-Winter lower bound for loss-controlled BB84:
// (1 - h2(px)/2 - h2(pz)/2 - exp(-T(1-rE)mu)) / 2 * exp(-rE mu).
double bb84_enhanced_rate(const BB84Params& p, Probability t);

// Upper bound for the unmodified decoy-state protocol:
// (T mu exp(-mu) - (1 - exp(-T mu)) (h2(px) + h2(pz)) / 2) / 2.
double bb84_original_upper(const BB84Params& p, Probability t);

// (Q1 (1 - h2(e1)) - Q f(p_err) h2(p_err)) / 2.
double decoy_rate(const DecoyObservables& obs);

// Holevo bound on Eve's information from the tapped fraction r_E.
double cow_eve_info(const COWParams& p);

// p_check = 1 - exp(-T (1 - r_E) mu); COW has no basis sifting.
Probability cow_conclusive_prob(const COWParams& p, Probability t);

// p_check * (1 - h2(p_err) - h2((1 - exp(-rE mu)) / 2)).
double cow_enhanced_rate(const COWParams& p, Probability t);

// Beam-splitting attack: Eve works with the fraction 1 - T.
double cow_bs_eve_info(double intensity_mu, Probability t);

// (1 - exp(-T mu)) * (1 - h2(p_err) - h2((1 - exp(-(1-T) mu)) / 2)).
double cow_original_upper(const COWParams& p, Probability t);

// Repeaterless secret-key capacity -log2(1 - T). Throws at T = 1.
double plob_bound(Probability t);

}  // namespace qkdlc

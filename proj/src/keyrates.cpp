#include "qkdlc/keyrates.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "qkdlc/io.hpp"

namespace qkdlc {

using detail::h2;

Protocol protocol_from_name(std::string_view name) {
  if (name == "bb84") return Protocol::bb84;
  if (name == "cow") return Protocol::cow;
  throw std::invalid_argument("unknown protocol: " + std::string(name));
}

std::string_view protocol_name(Protocol p) {
  return p == Protocol::bb84 ? "bb84" : "cow";
}

static void check_prob(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument(std::string(what) + " outside [0, 1]");
  }
}

BB84Params::BB84Params(double mu, double re, double px, double pz)
    : intensity_mu(mu), r_e(re), p_err_x(px), p_err_z(pz) {
  if (!(mu >= 0.0)) throw std::invalid_argument("negative intensity");
  check_prob(re, "r_E");
  check_prob(px, "p_err_x");
  check_prob(pz, "p_err_z");
}

COWParams::COWParams(double mu, double re, double perr)
    : intensity_mu(mu), r_e(re), p_err(perr) {
  if (!(mu >= 0.0)) throw std::invalid_argument("negative intensity");
  check_prob(re, "r_E");
  check_prob(perr, "p_err");
}

DecoyObservables::DecoyObservables(double q, double q1, double e1_, double perr, double f)
    : gain_q(q), gain_q1(q1), e1(e1_), p_err(perr), ec_efficiency_f(f) {
  check_prob(q, "Q");
  check_prob(q1, "Q1");
  check_prob(e1_, "e1");
  check_prob(perr, "p_err");
  if (q1 > q) throw std::invalid_argument("Q1 exceeds Q");
  if (!(f >= 1.0)) throw std::invalid_argument("f below Shannon limit");
}

std::string_view formula_name(FormulaId id) {
  switch (id) {
    case FormulaId::bb84_enh: return "BB84_ENH";
    case FormulaId::bb84_orig_ub: return "BB84_ORIG_UB";
    case FormulaId::decoy: return "DECOY";
    case FormulaId::cow_enh: return "COW_ENH";
    case FormulaId::cow_orig_ub: return "COW_ORIG_UB";
    case FormulaId::plob: return "PLOB";
  }
  throw std::invalid_argument("unknown formula id");
}

FormulaId formula_from_name(std::string_view name) {
  for (FormulaId id : {FormulaId::bb84_enh, FormulaId::bb84_orig_ub, FormulaId::decoy,
                       FormulaId::cow_enh, FormulaId::cow_orig_ub, FormulaId::plob}) {
    if (formula_name(id) == name) return id;
  }
  throw std::invalid_argument("unknown formula id: " + std::string(name));
}

RatePoint RatePoint::make(double distance_km, double raw_rate, double intensity_mu,
                          FormulaId formula) {
  return {distance_km, raw_rate, std::max(0.0, raw_rate), intensity_mu, formula};
}

std::string RateCurve::to_csv() const {
  std::ostringstream out;
  out << "distance_km,raw_rate,clamped_rate,intensity_mu,formula_id\n";
  for (const RatePoint& p : points) {
    out << format_full(p.distance_km) << ',' << format_full(p.raw_rate) << ','
        << format_full(p.clamped_rate) << ',' << format_full(p.intensity_mu) << ','
        << formula_name(p.formula) << '\n';
  }
  return out.str();
}

RateCurve RateCurve::from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) ||
      line != "distance_km,raw_rate,clamped_rate,intensity_mu,formula_id") {
    throw std::invalid_argument("bad rate-curve CSV header");
  }
  RateCurve curve;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 5) throw std::invalid_argument("bad rate-curve CSV row");
    RatePoint p;
    p.distance_km = parse_double(cells[0]);
    p.raw_rate = parse_double(cells[1]);
    p.clamped_rate = parse_double(cells[2]);
    p.intensity_mu = parse_double(cells[3]);
    p.formula = formula_from_name(cells[4]);
    curve.points.push_back(p);
  }
  return curve;
}

std::string RateCurve::to_json_string() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const RatePoint& p : points) {
    arr.push_back({{"distance_km", p.distance_km},
                   {"raw_rate", p.raw_rate},
                   {"clamped_rate", p.clamped_rate},
                   {"intensity_mu", p.intensity_mu},
                   {"formula_id", std::string(formula_name(p.formula))}});
  }
  return arr.dump();
}

RateCurve RateCurve::from_json_string(const std::string& text) {
  const nlohmann::json arr = nlohmann::json::parse(text);
  RateCurve curve;
  for (const auto& item : arr) {
    RatePoint p;
    p.distance_km = item.at("distance_km").get<double>();
    p.raw_rate = item.at("raw_rate").get<double>();
    p.clamped_rate = item.at("clamped_rate").get<double>();
    p.intensity_mu = item.at("intensity_mu").get<double>();
    p.formula = formula_from_name(item.at("formula_id").get<std::string>());
    curve.points.push_back(p);
  }
  return curve;
}

double bb84_eve_info(const BB84Params& p) {
  return -std::expm1(-p.r_e * p.intensity_mu);
}

Probability bb84_conclusive_prob(const BB84Params& p, Probability t) {
  const double mean = t.value() * (1.0 - p.r_e) * p.intensity_mu;
  return Probability(0.5 * -std::expm1(-mean));
}

double bb84_enhanced_rate(const BB84Params& p, Probability t) {
  const double mean = t.value() * (1.0 - p.r_e) * p.intensity_mu;
  const double bracket = -std::expm1(-mean) - 0.5 * h2(p.p_err_x) - 0.5 * h2(p.p_err_z);
  return 0.5 * bracket * std::exp(-p.r_e * p.intensity_mu);
}

double bb84_original_upper(const BB84Params& p, Probability t) {
  const double mu = p.intensity_mu;
  const double q1_term = t.value() * mu * std::exp(-mu);
  const double gain = -std::expm1(-t.value() * mu);
  return 0.5 * (q1_term - gain * 0.5 * (h2(p.p_err_x) + h2(p.p_err_z)));
}

double decoy_rate(const DecoyObservables& obs) {
  return 0.5 * (obs.gain_q1 * (1.0 - h2(obs.e1)) -
                obs.gain_q * obs.ec_efficiency_f * h2(obs.p_err));
}

// Shared Holevo kernel: Eve holds |sqrt(r) gamma> vs vacuum in swapped slots,
// so the two-pulse overlap magnitude is exp(-r mu).
static double cow_holevo(double leak_fraction, double mu) {
  return holevo_two_pure(std::exp(-leak_fraction * mu));
}

double cow_eve_info(const COWParams& p) { return cow_holevo(p.r_e, p.intensity_mu); }

Probability cow_conclusive_prob(const COWParams& p, Probability t) {
  const double mean = t.value() * (1.0 - p.r_e) * p.intensity_mu;
  return Probability(-std::expm1(-mean));
}

double cow_enhanced_rate(const COWParams& p, Probability t) {
  const double p_check = cow_conclusive_prob(p, t).value();
  return p_check * (1.0 - h2(p.p_err) - cow_holevo(p.r_e, p.intensity_mu));
}

double cow_bs_eve_info(double intensity_mu, Probability t) {
  if (intensity_mu < 0.0) throw std::domain_error("negative intensity");
  return cow_holevo(1.0 - t.value(), intensity_mu);
}

double cow_original_upper(const COWParams& p, Probability t) {
  const double p_check = -std::expm1(-t.value() * p.intensity_mu);
  return p_check * (1.0 - h2(p.p_err) - cow_holevo(1.0 - t.value(), p.intensity_mu));
}

double plob_bound(Probability t) {
  if (t.value() >= 1.0) throw std::domain_error("PLOB diverges at T = 1");
  return -std::log1p(-t.value()) / 0.69314718055994530941723;
}

}  // namespace qkdlc

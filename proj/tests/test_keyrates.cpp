#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qkdlc/channel.hpp"
#include "qkdlc/keyrates.hpp"

using namespace qkdlc;

namespace {
Probability t_at(double distance_km) {
  return transmittance(FiberSpec(0.02, distance_km), distance_km);
}
}  // namespace

TEST_CASE("param validation") {
  CHECK_THROWS_AS(BB84Params(-1.0, 0.0, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(BB84Params(1.0, 1.5, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(COWParams(1.0, 0.0, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(DecoyObservables(0.1, 0.2, 0.0, 0.0), std::invalid_argument);  // Q1 > Q
  CHECK_THROWS_AS(DecoyObservables(0.2, 0.1, 0.0, 0.0, 0.5), std::invalid_argument);
}

TEST_CASE("bb84 eve information") {
  CHECK(bb84_eve_info(BB84Params(100.0, 0.0, 0.0, 0.0)) == 0.0);
  CHECK(bb84_eve_info(BB84Params(1e4, 1.0, 0.0, 0.0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(bb84_eve_info(BB84Params(200.0, 0.005, 0.0, 0.0)) ==
        doctest::Approx(0.63212055882855768).epsilon(1e-14));
}

TEST_CASE("bb84 conclusive probability") {
  CHECK(bb84_conclusive_prob(BB84Params(0.0, 0.005, 0.0, 0.0), Probability(1e-4)).value() == 0.0);
  CHECK(bb84_conclusive_prob(BB84Params(1e6, 0.0, 0.0, 0.0), Probability(1.0)).value() ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK(bb84_conclusive_prob(BB84Params(198.0, 0.005, 0.0, 0.0), Probability(1e-4)).value() ==
        doctest::Approx(0.0097541017350939617).epsilon(1e-13));
}

TEST_CASE("bb84 enhanced rate") {
  const Probability t(1e-4);
  CHECK(bb84_enhanced_rate(BB84Params(0.0, 0.005, 0.0, 0.0), t) == 0.0);
  CHECK(bb84_enhanced_rate(BB84Params(100.0, 0.0, 0.0, 0.0), t) ==
        doctest::Approx(0.0049750831254159732).epsilon(1e-13));
  // stationary point of the zero-error objective: exp(-a mu*) = b / (a + b)
  const double a = 1e-4 * 0.995, b = 0.005;
  const double mu_star = std::log((a + b) / b) / a;
  CHECK(mu_star == doctest::Approx(198.03601280739097).epsilon(1e-12));
  CHECK(bb84_enhanced_rate(BB84Params(mu_star, 0.005, 0.0, 0.0), t) ==
        doctest::Approx(0.0036243969065521536).epsilon(1e-12));
}

TEST_CASE("bb84 original upper bound") {
  const Probability t(1e-4);
  CHECK(bb84_original_upper(BB84Params(0.0, 0.0, 0.0, 0.0), t) == 0.0);
  CHECK(bb84_original_upper(BB84Params(1.0, 0.0, 0.0, 0.0), t) ==
        doctest::Approx(1.8393972058572116e-5).epsilon(1e-13));
  // zero-error objective peaks at mu = 1
  const double at_1 = bb84_original_upper(BB84Params(1.0, 0.0, 0.0, 0.0), t);
  for (const double mu : {0.5, 0.9, 1.1, 2.0, 5.0}) {
    CHECK(bb84_original_upper(BB84Params(mu, 0.0, 0.0, 0.0), t) <= at_1);
  }
}

TEST_CASE("decoy rate") {
  CHECK(decoy_rate(DecoyObservables(0.2, 0.1, 0.0, 0.0)) == doctest::Approx(0.05));
  CHECK(decoy_rate(DecoyObservables(0.2, 0.0, 0.0, 0.05)) < 0.0);
  const double t = 1e-4, mu = 1.0;
  const DecoyObservables obs(1.0 - std::exp(-t * mu), t * mu * std::exp(-mu), 0.0, 0.05);
  CHECK(decoy_rate(obs) == doctest::Approx(4.0748401713012831e-6).epsilon(1e-12));
  // with vanishing entropies the rate is exactly Q1 / 2, the first term of
  // the original upper bound
  const DecoyObservables clean(1.0 - std::exp(-t * mu), t * mu * std::exp(-mu), 0.0, 0.0);
  CHECK(decoy_rate(clean) == doctest::Approx(0.5 * t * mu * std::exp(-mu)).epsilon(1e-15));
}

TEST_CASE("cow eve information") {
  CHECK(cow_eve_info(COWParams(100.0, 0.0, 0.0)) == 0.0);
  CHECK(cow_eve_info(COWParams(1e6, 1.0, 0.0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cow_eve_info(COWParams(100.0, 0.005, 0.0)) ==
        doctest::Approx(0.71534916671072173).epsilon(1e-13));
}

TEST_CASE("cow conclusive probability") {
  CHECK(cow_conclusive_prob(COWParams(0.0, 0.005, 0.0), Probability(1e-4)).value() == 0.0);
  CHECK(cow_conclusive_prob(COWParams(1e6, 0.0, 0.0), Probability(1.0)).value() ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cow_conclusive_prob(COWParams(100.0, 0.005, 0.0), Probability(1e-4)).value() ==
        doctest::Approx(0.0099006625215615695).epsilon(1e-13));
}

TEST_CASE("cow enhanced rate") {
  const Probability t(1e-4);
  CHECK(cow_enhanced_rate(COWParams(80.0, 0.005, 0.0), t) ==
        doctest::Approx(0.0028085289829144091).epsilon(1e-12));
  // p_err = 1/2 kills the rate everywhere
  for (const double mu : {0.1, 1.0, 10.0, 100.0}) {
    CHECK(cow_enhanced_rate(COWParams(mu, 0.005, 0.5), t) <= 0.0);
  }
  // no leak, no errors: the rate equals the conclusive probability
  const COWParams clean(50.0, 0.0, 0.0);
  CHECK(cow_enhanced_rate(clean, t) == cow_conclusive_prob(clean, t).value());
}

TEST_CASE("cow beam-splitting attack") {
  CHECK(cow_bs_eve_info(0.5, Probability(1.0)) == 0.0);
  CHECK(cow_bs_eve_info(0.0, Probability(1e-4)) == 0.0);
  CHECK(cow_bs_eve_info(0.5, Probability(1e-4)) ==
        doctest::Approx(0.71531838914111848).epsilon(1e-13));

  const Probability t(1e-4);
  CHECK(cow_original_upper(COWParams(0.0, 0.0, 0.0), t) == 0.0);
  CHECK(cow_original_upper(COWParams(0.5, 0.0, 0.0), t) ==
        doctest::Approx(1.4233724696861295e-5).epsilon(1e-12));
  // ideal line: reduces to the bare conclusive probability
  CHECK(cow_original_upper(COWParams(2.0, 0.0, 0.0), Probability(1.0)) ==
        doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-14));
}

TEST_CASE("shared holevo kernel: BS attack equals local leak at r_E = 1 - T") {
  for (const double t : {1e-4, 1e-2, 0.5, 0.99}) {
    for (const double mu : {0.1, 1.0, 10.0, 150.0}) {
      CHECK(cow_bs_eve_info(mu, Probability(t)) ==
            cow_eve_info(COWParams(mu, 1.0 - t, 0.0)));  // bit-exact, same kernel
    }
  }
}

TEST_CASE("plob bound") {
  CHECK(plob_bound(Probability(0.5)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(plob_bound(Probability(0.0)) == 0.0);
  CHECK(plob_bound(Probability(1e-4)) ==
        doctest::Approx(1.442767180450352e-4).epsilon(1e-12));
  CHECK_THROWS_AS(plob_bound(Probability(1.0)), std::domain_error);
}

TEST_CASE("rates fall with distance and with r_E") {
  double prev_bb84 = 1.0, prev_cow = 1.0, prev_plob = 100.0;
  for (const double d : {50.0, 75.0, 100.0, 150.0, 200.0, 250.0}) {
    const Probability t = t_at(d);
    const double rb = bb84_enhanced_rate(BB84Params(50.0, 0.005, 0.0, 0.0), t);
    const double rc = cow_enhanced_rate(COWParams(50.0, 0.005, 0.0), t);
    const double pl = plob_bound(t);
    CHECK(rb <= prev_bb84);
    CHECK(rc <= prev_cow);
    CHECK(pl <= prev_plob);
    prev_bb84 = rb;
    prev_cow = rc;
    prev_plob = pl;
  }

  double prev_b = 1.0, prev_c = 1.0;
  for (const double re : {0.0, 0.005, 0.01, 0.05, 0.1, 0.5}) {
    const double rb = bb84_enhanced_rate(BB84Params(50.0, re, 0.0, 0.0), Probability(1e-4));
    const double rc = cow_enhanced_rate(COWParams(50.0, re, 0.0), Probability(1e-4));
    CHECK(rb <= prev_b);
    CHECK(rc <= prev_c);
    prev_b = rb;
    prev_c = rc;
  }
}

TEST_CASE("information terms only subtract from the conclusive probability") {
  for (const double d : {50.0, 100.0, 200.0}) {
    const Probability t = t_at(d);
    for (const double mu : {1.0, 20.0, 100.0}) {
      const BB84Params pb(mu, 0.01, 0.02, 0.03);
      CHECK(bb84_enhanced_rate(pb, t) <= bb84_conclusive_prob(pb, t).value());
      const COWParams pc(mu, 0.01, 0.02);
      CHECK(cow_enhanced_rate(pc, t) <= cow_conclusive_prob(pc, t).value());
    }
  }
  // exact equality in the clean limit
  const BB84Params clean(37.0, 0.0, 0.0, 0.0);
  CHECK(bb84_enhanced_rate(clean, Probability(1e-3)) ==
        bb84_conclusive_prob(clean, Probability(1e-3)).value());
}

TEST_CASE("rate points preserve raw values and clamp for reporting") {
  const RatePoint neg = RatePoint::make(200.0, -0.25, 1.0, FormulaId::bb84_orig_ub);
  CHECK(neg.raw_rate == -0.25);
  CHECK(neg.clamped_rate == 0.0);
  const RatePoint pos = RatePoint::make(100.0, 0.125, 2.0, FormulaId::cow_enh);
  CHECK(pos.clamped_rate == 0.125);
}

TEST_CASE("rate curve CSV and JSON round trips") {
  RateCurve curve;
  curve.points.push_back(RatePoint::make(50.0, 1.2345678901234567e-3, 31.0, FormulaId::bb84_enh));
  curve.points.push_back(RatePoint::make(200.0, -5.5e-7, 1.0, FormulaId::bb84_orig_ub));
  curve.points.push_back(RatePoint::make(200.0, 1.442767180450352e-4, 0.0, FormulaId::plob));

  const std::string csv = curve.to_csv();
  CHECK(csv.rfind("distance_km,raw_rate,clamped_rate,intensity_mu,formula_id\n", 0) == 0);
  const RateCurve back = RateCurve::from_csv(csv);
  REQUIRE(back.points.size() == 3);
  CHECK(back.points[0].raw_rate == curve.points[0].raw_rate);
  CHECK(back.points[1].clamped_rate == 0.0);
  CHECK(back.points[2].formula == FormulaId::plob);
  CHECK(back.to_csv() == csv);  // byte-identical

  const std::string json = curve.to_json_string();
  const RateCurve jback = RateCurve::from_json_string(json);
  CHECK(jback.to_json_string() == json);
  CHECK(jback.points[1].raw_rate == curve.points[1].raw_rate);

  CHECK_THROWS_AS(RateCurve::from_csv("bad header\n"), std::invalid_argument);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "qkdlc/natural_loss.hpp"

using namespace qkdlc;

namespace {
const FiberSpec kFiber(0.02, 1e7);  // long enough for asymptote checks
}

TEST_CASE("zero segment leaks nothing for every encoding") {
  for (const auto kind :
       {EncodingKind::dps_like, EncodingKind::cow_like, EncodingKind::phase_randomized}) {
    CHECK(natural_loss_info_bound(kind, kFiber, 0.0, 100.0) == 0.0);
  }
}

TEST_CASE("reference values at mu = 100, l = 0.1 km") {
  CHECK(natural_loss_info_bound(EncodingKind::phase_randomized, kFiber, 0.1, 100.0) ==
        doctest::Approx(0.36837427330064327).epsilon(1e-12));
  CHECK(natural_loss_info_bound(EncodingKind::cow_like, kFiber, 0.1, 100.0) ==
        doctest::Approx(0.68915176858936184).epsilon(1e-12));
  CHECK(natural_loss_info_bound(EncodingKind::dps_like, kFiber, 0.1, 100.0) ==
        doctest::Approx(0.88193106367595984).epsilon(1e-12));
}

TEST_CASE("bounds are monotone in segment length and intensity, within [0, 1]") {
  std::vector<double> grid;
  for (int i = 0; i <= 50; ++i) grid.push_back(i * 0.02);

  for (const auto kind :
       {EncodingKind::dps_like, EncodingKind::cow_like, EncodingKind::phase_randomized}) {
    double prev = -1.0;
    for (const double l : grid) {
      const double v = natural_loss_info_bound(kind, kFiber, l, 100.0);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      CHECK(v >= prev - 1e-12);
      prev = v;
    }
    for (const double mu : {0.0, 1.0, 10.0, 100.0, 1000.0}) {
      // monotone in mu at fixed l
      CHECK(natural_loss_info_bound(kind, kFiber, 0.2, mu) <=
            natural_loss_info_bound(kind, kFiber, 0.2, mu * 2.0 + 1.0) + 1e-12);
    }
  }
}

TEST_CASE("pointwise orderings: dps >= cow >= phase-randomized") {
  for (int i = 1; i <= 40; ++i) {
    const double l = i * 0.025;
    const double dps = natural_loss_info_bound(EncodingKind::dps_like, kFiber, l, 100.0);
    const double cow = natural_loss_info_bound(EncodingKind::cow_like, kFiber, l, 100.0);
    const double pr =
        natural_loss_info_bound(EncodingKind::phase_randomized, kFiber, l, 100.0);
    CHECK(dps >= cow - 1e-12);
    // holds while mu * r_l stays in the moderate range sampled here
    CHECK(cow >= pr - 1e-12);
  }
}

TEST_CASE("all bounds approach one for huge segments") {
  for (const auto kind :
       {EncodingKind::dps_like, EncodingKind::cow_like, EncodingKind::phase_randomized}) {
    CHECK(natural_loss_info_bound(kind, kFiber, 1e6, 100.0) ==
          doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("curve evaluation matches pointwise bounds, parallel and serial") {
  std::vector<double> grid;
  for (int i = 0; i <= 200; ++i) grid.push_back(i * 0.005);

  for (const auto kind :
       {EncodingKind::dps_like, EncodingKind::cow_like, EncodingKind::phase_randomized}) {
    const auto par = natural_loss_curve(kind, kFiber, grid, 100.0);
    const auto ser = natural_loss_curve_serial(kind, kFiber, grid, 100.0);
    REQUIRE(par.size() == grid.size());
    REQUIRE(ser.size() == grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(par[i].l_km == grid[i]);
      CHECK(par[i].bound == ser[i].bound);  // bit-exact
      CHECK(par[i].bound == natural_loss_info_bound(kind, kFiber, grid[i], 100.0));
    }
  }
}

TEST_CASE("curve edge cases") {
  CHECK(natural_loss_curve(EncodingKind::cow_like, kFiber, {}, 100.0).empty());

  const std::vector<double> single{0.0};
  const auto curve = natural_loss_curve(EncodingKind::cow_like, kFiber, single, 100.0);
  REQUIRE(curve.size() == 1);
  CHECK(curve[0].bound == 0.0);

  const std::vector<double> bad{0.1, 0.1};
  CHECK_THROWS_AS(natural_loss_curve(EncodingKind::cow_like, kFiber, bad, 100.0),
                  std::invalid_argument);

  const std::vector<double> increasing{0.05, 0.1, 0.2};
  const auto pr =
      natural_loss_curve(EncodingKind::phase_randomized, kFiber, increasing, 100.0);
  CHECK(pr[0].bound < pr[1].bound);
  CHECK(pr[1].bound < pr[2].bound);
}

// Timing comparison of the OpenMP kernels against their serial references.
// Results must agree bit-exactly; the table reports wall time and speedup.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <vector>

#include "qkdlc/exec.hpp"
#include "qkdlc/montecarlo.hpp"
#include "qkdlc/natural_loss.hpp"
#include "qkdlc/optimize.hpp"
#include "qkdlc/tomography.hpp"

using namespace qkdlc;

namespace {

double seconds(const std::function<void()>& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(stop - start).count();
}

void row(const char* name, double serial_s, double parallel_s, bool equal) {
  std::printf("%-28s %10.3f ms %10.3f ms   x%-6.2f %s\n", name, serial_s * 1e3,
              parallel_s * 1e3, serial_s / parallel_s, equal ? "match" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;
  std::printf("threads: %d\n", thread_count());
  std::printf("%-28s %13s %13s   %-7s %s\n", "kernel", "serial", "openmp", "speedup",
              "check");

  {
    SimConfig cfg{Protocol::bb84, 50.0, 50.0, 0.01, quick ? 400000u : 4000000u, 11};
    SimOutcome ser{}, par{};
    const double ts = seconds([&] { ser = simulate_serial(cfg); });
    const double tp = seconds([&] { par = simulate(cfg); });
    row("montecarlo pulses", ts, tp,
        ser.conclusive_count == par.conclusive_count &&
            ser.sifted_count == par.sifted_count &&
            ser.eve_tap_count == par.eve_tap_count);
  }

  {
    std::vector<double> grid;
    const int n = quick ? 20000 : 200000;
    grid.reserve(n);
    for (int i = 0; i < n; ++i) grid.push_back(1e-3 + i * 1e-5);
    const FiberSpec fiber(0.02, 1e4);
    std::vector<NaturalLossPoint> ser, par;
    const double ts =
        seconds([&] { ser = natural_loss_curve_serial(EncodingKind::cow_like, fiber, grid, 100.0); });
    const double tp =
        seconds([&] { par = natural_loss_curve(EncodingKind::cow_like, fiber, grid, 100.0); });
    bool equal = ser.size() == par.size();
    for (std::size_t i = 0; equal && i < ser.size(); ++i) {
      equal = ser[i].bound == par[i].bound;
    }
    row("natural-loss curve", ts, tp, equal);
  }

  {
    std::vector<double> distances;
    for (double d = 50.0; d <= (quick ? 120.0 : 250.0); d += 1.0) distances.push_back(d);
    std::vector<IntensityPoint> ser, par;
    const double ts = seconds(
        [&] { ser = optimal_intensity_curve_serial(FormulaId::bb84_enh, distances, 0.005, {}); });
    const double tp =
        seconds([&] { par = optimal_intensity_curve(FormulaId::bb84_enh, distances, 0.005, {}); });
    bool equal = ser.size() == par.size();
    for (std::size_t i = 0; equal && i < ser.size(); ++i) {
      equal = ser[i].optimal_mu == par[i].optimal_mu &&
              ser[i].optimal_rate == par[i].optimal_rate;
    }
    row("optimal-intensity curve", ts, tp, equal);
  }

  {
    DetectionScenario sc;
    sc.noise_sigma_db = 0.01;
    sc.resolution_km = 0.25;
    sc.seed = 3;
    const int trials = quick ? 16 : 64;
    double ser = 0.0, par = 0.0;
    const double ts = seconds([&] { ser = recovery_success_rate_serial(sc, 0.005, trials); });
    const double tp = seconds([&] { par = recovery_success_rate(sc, 0.005, trials); });
    row("tomography trials", ts, tp, ser == par);
  }

  return 0;
}

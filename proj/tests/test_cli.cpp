#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>

#include <json.hpp>

#include "qkdlc/channel.hpp"
#include "qkdlc/io.hpp"
#include "qkdlc/keyrates.hpp"

using namespace qkdlc;
namespace fs = std::filesystem;

namespace {

const std::string kCli = QKDLC_CLI_PATH;

struct RunResult {
  int exit_code = -1;
  std::string stdout_text;
};

// Runs the CLI with stdout captured to a file; stderr passes through.
RunResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const std::string cmd = kCli + " " + args + " > " + out.string();
  const int status = std::system(cmd.c_str());
  RunResult res;
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  if (fs::exists(out)) res.stdout_text = read_file(out.string());
  return res;
}

fs::path make_temp_dir(const char* tag) {
  const fs::path dir = fs::temp_directory_path() / (std::string("qkdlc_test_") + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("help exits zero for every command") {
  const fs::path dir = make_temp_dir("help");
  CHECK(run_cli("--help", dir).exit_code == 0);
  CHECK(run_cli("rates --help", dir).exit_code == 0);
  CHECK(run_cli("natural-loss --help", dir).exit_code == 0);
  CHECK(run_cli("tomography --help", dir).exit_code == 0);
  CHECK(run_cli("montecarlo --help", dir).exit_code == 0);
  CHECK(run_cli("rates --help", dir).stdout_text.find("--optimize-intensity") !=
        std::string::npos);
}

TEST_CASE("usage errors exit with code 2") {
  const fs::path dir = make_temp_dir("usage");
  CHECK(run_cli("", dir).exit_code == 2);
  CHECK(run_cli("rates", dir).exit_code == 2);                       // missing required
  CHECK(run_cli("rates --protocol b92 --re 0.1", dir).exit_code == 2);
  CHECK(run_cli("montecarlo --n 0", dir).exit_code == 2);
  CHECK(run_cli("natural-loss --grid 1:0:0.1", dir).exit_code == 2);
}

TEST_CASE("rates writes four series with the pinned header") {
  const fs::path dir = make_temp_dir("rates");
  const std::string prefix = (dir / "bb84").string();
  const auto res = run_cli(
      "rates --protocol bb84 --re 0.005 --d 50:250:50 --optimize-intensity --out " + prefix,
      dir);
  REQUIRE(res.exit_code == 0);

  for (const char* series : {"enhanced", "enhanced_fixed_mu", "original", "plob"}) {
    const std::string path = prefix + "." + series + ".csv";
    REQUIRE_MESSAGE(fs::exists(path), path);
    const RateCurve curve = RateCurve::from_csv(read_file(path));
    REQUIRE(curve.points.size() == 5);
    CHECK(curve.points.front().distance_km == 50.0);
    CHECK(curve.points.back().distance_km == 250.0);
  }

  // dashed BB84 series runs at the original intensity mu = 1
  const RateCurve dashed = RateCurve::from_csv(read_file(prefix + ".enhanced_fixed_mu.csv"));
  for (const auto& p : dashed.points) CHECK(p.intensity_mu == 1.0);

  // optimized solid curve dominates the dashed one pointwise
  const RateCurve solid = RateCurve::from_csv(read_file(prefix + ".enhanced.csv"));
  for (std::size_t i = 0; i < solid.points.size(); ++i) {
    CHECK(solid.points[i].raw_rate >= dashed.points[i].raw_rate - 1e-15);
  }
}

TEST_CASE("figure-data side outputs use the pinned headers") {
  const fs::path dir = make_temp_dir("figdata");
  const std::string prefix = (dir / "fig").string();
  const std::string sweep = (dir / "sweep.csv").string();
  const auto res = run_cli("rates --protocol bb84 --re 0.005 --d 100:200:50"
                           " --optimize-intensity --out " + prefix +
                           " --intensity-out " + prefix + ".mu" +
                           " --error-sweep-out " + sweep +
                           " --error-sweep-d 200 --perr-grid 0:0.1:0.05",
                           dir);
  REQUIRE(res.exit_code == 0);

  const std::string mu_csv = read_file(prefix + ".mu.enhanced.csv");
  REQUIRE(mu_csv.rfind("distance_km,optimal_mu,optimal_rate\n", 0) == 0);
  CHECK(read_file(prefix + ".mu.original.csv").rfind("distance_km,optimal_mu,optimal_rate\n", 0) == 0);

  const std::string sweep_csv = read_file(sweep);
  CHECK(sweep_csv.rfind("p_err,rate_rE_0.005,rate_original\n", 0) == 0);
  // both headline ratios reported
  CHECK(res.stdout_text.find("enhanced/(error-free enhanced)") != std::string::npos);
  CHECK(res.stdout_text.find("enhanced/(original at same errors)") != std::string::npos);

  // error sweep is defined for bb84 only
  CHECK(run_cli("rates --protocol cow --re 0.005 --d 100:200:50 --error-sweep-out " + sweep,
                dir).exit_code == 2);
}

TEST_CASE("cow solid curve dominates dashed") {
  const fs::path dir = make_temp_dir("cow");
  const std::string prefix = (dir / "cow").string();
  const auto res =
      run_cli("rates --protocol cow --re 0.10 --perr 0 --d 50:250:50 --out " + prefix, dir);
  REQUIRE(res.exit_code == 0);
  const RateCurve solid = RateCurve::from_csv(read_file(prefix + ".enhanced.csv"));
  const RateCurve dashed = RateCurve::from_csv(read_file(prefix + ".enhanced_fixed_mu.csv"));
  REQUIRE(solid.points.size() == dashed.points.size());
  for (std::size_t i = 0; i < solid.points.size(); ++i) {
    CHECK(solid.points[i].raw_rate >= dashed.points[i].raw_rate - 1e-15);
  }
}

TEST_CASE("fixed intensity reproduces the closed form") {
  const fs::path dir = make_temp_dir("fixed");
  const std::string prefix = (dir / "fixed").string();
  const auto res =
      run_cli("rates --protocol bb84 --re 0 --mu 1 --perr 0 --d 50:200:50 --out " + prefix, dir);
  REQUIRE(res.exit_code == 0);
  const RateCurve solid = RateCurve::from_csv(read_file(prefix + ".enhanced.csv"));
  for (const auto& p : solid.points) {
    const double t = std::pow(10.0, -0.02 * p.distance_km);
    CHECK(p.raw_rate == doctest::Approx(0.5 * (1.0 - std::exp(-t))).epsilon(1e-12));
    CHECK(p.intensity_mu == 1.0);
  }
}

TEST_CASE("rates output is deterministic and json round-trips") {
  const fs::path dir = make_temp_dir("det");
  const std::string p1 = (dir / "a").string();
  const std::string p2 = (dir / "b").string();
  const std::string flags = "rates --protocol cow --re 0.01 --d 50:150:25 --format json --out ";
  REQUIRE(run_cli(flags + p1, dir).exit_code == 0);
  REQUIRE(run_cli(flags + p2, dir).exit_code == 0);
  const std::string text1 = read_file(p1 + ".enhanced.json");
  CHECK(text1 == read_file(p2 + ".enhanced.json"));
  // re-reading and re-serializing is byte-identical
  CHECK(RateCurve::from_json_string(text1).to_json_string() == text1);
}

TEST_CASE("natural-loss emits the three-column curve and threshold report") {
  const fs::path dir = make_temp_dir("nl");
  const std::string out = (dir / "nl.csv").string();
  const auto res = run_cli("natural-loss --grid 0:1:0.01 --threshold 0.5 --out " + out, dir);
  REQUIRE(res.exit_code == 0);
  const std::string csv = read_file(out);
  REQUIRE(csv.rfind("l_km,dps_bound,cow_bound,pr_bound\n", 0) == 0);
  CHECK(res.stdout_text.find("dps_bound exceeds 0.5") != std::string::npos);

  // dps >= cow >= pr pointwise
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto cells = split(line, ',');
    REQUIRE(cells.size() == 4);
    const double dps = parse_double(cells[1]);
    const double cow = parse_double(cells[2]);
    const double pr = parse_double(cells[3]);
    CHECK(dps >= cow - 1e-12);
    CHECK(cow >= pr - 1e-12);
  }
}

TEST_CASE("natural-loss with zero intensity is identically zero") {
  const fs::path dir = make_temp_dir("nl0");
  const std::string out = (dir / "nl0.csv").string();
  REQUIRE(run_cli("natural-loss --mu 0 --grid 0:1:0.1 --out " + out, dir).exit_code == 0);
  std::istringstream in(read_file(out));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto cells = split(line, ',');
    CHECK(parse_double(cells[1]) == 0.0);
    CHECK(parse_double(cells[2]) == 0.0);
    CHECK(parse_double(cells[3]) == 0.0);
  }
}

TEST_CASE("tomography round trip through files") {
  const fs::path dir = make_temp_dir("tomo");
  const ChannelState ch(FiberSpec(0.02, 100.0), {{30.0, 0.02}, {70.0, 0.05}});
  const std::string ch_path = (dir / "channel.json").string();
  write_file_atomic(ch_path, ch.to_json_string());
  const std::string out = (dir / "tomo.json").string();

  const auto res = run_cli("tomography --channel " + ch_path +
                               " --resolution 0.1 --noise 0 --seed 5 --min-leak 0.001 --out " + out,
                           dir);
  REQUIRE(res.exit_code == 0);
  const auto j = nlohmann::json::parse(read_file(out));
  REQUIRE(j.at("tomogram").at("leaks").size() == 2);
  for (const auto& m : j.at("matches")) {
    CHECK(m.at("matched").get<bool>());
    CHECK(std::abs(m.at("position_error_km").get<double>()) <= 0.1);
    CHECK(std::abs(m.at("magnitude_rel_error").get<double>()) <= 1e-6);
  }
  CHECK(j.at("total_leak_recovered").get<double>() ==
        doctest::Approx(j.at("total_leak_injected").get<double>()).epsilon(1e-9));

  // seeded determinism across invocations
  const std::string out2 = (dir / "tomo2.json").string();
  REQUIRE(run_cli("tomography --channel " + ch_path +
                      " --resolution 0.1 --noise 0 --seed 5 --min-leak 0.001 --out " + out2,
                  dir)
              .exit_code == 0);
  CHECK(read_file(out) == read_file(out2));
}

TEST_CASE("tomography reports degeneracy with exit 3") {
  const fs::path dir = make_temp_dir("tomo3");
  const ChannelState ch(FiberSpec(0.02, 1.0));
  const std::string ch_path = (dir / "short.json").string();
  write_file_atomic(ch_path, ch.to_json_string());
  // 11 bins < 3 windows
  const auto res =
      run_cli("tomography --channel " + ch_path + " --resolution 0.1 --out " +
                  (dir / "ignored.json").string(),
              dir);
  CHECK(res.exit_code == 3);
}

TEST_CASE("montecarlo agrees with the closed forms and exits zero") {
  const fs::path dir = make_temp_dir("mc");
  const auto res = run_cli(
      "montecarlo --protocol cow --mu 1 --d 50 --re 0 --n 1000000 --seed 7", dir);
  REQUIRE(res.exit_code == 0);
  const auto j = nlohmann::json::parse(res.stdout_text);
  CHECK(j.at("config").at("protocol").get<std::string>() == "cow");
  CHECK(j.at("outcome").at("n_pulses").get<std::uint64_t>() == 1000000);
  for (const auto& c : j.at("comparisons")) {
    CHECK(std::abs(c.at("z").get<double>()) <= 4.0);
  }
}

TEST_CASE("montecarlo with vacuum pulses still exits zero") {
  const fs::path dir = make_temp_dir("mc0");
  const auto res = run_cli("montecarlo --protocol bb84 --mu 0 --d 50 --re 0.1 --n 10000", dir);
  CHECK(res.exit_code == 0);
  const auto j = nlohmann::json::parse(res.stdout_text);
  CHECK(j.at("outcome").at("conclusive_count").get<std::uint64_t>() == 0);
  CHECK(j.at("outcome").at("eve_tap_count").get<std::uint64_t>() == 0);
}

TEST_CASE("config file overrides flags") {
  const fs::path dir = make_temp_dir("cfg");
  const std::string cfg_path = (dir / "cfg.json").string();
  write_file_atomic(cfg_path, R"({"mu": 2.0, "seed": 99})");
  const auto with_cfg = run_cli(
      "montecarlo --protocol cow --mu 1 --d 50 --re 0 --n 100000 --seed 7 --config " + cfg_path,
      dir);
  REQUIRE(with_cfg.exit_code == 0);
  const auto j = nlohmann::json::parse(with_cfg.stdout_text);
  CHECK(j.at("config").at("intensity_mu").get<double>() == 2.0);
  CHECK(j.at("config").at("seed").get<std::uint64_t>() == 99);
}

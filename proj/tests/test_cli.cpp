#include <doctest.h>

#include <fmt/format.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <json.hpp>
#include <sstream>

#include "cli.hpp"
#include "rectflow/mp_analytic.hpp"
#include "rectflow/numeric.hpp"
#include "rectflow/path_io.hpp"

using namespace rectflow;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
  json summary() const { return json::parse(out); }
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "rectflow_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string error_of(const Run& r) { return json::parse(r.err).at("error").get<std::string>(); }

}  // namespace

TEST_CASE("simulate without noise decays every eigenvalue exactly") {
  auto prefix = scratch("decay").string();
  auto r = run({"simulate", "--n", "5", "--m", "10", "--kappa", "0", "--gamma", "0.75", "--T", "1", "--dt", "1e-2",
                "--seed", "1", "--init", "const:1", "--out", prefix});
  REQUIRE(r.code == 0);
  auto path = path_from_csv(read_text_file(prefix + ".csv"));
  for (double x : path.final_state()) CHECK(x == doctest::Approx(std::exp(-1.5)).epsilon(1e-14));
  CHECK(fs::exists(prefix + ".csv.meta.json"));
  CHECK(fs::exists(prefix + ".summary.json"));
}

TEST_CASE("simulate compares against MP and gates on tolerance") {
  auto r = run({"simulate", "--n", "100", "--m", "200", "--T", "1", "--dt", "1e-3", "--seed", "7", "--init", "delta0",
                "--compare", "mp", "--tolerance", "0.1"});
  REQUIRE(r.code == 0);
  auto s = r.summary();
  CHECK(s["compare"]["ks"].get<double>() < 0.1);
  CHECK(s["compare"]["sigma2"].get<double>() == doctest::Approx((1.0 - std::exp(-2.0)) / 2.0));
  CHECK(s["passed"].get<bool>());
  CHECK(s["version"] == RECTFLOW_VERSION);
  CHECK(s["config"]["seed"] == "7");
}

TEST_CASE("identical configs give byte-identical outputs") {
  auto prefix = scratch("rep").string();
  std::vector<std::string> args{"simulate", "--n", "20", "--m", "40", "--T", "0.2", "--seed", "3", "--replicas", "3",
                                "--record-every", "0.05", "--format", "both", "--out", prefix};
  auto first = run(args);
  REQUIRE(first.code == 0);
  std::vector<std::string> files;
  for (const char* ext : {".csv", ".bin", ".summary.json"}) files.push_back(read_text_file(prefix + ext));
  auto second = run(args);
  REQUIRE(second.code == 0);
  CHECK(second.out == first.out);
  int i = 0;
  for (const char* ext : {".csv", ".bin", ".summary.json"}) CHECK(read_text_file(prefix + ext) == files[i++]);
  CHECK(files[0].find("# config seed=3") != std::string::npos);
  std::string trailer;
  path_from_binary(files[1], &trailer);
  CHECK(trailer.find("config replicas=3") != std::string::npos);
}

TEST_CASE("embedded config reproduces the run through --config") {
  auto first = run({"stationary", "--n", "30", "--m", "60", "--seed", "5", "--replicas", "2"});
  REQUIRE(first.code == 0);
  std::string cfg = "# regenerated\n";
  const json config = first.summary()["config"];
  for (auto& [k, v] : config.items()) cfg += k + "=" + v.get<std::string>() + "\n";
  auto path = scratch("stationary.cfg").string();
  write_text_file(path, cfg);
  auto second = run({"stationary", "--config", path});
  REQUIRE(second.code == 0);
  CHECK(second.out == first.out);
  auto override_seed = run({"stationary", "--config", path, "--seed", "6"});
  CHECK(override_seed.summary()["config"]["seed"] == "6");
  CHECK(override_seed.out != first.out);
}

TEST_CASE("gates and usage errors exit 2 with a machine-readable error") {
  auto r = run({"simulate", "--n", "3", "--m", "3", "--beta2", "1.5", "--seed", "1"});
  CHECK(r.code == 2);
  CHECK(error_of(r) == "well_posedness_violated");
  auto no_seed = run({"simulate", "--n", "3", "--m", "6"});
  CHECK(no_seed.code == 2);
  CHECK(error_of(no_seed) == "usage");
  auto regime = run({"predict", "--alpha", "0.8", "--beta2", "1.5"});
  CHECK(regime.code == 2);
  CHECK(error_of(regime) == "limit_regime_violated");
  auto bad_file = run({"convolve", "--a", "file:/nonexistent/m.csv"});
  CHECK(bad_file.code == 2);
  CHECK(error_of(bad_file) == "io_error");
  auto missing_config = run({"moments", "--config", "/nonexistent.cfg"});
  CHECK(missing_config.code == 2);
  CHECK(run({"frobnicate"}).code == 2);
}

TEST_CASE("numerical failures exit 3") {
  auto r = run({"moments", "--gamma", "0", "--init", "const:1e50", "--K", "6"});
  CHECK(r.code == 3);
  CHECK(error_of(r) == "moment_overflow");
}

TEST_CASE("predict from delta0 matches mp-moments at the flow scale") {
  auto pred = run({"predict", "--init", "delta0", "--t", "1", "--alpha", "0.5", "--K", "6"}).summary();
  double s2 = pred["sigma_t2"].get<double>();
  CHECK(s2 == doctest::Approx((1.0 - std::exp(-2.0)) / 2.0));
  auto mp = run({"mp-moments", "--rho", "0.5", "--sigma", fmt::format("{:.17g}", std::sqrt(s2)), "--K", "6"}).summary();
  for (std::size_t k = 0; k < 6; ++k)
    CHECK(pred["nu_moments"][k].get<double>() == doctest::Approx(mp["moments"][k].get<double>()).epsilon(1e-12));
}

TEST_CASE("burgers, moments and invert meet their tolerances") {
  auto b = run({"burgers", "--flow", "mp", "--t", "0.5", "--tolerance", "1e-6"});
  CHECK(b.code == 0);
  CHECK(b.summary()["max_abs_residual"].get<double>() <= 1e-6);
  CHECK(run({"burgers", "--flow", "stationary", "--tolerance", "1e-12"}).code == 0);
  auto fd = run({"burgers", "--flow", "mp", "--derivatives", "fd", "--tolerance", "1e-6"});
  CHECK(fd.code == 0);
  CHECK(fd.summary()["fd_steps"]["h_z"].get<double>() == 1e-4);
  CHECK(fd.summary()["fd_steps"]["h_t"].get<double>() == doctest::Approx(1.5e-5));
  auto miss = run({"burgers", "--flow", "mp", "--scale", "1.05", "--tolerance", "1e-6"});
  CHECK(miss.code == 1);
  CHECK_FALSE(miss.summary()["passed"].get<bool>());

  auto prefix = scratch("moments").string();
  auto m = run({"moments", "--K", "6", "--T", "2", "--tolerance", "1e-8", "--out", prefix});
  CHECK(m.code == 0);
  CHECK(m.summary()["max_relative_error_m2"].get<double>() <= 1e-8);
  CHECK(read_text_file(prefix + ".csv").find("t,m1,m2,m3,m4,m5,m6,m1_closed,m2_closed\n") != std::string::npos);

  auto inv = run({"invert", "--rho", "0.5", "--tolerance", "1e-2"});
  CHECK(inv.code == 0);
  CHECK(inv.summary()["l1"].get<double>() < 1e-2);
}

TEST_CASE("convolve reports cumulants and moments") {
  auto c = run({"convolve", "--alpha", "0.5", "--a", "mp:1", "--b", "mp:0.5", "--K", "4"}).summary();
  CHECK(c["cumulants"][0].get<double>() == doctest::Approx(1.25));
  for (std::size_t k = 1; k < 4; ++k) CHECK(c["cumulants"][k].get<double>() == 0.0);
  auto mp = mp_moments(MPParams(0.5, std::sqrt(1.25)), 4);
  for (std::size_t k = 1; k <= 4; ++k) CHECK(c["nu_moments"][k - 1].get<double>() == doctest::Approx(mp(k)).epsilon(1e-12));
  CHECK(c["mu_moments"].size() == 8);
  auto measure = scratch("nu.csv").string();
  write_text_file(measure, "atom,weight\n0.5,0.5\n2,0.5\n");
  auto f = run({"convolve", "--a", "file:" + measure, "--b", "delta0", "--K", "3"}).summary();
  CHECK(f["nu_moments"][0].get<double>() == doctest::Approx(1.25));
  CHECK(f["nu_moments"][1].get<double>() == doctest::Approx(2.125));
}

TEST_CASE("oracle subcommand agrees with MP from a delta0 start") {
  auto r = run({"oracle", "--n", "100", "--m", "200", "--T", "1", "--seed", "2", "--compare", "mp", "--tolerance", "0.1"});
  CHECK(r.code == 0);
  CHECK(r.summary()["scheme"] == "exact-ou real");
}

TEST_CASE("selftest runs single criteria") {
  auto r = run({"selftest", "--criterion", "A3", "--criterion", "A9"});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("PASS A3", 0) == 0);
  CHECK(r.out.find("PASS A9") != std::string::npos);
  auto bad = run({"selftest", "--criterion", "A11"});
  CHECK(bad.code == 2);
  CHECK(error_of(bad) == "unknown_criterion");
}

TEST_CASE("installed binary reports version and exit codes") {
  const char* exe = std::getenv("RECTFLOW_CLI");
  if (!exe) return;
  auto sh = [&](const std::string& args) {
    int status = std::system((std::string(exe) + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
  };
  CHECK(sh("--version") == 0);
  CHECK(sh("--help") == 0);
  CHECK(sh("simulate --n 3 --m 3 --beta2 1.5 --seed 1") == 2);
  CHECK(sh("mp-moments --rho 0.5 --K 4") == 0);
}

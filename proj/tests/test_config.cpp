#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "coclab/config.hpp"
#include "coclab/experiment.hpp"
#include "test_support.hpp"

using namespace coclab;
using testing::code_of;

namespace {

const char* kMinimal = R"(
[base]
matrix = 2 1 1 1
[cocycle]
kind = constant
matrix = 2 0 0 0.5
[run]
samples = 2
orbit_length = 2000
)";

std::string error_message(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("coclab_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("minimal config parses with defaults") {
  const auto cfg = parse_config(kMinimal);
  CHECK(cfg.base_matrix == std::vector<std::int64_t>{2, 1, 1, 1});
  CHECK(cfg.kind == "constant");
  CHECK(cfg.matrix == std::vector<double>{2, 0, 0, 0.5});
  CHECK(cfg.samples == 2);
  CHECK(cfg.seed == 1);
  CHECK(cfg.epsilon == 0.1);
}

TEST_CASE("serialize then parse is the identity, bit for bit") {
  auto cfg = parse_config(kMinimal);
  cfg.epsilon = 0.1 + 1e-17 * 3;  // not the literal 0.1
  cfg.eps = std::nextafter(0.05, 1.0);
  cfg.tol = 1.0 / 3.0;
  cfg.scale_amplitude = -2.5e-300;
  cfg.kind = "expression";
  cfg.entries = {"1 + 0.1*cos(2*pi*x1)", "0", "sin(x2) / 3", "2 - x1*x2"};
  cfg.lattice = {1, 2};
  cfg.lift = "cover4";
  cfg.barycenter = "karcher";
  cfg.seed = 18446744073709551615ull;
  const auto text = serialize_config(cfg);
  const auto back = parse_config(text);
  CHECK(back == cfg);
  CHECK(serialize_config(back) == text);
  CHECK(std::bit_cast<std::uint64_t>(back.eps) == std::bit_cast<std::uint64_t>(cfg.eps));
}

TEST_CASE("every key reads back what was set") {
  auto cfg = parse_config(kMinimal);
  for (const auto& key : config_keys()) {
    const auto v = get_config_value(cfg, key);
    auto copy = cfg;
    set_config_value(copy, key, v);
    CHECK_MESSAGE(copy == cfg, key);
  }
}

TEST_CASE("comments and blank lines are ignored") {
  const auto cfg = parse_config("# header\n[base]\nmatrix = 2 1 1 1   # cat map\n\n[cocycle]\nkind = constant\nmatrix=1 0 0 1\n");
  CHECK(cfg.base_matrix.size() == 4);
  CHECK(cfg.matrix == std::vector<double>{1, 0, 0, 1});
}

TEST_CASE("malformed configs are rejected with a precise message") {
  CHECK(code_of([] { parse_config("[cocycle]\nkind = constant\n"); }) == ErrorCode::ConfigParse);
  CHECK(error_message("[cocycle]\nkind = constant\n").find("base.matrix") != std::string::npos);
  CHECK(error_message("[base]\nmatrix = 2 1 1 1\n").find("cocycle.kind") != std::string::npos);
  CHECK(error_message(std::string(kMinimal) + "bogus = 1\n").find("bogus") != std::string::npos);
  CHECK(error_message(std::string(kMinimal) + "[extra]\n").find("extra") != std::string::npos);
  CHECK(error_message(std::string(kMinimal) + "seed = 3\nseed = 4\n").find("seed") != std::string::npos);
  CHECK(error_message(std::string(kMinimal) + "seed = 1.5\n").find("run.seed") != std::string::npos);
  CHECK(error_message(std::string(kMinimal) + "barycenter = median\n").find("barycenter") != std::string::npos);
  CHECK(code_of([] { parse_config("matrix = 1\n"); }) == ErrorCode::ConfigParse);
  CHECK(code_of([] { parse_config("[base\n"); }) == ErrorCode::ConfigParse);
  CHECK(code_of([] { load_config("/nonexistent/coclab.ini"); }) == ErrorCode::ConfigParse);
}

TEST_CASE("environment overrides any key") {
  auto cfg = parse_config(kMinimal);
  const std::map<std::string, std::string> env = {
      {"COCLAB_RUN_SEED", "7"}, {"COCLAB_COCYCLE_EPSILON", "0.25"}, {"COCLAB_BASE_MATRIX", "3 2 1 1"}};
  const auto lookup = [&](const std::string& name) -> std::optional<std::string> {
    auto it = env.find(name);
    if (it == env.end()) return std::nullopt;
    return it->second;
  };
  const auto keys = apply_env_overrides(cfg, "COCLAB_", lookup);
  CHECK(keys.size() == 3);
  CHECK(cfg.seed == 7);
  CHECK(cfg.epsilon == 0.25);
  CHECK(cfg.base_matrix == std::vector<std::int64_t>{3, 2, 1, 1});

  const std::map<std::string, std::string> bad = {{"COCLAB_RUN_SEED", "x"}};
  CHECK(code_of([&] {
          apply_env_overrides(cfg, "COCLAB_", [&](const std::string& n) -> std::optional<std::string> {
            auto it = bad.find(n);
            return it == bad.end() ? std::nullopt : std::optional<std::string>(it->second);
          });
        }) == ErrorCode::ConfigParse);
}

TEST_CASE("building the base and cocycle validates shapes") {
  auto cfg = parse_config(kMinimal);
  CHECK(build_cocycle(cfg).fiber_dim() == 2);
  cfg.matrix = {1, 2, 3};
  CHECK(code_of([&] { build_cocycle(cfg); }) == ErrorCode::ConfigParse);
  cfg = parse_config(kMinimal);
  cfg.base_matrix = {1, 1, 0, 1};  // not hyperbolic
  CHECK(code_of([&] { build_base(cfg); }) == ErrorCode::ConfigParse);
  cfg = parse_config(kMinimal);
  cfg.kind = "expression";
  cfg.entries = {"1", "sin(", "0", "1"};
  CHECK(code_of([&] { build_cocycle(cfg); }) == ErrorCode::ConfigParse);
}

TEST_CASE("exponents of a constant hyperbolic cocycle") {
  const auto rec = run_command("exponents", parse_config(kMinimal), "");
  CHECK(rec.pass);
  CHECK(rec.exit_code == 0);
  CHECK(rec.json["results"]["lambda_plus"].get<double>() == doctest::Approx(std::log(2.0)).epsilon(1e-9));
  CHECK(rec.json["results"]["lambda_minus"].get<double>() == doctest::Approx(-std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("report carries a config echo that reruns identically") {
  auto cfg = parse_config(kMinimal);
  cfg.seed = 11;
  const auto rec = run_command("exponents", cfg, "");
  CHECK(rec.json["seed"] == 11);
  CHECK(rec.json["config"]["run"]["seed"] == "11");
  const auto again = run_command("exponents", parse_config(rec.json["config_text"].get<std::string>()), "");
  auto a = rec.json, b = again.json;
  a.erase("wall_time_s");
  b.erase("wall_time_s");
  CHECK(a.dump() == b.dump());
}

TEST_CASE("numeric failures map to exit code 2 with a reason") {
  auto cfg = parse_config(kMinimal);
  const double c = std::cos(1.0), s = std::sin(1.0);
  cfg.matrix = {c, -s, s, c};
  cfg.grid = 2;
  cfg.pair_max_steps = 2000;
  const auto rec = run_command("invariant-pairs", cfg, "");
  CHECK_FALSE(rec.pass);
  CHECK(rec.exit_code == 2);
  CHECK(rec.json["reason"]["code"] == "NoInvariantPair");
}

TEST_CASE("unknown commands and config errors map to exit code 1") {
  const auto cfg = parse_config(kMinimal);
  try {
    run_command("frobnicate", cfg, "");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownCommand);
    CHECK(exit_code_for(e) == 1);
  }
  CHECK(exit_code_for(Error(ErrorCode::NoInvariantPair, "")) == 2);
  CHECK(exit_code_for(Error(ErrorCode::ConfigParse, "")) == 1);
}

TEST_CASE("output directory receives CSV with header and JSON") {
  auto cfg = parse_config(kMinimal);
  cfg.grid = 4;
  cfg.n_lo = 2;
  cfg.n_hi = 6;
  const auto dir = scratch_dir("growth");
  const auto rec = run_command("growth-fit", cfg, dir.string());
  CHECK(rec.files == std::vector<std::string>{"growth_fit.csv", "growth-fit.json"});
  std::ifstream csv(dir / "growth_fit.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "n,max_log_norm,max_log_k");
  std::ifstream js(dir / "growth-fit.json");
  CHECK(nlohmann::json::parse(js)["command"] == "growth-fit");
  std::filesystem::remove_all(dir);
}

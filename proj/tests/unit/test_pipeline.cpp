#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "krylovflow/error.hpp"
#include "krylovflow/pipeline.hpp"

using namespace krylovflow;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("krylovflow_test_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Progress lines share stderr; the error document is the last line.
json last_json_line(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string line, last;
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  return json::parse(last);
}

std::set<std::string> listing(const fs::path& dir) {
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) names.insert(e.path().filename().string());
  return names;
}

const char* kSmall = R"({
  // two sites keep every stage fast
  "config_version": 1,
  "model": {"sites": 2, "g": -1.05, "h": 0.5, "alpha": 0.01, "gamma": 0.01},
  "evolution": {"t_max": 4, "n_samples": 81},
  "continuum": {"t_max": 1, "n_samples": 11},
  "saturation": {"krylov_dim": 60, "t_max": 2, "n_samples": 41}
})";

RunConfig small(double alpha = 0.01) {
  auto c = parse_config(kSmall);
  c.model.alpha = c.model.gamma = alpha;
  return c;
}

RunOptions quiet_into(const fs::path& dir, std::ostringstream& log) {
  RunOptions o;
  o.out_dir = dir.string();
  o.log = &log;
  return o;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config(kSmall);
  CHECK(c.model.sites == 2);
  CHECK(c.model.boundary_sites == std::vector<int>{1, 2});
  CHECK(c.n_samples == 81);
  CHECK(c.bound_tol == 1e-6);
  CHECK(c.continuum_cases.size() == 4);

  SUBCASE("canonical text round-trips") {
    CHECK(parse_config(c.to_json_text()).to_json_text() == c.to_json_text());
  }
  SUBCASE("rejections") {
    CHECK_THROWS_AS(parse_config(R"({"config_version": 1, "model": {"sites": 2}, "bogus": 1})"), Error);
    CHECK_THROWS_AS(parse_config(R"({"config_version": 1, "model": {"sites": 2, "J": 1}})"), Error);
    CHECK_THROWS_AS(parse_config(R"({"model": {"sites": 2}})"), Error);
    CHECK_THROWS_AS(parse_config(R"({"config_version": 2, "model": {"sites": 2}})"), Error);
    CHECK_THROWS_AS(parse_config(R"({"config_version": 1, "model": {"sites": 9}})"), Error);
    CHECK_THROWS_AS(parse_config(R"({"config_version": 1, "model": {"sites": "2"}})"), Error);
    CHECK_THROWS_AS(parse_config(R"({"config_version": 1, "model": {"sites": 2}, "evolution": {"n_samples": 2}})"),
                    Error);
    CHECK_THROWS_AS(parse_config("{not json"), Error);
    try {
      parse_config(R"({"config_version": 1, "model": {"sites": 2}, "bogus": 1})");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kInvalidArgument);
      CHECK(std::string(e.what()).find("bogus") != std::string::npos);
    }
  }
  SUBCASE("relative input paths follow the config file") {
    TempDir tmp;
    std::ofstream(tmp.path / "run.json")
        << R"({"config_version": 1, "model": {"sites": 2}, "filter": {"input": "coeffs.csv"}})";
    const auto loaded = load_config((tmp.path / "run.json").string());
    CHECK(fs::path(loaded.filter_input) == tmp.path / "coeffs.csv");
  }
}

TEST_CASE("commands") {
  CHECK(command_names().size() == 8);
  for (const auto& n : command_names()) CHECK(to_string(*parse_command(n)) == n);
  CHECK_FALSE(parse_command("bogus").has_value());
  CHECK(exit_code_for(ErrorKind::kInvalidArgument) == 1);
  CHECK(exit_code_for(ErrorKind::kIo) == 1);
  CHECK(exit_code_for(ErrorKind::kNumerical) == 2);
  CHECK(exit_code_for(ErrorKind::kInvariant) == 3);
  const auto doc = json::parse(error_json(ErrorKind::kInvariant, "broken", "lanczos"));
  CHECK(doc["error"]["kind"] == "invariant_violation");
  CHECK(doc["error"]["exit_code"] == 3);
  CHECK(doc["error"]["command"] == "lanczos");
}

TEST_CASE("every artifact has a sidecar") {
  TempDir tmp;
  std::ostringstream log;
  const auto res = run_pipeline(small(), Command::kFull, quiet_into(tmp.path, log));
  const auto names = listing(tmp.path);
  CHECK(names.count("coefficients.csv"));
  CHECK(names.count("bound.json"));
  CHECK(names.count("oracle.csv"));
  CHECK(names.count("saturation.csv"));
  CHECK(names.count("filter_b.csv"));
  CHECK_FALSE(names.count("error.json"));
  for (const auto& n : res.artifacts) {
    CAPTURE(n);
    CHECK(names.count(n));
    if (n.ends_with(".meta.json")) continue;
    REQUIRE(names.count(n + ".meta.json"));
    const auto meta = json::parse(slurp(tmp.path / (n + ".meta.json")));
    CHECK(meta["artifact"] == n);
    CHECK(meta["command"] == "full");
    CHECK(meta["config"]["model"]["sites"] == 2);
  }
  for (const auto& n : names) CHECK_FALSE(n.ends_with(".partial"));
  const auto bound = json::parse(slurp(tmp.path / "bound.json"));
  CHECK(bound["verdict"] == "holds");
}

TEST_CASE("closed runs report closed structure") {
  TempDir tmp;
  std::ostringstream log;
  run_pipeline(small(0.0), Command::kLanczos, quiet_into(tmp.path, log));
  const auto s = json::parse(slurp(tmp.path / "structure.json"));
  CHECK(s["closed_structure"] == true);
  CHECK(s["max_abs_im_a"].get<double>() < 1e-10);
}

TEST_CASE("runs are byte-deterministic and reuse earlier stages") {
  TempDir a, b;
  std::ostringstream log_a, log_b;
  run_pipeline(small(), Command::kBound, quiet_into(a.path, log_a));
  run_pipeline(small(), Command::kLanczos, quiet_into(b.path, log_b));
  run_pipeline(small(), Command::kBound, quiet_into(b.path, log_b));
  CHECK(log_b.str().find("lanczos: reusing") != std::string::npos);
  for (const char* f : {"coefficients.csv", "moments.csv", "bound.csv", "bound.json"}) {
    CAPTURE(f);
    CHECK(slurp(a.path / f) == slurp(b.path / f));
  }
  SUBCASE("a changed model is recomputed") {
    std::ostringstream log;
    auto c = small();
    c.model.h = 0.4;
    run_pipeline(c, Command::kLanczos, quiet_into(b.path, log));
    CHECK(log.str().find("reusing") == std::string::npos);
  }
}

TEST_CASE("failed runs leave only error.json") {
  TempDir tmp;
  std::ostringstream log;
  auto c = small();
  c.continuum_t_max = 200.0;
  ContinuumSpec ok, bad;
  ok.beta = 0.1;
  bad.beta = 2.0;
  c.continuum_cases = {ok, bad};
  try {
    run_pipeline(c, Command::kContinuum, quiet_into(tmp.path, log));
    FAIL("expected a numerical error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNumerical);
  }
  CHECK(listing(tmp.path) == std::set<std::string>{"error.json"});
  const auto doc = json::parse(slurp(tmp.path / "error.json"));
  CHECK(doc["error"]["exit_code"] == 2);

  SUBCASE("a later good run clears the error") {
    run_pipeline(small(), Command::kContinuum, quiet_into(tmp.path, log));
    CHECK_FALSE(listing(tmp.path).count("error.json"));
  }
}

TEST_CASE("oracle refuses large systems") {
  TempDir tmp;
  std::ostringstream log;
  auto c = small();
  c.model = ModelSpec::with_default_placement(5, -1.05, 0.5, 0.01, 0.01);
  CHECK_THROWS_AS(run_pipeline(c, Command::kOracle, quiet_into(tmp.path, log)), Error);
}

#ifdef KRYLOVFLOW_CLI
namespace {

int run_cli(const std::string& args, const fs::path& err_file) {
  const std::string cmd = std::string(KRYLOVFLOW_CLI) + " " + args + " 2> " + err_file.string() + " > /dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("command-line exit codes") {
  TempDir tmp;
  const auto cfg = tmp.path / "small.json";
  std::ofstream(cfg) << kSmall;
  const auto err = tmp.path / "stderr.txt";
  const auto out = tmp.path / "out";

  CHECK(run_cli("lanczos --config " + cfg.string() + " --out " + out.string() + " --quiet", err) == 0);
  CHECK(fs::exists(out / "coefficients.csv"));

  CHECK(run_cli("", err) == 1);
  CHECK(run_cli("nonsense --config " + cfg.string(), err) == 1);
  CHECK(run_cli("lanczos", err) == 1);
  CHECK(last_json_line(err)["error"]["kind"] == "invalid_argument");
  CHECK(run_cli("lanczos --config " + (tmp.path / "missing.json").string(), err) == 1);

  const auto overflow = tmp.path / "overflow.json";
  std::ofstream(overflow) << R"({"config_version": 1, "model": {"sites": 2},
    "continuum": {"t_max": 300, "cases": [{"case": "constant_a", "alpha": 0, "beta": 2, "c": 1}]}})";
  CHECK(run_cli("continuum --config " + overflow.string() + " --out " + (tmp.path / "o2").string(), err) == 2);
  CHECK(last_json_line(err)["error"]["exit_code"] == 2);
  CHECK(fs::exists(tmp.path / "o2" / "error.json"));

  // Without re-biorthogonalization the basis drifts far past the invariant limit.
  const auto drift = tmp.path / "drift.json";
  std::ofstream(drift) << R"({"config_version": 1, "model": {"sites": 3, "g": -1.05, "h": 0.5, "alpha": 0.01, "gamma": 0.01},
    "bilanczos": {"reorth_passes": 0}})";
  CHECK(run_cli("lanczos --config " + drift.string() + " --out " + (tmp.path / "o3").string(), err) == 3);
  CHECK(last_json_line(err)["error"]["kind"] == "invariant_violation");
  CHECK(listing(tmp.path / "o3") == std::set<std::string>{"error.json"});
}
#endif

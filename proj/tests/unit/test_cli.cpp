// Drives the built phasedrift binary end to end.

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Workspace {
  fs::path root;
  explicit Workspace(const std::string& name)
      : root(fs::temp_directory_path() / ("phasedrift_cli_" + name)) {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Workspace() { fs::remove_all(root); }
  fs::path operator/(const std::string& p) const { return root / p; }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

// Runs the CLI with `args`, stdout and stderr captured in dir. Returns the exit code.
int run(const std::string& args, const fs::path& dir, const std::string& env = {}) {
  const std::string cmd = env + " '" PHASEDRIFT_CLI "' " + args + " >'" + (dir / "stdout").string() +
                          "' 2>'" + (dir / "stderr").string() + "'";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

const char* kSmallRun = R"([field]
n_modes = 64
[sim]
delta = 0.1
delta_sweep = 0.2, 0.1, 0.05
t_end = 0.1
n_paths = 24
checkpoints = 0.05, 0.1
)";

}  // namespace

TEST_CASE("coeffs emits the closed-form kappa") {
  Workspace w("coeffs");
  REQUIRE(run("coeffs --format json --out '" + w.root.string() + "'", w.root) == 0);
  const auto j = read_json(w / "coeffs.json");
  REQUIRE(j.size() == 1);
  const double D = j[0]["coefficients"]["D"].get<double>();
  CHECK(std::abs(D - 0.6266570686577501) <= 1e-9);
  CHECK(j[0]["identities"]["null_direction_residual"].get<double>() <= 1e-10);
  const auto m = read_json(w / "manifest.json");
  CHECK(m["command"] == "coeffs");
  CHECK(m["config_hash"].get<std::string>().size() == 16);
  CHECK(m.contains("versions"));

  REQUIRE(run("coeffs --k 0,0,4 --k 1,0,0 --out '" + w.root.string() + "'", w.root) == 0);
  const std::string csv = slurp(w / "coeffs.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("converge without mismatch keeps full coherence") {
  Workspace w("converge");
  write(w / "run.ini", std::string("[corr]\nsigma_s = 0\n") + kSmallRun);
  REQUIRE(run("converge --config '" + (w / "run.ini").string() + "' --out '" + w.root.string() + "'",
              w.root) == 0);
  const auto j = read_json(w / "converge.json");
  REQUIRE(j["delta_runs"].size() == 3);
  for (const auto& r : j["delta_runs"]) CHECK(r["decoherence_abs"].get<double>() == 1.0);
  CHECK(j["limit"]["decoherence_abs"].get<double>() == 1.0);
  CHECK(fs::exists(w / "converge.csv"));
}

TEST_CASE("repeated runs give byte-identical artifacts at any thread count") {
  Workspace w("determinism");
  write(w / "run.ini", kSmallRun);
  const std::string cfg = " --config '" + (w / "run.ini").string() + "'";
  for (const char* dir : {"a", "b", "c"}) fs::create_directories(w / dir);
  const auto out = [&](const char* d) { return " --out '" + (w / d).string() + "'"; };
  REQUIRE(run("simulate-delta" + cfg + out("a"), w / "a", "PHASEDRIFT_THREADS=1") == 0);
  REQUIRE(run("simulate-delta" + cfg + out("b"), w / "b", "PHASEDRIFT_THREADS=1") == 0);
  REQUIRE(run("simulate-delta" + cfg + out("c"), w / "c", "OMP_NUM_THREADS=4 PHASEDRIFT_THREADS=4") == 0);
  for (const char* f : {"simulate_delta.csv", "simulate_delta_summary.json"}) {
    CAPTURE(f);
    const std::string a = slurp(w / "a" / f);
    CHECK(!a.empty());
    CHECK(a == slurp(w / "b" / f));
    CHECK(a == slurp(w / "c" / f));
  }

  // rerunning from the emitted manifest reproduces the data
  fs::create_directories(w / "d");
  REQUIRE(run("simulate-delta --config '" + (w / "a" / "manifest.json").string() + "'" + out("d"), w / "d") == 0);
  CHECK(slurp(w / "a" / "simulate_delta.csv") == slurp(w / "d" / "simulate_delta.csv"));
  CHECK(read_json(w / "a" / "manifest.json")["config_hash"] ==
        read_json(w / "d" / "manifest.json")["config_hash"]);
}

TEST_CASE("flags override the config file") {
  Workspace w("flags");
  write(w / "run.ini", kSmallRun);
  REQUIRE(run("simulate-limit --format json --n-paths 10 --seed 9 --config '" + (w / "run.ini").string() +
                  "' --out '" + w.root.string() + "'",
              w.root) == 0);
  const auto st = read_json(w / "simulate_limit.json");
  CHECK(st["n_paths"] == 10);
  CHECK(read_json(w / "manifest.json")["base_seed"] == 9);
}

TEST_CASE("trajectories can be dumped") {
  Workspace w("dump");
  write(w / "run.ini", kSmallRun);
  REQUIRE(run("simulate-delta --dump-paths --n-paths 3 --config '" + (w / "run.ini").string() +
                  "' --out '" + w.root.string() + "'",
              w.root) == 0);
  CHECK(fs::exists(w / "paths" / "path_000000.csv"));
  CHECK(fs::exists(w / "paths" / "path_000002.csv"));
  CHECK(slurp(w / "paths" / "path_000000.csv").rfind("t,X1,X2,X3,K1,K2,K3,Z", 0) == 0);
}

TEST_CASE("solve-fp reports the expected decay rate") {
  Workspace w("solvefp");
  REQUIRE(run("solve-fp --out '" + w.root.string() + "'", w.root) == 0);
  const auto s = read_json(w / "solve_fp_summary.json");
  const double got = s["decay_rate"].get<double>(), want = s["expected_decay_rate"].get<double>();
  CHECK(std::abs(got - want) <= 1e-2 * want);
}

TEST_CASE("errors exit with codes and JSON on stderr") {
  Workspace w("errors");
  const std::string out = " --out '" + w.root.string() + "'";

  CHECK(run("simulate-delta --n-paths 1" + out, w.root) == 2);
  const auto e = read_json(w / "stderr");
  CHECK(e["error"] == "config");
  CHECK(e["exit_code"] == 2);

  write(w / "bad.ini", "[corr]\nrho_cross = 1.5\n");
  CHECK(run("validate --config '" + (w / "bad.ini").string() + "'" + out, w.root) == 2);
  CHECK(read_json(w / "stderr")["message"].get<std::string>().find("cross-correlation") != std::string::npos);
  CHECK(read_json(w / "validate.json")["valid"] == false);

  CHECK(run("coeffs --k 0,0,0.0001" + out, w.root) == 2);
  CHECK(run("no-such-command" + out, w.root) == 2);
  CHECK(run("coeffs --format xml" + out, w.root) == 2);
  write(w / "typo.ini", "[sim]\nn_path = 10\n");
  CHECK(run("coeffs --config '" + (w / "typo.ini").string() + "'" + out, w.root) == 2);
}

TEST_CASE("selftest passes") {
  Workspace w("selftest");
  REQUIRE(run("selftest --out '" + w.root.string() + "'", w.root) == 0);
  const std::string text = slurp(w / "stdout");
  CHECK(text.find("FAIL") == std::string::npos);
  CHECK(read_json(w / "selftest.json")["failed"] == 0);
}

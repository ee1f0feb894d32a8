#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kConfigs = RELAYDIFF_CONFIG_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("relaydiff_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + RELAYDIFF_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config(const std::string& stem) { return (kConfigs / (stem + ".json")).string(); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load_json(const fs::path& p) { return json::parse(slurp(p)); }

}  // namespace

TEST_CASE("validate writes only a manifest") {
  const fs::path out = scratch("validate");
  CHECK(run("validate --config " + config("zero") + " --out " + out.string()) == 0);
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(out)) files.push_back(e.path().filename().string());
  CHECK(files == std::vector<std::string>{"manifest.json"});
  const json m = load_json(out / "manifest.json");
  CHECK(m["subcommand"] == "validate");
  CHECK(m["config_hash"].get<std::string>().size() == 16);
  CHECK(m.contains("artifact_version"));
  CHECK(m.contains("wall_clock_seconds"));
}

TEST_CASE("invalid configurations exit with code 2") {
  CHECK(run("validate --config " + config("broken_weights") + " --out " + scratch("broken").string()) == 2);
  CHECK(run("simulate --config " + config("broken_weights") + " --out " + scratch("broken2").string()) == 2);
  CHECK(run("simulate --config /nonexistent.json --out " + scratch("missing").string()) == 2);
  CHECK(run("simulate --out " + scratch("noconfig").string()) == 2);
  CHECK(run("verify nonsense --config " + config("zero") + " --out " + scratch("probe").string()) == 2);
}

TEST_CASE("simulate the zero scenario") {
  const fs::path out = scratch("zero");
  REQUIRE(run("simulate --config " + config("zero") + " --out " + out.string()) == 0);
  for (const char* f : {"manifest.json", "report.json", "kappa.csv", "v.csv", "readings.csv", "intervals.csv"})
    CHECK(fs::exists(out / f));
  CHECK(fs::is_directory(out / "snapshots"));

  std::ifstream in(out / "kappa.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,kappa_1");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    CHECK(line.substr(line.find(',') + 1) == "0");
    ++rows;
  }
  CHECK(rows == 501);

  const json rep = load_json(out / "report.json");
  CHECK(rep["residual"]["total"] == 0.0);
  CHECK(rep["selection_violations"] == 0);
  CHECK(rep["in_M_S"] == true);
  CHECK(rep["bounds"]["printed_formula_differs"] == false);
}

TEST_CASE("repeated runs give bit-identical CSVs") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  REQUIRE(run("simulate --config " + config("plate_2d") + " --out " + a.string()) == 0);
  REQUIRE(run("simulate --config " + config("plate_2d") + " --out " + b.string()) == 0);
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    const fs::path other = b / fs::relative(e.path(), a);
    CHECK(slurp(e.path()) == slurp(other));
    ++compared;
  }
  CHECK(compared > 5);
}

TEST_CASE("picard exit codes") {
  const fs::path s = scratch("pic_strict");
  CHECK(run("picard --config " + config("picard_strict") + " --out " + s.string()) == 0);
  const json rep = load_json(s / "report.json");
  CHECK(rep["picard"]["converged"] == false);
  CHECK(rep["picard"]["multivalued_law"] == true);
  CHECK(run("picard --strict --config " + config("picard_strict") + " --out " + scratch("pic_strict2").string()) == 4);

  const fs::path ok = scratch("pic_ok");
  CHECK(run("picard --strict --config " + config("picard_smoothed") + " --out " + ok.string()) == 0);
  const json good = load_json(ok / "report.json");
  CHECK(good["picard"]["converged"] == true);
  CHECK(good["picard"]["final_residual"].get<double>() <= 1e-6);
  CHECK(fs::exists(ok / "residual.csv"));
}

TEST_CASE("residual of a saved run") {
  const fs::path r = scratch("res_run"), out = scratch("res_out");
  REQUIRE(run("simulate --config " + config("regulation") + " --out " + r.string()) == 0);
  REQUIRE(run("residual --config " + config("regulation") + " --run " + r.string() + " --out " + out.string()) == 0);
  const double saved = load_json(r / "report.json")["residual"]["total"].get<double>();
  const double reread = load_json(out / "report.json")["residual"]["total"].get<double>();
  CHECK(reread == saved);
  // A run from another scenario does not fit the configuration's grids.
  CHECK(run("residual --config " + config("zero") + " --run " + r.string() + " --out " + scratch("res_bad").string()) == 2);
}

TEST_CASE("verify probes") {
  const fs::path h = scratch("heat");
  CHECK(run("verify heat --out " + h.string()) == 0);
  const json rep = load_json(h / "report.json");
  CHECK(rep["measured"]["max_error"].get<double>() <= 1e-3);
  CHECK(rep["metadata"]["q"] == 2.0);

  CHECK(run("verify stability --config " + config("stability_allen_cahn") + " --seed 42 --out " + scratch("stab").string()) == 0);
  CHECK(run("verify holder --config " + config("regulation") + " --out " + scratch("hold").string()) == 0);
}

TEST_CASE("sweep runs each scenario in its own directory") {
  const fs::path out = scratch("sweep");
  CHECK(run("sweep --threads 3 --config " + config("zero") + " --config " + config("regulation") + " --config " +
            config("heat") + " --out " + out.string()) == 0);
  for (const char* name : {"zero", "regulation", "heat"}) {
    CHECK(fs::exists(out / name / "kappa.csv"));
    CHECK(fs::exists(out / name / "manifest.json"));
  }
  CHECK(fs::exists(out / "manifest.json"));

  // One bad file stops the sweep before any work.
  const fs::path bad = scratch("sweep_bad");
  CHECK(run("sweep --config " + config("zero") + " --config " + config("broken_weights") + " --out " + bad.string()) == 2);
  CHECK_FALSE(fs::exists(bad / "zero"));
}

// End-to-end exercise of the command-line pipeline on a tiny problem.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "nudgerom/io.hpp"
#include "nudgerom/rom.hpp"

using namespace nudgerom;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args, const fs::path& dir,
            std::string* output = nullptr) {
  const std::string log = (dir / "cli.log").string();
  const std::string cmd =
      std::string(NUDGEROM_CLI) + " " + args + " > \"" + log + "\" 2>&1";
  const int rc = std::system(cmd.c_str());
  if (output) {
    std::ifstream is(log);
    std::stringstream buf;
    buf << is.rdbuf();
    *output = buf.str();
  }
  if (WIFEXITED(rc)) return WEXITSTATUS(rc);
  return -1;
}

const char* kConfig = R"JSON({
  "kind": "rate_table",
  "dns": {
    "nx": 32, "ny": 32,
    "nu": 0.05, "dt": 0.01, "t_end": 2.0,
    "forcing": {"type": "kolmogorov", "amplitude": 1.0, "wavenumber": 2},
    "initial_condition": {"type": "random_seeded", "seed": 12, "amplitude": 1.0, "kmax": 4},
    "snapshot_stride": 2
  },
  "observation": {"H": 0.7853981633974483},
  "pod": {"rank_tol": 1e-10},
  "darom": {"r": 4, "mu": 50.0, "dt": 0.02, "t_end": 2.0},
  "experiment": {"out_dir": "OUTDIR", "mu_list": [0.0, 50.0], "r_list": [2, 3, 4]}
})JSON";

}  // namespace

TEST_CASE("command-line pipeline") {
  const fs::path dir = fs::temp_directory_path() / "nudgerom_test_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);

  std::string config_text = kConfig;
  config_text.replace(config_text.find("OUTDIR"), 6, (dir / "out").string());
  const std::string config = (dir / "config.json").string();
  {
    std::ofstream os(config);
    os << config_text;
  }

  const std::string snaps = (dir / "snaps.bin").string();
  const std::string obs = (dir / "obs.bin").string();
  const std::string basis = (dir / "basis.bin").string();
  const std::string diag = (dir / "diag.csv").string();
  const std::string ops = (dir / "ops.bin").string();

  std::string out;
  REQUIRE(run_cli("dns --config " + config + " --out " + snaps, dir, &out) == 0);
  CHECK(fs::exists(snaps));
  CHECK(out.find("snapshots_hash=") != std::string::npos);

  REQUIRE(run_cli("observe --snapshots " + snaps +
                      " --H 0.7853981633974483 --out " + obs,
                  dir, &out) == 0);
  CHECK(fs::exists(obs));

  REQUIRE(run_cli("pod --snapshots " + snaps + " --out " + basis, dir, &out) == 0);
  CHECK(fs::exists(basis));
  CHECK(out.find("eigentail") != std::string::npos);

  SUBCASE("constant-mu assimilation run with operator export") {
    REQUIRE(run_cli("darom --basis " + basis + " --obs " + obs +
                        " --r 4 --mu 50 --stepper bdf2 --dt 0.02 --t-end 2.0" +
                        " --nu 0.05 --forcing-amplitude 1 --forcing-wavenumber 2" +
                        " --truth " + snaps + " --out " + diag + " --ops-out " +
                        ops,
                    dir, &out) == 0);
    const std::vector<DiagnosticsRow> rows = read_diagnostics_csv(diag);
    CHECK(rows.size() == 101);
    CHECK(rows.back().mu == 50.0);
    CHECK(std::isfinite(rows.back().l2_error));
    const RomOperators loaded = read_rom_operators(ops);
    CHECK(loaded.r == 4);
  }

  SUBCASE("adaptive assimilation run") {
    const std::string adiag = (dir / "adaptive.csv").string();
    REQUIRE(run_cli("darom --basis " + basis + " --obs " + obs +
                        " --r 4 --mu adaptive --mu0 0 --check-stride 2" +
                        " --stepper bdf2 --dt 0.02 --t-end 2.0 --nu 0.05" +
                        " --forcing-amplitude 1 --forcing-wavenumber 2" +
                        " --out " + adiag,
                    dir, &out) == 0);
    const std::vector<DiagnosticsRow> rows = read_diagnostics_csv(adiag);
    bool mu_changed = false;
    for (const DiagnosticsRow& r : rows) mu_changed |= (r.mu != rows[0].mu);
    CHECK(mu_changed);
  }

  SUBCASE("rate-table and report verbs") {
    REQUIRE(run_cli("rate-table --config " + config, dir, &out) == 0);
    CHECK(out.find("eigentail") != std::string::npos);
    CHECK(fs::exists(dir / "out" / "rate_table.csv"));

    REQUIRE(run_cli("report --config " + config, dir, &out) == 0);
  }

  SUBCASE("sweep verb with mu-list override") {
    REQUIRE(run_cli("sweep --config " + config + " --mu-list 0,25", dir, &out) ==
            0);
    CHECK(out.find("mu_sweep_summary.csv") != std::string::npos);
    CHECK(fs::exists(dir / "out" / "mu_sweep_summary.csv"));
  }

  SUBCASE("exit code 2 on config errors") {
    std::string bad_text = config_text;
    bad_text.insert(bad_text.find("\"kind\""), "\"bogus\": 1, ");
    const std::string bad = (dir / "bad.json").string();
    {
      std::ofstream os(bad);
      os << bad_text;
    }
    CHECK(run_cli("dns --config " + bad + " --out " + snaps, dir, &out) == 2);
    CHECK(out.find("bogus") != std::string::npos);

    CHECK(run_cli("observe --snapshots /nonexistent.bin --H 0.5 --out " + obs,
                  dir, &out) == 2);
    // H that does not nest in the fine grid
    CHECK(run_cli("observe --snapshots " + snaps + " --H 0.33 --out " + obs,
                  dir, &out) == 2);
  }

  fs::remove_all(dir);
}

TEST_CASE("verify subcommand reports the battery") {
  const fs::path dir = fs::temp_directory_path() / "nudgerom_test_cli_verify";
  fs::create_directories(dir);
  std::string out;
  CHECK(run_cli("verify", dir, &out) == 0);
  CHECK(out.find("[PASS] taylor_green_bdf2_rate") != std::string::npos);
  CHECK(out.find("FAIL") == std::string::npos);
  fs::remove_all(dir);
}

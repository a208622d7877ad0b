#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "nudgerom/dns.hpp"
#include "nudgerom/io.hpp"
#include "support/oracles.hpp"

using namespace nudgerom;

namespace {
DnsConfig taylor_green_config(int n, double nu, double dt, double t_end) {
  DnsConfig cfg;
  cfg.grid = make_square_grid(n);
  cfg.nu = nu;
  cfg.dt = dt;
  cfg.t_end = t_end;
  cfg.initial_condition = InitialConditionSpec::taylor_green();
  cfg.forcing = ForcingSpec::none();
  return cfg;
}
}  // namespace

TEST_CASE("config validation") {
  DnsConfig cfg = taylor_green_config(32, 0.01, 1e-2, 0.1);
  CHECK_NOTHROW(cfg.validate());
  cfg.nu = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = taylor_green_config(32, 0.01, 1e-2, 0.1);
  cfg.snapshot_stride = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("Taylor-Green energy decay matches the closed form") {
  DnsConfig cfg = taylor_green_config(64, 0.05, 2e-3, 0.5);
  const DnsResult run = dns_run(cfg);
  const double exact = taylor_green_energy(*cfg.grid, cfg.nu, 0.5);
  // BDF2 temporal error at this dt; generous bound, the rate test is sharper.
  CHECK(std::abs(run.energies.back() - exact) <= 1e-5 * exact);

  SUBCASE("snapshots are divergence-free") {
    SpectralWorkspace ws(cfg.grid);
    for (const VelocityField& f : run.snapshots.fields) {
      CHECK(divergence_l2(ws, f) <=
            1e-10 * std::sqrt(grad_norm_l2_sq(ws, f)) + 1e-14);
    }
  }
}

TEST_CASE("zero initial condition and no forcing stays identically zero") {
  DnsConfig cfg = taylor_green_config(32, 0.01, 1e-2, 0.2);
  cfg.initial_condition = InitialConditionSpec::taylor_green(0.0);
  const DnsResult run = dns_run(cfg);
  for (double e : run.energies) CHECK(e == 0.0);
  CHECK(run.final_field.u1.abs().maxCoeff() == 0.0);
}

TEST_CASE("unforced energy is non-increasing") {
  DnsConfig cfg;
  cfg.grid = make_square_grid(48);
  cfg.nu = 0.02;
  cfg.dt = 1e-3;
  cfg.t_end = 0.25;
  cfg.initial_condition = InitialConditionSpec::random_seeded(5, 1.0, 6);
  const DnsResult run = dns_run(cfg);
  const double slack = 1e-12 * run.energies.front();
  for (std::size_t i = 1; i < run.energies.size(); ++i) {
    CHECK(run.energies[i] <= run.energies[i - 1] + slack);
  }
}

TEST_CASE("fixed seed reproduces the snapshot set bitwise") {
  DnsConfig cfg;
  cfg.grid = make_square_grid(32);
  cfg.nu = 0.02;
  cfg.dt = 2e-3;
  cfg.t_end = 0.1;
  cfg.forcing = ForcingSpec::kolmogorov(1.0, 2);
  cfg.initial_condition = InitialConditionSpec::random_seeded(77, 0.5, 4);
  cfg.snapshot_stride = 10;
  const DnsResult a = dns_run(cfg);
  const DnsResult b = dns_run(cfg);
  CHECK(a.snapshots.size() >= 2);
  CHECK(a.snapshots.content_hash() == b.snapshots.content_hash());
}

TEST_CASE("oversized dt emits a CFL advisory but still runs") {
  DnsConfig cfg = taylor_green_config(32, 0.5, 0.1, 0.5);
  // h/(4*max|u|) ~ 0.05 here, so dt = 0.1 trips the advisory; the decaying
  // vortex stays stable regardless (its advection term projects away).
  const DnsResult run = dns_run(cfg);
  bool advised = false;
  for (const std::string& w : run.warnings) {
    advised |= w.find("CFL advisory") != std::string::npos;
  }
  CHECK(advised);
  CHECK(std::isfinite(run.energies.back()));
}

TEST_CASE("blow-up raises a numerical error naming the step") {
  DnsConfig cfg;
  cfg.grid = make_square_grid(32);
  cfg.nu = 1e-9;
  cfg.dt = 0.5;  // wildly unstable for an explicit advection term
  cfg.t_end = 50.0;
  cfg.forcing = ForcingSpec::kolmogorov(50.0, 4);
  cfg.initial_condition = InitialConditionSpec::random_seeded(3, 10.0, 8);
  CHECK_THROWS_AS(dns_run(cfg), NumericalError);
}

TEST_CASE("temporal order: BDF2 near 2, backward Euler near 1") {
  DnsConfig cfg = taylor_green_config(32, 0.05, 0.02, 0.4);

  SUBCASE("precondition") {
    CHECK_THROWS_AS(temporal_order_check(cfg, 1), RangeError);
  }

  SUBCASE("bdf2") {
    cfg.stepper = TimeStepper::bdf2;
    const OrderCheckResult r = temporal_order_check(cfg, 4);
    CHECK(!r.non_monotone);
    CHECK(r.rate >= 1.8);
    CHECK(r.rate <= 2.2);
  }

  SUBCASE("backward euler") {
    cfg.stepper = TimeStepper::backward_euler;
    const OrderCheckResult r = temporal_order_check(cfg, 4);
    CHECK(r.rate >= 0.8);
    CHECK(r.rate <= 1.2);
  }
}

TEST_CASE("snapshot file round trip and from_file initial condition") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "nudgerom_test_dns";
  fs::create_directories(dir);
  const std::string path = (dir / "snaps.bin").string();

  DnsConfig cfg;
  cfg.grid = make_square_grid(32);
  cfg.nu = 0.05;
  cfg.dt = 1e-2;
  cfg.t_end = 0.1;
  cfg.initial_condition = InitialConditionSpec::random_seeded(9, 1.0, 4);
  cfg.snapshot_stride = 5;
  const DnsResult run = dns_run(cfg);
  write_snapshots(path, run.snapshots);

  const SnapshotSet back = read_snapshots(path);
  REQUIRE(back.size() == run.snapshots.size());
  CHECK(back.config_hash == run.snapshots.config_hash);
  CHECK(back.content_hash() == run.snapshots.content_hash());
  CHECK(back.times == run.snapshots.times);

  SUBCASE("restart from file continues from the stored state") {
    DnsConfig restart = cfg;
    restart.initial_condition = InitialConditionSpec::from_file(path);
    const DnsResult cont = dns_run(restart);
    // Initial energy of the restart equals the stored final energy.
    CHECK(cont.energies.front() ==
          doctest::Approx(run.energies.back()).epsilon(1e-12));
  }

  SUBCASE("grid mismatch raises a dimension error") {
    DnsConfig bad = cfg;
    bad.grid = make_square_grid(64);
    bad.initial_condition = InitialConditionSpec::from_file(path);
    CHECK_THROWS_AS(dns_run(bad), DimensionError);
  }

  fs::remove_all(dir);
}

TEST_CASE("energy periodicity analysis") {
  std::vector<double> times, vals;
  for (int i = 0; i <= 1000; ++i) {
    const double t = 0.01 * i;
    times.push_back(t);
    vals.push_back(2.0 + std::sin(2.0 * t));
  }
  const PeriodicityReport rep = analyze_energy_periodicity(times, vals);
  CHECK(rep.periodic);
  CHECK(rep.period == doctest::Approx(3.14159).epsilon(1e-2));

  SUBCASE("flat signal is not periodic") {
    std::vector<double> flat(vals.size(), 1.0);
    CHECK(!analyze_energy_periodicity(times, flat).periodic);
  }
}

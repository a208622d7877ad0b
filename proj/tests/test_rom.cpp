#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/LU>
#include <cmath>
#include <filesystem>
#include <random>

#include "nudgerom/forms.hpp"
#include "nudgerom/rom.hpp"
#include "support/oracles.hpp"

using namespace nudgerom;

namespace {

/// Small shared testbed: short forced unsteady run, basis, mesh.
struct MiniTestbed {
  GridPtr grid;
  DnsConfig dns;
  SnapshotSet snapshots;
  PodBasis basis;
  CoarseMesh mesh;
  ObservationStream obs;
  RomOperators ops;
  TruthSeries truth;
  int r;

  static const MiniTestbed& instance() {
    static MiniTestbed tb = [] {
      MiniTestbed t;
      t.grid = make_square_grid(32);
      t.dns.grid = t.grid;
      t.dns.nu = 0.05;
      t.dns.dt = 0.01;
      t.dns.t_end = 2.0;
      t.dns.forcing = ForcingSpec::kolmogorov(1.0, 2);
      t.dns.initial_condition = InitialConditionSpec::random_seeded(12, 1.0, 4);
      t.dns.snapshot_stride = 2;
      const DnsResult run = dns_run(t.dns);
      t.snapshots = run.snapshots;
      SpectralWorkspace ws(t.grid);
      t.basis = build_pod(ws, t.snapshots, PodOptions{1e-10, false});
      t.r = std::min(6, t.basis.d());
      t.mesh = CoarseMesh(t.grid, 2.0 * std::numbers::pi / 8);
      t.obs = build_observation_stream(t.snapshots, t.mesh, t.snapshots.times);
      t.ops = assemble(ws, t.basis, t.r, t.mesh, t.dns.forcing, t.dns.nu);
      t.truth = project_truth(t.basis, t.r, t.snapshots);
      return t;
    }();
    return tb;
  }
};

}  // namespace

TEST_CASE("assembled operators satisfy their structural invariants") {
  const MiniTestbed& tb = MiniTestbed::instance();
  const RomOperators& ops = tb.ops;
  const int r = ops.r;

  SUBCASE("S is symmetric PSD and matches the stiffness module") {
    SpectralWorkspace ws(tb.grid);
    const Eigen::MatrixXd s_ref = stiffness_matrix(ws, tb.basis, r);
    CHECK((ops.S - s_ref).cwiseAbs().maxCoeff() <= 1e-13 * s_ref.norm());
    CHECK((ops.S - ops.S.transpose()).cwiseAbs().maxCoeff() <= 1e-13);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ops.S);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * eig.eigenvalues().maxCoeff());
  }

  SUBCASE("tensor skew symmetry, including T_ikk = 0") {
    for (int j = 0; j < r; ++j) {
      for (int k = 0; k < r; ++k) {
        CHECK(ops.t(j, k, k) == 0.0);
        for (int i = 0; i < r; ++i) {
          CHECK(ops.t(j, k, i) == -ops.t(j, i, k));
        }
      }
    }
  }

  SUBCASE("tensor entries match the field-level skew form") {
    SpectralWorkspace ws(tb.grid);
    const double scale = ops.S(0, 0) + 1.0;
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < 3; ++k) {
        for (int i = 0; i < 3; ++i) {
          const double direct =
              b_star(ws, tb.basis.modes[j], tb.basis.modes[k], tb.basis.modes[i]);
          CHECK(std::abs(ops.t(j, k, i) - direct) <= 1e-12 * scale);
        }
      }
    }
  }

  SUBCASE("nonlinear term is energy-neutral") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::VectorXd a(r);
      for (int j = 0; j < r; ++j) {
        a[j] = 4.0 * (static_cast<double>(rng()) / UINT64_MAX) - 2.0;
      }
      const double e = a.dot(ops.convection_matrix(a) * a);
      const double scale = std::pow(a.norm(), 3) *
                           (1.0 + ops.S.cwiseAbs().maxCoeff());
      CHECK(std::abs(e) <= 1e-12 * scale);
    }
  }

  SUBCASE("G is symmetric PSD, identity when H equals the fine spacing") {
    CHECK((ops.G - ops.G.transpose()).cwiseAbs().maxCoeff() <= 1e-13);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ops.G);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-12);

    SpectralWorkspace ws(tb.grid);
    const CoarseMesh fine_mesh(tb.grid, tb.grid->hx());
    const RomOperators ops_id =
        assemble(ws, tb.basis, tb.r, fine_mesh, tb.dns.forcing, tb.dns.nu);
    CHECK((ops_id.G - Eigen::MatrixXd::Identity(tb.r, tb.r)).cwiseAbs().maxCoeff()
          <= 1e-10);
  }

  SUBCASE("mesh on a different grid is rejected") {
    SpectralWorkspace ws(tb.grid);
    const CoarseMesh other(make_square_grid(64), 2.0 * std::numbers::pi / 8);
    CHECK_THROWS_AS(assemble(ws, tb.basis, tb.r, other, tb.dns.forcing, tb.dns.nu),
                    ConfigError);
  }
}

TEST_CASE("backward Euler step") {
  const MiniTestbed& tb = MiniTestbed::instance();
  const RomOperators& ops = tb.ops;
  const int r = ops.r;
  const PicardOptions picard;

  SUBCASE("zero is a fixed point without forcing") {
    RomOperators free = ops;
    free.f_vec.setZero();
    const Eigen::VectorXd a =
        step_backward_euler(free, Eigen::VectorXd::Zero(r), 0.01, 0.0, nullptr,
                            picard);
    CHECK(a.norm() == 0.0);
  }

  SUBCASE("linear check against a dense solve oracle") {
    RomOperators linear = ops;
    for (auto& tj : linear.T) tj.setZero();
    const double dt = 0.02;
    Eigen::VectorXd a0(r);
    for (int j = 0; j < r; ++j) a0[j] = 0.3 * (j + 1);
    const Eigen::VectorXd ours =
        step_backward_euler(linear, a0, dt, 0.0, nullptr, picard);
    const Eigen::MatrixXd lhs =
        Eigen::MatrixXd::Identity(r, r) / dt + linear.nu * linear.S;
    const Eigen::VectorXd oracle =
        lhs.fullPivLu().solve(a0 / dt + linear.f_vec);
    CHECK((ours - oracle).norm() <= 1e-12 * oracle.norm());
  }

  SUBCASE("stronger nudging pulls the observed part toward the truth") {
    // One step from the truth state at t_n with observations at t_{n+1}:
    // measure ||I_H(u_r - u)|| at the new time for mu = 0 vs large mu.
    const int n = 10;
    const Eigen::VectorXd a0 = tb.truth.coeffs.col(n).head(r);
    const double t1 = tb.obs.times[n + 1];
    const int k1 = tb.obs.index_of_time(t1);
    const Eigen::VectorXd op = ops.observation_projection(tb.obs.coarse_values[k1]);
    const double obs_norm_sq =
        coarse_norm_sq(tb.mesh, tb.obs.coarse_values[k1]);

    const auto mismatch = [&](const Eigen::VectorXd& a) {
      return a.dot(ops.G * a) - 2.0 * a.dot(op) + obs_norm_sq;
    };
    const double dt = tb.obs.times[n + 1] - tb.obs.times[n];
    const Eigen::VectorXd a_free =
        step_backward_euler(ops, a0, dt, 0.0, nullptr, picard);
    const Eigen::VectorXd a_nudged =
        step_backward_euler(ops, a0, dt, 1000.0, &op, picard);
    CHECK(mismatch(a_nudged) < mismatch(a_free));
  }

  SUBCASE("Picard stagnation raises a numerical error with history") {
    PicardOptions tight;
    tight.tol = 1e-16;  // unreachable
    tight.max_iters = 3;
    Eigen::VectorXd a0 = Eigen::VectorXd::Constant(r, 2.0);
    CHECK_THROWS_WITH_AS(
        step_backward_euler(ops, a0, 0.5, 0.0, nullptr, tight),
        doctest::Contains("update history"), NumericalError);
  }
}

TEST_CASE("BDF2 step") {
  const MiniTestbed& tb = MiniTestbed::instance();
  const RomOperators& ops = tb.ops;
  const int r = ops.r;
  const PicardOptions picard;

  SUBCASE("equilibrium is preserved when the forcing balances") {
    Eigen::VectorXd a_star(r);
    for (int j = 0; j < r; ++j) a_star[j] = 0.5 / (j + 1);
    RomOperators balanced = ops;
    balanced.f_vec =
        balanced.nu * balanced.S * a_star +
        balanced.convection_matrix(a_star) * a_star;
    const Eigen::VectorXd a =
        step_bdf2(balanced, a_star, a_star, 0.05, 0.0, nullptr, picard);
    CHECK((a - a_star).norm() <= 10 * picard.tol);
  }

  SUBCASE("temporal self-convergence at second order") {
    const double t_end = 1.0;
    const auto integrate = [&](double dt) {
      Eigen::VectorXd a = Eigen::VectorXd::Zero(r);
      Eigen::VectorXd ap = a;
      const std::int64_t n = std::llround(t_end / dt);
      for (std::int64_t s = 1; s <= n; ++s) {
        Eigen::VectorXd an;
        if (s == 1) {
          an = step_backward_euler(ops, a, dt, 0.0, nullptr, picard);
        } else {
          an = step_bdf2(ops, a, ap, dt, 0.0, nullptr, picard);
        }
        ap = a;
        a = an;
      }
      return a;
    };
    const Eigen::VectorXd ref = integrate(1.0 / 512);
    std::vector<double> dts, errs;
    for (double dt : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
      dts.push_back(dt);
      errs.push_back((integrate(dt) - ref).norm());
    }
    const double rate = oracles::loglog_slope(dts, errs);
    CHECK(rate >= 1.8);
    CHECK(rate <= 2.2);
  }
}

TEST_CASE("adaptive controller cases") {
  AdaptiveOptions opts;
  opts.enabled = true;
  opts.mu_step = 1.0;
  opts.energy_band = 0.02;
  opts.mu_min = 0.0;
  opts.mu_max = 100.0;

  // inside the dead band: unchanged
  CHECK(adaptive_update(opts, 5.0, 1.005, 1.0, 3.0) == 5.0);
  CHECK(adaptive_update(opts, 5.0, 0.995, 1.0, -3.0) == 5.0);
  // energy too large: add dissipation (raise mu when DAT > 0)
  CHECK(adaptive_update(opts, 5.0, 1.2, 1.0, 3.0) == 6.0);
  CHECK(adaptive_update(opts, 5.0, 1.2, 1.0, -3.0) == 4.0);
  // energy too small: remove dissipation
  CHECK(adaptive_update(opts, 5.0, 0.8, 1.0, 3.0) == 4.0);
  CHECK(adaptive_update(opts, 5.0, 0.8, 1.0, -3.0) == 6.0);
  // clamping
  CHECK(adaptive_update(opts, 0.0, 0.8, 1.0, 3.0) == 0.0);
  CHECK(adaptive_update(opts, 100.0, 1.2, 1.0, 3.0) == 100.0);
}

TEST_CASE("full runs") {
  const MiniTestbed& tb = MiniTestbed::instance();
  const RomOperators& ops = tb.ops;
  const int r = ops.r;

  DaConfig cfg;
  cfg.dt = 0.02;
  cfg.t_start = tb.obs.times.front();
  cfg.t_end = tb.obs.times.back();
  cfg.stepper = TimeStepper::bdf2;

  SUBCASE("dissipative decay without forcing or nudging") {
    RomOperators free = ops;
    free.f_vec.setZero();
    DaConfig decay = cfg;
    decay.ic = DaConfig::InitialCoefficients::truth_projection;
    const DaRunResult run = run_da_rom(free, decay, nullptr, &tb.truth);
    CHECK(run.rows.front().energy_rom > 0.0);
    for (std::size_t i = 1; i < run.rows.size(); ++i) {
      CHECK(run.rows[i].energy_rom <=
            run.rows[i - 1].energy_rom + 1e-12 * run.rows.front().energy_rom);
    }
  }

  SUBCASE("bounded trajectories across mu") {
    const double truth_scale =
        std::sqrt(2.0 * *std::max_element(tb.obs.true_energy.begin(),
                                          tb.obs.true_energy.end()));
    for (double mu : {0.0, 10.0, 100.0}) {
      DaConfig c = cfg;
      c.mu0 = mu;
      const DaRunResult run = run_da_rom(ops, c, &tb.obs, &tb.truth);
      CHECK(run.sup_norm_a <= 10.0 * truth_scale);
    }
  }

  SUBCASE("mu=0 trajectory is byte-identical to a plain Galerkin ROM") {
    DaConfig c = cfg;
    c.mu0 = 0.0;
    const DaRunResult da = run_da_rom(ops, c, &tb.obs, &tb.truth);

    // Independent plain-ROM loop: same steppers, no DA machinery anywhere.
    Eigen::VectorXd a = Eigen::VectorXd::Zero(r);
    Eigen::VectorXd ap = a;
    const std::int64_t n_steps = std::llround((c.t_end - c.t_start) / c.dt);
    for (std::int64_t n = 1; n <= n_steps; ++n) {
      Eigen::VectorXd an;
      if (n == 1) {
        an = step_backward_euler(ops, a, c.dt, 0.0, nullptr, c.picard);
      } else {
        an = step_bdf2(ops, a, ap, c.dt, 0.0, nullptr, c.picard);
      }
      ap = a;
      a = an;
      const Eigen::VectorXd& da_a = da.a_history[static_cast<std::size_t>(n)];
      for (int j = 0; j < r; ++j) CHECK(a[j] == da_a[j]);
    }
  }

  SUBCASE("identical configs produce identical diagnostics CSV bytes") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "nudgerom_test_rom";
    fs::create_directories(dir);
    DaConfig c = cfg;
    c.mu0 = 25.0;
    const DaRunResult r1 = run_da_rom(ops, c, &tb.obs, &tb.truth);
    const DaRunResult r2 = run_da_rom(ops, c, &tb.obs, &tb.truth);
    const std::string p1 = (dir / "a.csv").string();
    const std::string p2 = (dir / "b.csv").string();
    write_diagnostics_csv(p1, r1.rows);
    write_diagnostics_csv(p2, r2.rows);
    CHECK(file_hash(p1) == file_hash(p2));
    fs::remove_all(dir);
  }

  SUBCASE("admissibility advisory fires but the run continues") {
    DaConfig c = cfg;
    c.mu0 = 100.0;  // mu H^2 >> nu here
    const DaRunResult run = run_da_rom(ops, c, &tb.obs, &tb.truth);
    REQUIRE(!run.warnings.empty());
    CHECK(run.warnings.front().find("admissibility") != std::string::npos);
  }

  SUBCASE("nudged run without observations is rejected") {
    DaConfig c = cfg;
    c.mu0 = 10.0;
    CHECK_THROWS_AS(run_da_rom(ops, c, nullptr, nullptr), ConfigError);
  }

  SUBCASE("adaptive run reacts to an energy mismatch") {
    DaConfig c = cfg;
    c.mu0 = 0.0;
    c.adaptive.enabled = true;
    c.adaptive.check_stride = 5;
    c.adaptive.mu_step = 1.0;
    c.adaptive.mu_max = 50.0;
    const DaRunResult run = run_da_rom(ops, c, &tb.obs, &tb.truth);
    // starting from a=0 the ROM energy is far below truth: mu must move
    bool mu_changed = false;
    for (double m : run.mu_history) mu_changed |= (m != c.mu0);
    CHECK(mu_changed);
    for (double m : run.mu_history) {
      CHECK(m >= c.adaptive.mu_min);
      CHECK(m <= c.adaptive.mu_max);
    }
  }
}

TEST_CASE("nudging improves tracking on the mini testbed") {
  const MiniTestbed& tb = MiniTestbed::instance();
  DaConfig cfg;
  cfg.dt = 0.02;
  cfg.t_start = tb.obs.times.front();
  cfg.t_end = tb.obs.times.back();

  const auto mean_l2_error = [&](double mu) {
    DaConfig c = cfg;
    c.mu0 = mu;
    const DaRunResult run = run_da_rom(tb.ops, c, &tb.obs, &tb.truth);
    double acc = 0.0;
    for (const DiagnosticsRow& row : run.rows) acc += row.l2_error;
    return acc / run.rows.size();
  };
  // a^0 = 0: without nudging the ROM never locks onto the truth phase
  CHECK(mean_l2_error(50.0) < mean_l2_error(0.0));
}

#include "nudgerom/dns.hpp"

#include <cmath>
#include <complex>
#include <string>

#include "nudgerom/io.hpp"

namespace nudgerom {

namespace {

using Complex = std::complex<double>;

double spectral_norm_sq(const Grid& grid, const Eigen::ArrayXXcd& v1_hat,
                        const Eigen::ArrayXXcd& v2_hat) {
  const double n = static_cast<double>(grid.nx()) * grid.ny();
  return grid.area() * (v1_hat.abs2().sum() + v2_hat.abs2().sum()) / (n * n);
}

VelocityField make_initial_condition(SpectralWorkspace& ws,
                                     const DnsConfig& cfg) {
  switch (cfg.initial_condition.kind) {
    case InitialConditionSpec::Kind::taylor_green:
      return taylor_green(cfg.grid, cfg.initial_condition.amplitude);
    case InitialConditionSpec::Kind::random_seeded:
      return random_solenoidal(ws, cfg.initial_condition.seed,
                               cfg.initial_condition.kmax,
                               cfg.initial_condition.amplitude);
    case InitialConditionSpec::Kind::from_file: {
      const SnapshotSet snaps = read_snapshots(cfg.initial_condition.path);
      if (snaps.size() == 0) {
        throw ConfigError("initial-condition file holds no fields: " +
                          cfg.initial_condition.path);
      }
      const VelocityField& last = snaps.fields.back();
      if (!last.grid->same_layout(*cfg.grid)) {
        throw DimensionError("initial-condition file grid mismatch: " +
                             cfg.initial_condition.path);
      }
      VelocityField v(cfg.grid);
      v.u1 = last.u1;
      v.u2 = last.u2;
      return v;
    }
  }
  throw ConfigError("unknown initial condition kind");
}

VelocityField make_forcing_field(const DnsConfig& cfg) {
  switch (cfg.forcing.kind) {
    case ForcingSpec::Kind::none:
      return VelocityField::zero(cfg.grid);
    case ForcingSpec::Kind::kolmogorov:
      return kolmogorov_forcing(cfg.grid, cfg.forcing.amplitude,
                                cfg.forcing.wavenumber);
  }
  throw ConfigError("unknown forcing kind");
}

/// Spectral skew-symmetric advection 0.5*(w . grad w) + 0.5*div(w x w) of an
/// already dealiased spectral field; output is dealiased, not projected.
class AdvectionKernel {
 public:
  explicit AdvectionKernel(SpectralWorkspace& ws) : ws_(ws) {}

  void eval(const Eigen::ArrayXXcd& w1_hat, const Eigen::ArrayXXcd& w2_hat,
            Eigen::ArrayXXcd& n1_hat, Eigen::ArrayXXcd& n2_hat,
            double* max_speed = nullptr) {
    ws_.inv(w1_hat, w1_);
    ws_.inv(w2_hat, w2_);
    if (max_speed != nullptr) {
      *max_speed = std::max(w1_.abs().maxCoeff(), w2_.abs().maxCoeff());
    }
    ws_.inv(ws_.ddx(w1_hat), dw1dx_);
    ws_.inv(ws_.ddy(w1_hat), dw1dy_);
    ws_.inv(ws_.ddx(w2_hat), dw2dx_);
    ws_.inv(ws_.ddy(w2_hat), dw2dy_);

    conv_ = w1_ * dw1dx_ + w2_ * dw1dy_;
    n1_hat = 0.5 * ws_.fwd(conv_);
    conv_ = w1_ * dw2dx_ + w2_ * dw2dy_;
    n2_hat = 0.5 * ws_.fwd(conv_);

    prod_ = w1_ * w1_;
    t11_ = ws_.fwd(prod_);
    prod_ = w1_ * w2_;
    t12_ = ws_.fwd(prod_);
    prod_ = w2_ * w2_;
    t22_ = ws_.fwd(prod_);

    n1_hat += 0.5 * (ws_.ddx(t11_) + ws_.ddy(t12_));
    n2_hat += 0.5 * (ws_.ddx(t12_) + ws_.ddy(t22_));
    ws_.apply_dealias_mask(n1_hat);
    ws_.apply_dealias_mask(n2_hat);
  }

 private:
  SpectralWorkspace& ws_;
  Eigen::ArrayXXd w1_, w2_, dw1dx_, dw1dy_, dw2dx_, dw2dy_, conv_, prod_;
  Eigen::ArrayXXcd t11_, t12_, t22_;
};

}  // namespace

void DnsConfig::validate() const {
  if (!grid) throw ConfigError("DnsConfig: grid missing");
  if (!(nu > 0.0)) throw ConfigError("DnsConfig: nu must be positive");
  if (!(dt > 0.0)) throw ConfigError("DnsConfig: dt must be positive");
  if (!(t_end >= dt)) throw ConfigError("DnsConfig: t_end must cover one step");
  if (snapshot_stride < 1) throw ConfigError("DnsConfig: snapshot_stride >= 1");
  if (forcing.kind == ForcingSpec::Kind::kolmogorov &&
      forcing.wavenumber <= 0) {
    throw ConfigError("DnsConfig: kolmogorov wavenumber must be positive");
  }
}

std::uint64_t DnsConfig::hash() const {
  Fnv1a h;
  h.add(std::string("dns"));
  h.add(grid->nx()).add(grid->ny()).add(grid->lx()).add(grid->ly());
  h.add(grid->dealias_fraction());
  h.add(nu).add(dt).add(t_end);
  h.add(static_cast<int>(forcing.kind)).add(forcing.amplitude);
  h.add(forcing.wavenumber);
  h.add(static_cast<int>(initial_condition.kind));
  h.add(initial_condition.amplitude);
  h.add(static_cast<std::uint64_t>(initial_condition.seed));
  h.add(initial_condition.kmax);
  h.add(initial_condition.path);
  h.add(snapshot_stride).add(snapshot_window_start);
  h.add(static_cast<int>(stepper));
  return h.value();
}

std::uint64_t SnapshotSet::content_hash() const {
  Fnv1a h;
  h.add(times);
  for (const VelocityField& f : fields) {
    h.bytes(f.u1.data(), f.u1.size() * sizeof(double));
    h.bytes(f.u2.data(), f.u2.size() * sizeof(double));
  }
  return h.value();
}

DnsResult dns_run(const DnsConfig& cfg, const std::optional<StepProbe>& probe) {
  cfg.validate();
  const Grid& grid = *cfg.grid;
  SpectralWorkspace ws(cfg.grid);
  AdvectionKernel advection(ws);

  DnsResult result;
  result.snapshots.grid = cfg.grid;
  result.snapshots.config_hash = cfg.hash();

  // Spectral state: dealiased, divergence-free.
  const VelocityField u0 = make_initial_condition(ws, cfg);
  Eigen::ArrayXXcd u1_hat = ws.fwd(u0.u1);
  Eigen::ArrayXXcd u2_hat = ws.fwd(u0.u2);
  ws.apply_dealias_mask(u1_hat);
  ws.apply_dealias_mask(u2_hat);
  ws.project_divergence_free(u1_hat, u2_hat);

  Eigen::ArrayXXcd f1_hat = ws.fwd(make_forcing_field(cfg).u1);
  Eigen::ArrayXXcd f2_hat = ws.fwd(make_forcing_field(cfg).u2);
  ws.apply_dealias_mask(f1_hat);
  ws.apply_dealias_mask(f2_hat);
  ws.project_divergence_free(f1_hat, f2_hat);

  // Per-mode inverse multipliers for the implicit viscous solve.
  const int nx = grid.nx();
  const int ny = grid.ny();
  Eigen::ArrayXXd k_sq(nx, ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      k_sq(i, j) = grid.kx()[i] * grid.kx()[i] + grid.ky()[j] * grid.ky()[j];
    }
  }
  const Eigen::ArrayXXd denom_be = 1.0 / cfg.dt + cfg.nu * k_sq;
  const Eigen::ArrayXXd denom_bdf2 = 1.5 / cfg.dt + cfg.nu * k_sq;

  const std::int64_t n_steps = std::llround(cfg.t_end / cfg.dt);
  const std::int64_t first_record_step = static_cast<std::int64_t>(
      std::ceil(cfg.snapshot_window_start / cfg.dt - 1e-9));

  const double h_min = std::min(grid.hx(), grid.hy());
  double max_speed_seen = std::max(u0.u1.abs().maxCoeff(), u0.u2.abs().maxCoeff());

  VelocityField phys(cfg.grid);
  const auto materialize = [&]() {
    ws.inv(u1_hat, phys.u1);
    ws.inv(u2_hat, phys.u2);
  };

  const auto record_step = [&](std::int64_t step, double t) {
    const double energy = 0.5 * spectral_norm_sq(grid, u1_hat, u2_hat);
    if (!std::isfinite(energy)) {
      throw NumericalError("dns_run: solution blew up at step " +
                           std::to_string(step) + " (t=" + std::to_string(t) +
                           ")");
    }
    result.energy_times.push_back(t);
    result.energies.push_back(energy);

    const bool record_snapshot =
        step >= first_record_step &&
        (step - first_record_step) % cfg.snapshot_stride == 0;
    const bool probe_now =
        probe && t >= probe->t_start - 1e-12 && step % probe->stride == 0;
    if (record_snapshot || probe_now) {
      materialize();
      max_speed_seen = std::max(
          {max_speed_seen, phys.u1.abs().maxCoeff(), phys.u2.abs().maxCoeff()});
      if (record_snapshot) {
        result.snapshots.times.push_back(t);
        result.snapshots.fields.push_back(phys);
      }
      if (probe_now) probe->fn(step, t, phys);
    }
  };

  record_step(0, 0.0);

  Eigen::ArrayXXcd u1_prev = u1_hat;
  Eigen::ArrayXXcd u2_prev = u2_hat;
  Eigen::ArrayXXcd w1_hat, w2_hat, n1_hat, n2_hat, rhs1, rhs2;

  for (std::int64_t step = 1; step <= n_steps; ++step) {
    const bool bdf2_step = cfg.stepper == TimeStepper::bdf2 && step >= 2;
    if (bdf2_step) {
      w1_hat = 2.0 * u1_hat - u1_prev;
      w2_hat = 2.0 * u2_hat - u2_prev;
    } else {
      w1_hat = u1_hat;
      w2_hat = u2_hat;
    }
    advection.eval(w1_hat, w2_hat, n1_hat, n2_hat);

    rhs1 = f1_hat - n1_hat;
    rhs2 = f2_hat - n2_hat;
    ws.project_divergence_free(rhs1, rhs2);

    if (bdf2_step) {
      rhs1 += (4.0 * u1_hat - u1_prev) / (2.0 * cfg.dt);
      rhs2 += (4.0 * u2_hat - u2_prev) / (2.0 * cfg.dt);
      u1_prev = u1_hat;
      u2_prev = u2_hat;
      u1_hat = rhs1 / denom_bdf2;
      u2_hat = rhs2 / denom_bdf2;
    } else {
      rhs1 += u1_hat / cfg.dt;
      rhs2 += u2_hat / cfg.dt;
      u1_prev = u1_hat;
      u2_prev = u2_hat;
      u1_hat = rhs1 / denom_be;
      u2_hat = rhs2 / denom_be;
    }

    record_step(step, step * cfg.dt);
  }

  if (cfg.dt > h_min / (4.0 * std::max(max_speed_seen, 1e-30))) {
    result.warnings.push_back(
        "CFL advisory: dt=" + std::to_string(cfg.dt) + " exceeds h/(4*max|u|)=" +
        std::to_string(h_min / (4.0 * max_speed_seen)));
  }

  materialize();
  result.final_field = phys;
  return result;
}

OrderCheckResult temporal_order_check(const DnsConfig& config, int refinements) {
  if (refinements < 3) {
    throw RangeError("temporal_order_check: need at least 3 refinements");
  }
  DnsConfig cfg = config;
  cfg.forcing = ForcingSpec::none();
  cfg.initial_condition = InitialConditionSpec::taylor_green();
  cfg.snapshot_window_start = cfg.t_end * 2.0;  // no snapshots needed

  OrderCheckResult out;
  for (int k = 0; k < refinements; ++k) {
    const DnsResult run = dns_run(cfg);
    const double t_actual = run.energy_times.back();
    const double exact = taylor_green_energy(*cfg.grid, cfg.nu, t_actual);
    out.dts.push_back(cfg.dt);
    out.errors.push_back(std::abs(run.energies.back() - exact));
    cfg.dt *= 0.5;
  }
  for (std::size_t k = 1; k < out.errors.size(); ++k) {
    if (out.errors[k] >= out.errors[k - 1]) out.non_monotone = true;
  }
  // least-squares slope of log(error) vs log(dt)
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = refinements;
  for (int k = 0; k < n; ++k) {
    const double x = std::log(out.dts[k]);
    const double y = std::log(std::max(out.errors[k], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  out.rate = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return out;
}

PeriodicityReport analyze_energy_periodicity(const std::vector<double>& times,
                                             const std::vector<double>& energies,
                                             double rel_tol) {
  PeriodicityReport report;
  const std::size_t n = energies.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (energies[i] > energies[i - 1] && energies[i] >= energies[i + 1]) {
      report.peak_times.push_back(times[i]);
      report.peak_values.push_back(energies[i]);
    }
  }
  if (report.peak_times.size() < 2) return report;

  double period_sum = 0.0;
  for (std::size_t p = 1; p < report.peak_times.size(); ++p) {
    period_sum += report.peak_times[p] - report.peak_times[p - 1];
  }
  report.period = period_sum / (report.peak_times.size() - 1);

  for (std::size_t p = 1; p < report.peak_values.size(); ++p) {
    const double rel = std::abs(report.peak_values[p] - report.peak_values[p - 1]) /
                       std::max(report.peak_values[p - 1], 1e-300);
    report.max_rel_peak_diff = std::max(report.max_rel_peak_diff, rel);
  }
  report.periodic = report.peak_times.size() >= 3 &&
                    report.max_rel_peak_diff < rel_tol;
  return report;
}

}  // namespace nudgerom

#include "nudgerom/rom.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nudgerom/forms.hpp"

namespace nudgerom {

namespace {

constexpr double kTimeTol = 1e-9;
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

Eigen::VectorXd picard_solve(const RomOperators& ops,
                             const Eigen::MatrixXd& a_matrix,
                             const Eigen::VectorXd& rhs,
                             const Eigen::VectorXd& guess,
                             const PicardOptions& picard) {
  Eigen::VectorXd a = guess;
  std::vector<double> updates;
  for (int it = 0; it < picard.max_iters; ++it) {
    const Eigen::MatrixXd lhs = a_matrix + ops.convection_matrix(a);
    const Eigen::VectorXd a_next = lhs.partialPivLu().solve(rhs);
    const double update = (a_next - a).norm();
    a = a_next;
    if (update <= picard.tol) return a;
    updates.push_back(update);
  }
  std::ostringstream msg;
  msg << "Picard iteration stagnated after " << picard.max_iters
      << " iterations; update history:";
  for (double u : updates) msg << " " << u;
  throw NumericalError(msg.str());
}

}  // namespace

Eigen::MatrixXd RomOperators::convection_matrix(const Eigen::VectorXd& a) const {
  Eigen::MatrixXd n = Eigen::MatrixXd::Zero(r, r);
  for (int j = 0; j < r; ++j) {
    n.noalias() += a[j] * T[j].transpose();
  }
  return n;
}

Eigen::VectorXd RomOperators::observation_projection(const CoarseField& obs) const {
  return mesh.cell_area() *
         (mode_means1 * obs.c1 + mode_means2 * obs.c2);
}

RomOperators assemble(SpectralWorkspace& ws, const PodBasis& basis, int r,
                      const CoarseMesh& mesh, const ForcingSpec& forcing,
                      double nu) {
  basis.require_rank(r);
  if (!mesh.fine()->same_layout(*basis.grid)) {
    throw ConfigError("assemble: coarse mesh is not nested in the basis grid");
  }
  if (!(nu > 0.0)) throw ConfigError("assemble: nu must be positive");

  RomOperators ops;
  ops.r = r;
  ops.nu = nu;
  ops.mesh = mesh;
  ops.basis_hash = basis.snapshot_hash;
  ops.S = stiffness_matrix(ws, basis, r);

  // Orthonormal basis: the mass matrix must be the identity.
  for (int i = 0; i < r; ++i) {
    for (int j = i; j < r; ++j) {
      const double m = inner_l2(basis.modes[i], basis.modes[j]);
      if (std::abs(m - (i == j ? 1.0 : 0.0)) > 1e-8) {
        throw NumericalError("assemble: POD mass matrix deviates from identity");
      }
    }
  }

  // Trilinear tensor from the dealiased modes; T_jki = b*(phi_j,phi_k,phi_i)
  // assembled via the antisymmetrized convection form so the skew identity
  // T_jki = -T_jik holds exactly.
  std::vector<VelocityField> md;
  std::vector<VelocityGradient> gd;
  md.reserve(r);
  gd.reserve(r);
  for (int j = 0; j < r; ++j) {
    md.push_back(dealias(ws, basis.modes[j]));
    gd.push_back(gradient(ws, md.back()));
  }
  Eigen::MatrixXd b_conv(r, r);  // b_conv(k,i) = b(phi_j, phi_k, phi_i) per j
  ops.T.assign(r, Eigen::MatrixXd(r, r));
  const double w = basis.grid->cell_weight();
  Eigen::ArrayXXd conv1, conv2;
  for (int j = 0; j < r; ++j) {
    for (int k = 0; k < r; ++k) {
      conv1 = md[j].u1 * gd[k].du1_dx + md[j].u2 * gd[k].du1_dy;
      conv2 = md[j].u1 * gd[k].du2_dx + md[j].u2 * gd[k].du2_dy;
      for (int i = 0; i < r; ++i) {
        b_conv(k, i) =
            w * ((conv1 * md[i].u1).sum() + (conv2 * md[i].u2).sum());
      }
    }
    for (int k = 0; k < r; ++k) {
      for (int i = 0; i < r; ++i) {
        ops.T[j](k, i) = 0.5 * (b_conv(k, i) - b_conv(i, k));
      }
    }
  }

  // Nudging Gram matrix and the coarse means behind obs projections.
  const int cells = mesh.cells();
  ops.mode_means1.resize(r, cells);
  ops.mode_means2.resize(r, cells);
  for (int i = 0; i < r; ++i) {
    const CoarseField c = interpolate(mesh, basis.modes[i]);
    ops.mode_means1.row(i) = c.c1.transpose();
    ops.mode_means2.row(i) = c.c2.transpose();
  }
  ops.G.resize(r, r);
  for (int i = 0; i < r; ++i) {
    for (int j = i; j < r; ++j) {
      ops.G(i, j) = mesh.cell_area() *
                    (ops.mode_means1.row(i).dot(ops.mode_means1.row(j)) +
                     ops.mode_means2.row(i).dot(ops.mode_means2.row(j)));
      ops.G(j, i) = ops.G(i, j);
    }
  }

  VelocityField f = VelocityField::zero(basis.grid);
  if (forcing.kind == ForcingSpec::Kind::kolmogorov) {
    f = kolmogorov_forcing(basis.grid, forcing.amplitude, forcing.wavenumber);
  }
  ops.f_vec.resize(r);
  for (int i = 0; i < r; ++i) ops.f_vec[i] = inner_l2(f, basis.modes[i]);

  return ops;
}

void DaConfig::validate() const {
  if (mu0 < 0.0) throw ConfigError("DaConfig: mu0 must be >= 0");
  if (!(dt > 0.0)) throw ConfigError("DaConfig: dt must be positive");
  if (!(t_end > t_start)) throw ConfigError("DaConfig: empty time window");
  if (picard.max_iters < 1 || !(picard.tol > 0.0)) {
    throw ConfigError("DaConfig: bad Picard settings");
  }
  if (adaptive.enabled) {
    if (adaptive.check_stride < 1) throw ConfigError("DaConfig: check_stride >= 1");
    if (!(adaptive.energy_band > 0.0)) {
      throw ConfigError("DaConfig: energy_band must be positive");
    }
    if (adaptive.mu_min < 0.0 || adaptive.mu_max < adaptive.mu_min) {
      throw ConfigError("DaConfig: bad mu clamp range");
    }
  }
}

std::uint64_t DaConfig::hash() const {
  Fnv1a h;
  h.add(std::string("darom"));
  h.add(mu0).add(dt).add(t_start).add(t_end);
  h.add(static_cast<int>(stepper));
  h.add(picard.tol).add(picard.max_iters);
  h.add(adaptive.enabled ? 1 : 0).add(adaptive.check_stride);
  h.add(adaptive.mu_step).add(adaptive.energy_band);
  h.add(adaptive.mu_min).add(adaptive.mu_max);
  h.add(static_cast<int>(ic));
  return h.value();
}

int TruthSeries::index_of_time(double t) const {
  const auto it = std::lower_bound(times.begin(), times.end(), t - kTimeTol);
  if (it == times.end() || std::abs(*it - t) > kTimeTol) {
    throw RangeError("truth series has no sample at t=" + std::to_string(t));
  }
  return static_cast<int>(it - times.begin());
}

TruthSeries project_truth(const PodBasis& basis, int r,
                          const SnapshotSet& snapshots) {
  basis.require_rank(r);
  TruthSeries series;
  series.times = snapshots.times;
  series.coeffs.resize(r, snapshots.size());
  series.norm_sq.resize(snapshots.size());
  for (int n = 0; n < snapshots.size(); ++n) {
    series.coeffs.col(n) = pod_coefficients(basis, r, snapshots.fields[n]);
    series.norm_sq[n] = norm_l2_sq(snapshots.fields[n]);
  }
  return series;
}

Eigen::VectorXd step_backward_euler(const RomOperators& ops,
                                    const Eigen::VectorXd& a_n, double dt,
                                    double mu, const Eigen::VectorXd* obs_proj,
                                    const PicardOptions& picard) {
  Eigen::MatrixXd a_matrix =
      (1.0 / dt) * Eigen::MatrixXd::Identity(ops.r, ops.r) + ops.nu * ops.S;
  Eigen::VectorXd rhs = a_n / dt + ops.f_vec;
  if (mu != 0.0) {
    a_matrix += mu * ops.G;
    if (obs_proj == nullptr) {
      throw ConfigError("step_backward_euler: mu > 0 requires observations");
    }
    rhs += mu * (*obs_proj);
  }
  return picard_solve(ops, a_matrix, rhs, a_n, picard);
}

Eigen::VectorXd step_bdf2(const RomOperators& ops, const Eigen::VectorXd& a_n,
                          const Eigen::VectorXd& a_nm1, double dt, double mu,
                          const Eigen::VectorXd* obs_proj,
                          const PicardOptions& picard) {
  Eigen::MatrixXd a_matrix =
      (1.5 / dt) * Eigen::MatrixXd::Identity(ops.r, ops.r) + ops.nu * ops.S;
  Eigen::VectorXd rhs = (4.0 * a_n - a_nm1) / (2.0 * dt) + ops.f_vec;
  if (mu != 0.0) {
    a_matrix += mu * ops.G;
    if (obs_proj == nullptr) {
      throw ConfigError("step_bdf2: mu > 0 requires observations");
    }
    rhs += mu * (*obs_proj);
  }
  const Eigen::VectorXd guess = 2.0 * a_n - a_nm1;
  return picard_solve(ops, a_matrix, rhs, guess, picard);
}

double adaptive_update(const AdaptiveOptions& opts, double mu,
                       double energy_rom, double energy_true, double dat) {
  const double band = opts.energy_band * energy_true;
  if (energy_rom > energy_true + band) {
    // energy too large: add dissipation
    mu += (dat > 0.0) ? opts.mu_step : -opts.mu_step;
  } else if (energy_rom < energy_true - band) {
    // energy too small: remove dissipation
    mu += (dat > 0.0) ? -opts.mu_step : opts.mu_step;
  }
  return std::clamp(mu, opts.mu_min, opts.mu_max);
}

DaRunResult run_da_rom(const RomOperators& ops, const DaConfig& config,
                       const ObservationStream* obs, const TruthSeries* truth) {
  config.validate();
  const int r = ops.r;
  const std::int64_t n_steps =
      std::llround((config.t_end - config.t_start) / config.dt);
  if (n_steps < 1) throw ConfigError("run_da_rom: window shorter than one step");

  const bool needs_obs = config.mu0 > 0.0 || config.adaptive.enabled;
  if (needs_obs && obs == nullptr) {
    throw ConfigError("run_da_rom: nudged run requires an observation stream");
  }
  if (truth != nullptr && truth->coeffs.rows() < r) {
    throw ConfigError("run_da_rom: truth series has too few coefficients");
  }

  DaRunResult result;

  // Advisory admissibility guard nu - mu H^2 > 0 (constant treated as 1).
  if (config.mu0 > 0.0 && obs != nullptr) {
    const double h_coarse = obs->mesh.H();
    if (config.mu0 * h_coarse * h_coarse >= ops.nu) {
      result.warnings.push_back(
          "admissibility advisory: mu*H^2 >= nu (mu=" +
          std::to_string(config.mu0) + ", H=" + std::to_string(h_coarse) +
          ", nu=" + std::to_string(ops.nu) + "); continuing");
    }
  }

  // Pre-resolve observation indices for every step time.
  std::vector<int> obs_index(n_steps + 1, -1);
  if (obs != nullptr) {
    for (std::int64_t n = 0; n <= n_steps; ++n) {
      const double t = config.t_start + n * config.dt;
      if (needs_obs) {
        obs_index[n] = obs->index_of_time(t);  // throws when not covered
      } else {
        try {
          obs_index[n] = obs->index_of_time(t);
        } catch (const RangeError&) {
          obs_index[n] = -1;
        }
      }
    }
  }

  Eigen::VectorXd a = Eigen::VectorXd::Zero(r);
  if (config.ic == DaConfig::InitialCoefficients::truth_projection) {
    if (truth == nullptr) {
      throw ConfigError("run_da_rom: truth_projection IC requires a truth series");
    }
    a = truth->coeffs.col(truth->index_of_time(config.t_start)).head(r);
  }
  Eigen::VectorXd a_prev = a;

  double mu = config.mu0;

  const auto diag_row = [&](std::int64_t n, const Eigen::VectorXd& coeff,
                            double mu_now) {
    DiagnosticsRow row;
    row.step = n;
    row.time = config.t_start + n * config.dt;
    row.mu = mu_now;
    row.energy_rom = 0.5 * coeff.squaredNorm();
    row.energy_true = kNan;
    row.l2_error = kNan;
    row.dat = kNan;
    if (obs != nullptr && obs_index[n] >= 0) {
      const int k = obs_index[n];
      row.energy_true = obs->true_energy[k];
      const Eigen::VectorXd op =
          ops.observation_projection(obs->coarse_values[k]);
      row.dat = 2.0 * coeff.dot(ops.G * coeff - op);
    }
    if (truth != nullptr) {
      try {
        const int k = truth->index_of_time(row.time);
        const Eigen::VectorXd b = truth->coeffs.col(k).head(r);
        const double outside = std::max(0.0, truth->norm_sq[k] - b.squaredNorm());
        row.l2_error = std::sqrt(outside + (b - coeff).squaredNorm());
      } catch (const RangeError&) {
      }
    }
    return row;
  };

  result.rows.push_back(diag_row(0, a, mu));
  result.a_history.push_back(a);
  result.sup_norm_a = a.norm();
  result.mu_history.push_back(mu);
  result.dat_history.push_back(result.rows.back().dat);

  for (std::int64_t n = 1; n <= n_steps; ++n) {
    const Eigen::VectorXd* op_ptr = nullptr;
    Eigen::VectorXd op;
    if (mu != 0.0) {
      op = ops.observation_projection(obs->coarse_values[obs_index[n]]);
      op_ptr = &op;
    }

    Eigen::VectorXd a_next;
    if (config.stepper == TimeStepper::bdf2 && n >= 2) {
      a_next = step_bdf2(ops, a, a_prev, config.dt, mu, op_ptr, config.picard);
    } else {
      a_next = step_backward_euler(ops, a, config.dt, mu, op_ptr, config.picard);
    }
    a_prev = a;
    a = a_next;

    if (!a.allFinite()) {
      throw NumericalError("run_da_rom: coefficients blew up at step " +
                           std::to_string(n));
    }

    // Controller check after the step, using the state and observation at t^n.
    if (config.adaptive.enabled && n % config.adaptive.check_stride == 0) {
      const int k = obs_index[n];
      const Eigen::VectorXd op_now =
          ops.observation_projection(obs->coarse_values[k]);
      const double dat = 2.0 * a.dot(ops.G * a - op_now);
      const double e_rom = 0.5 * a.squaredNorm();
      mu = adaptive_update(config.adaptive, mu, e_rom, obs->true_energy[k], dat);
    }

    result.rows.push_back(diag_row(n, a, mu));
    result.a_history.push_back(a);
    result.sup_norm_a = std::max(result.sup_norm_a, a.norm());
    result.mu_history.push_back(mu);
    result.dat_history.push_back(result.rows.back().dat);
  }

  result.a_final = a;
  return result;
}

}  // namespace nudgerom

#include "nudgerom/pod.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

namespace nudgerom {

namespace {

/// Deterministic sign: the first coefficient exceeding the relative floor
/// (scanning u1 row-major, then u2) is made positive.
void fix_sign(VelocityField& mode) {
  const double floor =
      1e-8 * std::max(mode.u1.abs().maxCoeff(), mode.u2.abs().maxCoeff());
  for (const Eigen::ArrayXXd* comp : {&mode.u1, &mode.u2}) {
    for (int i = 0; i < comp->rows(); ++i) {
      for (int j = 0; j < comp->cols(); ++j) {
        const double v = (*comp)(i, j);
        if (std::abs(v) > floor) {
          if (v < 0.0) {
            mode.u1 = -mode.u1;
            mode.u2 = -mode.u2;
          }
          return;
        }
      }
    }
  }
}

}  // namespace

void PodBasis::require_rank(int r) const {
  if (r < 1 || r > d()) {
    throw RangeError("POD rank r=" + std::to_string(r) +
                     " outside [1, " + std::to_string(d()) + "]");
  }
}

PodBasis build_pod(SpectralWorkspace& ws, const SnapshotSet& snapshots,
                   const PodOptions& options) {
  const int m = snapshots.size();
  if (m < 2) throw ConfigError("build_pod: need at least 2 snapshots");

  std::vector<VelocityField> data = snapshots.fields;
  if (options.center) {
    VelocityField mean(snapshots.grid);
    for (const VelocityField& f : data) {
      mean.u1 += f.u1;
      mean.u2 += f.u2;
    }
    mean.u1 /= m;
    mean.u2 /= m;
    for (VelocityField& f : data) {
      f.u1 -= mean.u1;
      f.u2 -= mean.u2;
    }
  }

  // Method of snapshots: the M x M Gram matrix in the weighted L2 inner
  // product (no 1/M scaling; see PodBasis).
  Eigen::MatrixXd gram(m, m);
  for (int a = 0; a < m; ++a) {
    for (int b = a; b < m; ++b) {
      gram(a, b) = inner_l2(data[a], data[b]);
      gram(b, a) = gram(a, b);
    }
  }

  if (gram.cwiseAbs().maxCoeff() == 0.0) {
    throw NumericalError("build_pod: all snapshots are zero, basis is empty");
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("build_pod: snapshot Gram eigensolve failed");
  }
  const Eigen::VectorXd lambda_asc = eig.eigenvalues();
  const double lambda_max = lambda_asc[m - 1];
  if (lambda_asc[0] < -1e-12 * lambda_max) {
    throw NumericalError(
        "build_pod: snapshot Gram matrix is not numerically PSD (min "
        "eigenvalue " +
        std::to_string(lambda_asc[0]) + ")");
  }

  PodBasis basis;
  basis.grid = snapshots.grid;
  basis.snapshot_hash = snapshots.content_hash();
  basis.centered = options.center;

  std::vector<double> kept;
  std::vector<VelocityField> modes;
  for (int j = m - 1; j >= 0; --j) {  // descending eigenvalues
    const double lambda = lambda_asc[j];
    if (!(lambda > 0.0) || lambda < options.rank_tol * lambda_max) break;
    const Eigen::VectorXd c = eig.eigenvectors().col(j) / std::sqrt(lambda);
    VelocityField mode(snapshots.grid);
    for (int n = 0; n < m; ++n) {
      mode.u1 += c[n] * data[n].u1;
      mode.u2 += c[n] * data[n].u2;
    }
    kept.push_back(lambda);
    modes.push_back(std::move(mode));
  }

  // One modified Gram-Schmidt pass keeps trailing modes orthonormal to
  // roundoff; the correction is tiny because the lifted set is already
  // near-orthonormal.
  for (std::size_t j = 0; j < modes.size(); ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      const double proj = inner_l2(modes[j], modes[i]);
      modes[j].u1 -= proj * modes[i].u1;
      modes[j].u2 -= proj * modes[i].u2;
    }
    const double n = norm_l2(modes[j]);
    if (!(n > 0.0)) {
      throw NumericalError("build_pod: mode " + std::to_string(j) +
                           " collapsed during orthonormalization");
    }
    modes[j].u1 /= n;
    modes[j].u2 /= n;
    fix_sign(modes[j]);
  }

  basis.modes = std::move(modes);
  basis.eigenvalues =
      Eigen::Map<const Eigen::VectorXd>(kept.data(), static_cast<int>(kept.size()));
  basis.grad_norms_sq.resize(basis.d());
  for (int j = 0; j < basis.d(); ++j) {
    basis.grad_norms_sq[j] = grad_norm_l2_sq(ws, basis.modes[j]);
  }
  return basis;
}

Eigen::VectorXd pod_coefficients(const PodBasis& basis, int r,
                                 const VelocityField& v) {
  basis.require_rank(r);
  Eigen::VectorXd a(r);
  for (int j = 0; j < r; ++j) a[j] = inner_l2(v, basis.modes[j]);
  return a;
}

VelocityField pod_lift(const PodBasis& basis, const Eigen::VectorXd& a) {
  basis.require_rank(static_cast<int>(a.size()));
  VelocityField out(basis.grid);
  for (int j = 0; j < a.size(); ++j) {
    out.u1 += a[j] * basis.modes[j].u1;
    out.u2 += a[j] * basis.modes[j].u2;
  }
  return out;
}

VelocityField pod_project(const PodBasis& basis, int r, const VelocityField& v) {
  return pod_lift(basis, pod_coefficients(basis, r, v));
}

double eigentail(const PodBasis& basis, int r) {
  if (r < 0 || r > basis.d()) {
    throw RangeError("eigentail: r outside [0, d]");
  }
  double acc = 0.0;
  for (int j = r; j < basis.d(); ++j) {
    acc += basis.eigenvalues[j] * (1.0 + basis.grad_norms_sq[j]);
  }
  return std::sqrt(acc);
}

Eigen::MatrixXd stiffness_matrix(SpectralWorkspace& ws, const PodBasis& basis,
                                 int r) {
  basis.require_rank(r);
  std::vector<VelocityGradient> grads;
  grads.reserve(r);
  for (int j = 0; j < r; ++j) grads.push_back(gradient(ws, basis.modes[j]));
  const double w = basis.grid->cell_weight();
  Eigen::MatrixXd s(r, r);
  for (int i = 0; i < r; ++i) {
    for (int j = i; j < r; ++j) {
      s(i, j) = w * ((grads[i].du1_dx * grads[j].du1_dx).sum() +
                     (grads[i].du1_dy * grads[j].du1_dy).sum() +
                     (grads[i].du2_dx * grads[j].du2_dx).sum() +
                     (grads[i].du2_dy * grads[j].du2_dy).sum());
      s(j, i) = s(i, j);
    }
  }
  return s;
}

double stiffness_norm(SpectralWorkspace& ws, const PodBasis& basis, int r) {
  const Eigen::MatrixXd s = stiffness_matrix(ws, basis, r);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

SnapshotSet windowed_snapshots(const SnapshotSet& snapshots, double fraction,
                               std::optional<double> manual_period) {
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw RangeError("windowed_snapshots: fraction must lie in (0, 1]");
  }
  double period = 0.0;
  double window_start = snapshots.times.empty() ? 0.0 : snapshots.times.front();
  if (manual_period) {
    period = *manual_period;
    if (!(period > 0.0)) {
      throw RangeError("windowed_snapshots: manual period must be positive");
    }
  } else {
    std::vector<double> energies;
    energies.reserve(snapshots.size());
    for (const VelocityField& f : snapshots.fields) {
      energies.push_back(0.5 * norm_l2_sq(f));
    }
    const PeriodicityReport rep =
        analyze_energy_periodicity(snapshots.times, energies);
    if (rep.peak_times.size() < 2 || !(rep.period > 0.0)) {
      throw RangeError(
          "windowed_snapshots: could not detect an oscillation period from "
          "the energy signal; pass the period explicitly");
    }
    period = rep.period;
    window_start = rep.peak_times.front();
  }

  SnapshotSet out;
  out.grid = snapshots.grid;
  out.config_hash = snapshots.config_hash;
  const double t_hi = window_start + fraction * period;
  for (int i = 0; i < snapshots.size(); ++i) {
    const double t = snapshots.times[i];
    if (t >= window_start - 1e-12 && t < t_hi - 1e-12) {
      out.times.push_back(t);
      out.fields.push_back(snapshots.fields[i]);
    }
  }
  if (out.size() < 2) {
    throw RangeError(
        "windowed_snapshots: window prefix holds fewer than 2 snapshots");
  }
  return out;
}

}  // namespace nudgerom

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "nudgerom/dns.hpp"
#include "nudgerom/spectral.hpp"

namespace nudgerom {

/// POD basis from the method of snapshots.
///
/// Normalization: the snapshot Gram matrix K_mn = (u^m, u^n) is NOT divided
/// by the snapshot count, so sum_j lambda_j equals the total squared snapshot
/// norm and the optimality identity reads
///   sum_n ||u^n - P_r(u^n)||^2 = sum_{j>r} lambda_j.
struct PodBasis {
  GridPtr grid;
  std::vector<VelocityField> modes;   // L2-orthonormal
  Eigen::VectorXd eigenvalues;        // descending, size d
  Eigen::VectorXd grad_norms_sq;      // ||grad phi_j||^2
  std::uint64_t snapshot_hash = 0;    // provenance (content hash of inputs)
  bool centered = false;

  int d() const { return static_cast<int>(modes.size()); }
  void require_rank(int r) const;
};

struct PodOptions {
  double rank_tol = 1e-12;  // drop modes with lambda_j < rank_tol * lambda_1
  bool center = false;      // subtract the snapshot mean first (off: raw snapshots)
};

PodBasis build_pod(SpectralWorkspace& ws, const SnapshotSet& snapshots,
                   const PodOptions& options = {});

/// Coefficients a_j = (v, phi_j), j = 1..r.
Eigen::VectorXd pod_coefficients(const PodBasis& basis, int r,
                                 const VelocityField& v);
/// Sum of a_j phi_j.
VelocityField pod_lift(const PodBasis& basis, const Eigen::VectorXd& a);
/// L2 ROM projection P_r(v).
VelocityField pod_project(const PodBasis& basis, int r, const VelocityField& v);

/// sqrt( sum_{j>r} lambda_j (1 + ||grad phi_j||^2) ), the truncation-error
/// driver in the convergence bound.
double eigentail(const PodBasis& basis, int r);

/// Leading r x r block of the stiffness matrix S_ij = (grad phi_j, grad phi_i).
Eigen::MatrixXd stiffness_matrix(SpectralWorkspace& ws, const PodBasis& basis,
                                 int r);
/// Matrix 2-norm of that block; governs the POD inverse inequality
/// ||grad phi|| <= |||S_R|||^{1/2} ||phi|| on the span.
double stiffness_norm(SpectralWorkspace& ws, const PodBasis& basis, int r);

/// Prefix of one detected oscillation period of the snapshot energy signal.
/// `fraction` in (0,1] selects how much of the period to keep. If the period
/// cannot be detected from the energy signal, RangeError asks for
/// `manual_period`.
SnapshotSet windowed_snapshots(const SnapshotSet& snapshots, double fraction,
                               std::optional<double> manual_period = std::nullopt);

}  // namespace nudgerom

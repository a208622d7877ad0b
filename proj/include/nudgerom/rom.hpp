#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "nudgerom/dns.hpp"
#include "nudgerom/io.hpp"
#include "nudgerom/observe.hpp"
#include "nudgerom/pod.hpp"

namespace nudgerom {

/// Galerkin operators of the r-dimensional nudged ROM. The mass matrix is
/// the identity (orthonormal modes) and is asserted at assembly, not stored.
struct RomOperators {
  int r = 0;
  double nu = 0.0;
  Eigen::MatrixXd S;  // S(i,j) = (grad phi_j, grad phi_i)
  /// Trilinear tensor T_jki = b*(phi_j, phi_k, phi_i), stored as T[j](k,i);
  /// skew in the last two slots: T_jki = -T_jik.
  std::vector<Eigen::MatrixXd> T;
  Eigen::MatrixXd G;       // G(i,j) = (I_H phi_j, I_H phi_i)
  Eigen::VectorXd f_vec;   // (f, phi_i)
  CoarseMesh mesh;
  Eigen::MatrixXd mode_means1, mode_means2;  // r x cells: I_H phi_i cell means
  std::uint64_t basis_hash = 0;

  double t(int j, int k, int i) const { return T[j](k, i); }
  /// N(a): matrix of the convection term with the first slot contracted
  /// against a, so the nonlinear term is N(a) * a.
  Eigen::MatrixXd convection_matrix(const Eigen::VectorXd& a) const;
  /// (I_H u(t), I_H phi_i) from one observed coarse field.
  Eigen::VectorXd observation_projection(const CoarseField& obs) const;
};

RomOperators assemble(SpectralWorkspace& ws, const PodBasis& basis, int r,
                      const CoarseMesh& mesh, const ForcingSpec& forcing,
                      double nu);

struct PicardOptions {
  double tol = 1e-10;  // absolute tolerance on the update norm
  int max_iters = 25;
};

struct AdaptiveOptions {
  bool enabled = false;
  int check_stride = 10;     // steps between controller invocations
  double mu_step = 1.0;      // +/- adjustment per invocation
  double energy_band = 0.02; // relative dead-band on the energy error
  double mu_min = 0.0;
  double mu_max = 1e6;
};

struct DaConfig {
  double mu0 = 0.0;
  double dt = 1e-2;
  double t_start = 0.0;
  double t_end = 1.0;
  TimeStepper stepper = TimeStepper::bdf2;
  PicardOptions picard;
  AdaptiveOptions adaptive;
  enum class InitialCoefficients { zero, truth_projection };
  InitialCoefficients ic = InitialCoefficients::zero;

  void validate() const;
  std::uint64_t hash() const;
};

/// Truth trajectory reduced to what the DA-ROM diagnostics need: modal
/// projection coefficients and squared norms, sampled at known times.
struct TruthSeries {
  std::vector<double> times;
  Eigen::MatrixXd coeffs;        // rows >= r, one column per time
  std::vector<double> norm_sq;   // ||u(t)||^2

  int index_of_time(double t) const;  // RangeError when absent
};

TruthSeries project_truth(const PodBasis& basis, int r,
                          const SnapshotSet& snapshots);

/// One implicit step of the nudged ROM. The nonlinear term is solved by
/// Picard iteration on the convecting field; obs_proj may be null when mu=0.
Eigen::VectorXd step_backward_euler(const RomOperators& ops,
                                    const Eigen::VectorXd& a_n, double dt,
                                    double mu, const Eigen::VectorXd* obs_proj,
                                    const PicardOptions& picard);
Eigen::VectorXd step_bdf2(const RomOperators& ops, const Eigen::VectorXd& a_n,
                          const Eigen::VectorXd& a_nm1, double dt, double mu,
                          const Eigen::VectorXd* obs_proj,
                          const PicardOptions& picard);

/// Dead-band energy-matching controller: outside the band, dissipation from
/// the nudging term is added or removed using the sign of DAT; the result is
/// clamped to [mu_min, mu_max].
double adaptive_update(const AdaptiveOptions& opts, double mu,
                       double energy_rom, double energy_true, double dat);

struct DaRunResult {
  std::vector<DiagnosticsRow> rows;
  std::vector<Eigen::VectorXd> a_history;  // one entry per recorded step
  Eigen::VectorXd a_final;
  std::vector<std::string> warnings;
  double sup_norm_a = 0.0;  // max over steps of ||a||
  std::vector<double> mu_history;
  std::vector<double> dat_history;
};

/// Time-step the DA-ROM over [t_start, t_end]. Observations must cover every
/// step time exactly when mu0 > 0 or the adaptive controller is enabled;
/// truth (when given) fills the l2_error diagnostic at matching times.
DaRunResult run_da_rom(const RomOperators& ops, const DaConfig& config,
                       const ObservationStream* obs = nullptr,
                       const TruthSeries* truth = nullptr);

}  // namespace nudgerom

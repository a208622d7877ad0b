#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "nudgerom/field.hpp"
#include "nudgerom/grid.hpp"

namespace nudgerom {

/// Gradient of a two-component field, stored as the four partial derivatives.
struct VelocityGradient {
  GridPtr grid;
  Eigen::ArrayXXd du1_dx, du1_dy, du2_dx, du2_dy;

  double norm_l2_sq() const {
    return grid->cell_weight() *
           (du1_dx.square().sum() + du1_dy.square().sum() +
            du2_dx.square().sum() + du2_dy.square().sum());
  }
};

/// Per-worker FFT scratch for one grid layout. Construction is cheap; every
/// thread that transforms fields owns its own workspace. All spectral arrays
/// are full complex nx x ny with signed wavenumber ordering.
class SpectralWorkspace {
 public:
  explicit SpectralWorkspace(GridPtr grid);

  const GridPtr& grid() const { return grid_; }

  void fwd(const Eigen::ArrayXXd& in, Eigen::ArrayXXcd& out);
  void inv(const Eigen::ArrayXXcd& in, Eigen::ArrayXXd& out);
  Eigen::ArrayXXcd fwd(const Eigen::ArrayXXd& in);
  Eigen::ArrayXXd inv(const Eigen::ArrayXXcd& in);

  /// Spectral x/y derivative of a spectral array (Nyquist modes dropped).
  Eigen::ArrayXXcd ddx(const Eigen::ArrayXXcd& in) const;
  Eigen::ArrayXXcd ddy(const Eigen::ArrayXXcd& in) const;

  /// In-place removal of the divergent part of a spectral velocity pair.
  void project_divergence_free(Eigen::ArrayXXcd& v1, Eigen::ArrayXXcd& v2) const;

  /// Zero every mode removed by the grid's dealias rule (in place).
  void apply_dealias_mask(Eigen::ArrayXXcd& v) const;

 private:
  GridPtr grid_;
  Eigen::FFT<double> fft_;
  Eigen::VectorXcd row_in_, row_out_, col_in_, col_out_;
};

/// Exact spectral gradient (inputs assumed periodic; exact for band-limited
/// fields).
VelocityGradient gradient(SpectralWorkspace& ws, const VelocityField& v);
VelocityField gradient(SpectralWorkspace& ws, const ScalarField& s);

/// (grad a, grad b) in L2.
double grad_inner_l2(SpectralWorkspace& ws, const VelocityField& a,
                     const VelocityField& b);
double grad_norm_l2_sq(SpectralWorkspace& ws, const VelocityField& a);

/// L2-orthogonal projection onto divergence-free fields.
VelocityField leray_project(SpectralWorkspace& ws, const VelocityField& v);

/// L2 norm of the discrete divergence.
double divergence_l2(SpectralWorkspace& ws, const VelocityField& v);

/// Field with all dealiased modes removed.
VelocityField dealias(SpectralWorkspace& ws, const VelocityField& v);

}  // namespace nudgerom

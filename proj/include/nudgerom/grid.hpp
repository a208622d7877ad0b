#pragma once

#include <Eigen/Dense>
#include <memory>

#include "nudgerom/errors.hpp"

namespace nudgerom {

/// Uniform periodic grid on [0,lx) x [0,ly) with nx x ny nodes.
///
/// Carries the spectral metadata shared by every field operation: signed
/// wavenumbers per direction, derivative multipliers (Nyquist zeroed so
/// derivatives of real fields stay real), and the dealiasing mask used for
/// quadratic products. The quadrature weight of every node is hx*hy, which
/// integrates trigonometric polynomials exactly on the periodic box.
class Grid {
 public:
  Grid(int nx, int ny, double lx, double ly, double dealias_fraction = 2.0 / 3.0);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double lx() const { return lx_; }
  double ly() const { return ly_; }
  double hx() const { return lx_ / nx_; }
  double hy() const { return ly_ / ny_; }
  double area() const { return lx_ * ly_; }
  /// Quadrature weight per node.
  double cell_weight() const { return hx() * hy(); }
  double dealias_fraction() const { return dealias_fraction_; }

  double x(int i) const { return hx() * i; }
  double y(int j) const { return hy() * j; }

  /// Signed angular wavenumber along x for spectral index i.
  const Eigen::VectorXd& kx() const { return kx_; }
  const Eigen::VectorXd& ky() const { return ky_; }
  /// Same, but with the Nyquist mode zeroed (used for differentiation).
  const Eigen::VectorXd& kx_deriv() const { return kx_deriv_; }
  const Eigen::VectorXd& ky_deriv() const { return ky_deriv_; }
  /// 1 on retained modes, 0 on modes removed by the dealias rule.
  const Eigen::ArrayXXd& dealias_mask() const { return dealias_mask_; }

  bool same_layout(const Grid& other) const {
    return nx_ == other.nx_ && ny_ == other.ny_ && lx_ == other.lx_ &&
           ly_ == other.ly_;
  }

 private:
  int nx_, ny_;
  double lx_, ly_;
  double dealias_fraction_;
  Eigen::VectorXd kx_, ky_, kx_deriv_, ky_deriv_;
  Eigen::ArrayXXd dealias_mask_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr make_grid(int nx, int ny, double lx, double ly,
                         double dealias_fraction = 2.0 / 3.0) {
  return std::make_shared<Grid>(nx, ny, lx, ly, dealias_fraction);
}

/// Square 2pi-periodic box, the default test domain.
GridPtr make_square_grid(int n, double dealias_fraction = 2.0 / 3.0);

}  // namespace nudgerom

#include "nudgerom/grid.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace nudgerom {

namespace {

Eigen::VectorXd signed_wavenumbers(int n, double l) {
  Eigen::VectorXd k(n);
  const double scale = 2.0 * std::numbers::pi / l;
  for (int i = 0; i < n; ++i) {
    const int m = (i <= n / 2) ? i : i - n;
    k[i] = scale * m;
  }
  return k;
}

}  // namespace

Grid::Grid(int nx, int ny, double lx, double ly, double dealias_fraction)
    : nx_(nx), ny_(ny), lx_(lx), ly_(ly), dealias_fraction_(dealias_fraction) {
  if (nx <= 0 || ny <= 0 || nx % 2 != 0 || ny % 2 != 0) {
    throw ConfigError("Grid: nx, ny must be positive even integers, got " +
                      std::to_string(nx) + " x " + std::to_string(ny));
  }
  if (!(lx > 0.0) || !(ly > 0.0)) {
    throw ConfigError("Grid: domain extents must be positive");
  }
  if (!(dealias_fraction > 0.0) || dealias_fraction > 1.0) {
    throw ConfigError("Grid: dealias_fraction must lie in (0, 1]");
  }

  kx_ = signed_wavenumbers(nx_, lx_);
  ky_ = signed_wavenumbers(ny_, ly_);
  kx_deriv_ = kx_;
  ky_deriv_ = ky_;
  kx_deriv_[nx_ / 2] = 0.0;
  ky_deriv_[ny_ / 2] = 0.0;

  // Keep integer mode numbers |m| <= floor(fraction * n/2) in each direction.
  const int mx_keep = static_cast<int>(std::floor(dealias_fraction_ * (nx_ / 2)));
  const int my_keep = static_cast<int>(std::floor(dealias_fraction_ * (ny_ / 2)));
  dealias_mask_ = Eigen::ArrayXXd::Zero(nx_, ny_);
  for (int i = 0; i < nx_; ++i) {
    const int mi = (i <= nx_ / 2) ? i : i - nx_;
    for (int j = 0; j < ny_; ++j) {
      const int mj = (j <= ny_ / 2) ? j : j - ny_;
      if (std::abs(mi) <= mx_keep && std::abs(mj) <= my_keep) {
        dealias_mask_(i, j) = 1.0;
      }
    }
  }
}

GridPtr make_square_grid(int n, double dealias_fraction) {
  const double two_pi = 2.0 * std::numbers::pi;
  return make_grid(n, n, two_pi, two_pi, dealias_fraction);
}

}  // namespace nudgerom

#pragma once

// Test-only oracles, independent of the library's spectral code paths.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "nudgerom/field.hpp"

namespace oracles {

using ScalarFn = std::function<double(double, double)>;

/// Plain nested-loop quadrature of (a1*b1 + a2*b2) with weight hx*hy,
/// evaluating the integrand functions directly at the nodes of `grid`.
inline double quadrature_inner(const nudgerom::Grid& grid, const ScalarFn& a1,
                               const ScalarFn& a2, const ScalarFn& b1,
                               const ScalarFn& b2) {
  double acc = 0.0;
  for (int j = 0; j < grid.ny(); ++j) {
    for (int i = 0; i < grid.nx(); ++i) {
      const double x = grid.x(i);
      const double y = grid.y(j);
      acc += a1(x, y) * b1(x, y) + a2(x, y) * b2(x, y);
    }
  }
  return acc * grid.cell_weight();
}

/// Dense quadrature of the convection form (w . grad u, v) with analytic
/// derivative functions supplied by the caller.
struct AnalyticVelocity {
  ScalarFn u1, u2;        // components
  ScalarFn du1_dx, du1_dy;  // analytic gradient (only needed in middle slot)
  ScalarFn du2_dx, du2_dy;
};

inline double quadrature_b_form(const nudgerom::Grid& grid,
                                const AnalyticVelocity& w,
                                const AnalyticVelocity& u,
                                const AnalyticVelocity& v) {
  double acc = 0.0;
  for (int j = 0; j < grid.ny(); ++j) {
    for (int i = 0; i < grid.nx(); ++i) {
      const double x = grid.x(i);
      const double y = grid.y(j);
      const double w1 = w.u1(x, y), w2 = w.u2(x, y);
      const double conv1 = w1 * u.du1_dx(x, y) + w2 * u.du1_dy(x, y);
      const double conv2 = w1 * u.du2_dx(x, y) + w2 * u.du2_dy(x, y);
      acc += conv1 * v.u1(x, y) + conv2 * v.u2(x, y);
    }
  }
  return acc * grid.cell_weight();
}

inline nudgerom::VelocityField sample(const nudgerom::GridPtr& grid,
                                      const AnalyticVelocity& f) {
  nudgerom::VelocityField v(grid);
  for (int j = 0; j < grid->ny(); ++j) {
    for (int i = 0; i < grid->nx(); ++i) {
      v.u1(i, j) = f.u1(grid->x(i), grid->y(j));
      v.u2(i, j) = f.u2(grid->x(i), grid->y(j));
    }
  }
  return v;
}

/// Second-order centered finite differences with periodic wraparound.
inline void fd_gradient(const nudgerom::VelocityField& v, Eigen::ArrayXXd& du1_dx,
                        Eigen::ArrayXXd& du1_dy, Eigen::ArrayXXd& du2_dx,
                        Eigen::ArrayXXd& du2_dy) {
  const int nx = v.grid->nx();
  const int ny = v.grid->ny();
  const double hx = v.grid->hx();
  const double hy = v.grid->hy();
  du1_dx.resize(nx, ny);
  du1_dy.resize(nx, ny);
  du2_dx.resize(nx, ny);
  du2_dy.resize(nx, ny);
  for (int j = 0; j < ny; ++j) {
    const int jp = (j + 1) % ny;
    const int jm = (j + ny - 1) % ny;
    for (int i = 0; i < nx; ++i) {
      const int ip = (i + 1) % nx;
      const int im = (i + nx - 1) % nx;
      du1_dx(i, j) = (v.u1(ip, j) - v.u1(im, j)) / (2.0 * hx);
      du1_dy(i, j) = (v.u1(i, jp) - v.u1(i, jm)) / (2.0 * hy);
      du2_dx(i, j) = (v.u2(ip, j) - v.u2(im, j)) / (2.0 * hx);
      du2_dy(i, j) = (v.u2(i, jp) - v.u2(i, jm)) / (2.0 * hy);
    }
  }
}

/// Least-squares slope of log(values) against log(scales).
inline double loglog_slope(const std::vector<double>& scales,
                           const std::vector<double>& values) {
  const int n = static_cast<int>(scales.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double x = std::log(scales[i]);
    const double y = std::log(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// R^2 of the least-squares line of y against x.
inline double linear_fit_r2(const std::vector<double>& x,
                            const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  const double cov = n * sxy - sx * sy;
  const double vx = n * sxx - sx * sx;
  const double vy = n * syy - sy * sy;
  if (vx == 0.0 || vy == 0.0) return 0.0;
  return (cov * cov) / (vx * vy);
}

}  // namespace oracles

#include "nudgerom/spectral.hpp"

#include <cmath>
#include <complex>

namespace nudgerom {

using Complex = std::complex<double>;

SpectralWorkspace::SpectralWorkspace(GridPtr grid) : grid_(std::move(grid)) {
  const int nx = grid_->nx();
  const int ny = grid_->ny();
  row_in_.resize(ny);
  row_out_.resize(ny);
  col_in_.resize(nx);
  col_out_.resize(nx);
}

void SpectralWorkspace::fwd(const Eigen::ArrayXXd& in, Eigen::ArrayXXcd& out) {
  const int nx = grid_->nx();
  const int ny = grid_->ny();
  out.resize(nx, ny);
  // Transform along x (contiguous columns), then along y.
  for (int j = 0; j < ny; ++j) {
    col_in_ = in.col(j).matrix().cast<Complex>();
    fft_.fwd(col_out_, col_in_);
    out.col(j) = col_out_.array();
  }
  for (int i = 0; i < nx; ++i) {
    row_in_ = out.row(i).matrix().transpose();
    fft_.fwd(row_out_, row_in_);
    out.row(i) = row_out_.array().transpose();
  }
}

void SpectralWorkspace::inv(const Eigen::ArrayXXcd& in, Eigen::ArrayXXd& out) {
  const int nx = grid_->nx();
  const int ny = grid_->ny();
  Eigen::ArrayXXcd tmp(nx, ny);
  for (int i = 0; i < nx; ++i) {
    row_in_ = in.row(i).matrix().transpose();
    fft_.inv(row_out_, row_in_);
    tmp.row(i) = row_out_.array().transpose();
  }
  out.resize(nx, ny);
  for (int j = 0; j < ny; ++j) {
    col_in_ = tmp.col(j).matrix();
    fft_.inv(col_out_, col_in_);
    out.col(j) = col_out_.array().real();
  }
}

Eigen::ArrayXXcd SpectralWorkspace::fwd(const Eigen::ArrayXXd& in) {
  Eigen::ArrayXXcd out;
  fwd(in, out);
  return out;
}

Eigen::ArrayXXd SpectralWorkspace::inv(const Eigen::ArrayXXcd& in) {
  Eigen::ArrayXXd out;
  inv(in, out);
  return out;
}

Eigen::ArrayXXcd SpectralWorkspace::ddx(const Eigen::ArrayXXcd& in) const {
  Eigen::ArrayXXcd out(in.rows(), in.cols());
  const auto& kx = grid_->kx_deriv();
  for (int j = 0; j < in.cols(); ++j) {
    for (int i = 0; i < in.rows(); ++i) {
      out(i, j) = Complex(0.0, kx[i]) * in(i, j);
    }
  }
  return out;
}

Eigen::ArrayXXcd SpectralWorkspace::ddy(const Eigen::ArrayXXcd& in) const {
  Eigen::ArrayXXcd out(in.rows(), in.cols());
  const auto& ky = grid_->ky_deriv();
  for (int j = 0; j < in.cols(); ++j) {
    const Complex iky(0.0, ky[j]);
    for (int i = 0; i < in.rows(); ++i) {
      out(i, j) = iky * in(i, j);
    }
  }
  return out;
}

void SpectralWorkspace::project_divergence_free(Eigen::ArrayXXcd& v1,
                                                Eigen::ArrayXXcd& v2) const {
  const auto& kx = grid_->kx();
  const auto& ky = grid_->ky();
  for (int j = 0; j < v1.cols(); ++j) {
    for (int i = 0; i < v1.rows(); ++i) {
      const double k1 = kx[i];
      const double k2 = ky[j];
      const double k_sq = k1 * k1 + k2 * k2;
      if (k_sq == 0.0) continue;  // mean mode is divergence-free
      const Complex k_dot_v = (k1 * v1(i, j) + k2 * v2(i, j)) / k_sq;
      v1(i, j) -= k1 * k_dot_v;
      v2(i, j) -= k2 * k_dot_v;
    }
  }
}

void SpectralWorkspace::apply_dealias_mask(Eigen::ArrayXXcd& v) const {
  v *= grid_->dealias_mask().cast<Complex>();
}

VelocityGradient gradient(SpectralWorkspace& ws, const VelocityField& v) {
  require_same_grid(v, *ws.grid());
  VelocityGradient g;
  g.grid = v.grid;
  const Eigen::ArrayXXcd v1_hat = ws.fwd(v.u1);
  const Eigen::ArrayXXcd v2_hat = ws.fwd(v.u2);
  g.du1_dx = ws.inv(ws.ddx(v1_hat));
  g.du1_dy = ws.inv(ws.ddy(v1_hat));
  g.du2_dx = ws.inv(ws.ddx(v2_hat));
  g.du2_dy = ws.inv(ws.ddy(v2_hat));
  return g;
}

VelocityField gradient(SpectralWorkspace& ws, const ScalarField& s) {
  VelocityField g(s.grid);
  const Eigen::ArrayXXcd s_hat = ws.fwd(s.p);
  g.u1 = ws.inv(ws.ddx(s_hat));
  g.u2 = ws.inv(ws.ddy(s_hat));
  return g;
}

double grad_inner_l2(SpectralWorkspace& ws, const VelocityField& a,
                     const VelocityField& b) {
  require_same_grid(a, b);
  const VelocityGradient ga = gradient(ws, a);
  const VelocityGradient gb = gradient(ws, b);
  const double w = a.grid->cell_weight();
  return w * ((ga.du1_dx * gb.du1_dx).sum() + (ga.du1_dy * gb.du1_dy).sum() +
              (ga.du2_dx * gb.du2_dx).sum() + (ga.du2_dy * gb.du2_dy).sum());
}

double grad_norm_l2_sq(SpectralWorkspace& ws, const VelocityField& a) {
  return gradient(ws, a).norm_l2_sq();
}

VelocityField leray_project(SpectralWorkspace& ws, const VelocityField& v) {
  require_same_grid(v, *ws.grid());
  Eigen::ArrayXXcd v1_hat = ws.fwd(v.u1);
  Eigen::ArrayXXcd v2_hat = ws.fwd(v.u2);
  ws.project_divergence_free(v1_hat, v2_hat);
  VelocityField out(v.grid);
  out.u1 = ws.inv(v1_hat);
  out.u2 = ws.inv(v2_hat);
  return out;
}

double divergence_l2(SpectralWorkspace& ws, const VelocityField& v) {
  const Eigen::ArrayXXcd div_hat =
      ws.ddx(ws.fwd(v.u1)) + ws.ddy(ws.fwd(v.u2));
  const Eigen::ArrayXXd div = ws.inv(div_hat);
  return std::sqrt(v.grid->cell_weight() * div.square().sum());
}

VelocityField dealias(SpectralWorkspace& ws, const VelocityField& v) {
  Eigen::ArrayXXcd v1_hat = ws.fwd(v.u1);
  Eigen::ArrayXXcd v2_hat = ws.fwd(v.u2);
  ws.apply_dealias_mask(v1_hat);
  ws.apply_dealias_mask(v2_hat);
  VelocityField out(v.grid);
  out.u1 = ws.inv(v1_hat);
  out.u2 = ws.inv(v2_hat);
  return out;
}

}  // namespace nudgerom

#include "nudgerom/flows.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace nudgerom {

namespace {

Eigen::ArrayXXd white_noise(int nx, int ny, std::mt19937_64& rng) {
  Eigen::ArrayXXd a(nx, ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      // uniform in [-1, 1), reproducible across platforms
      const double u =
          static_cast<double>(rng()) / static_cast<double>(UINT64_MAX);
      a(i, j) = 2.0 * u - 1.0;
    }
  }
  return a;
}

void lowpass(const Grid& grid, int kmax, Eigen::ArrayXXcd& v) {
  const int nx = grid.nx();
  const int ny = grid.ny();
  for (int j = 0; j < ny; ++j) {
    const int mj = (j <= ny / 2) ? j : j - ny;
    for (int i = 0; i < nx; ++i) {
      const int mi = (i <= nx / 2) ? i : i - nx;
      if (std::abs(mi) > kmax || std::abs(mj) > kmax || (mi == 0 && mj == 0)) {
        v(i, j) = 0.0;
      }
    }
  }
}

}  // namespace

VelocityField taylor_green(GridPtr grid, double amplitude) {
  const double ax = 2.0 * std::numbers::pi / grid->lx();
  const double ay = 2.0 * std::numbers::pi / grid->ly();
  VelocityField v(grid);
  for (int j = 0; j < grid->ny(); ++j) {
    const double y = grid->y(j);
    for (int i = 0; i < grid->nx(); ++i) {
      const double x = grid->x(i);
      v.u1(i, j) = amplitude * std::sin(ax * x) * std::cos(ay * y);
      v.u2(i, j) = -amplitude * (ax / ay) * std::cos(ax * x) * std::sin(ay * y);
    }
  }
  return v;
}

double taylor_green_decay_rate(const Grid& grid, double nu) {
  const double ax = 2.0 * std::numbers::pi / grid.lx();
  const double ay = 2.0 * std::numbers::pi / grid.ly();
  return nu * (ax * ax + ay * ay);
}

double taylor_green_energy(const Grid& grid, double nu, double t,
                           double amplitude) {
  const double ax = 2.0 * std::numbers::pi / grid.lx();
  const double ay = 2.0 * std::numbers::pi / grid.ly();
  const double norm_sq_0 = amplitude * amplitude * (grid.area() / 4.0) *
                           (1.0 + (ax / ay) * (ax / ay));
  return 0.5 * norm_sq_0 * std::exp(-2.0 * taylor_green_decay_rate(grid, nu) * t);
}

VelocityField kolmogorov_forcing(GridPtr grid, double amplitude,
                                 int wavenumber) {
  const double ay = 2.0 * std::numbers::pi / grid->ly();
  VelocityField f(grid);
  for (int j = 0; j < grid->ny(); ++j) {
    const double s = amplitude * std::sin(ay * wavenumber * grid->y(j));
    for (int i = 0; i < grid->nx(); ++i) {
      f.u1(i, j) = s;
    }
  }
  return f;
}

VelocityField random_solenoidal(SpectralWorkspace& ws, std::uint64_t seed,
                                int kmax, double target_norm) {
  const GridPtr& grid = ws.grid();
  std::mt19937_64 rng(seed);
  Eigen::ArrayXXcd v1_hat = ws.fwd(white_noise(grid->nx(), grid->ny(), rng));
  Eigen::ArrayXXcd v2_hat = ws.fwd(white_noise(grid->nx(), grid->ny(), rng));
  lowpass(*grid, kmax, v1_hat);
  lowpass(*grid, kmax, v2_hat);
  ws.project_divergence_free(v1_hat, v2_hat);
  VelocityField v(grid);
  v.u1 = ws.inv(v1_hat);
  v.u2 = ws.inv(v2_hat);
  const double n = norm_l2(v);
  if (n > 0.0) {
    const double s = target_norm / n;
    v.u1 *= s;
    v.u2 *= s;
  }
  return v;
}

ScalarField random_scalar(SpectralWorkspace& ws, std::uint64_t seed, int kmax,
                          double target_norm) {
  const GridPtr& grid = ws.grid();
  std::mt19937_64 rng(seed);
  Eigen::ArrayXXcd s_hat = ws.fwd(white_noise(grid->nx(), grid->ny(), rng));
  lowpass(*grid, kmax, s_hat);
  ScalarField s(grid);
  s.p = ws.inv(s_hat);
  s.remove_mean();
  const double n = norm_l2(s);
  if (n > 0.0) s.p *= target_norm / n;
  return s;
}

}  // namespace nudgerom

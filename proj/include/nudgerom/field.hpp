#pragma once

#include <Eigen/Dense>

#include "nudgerom/grid.hpp"

namespace nudgerom {

/// Two-component nodal velocity on a periodic grid. Component arrays are
/// indexed (i, j) -> (x_i, y_j).
struct VelocityField {
  GridPtr grid;
  Eigen::ArrayXXd u1, u2;

  VelocityField() = default;
  explicit VelocityField(GridPtr g)
      : grid(std::move(g)),
        u1(Eigen::ArrayXXd::Zero(grid->nx(), grid->ny())),
        u2(Eigen::ArrayXXd::Zero(grid->nx(), grid->ny())) {}

  static VelocityField zero(GridPtr g) { return VelocityField(std::move(g)); }
};

/// Nodal scalar (pressure-like) field; mean is removed on request, matching
/// the zero-mean pressure space.
struct ScalarField {
  GridPtr grid;
  Eigen::ArrayXXd p;

  ScalarField() = default;
  explicit ScalarField(GridPtr g)
      : grid(std::move(g)), p(Eigen::ArrayXXd::Zero(grid->nx(), grid->ny())) {}

  double mean() const { return p.mean(); }
  void remove_mean() { p -= p.mean(); }
};

inline void require_same_grid(const VelocityField& a, const VelocityField& b) {
  if (!a.grid || !b.grid || !a.grid->same_layout(*b.grid)) {
    throw DimensionError("velocity fields live on different grids");
  }
}

inline void require_same_grid(const VelocityField& a, const Grid& g) {
  if (!a.grid || !a.grid->same_layout(g)) {
    throw DimensionError("velocity field does not match the expected grid");
  }
}

/// L2 inner product with the uniform quadrature weight hx*hy.
double inner_l2(const VelocityField& a, const VelocityField& b);
double norm_l2_sq(const VelocityField& a);
double norm_l2(const VelocityField& a);

double inner_l2(const ScalarField& a, const ScalarField& b);
double norm_l2(const ScalarField& a);

/// Pointwise linear combination helpers.
VelocityField axpy(double alpha, const VelocityField& x, const VelocityField& y);
VelocityField scaled(double alpha, const VelocityField& x);

}  // namespace nudgerom

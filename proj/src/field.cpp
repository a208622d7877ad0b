#include "nudgerom/field.hpp"

#include <cmath>

namespace nudgerom {

double inner_l2(const VelocityField& a, const VelocityField& b) {
  require_same_grid(a, b);
  const double w = a.grid->cell_weight();
  return w * ((a.u1 * b.u1).sum() + (a.u2 * b.u2).sum());
}

double norm_l2_sq(const VelocityField& a) {
  const double w = a.grid->cell_weight();
  return w * (a.u1.square().sum() + a.u2.square().sum());
}

double norm_l2(const VelocityField& a) { return std::sqrt(norm_l2_sq(a)); }

double inner_l2(const ScalarField& a, const ScalarField& b) {
  if (!a.grid || !b.grid || !a.grid->same_layout(*b.grid)) {
    throw DimensionError("scalar fields live on different grids");
  }
  return a.grid->cell_weight() * (a.p * b.p).sum();
}

double norm_l2(const ScalarField& a) {
  return std::sqrt(a.grid->cell_weight() * a.p.square().sum());
}

VelocityField axpy(double alpha, const VelocityField& x, const VelocityField& y) {
  require_same_grid(x, y);
  VelocityField out(x.grid);
  out.u1 = alpha * x.u1 + y.u1;
  out.u2 = alpha * x.u2 + y.u2;
  return out;
}

VelocityField scaled(double alpha, const VelocityField& x) {
  VelocityField out(x.grid);
  out.u1 = alpha * x.u1;
  out.u2 = alpha * x.u2;
  return out;
}

}  // namespace nudgerom

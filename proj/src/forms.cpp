#include "nudgerom/forms.hpp"

namespace nudgerom {

double b_form_pre(const VelocityField& w, const VelocityGradient& grad_u,
                  const VelocityField& v) {
  const double weight = w.grid->cell_weight();
  const Eigen::ArrayXXd conv1 = w.u1 * grad_u.du1_dx + w.u2 * grad_u.du1_dy;
  const Eigen::ArrayXXd conv2 = w.u1 * grad_u.du2_dx + w.u2 * grad_u.du2_dy;
  return weight * ((conv1 * v.u1).sum() + (conv2 * v.u2).sum());
}

double b_form(SpectralWorkspace& ws, const VelocityField& w,
              const VelocityField& u, const VelocityField& v) {
  require_same_grid(w, u);
  require_same_grid(w, v);
  require_same_grid(w, *ws.grid());
  const VelocityField wd = dealias(ws, w);
  const VelocityField vd = dealias(ws, v);
  const VelocityGradient gu = gradient(ws, dealias(ws, u));
  return b_form_pre(wd, gu, vd);
}

double b_star(SpectralWorkspace& ws, const VelocityField& w,
              const VelocityField& u, const VelocityField& v) {
  return 0.5 * (b_form(ws, w, u, v) - b_form(ws, w, v, u));
}

VelocityField convective_field(SpectralWorkspace& ws, const VelocityField& w,
                               const VelocityField& u) {
  require_same_grid(w, u);
  const VelocityField wd = dealias(ws, w);
  const VelocityGradient gu = gradient(ws, dealias(ws, u));
  VelocityField out(w.grid);
  out.u1 = wd.u1 * gu.du1_dx + wd.u2 * gu.du1_dy;
  out.u2 = wd.u1 * gu.du2_dx + wd.u2 * gu.du2_dy;
  return out;
}

}  // namespace nudgerom

#pragma once

#include "nudgerom/spectral.hpp"

namespace nudgerom {

/// Convection trilinear form b(w,u,v) = (w . grad u, v), dealiased per the
/// grid's dealias rule before forming products.
double b_form(SpectralWorkspace& ws, const VelocityField& w,
              const VelocityField& u, const VelocityField& v);

/// Skew-symmetric form b*(w,u,v) = (b(w,u,v) - b(w,v,u)) / 2; vanishes
/// identically when the last two slots coincide.
double b_star(SpectralWorkspace& ws, const VelocityField& w,
              const VelocityField& u, const VelocityField& v);

/// Kernel shared with ROM operator assembly: inputs are already dealiased and
/// the middle slot's gradient precomputed.
double b_form_pre(const VelocityField& w, const VelocityGradient& grad_u,
                  const VelocityField& v);

/// Pointwise w . grad u on dealiased inputs (the convective field behind
/// b_form).
VelocityField convective_field(SpectralWorkspace& ws, const VelocityField& w,
                               const VelocityField& u);

}  // namespace nudgerom

#pragma once

#include <cstdint>

#include "nudgerom/spectral.hpp"

namespace nudgerom {

/// Taylor-Green vortex, the closed-form decaying solution used for solver
/// verification. On a general box the wavenumbers scale as 2*pi/l per
/// direction; with zero forcing the exact solution is
/// amplitude * e^{-nu*(ax^2+ay^2)*t} times the t=0 pattern.
VelocityField taylor_green(GridPtr grid, double amplitude = 1.0);
double taylor_green_decay_rate(const Grid& grid, double nu);
double taylor_green_energy(const Grid& grid, double nu, double t,
                           double amplitude = 1.0);

/// Steady Kolmogorov body force f = (amplitude * sin(k * 2*pi*y/ly), 0).
VelocityField kolmogorov_forcing(GridPtr grid, double amplitude, int wavenumber);

/// Divergence-free random field, band-limited to integer modes |m| <= kmax
/// per direction, scaled to the requested L2 norm. Deterministic in the seed.
VelocityField random_solenoidal(SpectralWorkspace& ws, std::uint64_t seed,
                                int kmax, double target_norm);

/// Smooth random scalar, band-limited the same way (zero mean).
ScalarField random_scalar(SpectralWorkspace& ws, std::uint64_t seed, int kmax,
                          double target_norm);

}  // namespace nudgerom

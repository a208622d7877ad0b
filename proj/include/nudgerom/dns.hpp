#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nudgerom/flows.hpp"
#include "nudgerom/spectral.hpp"

namespace nudgerom {

enum class TimeStepper { backward_euler, bdf2 };

struct ForcingSpec {
  enum class Kind { none, kolmogorov };
  Kind kind = Kind::none;
  double amplitude = 0.0;
  int wavenumber = 0;

  static ForcingSpec none() { return {}; }
  static ForcingSpec kolmogorov(double amplitude, int wavenumber) {
    return {Kind::kolmogorov, amplitude, wavenumber};
  }
};

struct InitialConditionSpec {
  enum class Kind { taylor_green, random_seeded, from_file };
  Kind kind = Kind::taylor_green;
  double amplitude = 1.0;       // taylor_green / random norm
  std::uint64_t seed = 0;       // random_seeded
  int kmax = 4;                 // random_seeded band limit
  std::string path;             // from_file: snapshot file, last field is used

  static InitialConditionSpec taylor_green(double amplitude = 1.0) {
    InitialConditionSpec ic;
    ic.kind = Kind::taylor_green;
    ic.amplitude = amplitude;
    return ic;
  }
  static InitialConditionSpec random_seeded(std::uint64_t seed,
                                            double amplitude = 1.0,
                                            int kmax = 4) {
    InitialConditionSpec ic;
    ic.kind = Kind::random_seeded;
    ic.seed = seed;
    ic.amplitude = amplitude;
    ic.kmax = kmax;
    return ic;
  }
  static InitialConditionSpec from_file(std::string path) {
    InitialConditionSpec ic;
    ic.kind = Kind::from_file;
    ic.path = std::move(path);
    return ic;
  }
};

struct DnsConfig {
  GridPtr grid;
  double nu = 1e-2;
  double dt = 1e-3;
  double t_end = 1.0;
  ForcingSpec forcing;
  InitialConditionSpec initial_condition;
  int snapshot_stride = 1;
  double snapshot_window_start = 0.0;  // record snapshots from this time on
  TimeStepper stepper = TimeStepper::bdf2;

  void validate() const;
  std::uint64_t hash() const;
};

/// Stored truth trajectory samples (physical space, double precision).
struct SnapshotSet {
  GridPtr grid;
  std::vector<double> times;
  std::vector<VelocityField> fields;
  std::uint64_t config_hash = 0;

  int size() const { return static_cast<int>(fields.size()); }
  /// Hash of times and raw field data; bitwise reproducibility check.
  std::uint64_t content_hash() const;
};

struct DnsResult {
  SnapshotSet snapshots;
  VelocityField final_field;
  std::vector<double> energy_times;
  std::vector<double> energies;  // 0.5 * ||u||^2 at every step
  std::vector<std::string> warnings;
};

/// Called with the physical-space solution every `stride` steps (step 0
/// included), once t reaches t_start.
struct StepProbe {
  int stride = 1;
  double t_start = 0.0;
  std::function<void(std::int64_t step, double t, const VelocityField& u)> fn;
};

/// Run the truth solver. Viscosity is treated implicitly (diagonal in Fourier
/// space); the skew-symmetric advection term is explicit, with the BDF2
/// branch convecting the extrapolated field 2u^n - u^{n-1}. The first BDF2
/// step falls back to backward Euler. Throws NumericalError on blow-up.
DnsResult dns_run(const DnsConfig& config,
                  const std::optional<StepProbe>& probe = std::nullopt);

struct OrderCheckResult {
  double rate = 0.0;
  std::vector<double> dts;
  std::vector<double> errors;  // |E_num(T) - E_exact(T)| on Taylor-Green
  bool non_monotone = false;
};

/// Self-convergence of the energy error on the manufactured Taylor-Green
/// problem under dt halving. `config` supplies grid/nu/t_end/stepper; the
/// initial condition and forcing are overridden to the manufactured setup.
OrderCheckResult temporal_order_check(const DnsConfig& config, int refinements);

struct PeriodicityReport {
  std::vector<double> peak_times;
  std::vector<double> peak_values;
  bool periodic = false;       // successive peak values within rel_tol
  double period = 0.0;         // mean spacing of successive peaks
  double max_rel_peak_diff = 0.0;
};

/// Oscillation-period detection from an energy signal via local maxima.
PeriodicityReport analyze_energy_periodicity(const std::vector<double>& times,
                                             const std::vector<double>& energies,
                                             double rel_tol = 0.01);

}  // namespace nudgerom

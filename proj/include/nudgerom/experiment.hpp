#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nudgerom/rom.hpp"

namespace nudgerom {

enum class ExperimentKind {
  rate_table,
  mu_sweep,
  inaccurate_basis,
  adaptive_compare,
  verify,
};

std::string to_string(ExperimentKind kind);

struct ObservationConfig {
  double H = 0.0;
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;
};

struct PodConfig {
  double rank_tol = 1e-12;
  bool center = false;
  std::optional<double> window_fraction;  // build the basis from a prefix
  std::optional<double> manual_period;
};

struct DaromSection {
  int r = 8;
  bool adaptive = false;
  double mu = 0.0;  // constant nudging parameter; mu0 when adaptive
  double dt = 1e-2;
  double t_end = 1.0;  // horizon relative to the assimilation window start
  TimeStepper stepper = TimeStepper::bdf2;
  PicardOptions picard;
  AdaptiveOptions adaptive_opts;
  DaConfig::InitialCoefficients ic = DaConfig::InitialCoefficients::zero;
};

struct ExperimentSection {
  std::string out_dir = ".";
  std::vector<int> r_list;
  std::vector<double> mu_list;
  std::vector<double> window_fractions;
  double t_end_periods = 0.0;  // rate-table horizon in detected periods
};

/// One structured document binding all pipeline stages. Unknown keys in any
/// section are configuration errors.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::verify;
  DnsConfig dns;
  ObservationConfig observation;
  PodConfig pod;
  DaromSection darom;
  ExperimentSection experiment;

  std::uint64_t hash() const;
};

ExperimentConfig parse_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_json(const std::string& text,
                                       const std::string& origin);

/// Shared products of the dns -> observe -> pod stages.
struct PipelineArtifacts {
  SnapshotSet snapshots;        // full assimilation window
  PodBasis basis;               // possibly from a windowed prefix
  CoarseMesh mesh;
  double window_start = 0.0;    // first snapshot time
  double period = 0.0;          // detected oscillation period (0: none)
  bool periodic = false;
  std::vector<std::string> warnings;
};

PipelineArtifacts run_pipeline(const ExperimentConfig& config);

/// Observation stream restricted to the DA step times implied by `dt`.
ObservationStream observations_for_run(const PipelineArtifacts& art,
                                       const ExperimentConfig& config,
                                       double t_end_abs, double dt);

// ---------------------------------------------------------------------------
// Reports

struct RateTableRow {
  int r = 0;
  double tail = 0.0;        // eigentail(r)
  double final_error = 0.0;
  double rate = 0.0;        // vs previous row; NaN in the first row
  bool flagged = false;
  std::string note;
};

struct RateTable {
  std::vector<RateTableRow> rows;
  double t_final = 0.0;
  std::vector<std::string> provenance;  // "key=hex" lines
};

/// rate_k = log(err_k / err_{k-1}) / log(tail_k / tail_{k-1}); rows with
/// identical errors (or tails) report rate 0 and are flagged.
std::vector<double> fitted_rates(const std::vector<double>& tails,
                                 const std::vector<double>& errors,
                                 std::vector<bool>* flags = nullptr);

RateTable compute_rate_table(const ExperimentConfig& config,
                             const PipelineArtifacts& art);
void write_rate_table_csv(const std::string& path, const RateTable& table);

struct SweepEntry {
  double mu = 0.0;
  bool adaptive = false;
  std::string csv_path;
  double time_avg_energy_err = 0.0;  // mean |E_rom - E_true| / E_true
  double time_avg_l2_error = 0.0;
  double final_l2_error = 0.0;
  double sup_norm_a = 0.0;
  bool mu_changed = false;
  bool failed = false;
  std::string note;
};

struct SweepReport {
  std::vector<SweepEntry> entries;
  std::string summary_path;
  std::vector<std::string> provenance;
};

/// Constant-mu fan-out; runs in parallel up to NUDGEROM_THREADS.
SweepReport mu_sweep_report(const ExperimentConfig& config,
                            const PipelineArtifacts& art);

struct InaccurateBasisReport {
  struct PerBasis {
    double fraction = 0.0;
    int d = 0;
    SweepReport sweep;
    double mu0_energy_err = 0.0;
    double best_mu = 0.0;
    double best_energy_err = 0.0;
  };
  std::vector<PerBasis> bases;
  std::vector<std::string> provenance;
};

InaccurateBasisReport inaccurate_basis_report(const ExperimentConfig& config,
                                              const PipelineArtifacts& art);

struct AdaptiveCompareReport {
  SweepReport constant_runs;  // includes mu = 0
  SweepEntry adaptive_run;
  double best_constant_energy_err = 0.0;
  std::vector<std::string> provenance;
};

AdaptiveCompareReport adaptive_compare_report(const ExperimentConfig& config,
                                              const PipelineArtifacts& art);

// ---------------------------------------------------------------------------
// Verification battery (manufactured solutions and operator properties).

struct VerifyCheck {
  std::string name;
  bool pass = false;
  double value = 0.0;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool all_pass = true;
};

VerifyReport run_verification();

// ---------------------------------------------------------------------------
// Plot emission: a deterministic matplotlib script referencing only the given
// CSVs, plus SVG rendering when python3 is available.

struct PlotRequest {
  std::vector<std::string> csv_paths;
  ExperimentKind kind = ExperimentKind::mu_sweep;
  std::string script_path;  // output .py
  std::string figure_path;  // output .svg the script writes
};

/// Writes the script and returns its path. Panel selection: energy and error
/// always (error only when any input carries truth); mu and DAT panels only
/// when some input's mu history actually varies.
std::string emit_plot_script(const PlotRequest& request);

/// Runs the script through python3; false (with log) when rendering fails.
bool render_plots(const std::string& script_path, std::string* log = nullptr);

/// Number of worker threads for sweeps: NUDGEROM_THREADS or hardware default.
int sweep_thread_count(int jobs);

}  // namespace nudgerom

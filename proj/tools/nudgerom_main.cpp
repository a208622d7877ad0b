// nudgerom: truth solver -> coarse observations -> POD basis -> nudged ROM,
// plus the experiment harness and verification battery.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "nudgerom/experiment.hpp"
#include "nudgerom/io.hpp"

namespace fs = std::filesystem;
using namespace nudgerom;

namespace {

int run_dns_cmd(const std::string& config_path, const std::string& out_path) {
  const ExperimentConfig config = parse_experiment_config(config_path);
  if (!config.dns.grid) {
    throw ConfigError("dns: config file carries no dns section");
  }
  const DnsResult result = dns_run(config.dns);
  for (const std::string& w : result.warnings) {
    std::cerr << "warning: " << w << "\n";
  }
  if (result.snapshots.size() == 0) {
    throw ConfigError("dns: no snapshots recorded; check snapshot_window_start");
  }
  write_snapshots(out_path, result.snapshots);
  std::printf("wrote %d snapshots (t in [%g, %g]) to %s\n",
              result.snapshots.size(), result.snapshots.times.front(),
              result.snapshots.times.back(), out_path.c_str());
  std::printf("snapshots_hash=%s\n",
              hash_hex(result.snapshots.content_hash()).c_str());
  return 0;
}

int run_observe_cmd(const std::string& snapshots_path, double H,
                    const std::string& out_path, double noise_sigma,
                    std::uint64_t noise_seed) {
  const SnapshotSet snaps = read_snapshots(snapshots_path);
  const CoarseMesh mesh(snaps.grid, H);
  ObservationNoise noise;
  noise.sigma = noise_sigma;
  noise.seed = noise_seed;
  const ObservationStream obs =
      build_observation_stream(snaps, mesh, snaps.times, noise);
  write_observations(out_path, obs);
  std::printf("wrote %d observations on a %dx%d coarse mesh (H=%g) to %s\n",
              obs.size(), mesh.ncx(), mesh.ncy(), mesh.H(), out_path.c_str());
  return 0;
}

int run_pod_cmd(const std::string& snapshots_path, const std::string& out_path,
                std::optional<double> window_fraction,
                std::optional<double> manual_period, double rank_tol,
                bool center) {
  SnapshotSet snaps = read_snapshots(snapshots_path);
  if (window_fraction) {
    snaps = windowed_snapshots(snaps, *window_fraction, manual_period);
    std::printf("windowed to %d snapshots (t in [%g, %g])\n", snaps.size(),
                snaps.times.front(), snaps.times.back());
  }
  SpectralWorkspace ws(snaps.grid);
  const PodBasis basis = build_pod(ws, snaps, PodOptions{rank_tol, center});
  write_pod_basis(out_path, basis);
  std::printf("built POD basis: d=%d, lambda_1=%.6e, wrote %s\n", basis.d(),
              basis.eigenvalues[0], out_path.c_str());
  for (int r : {4, 8, 12, 16, 20}) {
    if (r <= basis.d()) {
      std::printf("  eigentail(r=%d) = %.6e\n", r, eigentail(basis, r));
    }
  }
  return 0;
}

struct DaromCliArgs {
  std::string basis_path, obs_path, out_path, truth_path, ops_out;
  int r = 8;
  std::string mu = "0";
  std::string stepper = "bdf2";
  double dt = 1e-2;
  double t_end = 1.0;
  double mu0 = 0.0;
  double nu = 0.0;
  double forcing_amplitude = 0.0;
  int forcing_wavenumber = 0;
  int check_stride = 10;
  double mu_step = 1.0;
  double energy_band = 0.02;
  double mu_max = 1e6;
};

DaConfig darom_config_from_cli(const DaromCliArgs& args, double t_start) {
  DaConfig da;
  da.dt = args.dt;
  da.t_start = t_start;
  da.t_end = t_start + args.t_end;
  da.stepper = args.stepper == "be" ? TimeStepper::backward_euler
                                    : TimeStepper::bdf2;
  if (args.mu == "adaptive") {
    da.mu0 = args.mu0;
    da.adaptive.enabled = true;
    da.adaptive.check_stride = args.check_stride;
    da.adaptive.mu_step = args.mu_step;
    da.adaptive.energy_band = args.energy_band;
    da.adaptive.mu_max = args.mu_max;
  } else {
    da.mu0 = std::stod(args.mu);
  }
  return da;
}

int run_darom_cmd(const DaromCliArgs& args) {
  const PodBasis basis = read_pod_basis(args.basis_path);
  const ObservationStream obs = read_observations(args.obs_path);
  if (!(args.nu > 0.0)) {
    throw ConfigError("darom: --nu (viscosity of the truth problem) required");
  }
  ForcingSpec forcing = ForcingSpec::none();
  if (args.forcing_wavenumber > 0) {
    forcing =
        ForcingSpec::kolmogorov(args.forcing_amplitude, args.forcing_wavenumber);
  }
  SpectralWorkspace ws(basis.grid);
  const RomOperators ops =
      assemble(ws, basis, args.r, obs.mesh, forcing, args.nu);
  if (!args.ops_out.empty()) {
    write_rom_operators(args.ops_out, ops);
    std::printf("wrote ROM operators to %s\n", args.ops_out.c_str());
  }

  std::optional<TruthSeries> truth;
  if (!args.truth_path.empty()) {
    truth = project_truth(basis, args.r, read_snapshots(args.truth_path));
  }

  const DaConfig da = darom_config_from_cli(args, obs.times.front());
  const DaRunResult run =
      run_da_rom(ops, da, &obs, truth ? &*truth : nullptr);
  for (const std::string& w : run.warnings) std::cerr << "warning: " << w << "\n";

  std::vector<std::string> comments;
  comments.push_back("generated by nudgerom darom");
  comments.push_back("basis=" + args.basis_path);
  comments.push_back("obs=" + args.obs_path);
  comments.push_back("basis_snapshot_hash=" + hash_hex(basis.snapshot_hash));
  comments.push_back("r=" + std::to_string(args.r));
  comments.push_back("mu=" + args.mu);
  comments.push_back("da_config_hash=" + hash_hex(da.hash()));
  write_diagnostics_csv(args.out_path, run.rows, comments);
  std::printf("ran %zu steps; final energy %.6e; wrote %s\n",
              run.rows.size() - 1, run.rows.back().energy_rom,
              args.out_path.c_str());
  if (std::isfinite(run.rows.back().l2_error)) {
    std::printf("final l2 error vs truth: %.6e\n", run.rows.back().l2_error);
  }
  return 0;
}

int report_exit_code(bool ok) { return ok ? 0 : 3; }

void print_sweep(const SweepReport& report) {
  std::printf("%-12s %-9s %-22s %-22s %s\n", "mu", "adaptive",
              "time_avg_energy_err", "time_avg_l2_error", "csv");
  for (const SweepEntry& e : report.entries) {
    if (e.failed) {
      std::printf("%-12g %-9d FAILED: %s\n", e.mu, e.adaptive ? 1 : 0,
                  e.note.c_str());
    } else {
      std::printf("%-12g %-9d %-22.6e %-22.6e %s\n", e.mu, e.adaptive ? 1 : 0,
                  e.time_avg_energy_err, e.time_avg_l2_error,
                  e.csv_path.c_str());
    }
  }
  std::printf("summary: %s\n", report.summary_path.c_str());
}

void emit_and_render(const std::vector<std::string>& csvs, ExperimentKind kind,
                     const std::string& out_dir, const std::string& stem) {
  if (csvs.empty()) return;
  PlotRequest req;
  req.csv_paths = csvs;
  req.kind = kind;
  req.script_path = (fs::path(out_dir) / (stem + "_plots.py")).string();
  req.figure_path = (fs::path(out_dir) / (stem + ".svg")).string();
  emit_plot_script(req);
  std::string log;
  if (render_plots(req.script_path, &log)) {
    std::printf("figure: %s\n", req.figure_path.c_str());
  } else {
    std::fprintf(stderr, "plot rendering failed (script kept at %s)\n%s",
                 req.script_path.c_str(), log.c_str());
  }
}

std::vector<std::string> sweep_csvs(const SweepReport& report) {
  std::vector<std::string> out;
  for (const SweepEntry& e : report.entries) {
    if (!e.failed) out.push_back(e.csv_path);
  }
  return out;
}

int run_report_cmd(const std::string& config_path) {
  const ExperimentConfig config = parse_experiment_config(config_path);
  if (config.kind == ExperimentKind::verify) {
    const VerifyReport report = run_verification();
    for (const VerifyCheck& c : report.checks) {
      std::printf("[%s] %-32s value=%.6g  (%s)\n", c.pass ? "PASS" : "FAIL",
                  c.name.c_str(), c.value, c.detail.c_str());
    }
    return report_exit_code(report.all_pass);
  }

  fs::create_directories(config.experiment.out_dir);
  const PipelineArtifacts art = run_pipeline(config);
  for (const std::string& w : art.warnings) std::cerr << "warning: " << w << "\n";
  std::printf("pipeline: %d snapshots, basis d=%d, period=%.4f%s\n",
              art.snapshots.size(), art.basis.d(), art.period,
              art.periodic ? "" : " (not certified periodic)");

  switch (config.kind) {
    case ExperimentKind::rate_table: {
      const RateTable table = compute_rate_table(config, art);
      const std::string path =
          (fs::path(config.experiment.out_dir) / "rate_table.csv").string();
      write_rate_table_csv(path, table);
      std::printf("%-6s %-14s %-14s %-8s\n", "r", "eigentail", "error", "rate");
      for (const RateTableRow& row : table.rows) {
        std::printf("%-6d %-14.4e %-14.4e %-8.3f %s\n", row.r, row.tail,
                    row.final_error, row.rate, row.note.c_str());
      }
      std::printf("table: %s\n", path.c_str());
      return 0;
    }
    case ExperimentKind::mu_sweep: {
      const SweepReport report = mu_sweep_report(config, art);
      print_sweep(report);
      emit_and_render(sweep_csvs(report), config.kind,
                      config.experiment.out_dir, "mu_sweep");
      return 0;
    }
    case ExperimentKind::inaccurate_basis: {
      const InaccurateBasisReport report = inaccurate_basis_report(config, art);
      for (const auto& per : report.bases) {
        std::printf("window fraction %.2f (d=%d): mu=0 err %.6e, best mu=%g "
                    "err %.6e\n",
                    per.fraction, per.d, per.mu0_energy_err, per.best_mu,
                    per.best_energy_err);
        print_sweep(per.sweep);
        char tag[32];
        std::snprintf(tag, sizeof(tag), "window%02.0f", 100.0 * per.fraction);
        emit_and_render(sweep_csvs(per.sweep), config.kind,
                        config.experiment.out_dir, tag);
      }
      return 0;
    }
    case ExperimentKind::adaptive_compare: {
      const AdaptiveCompareReport report = adaptive_compare_report(config, art);
      print_sweep(report.constant_runs);
      if (report.adaptive_run.failed) {
        std::printf("adaptive run FAILED: %s\n", report.adaptive_run.note.c_str());
        return 3;
      }
      std::printf("adaptive (mu0=%g): time_avg_energy_err %.6e (best constant "
                  "%.6e)\n",
                  config.darom.mu, report.adaptive_run.time_avg_energy_err,
                  report.best_constant_energy_err);
      std::vector<std::string> csvs = sweep_csvs(report.constant_runs);
      csvs.push_back(report.adaptive_run.csv_path);
      emit_and_render(csvs, config.kind, config.experiment.out_dir, "adaptive");
      return 0;
    }
    default:
      throw ConfigError("unhandled experiment kind");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nudged proper-orthogonal-decomposition ROM toolkit"};
  app.require_subcommand(1);

  // dns
  auto* dns = app.add_subcommand("dns", "run the truth solver, store snapshots");
  std::string dns_config, dns_out;
  dns->add_option("--config", dns_config, "experiment config (dns section used)")
      ->required();
  dns->add_option("--out", dns_out, "snapshot file to write")->required();

  // observe
  auto* observe =
      app.add_subcommand("observe", "coarse-observe stored snapshots");
  std::string obs_snapshots, obs_out;
  double obs_h = 0.0, obs_noise_sigma = 0.0;
  std::uint64_t obs_noise_seed = 0;
  observe->add_option("--snapshots", obs_snapshots, "snapshot file")->required();
  observe->add_option("--H", obs_h, "coarse cell width")->required();
  observe->add_option("--out", obs_out, "observation file to write")->required();
  observe->add_option("--noise-sigma", obs_noise_sigma,
                      "additive Gaussian noise stddev (default off)");
  observe->add_option("--noise-seed", obs_noise_seed, "noise RNG seed");

  // pod
  auto* pod = app.add_subcommand("pod", "build a POD basis from snapshots");
  std::string pod_snapshots, pod_out;
  double pod_rank_tol = 1e-12;
  bool pod_center = false;
  double pod_window_fraction = -1.0, pod_manual_period = -1.0;
  pod->add_option("--snapshots", pod_snapshots, "snapshot file")->required();
  pod->add_option("--out", pod_out, "basis file to write")->required();
  pod->add_option("--window-fraction", pod_window_fraction,
                  "use only this fraction of one oscillation period");
  pod->add_option("--period", pod_manual_period,
                  "oscillation period override for --window-fraction");
  pod->add_option("--rank-tol", pod_rank_tol, "relative eigenvalue cutoff");
  pod->add_flag("--center", pod_center, "subtract the snapshot mean");

  // darom
  auto* darom = app.add_subcommand("darom", "time-step the nudged ROM");
  DaromCliArgs da_args;
  darom->add_option("--basis", da_args.basis_path, "POD basis file")->required();
  darom->add_option("--obs", da_args.obs_path, "observation file")->required();
  darom->add_option("--r", da_args.r, "ROM dimension")->required();
  darom->add_option("--mu", da_args.mu, "nudging parameter or 'adaptive'")
      ->required();
  darom->add_option("--stepper", da_args.stepper, "be | bdf2")
      ->check(CLI::IsMember({"be", "bdf2"}));
  darom->add_option("--dt", da_args.dt, "ROM time step")->required();
  darom->add_option("--t-end", da_args.t_end,
                    "horizon measured from the window start")
      ->required();
  darom->add_option("--out", da_args.out_path, "diagnostics CSV")->required();
  darom->add_option("--nu", da_args.nu, "viscosity of the truth problem")
      ->required();
  darom->add_option("--forcing-amplitude", da_args.forcing_amplitude,
                    "Kolmogorov forcing amplitude (0: unforced)");
  darom->add_option("--forcing-wavenumber", da_args.forcing_wavenumber,
                    "Kolmogorov forcing wavenumber (0: unforced)");
  darom->add_option("--truth", da_args.truth_path,
                    "snapshot file for error diagnostics");
  darom->add_option("--ops-out", da_args.ops_out,
                    "also export the assembled ROM operators");
  darom->add_option("--mu0", da_args.mu0, "initial mu for adaptive runs");
  darom->add_option("--check-stride", da_args.check_stride,
                    "adaptive controller stride (steps)");
  darom->add_option("--mu-step", da_args.mu_step, "adaptive mu increment");
  darom->add_option("--energy-band", da_args.energy_band,
                    "adaptive relative energy dead-band");
  darom->add_option("--mu-max", da_args.mu_max, "adaptive mu upper clamp");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "fan out constant-mu DA-ROM runs");
  std::string sweep_config, sweep_mu_list;
  sweep->add_option("--config", sweep_config, "experiment config file")
      ->required();
  sweep->add_option("--mu-list", sweep_mu_list,
                    "comma-separated mu values (overrides the config)");

  // rate-table
  auto* rate = app.add_subcommand(
      "rate-table", "error vs eigenvalue-tail truncation rates");
  std::string rate_config;
  rate->add_option("--config", rate_config, "experiment config file")->required();

  // report
  auto* report =
      app.add_subcommand("report", "run the experiment named in the config");
  std::string report_config;
  report->add_option("--config", report_config, "experiment config file")
      ->required();

  // verify
  auto* verify = app.add_subcommand(
      "verify", "manufactured-solution and operator-property battery");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (dns->parsed()) return run_dns_cmd(dns_config, dns_out);
    if (observe->parsed()) {
      return run_observe_cmd(obs_snapshots, obs_h, obs_out, obs_noise_sigma,
                             obs_noise_seed);
    }
    if (pod->parsed()) {
      std::optional<double> wf, mp;
      if (pod_window_fraction > 0.0) wf = pod_window_fraction;
      if (pod_manual_period > 0.0) mp = pod_manual_period;
      return run_pod_cmd(pod_snapshots, pod_out, wf, mp, pod_rank_tol,
                         pod_center);
    }
    if (darom->parsed()) return run_darom_cmd(da_args);
    if (sweep->parsed()) {
      ExperimentConfig config = parse_experiment_config(sweep_config);
      config.kind = ExperimentKind::mu_sweep;
      if (!sweep_mu_list.empty()) {
        config.experiment.mu_list.clear();
        std::stringstream ss(sweep_mu_list);
        for (std::string tok; std::getline(ss, tok, ',');) {
          config.experiment.mu_list.push_back(std::stod(tok));
        }
      }
      fs::create_directories(config.experiment.out_dir);
      const PipelineArtifacts art = run_pipeline(config);
      const SweepReport rep = mu_sweep_report(config, art);
      print_sweep(rep);
      emit_and_render(sweep_csvs(rep), config.kind, config.experiment.out_dir,
                      "mu_sweep");
      return 0;
    }
    if (rate->parsed()) {
      ExperimentConfig config = parse_experiment_config(rate_config);
      config.kind = ExperimentKind::rate_table;
      fs::create_directories(config.experiment.out_dir);
      const PipelineArtifacts art = run_pipeline(config);
      const RateTable table = compute_rate_table(config, art);
      const std::string path =
          (fs::path(config.experiment.out_dir) / "rate_table.csv").string();
      write_rate_table_csv(path, table);
      std::printf("%-6s %-14s %-14s %-8s\n", "r", "eigentail", "error", "rate");
      for (const RateTableRow& row : table.rows) {
        std::printf("%-6d %-14.4e %-14.4e %-8.3f %s\n", row.r, row.tail,
                    row.final_error, row.rate, row.note.c_str());
      }
      std::printf("table: %s\n", path.c_str());
      return 0;
    }
    if (report->parsed()) return run_report_cmd(report_config);
    if (verify->parsed()) {
      const VerifyReport rep = run_verification();
      for (const VerifyCheck& c : rep.checks) {
        std::printf("[%s] %-32s value=%.6g  (%s)\n", c.pass ? "PASS" : "FAIL",
                    c.name.c_str(), c.value, c.detail.c_str());
      }
      return report_exit_code(rep.all_pass);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DimensionError& e) {
    std::fprintf(stderr, "dimension error: %s\n", e.what());
    return 2;
  } catch (const RangeError& e) {
    std::fprintf(stderr, "range error: %s\n", e.what());
    return 2;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

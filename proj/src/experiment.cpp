#include "nudgerom/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "nudgerom/forms.hpp"
#include "nudgerom/io.hpp"

namespace nudgerom {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (allowed.find(it.key()) == allowed.end()) {
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
  }
}

const json& require_key(const json& obj, const char* key,
                        const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw ConfigError("missing key '" + std::string(key) + "' in " + where);
  }
  return *it;
}

double num(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError("expected a number for " + where);
  return v.get<double>();
}

TimeStepper parse_stepper(const std::string& s, const std::string& where) {
  if (s == "bdf2") return TimeStepper::bdf2;
  if (s == "be" || s == "backward_euler") return TimeStepper::backward_euler;
  throw ConfigError("unknown stepper '" + s + "' in " + where);
}

DnsConfig parse_dns_section(const json& j) {
  check_keys(j,
             {"nx", "ny", "lx", "ly", "dealias_fraction", "nu", "dt", "t_end",
              "forcing", "initial_condition", "snapshot_stride",
              "snapshot_window_start", "stepper"},
             "dns");
  DnsConfig cfg;
  const int nx = require_key(j, "nx", "dns").get<int>();
  const int ny = require_key(j, "ny", "dns").get<int>();
  const double lx = j.value("lx", kTwoPi);
  const double ly = j.value("ly", kTwoPi);
  const double frac = j.value("dealias_fraction", 2.0 / 3.0);
  cfg.grid = make_grid(nx, ny, lx, ly, frac);
  cfg.nu = num(require_key(j, "nu", "dns"), "dns.nu");
  cfg.dt = num(require_key(j, "dt", "dns"), "dns.dt");
  cfg.t_end = num(require_key(j, "t_end", "dns"), "dns.t_end");
  cfg.snapshot_stride = j.value("snapshot_stride", 1);
  cfg.snapshot_window_start = j.value("snapshot_window_start", 0.0);
  cfg.stepper = parse_stepper(j.value("stepper", std::string("bdf2")), "dns");

  if (j.contains("forcing")) {
    const json& f = j.at("forcing");
    check_keys(f, {"type", "amplitude", "wavenumber"}, "dns.forcing");
    const std::string type = require_key(f, "type", "dns.forcing").get<std::string>();
    if (type == "none") {
      cfg.forcing = ForcingSpec::none();
    } else if (type == "kolmogorov") {
      cfg.forcing = ForcingSpec::kolmogorov(
          num(require_key(f, "amplitude", "dns.forcing"), "amplitude"),
          require_key(f, "wavenumber", "dns.forcing").get<int>());
    } else {
      throw ConfigError("unknown forcing type '" + type + "'");
    }
  }

  if (j.contains("initial_condition")) {
    const json& ic = j.at("initial_condition");
    check_keys(ic, {"type", "amplitude", "seed", "kmax", "path"},
               "dns.initial_condition");
    const std::string type =
        require_key(ic, "type", "dns.initial_condition").get<std::string>();
    if (type == "taylor_green") {
      cfg.initial_condition =
          InitialConditionSpec::taylor_green(ic.value("amplitude", 1.0));
    } else if (type == "random_seeded") {
      cfg.initial_condition = InitialConditionSpec::random_seeded(
          ic.value("seed", std::uint64_t{0}), ic.value("amplitude", 1.0),
          ic.value("kmax", 4));
    } else if (type == "from_file") {
      const std::string path =
          require_key(ic, "path", "dns.initial_condition").get<std::string>();
      if (!fs::exists(path)) {
        throw ConfigError("initial-condition file does not exist: " + path);
      }
      cfg.initial_condition = InitialConditionSpec::from_file(path);
    } else {
      throw ConfigError("unknown initial condition type '" + type + "'");
    }
  }
  return cfg;
}

ObservationConfig parse_observation_section(const json& j) {
  check_keys(j, {"H", "noise_sigma", "noise_seed"}, "observation");
  ObservationConfig cfg;
  cfg.H = num(require_key(j, "H", "observation"), "observation.H");
  cfg.noise_sigma = j.value("noise_sigma", 0.0);
  cfg.noise_seed = j.value("noise_seed", std::uint64_t{0});
  return cfg;
}

PodConfig parse_pod_section(const json& j) {
  check_keys(j, {"rank_tol", "center", "window_fraction", "manual_period"},
             "pod");
  PodConfig cfg;
  cfg.rank_tol = j.value("rank_tol", 1e-12);
  cfg.center = j.value("center", false);
  if (j.contains("window_fraction")) {
    cfg.window_fraction = num(j.at("window_fraction"), "pod.window_fraction");
  }
  if (j.contains("manual_period")) {
    cfg.manual_period = num(j.at("manual_period"), "pod.manual_period");
  }
  return cfg;
}

DaromSection parse_darom_section(const json& j) {
  check_keys(j,
             {"r", "mu", "mu0", "dt", "t_end", "stepper", "picard_tol",
              "picard_max_iters", "ic", "adaptive"},
             "darom");
  DaromSection cfg;
  cfg.r = require_key(j, "r", "darom").get<int>();
  const json& mu = require_key(j, "mu", "darom");
  if (mu.is_string()) {
    if (mu.get<std::string>() != "adaptive") {
      throw ConfigError("darom.mu must be a number or \"adaptive\"");
    }
    cfg.adaptive = true;
    cfg.adaptive_opts.enabled = true;
    cfg.mu = j.value("mu0", 0.0);
  } else {
    cfg.mu = num(mu, "darom.mu");
  }
  cfg.dt = num(require_key(j, "dt", "darom"), "darom.dt");
  cfg.t_end = num(require_key(j, "t_end", "darom"), "darom.t_end");
  cfg.stepper = parse_stepper(j.value("stepper", std::string("bdf2")), "darom");
  cfg.picard.tol = j.value("picard_tol", 1e-10);
  cfg.picard.max_iters = j.value("picard_max_iters", 25);
  const std::string ic = j.value("ic", std::string("zero"));
  if (ic == "zero") {
    cfg.ic = DaConfig::InitialCoefficients::zero;
  } else if (ic == "truth_projection") {
    cfg.ic = DaConfig::InitialCoefficients::truth_projection;
  } else {
    throw ConfigError("unknown darom.ic '" + ic + "'");
  }
  if (j.contains("adaptive")) {
    const json& a = j.at("adaptive");
    check_keys(a, {"check_stride", "mu_step", "energy_band", "mu_min", "mu_max"},
               "darom.adaptive");
    cfg.adaptive_opts.check_stride = a.value("check_stride", 10);
    cfg.adaptive_opts.mu_step = a.value("mu_step", 1.0);
    cfg.adaptive_opts.energy_band = a.value("energy_band", 0.02);
    cfg.adaptive_opts.mu_min = a.value("mu_min", 0.0);
    cfg.adaptive_opts.mu_max = a.value("mu_max", 1e6);
  }
  cfg.adaptive_opts.enabled = cfg.adaptive;
  return cfg;
}

ExperimentSection parse_experiment_section(const json& j) {
  check_keys(j,
             {"out_dir", "r_list", "mu_list", "window_fractions",
              "t_end_periods"},
             "experiment");
  ExperimentSection cfg;
  cfg.out_dir = j.value("out_dir", std::string("."));
  if (j.contains("r_list")) cfg.r_list = j.at("r_list").get<std::vector<int>>();
  if (j.contains("mu_list")) {
    cfg.mu_list = j.at("mu_list").get<std::vector<double>>();
  }
  if (j.contains("window_fractions")) {
    cfg.window_fractions = j.at("window_fractions").get<std::vector<double>>();
  }
  cfg.t_end_periods = j.value("t_end_periods", 0.0);
  return cfg;
}

std::string label_from_path(const std::string& path) {
  return fs::path(path).stem().string();
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t observation_content_hash(const ObservationStream& obs) {
  Fnv1a h;
  h.add(obs.times);
  for (const CoarseField& c : obs.coarse_values) {
    h.bytes(c.c1.data(), c.c1.size() * sizeof(double));
    h.bytes(c.c2.data(), c.c2.size() * sizeof(double));
  }
  h.add(obs.true_energy);
  return h.value();
}

std::uint64_t basis_content_hash(const PodBasis& basis) {
  Fnv1a h;
  h.bytes(basis.eigenvalues.data(), basis.d() * sizeof(double));
  for (const VelocityField& m : basis.modes) {
    h.bytes(m.u1.data(), m.u1.size() * sizeof(double));
    h.bytes(m.u2.data(), m.u2.size() * sizeof(double));
  }
  return h.value();
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::rate_table: return "rate_table";
    case ExperimentKind::mu_sweep: return "mu_sweep";
    case ExperimentKind::inaccurate_basis: return "inaccurate_basis";
    case ExperimentKind::adaptive_compare: return "adaptive_compare";
    case ExperimentKind::verify: return "verify";
  }
  return "unknown";
}

std::uint64_t ExperimentConfig::hash() const {
  Fnv1a h;
  h.add(std::string("experiment"));
  h.add(static_cast<int>(kind));
  h.add(dns.hash());
  h.add(observation.H).add(observation.noise_sigma);
  h.add(static_cast<std::uint64_t>(observation.noise_seed));
  h.add(pod.rank_tol).add(pod.center ? 1 : 0);
  h.add(pod.window_fraction.value_or(-1.0));
  h.add(pod.manual_period.value_or(-1.0));
  h.add(darom.r).add(darom.adaptive ? 1 : 0).add(darom.mu).add(darom.dt);
  h.add(darom.t_end).add(static_cast<int>(darom.stepper));
  h.add(darom.picard.tol).add(darom.picard.max_iters);
  h.add(darom.adaptive_opts.check_stride).add(darom.adaptive_opts.mu_step);
  h.add(darom.adaptive_opts.energy_band);
  h.add(darom.adaptive_opts.mu_min).add(darom.adaptive_opts.mu_max);
  h.add(static_cast<int>(darom.ic));
  for (int r : experiment.r_list) h.add(r);
  for (double m : experiment.mu_list) h.add(m);
  for (double f : experiment.window_fractions) h.add(f);
  h.add(experiment.t_end_periods);
  return h.value();
}

ExperimentConfig parse_experiment_json(const std::string& text,
                                       const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse " + origin + ": " + e.what());
  }
  check_keys(root, {"kind", "dns", "observation", "pod", "darom", "experiment"},
             "top level");

  ExperimentConfig cfg;
  const std::string kind =
      require_key(root, "kind", "top level").get<std::string>();
  if (kind == "rate_table") cfg.kind = ExperimentKind::rate_table;
  else if (kind == "mu_sweep") cfg.kind = ExperimentKind::mu_sweep;
  else if (kind == "inaccurate_basis") cfg.kind = ExperimentKind::inaccurate_basis;
  else if (kind == "adaptive_compare") cfg.kind = ExperimentKind::adaptive_compare;
  else if (kind == "verify") cfg.kind = ExperimentKind::verify;
  else throw ConfigError("unknown experiment kind '" + kind + "'");

  if (cfg.kind != ExperimentKind::verify) {
    cfg.dns = parse_dns_section(require_key(root, "dns", "top level"));
    cfg.observation =
        parse_observation_section(require_key(root, "observation", "top level"));
    if (root.contains("pod")) cfg.pod = parse_pod_section(root.at("pod"));
    cfg.darom = parse_darom_section(require_key(root, "darom", "top level"));
    if (root.contains("experiment")) {
      cfg.experiment = parse_experiment_section(root.at("experiment"));
    }
    cfg.dns.validate();
  } else if (root.contains("dns")) {
    cfg.dns = parse_dns_section(root.at("dns"));
  }
  return cfg;
}

ExperimentConfig parse_experiment_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_experiment_json(buf.str(), path);
}

PipelineArtifacts run_pipeline(const ExperimentConfig& config) {
  PipelineArtifacts art;
  const DnsResult run = dns_run(config.dns);
  art.snapshots = run.snapshots;
  art.warnings = run.warnings;
  if (art.snapshots.size() < 2) {
    throw ConfigError("pipeline: snapshot window holds fewer than 2 samples");
  }
  art.window_start = art.snapshots.times.front();

  std::vector<double> t, e;
  for (std::size_t i = 0; i < run.energy_times.size(); ++i) {
    if (run.energy_times[i] >= config.dns.snapshot_window_start - 1e-12) {
      t.push_back(run.energy_times[i]);
      e.push_back(run.energies[i]);
    }
  }
  const PeriodicityReport rep = analyze_energy_periodicity(t, e);
  art.periodic = rep.periodic;
  art.period = config.pod.manual_period.value_or(rep.period);
  if (!rep.periodic) {
    std::ostringstream msg;
    msg << "energy signal over the window is not statistically periodic "
        << "(peaks=" << rep.peak_times.size()
        << ", max successive peak diff=" << rep.max_rel_peak_diff << ")";
    art.warnings.push_back(msg.str());
  }

  SpectralWorkspace ws(config.dns.grid);
  SnapshotSet basis_snaps = art.snapshots;
  if (config.pod.window_fraction) {
    std::optional<double> manual = config.pod.manual_period;
    if (!manual && !rep.periodic && art.period > 0.0) manual = art.period;
    basis_snaps =
        windowed_snapshots(art.snapshots, *config.pod.window_fraction, manual);
  }
  art.basis = build_pod(ws, basis_snaps,
                        PodOptions{config.pod.rank_tol, config.pod.center});
  art.mesh = CoarseMesh(config.dns.grid, config.observation.H);
  return art;
}

ObservationStream observations_for_run(const PipelineArtifacts& art,
                                       const ExperimentConfig& config,
                                       double t_end_abs, double dt) {
  std::vector<double> da_times;
  const std::int64_t n = std::llround((t_end_abs - art.window_start) / dt);
  da_times.reserve(n + 1);
  for (std::int64_t k = 0; k <= n; ++k) {
    da_times.push_back(art.window_start + k * dt);
  }
  ObservationNoise noise;
  noise.sigma = config.observation.noise_sigma;
  noise.seed = config.observation.noise_seed;
  return build_observation_stream(art.snapshots, art.mesh, da_times, noise);
}

std::vector<double> fitted_rates(const std::vector<double>& tails,
                                 const std::vector<double>& errors,
                                 std::vector<bool>* flags) {
  std::vector<double> rates(tails.size(), kNan);
  if (flags) flags->assign(tails.size(), false);
  for (std::size_t k = 1; k < tails.size(); ++k) {
    if (errors[k] == errors[k - 1] || tails[k] == tails[k - 1]) {
      rates[k] = 0.0;
      if (flags) (*flags)[k] = true;
      continue;
    }
    rates[k] = std::log(errors[k] / errors[k - 1]) /
               std::log(tails[k] / tails[k - 1]);
  }
  return rates;
}

namespace {

std::vector<std::string> provenance_lines(const ExperimentConfig& config,
                                          const PipelineArtifacts& art) {
  std::vector<std::string> lines;
  lines.push_back("kind=" + to_string(config.kind));
  lines.push_back("config_hash=" + hash_hex(config.hash()));
  lines.push_back("dns_config_hash=" + hash_hex(art.snapshots.config_hash));
  lines.push_back("snapshots_hash=" + hash_hex(art.snapshots.content_hash()));
  lines.push_back("basis_hash=" + hash_hex(basis_content_hash(art.basis)));
  lines.push_back("basis_snapshot_hash=" + hash_hex(art.basis.snapshot_hash));
  return lines;
}

DaConfig da_config_for(const ExperimentConfig& config, double t_start,
                       double t_end_abs, double mu, bool adaptive) {
  DaConfig da;
  da.mu0 = mu;
  da.dt = config.darom.dt;
  da.t_start = t_start;
  da.t_end = t_end_abs;
  da.stepper = config.darom.stepper;
  da.picard = config.darom.picard;
  da.adaptive = config.darom.adaptive_opts;
  da.adaptive.enabled = adaptive;
  da.ic = config.darom.ic;
  return da;
}

SweepEntry run_sweep_member(const ExperimentConfig& config,
                            const PipelineArtifacts& art,
                            const RomOperators& ops,
                            const ObservationStream& obs,
                            const TruthSeries& truth, double t_end_abs,
                            double mu, bool adaptive,
                            const std::string& csv_path,
                            const std::vector<std::string>& provenance) {
  SweepEntry entry;
  entry.mu = mu;
  entry.adaptive = adaptive;
  entry.csv_path = csv_path;
  try {
    const DaConfig da =
        da_config_for(config, art.window_start, t_end_abs, mu, adaptive);
    const DaRunResult run = run_da_rom(ops, da, &obs, &truth);

    double energy_acc = 0.0, l2_acc = 0.0;
    int n_energy = 0, n_l2 = 0;
    for (const DiagnosticsRow& row : run.rows) {
      if (std::isfinite(row.energy_true) && row.energy_true > 0.0) {
        energy_acc += std::abs(row.energy_rom - row.energy_true) / row.energy_true;
        ++n_energy;
      }
      if (std::isfinite(row.l2_error)) {
        l2_acc += row.l2_error;
        ++n_l2;
      }
    }
    entry.time_avg_energy_err = n_energy ? energy_acc / n_energy : kNan;
    entry.time_avg_l2_error = n_l2 ? l2_acc / n_l2 : kNan;
    entry.final_l2_error = run.rows.back().l2_error;
    entry.sup_norm_a = run.sup_norm_a;
    for (double m : run.mu_history) entry.mu_changed |= (m != run.mu_history[0]);

    std::vector<std::string> comments = provenance;
    comments.push_back(adaptive ? "mu=adaptive (mu0=" + format_double(mu) + ")"
                                : "mu=" + format_double(mu));
    comments.push_back("r=" + std::to_string(ops.r));
    comments.push_back("obs_hash=" + hash_hex(observation_content_hash(obs)));
    for (const std::string& w : run.warnings) comments.push_back("warning: " + w);
    write_diagnostics_csv(csv_path, run.rows, comments);
  } catch (const std::exception& e) {
    entry.failed = true;
    entry.note = e.what();
  }
  return entry;
}

void run_parallel(std::vector<std::function<void()>> jobs) {
  const int n_threads = sweep_thread_count(static_cast<int>(jobs.size()));
  if (n_threads <= 1) {
    for (auto& job : jobs) job();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (int i = 0; i < n_threads; ++i) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t k = next.fetch_add(1);
        if (k >= jobs.size()) return;
        jobs[k]();
      }
    });
  }
  for (auto& th : pool) th.join();
}

void write_sweep_summary(const std::string& path, const SweepReport& report) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open for writing: " + path);
  for (const std::string& line : report.provenance) os << "# " << line << "\n";
  os << "mu,adaptive,time_avg_energy_err,time_avg_l2_error,final_l2_error,"
        "sup_norm_a,mu_changed,failed,csv\n";
  for (const SweepEntry& e : report.entries) {
    os << format_double(e.mu) << "," << (e.adaptive ? 1 : 0) << ","
       << format_double(e.time_avg_energy_err) << ","
       << format_double(e.time_avg_l2_error) << ","
       << format_double(e.final_l2_error) << "," << format_double(e.sup_norm_a)
       << "," << (e.mu_changed ? 1 : 0) << "," << (e.failed ? 1 : 0) << ","
       << e.csv_path << "\n";
  }
}

}  // namespace

RateTable compute_rate_table(const ExperimentConfig& config,
                             const PipelineArtifacts& art) {
  if (config.experiment.r_list.empty()) {
    throw ConfigError("rate_table: experiment.r_list must not be empty");
  }
  const int r_max =
      *std::max_element(config.experiment.r_list.begin(),
                        config.experiment.r_list.end());
  if (r_max > art.basis.d()) {
    throw ConfigError("rate_table: requested r exceeds basis rank d=" +
                      std::to_string(art.basis.d()));
  }

  double horizon = config.darom.t_end;
  if (config.experiment.t_end_periods > 0.0 && art.period > 0.0) {
    horizon = config.experiment.t_end_periods * art.period;
  }
  // snap the final time onto the DA step grid
  const double t_final =
      art.window_start +
      std::round(horizon / config.darom.dt) * config.darom.dt;

  RateTable table;
  table.t_final = t_final;
  table.provenance = provenance_lines(config, art);

  const ObservationStream obs =
      observations_for_run(art, config, t_final, config.darom.dt);
  table.provenance.push_back("obs_hash=" +
                             hash_hex(observation_content_hash(obs)));
  const TruthSeries truth = project_truth(art.basis, r_max, art.snapshots);

  SpectralWorkspace ws(config.dns.grid);
  std::vector<double> tails, errors;
  for (int r : config.experiment.r_list) {
    RateTableRow row;
    row.r = r;
    row.tail = eigentail(art.basis, r);
    try {
      const RomOperators ops =
          assemble(ws, art.basis, r, art.mesh, config.dns.forcing, config.dns.nu);
      const DaConfig da = da_config_for(config, art.window_start, t_final,
                                        config.darom.mu, false);
      const DaRunResult run = run_da_rom(ops, da, &obs, &truth);
      row.final_error = run.rows.back().l2_error;
    } catch (const std::exception& e) {
      row.flagged = true;
      row.note = std::string("run failed: ") + e.what();
      row.final_error = kNan;
    }
    tails.push_back(row.tail);
    errors.push_back(row.final_error);
    table.rows.push_back(row);
  }

  std::vector<bool> flags;
  const std::vector<double> rates = fitted_rates(tails, errors, &flags);
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    table.rows[k].rate = rates[k];
    if (flags[k] && !table.rows[k].flagged) {
      table.rows[k].flagged = true;
      table.rows[k].note = "degenerate ratio (identical errors or tails)";
    }
  }
  return table;
}

void write_rate_table_csv(const std::string& path, const RateTable& table) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open for writing: " + path);
  for (const std::string& line : table.provenance) os << "# " << line << "\n";
  os << "# t_final=" << format_double(table.t_final) << "\n";
  os << "r,eigentail,final_error,rate,flagged,note\n";
  for (const RateTableRow& row : table.rows) {
    os << row.r << "," << format_double(row.tail) << ","
       << format_double(row.final_error) << "," << format_double(row.rate)
       << "," << (row.flagged ? 1 : 0) << "," << row.note << "\n";
  }
}

SweepReport mu_sweep_report(const ExperimentConfig& config,
                            const PipelineArtifacts& art) {
  if (config.experiment.mu_list.empty()) {
    throw ConfigError("mu_sweep: experiment.mu_list must not be empty");
  }
  fs::create_directories(config.experiment.out_dir);

  const double t_end_abs = art.window_start + config.darom.t_end;
  const ObservationStream obs =
      observations_for_run(art, config, t_end_abs, config.darom.dt);
  const TruthSeries truth =
      project_truth(art.basis, config.darom.r, art.snapshots);
  SpectralWorkspace ws(config.dns.grid);
  const RomOperators ops = assemble(ws, art.basis, config.darom.r, art.mesh,
                                    config.dns.forcing, config.dns.nu);

  SweepReport report;
  report.provenance = provenance_lines(config, art);
  report.provenance.push_back("obs_hash=" +
                              hash_hex(observation_content_hash(obs)));
  {
    std::string echo = "mu_list=";
    for (std::size_t i = 0; i < config.experiment.mu_list.size(); ++i) {
      echo += (i ? "," : "") + format_double(config.experiment.mu_list[i]);
    }
    report.provenance.push_back(echo);
  }

  report.entries.resize(config.experiment.mu_list.size());
  std::vector<std::function<void()>> jobs;
  for (std::size_t i = 0; i < config.experiment.mu_list.size(); ++i) {
    const double mu = config.experiment.mu_list[i];
    const std::string csv =
        (fs::path(config.experiment.out_dir) /
         ("darom_mu" + format_double(mu) + ".csv"))
            .string();
    jobs.push_back([&, i, mu, csv]() {
      report.entries[i] = run_sweep_member(config, art, ops, obs, truth,
                                           t_end_abs, mu, false, csv,
                                           report.provenance);
    });
  }
  run_parallel(std::move(jobs));

  report.summary_path =
      (fs::path(config.experiment.out_dir) / "mu_sweep_summary.csv").string();
  write_sweep_summary(report.summary_path, report);
  return report;
}

InaccurateBasisReport inaccurate_basis_report(const ExperimentConfig& config,
                                              const PipelineArtifacts& art) {
  std::vector<double> fractions = config.experiment.window_fractions;
  if (fractions.empty()) fractions = {0.64, 0.84};
  std::vector<double> mu_list = config.experiment.mu_list;
  if (mu_list.empty()) mu_list = {0.0, 100.0, 300.0, 500.0};
  if (std::find(mu_list.begin(), mu_list.end(), 0.0) == mu_list.end()) {
    mu_list.insert(mu_list.begin(), 0.0);  // baseline
  }
  fs::create_directories(config.experiment.out_dir);

  InaccurateBasisReport report;
  report.provenance = provenance_lines(config, art);

  SpectralWorkspace ws(config.dns.grid);
  for (double fraction : fractions) {
    std::optional<double> manual = config.pod.manual_period;
    if (!manual && !art.periodic && art.period > 0.0) manual = art.period;
    const SnapshotSet windowed =
        windowed_snapshots(art.snapshots, fraction, manual);
    const PodBasis basis = build_pod(
        ws, windowed, PodOptions{config.pod.rank_tol, config.pod.center});
    const int r = std::min(config.darom.r, basis.d());

    const double t_end_abs = art.window_start + config.darom.t_end;
    const ObservationStream obs =
        observations_for_run(art, config, t_end_abs, config.darom.dt);
    const TruthSeries truth = project_truth(basis, r, art.snapshots);
    const RomOperators ops =
        assemble(ws, basis, r, art.mesh, config.dns.forcing, config.dns.nu);

    InaccurateBasisReport::PerBasis per;
    per.fraction = fraction;
    per.d = basis.d();
    per.sweep.provenance = report.provenance;
    per.sweep.provenance.push_back("window_fraction=" + format_double(fraction));
    per.sweep.provenance.push_back("basis_hash=" +
                                   hash_hex(basis_content_hash(basis)));

    per.sweep.entries.resize(mu_list.size());
    std::vector<std::function<void()>> jobs;
    for (std::size_t i = 0; i < mu_list.size(); ++i) {
      const double mu = mu_list[i];
      char frac_tag[32];
      std::snprintf(frac_tag, sizeof(frac_tag), "%02.0f", 100.0 * fraction);
      const std::string csv =
          (fs::path(config.experiment.out_dir) /
           ("darom_window" + std::string(frac_tag) + "_mu" + format_double(mu) +
            ".csv"))
              .string();
      jobs.push_back([&, i, mu, csv]() {
        per.sweep.entries[i] =
            run_sweep_member(config, art, ops, obs, truth, t_end_abs, mu, false,
                             csv, per.sweep.provenance);
      });
    }
    run_parallel(std::move(jobs));

    per.mu0_energy_err = kNan;
    per.best_mu = kNan;
    per.best_energy_err = std::numeric_limits<double>::infinity();
    for (const SweepEntry& e : per.sweep.entries) {
      if (e.failed) continue;
      if (e.mu == 0.0) per.mu0_energy_err = e.time_avg_energy_err;
      else if (e.time_avg_energy_err < per.best_energy_err) {
        per.best_energy_err = e.time_avg_energy_err;
        per.best_mu = e.mu;
      }
    }
    char frac_tag[32];
    std::snprintf(frac_tag, sizeof(frac_tag), "%02.0f", 100.0 * fraction);
    per.sweep.summary_path =
        (fs::path(config.experiment.out_dir) /
         ("window" + std::string(frac_tag) + "_summary.csv"))
            .string();
    write_sweep_summary(per.sweep.summary_path, per.sweep);
    report.bases.push_back(std::move(per));
  }
  return report;
}

AdaptiveCompareReport adaptive_compare_report(const ExperimentConfig& config,
                                              const PipelineArtifacts& art) {
  std::vector<double> mu_list = config.experiment.mu_list;
  if (mu_list.empty()) mu_list = {0.0, 10.0, 100.0};
  fs::create_directories(config.experiment.out_dir);

  ExperimentConfig const_cfg = config;
  const_cfg.experiment.mu_list = mu_list;
  AdaptiveCompareReport report;
  report.constant_runs = mu_sweep_report(const_cfg, art);
  report.provenance = report.constant_runs.provenance;

  const double t_end_abs = art.window_start + config.darom.t_end;
  const ObservationStream obs =
      observations_for_run(art, config, t_end_abs, config.darom.dt);
  const TruthSeries truth =
      project_truth(art.basis, config.darom.r, art.snapshots);
  SpectralWorkspace ws(config.dns.grid);
  const RomOperators ops = assemble(ws, art.basis, config.darom.r, art.mesh,
                                    config.dns.forcing, config.dns.nu);
  const std::string csv =
      (fs::path(config.experiment.out_dir) / "darom_adaptive.csv").string();
  report.adaptive_run =
      run_sweep_member(config, art, ops, obs, truth, t_end_abs, config.darom.mu,
                       true, csv, report.provenance);

  report.best_constant_energy_err = std::numeric_limits<double>::infinity();
  for (const SweepEntry& e : report.constant_runs.entries) {
    if (!e.failed) {
      report.best_constant_energy_err =
          std::min(report.best_constant_energy_err, e.time_avg_energy_err);
    }
  }
  return report;
}

VerifyReport run_verification() {
  VerifyReport report;
  const auto add = [&](const std::string& name, bool pass, double value,
                       const std::string& detail) {
    report.checks.push_back({name, pass, value, detail});
    report.all_pass &= pass;
  };

  // Temporal orders on the manufactured decaying vortex.
  {
    DnsConfig cfg;
    cfg.grid = make_square_grid(32);
    cfg.nu = 0.05;
    cfg.dt = 0.02;
    cfg.t_end = 0.4;
    cfg.stepper = TimeStepper::bdf2;
    const OrderCheckResult r2 = temporal_order_check(cfg, 4);
    add("taylor_green_bdf2_rate", r2.rate >= 1.8 && r2.rate <= 2.2, r2.rate,
        "energy-decay convergence rate, expect ~2");
    cfg.stepper = TimeStepper::backward_euler;
    const OrderCheckResult r1 = temporal_order_check(cfg, 4);
    add("taylor_green_be_rate", r1.rate >= 0.8 && r1.rate <= 1.2, r1.rate,
        "energy-decay convergence rate, expect ~1");
  }

  // Pointwise accuracy at a fine step.
  {
    DnsConfig cfg;
    cfg.grid = make_square_grid(64);
    cfg.nu = 0.05;
    cfg.dt = 2e-3;
    cfg.t_end = 0.5;
    const DnsResult run = dns_run(cfg);
    const double exact = taylor_green_energy(*cfg.grid, cfg.nu, 0.5);
    const double rel = std::abs(run.energies.back() - exact) / exact;
    add("taylor_green_energy_rel_err", rel <= 1e-5, rel,
        "relative energy error at t=0.5, dt=2e-3");
  }

  // Skew symmetry of the trilinear form on random triples.
  {
    auto grid = make_square_grid(32);
    SpectralWorkspace ws(grid);
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const VelocityField w = random_solenoidal(ws, 3 * seed + 1, 7, 1.5);
      const VelocityField v = random_solenoidal(ws, 3 * seed + 2, 7, 2.0);
      const double scale = norm_l2(w) * grad_norm_l2_sq(ws, v);
      worst = std::max(worst, std::abs(b_star(ws, w, v, v)) / scale);
    }
    add("b_star_skew_symmetry", worst <= 1e-12, worst,
        "max |b*(w,v,v)| / (|w| |grad v|^2) over 200 random pairs");
  }

  // Projection properties of the divergence-free projector.
  {
    auto grid = make_square_grid(32);
    SpectralWorkspace ws(grid);
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      VelocityField v = random_solenoidal(ws, seed + 100, 8, 1.0);
      const VelocityField g = gradient(ws, random_scalar(ws, seed + 200, 8, 1.0));
      v.u1 += g.u1;
      v.u2 += g.u2;
      const VelocityField p = leray_project(ws, v);
      const VelocityField pp = leray_project(ws, p);
      worst = std::max(worst, norm_l2(p) / norm_l2(v) - 1.0);
      worst = std::max(worst, (pp.u1 - p.u1).abs().maxCoeff());
      worst = std::max(worst,
                       divergence_l2(ws, p) /
                           std::sqrt(grad_norm_l2_sq(ws, p)) - 1e-10);
    }
    add("leray_projection", worst <= 1e-10, worst,
        "contraction, idempotence, divergence-free output");
  }

  // Coarse interpolation: contraction and first-order rate.
  {
    auto grid = make_square_grid(64);
    SpectralWorkspace ws(grid);
    const CoarseMesh mesh(grid, kTwoPi / 8);
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const VelocityField v = random_solenoidal(ws, seed, 8, 1.0);
      worst = std::max(worst, coarse_norm_sq(mesh, interpolate(mesh, v)) /
                                  norm_l2_sq(v) - 1.0);
    }
    add("interpolation_contraction", worst <= 1e-13, worst,
        "||I_H v||^2 <= ||v||^2 on 100 random fields");
  }
  {
    auto grid = make_square_grid(128);
    SpectralWorkspace ws(grid);
    VelocityField w(grid);
    for (int j = 0; j < grid->ny(); ++j) {
      for (int i = 0; i < grid->nx(); ++i) {
        w.u1(i, j) = std::sin(grid->x(i)) * std::cos(grid->y(j));
        w.u2(i, j) = std::cos(grid->x(i)) * std::sin(2.0 * grid->y(j));
      }
    }
    std::vector<double> hs, errs;
    for (int nc : {8, 16, 32}) {
      const CoarseMesh mesh(grid, kTwoPi / nc);
      const VelocityField lw = lift(mesh, interpolate(mesh, w));
      VelocityField diff(grid);
      diff.u1 = w.u1 - lw.u1;
      diff.u2 = w.u2 - lw.u2;
      hs.push_back(mesh.H());
      errs.push_back(norm_l2(diff));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < hs.size(); ++i) {
      sx += std::log(hs[i]);
      sy += std::log(errs[i]);
      sxx += std::log(hs[i]) * std::log(hs[i]);
      sxy += std::log(hs[i]) * std::log(errs[i]);
    }
    const int n = static_cast<int>(hs.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    add("interpolation_rate", slope >= 0.9 && slope <= 1.1, slope,
        "fitted H-rate of ||I_H w - w|| over H in {L/8, L/16, L/32}");
  }

  // POD optimality identity on a random snapshot set.
  {
    auto grid = make_square_grid(32);
    SpectralWorkspace ws(grid);
    SnapshotSet snaps;
    snaps.grid = grid;
    for (int n = 0; n < 20; ++n) {
      snaps.times.push_back(0.1 * n);
      snaps.fields.push_back(random_solenoidal(ws, 500 + n, 8, 1.0 + 0.1 * n));
    }
    const PodBasis basis = build_pod(ws, snaps);
    const double total = basis.eigenvalues.sum();
    double worst = 0.0;
    for (int r = 1; r <= basis.d(); ++r) {
      double err_sq = 0.0;
      for (const VelocityField& u : snaps.fields) {
        const VelocityField p = pod_project(basis, r, u);
        VelocityField diff(grid);
        diff.u1 = u.u1 - p.u1;
        diff.u2 = u.u2 - p.u2;
        err_sq += norm_l2_sq(diff);
      }
      const double tail = basis.eigenvalues.tail(basis.d() - r).sum();
      worst = std::max(worst, std::abs(err_sq - tail) / total);
    }
    add("pod_optimality_identity", worst <= 1e-8, worst,
        "projection error vs eigenvalue tail, all ranks, 20 snapshots");

    const int r = std::min(6, basis.d());
    const double s_norm = stiffness_norm(ws, basis, r);
    double worst_inv = 0.0;
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::VectorXd a(r);
      for (int j = 0; j < r; ++j) {
        a[j] = 2.0 * (static_cast<double>(rng()) / UINT64_MAX) - 1.0;
      }
      const VelocityField phi = pod_lift(basis, a);
      worst_inv = std::max(worst_inv,
                           std::sqrt(grad_norm_l2_sq(ws, phi)) -
                               std::sqrt(s_norm) * norm_l2(phi));
    }
    add("pod_inverse_estimate", worst_inv <= 1e-10, worst_inv,
        "||grad phi|| <= |||S_R|||^{1/2} ||phi|| on 100 random span members");
  }

  return report;
}

std::string emit_plot_script(const PlotRequest& request) {
  if (request.csv_paths.empty()) {
    throw ConfigError("emit_plot_script: no CSV inputs");
  }

  bool any_truth = false, mu_varies = false, any_dat = false;
  for (const std::string& path : request.csv_paths) {
    const std::vector<DiagnosticsRow> rows = read_diagnostics_csv(path);
    if (rows.empty()) continue;
    const double mu0 = rows.front().mu;
    for (const DiagnosticsRow& r : rows) {
      any_truth |= std::isfinite(r.energy_true);
      mu_varies |= (r.mu != mu0);
      any_dat |= std::isfinite(r.dat);
    }
  }

  std::vector<std::string> panels = {"energy"};
  if (any_truth) panels.push_back("error");
  if (mu_varies) {
    panels.push_back("mu");
    if (any_dat) panels.push_back("dat");
  }

  std::ofstream os(request.script_path);
  if (!os) {
    throw ConfigError("cannot open for writing: " + request.script_path);
  }
  os << "#!/usr/bin/env python3\n"
     << "# Auto-generated diagnostics plot (" << to_string(request.kind)
     << ").\n"
     << "import csv, math\n"
     << "import matplotlib\n"
     << "matplotlib.use(\"Agg\")\n"
     << "import matplotlib.pyplot as plt\n\n"
     << "INPUTS = [\n";
  for (const std::string& path : request.csv_paths) {
    os << "    (\"" << label_from_path(path) << "\", r\"" << path << "\"),\n";
  }
  os << "]\n"
     << "PANELS = [";
  for (std::size_t i = 0; i < panels.size(); ++i) {
    os << (i ? ", " : "") << "\"" << panels[i] << "\"";
  }
  os << "]\n"
     << "FIGURE = r\"" << request.figure_path << "\"\n\n";
  os << R"PY(COLUMNS = ["step", "time", "mu", "energy_rom", "energy_true", "l2_error", "dat"]

def load(path):
    cols = {k: [] for k in COLUMNS}
    with open(path) as f:
        reader = csv.DictReader(line for line in f if not line.startswith("#"))
        for row in reader:
            for k in COLUMNS:
                cols[k].append(float(row[k]))
    return cols

fig, axes = plt.subplots(len(PANELS), 1, figsize=(8.0, 2.6 * len(PANELS)), sharex=True)
if len(PANELS) == 1:
    axes = [axes]
truth_drawn = False
for label, path in INPUTS:
    d = load(path)
    t = d["time"]
    for ax, panel in zip(axes, PANELS):
        if panel == "energy":
            ax.plot(t, d["energy_rom"], label=label)
            if not truth_drawn and not all(math.isnan(v) for v in d["energy_true"]):
                ax.plot(t, d["energy_true"], "k--", linewidth=1.0, label="truth")
                truth_drawn = True
        elif panel == "error":
            ax.semilogy(t, d["l2_error"], label=label)
        elif panel == "mu":
            ax.plot(t, d["mu"], label=label)
        elif panel == "dat":
            ax.plot(t, d["dat"], label=label)
ylabel = {"energy": "energy", "error": "L2 error", "mu": "mu", "dat": "DAT"}
for ax, panel in zip(axes, PANELS):
    ax.set_ylabel(ylabel[panel])
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=8)
axes[-1].set_xlabel("t")
fig.tight_layout()
fig.savefig(FIGURE)
)PY";
  if (!os) throw ConfigError("failed writing " + request.script_path);
  return request.script_path;
}

bool render_plots(const std::string& script_path, std::string* log) {
  const std::string log_path = script_path + ".log";
  const std::string cmd =
      "python3 \"" + script_path + "\" > \"" + log_path + "\" 2>&1";
  const int rc = std::system(cmd.c_str());
  if (log) {
    std::ifstream is(log_path);
    std::stringstream buf;
    buf << is.rdbuf();
    *log = buf.str();
  }
  return rc == 0;
}

int sweep_thread_count(int jobs) {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  int cap = hw;
  if (const char* env = std::getenv("NUDGEROM_THREADS")) {
    cap = std::max(1, std::atoi(env));
  }
  return std::max(1, std::min({cap, hw, jobs}));
}

}  // namespace nudgerom

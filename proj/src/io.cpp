#include "nudgerom/io.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "nudgerom/observe.hpp"
#include "nudgerom/pod.hpp"
#include "nudgerom/rom.hpp"

namespace nudgerom {

namespace {

constexpr char kSnapMagic[] = "DAROM-SNAP";  // stored with trailing NUL
constexpr char kObsMagic[] = "DAROM-OBS";
constexpr char kPodMagic[] = "DAROM-POD";
constexpr char kOpsMagic[] = "DAROM-OPS";
constexpr std::uint16_t kSnapVersion = 1;
constexpr std::uint16_t kObsVersion = 1;
constexpr std::uint16_t kPodVersion = 1;
constexpr std::uint16_t kOpsVersion = 1;

void write_bytes(std::ofstream& os, const void* data, std::size_t n) {
  os.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

template <typename T>
void write_pod(std::ofstream& os, const T& v) {
  write_bytes(os, &v, sizeof(T));
}

void read_bytes(std::ifstream& is, void* data, std::size_t n,
                const std::string& path) {
  is.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (!is) throw ConfigError("truncated or unreadable file: " + path);
}

template <typename T>
T read_pod(std::ifstream& is, const std::string& path) {
  T v;
  read_bytes(is, &v, sizeof(T), path);
  return v;
}

void write_field_row_major(std::ofstream& os, const Eigen::ArrayXXd& a) {
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) {
      write_pod(os, a(i, j));
    }
  }
}

void read_field_row_major(std::ifstream& is, Eigen::ArrayXXd& a,
                          const std::string& path) {
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) {
      a(i, j) = read_pod<double>(is, path);
    }
  }
}

void check_magic(std::ifstream& is, const char* magic, std::size_t len,
                 const std::string& path) {
  std::string got(len, '\0');
  read_bytes(is, got.data(), len, path);
  if (std::string(magic, len) != got) {
    throw ConfigError("bad magic in " + path);
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open for writing: " + path);
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open for reading: " + path);
  return is;
}

}  // namespace

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

void write_snapshots(const std::string& path, const SnapshotSet& snaps) {
  std::ofstream os = open_out(path);
  write_bytes(os, kSnapMagic, sizeof(kSnapMagic));  // 11 bytes incl. NUL
  write_pod(os, kSnapVersion);
  write_pod(os, static_cast<std::uint32_t>(snaps.grid->nx()));
  write_pod(os, static_cast<std::uint32_t>(snaps.grid->ny()));
  write_pod(os, snaps.grid->lx());
  write_pod(os, snaps.grid->ly());
  write_pod(os, static_cast<std::uint64_t>(snaps.size()));
  for (double t : snaps.times) write_pod(os, t);
  for (const VelocityField& f : snaps.fields) {
    write_field_row_major(os, f.u1);
    write_field_row_major(os, f.u2);
  }
  write_pod(os, snaps.config_hash);
  if (!os) throw ConfigError("failed writing " + path);
}

SnapshotSet read_snapshots(const std::string& path) {
  std::ifstream is = open_in(path);
  check_magic(is, kSnapMagic, sizeof(kSnapMagic), path);
  const auto version = read_pod<std::uint16_t>(is, path);
  if (version != kSnapVersion) {
    throw ConfigError("unsupported snapshot version in " + path);
  }
  const auto nx = read_pod<std::uint32_t>(is, path);
  const auto ny = read_pod<std::uint32_t>(is, path);
  const double lx = read_pod<double>(is, path);
  const double ly = read_pod<double>(is, path);
  const auto m = read_pod<std::uint64_t>(is, path);

  SnapshotSet snaps;
  snaps.grid = make_grid(static_cast<int>(nx), static_cast<int>(ny), lx, ly);
  snaps.times.resize(m);
  for (std::uint64_t i = 0; i < m; ++i) snaps.times[i] = read_pod<double>(is, path);
  snaps.fields.reserve(m);
  for (std::uint64_t i = 0; i < m; ++i) {
    VelocityField f(snaps.grid);
    read_field_row_major(is, f.u1, path);
    read_field_row_major(is, f.u2, path);
    snaps.fields.push_back(std::move(f));
  }
  snaps.config_hash = read_pod<std::uint64_t>(is, path);
  return snaps;
}

void write_observations(const std::string& path, const ObservationStream& obs) {
  std::ofstream os = open_out(path);
  write_bytes(os, kObsMagic, sizeof(kObsMagic));  // 10 bytes incl. NUL
  write_pod(os, kObsVersion);
  const GridPtr& fine = obs.mesh.fine();
  write_pod(os, static_cast<std::uint32_t>(fine->nx()));
  write_pod(os, static_cast<std::uint32_t>(fine->ny()));
  write_pod(os, fine->lx());
  write_pod(os, fine->ly());
  write_pod(os, obs.mesh.H());
  write_pod(os, static_cast<std::uint32_t>(obs.mesh.ncx()));
  write_pod(os, static_cast<std::uint32_t>(obs.mesh.ncy()));
  write_pod(os, static_cast<std::uint64_t>(obs.size()));
  for (double t : obs.times) write_pod(os, t);
  for (int i = 0; i < obs.size(); ++i) {
    const CoarseField& c = obs.coarse_values[i];
    write_bytes(os, c.c1.data(), c.c1.size() * sizeof(double));
    write_bytes(os, c.c2.data(), c.c2.size() * sizeof(double));
    write_pod(os, obs.true_energy[i]);
  }
  if (!os) throw ConfigError("failed writing " + path);
}

ObservationStream read_observations(const std::string& path) {
  std::ifstream is = open_in(path);
  check_magic(is, kObsMagic, sizeof(kObsMagic), path);
  if (read_pod<std::uint16_t>(is, path) != kObsVersion) {
    throw ConfigError("unsupported observation version in " + path);
  }
  const auto nx = read_pod<std::uint32_t>(is, path);
  const auto ny = read_pod<std::uint32_t>(is, path);
  const double lx = read_pod<double>(is, path);
  const double ly = read_pod<double>(is, path);
  const double h = read_pod<double>(is, path);
  const auto ncx = read_pod<std::uint32_t>(is, path);
  const auto ncy = read_pod<std::uint32_t>(is, path);
  const auto count = read_pod<std::uint64_t>(is, path);

  ObservationStream obs;
  obs.mesh = CoarseMesh(make_grid(static_cast<int>(nx), static_cast<int>(ny),
                                  lx, ly),
                        h);
  if (obs.mesh.ncx() != static_cast<int>(ncx) ||
      obs.mesh.ncy() != static_cast<int>(ncy)) {
    throw ConfigError("inconsistent coarse layout in " + path);
  }
  obs.times.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    obs.times[i] = read_pod<double>(is, path);
  }
  const int cells = obs.mesh.cells();
  obs.coarse_values.reserve(count);
  obs.true_energy.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    CoarseField c;
    c.c1.resize(cells);
    c.c2.resize(cells);
    read_bytes(is, c.c1.data(), cells * sizeof(double), path);
    read_bytes(is, c.c2.data(), cells * sizeof(double), path);
    obs.coarse_values.push_back(std::move(c));
    obs.true_energy.push_back(read_pod<double>(is, path));
  }
  return obs;
}

void write_pod_basis(const std::string& path, const PodBasis& basis) {
  std::ofstream os = open_out(path);
  write_bytes(os, kPodMagic, sizeof(kPodMagic));
  write_pod(os, kPodVersion);
  write_pod(os, static_cast<std::uint8_t>(0));  // Gram not scaled by 1/M
  write_pod(os, static_cast<std::uint8_t>(basis.centered ? 1 : 0));
  write_pod(os, static_cast<std::uint32_t>(basis.grid->nx()));
  write_pod(os, static_cast<std::uint32_t>(basis.grid->ny()));
  write_pod(os, basis.grid->lx());
  write_pod(os, basis.grid->ly());
  write_pod(os, static_cast<std::uint32_t>(basis.d()));
  write_bytes(os, basis.eigenvalues.data(), basis.d() * sizeof(double));
  write_bytes(os, basis.grad_norms_sq.data(), basis.d() * sizeof(double));
  for (const VelocityField& m : basis.modes) {
    write_field_row_major(os, m.u1);
    write_field_row_major(os, m.u2);
  }
  write_pod(os, basis.snapshot_hash);
  if (!os) throw ConfigError("failed writing " + path);
}

PodBasis read_pod_basis(const std::string& path) {
  std::ifstream is = open_in(path);
  check_magic(is, kPodMagic, sizeof(kPodMagic), path);
  if (read_pod<std::uint16_t>(is, path) != kPodVersion) {
    throw ConfigError("unsupported basis version in " + path);
  }
  const auto norm_flag = read_pod<std::uint8_t>(is, path);
  if (norm_flag != 0) {
    throw ConfigError("unknown POD normalization flag in " + path);
  }
  const auto center_flag = read_pod<std::uint8_t>(is, path);
  const auto nx = read_pod<std::uint32_t>(is, path);
  const auto ny = read_pod<std::uint32_t>(is, path);
  const double lx = read_pod<double>(is, path);
  const double ly = read_pod<double>(is, path);
  const auto d = read_pod<std::uint32_t>(is, path);

  PodBasis basis;
  basis.centered = center_flag != 0;
  basis.grid = make_grid(static_cast<int>(nx), static_cast<int>(ny), lx, ly);
  basis.eigenvalues.resize(d);
  basis.grad_norms_sq.resize(d);
  read_bytes(is, basis.eigenvalues.data(), d * sizeof(double), path);
  read_bytes(is, basis.grad_norms_sq.data(), d * sizeof(double), path);
  basis.modes.reserve(d);
  for (std::uint32_t j = 0; j < d; ++j) {
    VelocityField m(basis.grid);
    read_field_row_major(is, m.u1, path);
    read_field_row_major(is, m.u2, path);
    basis.modes.push_back(std::move(m));
  }
  basis.snapshot_hash = read_pod<std::uint64_t>(is, path);
  return basis;
}

void write_rom_operators(const std::string& path, const RomOperators& ops) {
  std::ofstream os = open_out(path);
  write_bytes(os, kOpsMagic, sizeof(kOpsMagic));
  write_pod(os, kOpsVersion);
  const int r = ops.r;
  write_pod(os, static_cast<std::uint32_t>(r));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) write_pod(os, ops.S(i, j));
  for (int j = 0; j < r; ++j)
    for (int k = 0; k < r; ++k)
      for (int i = 0; i < r; ++i) write_pod(os, ops.t(j, k, i));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) write_pod(os, ops.G(i, j));
  write_bytes(os, ops.f_vec.data(), r * sizeof(double));
  if (!os) throw ConfigError("failed writing " + path);
}

RomOperators read_rom_operators(const std::string& path) {
  std::ifstream is = open_in(path);
  check_magic(is, kOpsMagic, sizeof(kOpsMagic), path);
  if (read_pod<std::uint16_t>(is, path) != kOpsVersion) {
    throw ConfigError("unsupported operator version in " + path);
  }
  const auto r = static_cast<int>(read_pod<std::uint32_t>(is, path));
  RomOperators ops;
  ops.r = r;
  ops.S.resize(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) ops.S(i, j) = read_pod<double>(is, path);
  ops.T.assign(r, Eigen::MatrixXd(r, r));
  for (int j = 0; j < r; ++j)
    for (int k = 0; k < r; ++k)
      for (int i = 0; i < r; ++i) ops.T[j](k, i) = read_pod<double>(is, path);
  ops.G.resize(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) ops.G(i, j) = read_pod<double>(is, path);
  ops.f_vec.resize(r);
  read_bytes(is, ops.f_vec.data(), r * sizeof(double), path);
  return ops;
}

void write_diagnostics_csv(const std::string& path,
                           const std::vector<DiagnosticsRow>& rows,
                           const std::vector<std::string>& header_comments) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open for writing: " + path);
  for (const std::string& c : header_comments) os << "# " << c << "\n";
  os << "step,time,mu,energy_rom,energy_true,l2_error,dat\n";
  char buf[256];
  for (const DiagnosticsRow& r : rows) {
    std::snprintf(buf, sizeof(buf),
                  "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  static_cast<long long>(r.step), r.time, r.mu, r.energy_rom,
                  r.energy_true, r.l2_error, r.dat);
    os << buf;
  }
  if (!os) throw ConfigError("failed writing " + path);
}

std::vector<DiagnosticsRow> read_diagnosticsrows_impl(std::istream& is,
                                                      const std::string& path) {
  std::vector<DiagnosticsRow> rows;
  std::string line;
  bool saw_header = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!saw_header) {
      const std::vector<std::string> expected = {
          "step", "time", "mu", "energy_rom", "energy_true", "l2_error", "dat"};
      std::vector<std::string> got;
      std::istringstream hs(line);
      for (std::string col; std::getline(hs, col, ',');) got.push_back(col);
      for (std::size_t i = 0; i < expected.size(); ++i) {
        if (i >= got.size() || got[i] != expected[i]) {
          throw ConfigError("diagnostics CSV schema mismatch in " + path +
                            ": expected column '" + expected[i] + "', got '" +
                            (i < got.size() ? got[i] : "<missing>") + "'");
        }
      }
      if (got.size() != expected.size()) {
        throw ConfigError("diagnostics CSV schema mismatch in " + path +
                          ": unexpected extra column '" + got[expected.size()] +
                          "'");
      }
      saw_header = true;
      continue;
    }
    DiagnosticsRow r;
    std::istringstream ls(line);
    std::string tok;
    const auto next = [&](const char* col) {
      if (!std::getline(ls, tok, ',')) {
        throw ConfigError("diagnostics CSV missing column '" +
                          std::string(col) + "' in " + path);
      }
      return std::stod(tok);
    };
    std::getline(ls, tok, ',');
    r.step = std::stoll(tok);
    r.time = next("time");
    r.mu = next("mu");
    r.energy_rom = next("energy_rom");
    r.energy_true = next("energy_true");
    r.l2_error = next("l2_error");
    r.dat = next("dat");
    rows.push_back(r);
  }
  if (!saw_header) throw ConfigError("diagnostics CSV has no header: " + path);
  return rows;
}

std::vector<DiagnosticsRow> read_diagnostics_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open for reading: " + path);
  return read_diagnosticsrows_impl(is, path);
}

std::uint64_t file_hash(const std::string& path) {
  std::ifstream is = open_in(path);
  Fnv1a h;
  std::array<char, 1 << 16> buf;
  while (is) {
    is.read(buf.data(), buf.size());
    h.bytes(buf.data(), static_cast<std::size_t>(is.gcount()));
  }
  return h.value();
}

}  // namespace nudgerom

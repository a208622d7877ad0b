#pragma once

#include <string>
#include <vector>

#include "nudgerom/dns.hpp"
#include "nudgerom/hashing.hpp"

namespace nudgerom {

class CoarseMesh;
struct ObservationStream;
struct PodBasis;
class SpectralWorkspace;
struct RomOperators;

// Binary artifact formats (little-endian throughout).
//
// Snapshots ("DAROM-SNAP\0"):
//   magic[11] | version u16 | nx u32 | ny u32 | lx f64 | ly f64 | M u64 |
//   times f64*M | M x { u1 row-major f64*(nx*ny), u2 row-major } |
//   config_hash u64
// Row-major means index i*ny + j for node (x_i, y_j).
//
// Observations ("DAROM-OBS\0"):
//   magic[10] | version u16 | nx u32 | ny u32 | lx f64 | ly f64 | H f64 |
//   ncx u32 | ncy u32 | count u64 | times f64*count |
//   count x { c1 f64*cells, c2 f64*cells, true_energy f64 }
// Cell index is cx*ncy + cy.
//
// POD basis ("DAROM-POD\0"):
//   magic[10] | version u16 | norm_flag u8 (0: Gram not scaled by 1/M) |
//   center_flag u8 | nx u32 | ny u32 | lx f64 | ly f64 | d u32 |
//   lambda f64*d | grad_norm_sq f64*d | d x { u1 row-major, u2 row-major } |
//   snapshot_hash u64
//
// ROM operators ("DAROM-OPS\0"):
//   magic[10] | version u16 | r u32 | S row-major f64*(r*r) |
//   T f64*(r*r*r) ordered [j][k][i] (T_jki) | G row-major f64*(r*r) |
//   f_vec f64*r

void write_snapshots(const std::string& path, const SnapshotSet& snaps);
SnapshotSet read_snapshots(const std::string& path);

void write_observations(const std::string& path, const ObservationStream& obs);
ObservationStream read_observations(const std::string& path);

void write_pod_basis(const std::string& path, const PodBasis& basis);
PodBasis read_pod_basis(const std::string& path);

void write_rom_operators(const std::string& path, const RomOperators& ops);
/// Reads the exported operator blocks (r, S, T, G, f_vec) into a fresh
/// RomOperators; mesh/mode-mean members stay empty.
RomOperators read_rom_operators(const std::string& path);

/// One diagnostics row per DA-ROM step.
struct DiagnosticsRow {
  std::int64_t step = 0;
  double time = 0.0;
  double mu = 0.0;
  double energy_rom = 0.0;
  double energy_true = 0.0;  // NaN when no observations/truth supplied
  double l2_error = 0.0;     // NaN when no truth supplied
  double dat = 0.0;          // NaN when no observations supplied
};

/// CSV with header "step,time,mu,energy_rom,energy_true,l2_error,dat" and an
/// optional leading comment block (lines starting with '#').
void write_diagnostics_csv(const std::string& path,
                           const std::vector<DiagnosticsRow>& rows,
                           const std::vector<std::string>& header_comments = {});
std::vector<DiagnosticsRow> read_diagnostics_csv(const std::string& path);

/// FNV-1a hash of a file's raw bytes.
std::uint64_t file_hash(const std::string& path);

}  // namespace nudgerom

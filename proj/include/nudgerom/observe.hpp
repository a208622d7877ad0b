#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "nudgerom/dns.hpp"
#include "nudgerom/field.hpp"

namespace nudgerom {

/// Coarse observation mesh: aligned rectangular blocks of fine-grid nodes.
/// The coarse width H must nest exactly (an integer number of fine cells per
/// block in each direction, blocks tiling the domain).
class CoarseMesh {
 public:
  CoarseMesh() = default;
  CoarseMesh(GridPtr fine, double H);

  const GridPtr& fine() const { return fine_; }
  double H() const { return H_; }
  int ncx() const { return ncx_; }
  int ncy() const { return ncy_; }
  int cells() const { return ncx_ * ncy_; }
  int px() const { return px_; }  // fine nodes per block, x
  int py() const { return py_; }
  double cell_area() const { return H_ * Hy_; }

 private:
  GridPtr fine_;
  double H_ = 0.0;   // block width (x)
  double Hy_ = 0.0;  // block height (y); equals H_ for square cells
  int ncx_ = 0, ncy_ = 0, px_ = 0, py_ = 0;
};

/// Cell means of a two-component field; index cell (cx, cy) -> cx*ncy + cy.
struct CoarseField {
  Eigen::VectorXd c1, c2;
};

/// L2 projection onto piecewise constants: per-block quadrature mean.
CoarseField interpolate(const CoarseMesh& mesh, const VelocityField& v);

/// Piecewise-constant lift of cell means back to the fine grid.
VelocityField lift(const CoarseMesh& mesh, const CoarseField& c);

/// (I_H a, I_H b) in L2, evaluated on the coarse representation.
double coarse_inner(const CoarseMesh& mesh, const CoarseField& a,
                    const CoarseField& b);
double coarse_norm_sq(const CoarseMesh& mesh, const CoarseField& a);

/// Optional additive Gaussian noise on cell means (defaults off).
struct ObservationNoise {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Coarse observations of the truth, sampled exactly at DA step times, plus
/// the true energy 0.5*||u(t)||^2 needed by the adaptive controller.
struct ObservationStream {
  CoarseMesh mesh;
  std::vector<double> times;
  std::vector<CoarseField> coarse_values;
  std::vector<double> true_energy;

  int size() const { return static_cast<int>(times.size()); }
  /// Index of an exactly matching time (tolerance 1e-9); RangeError if absent.
  int index_of_time(double t) const;
};

/// Build the stream from stored snapshots. Every requested time must match a
/// snapshot time exactly; times outside the stored span raise RangeError.
ObservationStream build_observation_stream(const SnapshotSet& snapshots,
                                           const CoarseMesh& mesh,
                                           const std::vector<double>& da_times,
                                           const ObservationNoise& noise = {});

/// Build the stream by re-running the truth solver and probing it on the fly
/// (no snapshot storage); observation times are step multiples of
/// obs_stride * config.dt. Useful for windows too long to store.
ObservationStream observe_dns(const DnsConfig& config, const CoarseMesh& mesh,
                              int obs_stride,
                              const ObservationNoise& noise = {});

}  // namespace nudgerom

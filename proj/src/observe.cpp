#include "nudgerom/observe.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace nudgerom {

namespace {

constexpr double kTimeTol = 1e-9;

int nested_block_size(double H, double h, const char* axis) {
  const double ratio = H / h;
  const int p = static_cast<int>(std::llround(ratio));
  if (p < 1 || std::abs(ratio - p) > 1e-9 * std::max(1.0, ratio)) {
    throw ConfigError(std::string("CoarseMesh: H is not an integer multiple of ") +
                      axis + "-spacing (H/h = " + std::to_string(ratio) + ")");
  }
  return p;
}

void add_noise(CoarseField& c, const ObservationNoise& noise,
               std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, noise.sigma);
  for (int i = 0; i < c.c1.size(); ++i) c.c1[i] += gauss(rng);
  for (int i = 0; i < c.c2.size(); ++i) c.c2[i] += gauss(rng);
}

}  // namespace

CoarseMesh::CoarseMesh(GridPtr fine, double H) : fine_(std::move(fine)), H_(H) {
  if (!fine_) throw ConfigError("CoarseMesh: fine grid missing");
  if (!(H > 0.0)) throw ConfigError("CoarseMesh: H must be positive");
  px_ = nested_block_size(H, fine_->hx(), "x");
  py_ = nested_block_size(H, fine_->hy(), "y");
  if (fine_->nx() % px_ != 0 || fine_->ny() % py_ != 0) {
    throw ConfigError("CoarseMesh: blocks of width H do not tile the domain");
  }
  ncx_ = fine_->nx() / px_;
  ncy_ = fine_->ny() / py_;
  Hy_ = py_ * fine_->hy();
}

CoarseField interpolate(const CoarseMesh& mesh, const VelocityField& v) {
  require_same_grid(v, *mesh.fine());
  CoarseField out;
  out.c1.setZero(mesh.cells());
  out.c2.setZero(mesh.cells());
  const int px = mesh.px();
  const int py = mesh.py();
  const double inv_count = 1.0 / (px * py);
  for (int cx = 0; cx < mesh.ncx(); ++cx) {
    for (int cy = 0; cy < mesh.ncy(); ++cy) {
      const int cell = cx * mesh.ncy() + cy;
      out.c1[cell] = v.u1.block(cx * px, cy * py, px, py).sum() * inv_count;
      out.c2[cell] = v.u2.block(cx * px, cy * py, px, py).sum() * inv_count;
    }
  }
  return out;
}

VelocityField lift(const CoarseMesh& mesh, const CoarseField& c) {
  VelocityField out(mesh.fine());
  const int px = mesh.px();
  const int py = mesh.py();
  for (int cx = 0; cx < mesh.ncx(); ++cx) {
    for (int cy = 0; cy < mesh.ncy(); ++cy) {
      const int cell = cx * mesh.ncy() + cy;
      out.u1.block(cx * px, cy * py, px, py).setConstant(c.c1[cell]);
      out.u2.block(cx * px, cy * py, px, py).setConstant(c.c2[cell]);
    }
  }
  return out;
}

double coarse_inner(const CoarseMesh& mesh, const CoarseField& a,
                    const CoarseField& b) {
  return mesh.cell_area() * (a.c1.dot(b.c1) + a.c2.dot(b.c2));
}

double coarse_norm_sq(const CoarseMesh& mesh, const CoarseField& a) {
  return coarse_inner(mesh, a, a);
}

int ObservationStream::index_of_time(double t) const {
  const auto it = std::lower_bound(times.begin(), times.end(), t - kTimeTol);
  if (it == times.end() || std::abs(*it - t) > kTimeTol) {
    throw RangeError("observation stream has no sample at t=" +
                     std::to_string(t));
  }
  return static_cast<int>(it - times.begin());
}

ObservationStream build_observation_stream(const SnapshotSet& snapshots,
                                           const CoarseMesh& mesh,
                                           const std::vector<double>& da_times,
                                           const ObservationNoise& noise) {
  ObservationStream stream;
  stream.mesh = mesh;
  if (da_times.empty()) return stream;

  if (snapshots.size() == 0) {
    throw RangeError("build_observation_stream: empty snapshot set");
  }
  const double t_lo = snapshots.times.front() - kTimeTol;
  const double t_hi = snapshots.times.back() + kTimeTol;

  std::mt19937_64 rng(noise.seed);
  for (double t : da_times) {
    if (t < t_lo || t > t_hi) {
      throw RangeError("requested observation time " + std::to_string(t) +
                       " lies outside the truth span [" +
                       std::to_string(snapshots.times.front()) + ", " +
                       std::to_string(snapshots.times.back()) + "]");
    }
    const auto it = std::lower_bound(snapshots.times.begin(),
                                     snapshots.times.end(), t - kTimeTol);
    if (it == snapshots.times.end() || std::abs(*it - t) > kTimeTol) {
      throw RangeError("observation time " + std::to_string(t) +
                       " does not coincide with any stored snapshot time");
    }
    const int idx = static_cast<int>(it - snapshots.times.begin());
    const VelocityField& u = snapshots.fields[idx];
    CoarseField c = interpolate(mesh, u);
    if (noise.sigma > 0.0) add_noise(c, noise, rng);
    stream.times.push_back(t);
    stream.coarse_values.push_back(std::move(c));
    stream.true_energy.push_back(0.5 * norm_l2_sq(u));
  }
  return stream;
}

ObservationStream observe_dns(const DnsConfig& config, const CoarseMesh& mesh,
                              int obs_stride, const ObservationNoise& noise) {
  if (obs_stride < 1) throw ConfigError("observe_dns: obs_stride >= 1");
  ObservationStream stream;
  stream.mesh = mesh;
  std::mt19937_64 rng(noise.seed);
  StepProbe probe;
  probe.stride = obs_stride;
  probe.fn = [&](std::int64_t /*step*/, double t, const VelocityField& u) {
    CoarseField c = interpolate(mesh, u);
    if (noise.sigma > 0.0) add_noise(c, noise, rng);
    stream.times.push_back(t);
    stream.coarse_values.push_back(std::move(c));
    stream.true_energy.push_back(0.5 * norm_l2_sq(u));
  };
  dns_run(config, probe);
  return stream;
}

}  // namespace nudgerom

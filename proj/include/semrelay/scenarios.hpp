#pragma once

// Instance generators and experiment drivers: seeded user layouts, restricted
// baseline solvers, budget sweeps, and the satellite-trajectory sweep.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <semrelay/solver.hpp>

namespace semrelay::scenarios {

// ---------------------------------------------------------------------------
// scenario description

enum class MixMode { Explicit, Hybrid, SemOnly, ConOnly, SemConClusters };
enum class BaselineMode { Joint, FixedBandwidth, FixedPower, FixedLocation };

inline const char* to_string(BaselineMode m) {
  switch (m) {
    case BaselineMode::Joint: return "joint";
    case BaselineMode::FixedBandwidth: return "fixed-b";
    case BaselineMode::FixedPower: return "fixed-p";
    case BaselineMode::FixedLocation: return "fixed-l";
  }
  return "?";
}

inline const char* to_string(MixMode m) {
  switch (m) {
    case MixMode::Explicit: return "explicit";
    case MixMode::Hybrid: return "hybrid";
    case MixMode::SemOnly: return "sem-only";
    case MixMode::ConOnly: return "con-only";
    case MixMode::SemConClusters: return "sem-con-clusters";
  }
  return "?";
}

struct ClusterMix {
  int n_sem = 0;
  int n_con = 0;
};

struct ScenarioSpec {
  std::vector<ClusterMix> clusters{{1, 1}};  // per-cluster counts (Explicit mix)
  MixMode mix = MixMode::Explicit;           // non-Explicit overrides the counts
  std::uint64_t seed = 1;

  double square_side_m = 1000.0;     // users uniform in this square per cluster
  double cluster_spacing_m = 2000.0; // default centers along x at this pitch
  std::vector<Vec2> centers;         // optional explicit cluster centers

  double sat_gain = 1e-16;           // satellite-hop channel gain magnitude
  double sat_bandwidth_hz = 10e6;
  double sat_power_w = 1000.0;
  double uav_bandwidth_hz = 10e6;
  double uav_power_w = 10.0;

  void validate() const {
    if (clusters.empty()) throw std::invalid_argument("scenario: no clusters");
    if (!centers.empty() && centers.size() != clusters.size())
      throw std::invalid_argument("scenario: one center per cluster required");
    int total = 0;
    for (const auto& c : clusters) {
      if (c.n_sem < 0 || c.n_con < 0)
        throw std::invalid_argument("scenario: negative user count");
      total += c.n_sem + c.n_con;
    }
    if (mix == MixMode::Explicit && total == 0)
      throw std::invalid_argument("scenario: at least one user required");
  }
};

// The four user-population arrangements studied at 8 users per cluster: the
// half/half split applies the lopsided mixes to the first and second half of
// the cluster list.
inline std::vector<ClusterMix> resolved_mix(const ScenarioSpec& spec) {
  const std::size_t n = spec.clusters.size();
  std::vector<ClusterMix> out(n);
  switch (spec.mix) {
    case MixMode::Explicit: return spec.clusters;
    case MixMode::SemOnly:
      for (auto& c : out) c = {8, 0};
      return out;
    case MixMode::ConOnly:
      for (auto& c : out) c = {0, 8};
      return out;
    case MixMode::Hybrid:
      for (std::size_t k = 0; k < n; ++k) out[k] = k < n / 2 ? ClusterMix{2, 6}
                                                             : ClusterMix{6, 2};
      return out;
    case MixMode::SemConClusters:
      for (std::size_t k = 0; k < n; ++k) out[k] = k < n / 2 ? ClusterMix{0, 8}
                                                             : ClusterMix{8, 0};
      return out;
  }
  return out;
}

// ---------------------------------------------------------------------------
// instance generation

inline NetworkInstance generate(const ScenarioSpec& spec) {
  spec.validate();
  const auto mixes = resolved_mix(spec);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> off(-0.5 * spec.square_side_m,
                                             0.5 * spec.square_side_m);
  NetworkInstance inst;
  inst.sat_bandwidth_hz = spec.sat_bandwidth_hz;
  inst.sat_power_w = spec.sat_power_w;
  inst.uav_bandwidth_hz = spec.uav_bandwidth_hz;
  inst.uav_power_w = spec.uav_power_w;
  for (std::size_t n = 0; n < mixes.size(); ++n) {
    const Vec2 c0 = spec.centers.empty()
                        ? Vec2{spec.cluster_spacing_m * static_cast<double>(n), 0.0}
                        : spec.centers[n];
    Cluster c;
    c.sat_link.gain = spec.sat_gain;
    for (int i = 0; i < mixes[n].n_sem; ++i) {
      const double dx = off(rng), dy = off(rng);
      c.users.push_back({UserKind::Sem, {c0.x + dx, c0.y + dy}});
    }
    for (int j = 0; j < mixes[n].n_con; ++j) {
      const double dx = off(rng), dy = off(rng);
      c.users.push_back({UserKind::Con, {c0.x + dx, c0.y + dy}});
    }
    inst.clusters.push_back(std::move(c));
  }
  inst.validate();
  return inst;
}

// The reference instance used by the oracle cross-checks: one cluster with
// one semantic and one conventional user at the default budgets.
inline ScenarioSpec canonical_tiny_spec() {
  ScenarioSpec s;
  s.clusters = {{1, 1}};
  s.seed = 7;
  return s;
}

// ---------------------------------------------------------------------------
// restricted baselines

// The restricted runs keep the corresponding block's variables at the
// equal-split starting point (satellite budgets split evenly across clusters,
// cluster budgets split evenly across users, relays at user centroids).
inline solver::SolveReport run_baseline(const NetworkInstance& inst, BaselineMode mode,
                                        solver::SolverConfig cfg) {
  switch (mode) {
    case BaselineMode::Joint: break;
    case BaselineMode::FixedBandwidth: cfg.optimize_bandwidth = false; break;
    case BaselineMode::FixedPower: cfg.optimize_power = false; break;
    case BaselineMode::FixedLocation: cfg.optimize_location = false; break;
  }
  return solver::alternating_optimize(inst, cfg);
}

// ---------------------------------------------------------------------------
// budget sweeps

enum class SweepAxis { UavBandwidth, UavPower, SatBandwidth, SatPower };

inline const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::UavBandwidth: return "uav_bandwidth_hz";
    case SweepAxis::UavPower: return "uav_power_w";
    case SweepAxis::SatBandwidth: return "sat_bandwidth_hz";
    case SweepAxis::SatPower: return "sat_power_w";
  }
  return "?";
}

struct SweepRow {
  double axis_value = 0.0;
  BaselineMode mode = BaselineMode::Joint;
  double sum_rate_bps = 0.0;
  int iters = 0;
  double max_residual = 0.0;
  double wall_ms = 0.0;
};

inline std::vector<SweepRow> sweep(SweepAxis axis, const std::vector<double>& values,
                                   const ScenarioSpec& base,
                                   const std::vector<BaselineMode>& modes,
                                   const solver::SolverConfig& cfg) {
  if (values.empty()) throw std::invalid_argument("sweep: no axis values");
  for (std::size_t i = 1; i < values.size(); ++i)
    if (!(values[i] > values[i - 1]))
      throw std::invalid_argument("sweep: axis values must be sorted ascending");
  if (modes.empty()) throw std::invalid_argument("sweep: no modes");

  std::vector<SweepRow> out;
  for (const double v : values) {
    ScenarioSpec s = base;
    switch (axis) {
      case SweepAxis::UavBandwidth: s.uav_bandwidth_hz = v; break;
      case SweepAxis::UavPower: s.uav_power_w = v; break;
      case SweepAxis::SatBandwidth: s.sat_bandwidth_hz = v; break;
      case SweepAxis::SatPower: s.sat_power_w = v; break;
    }
    const NetworkInstance inst = generate(s);
    for (const BaselineMode m : modes) {
      const solver::SolveReport rep = run_baseline(inst, m, cfg);
      out.push_back({v, m, rep.final_objective, rep.outer_iters,
                     max_relative_violation(inst, rep.alloc), rep.wall_ms});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// satellite trajectory

// The satellite slides along a straight ground track (x axis, metres); each
// cluster's hop gain is the nadir reference scaled by inverse-square slant
// distance from the track point at the satellite's altitude.
struct Trajectory {
  double lon_start_deg = 0.0;
  double lon_end_deg = 14.0;
  int steps = 15;
  double altitude_m = 60e3;
  double metres_per_deg = 111e3;
  double nadir_gain = 1e-16;
  std::vector<Vec2> cluster_centers_m;

  void validate() const {
    if (steps < 2) throw std::invalid_argument("trajectory: needs at least 2 steps");
    if (cluster_centers_m.empty())
      throw std::invalid_argument("trajectory: no cluster centers");
    if (!(altitude_m > 0)) throw std::invalid_argument("trajectory: altitude must be > 0");
  }

  double longitude_at(int step) const {
    return lon_start_deg +
           (lon_end_deg - lon_start_deg) * step / static_cast<double>(steps - 1);
  }

  double gain_at(double lon_deg, const Vec2& center) const {
    const double dx = lon_deg * metres_per_deg - center.x;
    const double d2 = dx * dx + center.y * center.y + altitude_m * altitude_m;
    return nadir_gain * altitude_m * altitude_m / d2;
  }
};

inline std::vector<SweepRow> trajectory_sweep(const Trajectory& traj,
                                              const ScenarioSpec& spec,
                                              const solver::SolverConfig& cfg) {
  traj.validate();
  ScenarioSpec s = spec;
  s.centers = traj.cluster_centers_m;
  if (s.clusters.size() != traj.cluster_centers_m.size())
    throw std::invalid_argument("trajectory: one cluster per center required");
  const NetworkInstance base = generate(s);

  std::vector<SweepRow> out;
  for (int k = 0; k < traj.steps; ++k) {
    const double lon = traj.longitude_at(k);
    NetworkInstance inst = base;
    for (std::size_t n = 0; n < inst.clusters.size(); ++n)
      inst.clusters[n].sat_link.gain = traj.gain_at(lon, traj.cluster_centers_m[n]);
    const solver::SolveReport rep = solver::alternating_optimize(inst, cfg);
    out.push_back({lon, BaselineMode::Joint, rep.final_objective, rep.outer_iters,
                   max_relative_violation(inst, rep.alloc), rep.wall_ms});
  }
  return out;
}

// Three clusters at equal ground distance from the track midpoint, so the
// middle step of a symmetric pass is the unique equidistant point.
inline Trajectory symmetric_trajectory() {
  Trajectory t;
  const double mid = 7.0 * t.metres_per_deg;
  const double dx = 111e3, y0 = 60e3;
  const double ym = std::sqrt(dx * dx + y0 * y0);
  t.cluster_centers_m = {{mid - dx, y0}, {mid, ym}, {mid + dx, y0}};
  return t;
}

}  // namespace semrelay::scenarios

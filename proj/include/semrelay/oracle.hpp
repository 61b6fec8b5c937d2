#pragma once
// Brute-force ground truth: exhaustive feasibility checking against the
// ORIGINAL constraints (true channel gains, no auxiliary bounds) and a
// grid search with coordinate refinement over tiny instances. Deliberately
// independent of the closed-form solver so the two can cross-check each
// other.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "semrelay/netmodel.hpp"

namespace semrelay::oracle {

// Thrown instead of silently grinding through a combinatorial grid.
struct OracleRefusal : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FeasibilityReport {
  bool ok = false;
  double worst_rel = 0.0;  // largest residual / natural scale, 0 if all <= 0
  ConstraintResiduals residuals;
};

// Original-constraint feasibility with per-constraint natural scales.
inline FeasibilityReport feasible(const NetworkInstance& inst, const Allocation& alloc,
                                  double rel_tol = 1e-12) {
  FeasibilityReport rep;
  rep.residuals = constraint_residuals(inst, alloc);
  rep.worst_rel = max_relative_violation(inst, alloc);
  rep.ok = rep.worst_rel <= rel_tol;
  return rep;
}

struct GridSpec {
  int resolution = 12;      // points per free axis before auto-scaling
  int refine_rounds = 8;    // coordinate refinement passes
  double shrink = 0.5;      // range contraction per refinement round
  double max_evals_per_round = 4e6;  // auto-reduces resolution in high dims
  std::size_t max_clusters = 2;      // refusal guard
  std::size_t max_users = 3;         // refusal guard, system-wide

  void validate() const {
    if (resolution < 3) throw std::invalid_argument("grid resolution must be >= 3");
    if (!(shrink > 0.0 && shrink < 1.0))
      throw std::invalid_argument("grid shrink must be in (0,1)");
    if (refine_rounds < 0) throw std::invalid_argument("refine rounds must be >= 0");
  }
};

struct OracleResult {
  Allocation alloc;
  double objective = 0.0;
  long feasible_candidates = 0;  // across all rounds
};

namespace detail {

// Smallest b in [0, b_max] whose satellite-hop rate covers gamma_downlink.
// The hop rate mu1*b*eps(r(b))/Q is strictly increasing in b (the bandwidth
// factor dominates the SNR loss for any logistic with a1 > 10/ln10 * max eps'),
// so bisection applies. Returns NaN when even b_max falls short. The returned
// value sits on the covering side, keeping the rate-balance residual <= 0.
inline double min_b_s2r_for_balance(const NetworkInstance& inst, std::size_t n,
                                    double p_s2r, double gamma_downlink,
                                    double b_max) {
  if (gamma_downlink <= 0.0) return 0.0;
  if (!(b_max > 0.0) || !(p_s2r > 0.0))
    return std::numeric_limits<double>::quiet_NaN();
  const double g = inst.clusters[n].sat_link.gain;
  auto rate = [&](double b) {
    return semantic_to_bit_s2r(b, snr_s2r_db(p_s2r, g, b, inst.phys), inst.sem);
  };
  if (rate(b_max) < gamma_downlink) return std::numeric_limits<double>::quiet_NaN();
  double lo = 0.0, hi = b_max;
  while (hi - lo > 1e-13 * b_max) {
    const double mid = 0.5 * (lo + hi);
    (rate(mid) >= gamma_downlink ? hi : lo) = mid;
  }
  return hi;
}

struct Axis {
  double lo = 0.0, hi = 0.0;   // current search range
  double min = 0.0, max = 0.0; // hard bounds for refinement clamping
  bool fixed = false;
  double fixed_value = 0.0;
};

inline std::vector<double> axis_points(const Axis& ax, int res) {
  if (ax.fixed || ax.hi <= ax.lo) return {ax.fixed ? ax.fixed_value : ax.lo};
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(res));
  for (int i = 0; i < res; ++i)
    v.push_back(ax.lo + (ax.hi - ax.lo) * i / (res - 1));
  return v;
}

}  // namespace detail

// Exhaustive search over per-user bandwidth/power and UAV x/y (y only when the
// cluster's users are not collinear in y; degenerate ranges collapse), with
// the satellite-side variables eliminated analytically: each cluster's uplink
// power takes its full share and its bandwidth is the minimum that balances
// the relay rate constraint (smaller keeps the bandwidth budgets loosest, and
// the objective never sees b_s2r directly). On two-cluster instances the
// satellite power split enters as one extra axis and the shared satellite
// bandwidth is handed out first-come; the final feasibility check remains
// exact regardless.
inline OracleResult grid_search(const NetworkInstance& inst, const GridSpec& grid) {
  inst.validate();
  grid.validate();
  const std::size_t N = inst.clusters.size();
  if (N > grid.max_clusters)
    throw OracleRefusal("grid_search: refusing " + std::to_string(N) +
                        " clusters (guard: " + std::to_string(grid.max_clusters) + ")");
  if (inst.total_users() > grid.max_users)
    throw OracleRefusal("grid_search: refusing " + std::to_string(inst.total_users()) +
                        " users (guard: " + std::to_string(grid.max_users) + ")");

  using detail::Axis;
  const double b_floor = 1e-3;

  // Axis layout: per cluster [b_u..., p_u..., x, y], then optional sat-power share.
  std::vector<Axis> axes;
  struct ClusterLayout {
    std::size_t b0, p0, x, y;
  };
  std::vector<ClusterLayout> layout(N);
  for (std::size_t n = 0; n < N; ++n) {
    const Cluster& c = inst.clusters[n];
    const std::size_t U = c.users.size();
    layout[n].b0 = axes.size();
    for (std::size_t u = 0; u < U; ++u)
      axes.push_back(Axis{b_floor, inst.uav_bandwidth_hz, b_floor, inst.uav_bandwidth_hz});
    layout[n].p0 = axes.size();
    for (std::size_t u = 0; u < U; ++u)
      axes.push_back(Axis{0.0, inst.uav_power_w, 0.0, inst.uav_power_w});
    double xmin = c.users[0].xy.x, xmax = xmin, ymin = c.users[0].xy.y, ymax = ymin;
    for (const auto& u : c.users) {
      xmin = std::min(xmin, u.xy.x); xmax = std::max(xmax, u.xy.x);
      ymin = std::min(ymin, u.xy.y); ymax = std::max(ymax, u.xy.y);
    }
    layout[n].x = axes.size();
    Axis ax{xmin, xmax, xmin, xmax};
    if (xmax <= xmin) { ax.fixed = true; ax.fixed_value = xmin; }
    axes.push_back(ax);
    layout[n].y = axes.size();
    Axis ay{ymin, ymax, ymin, ymax};
    if (ymax <= ymin) { ay.fixed = true; ay.fixed_value = ymin; }
    axes.push_back(ay);
  }
  std::size_t share_axis = axes.size();
  if (N == 2) axes.push_back(Axis{0.0, 1.0, 0.0, 1.0});

  std::size_t free_dims = 0;
  for (const auto& a : axes)
    if (!a.fixed) ++free_dims;
  int res = grid.resolution;
  if (free_dims > 0) {
    const int cap = static_cast<int>(
        std::floor(std::pow(grid.max_evals_per_round, 1.0 / free_dims)));
    res = std::clamp(cap, 3, grid.resolution);
  }

  OracleResult best;
  best.alloc = make_zero_allocation(inst);  // feasible seed, objective 0
  best.objective = 0.0;

  Allocation cand = make_zero_allocation(inst);
  auto evaluate = [&](const std::vector<double>& point) {
    double sat_b_used = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      const Cluster& c = inst.clusters[n];
      ClusterAlloc& ca = cand.clusters[n];
      const std::size_t U = c.users.size();
      double b_down = 0.0, p_down = 0.0;
      for (std::size_t u = 0; u < U; ++u) {
        ca.b_user[u] = point[layout[n].b0 + u];
        ca.p_user[u] = point[layout[n].p0 + u];
        b_down += ca.b_user[u];
        p_down += ca.p_user[u];
      }
      if (p_down > inst.uav_power_w || b_down >= inst.uav_bandwidth_hz) return;
      ca.uav_xy = {point[layout[n].x], point[layout[n].y]};
      ca.p_s2r = inst.sat_power_w;
      if (N == 2) {
        const double s = point[share_axis];
        ca.p_s2r = (n == 0 ? s : 1.0 - s) * inst.sat_power_w;
      }
      const double gamma_dl = downlink_rate_sums(inst, n, cand).total();
      const double b_cap = std::min(inst.uav_bandwidth_hz - b_down,
                                    inst.sat_bandwidth_hz - sat_b_used);
      const double b = detail::min_b_s2r_for_balance(inst, n, ca.p_s2r, gamma_dl, b_cap);
      if (std::isnan(b)) return;
      ca.b_s2r = b;
      sat_b_used += b;
    }
    const auto rep = feasible(inst, cand);
    if (!rep.ok) return;
    ++best.feasible_candidates;
    const double obj = sum_rate(inst, cand);
    if (obj > best.objective) {
      best.objective = obj;
      best.alloc = cand;
    }
  };

  const int rounds = grid.refine_rounds + 1;
  for (int round = 0; round < rounds; ++round) {
    std::vector<std::vector<double>> values;
    values.reserve(axes.size());
    for (const auto& a : axes) values.push_back(detail::axis_points(a, res));

    std::vector<std::size_t> idx(axes.size(), 0);
    std::vector<double> point(axes.size());
    for (std::size_t d = 0; d < axes.size(); ++d) point[d] = values[d][0];
    for (;;) {
      evaluate(point);
      std::size_t d = 0;
      for (; d < axes.size(); ++d) {
        if (++idx[d] < values[d].size()) {
          point[d] = values[d][idx[d]];
          break;
        }
        idx[d] = 0;
        point[d] = values[d][0];
      }
      if (d == axes.size()) break;
    }

    if (round + 1 == rounds || best.feasible_candidates == 0) break;
    // contract every free axis around the incumbent
    auto center_of = [&](std::size_t axis_index) -> double {
      for (std::size_t n = 0; n < N; ++n) {
        const std::size_t U = inst.clusters[n].users.size();
        if (axis_index >= layout[n].b0 && axis_index < layout[n].b0 + U)
          return best.alloc.clusters[n].b_user[axis_index - layout[n].b0];
        if (axis_index >= layout[n].p0 && axis_index < layout[n].p0 + U)
          return best.alloc.clusters[n].p_user[axis_index - layout[n].p0];
        if (axis_index == layout[n].x) return best.alloc.clusters[n].uav_xy.x;
        if (axis_index == layout[n].y) return best.alloc.clusters[n].uav_xy.y;
      }
      // satellite power share
      return inst.sat_power_w > 0 ? best.alloc.clusters[0].p_s2r / inst.sat_power_w : 0.5;
    };
    for (std::size_t d = 0; d < axes.size(); ++d) {
      Axis& a = axes[d];
      if (a.fixed) continue;
      const double w = (a.hi - a.lo) * grid.shrink;
      const double c = center_of(d);
      a.lo = std::max(a.min, c - 0.5 * w);
      a.hi = std::min(a.max, a.lo + w);
      a.lo = std::max(a.min, a.hi - w);
    }
  }
  return best;
}

}  // namespace semrelay::oracle

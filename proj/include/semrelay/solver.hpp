#pragma once
// Alternating optimization of bandwidth, auxiliary bounds, and power/placement,
// each block solved through its KKT structure:
//
//   loop: (bandwidth) -> (auxiliary bounds) -> (power + SNR bounds + position)
//
// Every subproblem runs two phases. Phase A is a primal-dual ascent: primal
// iterates come from the stationarity closed forms evaluated at the current
// multipliers WITHOUT feasibility projection (so violated bounds generate
// subgradient heat), and nonnegative multipliers follow diminishing-step
// ascent on the normalized residuals. Phase B then produces the returned
// block: closed forms evaluated at the final multipliers, projected into the
// block-feasible set, and passed through a no-objective-decrease acceptance
// gate with segment backtracking toward the (feasible) entry point. Since
// every dualized constraint is convex in its own block, points on the entry ->
// candidate segment stay feasible whenever both ends are.
//
// Multipliers are stored NORMALIZED (dimensionless): native value =
// lambda * objective_scale / constraint_scale. This keeps one step-size
// schedule meaningful across constraint families whose raw scales span ~30
// orders of magnitude.
//
// Two standing invariants the blocks maintain jointly:
//  - h_hat always equals the true channel gain at the current UAV position
//    (positions only move together with an h_hat/gamma_hat/eta_hat re-sync),
//    which keeps the gain bound tight as the equivalence argument requires.
//  - After each bandwidth pass the relay rate-balance bound holds with
//    equality (tighten_b_s2r), which is what frees cluster bandwidth for the
//    downlinks to grow into.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "semrelay/netmodel.hpp"

namespace semrelay::solver {

struct SolverConfig {
  int outer_max_iters = 200;
  double outer_rel_tol = 1e-6;
  int dual_max_iters = 400;
  double dual_step_scale = 1.0;   // step delta_k = scale / sqrt(k), k per call
  double bisection_rel_tol = 1e-10;
  double primal_floor_hz = 1e-3;
  double primal_floor_w = 1e-9;
  double kkt_tol = 1e-4;
  unsigned long long seed = 0;    // reserved for init jitter
  double init_jitter_m = 0.0;     // symmetric-tie breaking; 0 keeps exact symmetry
  bool optimize_bandwidth = true;
  bool optimize_power = true;
  bool optimize_location = true;

  void validate() const {
    if (outer_max_iters < 1 || dual_max_iters < 1)
      throw std::invalid_argument("solver config: iteration caps must be >= 1");
    if (!(outer_rel_tol > 0) || !(bisection_rel_tol > 0) || !(kkt_tol > 0) ||
        !(dual_step_scale > 0) || !(primal_floor_hz > 0) || !(primal_floor_w > 0))
      throw std::invalid_argument("solver config: tolerances must be > 0");
  }
};

struct ClusterDuals {
  double l3 = 0, l7 = 0, l10 = 0, l11 = 0, l12 = 0;
  std::vector<double> l6, l8, l9;  // per downlink
};

struct DualState {
  double l2 = 0, l4 = 0;
  std::vector<ClusterDuals> clusters;
};

inline DualState make_duals(const NetworkInstance& inst) {
  DualState d;
  d.clusters.resize(inst.clusters.size());
  for (std::size_t n = 0; n < inst.clusters.size(); ++n) {
    const std::size_t U = inst.clusters[n].users.size();
    d.clusters[n].l6.assign(U, 0.0);
    d.clusters[n].l8.assign(U, 0.0);
    d.clusters[n].l9.assign(U, 0.0);
  }
  return d;
}

struct SubproblemStats {
  int dual_iters = 0;
  bool dual_converged = false;
  double kkt_at_exit = 0.0;   // max(primal violation, complementary slackness)
  long projections = 0;       // clamps applied while building the returned block
  long clamp_events = 0;      // similarity-inverse domain clamps
  int backtracks = 0;         // acceptance-gate step halvings
  bool accepted = true;       // false if the gate fell back to the entry point
};

struct SolveReport {
  Allocation alloc;
  AuxState aux;
  DualState duals;
  std::vector<double> objective_trace;  // reformulated objective per outer cycle
  double final_objective = 0.0;         // true sum rate at the returned point
  double final_fobj = 0.0;
  ConstraintResiduals final_residuals;
  double final_kkt = 0.0;
  int outer_iters = 0;
  bool converged = false;
  bool warning_max_iters = false;
  long projection_events = 0;
  long clamp_events = 0;
  long position_skips = 0;   // clusters whose placement weights were all zero
  long rebalance_moves = 0;  // accepted cycle-end rebalance moves
  std::vector<SubproblemStats> p3_stats, p4_stats, p5_stats;
  double wall_ms = 0.0;
};

// ---------------------------------------------------------------------------
// shared helpers

namespace detail {

inline double rate_weight(const NetworkInstance& inst, UserKind k) {
  return k == UserKind::Sem ? inst.sem.mu1 / (inst.sem.mu2 * inst.sem.q_symbols) : 1.0;
}

// Gcycles/s of relay compute per bit/s delivered on this link kind.
inline double load_per_rate(const NetworkInstance& inst, UserKind k) {
  const double flops = k == UserKind::Sem ? inst.phys.g_sem : inst.phys.g_con;
  return flops / inst.phys.flops_per_cycle_z * 1e-9;
}

// d F_link / d B at fixed (P, h_hat): w * [log2(1+g) - g/((1+g) ln2)].
inline double dfobj_db(double b, double p, double h_hat, double n0, double w) {
  if (!(b > 0)) return std::numeric_limits<double>::infinity();
  const double g = h_hat * p / (b * n0);
  return w * (std::log2(1.0 + g) - g / ((1.0 + g) * M_LN2));
}

// d F_link / d P at fixed (B, h_hat).
inline double dfobj_dp(double b, double p, double h_hat, double n0, double w) {
  const double a = h_hat / (b * n0);
  return w * b * a / ((1.0 + a * p) * M_LN2);
}

// d F_link / d h_hat at fixed (B, P).
inline double dfobj_dh(double b, double p, double h_hat, double n0, double w) {
  const double a = p / (b * n0);
  return w * b * a / ((1.0 + a * h_hat) * M_LN2);
}

// Normalization scales: residuals divide by these; a normalized multiplier
// lambda corresponds to native lambda * sF / s_constraint.
struct Norms {
  double sF = 1.0;
  double s2 = 1.0, s3 = 1.0, s4 = 1.0, s12 = 1.0;
  std::vector<double> s7p, s10, s11;                // per cluster
  std::vector<std::vector<double>> s6, s6p, s8, s9, s9p;  // per link
  double s7 = 10.0;  // dB
};

inline Norms make_norms(const NetworkInstance& inst, const Allocation& alloc,
                        const AuxState& aux) {
  Norms nm;
  nm.sF = std::max(objective_fobj(inst, alloc, aux), 1.0);
  nm.s2 = inst.sat_bandwidth_hz;
  nm.s3 = inst.uav_bandwidth_hz;
  nm.s4 = inst.sat_power_w;
  nm.s12 = inst.uav_power_w;
  const std::size_t N = inst.clusters.size();
  nm.s7p.resize(N);
  nm.s10.resize(N);
  nm.s11.resize(N);
  nm.s6.resize(N); nm.s6p.resize(N); nm.s8.resize(N); nm.s9.resize(N); nm.s9p.resize(N);
  for (std::size_t n = 0; n < N; ++n) {
    const Cluster& c = inst.clusters[n];
    const ClusterAlloc& ca = alloc.clusters[n];
    const ClusterAux& cx = aux.clusters[n];
    nm.s7p[n] = std::max(c.sat_link.gain * ca.p_s2r * std::max(ca.b_s2r, 1.0), 1e-30);
    const DownlinkSums sums = aux_rate_sums(inst, n, alloc, aux);
    nm.s10[n] = std::max({cx.nu_hat, compute_load(sums.su, sums.cu, inst.phys), 1e-6});
    nm.s11[n] = std::max(semantic_to_bit_s2r(ca.b_s2r, cx.r_hat_s2r, inst.sem), 1.0);
    const std::size_t U = c.users.size();
    nm.s6[n].resize(U); nm.s6p[n].resize(U); nm.s8[n].resize(U);
    nm.s9[n].resize(U); nm.s9p[n].resize(U);
    const Vec3 uav = uav_position(c, ca);
    for (std::size_t u = 0; u < U; ++u) {
      const double h_true = air_channel_gain(uav, c.users[u].xy, inst.phys);
      nm.s6[n][u] = h_true;
      nm.s6p[n][u] = std::pow(inst.phys.beta0 / std::max(cx.h_hat[u], 1e-300),
                              2.0 / inst.phys.alpha);
      nm.s8[n][u] = std::max(cx.gamma_hat[u], 1.0);
      nm.s9[n][u] = std::max(1.0 / (1.0 + cx.gamma_hat[u]), 1e-6);
      // one multiplier prices both the efficiency row and the SINR row; the
      // scales must differ by the exact gradient ratio between the two forms
      const double g = cx.gamma_hat[u];
      nm.s9p[n][u] = std::max(nm.s9[n][u] * g * (1.0 + g) * (1.0 + g), 1e-12);
    }
  }
  return nm;
}

// One projected subgradient step on a normalized multiplier.
inline void ascend(double& lambda, double residual_normalized, double delta_k) {
  lambda = std::max(0.0, lambda + delta_k * residual_normalized);
}

// Families for the per-constraint step-size auto-scaling: the first sweep of
// each dual loop only measures residual magnitudes, then delta0 per family is
// step_scale / max(|typical residual|, 0.3) and steps decay as delta0/sqrt(k).
enum FamilyId { F2, F3, F4, F6, F7, F8, F9, F10, F11, F12, kFamilies };

struct DualStepper {
  double step_scale;
  int k = 0;  // current sweep (1 = measuring)
  double max_violation = 0.0, max_cs = 0.0;
  double fam_max[kFamilies] = {};
  double fam_delta0[kFamilies] = {};

  explicit DualStepper(double scale) : step_scale(scale) {}

  void begin_sweep() {
    ++k;
    max_violation = 0.0;
    max_cs = 0.0;
    if (k == 2)
      for (int f = 0; f < kFamilies; ++f)
        fam_delta0[f] = step_scale / std::max(fam_max[f], 0.3);
  }
  void step(double& lambda, double r, FamilyId fam) {
    max_violation = std::max(max_violation, r);
    max_cs = std::max(max_cs, lambda * std::abs(r));
    if (k == 1) {
      fam_max[fam] = std::max(fam_max[fam], std::abs(r));
      return;
    }
    ascend(lambda, r, fam_delta0[fam] / std::sqrt(static_cast<double>(k - 1)));
  }
  double exit_residual() const { return std::max(max_violation, max_cs); }
};

// Smallest b in [lo, hi] whose satellite-hop bit-equivalent rate at power p
// covers gamma_target; the hop rate is strictly increasing in b. Returns NaN
// when hi falls short, lo when the target is degenerate.
inline double balance_b_s2r(const NetworkInstance& inst, std::size_t n, double p,
                            double gamma_target, double lo, double hi) {
  if (gamma_target <= 0.0) return lo;
  if (!(hi > 0.0) || !(p > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double g = inst.clusters[n].sat_link.gain;
  auto rate = [&](double b) {
    return semantic_to_bit_s2r(b, snr_s2r_db(p, g, b, inst.phys), inst.sem);
  };
  if (rate(hi) < gamma_target) return std::numeric_limits<double>::quiet_NaN();
  double a = lo, bnd = hi;
  if (rate(std::max(a, 1e-300)) >= gamma_target) return lo;
  while (bnd - a > 1e-13 * hi) {
    const double mid = 0.5 * (a + bnd);
    (rate(mid) >= gamma_target ? bnd : a) = mid;
  }
  return bnd;
}

}  // namespace detail

// Bounds holding with equality at the given allocation; also the aux state
// used right after initialization.
inline AuxState make_tight_aux(const NetworkInstance& inst, const Allocation& alloc) {
  AuxState aux;
  aux.clusters.resize(inst.clusters.size());
  for (std::size_t n = 0; n < inst.clusters.size(); ++n) {
    const Cluster& c = inst.clusters[n];
    const ClusterAlloc& ca = alloc.clusters[n];
    ClusterAux& cx = aux.clusters[n];
    cx.r_hat_s2r = ca.b_s2r > 0
        ? snr_s2r_db(ca.p_s2r, c.sat_link.gain, ca.b_s2r, inst.phys)
        : -std::numeric_limits<double>::infinity();
    const Vec3 uav = uav_position(c, ca);
    const std::size_t U = c.users.size();
    cx.h_hat.resize(U); cx.gamma_hat.resize(U); cx.eta_hat.resize(U);
    for (std::size_t u = 0; u < U; ++u) {
      const double h = air_channel_gain(uav, c.users[u].xy, inst.phys);
      cx.h_hat[u] = h;
      const double g = ca.b_user[u] > 0
          ? snr_linear(ca.p_user[u], h, ca.b_user[u], inst.phys) : 0.0;
      cx.gamma_hat[u] = g;
      cx.eta_hat[u] = std::log2(1.0 + g);
    }
    const DownlinkSums s = downlink_rate_sums(inst, n, alloc);
    cx.nu_hat = compute_load(s.su, s.cu, inst.phys);
  }
  return aux;
}

// ---------------------------------------------------------------------------
// initialization

// Equal splits: uplink bandwidth B_S/N (shaved only as far as the cluster
// budget needs to keep the downlink floors feasible), the rest spread evenly
// over the downlinks; powers P_S/N and an even spread of the UAV power with
// the compute draw pre-subtracted; UAV at the user centroid. Auxiliaries
// start tight, and downlink bandwidths are scaled down uniformly if the relay
// rate balance starts violated.
inline std::pair<Allocation, AuxState> init_allocation(const NetworkInstance& inst,
                                                       const SolverConfig& cfg) {
  inst.validate();
  cfg.validate();
  const std::size_t N = inst.clusters.size();
  Allocation alloc = make_zero_allocation(inst);
  for (std::size_t n = 0; n < N; ++n) {
    const Cluster& c = inst.clusters[n];
    ClusterAlloc& ca = alloc.clusters[n];
    const std::size_t U = c.users.size();
    const double floor_room =
        inst.uav_bandwidth_hz - static_cast<double>(U) * cfg.primal_floor_hz;
    if (!(floor_room > 0))
      throw std::invalid_argument("init: cluster bandwidth budget cannot cover its users");
    ca.b_s2r = std::min(inst.sat_bandwidth_hz / static_cast<double>(N), floor_room);
    ca.p_s2r = inst.sat_power_w / static_cast<double>(N);
    const double b_each = std::max(
        cfg.primal_floor_hz,
        (inst.uav_bandwidth_hz - ca.b_s2r) / static_cast<double>(U));
    double cx = 0.0, cy = 0.0;
    for (const auto& u : c.users) { cx += u.xy.x; cy += u.xy.y; }
    ca.uav_xy = {cx / static_cast<double>(U), cy / static_cast<double>(U)};
    for (std::size_t u = 0; u < U; ++u) ca.b_user[u] = b_each;
    // even power split with the (rate-dependent) compute draw pre-subtracted
    double p_each = inst.uav_power_w / static_cast<double>(U);
    for (int it = 0; it < 30; ++it) {
      for (std::size_t u = 0; u < U; ++u) ca.p_user[u] = p_each;
      const DownlinkSums s = downlink_rate_sums(inst, n, alloc);
      const double reserve =
          compute_power_w(compute_load(s.su, s.cu, inst.phys), inst.phys);
      const double next =
          (inst.uav_power_w * (1.0 - 1e-12) - reserve) / static_cast<double>(U);
      if (!(next > cfg.primal_floor_w))
        throw std::invalid_argument("init: cluster power budget cannot cover its users");
      if (std::abs(next - p_each) <= 1e-15 * p_each) { p_each = next; break; }
      p_each = next;
    }
    for (std::size_t u = 0; u < U; ++u) ca.p_user[u] = p_each;

    // uniform downlink-bandwidth scale-down until the relay balance holds
    const double sat = satellite_rate(inst, n, alloc);
    if (downlink_rate_sums(inst, n, alloc).total() > sat) {
      double lo = 0.0, hi = 1.0;
      std::vector<double> base = ca.b_user;
      auto dl = [&](double s) {
        for (std::size_t u = 0; u < U; ++u)
          ca.b_user[u] = std::max(cfg.primal_floor_hz, s * base[u]);
        return downlink_rate_sums(inst, n, alloc).total();
      };
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        (dl(mid) <= sat ? lo : hi) = mid;
      }
      dl(lo);
    }
  }
  return {alloc, make_tight_aux(inst, alloc)};
}

// ---------------------------------------------------------------------------
// rate-balance tightening (bandwidth block post-pass)

// Sets each cluster's uplink bandwidth to exactly cover the bound-side
// downlink sum: b = Q * (sum of bounded rates) / (mu1 * eps(r_hat)). If the
// satellite bandwidth budget ends up exceeded, uplinks AND downlinks scale by
// a common factor, which preserves the balance.
inline Allocation tighten_b_s2r(const NetworkInstance& inst, const Allocation& alloc,
                                const AuxState& aux, bool* rescaled = nullptr,
                                double floor_hz = 1e-3) {
  Allocation out = alloc;
  double total = 0.0;
  for (std::size_t n = 0; n < inst.clusters.size(); ++n) {
    const double eps = similarity(aux.clusters[n].r_hat_s2r, inst.sem);
    const double sums = aux_rate_sums(inst, n, out, aux).total();
    const double balanced = sums * inst.sem.q_symbols / (inst.sem.mu1 * eps);
    out.clusters[n].b_s2r = std::max(floor_hz, balanced);
    total += out.clusters[n].b_s2r;
  }
  const bool over = total > inst.sat_bandwidth_hz;
  if (rescaled) *rescaled = over;
  if (over) {
    const double s = inst.sat_bandwidth_hz / total;
    for (auto& ca : out.clusters) {
      ca.b_s2r *= s;
      for (auto& b : ca.b_user) b *= s;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// (bandwidth block)

namespace detail {

// Stationarity of the bandwidth Lagrangian for one downlink:
// phi(B) = -dF/dB - l8 * h_hat*P/(N0 B^2) + l3 + A_B, strictly increasing.
struct PhiB {
  double p, h_hat, n0, w, l8, brake;  // brake = l3 + A_B
  double operator()(double b) const {
    return -dfobj_db(b, p, h_hat, n0, w) - l8 * h_hat * p / (n0 * b * b) + brake;
  }
};

inline double bisect_increasing(const PhiB& phi, double lo, double hi, double rel_tol) {
  if (phi(hi) <= 0.0) return hi;
  if (phi(lo) >= 0.0) return lo;
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (phi(mid) >= 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Native-lambda closed form for the uplink bandwidth stationarity and the
// corresponding Lagrangian derivative; the first is the root of the second.
inline double b_s2r_closed_form(double l2, double l3, double l7p, double l11,
                                double gain, double p, double r_hat_db,
                                const NetworkInstance& inst) {
  const double eps = similarity(r_hat_db, inst.sem);
  const double num = -(l2 + l3) + l7p * gain * p +
                     l11 * inst.sem.mu1 / inst.sem.q_symbols * eps;
  const double den =
      2.0 * l7p * inst.phys.noise_psd_n0 * std::pow(10.0, r_hat_db / 10.0);
  return num / den;
}

inline double dlagrangian_db_s2r(double b, double l2, double l3, double l7p,
                                 double l11, double gain, double p, double r_hat_db,
                                 const NetworkInstance& inst) {
  const double eps = similarity(r_hat_db, inst.sem);
  return l7p * (2.0 * inst.phys.noise_psd_n0 * std::pow(10.0, r_hat_db / 10.0) * b -
                gain * p) +
         l2 + l3 - l11 * inst.sem.mu1 / inst.sem.q_symbols * eps;
}

// Bandwidth block: downlinks from the per-link stationarity roots (bisection,
// since dF/dB depends on B), uplinks re-balanced tight; a single segment
// parameter toward the stationarity point enforces the cluster bandwidth,
// satellite bandwidth, compute-bound, and uplink-SNR-support constraints,
// which are all convex along the segment.
inline Allocation solve_bandwidth(const NetworkInstance& inst, const Allocation& entry,
                                  const AuxState& aux, DualState& duals,
                                  const SolverConfig& cfg, SubproblemStats* stats_out = nullptr) {
  using namespace detail;
  SubproblemStats st;
  const Norms nm = make_norms(inst, entry, aux);
  const std::size_t N = inst.clusters.size();
  const double big_b = 2.0 * inst.uav_bandwidth_hz;
  const double big_bs = 2.0 * std::min(inst.sat_bandwidth_hz, inst.uav_bandwidth_hz);

  auto native = [&](double l, double s) { return l * nm.sF / s; };

  // --- Phase A: multiplier search on unprojected stationarity iterates
  std::vector<std::vector<double>> bu(N);
  std::vector<double> bs(N);
  DualStepper ds(cfg.dual_step_scale);
  for (int k = 1; k <= cfg.dual_max_iters; ++k) {
    ds.begin_sweep();
    double b_total = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      const Cluster& c = inst.clusters[n];
      const ClusterAlloc& ca = entry.clusters[n];
      const ClusterAux& cx = aux.clusters[n];
      ClusterDuals& cd = duals.clusters[n];
      const std::size_t U = c.users.size();
      bu[n].resize(U);
      const double l3 = native(cd.l3, nm.s3);
      const double l10 = native(cd.l10, nm.s10[n]);
      const double l11 = native(cd.l11, nm.s11[n]);
      const double l7p = native(cd.l7, nm.s7p[n]);
      const double l2 = native(duals.l2, nm.s2);

      double bsn = b_s2r_closed_form(l2, l3, l7p, l11, c.sat_link.gain, ca.p_s2r,
                                     cx.r_hat_s2r, inst);
      if (!std::isfinite(bsn) || bsn < 0.0)
        bsn = (-(l2 + l3) + l11 * inst.sem.mu1 / inst.sem.q_symbols *
                                similarity(cx.r_hat_s2r, inst.sem) > 0.0)
                  ? big_bs : cfg.primal_floor_hz;
      bs[n] = std::clamp(bsn, cfg.primal_floor_hz, big_bs);
      b_total += bs[n];

      double b_down = 0.0;
      DownlinkSums sums;
      for (std::size_t u = 0; u < U; ++u) {
        const double w = rate_weight(inst, c.users[u].kind);
        const double brake = l3 + (l10 * load_per_rate(inst, c.users[u].kind) + l11) *
                                      w * cx.eta_hat[u];
        // keep the iterate above the SNR-bound support so the 1/B residual of
        // the SNR constraint stays bounded
        double b_lo = cfg.primal_floor_hz;
        if (cx.gamma_hat[u] > 0.0)
          b_lo = std::max(b_lo, cx.h_hat[u] * ca.p_user[u] /
                                    (cx.gamma_hat[u] * inst.phys.noise_psd_n0));
        b_lo = std::min(b_lo, big_b);
        PhiB phi{ca.p_user[u], cx.h_hat[u], inst.phys.noise_psd_n0, w,
                 native(cd.l8[u], nm.s8[n][u]), brake};
        bu[n][u] = bisect_increasing(phi, b_lo, big_b, cfg.bisection_rel_tol);
        b_down += bu[n][u];
        const double cap = bu[n][u] * cx.eta_hat[u];
        (c.users[u].kind == UserKind::Sem
             ? sums.su += semantic_to_bit_r2su(cap, inst.sem)
             : sums.cu += cap);
        const double r8 = (cx.h_hat[u] * ca.p_user[u] /
                               (bu[n][u] * inst.phys.noise_psd_n0) -
                           cx.gamma_hat[u]) / nm.s8[n][u];
        ds.step(cd.l8[u], r8, F8);
      }
      const double r3 = (bs[n] + b_down - inst.uav_bandwidth_hz) / nm.s3;
      const double r7p = (inst.phys.noise_psd_n0 *
                              std::pow(10.0, cx.r_hat_s2r / 10.0) * bs[n] * bs[n] -
                          c.sat_link.gain * ca.p_s2r * bs[n]) / nm.s7p[n];
      const double r10 = (compute_load(sums.su, sums.cu, inst.phys) - cx.nu_hat) / nm.s10[n];
      const double r11 = (sums.total() -
                          semantic_to_bit_s2r(bs[n], cx.r_hat_s2r, inst.sem)) / nm.s11[n];
      ds.step(cd.l3, r3, F3);
      ds.step(cd.l7, r7p, F7);
      ds.step(cd.l10, r10, F10);
      ds.step(cd.l11, r11, F11);
    }
    const double r2 = (b_total - inst.sat_bandwidth_hz) / nm.s2;
    ds.step(duals.l2, r2, F2);
    st.dual_iters = k;
    st.kkt_at_exit = ds.exit_residual();
    if (st.kkt_at_exit <= cfg.kkt_tol) { st.dual_converged = true; break; }
  }

  // --- Phase B: projected stationarity point at the final duals, with the
  // uplink re-tightened against the new downlinks (rate-balance equality)
  Allocation cand = entry;
  for (std::size_t n = 0; n < N; ++n) {
    const Cluster& c = inst.clusters[n];
    const ClusterAlloc& ca = entry.clusters[n];
    const ClusterAux& cx = aux.clusters[n];
    const ClusterDuals& cd = duals.clusters[n];
    for (std::size_t u = 0; u < c.users.size(); ++u) {
      const double w = rate_weight(inst, c.users[u].kind);
      const double l3 = native(cd.l3, nm.s3);
      const double l10 = native(cd.l10, nm.s10[n]);
      const double l11 = native(cd.l11, nm.s11[n]);
      const double brake = l3 + (l10 * load_per_rate(inst, c.users[u].kind) + l11) *
                                    w * cx.eta_hat[u];
      // SNR-bound keeps B from shrinking below the entry support
      double b_lo = cfg.primal_floor_hz;
      if (cx.gamma_hat[u] > 0.0)
        b_lo = std::max(b_lo, cx.h_hat[u] * ca.p_user[u] /
                                  (cx.gamma_hat[u] * inst.phys.noise_psd_n0));
      b_lo = std::min(b_lo, inst.uav_bandwidth_hz);
      PhiB phi{ca.p_user[u], cx.h_hat[u], inst.phys.noise_psd_n0, w,
               native(cd.l8[u], nm.s8[n][u]), brake};
      double b = bisect_increasing(phi, b_lo, inst.uav_bandwidth_hz,
                                   cfg.bisection_rel_tol);
      if (b <= b_lo || b >= inst.uav_bandwidth_hz) ++st.projections;
      cand.clusters[n].b_user[u] = b;
    }
  }

  // segment entry -> cand on downlinks, uplink re-balanced at every t; both
  // endpoints satisfy the SNR-bound supports and every limiting constraint is
  // convex in t, so the feasible t-set is an interval containing 0
  auto assemble = [&](double t, Allocation& out) {
    double worst = -std::numeric_limits<double>::infinity();
    double b_s2r_total = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      const Cluster& c = inst.clusters[n];
      const ClusterAux& cx = aux.clusters[n];
      double b_down = 0.0;
      DownlinkSums sums;
      for (std::size_t u = 0; u < c.users.size(); ++u) {
        const double b = entry.clusters[n].b_user[u] +
                         t * (cand.clusters[n].b_user[u] - entry.clusters[n].b_user[u]);
        out.clusters[n].b_user[u] = b;
        b_down += b;
        const double cap = b * cx.eta_hat[u];
        (c.users[u].kind == UserKind::Sem
             ? sums.su += semantic_to_bit_r2su(cap, inst.sem)
             : sums.cu += cap);
      }
      const double eps = similarity(cx.r_hat_s2r, inst.sem);
      const double balanced =
          std::max(cfg.primal_floor_hz,
                   sums.total() * inst.sem.q_symbols / (inst.sem.mu1 * eps));
      out.clusters[n].b_s2r = balanced;
      b_s2r_total += balanced;
      // uplink SNR support: b_s2r <= gain*p / (N0 * 10^(r_hat/10))
      const double c7cap = c.sat_link.gain * entry.clusters[n].p_s2r /
                           (inst.phys.noise_psd_n0 * std::pow(10.0, cx.r_hat_s2r / 10.0));
      worst = std::max(worst, (balanced - c7cap) / std::max(c7cap, 1.0));
      worst = std::max(worst, (balanced + b_down - inst.uav_bandwidth_hz) / nm.s3);
      worst = std::max(worst,
                       (compute_load(sums.su, sums.cu, inst.phys) - cx.nu_hat) / nm.s10[n]);
    }
    worst = std::max(worst, (b_s2r_total - inst.sat_bandwidth_hz) / nm.s2);
    return worst;
  };

  Allocation out = entry;
  const double feas_tol = 1e-9;
  double t_hi = 1.0;
  if (assemble(1.0, out) > feas_tol) {
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (assemble(mid, out) <= feas_tol ? lo : hi) = mid;
    }
    t_hi = lo;
    ++st.backtracks;
  }
  assemble(t_hi, out);
  // the objective along the segment is concave (a sum of per-user concave
  // rate terms in their own bandwidths), so an endpoint below the entry value
  // means the multipliers were still mistuned mid-schedule: take the interior
  // maximum instead and never exit below the entry point
  const double f_entry = objective_fobj(inst, entry, aux);
  if (objective_fobj(inst, out, aux) < f_entry) {
    double lo = 0.0, hi = t_hi;
    for (int it = 0; it < 60; ++it) {
      const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
      assemble(m1, out);
      const double f1 = objective_fobj(inst, out, aux);
      assemble(m2, out);
      const double f2 = objective_fobj(inst, out, aux);
      (f1 < f2 ? lo : hi) = (f1 < f2 ? m1 : m2);
    }
    assemble(lo, out);
    ++st.backtracks;
  }

  // --- Phase C: per-user polish. With the uplink pinned at its balance value
  // the block is a separable concave program in the downlink bandwidths over
  // linear caps, so a coordinate sweep only ever raises the objective; it
  // rescues entries where the multiplier search stalled against a cap.
  for (int sweep = 0; sweep < 3; ++sweep) {
    bool moved = false;
    for (std::size_t n = 0; n < N; ++n) {
      const Cluster& c = inst.clusters[n];
      const ClusterAlloc& ca = entry.clusters[n];
      const ClusterAux& cx = aux.clusters[n];
      ClusterAlloc& co = out.clusters[n];
      const double eps = similarity(cx.r_hat_s2r, inst.sem);
      const double to_bs = inst.sem.q_symbols / (inst.sem.mu1 * eps);
      double others_bs = 0.0;
      for (std::size_t m = 0; m < N; ++m)
        if (m != n) others_bs += out.clusters[m].b_s2r;
      const double c7cap = c.sat_link.gain * ca.p_s2r /
                           (inst.phys.noise_psd_n0 *
                            std::pow(10.0, cx.r_hat_s2r / 10.0));
      const double bs_cap = std::min(c7cap, inst.sat_bandwidth_hz - others_bs);
      for (std::size_t u = 0; u < c.users.size(); ++u) {
        const double w = rate_weight(inst, c.users[u].kind);
        const double a_u = w * cx.eta_hat[u];
        const double c_u = load_per_rate(inst, c.users[u].kind) * a_u;
        double d_rest = 0.0, l_rest = 0.0, b_rest = 0.0;
        for (std::size_t v = 0; v < c.users.size(); ++v) {
          if (v == u) continue;
          const double av = rate_weight(inst, c.users[v].kind) * cx.eta_hat[v];
          d_rest += av * co.b_user[v];
          l_rest += load_per_rate(inst, c.users[v].kind) * av * co.b_user[v];
          b_rest += co.b_user[v];
        }
        double lo = cfg.primal_floor_hz;
        if (cx.gamma_hat[u] > 0.0)
          lo = std::max(lo, cx.h_hat[u] * ca.p_user[u] /
                                (cx.gamma_hat[u] * inst.phys.noise_psd_n0));
        double hi = (inst.uav_bandwidth_hz - b_rest - d_rest * to_bs) /
                    (1.0 + a_u * to_bs);
        if (a_u > 0.0) hi = std::min(hi, (bs_cap / to_bs - d_rest) / a_u);
        if (c_u > 0.0) hi = std::min(hi, (cx.nu_hat - l_rest) / c_u);
        hi = std::max(hi, co.b_user[u]);  // the current point is feasible
        if (!(hi > lo)) continue;
        auto fb = [&](double b) {
          return w * bit_rate(b, snr_linear(ca.p_user[u], cx.h_hat[u], b,
                                            inst.phys));
        };
        double glo = lo, ghi = hi;
        for (int it = 0; it < 60; ++it) {
          const double m1 = glo + (ghi - glo) / 3.0;
          const double m2 = ghi - (ghi - glo) / 3.0;
          const double f1 = fb(m1), f2 = fb(m2);
          (f1 < f2 ? glo : ghi) = f1 < f2 ? m1 : m2;
        }
        const double b_new = 0.5 * (glo + ghi);
        if (fb(b_new) > fb(co.b_user[u]) &&
            std::abs(b_new - co.b_user[u]) > 1e-9 * std::max(co.b_user[u], 1.0)) {
          co.b_user[u] = b_new;
          moved = true;
        }
      }
      const DownlinkSums s = aux_rate_sums(inst, n, out, aux);
      co.b_s2r = std::max(cfg.primal_floor_hz, s.total() * to_bs);
    }
    if (!moved) break;
  }
  if (stats_out) *stats_out = st;
  return out;
}

// ---------------------------------------------------------------------------
// (auxiliary block)

// Auxiliary bounds: multiplier search on the closed forms, then the exact
// block optimum. The gain bound rises to its cap min(true gain, SNR-bound
// support), the efficiency bound drops onto log2(1+gamma_hat), and the
// compute-frequency bound takes the dual-balanced value clamped between the
// realized load and the power-budget cap.
inline AuxState solve_auxiliary(const NetworkInstance& inst, const Allocation& alloc,
                                const AuxState& entry, DualState& duals,
                                const SolverConfig& cfg, SubproblemStats* stats_out = nullptr) {
  using namespace detail;
  SubproblemStats st;
  const Norms nm = make_norms(inst, alloc, entry);
  const std::size_t N = inst.clusters.size();
  auto native = [&](double l, double s) { return l * nm.sF / s; };

  // Phase A
  DualStepper ds(cfg.dual_step_scale);
  for (int k = 1; k <= cfg.dual_max_iters; ++k) {
    ds.begin_sweep();
    for (std::size_t n = 0; n < N; ++n) {
      const Cluster& c = inst.clusters[n];
      const ClusterAlloc& ca = alloc.clusters[n];
      const ClusterAux& cx = entry.clusters[n];
      ClusterDuals& cd = duals.clusters[n];
      const std::size_t U = c.users.size();
      const double l10 = native(cd.l10, nm.s10[n]);
      const double l11 = native(cd.l11, nm.s11[n]);
      const double l12 = native(cd.l12, nm.s12);
      const Vec3 uav = uav_position(c, ca);

      DownlinkSums sums;
      for (std::size_t u = 0; u < U; ++u) {
        const double w = rate_weight(inst, c.users[u].kind);
        const double A = ca.p_user[u] / (ca.b_user[u] * inst.phys.noise_psd_n0);
        const double h_true = air_channel_gain(uav, c.users[u].xy, inst.phys);
        const double l6 = native(cd.l6[u], nm.s6[n][u]);
        const double l8 = native(cd.l8[u], nm.s8[n][u]);
        const double denom = l6 + l8 * A;
        double h = denom > 1e-300
            ? (w * ca.b_user[u] * A / (M_LN2 * denom) - 1.0) / A
            : 2.0 * h_true;
        h = std::clamp(h, 0.0, 2.0 * h_true);
        const double wb = w * ca.b_user[u];
        const double coef = (l10 * load_per_rate(inst, c.users[u].kind) + l11) * wb;
        const double l9 = native(cd.l9[u], nm.s9[n][u]);
        const double eta_cap = std::min(64.0, 2.0 * cx.eta_hat[u] + 8.0);
        double eta;
        if (l9 <= 1e-300) {
          eta = coef > 0.0 ? 0.0 : eta_cap;
        } else {
          const double arg = coef / (l9 * M_LN2);
          eta = arg > 0.0 ? -std::log2(arg) : eta_cap;
        }
        eta = std::clamp(eta, 0.0, eta_cap);
        const double r6 = (h - h_true) / nm.s6[n][u];
        const double r8 = (h * A - cx.gamma_hat[u]) / nm.s8[n][u];
        const double r9 = (std::exp2(-eta) - 1.0 / (1.0 + cx.gamma_hat[u])) / nm.s9[n][u];
        ds.step(cd.l6[u], r6, F6);
        ds.step(cd.l8[u], r8, F8);
        ds.step(cd.l9[u], r9, F9);
        const double cap = ca.b_user[u] * eta;
        (c.users[u].kind == UserKind::Sem
             ? sums.su += semantic_to_bit_r2su(cap, inst.sem)
             : sums.cu += cap);
      }
      double p_down = 0.0;
      for (double v : ca.p_user) p_down += v;
      const double c12cap = std::cbrt(
          std::max(0.0, inst.uav_power_w - p_down) / inst.phys.zeta0);
      const double load = compute_load(sums.su, sums.cu, inst.phys);
      const double nu_cap = 2.0 * std::max({c12cap, load, cx.nu_hat, 1e-3});
      double nu = l12 > 1e-300 ? std::sqrt(native(cd.l10, nm.s10[n]) /
                                           (3.0 * l12 * inst.phys.zeta0))
                               : nu_cap;
      if (!std::isfinite(nu)) nu = nu_cap;
      nu = std::clamp(nu, 0.0, nu_cap);
      const double r10 = (load - nu) / nm.s10[n];
      const double r11 = (sums.total() - semantic_to_bit_s2r(ca.b_s2r, cx.r_hat_s2r,
                                                             inst.sem)) / nm.s11[n];
      const double r12 =
          (compute_power_w(nu, inst.phys) + p_down - inst.uav_power_w) / nm.s12;
      ds.step(cd.l10, r10, F10);
      ds.step(cd.l11, r11, F11);
      ds.step(cd.l12, r12, F12);
    }
    st.dual_iters = k;
    st.kkt_at_exit = ds.exit_residual();
    if (st.kkt_at_exit <= cfg.kkt_tol) { st.dual_converged = true; break; }
  }

  // Phase B: closed forms at the final duals. Gain bounds re-tighten to their
  // caps (true gain and SNR-bound support) — the objective pays for anything
  // lower. Efficiency bounds sit on their SNR-bound floor, or above it where
  // the dual balance asks for slack-side room, trimmed back uniformly so the
  // relay balance and the compute budget stay feasible (the floor itself is
  // feasible because the entry point was). The frequency bound follows its
  // dual balance between the realized load and the compute budget's support.
  AuxState out = entry;
  for (std::size_t n = 0; n < N; ++n) {
    const Cluster& c = inst.clusters[n];
    const ClusterAlloc& ca = alloc.clusters[n];
    ClusterAux& cx = out.clusters[n];
    const Vec3 uav = uav_position(c, ca);
    for (std::size_t u = 0; u < c.users.size(); ++u) {
      const double h_true = air_channel_gain(uav, c.users[u].xy, inst.phys);
      const double a = ca.p_user[u] / (ca.b_user[u] * inst.phys.noise_psd_n0);
      double cap = h_true;
      if (a > 0.0) cap = std::min(cap, cx.gamma_hat[u] / a);
      if (cap < h_true) ++st.projections;
      cx.h_hat[u] = cap;
    }
  }
  for (std::size_t n = 0; n < N; ++n) {
    const Cluster& c = inst.clusters[n];
    const ClusterAlloc& ca = alloc.clusters[n];
    const ClusterDuals& cd = duals.clusters[n];
    ClusterAux& cx = out.clusters[n];
    const double l10 = native(cd.l10, nm.s10[n]);
    const double l11 = native(cd.l11, nm.s11[n]);
    const double l12 = native(cd.l12, nm.s12);
    const std::size_t U = c.users.size();

    std::vector<double> eta_lo(U), eta_hi(U);
    for (std::size_t u = 0; u < U; ++u) {
      const double w = rate_weight(inst, c.users[u].kind);
      eta_lo[u] = std::log2(1.0 + cx.gamma_hat[u]);
      const double coef = (l10 * load_per_rate(inst, c.users[u].kind) + l11) * w *
                          ca.b_user[u];
      const double l9 = native(cd.l9[u], nm.s9[n][u]);
      double eta = eta_lo[u];
      if (l9 > 1e-300 && coef > 0.0) {
        eta = -std::log2(coef / (l9 * M_LN2));
        if (!std::isfinite(eta)) eta = eta_lo[u];
      }
      if (eta < eta_lo[u]) ++st.projections;
      eta_hi[u] = std::max(eta_lo[u], std::min(eta, eta_lo[u] + 16.0));
    }

    double p_down = 0.0;
    for (double v : ca.p_user) p_down += v;
    const double c12cap =
        std::cbrt(std::max(0.0, inst.uav_power_w - p_down) / inst.phys.zeta0);
    const double supply = semantic_to_bit_s2r(ca.b_s2r, cx.r_hat_s2r, inst.sem);
    auto apply = [&](double t) {
      DownlinkSums s;
      for (std::size_t u = 0; u < U; ++u) {
        cx.eta_hat[u] = eta_lo[u] + t * (eta_hi[u] - eta_lo[u]);
        const double cbits = ca.b_user[u] * cx.eta_hat[u];
        (c.users[u].kind == UserKind::Sem
             ? s.su += semantic_to_bit_r2su(cbits, inst.sem)
             : s.cu += cbits);
      }
      return s;
    };
    auto fits = [&](const DownlinkSums& s) {
      return s.total() <= supply &&
             compute_load(s.su, s.cu, inst.phys) <= c12cap;
    };
    DownlinkSums sums = apply(1.0);
    if (!fits(sums)) {
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        (fits(apply(mid)) ? lo : hi) = mid;
      }
      sums = apply(lo);
      ++st.backtracks;
    }

    const double load = compute_load(sums.su, sums.cu, inst.phys);
    double nu;
    if (l10 <= 1e-300)
      nu = load;  // compute bound unpriced: smallest consistent value
    else if (l12 > 1e-300)
      nu = std::sqrt(l10 / (3.0 * l12 * inst.phys.zeta0));
    else
      nu = c12cap;  // compute priced, budget unpriced: release fully
    if (!std::isfinite(nu)) nu = c12cap;
    cx.nu_hat = std::clamp(nu, load, std::max(load, c12cap));
  }
  if (stats_out) *stats_out = st;
  return out;
}

// ---------------------------------------------------------------------------
// (power / SNR-bound / placement block)

// Power, SNR bounds, and placement. Satellite powers saturate their budget
// (hop similarity only ever improves with power) with per-cluster floors that
// keep the current rate-balance SNR supportable; downlink powers follow the
// water-filling form capped by the efficiency-bound support, with a cluster
// power-budget rescale. Positions take one gated step toward the
// gradient-consistent weighted centroid of the cluster's users, re-syncing
// the gain bounds along the way. SNR bounds re-tighten last.
inline std::pair<Allocation, AuxState> solve_power_location(
    const NetworkInstance& inst, const Allocation& entry, const AuxState& aux_entry,
    DualState& duals, const SolverConfig& cfg, SubproblemStats* stats_out = nullptr,
    long* position_skips = nullptr) {
  using namespace detail;
  SubproblemStats st;
  const Norms nm = make_norms(inst, entry, aux_entry);
  const std::size_t N = inst.clusters.size();
  auto native = [&](double l, double s) { return l * nm.sF / s; };

  // per-cluster balance targets E and their supporting uplink power floors
  std::vector<double> E(N), p_floor(N);
  for (std::size_t n = 0; n < N; ++n) {
    const ClusterAlloc& ca = entry.clusters[n];
    const double sums = aux_rate_sums(inst, n, entry, aux_entry).total();
    bool clamped = false;
    const double target = ca.b_s2r > 0
        ? sums * inst.sem.q_symbols / (inst.sem.mu1 * ca.b_s2r) : 0.0;
    E[n] = similarity_inverse_clamped(target, inst.sem, &clamped);
    if (clamped) ++st.clamp_events;
    p_floor[n] = inst.phys.noise_psd_n0 * std::pow(10.0, E[n] / 10.0) * ca.b_s2r /
                 inst.clusters[n].sat_link.gain;
  }

  // Phase A
  DualStepper ds(cfg.dual_step_scale);
  for (int k = 1; k <= cfg.dual_max_iters; ++k) {
    ds.begin_sweep();
    const double l4 = native(duals.l4, nm.s4);
    double ps_total = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      const Cluster& c = inst.clusters[n];
      const ClusterAlloc& ca = entry.clusters[n];
      const ClusterAux& cx = aux_entry.clusters[n];
      ClusterDuals& cd = duals.clusters[n];
      const double l7 = native(cd.l7, nm.s7);
      const double l11p = native(cd.l11, 1.0);
      const double l12 = native(cd.l12, nm.s12);

      double ps = l4 > 1e-300 ? 10.0 * l7 / (l4 * M_LN10) : 2.0 * inst.sat_power_w;
      ps = std::clamp(ps, cfg.primal_floor_w, 2.0 * inst.sat_power_w);
      ps_total += ps;
      const double r_true = snr_s2r_db(ps, c.sat_link.gain,
                                       std::max(ca.b_s2r, cfg.primal_floor_hz), inst.phys);
      double r_hat = (l7 > 1e-300 && l11p > 1e-300) ? E[n] - std::log(l7 / l11p)
                                                    : (l7 <= 1e-300 ? E[n] + 20.0
                                                                    : E[n] - 3.0);
      r_hat = std::clamp(r_hat, E[n] - 3.0, E[n] + 20.0);
      const double r7 = (r_hat - r_true) / nm.s7;
      const double r11p = std::exp(E[n] - r_hat) - 1.0;
      ds.step(cd.l7, r7, F7);
      ds.step(cd.l11, r11p, F11);

      // position iterate: centroid at the current ball multipliers, so the
      // ball residuals below carry a real pull-back signal for each user
      double wsum = 0.0;
      Vec2 pos = ca.uav_xy;
      for (std::size_t u = 0; u < c.users.size(); ++u) wsum += cd.l6[u];
      if (wsum > 1e-300) {
        double tx = 0.0, ty = 0.0;
        for (std::size_t u = 0; u < c.users.size(); ++u) {
          tx += cd.l6[u] * c.users[u].xy.x;
          ty += cd.l6[u] * c.users[u].xy.y;
        }
        pos = {tx / wsum, ty / wsum};
      }
      double p_down = 0.0;
      for (std::size_t u = 0; u < c.users.size(); ++u) {
        const double w = rate_weight(inst, c.users[u].kind);
        const double ap = cx.h_hat[u] / (ca.b_user[u] * inst.phys.noise_psd_n0);
        const double l8 = native(cd.l8[u], nm.s8[n][u]);
        const double l9p = native(cd.l9[u], nm.s9p[n][u]);
        const double den = l8 * ap + l12;
        double p = den > 1e-300
            ? (w * ca.b_user[u] / M_LN2) / den - 1.0 / std::max(ap, 1e-300)
            : 2.0 * inst.uav_power_w;
        p = std::clamp(p, cfg.primal_floor_w, 2.0 * inst.uav_power_w);
        p_down += p;
        const double gmax = std::exp2(cx.eta_hat[u]) - 1.0;
        double gh = l9p > 1e-300 ? (l8 + l9p * gmax) / (2.0 * l9p)
                                 : 2.0 * (gmax + 1.0);
        gh = std::clamp(gh, 0.0, 2.0 * (gmax + 1.0));
        const double r8 = (cx.h_hat[u] * p / (ca.b_user[u] * inst.phys.noise_psd_n0) - gh) /
                          nm.s8[n][u];
        const double r9p = (gh * gh - gmax * gh) / nm.s9p[n][u];
        ds.step(cd.l8[u], r8, F8);
        ds.step(cd.l9[u], r9p, F9);
        // placement weights ascend on the distance-ball residual
        const double dx = pos.x - c.users[u].xy.x, dy = pos.y - c.users[u].xy.y;
        const double d2 = dx * dx + dy * dy + c.uav_height * c.uav_height;
        const double ball =
            std::pow(inst.phys.beta0 / std::max(cx.h_hat[u], 1e-300), 2.0 / inst.phys.alpha);
        const double r6p = (d2 - ball) / nm.s6p[n][u];
        ds.step(cd.l6[u], r6p, F6);
      }
      const double r12 = (compute_power_w(cx.nu_hat, inst.phys) + p_down -
                          inst.uav_power_w) / nm.s12;
      ds.step(cd.l12, r12, F12);
    }
    const double r4 = (ps_total - inst.sat_power_w) / nm.s4;
    ds.step(duals.l4, r4, F4);
    st.dual_iters = k;
    st.kkt_at_exit = ds.exit_residual();
    if (st.kkt_at_exit <= cfg.kkt_tol) { st.dual_converged = true; break; }
  }

  Allocation alloc = entry;
  AuxState aux = aux_entry;

  if (cfg.optimize_power) {
    // satellite power: saturate the budget above the per-cluster support floors
    double floor_sum = 0.0;
    for (double v : p_floor) floor_sum += v;
    if (floor_sum <= inst.sat_power_w) {
      std::vector<double> want(N);
      double extra_want = 0.0;
      const double l4 = native(duals.l4, nm.s4);
      for (std::size_t n = 0; n < N; ++n) {
        const double l7 = native(duals.clusters[n].l7, nm.s7);
        double target = l4 > 1e-300 ? 10.0 * l7 / (l4 * M_LN10) : inst.sat_power_w;
        target = std::clamp(target, p_floor[n], 2.0 * inst.sat_power_w);
        want[n] = target - p_floor[n];
        extra_want += want[n];
      }
      const double surplus = inst.sat_power_w - floor_sum;
      for (std::size_t n = 0; n < N; ++n) {
        const double share = extra_want > 1e-300
            ? surplus * want[n] / extra_want
            : surplus / static_cast<double>(N);
        alloc.clusters[n].p_s2r = p_floor[n] + share;
      }
    }  // else keep entry powers (cannot happen from a feasible entry)

    // downlink powers: the block reduces to water-filling with per-user caps
    // at the SNR-bound supports and the cluster budget left by the frequency
    // bound, so solve the water level exactly by bisection and write the
    // consistent multipliers back (the ascent loop above was converging to
    // exactly these values)
    for (std::size_t n = 0; n < N; ++n) {
      const Cluster& c = inst.clusters[n];
      const ClusterAlloc& ca = entry.clusters[n];
      const ClusterAux& cx = aux_entry.clusters[n];
      ClusterDuals& cd = duals.clusters[n];
      const std::size_t U = c.users.size();
      std::vector<double> ap(U), wb(U), pcap(U);
      double cap_sum = 0.0;
      for (std::size_t u = 0; u < U; ++u) {
        ap[u] = cx.h_hat[u] / (ca.b_user[u] * inst.phys.noise_psd_n0);
        wb[u] = rate_weight(inst, c.users[u].kind) * ca.b_user[u] / M_LN2;
        pcap[u] = std::max(cfg.primal_floor_w,
                           (std::exp2(cx.eta_hat[u]) - 1.0) / std::max(ap[u], 1e-300));
        cap_sum += pcap[u];
      }
      const double budget = std::max(
          inst.uav_power_w - compute_power_w(aux_entry.clusters[n].nu_hat, inst.phys),
          static_cast<double>(U) * cfg.primal_floor_w);
      auto fill = [&](double mu, std::vector<double>& p) {
        double s = 0.0;
        for (std::size_t u = 0; u < U; ++u) {
          const double raw = mu > 0.0 ? wb[u] / mu - 1.0 / std::max(ap[u], 1e-300)
                                      : pcap[u];
          p[u] = std::clamp(raw, cfg.primal_floor_w, pcap[u]);
          s += p[u];
        }
        return s;
      };
      std::vector<double> p(U);
      double mu = 0.0;
      if (cap_sum > budget) {
        double lo = 0.0, hi = 1.0;
        while (fill(hi, p) > budget && hi < 1e300) hi *= 2.0;
        for (int it = 0; it < 200; ++it) {
          mu = 0.5 * (lo + hi);
          (fill(mu, p) > budget ? lo : hi) = mu;
        }
        mu = hi;
        ++st.backtracks;
      }
      fill(mu, p);
      for (std::size_t u = 0; u < U; ++u) {
        alloc.clusters[n].p_user[u] = p[u];
        // refresh the budget and SNR-support prices at the exact solution
        double l8 = 0.0;
        if (p[u] >= pcap[u] * (1.0 - 1e-12)) {
          l8 = std::max(0.0, (wb[u] / (p[u] + 1.0 / std::max(ap[u], 1e-300)) - mu) /
                                 std::max(ap[u], 1e-300));
          ++st.projections;
        }
        cd.l8[u] = l8 * nm.s8[n][u] / nm.sF;
      }
      cd.l12 = mu * nm.s12 / nm.sF;
    }
  }

  if (cfg.optimize_location) {
    // UAV position moves toward the centroid weighted by the distance-ball
    // multipliers, pulled back along the segment so every gain bound's ball
    // still contains it — the bounds themselves belong to the previous block
    // and stay put, so the move spends exactly the slack they granted
    for (std::size_t n = 0; n < N; ++n) {
      const Cluster& c = inst.clusters[n];
      ClusterAlloc& ca = alloc.clusters[n];
      const ClusterAux& cx = aux.clusters[n];
      const ClusterDuals& cd = duals.clusters[n];
      const std::size_t U = c.users.size();
      double wsum = 0.0, tx = 0.0, ty = 0.0;
      for (std::size_t u = 0; u < U; ++u) {
        wsum += cd.l6[u];
        tx += cd.l6[u] * c.users[u].xy.x;
        ty += cd.l6[u] * c.users[u].xy.y;
      }
      if (!(wsum > 1e-300)) {
        if (position_skips) ++*position_skips;
        continue;
      }
      const Vec2 from = ca.uav_xy;
      const Vec2 to{tx / wsum, ty / wsum};
      auto inside = [&](double t) {
        const Vec2 q{from.x + t * (to.x - from.x), from.y + t * (to.y - from.y)};
        for (std::size_t u = 0; u < U; ++u) {
          const double dx = q.x - c.users[u].xy.x, dy = q.y - c.users[u].xy.y;
          const double d2 = dx * dx + dy * dy + c.uav_height * c.uav_height;
          const double ball = std::pow(
              inst.phys.beta0 / std::max(cx.h_hat[u], 1e-300), 2.0 / inst.phys.alpha);
          if (d2 > ball * (1.0 + 1e-12)) return false;
        }
        return true;
      };
      double t = 1.0;
      if (!inside(1.0)) {
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          (inside(mid) ? lo : hi) = mid;
        }
        t = lo;
        ++st.projections;
      }
      ca.uav_xy = {from.x + t * (to.x - from.x), from.y + t * (to.y - from.y)};
    }
  }

  // Re-set the SNR bounds at the new powers/positions. gamma_hat takes the
  // dual-balanced stationarity value clamped between the realized SNR and the
  // efficiency-bound support: leaving C8 slack where the multipliers indicate
  // is what lets the next bandwidth pass shrink an over-provisioned link.
  for (std::size_t n = 0; n < N; ++n) {
    const Cluster& c = inst.clusters[n];
    const ClusterAlloc& ca = alloc.clusters[n];
    ClusterAux& cx = aux.clusters[n];
    const ClusterDuals& cd = duals.clusters[n];
    for (std::size_t u = 0; u < c.users.size(); ++u) {
      const double g = ca.b_user[u] > 0
          ? snr_linear(ca.p_user[u], cx.h_hat[u], ca.b_user[u], inst.phys) : 0.0;
      const double gmax = std::exp2(cx.eta_hat[u]) - 1.0;
      const double l8 = native(cd.l8[u], nm.s8[n][u]);
      const double l9p = native(cd.l9[u], nm.s9p[n][u]);
      const double balanced =
          l9p > 1e-300 ? (l8 + l9p * gmax) / (2.0 * l9p) : gmax;
      cx.gamma_hat[u] = std::clamp(balanced, g, std::max(g, gmax));
    }
    if (ca.b_s2r > 0) {
      const double r_true = snr_s2r_db(ca.p_s2r, c.sat_link.gain, ca.b_s2r, inst.phys);
      // hop SNR bound: dual-balanced between the hop budget price and the
      // rate-balance price, kept between the balance support and the realized
      // SNR. Exiting below the realized SNR leaves hop headroom the next
      // bandwidth pass can spend.
      const double l7 = native(cd.l7, nm.s7);
      const double l11p = native(cd.l11, 1.0);
      double r = r_true;
      if (l7 > 1e-300 && l11p > 1e-300) r = E[n] - std::log(l7 / l11p);
      cx.r_hat_s2r = std::clamp(r, std::min(E[n], r_true), r_true);
    }
  }
  if (stats_out) *stats_out = st;
  return {std::move(alloc), std::move(aux)};
}

// ---------------------------------------------------------------------------
// dual update (exposed for tests; the blocks use the same helper internally)

inline void dual_update(double& lambda, double residual_normalized, double delta0,
                        int k) {
  detail::ascend(lambda, residual_normalized, delta0 / std::sqrt(static_cast<double>(k)));
}

// ---------------------------------------------------------------------------
// KKT residual of the current primal/dual pair: max over normalized
// complementary slackness, positive constraint residuals, and projected
// stationarity of the per-variable Lagrangian derivatives.

namespace detail {

// Walks every per-variable stationarity row of the Lagrangian and hands the
// callback (gradient, variable, lower bound, upper bound, scale). Shared by
// the residual measurement and the final dual calibration so both score
// exactly the same system.
template <class Fn>
inline void visit_stationarity(const NetworkInstance& inst, const Allocation& alloc,
                               const AuxState& aux, const DualState& duals,
                               const SolverConfig& cfg, Fn&& row) {
  const Norms nm = make_norms(inst, alloc, aux);
  auto native = [&](double l, double s) { return l * nm.sF / s; };
  const std::size_t N = inst.clusters.size();
  const double l2 = native(duals.l2, nm.s2);
  const double l4 = native(duals.l4, nm.s4);
  for (std::size_t n = 0; n < N; ++n) {
    const Cluster& c = inst.clusters[n];
    const ClusterAlloc& ca = alloc.clusters[n];
    const ClusterAux& cx = aux.clusters[n];
    const ClusterDuals& cd = duals.clusters[n];
    const double l3 = native(cd.l3, nm.s3);
    const double l7p = native(cd.l7, nm.s7p[n]);
    const double l10 = native(cd.l10, nm.s10[n]);
    const double l11 = native(cd.l11, nm.s11[n]);
    const double l12 = native(cd.l12, nm.s12);

    row(dlagrangian_db_s2r(ca.b_s2r, l2, l3, l7p, l11, c.sat_link.gain,
                           ca.p_s2r, cx.r_hat_s2r, inst),
        ca.b_s2r, cfg.primal_floor_hz, inst.uav_bandwidth_hz, nm.s2);
    row(l4 - l7p * c.sat_link.gain * ca.b_s2r, ca.p_s2r,
        cfg.primal_floor_w, inst.sat_power_w, nm.s4);
    // hop SNR bound: priced by the quadratic hop constraint on one side and
    // the rate balance (through the similarity slope) on the other
    const double pow_r = std::pow(10.0, cx.r_hat_s2r / 10.0);
    row(l7p * (M_LN10 / 10.0) * inst.phys.noise_psd_n0 * pow_r * ca.b_s2r * ca.b_s2r -
            l11 * (inst.sem.mu1 / inst.sem.q_symbols) * ca.b_s2r *
                similarity_deriv(cx.r_hat_s2r, inst.sem),
        cx.r_hat_s2r, -1e9, 1e9, nm.s7);
    for (std::size_t u = 0; u < c.users.size(); ++u) {
      const double w = rate_weight(inst, c.users[u].kind);
      const double l6 = native(cd.l6[u], nm.s6[n][u]);
      const double l8 = native(cd.l8[u], nm.s8[n][u]);
      const double l9 = native(cd.l9[u], nm.s9[n][u]);
      const double l9p = native(cd.l9[u], nm.s9p[n][u]);
      const double brake = l3 + (l10 * load_per_rate(inst, c.users[u].kind) + l11) *
                                    w * cx.eta_hat[u];
      PhiB phi{ca.p_user[u], cx.h_hat[u], inst.phys.noise_psd_n0, w, l8, brake};
      row(phi(ca.b_user[u]), ca.b_user[u], cfg.primal_floor_hz,
          inst.uav_bandwidth_hz, nm.s3);
      const double ap = cx.h_hat[u] / (ca.b_user[u] * inst.phys.noise_psd_n0);
      row(-dfobj_dp(ca.b_user[u], ca.p_user[u], cx.h_hat[u], inst.phys.noise_psd_n0,
                    w) + l8 * ap + l12,
          ca.p_user[u], cfg.primal_floor_w, inst.uav_power_w, nm.s12);
      const double a = ca.p_user[u] / (ca.b_user[u] * inst.phys.noise_psd_n0);
      const double h_true = nm.s6[n][u];
      row(-dfobj_dh(ca.b_user[u], ca.p_user[u], cx.h_hat[u], inst.phys.noise_psd_n0,
                    w) + l6 + l8 * a,
          cx.h_hat[u], 0.0, h_true, nm.s6[n][u]);
      const double coef = (l10 * load_per_rate(inst, c.users[u].kind) + l11) * w *
                          ca.b_user[u];
      row(-l9 * M_LN2 * std::exp2(-cx.eta_hat[u]) + coef, cx.eta_hat[u], 0.0, 64.0,
          1.0 / std::max(1.0, std::abs(coef) / nm.sF));
      const double gmax = std::exp2(cx.eta_hat[u]) - 1.0;
      row(-l8 + l9p * (2.0 * cx.gamma_hat[u] - gmax), cx.gamma_hat[u], 0.0,
          std::max(gmax, 0.0), nm.s8[n][u]);
    }
    row(-l10 + 3.0 * l12 * inst.phys.zeta0 * cx.nu_hat * cx.nu_hat, cx.nu_hat,
        0.0, 1e9, nm.s10[n]);
  }
}

}  // namespace detail

inline double kkt_residual(const NetworkInstance& inst, const Allocation& alloc,
                           const AuxState& aux, const DualState& duals,
                           const SolverConfig& cfg = {}) {
  using namespace detail;
  const Norms nm = make_norms(inst, alloc, aux);
  double worst = 0.0;
  visit_stationarity(inst, alloc, aux, duals, cfg,
                     [&](double grad, double x, double lo, double hi, double scale) {
                       // at a bound, a gradient pushing outward is optimal
                       if (x <= lo * (1.0 + 1e-9) && grad > 0.0) return;
                       if (x >= hi * (1.0 - 1e-9) && grad < 0.0) return;
                       worst = std::max(worst, std::abs(grad) * scale / nm.sF);
                     });
  const std::size_t N = inst.clusters.size();

  // complementary slackness + primal feasibility on the reformulated set
  const ConstraintResiduals r = constraint_residuals(inst, alloc, &aux);
  auto cs = [&](double lam_normalized, double res, double scale) {
    worst = std::max(worst, res / scale);
    worst = std::max(worst, lam_normalized * std::abs(res) / scale);
  };
  cs(duals.l2, r.c2, nm.s2);
  cs(duals.l4, r.c4, nm.s4);
  for (std::size_t n = 0; n < N; ++n) {
    const ClusterDuals& cd = duals.clusters[n];
    cs(cd.l3, r.c3[n], nm.s3);
    cs(cd.l7, r.c7p[n], nm.s7p[n]);
    cs(cd.l10, r.c10[n], nm.s10[n]);
    cs(cd.l11, r.c11[n], nm.s11[n]);
    cs(cd.l12, r.c12[n], nm.s12);
    for (std::size_t u = 0; u < inst.clusters[n].users.size(); ++u) {
      cs(cd.l6[u], r.c6[n][u], nm.s6[n][u]);
      cs(cd.l8[u], r.c8[n][u], nm.s8[n][u]);
      cs(cd.l9[u], r.c9[n][u], nm.s9[n][u]);
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// full loop

namespace detail {

inline std::vector<double*> dual_handles(DualState& d) {
  std::vector<double*> h{&d.l2, &d.l4};
  for (auto& cd : d.clusters) {
    h.push_back(&cd.l3);
    h.push_back(&cd.l7);
    h.push_back(&cd.l10);
    h.push_back(&cd.l11);
    h.push_back(&cd.l12);
    for (auto& v : cd.l6) h.push_back(&v);
    for (auto& v : cd.l8) h.push_back(&v);
    for (auto& v : cd.l9) h.push_back(&v);
  }
  return h;
}

// Constructive dual certificate for the final point. Every stationarity row
// is linear in the multipliers, so fit the multipliers by active-set least
// squares: interior variables contribute equality rows, rows at a bound join
// only when their sign condition fails, multipliers stay nonnegative by
// freezing, and multipliers of clearly slack constraints are pinned at zero
// so complementary slackness holds. The dual-ascent iterates track these
// values loosely during the loop; the fit replaces them with the certificate
// the converged point actually admits.
inline void calibrate_duals(const NetworkInstance& inst, const Allocation& alloc,
                            const AuxState& aux, DualState& duals,
                            const SolverConfig& cfg) {
  const Norms nm = make_norms(inst, alloc, aux);
  DualState probe = duals;
  const std::vector<double*> lam = dual_handles(probe);
  const std::size_t M = lam.size();
  for (double* p : lam) *p = 0.0;

  struct Row {
    double x, lo, hi, scale;
  };
  std::vector<Row> rows;
  std::vector<double> g0;
  visit_stationarity(inst, alloc, aux, probe, cfg,
                     [&](double g, double x, double lo, double hi, double s) {
                       rows.push_back({x, lo, hi, s});
                       g0.push_back(g);
                     });
  const std::size_t R = rows.size();
  std::vector<std::vector<double>> A(R, std::vector<double>(M, 0.0));
  for (std::size_t j = 0; j < M; ++j) {
    *lam[j] = 1.0;
    std::size_t i = 0;
    visit_stationarity(inst, alloc, aux, probe, cfg,
                       [&](double g, double, double, double, double) {
                         A[i][j] = g - g0[i];
                         ++i;
                       });
    *lam[j] = 0.0;
  }

  // multipliers of slack constraints stay at zero
  std::vector<char> frozen(M, 0);
  {
    const ConstraintResiduals r = constraint_residuals(inst, alloc, &aux);
    std::size_t j = 0;
    auto mark = [&](double res, double s) {
      if (res < -1e-7 * s) frozen[j] = 1;
      ++j;
    };
    mark(r.c2, nm.s2);
    mark(r.c4, nm.s4);
    for (std::size_t n = 0; n < inst.clusters.size(); ++n) {
      const std::size_t U = inst.clusters[n].users.size();
      mark(r.c3[n], nm.s3);
      mark(r.c7p[n], nm.s7p[n]);
      mark(r.c10[n], nm.s10[n]);
      mark(r.c11[n], nm.s11[n]);
      mark(r.c12[n], nm.s12);
      for (std::size_t u = 0; u < U; ++u) mark(r.c6[n][u], nm.s6[n][u]);
      for (std::size_t u = 0; u < U; ++u) mark(r.c8[n][u], nm.s8[n][u]);
      for (std::size_t u = 0; u < U; ++u) mark(r.c9[n][u], nm.s9[n][u]);
    }
  }

  auto at_lo = [&](const Row& r) { return r.x <= r.lo * (1.0 + 1e-9) + 1e-300; };
  auto at_hi = [&](const Row& r) { return r.x >= r.hi * (1.0 - 1e-9); };
  std::vector<char> active(R, 0);
  for (std::size_t i = 0; i < R; ++i)
    active[i] = !at_lo(rows[i]) && !at_hi(rows[i]);

  std::vector<double> x(M, 0.0);
  auto grad_at = [&](std::size_t i) {
    double g = g0[i];
    for (std::size_t j = 0; j < M; ++j) g += A[i][j] * x[j];
    return g;
  };

  // nonnegative least squares on the active rows: the positive set grows by
  // the most helpful zeroed multiplier and sheds any that solve negative
  // (add/drop active set); an outer pass promotes at-bound rows whose sign
  // condition the current multipliers violate
  std::vector<char> positive(M, 0);
  auto weighted_ls = [&](std::vector<double>& sol) {
    std::vector<std::size_t> free;
    for (std::size_t j = 0; j < M; ++j)
      if (!frozen[j] && positive[j]) free.push_back(j);
    const std::size_t F = free.size();
    std::fill(sol.begin(), sol.end(), 0.0);
    if (F == 0) return;
    std::vector<double> col(F, 0.0);  // column scaling for conditioning
    for (std::size_t a = 0; a < F; ++a) {
      for (std::size_t i = 0; i < R; ++i)
        if (active[i])
          col[a] = std::max(col[a], std::abs(A[i][free[a]]) * rows[i].scale / nm.sF);
      if (!(col[a] > 0.0)) col[a] = 1.0;
    }
    std::vector<std::vector<double>> G(F, std::vector<double>(F, 0.0));
    std::vector<double> rhs(F, 0.0);
    for (std::size_t i = 0; i < R; ++i) {
      if (!active[i]) continue;
      const double wi = rows[i].scale / nm.sF;
      const double w2 = wi * wi;
      for (std::size_t a = 0; a < F; ++a) {
        const double Aia = A[i][free[a]] / col[a];
        if (Aia == 0.0) continue;
        for (std::size_t b = a; b < F; ++b) G[a][b] += w2 * Aia * A[i][free[b]] / col[b];
        rhs[a] += w2 * Aia * (-g0[i]);
      }
    }
    for (std::size_t a = 0; a < F; ++a)
      for (std::size_t b = 0; b < a; ++b) G[a][b] = G[b][a];
    double tr = 0.0;
    for (std::size_t a = 0; a < F; ++a) tr += G[a][a];
    const double ridge = std::max(tr, 1e-300) / static_cast<double>(F) * 1e-12;
    for (std::size_t a = 0; a < F; ++a) G[a][a] += ridge;

    std::vector<double> y = rhs;
    for (std::size_t c = 0; c < F; ++c) {
      std::size_t piv = c;
      for (std::size_t rr = c + 1; rr < F; ++rr)
        if (std::abs(G[rr][c]) > std::abs(G[piv][c])) piv = rr;
      std::swap(G[c], G[piv]);
      std::swap(y[c], y[piv]);
      const double d = G[c][c];
      if (!(std::abs(d) > 1e-300)) continue;
      for (std::size_t rr = c + 1; rr < F; ++rr) {
        const double f = G[rr][c] / d;
        if (f == 0.0) continue;
        for (std::size_t cc = c; cc < F; ++cc) G[rr][cc] -= f * G[c][cc];
        y[rr] -= f * y[c];
      }
    }
    for (std::size_t c = F; c-- > 0;) {
      double s = y[c];
      for (std::size_t cc = c + 1; cc < F; ++cc) s -= G[c][cc] * y[cc];
      y[c] = std::abs(G[c][c]) > 1e-300 ? s / G[c][c] : 0.0;
    }
    for (std::size_t a = 0; a < F; ++a) sol[free[a]] = y[a] / col[a];
  };

  for (int outer = 0; outer < 8; ++outer) {
    for (int it = 0; it < 200; ++it) {
      std::vector<double> sol(M, 0.0);
      weighted_ls(sol);
      bool dropped = false;
      for (std::size_t j = 0; j < M; ++j)
        if (positive[j] && sol[j] <= 0.0) {
          positive[j] = 0;
          dropped = true;
        }
      if (dropped) continue;
      x = sol;
      // most helpful zeroed multiplier by the least-squares gradient
      double best = 0.0;
      std::size_t best_j = M;
      for (std::size_t j = 0; j < M; ++j) {
        if (frozen[j] || positive[j]) continue;
        double gj = 0.0, cn = 0.0;
        for (std::size_t i = 0; i < R; ++i) {
          if (!active[i]) continue;
          const double wi = rows[i].scale / nm.sF;
          gj += wi * wi * A[i][j] * grad_at(i);
          cn = std::max(cn, std::abs(A[i][j]) * wi);
        }
        if (cn > 0.0) {
          const double score = gj / cn;  // scale-free descent measure
          if (score < best) {
            best = score;
            best_j = j;
          }
        }
      }
      if (best_j == M || best > -1e-12) break;
      positive[best_j] = 1;
    }
    // promote violated at-bound rows to equalities
    bool changed = false;
    for (std::size_t i = 0; i < R; ++i) {
      if (active[i]) continue;
      const double g = grad_at(i);
      const double tol = 1e-5 * nm.sF / rows[i].scale;
      if ((at_lo(rows[i]) && !at_hi(rows[i]) && g < -tol) ||
          (at_hi(rows[i]) && !at_lo(rows[i]) && g > tol)) {
        active[i] = 1;
        changed = true;
      }
    }
    if (!changed) break;
  }

  const std::vector<double*> out = dual_handles(duals);
  for (std::size_t j = 0; j < M; ++j) *out[j] = std::max(0.0, x[j]);
}

inline double cluster_fobj(const NetworkInstance& inst, std::size_t n,
                           const Allocation& alloc, const AuxState& aux) {
  const Cluster& c = inst.clusters[n];
  const ClusterAlloc& ca = alloc.clusters[n];
  const ClusterAux& cx = aux.clusters[n];
  double f = 0.0;
  for (std::size_t u = 0; u < c.users.size(); ++u) {
    const double b = ca.b_user[u];
    if (!(b > 0)) continue;
    const double cap = b * std::log2(1.0 + snr_linear(ca.p_user[u], cx.h_hat[u], b,
                                                      inst.phys));
    f += c.users[u].kind == UserKind::Sem ? semantic_to_bit_r2su(cap, inst.sem) : cap;
  }
  return f;
}

// One candidate operating point for a cluster, rebuilt on the fully tight
// constraint surface: at a given UAV position, uplink bandwidth, satellite
// power share, and uniform downlink power scale, every bound re-tightens onto
// the realized system (gain bound = true gain, SNR / efficiency bounds at the
// realized link values, frequency bound at the realized load, hop SNR bound
// at the realized hop SNR), and the downlink bandwidths take the largest
// uniform scale that the cluster bandwidth budget, the relay rate balance,
// and the compute budget all admit. With every bound tight the cluster's
// objective term equals the bounded-rate sum, which is what eval returns.
struct TightPoint {
  double f = -1.0;            // cluster objective term; < 0 marks infeasible
  double b_scale = 1.0;       // uniform downlink bandwidth scale applied
  bool compute_bound = false; // the compute budget was the binding limit
};

inline TightPoint rebuild_cluster(const NetworkInstance& inst, std::size_t n,
                                  const ClusterAlloc& base, Vec2 uav_xy,
                                  double b_s2r, double p_s2r, double p_scale,
                                  bool scale_bandwidth, const SolverConfig& cfg) {
  const Cluster& c = inst.clusters[n];
  const std::size_t U = c.users.size();
  TightPoint out;
  if (!(b_s2r >= cfg.primal_floor_hz) || !(p_s2r >= cfg.primal_floor_w)) return out;

  double base_down = 0.0, p_down = 0.0;
  for (double v : base.b_user) base_down += v;
  for (double v : base.p_user)
    p_down += std::max(cfg.primal_floor_w, p_scale * v);
  const double room = inst.uav_bandwidth_hz - b_s2r;
  if (room < static_cast<double>(U) * cfg.primal_floor_hz) return out;

  const double r_true = snr_s2r_db(p_s2r, c.sat_link.gain, b_s2r, inst.phys);
  const double supply = semantic_to_bit_s2r(b_s2r, r_true, inst.sem);
  const double c12cap =
      std::cbrt(std::max(0.0, inst.uav_power_w - p_down) / inst.phys.zeta0);

  const Vec3 uav{uav_xy.x, uav_xy.y, c.uav_height};
  std::vector<double> gain(U);
  for (std::size_t u = 0; u < U; ++u)
    gain[u] = air_channel_gain(uav, c.users[u].xy, inst.phys);

  auto eval = [&](double s, DownlinkSums& sums) {
    sums = {};
    double down = 0.0;
    for (std::size_t u = 0; u < U; ++u) {
      const double b = std::max(cfg.primal_floor_hz, s * base.b_user[u]);
      const double p = std::max(cfg.primal_floor_w, p_scale * base.p_user[u]);
      const double cbits = b * std::log2(1.0 + snr_linear(p, gain[u], b, inst.phys));
      (c.users[u].kind == UserKind::Sem
           ? sums.su += semantic_to_bit_r2su(cbits, inst.sem)
           : sums.cu += cbits);
      down += b;
    }
    return down;
  };
  auto feasible = [&](double s) {
    DownlinkSums sums;
    const double down = eval(s, sums);
    return down <= room && sums.total() <= supply &&
           compute_load(sums.su, sums.cu, inst.phys) <= c12cap;
  };

  double s = 1.0;
  if (scale_bandwidth) {
    double hi = base_down > 0 ? room / base_down : 1.0;
    if (feasible(hi)) {
      s = hi;
    } else {
      double lo = 0.0;
      if (!feasible(lo)) {
        out.compute_bound = true;  // floors alone overrun a budget
        return out;
      }
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (feasible(mid) ? lo : hi) = mid;
      }
      s = lo;
    }
  } else if (!feasible(1.0)) {
    return out;
  }
  DownlinkSums sums;
  eval(s, sums);
  out.f = sums.total();
  out.b_scale = s;
  out.compute_bound =
      compute_load(sums.su, sums.cu, inst.phys) >= c12cap * (1.0 - 1e-6);
  return out;
}

// Optimal downlink splits at fixed totals: alternating weighted water-fills
// over the power split (closed form per multiplier, multiplier bisected to
// meet the total) and the bandwidth split (per-link stationarity bisected
// against a common multiplier, multiplier bisected to meet the total). The
// joint problem is concave, so the alternation converges to its maximum; the
// relay balance and compute coupling are left to the caller's rebuild.
inline ClusterAlloc refill_downlinks(const NetworkInstance& inst, std::size_t n,
                                     const ClusterAlloc& base, const SolverConfig& cfg) {
  const Cluster& c = inst.clusters[n];
  const std::size_t U = c.users.size();
  ClusterAlloc out = base;
  if (U < 2 || (!cfg.optimize_bandwidth && !cfg.optimize_power)) return out;
  double b_tot = 0.0, p_tot = 0.0;
  for (double v : base.b_user) b_tot += v;
  for (double v : base.p_user) p_tot += v;
  const Vec3 uav = uav_position(c, out);
  const double n0 = inst.phys.noise_psd_n0;
  std::vector<double> h(U), w(U);
  for (std::size_t u = 0; u < U; ++u) {
    h[u] = air_channel_gain(uav, c.users[u].xy, inst.phys);
    w[u] = rate_weight(inst, c.users[u].kind);
  }
  for (int round = 0; round < 12; ++round) {
    if (cfg.optimize_power) {  // power split at the current bandwidth split
      auto psum = [&](double mu) {
        double s = 0.0;
        for (std::size_t u = 0; u < U; ++u)
          s += std::max(cfg.primal_floor_w,
                        w[u] * out.b_user[u] / (mu * M_LN2) - out.b_user[u] * n0 / h[u]);
        return s;
      };
      double lo = 1e-30, hi = 1e30;
      for (int it = 0; it < 200; ++it) {
        const double mid = std::sqrt(lo * hi);
        (psum(mid) > p_tot ? lo : hi) = mid;
      }
      const double mu = std::sqrt(lo * hi);
      double s = 0.0;
      for (std::size_t u = 0; u < U; ++u) {
        out.p_user[u] = std::max(cfg.primal_floor_w,
                                 w[u] * out.b_user[u] / (mu * M_LN2) -
                                     out.b_user[u] * n0 / h[u]);
        s += out.p_user[u];
      }
      if (s > 0.0)
        for (auto& v : out.p_user) v *= p_tot / s;
    }
    if (cfg.optimize_bandwidth) {  // bandwidth split at the current power split
      auto b_of_mu = [&](double mu, std::size_t u) {
        // dF/dB is decreasing in B from +inf to 0: bisect the matching B
        double lo = 1e-12, hi = 1e12;
        for (int it = 0; it < 80; ++it) {
          const double mid = std::sqrt(lo * hi);
          (dfobj_db(mid, out.p_user[u], h[u], n0, w[u]) > mu ? lo : hi) = mid;
        }
        return std::max(cfg.primal_floor_hz, std::sqrt(lo * hi));
      };
      auto bsum = [&](double mu) {
        double s = 0.0;
        for (std::size_t u = 0; u < U; ++u) s += b_of_mu(mu, u);
        return s;
      };
      double lo = 1e-30, hi = 1e30;
      for (int it = 0; it < 120; ++it) {
        const double mid = std::sqrt(lo * hi);
        (bsum(mid) > b_tot ? lo : hi) = mid;
      }
      const double mu = std::sqrt(lo * hi);
      double s = 0.0;
      for (std::size_t u = 0; u < U; ++u) {
        out.b_user[u] = b_of_mu(mu, u);
        s += out.b_user[u];
      }
      if (s > 0.0)
        for (auto& v : out.b_user) v *= b_tot / s;
    }
  }
  return out;
}

inline void apply_tight_point(const NetworkInstance& inst, std::size_t n,
                              Allocation& alloc, AuxState& aux,
                              const ClusterAlloc& base, Vec2 uav_xy,
                              double b_s2r, double p_s2r, double p_scale,
                              double b_scale, const SolverConfig& cfg) {
  const Cluster& c = inst.clusters[n];
  ClusterAlloc& ca = alloc.clusters[n];
  ClusterAux& cx = aux.clusters[n];
  ca.uav_xy = uav_xy;
  ca.b_s2r = b_s2r;
  ca.p_s2r = p_s2r;
  // values a hair above a floor are floor-intent from the uniform scaling:
  // snap them so bound detection (dual certificate, projection counts) sees
  // the floor itself
  for (std::size_t u = 0; u < c.users.size(); ++u) {
    const double b = b_scale * base.b_user[u];
    const double p = p_scale * base.p_user[u];
    ca.b_user[u] = b <= cfg.primal_floor_hz * 1.001 ? cfg.primal_floor_hz : b;
    ca.p_user[u] = p <= cfg.primal_floor_w * 1.001 ? cfg.primal_floor_w : p;
  }
  const Vec3 uav = uav_position(c, ca);
  for (std::size_t u = 0; u < c.users.size(); ++u) {
    cx.h_hat[u] = air_channel_gain(uav, c.users[u].xy, inst.phys);
    const double g =
        snr_linear(ca.p_user[u], cx.h_hat[u], ca.b_user[u], inst.phys);
    cx.gamma_hat[u] = g;
    cx.eta_hat[u] = std::log2(1.0 + g);
  }
  const DownlinkSums s = downlink_rate_sums(inst, n, alloc);
  cx.nu_hat = compute_load(s.su, s.cu, inst.phys);
  cx.r_hat_s2r = snr_s2r_db(ca.p_s2r, c.sat_link.gain, ca.b_s2r, inst.phys);
}

// Cycle-end rebalance: a monotone pattern search over each cluster's
// operating point on the fully tight surface — the uplink bandwidth against
// the downlink room, a uniform downlink power scale against the compute
// budget, the UAV position along segments toward each user and the weighted
// centroid, and pairwise satellite bandwidth / power transfers between
// clusters when those budgets are saturated. Candidates are rebuilt feasible
// by construction and accepted only on strict objective improvement, so the
// pass never decreases the objective and never leaves the feasible set. This
// is what moves a solve off fully tight points where each block's own
// feasible window is degenerate (every bound active at once pins each block
// even though the joint point is far from optimal).
inline long rebalance_clusters(const NetworkInstance& inst, Allocation& alloc,
                               AuxState& aux, const SolverConfig& cfg) {
  const std::size_t N = inst.clusters.size();
  long accepted = 0;

  auto gate = [](double f_new, double f_cur) {
    return f_new > f_cur + 1e-9 * std::max(std::abs(f_cur), 1.0);
  };

  for (int sweep = 0; sweep < 3; ++sweep) {
    bool any = false;

    // (a) per-cluster search over the downlink shape (current split and the
    // water-filled split), the uplink bandwidth, and a uniform downlink power
    // scale. The shape search is what breaks the symmetry of an equal split:
    // an efficiency-raising redistribution only pays off through the joint
    // uplink re-search (alone it is absorbed by the rate balance), so the two
    // are evaluated together.
    if (cfg.optimize_bandwidth || cfg.optimize_power) {
      for (std::size_t n = 0; n < N; ++n) {
        const ClusterAlloc cur = alloc.clusters[n];
        const std::size_t U = inst.clusters[n].users.size();
        double others = 0.0;
        for (std::size_t m = 0; m < N; ++m)
          if (m != n) others += alloc.clusters[m].b_s2r;
        const double hi_b = std::min(
            inst.sat_bandwidth_hz - others,
            inst.uav_bandwidth_hz - static_cast<double>(U) * cfg.primal_floor_hz);
        if (!(hi_b > cfg.primal_floor_hz)) continue;

        std::vector<ClusterAlloc> shapes;
        shapes.push_back(cur);
        if (U >= 2) shapes.push_back(refill_downlinks(inst, n, cur, cfg));

        double f_sel = -1.0, q_sel = 1.0, b_sel = cur.b_s2r;
        double s_sel = 1.0;
        const ClusterAlloc* base_sel = nullptr;
        for (const ClusterAlloc& base : shapes) {
          auto point_at = [&](double b, double q) {
            return rebuild_cluster(inst, n, base, cur.uav_xy, b, cur.p_s2r, q,
                                   cfg.optimize_bandwidth, cfg);
          };
          auto best_b_at = [&](double q) {
            if (!cfg.optimize_bandwidth) return cur.b_s2r;
            double lo = cfg.primal_floor_hz, hi = hi_b;
            for (int it = 0; it < 48; ++it) {
              const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
              const double f1 = point_at(m1, q).f, f2 = point_at(m2, q).f;
              (f1 < f2 ? lo : hi) = (f1 < f2 ? m1 : m2);
            }
            return 0.5 * (lo + hi);
          };

          double q_best = 1.0;
          double b_best = best_b_at(1.0);
          TightPoint tp = point_at(b_best, 1.0);
          // only search the power scale when the compute budget is what
          // binds: trading transmit power for compute headroom is the one
          // move that needs it, and it keeps the common case cheap
          if (cfg.optimize_power && tp.compute_bound) {
            double lo = 1e-9, hi = 1.0;
            for (int it = 0; it < 64; ++it) {
              const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
              const double f1 = point_at(best_b_at(m1), m1).f;
              const double f2 = point_at(best_b_at(m2), m2).f;
              (f1 < f2 ? lo : hi) = (f1 < f2 ? m1 : m2);
            }
            const double q = 0.5 * (lo + hi);
            const TightPoint tq = point_at(best_b_at(q), q);
            if (tq.f > tp.f) { tp = tq; q_best = q; b_best = best_b_at(q); }
          }
          if (tp.f > f_sel) {
            f_sel = tp.f;
            q_sel = q_best;
            b_sel = b_best;
            s_sel = tp.b_scale;
            base_sel = &base;
          }
        }
        if (base_sel && gate(f_sel, cluster_fobj(inst, n, alloc, aux))) {
          apply_tight_point(inst, n, alloc, aux, *base_sel, cur.uav_xy, b_sel,
                            cur.p_s2r, q_sel, s_sel, cfg);
          ++accepted;
          any = true;
        }
      }
    }

    // (b) UAV position along segments toward each user and the weighted centroid
    if (cfg.optimize_location) {
      for (std::size_t n = 0; n < N; ++n) {
        const Cluster& c = inst.clusters[n];
        const ClusterAlloc base = alloc.clusters[n];
        const std::size_t U = c.users.size();
        std::vector<Vec2> targets;
        targets.reserve(U + 1);
        double wsum = 0.0, tx = 0.0, ty = 0.0;
        for (std::size_t u = 0; u < U; ++u) {
          targets.push_back(c.users[u].xy);
          const double w = rate_weight(inst, c.users[u].kind);
          wsum += w;
          tx += w * c.users[u].xy.x;
          ty += w * c.users[u].xy.y;
        }
        targets.push_back({tx / wsum, ty / wsum});

        double others = 0.0;
        for (std::size_t m = 0; m < N; ++m)
          if (m != n) others += alloc.clusters[m].b_s2r;
        const double hi_b = std::min(
            inst.sat_bandwidth_hz - others,
            inst.uav_bandwidth_hz - static_cast<double>(U) * cfg.primal_floor_hz);

        // a position only pays off through the joint uplink re-search: at a
        // tight rate balance the extra downlink capacity is otherwise thrown
        // away by the downlink scale, so evaluate each candidate position at
        // its own best uplink bandwidth
        auto eval_xy = [&](Vec2 xy) {
          double b = base.b_s2r;
          if (cfg.optimize_bandwidth && hi_b > cfg.primal_floor_hz) {
            double lo = cfg.primal_floor_hz, hi = hi_b;
            for (int it = 0; it < 40; ++it) {
              const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
              const double f1 = rebuild_cluster(inst, n, base, xy, m1, base.p_s2r,
                                                1.0, true, cfg).f;
              const double f2 = rebuild_cluster(inst, n, base, xy, m2, base.p_s2r,
                                                1.0, true, cfg).f;
              (f1 < f2 ? lo : hi) = (f1 < f2 ? m1 : m2);
            }
            b = 0.5 * (lo + hi);
          }
          const TightPoint tp = rebuild_cluster(inst, n, base, xy, b, base.p_s2r,
                                                1.0, cfg.optimize_bandwidth, cfg);
          return std::pair{tp, b};
        };

        const double f_cur = cluster_fobj(inst, n, alloc, aux);
        double f_best = f_cur, b_best = base.b_s2r;
        Vec2 xy_best = base.uav_xy;
        TightPoint tp_best;
        for (const Vec2& to : targets) {
          auto at = [&](double t) -> Vec2 {
            return {base.uav_xy.x + t * (to.x - base.uav_xy.x),
                    base.uav_xy.y + t * (to.y - base.uav_xy.y)};
          };
          double lo = 0.0, hi = 1.0;
          for (int it = 0; it < 32; ++it) {
            const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
            const double f1 = eval_xy(at(m1)).first.f;
            const double f2 = eval_xy(at(m2)).first.f;
            (f1 < f2 ? lo : hi) = (f1 < f2 ? m1 : m2);
          }
          const Vec2 xy = at(0.5 * (lo + hi));
          const auto [tp, b] = eval_xy(xy);
          if (tp.f > f_best) { f_best = tp.f; xy_best = xy; tp_best = tp; b_best = b; }
        }
        if (gate(f_best, f_cur)) {
          apply_tight_point(inst, n, alloc, aux, base, xy_best, b_best,
                            base.p_s2r, 1.0, tp_best.b_scale, cfg);
          ++accepted;
          any = true;
        }
      }
    }

    // (c) pairwise transfers of the satellite-side budgets between clusters
    // (the per-cluster search can only spend slack; saturated budgets move
    // only through a donor/receiver exchange). Each side is evaluated at its
    // best downlink shape — a cluster parked at its bandwidth/balance kink
    // shows no marginal value for extra uplink until its downlinks reshape,
    // so shape and transfer have to be judged together.
    if (N > 1) {
      auto transfer = [&](bool bandwidth) {
        if (bandwidth && !cfg.optimize_bandwidth) return;
        if (!bandwidth && !cfg.optimize_power) return;
        std::vector<std::vector<ClusterAlloc>> bases(N);
        for (std::size_t n = 0; n < N; ++n) {
          bases[n].push_back(alloc.clusters[n]);
          if (inst.clusters[n].users.size() >= 2)
            bases[n].push_back(refill_downlinks(inst, n, alloc.clusters[n], cfg));
        }
        struct Eval {
          TightPoint tp;
          const ClusterAlloc* base = nullptr;
        };
        auto eval_at = [&](std::size_t n, double b, double p) {
          Eval e;
          e.tp.f = -std::numeric_limits<double>::infinity();
          for (const ClusterAlloc& base : bases[n]) {
            const TightPoint tp =
                rebuild_cluster(inst, n, base, alloc.clusters[n].uav_xy, b, p, 1.0,
                                cfg.optimize_bandwidth, cfg);
            if (tp.f > e.tp.f) {
              e.tp = tp;
              e.base = &base;
            }
          }
          return e;
        };
        // marginal value of the transferred quantity per cluster
        std::vector<double> marg(N);
        for (std::size_t n = 0; n < N; ++n) {
          const ClusterAlloc& ca = alloc.clusters[n];
          const double x = bandwidth ? ca.b_s2r : ca.p_s2r;
          const double h = 1e-4 * x;
          const double f0 = eval_at(n, ca.b_s2r, ca.p_s2r).tp.f;
          const double f1 = bandwidth ? eval_at(n, ca.b_s2r + h, ca.p_s2r).tp.f
                                      : eval_at(n, ca.b_s2r, ca.p_s2r + h).tp.f;
          marg[n] = (f0 >= 0.0 && f1 >= 0.0)
                        ? (f1 - f0) / h
                        : -std::numeric_limits<double>::infinity();
        }
        std::size_t give = 0, take = 0;
        for (std::size_t n = 1; n < N; ++n) {
          if (marg[n] < marg[give]) give = n;
          if (marg[n] > marg[take]) take = n;
        }
        if (give == take || !(marg[take] > marg[give])) return;
        const ClusterAlloc bg = alloc.clusters[give];
        const ClusterAlloc bt = alloc.clusters[take];
        const double floor_x = bandwidth ? cfg.primal_floor_hz : cfg.primal_floor_w;
        const double x_give = bandwidth ? bg.b_s2r : bg.p_s2r;
        const double d_hi = x_give - floor_x;
        if (!(d_hi > 0)) return;
        auto pair_f = [&](double d) {
          const Eval eg = bandwidth ? eval_at(give, bg.b_s2r - d, bg.p_s2r)
                                    : eval_at(give, bg.b_s2r, bg.p_s2r - d);
          const Eval et = bandwidth ? eval_at(take, bt.b_s2r + d, bt.p_s2r)
                                    : eval_at(take, bt.b_s2r, bt.p_s2r + d);
          const double f = eg.tp.f < 0.0 || et.tp.f < 0.0
                               ? -std::numeric_limits<double>::infinity()
                               : eg.tp.f + et.tp.f;
          return std::tuple{f, eg, et};
        };
        double lo = 0.0, hi = d_hi;
        for (int it = 0; it < 48; ++it) {
          const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
          const double g1 = std::get<0>(pair_f(m1));
          const double g2 = std::get<0>(pair_f(m2));
          (g1 < g2 ? lo : hi) = (g1 < g2 ? m1 : m2);
        }
        const double d = 0.5 * (lo + hi);
        auto [f_pair, eg, et] = pair_f(d);
        const double f_cur =
            cluster_fobj(inst, give, alloc, aux) + cluster_fobj(inst, take, alloc, aux);
        if (f_pair > -std::numeric_limits<double>::infinity() && gate(f_pair, f_cur)) {
          const double dg = bandwidth ? 0.0 : d, db = bandwidth ? d : 0.0;
          apply_tight_point(inst, give, alloc, aux, *eg.base, bg.uav_xy,
                            bg.b_s2r - db, bg.p_s2r - dg, 1.0, eg.tp.b_scale, cfg);
          apply_tight_point(inst, take, alloc, aux, *et.base, bt.uav_xy,
                            bt.b_s2r + db, bt.p_s2r + dg, 1.0, et.tp.b_scale, cfg);
          ++accepted;
          any = true;
        }
      };
      transfer(true);
      transfer(false);
    }

    if (!any) break;
  }
  return accepted;
}

// Final consolidation: every bound re-tightened onto the true operating
// point, and (when the bandwidth block is active) the uplink re-balanced
// against the TRUE downlink rates by bisection, which makes the original
// rate-balance constraint tight as well.
inline void consolidate(const NetworkInstance& inst, Allocation& alloc, AuxState& aux,
                        const SolverConfig& cfg) {
  for (std::size_t n = 0; n < inst.clusters.size(); ++n) {
    const Cluster& c = inst.clusters[n];
    ClusterAlloc& ca = alloc.clusters[n];
    ClusterAux& cx = aux.clusters[n];
    const Vec3 uav = uav_position(c, ca);
    for (std::size_t u = 0; u < c.users.size(); ++u) {
      cx.h_hat[u] = air_channel_gain(uav, c.users[u].xy, inst.phys);
      const double g = ca.b_user[u] > 0
          ? snr_linear(ca.p_user[u], cx.h_hat[u], ca.b_user[u], inst.phys) : 0.0;
      cx.gamma_hat[u] = g;
      cx.eta_hat[u] = std::log2(1.0 + g);
    }
    DownlinkSums s = downlink_rate_sums(inst, n, alloc);
    cx.nu_hat = compute_load(s.su, s.cu, inst.phys);
    if (cfg.optimize_bandwidth) {
      // largest uplink the budgets still admit for this cluster
      double b_down = 0.0, b_s2r_others = 0.0;
      for (double v : ca.b_user) b_down += v;
      for (std::size_t m = 0; m < inst.clusters.size(); ++m)
        if (m != n) b_s2r_others += alloc.clusters[m].b_s2r;
      const double b_max = std::min(inst.uav_bandwidth_hz - b_down,
                                    inst.sat_bandwidth_hz - b_s2r_others);
      const double hi = std::max({ca.b_s2r, b_max, cfg.primal_floor_hz});
      double b = balance_b_s2r(inst, n, ca.p_s2r, s.total(), cfg.primal_floor_hz, hi);
      if (std::isnan(b) || b > b_max) {
        // budgets cannot cover the realized rates: shrink the downlinks
        // uniformly until the largest admissible uplink balances them
        double lo_s = 0.0, hi_s = 1.0;
        for (int it = 0; it < 100; ++it) {
          const double mid = 0.5 * (lo_s + hi_s);
          Allocation tmp = alloc;
          for (auto& v : tmp.clusters[n].b_user) v *= mid;
          const DownlinkSums sm = downlink_rate_sums(inst, n, tmp);
          const double bb = balance_b_s2r(inst, n, ca.p_s2r, sm.total(),
                                          cfg.primal_floor_hz, hi);
          (!std::isnan(bb) && bb <= b_max ? lo_s : hi_s) = mid;
        }
        for (auto& v : ca.b_user) v *= lo_s;
        s = downlink_rate_sums(inst, n, alloc);
        b = balance_b_s2r(inst, n, ca.p_s2r, s.total(), cfg.primal_floor_hz, hi);
        for (std::size_t u = 0; u < c.users.size(); ++u) {
          const double g = ca.b_user[u] > 0
              ? snr_linear(ca.p_user[u], cx.h_hat[u], ca.b_user[u], inst.phys) : 0.0;
          cx.gamma_hat[u] = g;
          cx.eta_hat[u] = std::log2(1.0 + g);
        }
        cx.nu_hat = compute_load(s.su, s.cu, inst.phys);
      }
      if (!std::isnan(b)) ca.b_s2r = std::clamp(b, cfg.primal_floor_hz,
                                                std::max(b_max, cfg.primal_floor_hz));
    }
    cx.r_hat_s2r = ca.b_s2r > 0
        ? snr_s2r_db(ca.p_s2r, c.sat_link.gain, ca.b_s2r, inst.phys)
        : -std::numeric_limits<double>::infinity();
  }
}

}  // namespace detail

inline SolveReport alternating_optimize(const NetworkInstance& inst,
                                        const SolverConfig& cfg) {
  inst.validate();
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  SolveReport rep;
  auto [alloc, aux] = init_allocation(inst, cfg);
  DualState duals = make_duals(inst);

  double f_prev = objective_fobj(inst, alloc, aux);
  rep.objective_trace.push_back(f_prev);
  int stall = 0;
  for (int it = 1; it <= cfg.outer_max_iters; ++it) {
    rep.outer_iters = it;
    if (cfg.optimize_bandwidth) {
      SubproblemStats st;
      alloc = solve_bandwidth(inst, alloc, aux, duals, cfg, &st);
      rep.p3_stats.push_back(st);
      rep.projection_events += st.projections;
      rep.clamp_events += st.clamp_events;
    }
    {
      SubproblemStats st4, st5;
      aux = solve_auxiliary(inst, alloc, aux, duals, cfg, &st4);
      auto [a2, x2] =
          solve_power_location(inst, alloc, aux, duals, cfg, &st5, &rep.position_skips);
      alloc = std::move(a2);
      aux = std::move(x2);
      rep.p4_stats.push_back(st4);
      rep.p5_stats.push_back(st5);
      rep.projection_events += st4.projections + st5.projections;
      rep.clamp_events += st4.clamp_events + st5.clamp_events;
    }
    rep.rebalance_moves += detail::rebalance_clusters(inst, alloc, aux, cfg);
    const double f = objective_fobj(inst, alloc, aux);
    rep.objective_trace.push_back(f);
    const double gain = f - f_prev;
    f_prev = f;
    stall = std::abs(gain) <= cfg.outer_rel_tol * std::max(std::abs(f), 1.0)
                ? stall + 1 : 0;
    if (stall >= 2) {
      rep.converged = true;
      break;
    }
  }
  rep.warning_max_iters = !rep.converged;

  detail::consolidate(inst, alloc, aux, cfg);
  // the reported multipliers must certify the returned point, not the last
  // dual-ascent iterate: fit the certificate the point admits
  detail::calibrate_duals(inst, alloc, aux, duals, cfg);
  rep.final_fobj = objective_fobj(inst, alloc, aux);
  rep.objective_trace.push_back(rep.final_fobj);
  rep.final_objective = sum_rate(inst, alloc);
  rep.final_kkt = kkt_residual(inst, alloc, aux, duals, cfg);
  rep.final_residuals = constraint_residuals(inst, alloc, &aux);
  rep.alloc = std::move(alloc);
  rep.aux = std::move(aux);
  rep.duals = std::move(duals);
  rep.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace semrelay::solver

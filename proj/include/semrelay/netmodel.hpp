#pragma once
// Domain types and deterministic channel / rate / load / constraint-residual
// computations for the satellite -> UAV relay -> ground-user network.
//
// Conventions: SI units everywhere (Hz, W, m, linear power gains); dB appears
// only at the similarity-curve interface and in I/O. Compute frequency is
// expressed in Gcycles/s so that zeta0 * nu^3 stays a sane wattage at
// realistic rates. Constraint residuals are signed with residual <= 0 meaning
// satisfied, residual = LHS - RHS of the canonical "LHS <= RHS" form.

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "semrelay/semcom.hpp"

namespace semrelay {

struct Vec2 {
  double x = 0.0, y = 0.0;
};

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

struct PhysConstants {
  double noise_psd_n0 = 1e-20;    // W/Hz
  double beta0 = 1e-6;            // air channel power gain at 1 m (-60 dB)
  double alpha = 2.0;             // air path-loss exponent
  double zeta0 = 1e-3;            // compute power coefficient, W/(Gcycles/s)^3
  double flops_per_cycle_z = 2.0; // FLOPs per compute cycle
  double g_sem = 2.0;             // FLOPs per effective bit, semantic forward
  double g_con = 4.0;             // FLOPs per effective bit, decode-and-forward

  void validate() const {
    if (!(noise_psd_n0 > 0) || !(beta0 > 0) || !(zeta0 > 0) ||
        !(flops_per_cycle_z > 0) || !(g_sem > 0) || !(g_con > 0))
      throw std::invalid_argument("phys constants must be strictly positive");
    if (!(alpha >= 1.0))
      throw std::invalid_argument("path-loss exponent alpha must be >= 1");
  }
};

// Satellite -> relay hop collapsed to one scalar power gain |h|^2 (the MISO
// beamforming gain folded in). Default matches a -80 dB coefficient magnitude.
struct SatelliteLink {
  double gain = 1e-16;  // |h|^2, linear

  // |h|^2 = beam_gain * (wavelength / (4 pi d))^2 for a free-space hop.
  static SatelliteLink from_geometry(double beam_gain, double wavelength_m,
                                     double distance_m) {
    if (!(beam_gain > 0) || !(wavelength_m > 0) || !(distance_m > 0))
      throw std::invalid_argument("satellite link geometry must be positive");
    const double amp = wavelength_m / (4.0 * M_PI * distance_m);
    return SatelliteLink{beam_gain * amp * amp};
  }
};

enum class UserKind { Sem, Con };

struct GroundUser {
  UserKind kind = UserKind::Con;
  Vec2 xy{};  // elevation fixed at 0
};

struct Cluster {
  double uav_height = 1000.0;  // m, fixed hover height
  std::vector<GroundUser> users;
  SatelliteLink sat_link{};

  std::size_t user_count() const { return users.size(); }
};

struct NetworkInstance {
  std::vector<Cluster> clusters;
  double sat_bandwidth_hz = 10e6;  // shared satellite downlink bandwidth
  double sat_power_w = 1000.0;     // shared satellite transmit power
  double uav_bandwidth_hz = 10e6;  // per-UAV total (uplink-facing + downlink)
  double uav_power_w = 10.0;       // per-UAV transmit + compute power
  PhysConstants phys{};
  SemanticParams sem{};

  std::size_t total_users() const {
    std::size_t n = 0;
    for (const auto& c : clusters) n += c.users.size();
    return n;
  }

  void validate() const {
    phys.validate();
    sem.validate();
    if (!(sat_bandwidth_hz > 0) || !(sat_power_w > 0) ||
        !(uav_bandwidth_hz > 0) || !(uav_power_w > 0))
      throw std::invalid_argument("budgets must be strictly positive");
    if (clusters.empty()) throw std::invalid_argument("need at least one cluster");
    for (std::size_t n = 0; n < clusters.size(); ++n) {
      const auto& c = clusters[n];
      if (c.users.empty())
        throw std::invalid_argument("cluster " + std::to_string(n) + " has no users");
      if (!(c.uav_height > 0))
        throw std::invalid_argument("cluster " + std::to_string(n) + ": UAV height must be > 0");
      if (!(c.sat_link.gain > 0))
        throw std::invalid_argument("cluster " + std::to_string(n) + ": satellite gain must be > 0");
      for (const auto& u : c.users)
        if (!std::isfinite(u.xy.x) || !std::isfinite(u.xy.y))
          throw std::invalid_argument("user coordinates must be finite");
    }
  }
};

// Decision variables for one cluster; b_user/p_user align with cluster.users.
struct ClusterAlloc {
  double b_s2r = 0.0;  // Hz, satellite-facing bandwidth
  double p_s2r = 0.0;  // W, satellite transmit power toward this relay
  Vec2 uav_xy{};
  std::vector<double> b_user;  // Hz per downlink
  std::vector<double> p_user;  // W per downlink
};

struct Allocation {
  std::vector<ClusterAlloc> clusters;
};

inline Allocation make_zero_allocation(const NetworkInstance& inst) {
  Allocation a;
  a.clusters.resize(inst.clusters.size());
  for (std::size_t n = 0; n < inst.clusters.size(); ++n) {
    a.clusters[n].b_user.assign(inst.clusters[n].users.size(), 0.0);
    a.clusters[n].p_user.assign(inst.clusters[n].users.size(), 0.0);
  }
  return a;
}

inline void check_dimensions(const NetworkInstance& inst, const Allocation& a) {
  if (a.clusters.size() != inst.clusters.size())
    throw std::invalid_argument("allocation/instance cluster count mismatch");
  for (std::size_t n = 0; n < inst.clusters.size(); ++n)
    if (a.clusters[n].b_user.size() != inst.clusters[n].users.size() ||
        a.clusters[n].p_user.size() != inst.clusters[n].users.size())
      throw std::invalid_argument("allocation/instance user count mismatch in cluster " +
                                  std::to_string(n));
}

// Auxiliary bound sets used by the reformulated problem. h_hat/gamma_hat/
// eta_hat align with cluster.users. The solver owns their evolution; they are
// carried here so residuals of the reformulated constraints can be evaluated
// next to the original ones.
struct ClusterAux {
  double r_hat_s2r = 0.0;  // dB, lower bound on satellite-hop SNR
  double nu_hat = 0.0;     // Gcycles/s, upper bound on compute frequency
  std::vector<double> h_hat;      // channel-gain lower bound per downlink
  std::vector<double> gamma_hat;  // SNR upper bound per downlink, linear
  std::vector<double> eta_hat;    // spectral-efficiency upper bound, b/s/Hz
};

struct AuxState {
  std::vector<ClusterAux> clusters;
};

// ---------------------------------------------------------------------------
// Channel / rate primitives

inline double air_channel_gain(const Vec3& uav, const Vec2& user,
                               const PhysConstants& phys) {
  if (!std::isfinite(uav.x) || !std::isfinite(uav.y) || !std::isfinite(uav.z) ||
      !std::isfinite(user.x) || !std::isfinite(user.y))
    throw std::domain_error("air_channel_gain: non-finite position");
  const double dx = uav.x - user.x, dy = uav.y - user.y, dz = uav.z;
  const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
  if (!(d > 0)) throw std::domain_error("air_channel_gain: zero distance");
  return phys.beta0 * std::pow(d, -phys.alpha);
}

// Satellite-hop SNR in dB; p = 0 yields a -inf sentinel so sweeps can touch
// the boundary.
inline double snr_s2r_db(double p_w, double gain, double b_hz,
                         const PhysConstants& phys) {
  if (!(b_hz > 0)) throw std::domain_error("snr_s2r_db: bandwidth must be > 0");
  if (p_w == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(p_w * gain / (b_hz * phys.noise_psd_n0));
}

inline double snr_linear(double p_w, double gain, double b_hz,
                         const PhysConstants& phys) {
  if (!(b_hz > 0)) throw std::domain_error("snr_linear: bandwidth must be > 0");
  return gain * p_w / (b_hz * phys.noise_psd_n0);
}

inline double bit_rate(double b_hz, double snr) {
  if (b_hz == 0.0) return 0.0;
  return b_hz * std::log2(1.0 + snr);
}

// Compute frequency in Gcycles/s needed to relay the given bit-equivalent
// rates (semantic forwarding is cheaper per bit than decode-and-forward).
inline double compute_load(double gamma_sum_su, double gamma_sum_cu,
                           const PhysConstants& phys) {
  const double cycles =
      (phys.g_sem * gamma_sum_su + phys.g_con * gamma_sum_cu) / phys.flops_per_cycle_z;
  return cycles * 1e-9;
}

inline double compute_power_w(double nu_gcps, const PhysConstants& phys) {
  return phys.zeta0 * nu_gcps * nu_gcps * nu_gcps;
}

// ---------------------------------------------------------------------------
// Composite rates at TRUE channel gains (no auxiliary bounds involved)

inline Vec3 uav_position(const Cluster& c, const ClusterAlloc& ca) {
  return Vec3{ca.uav_xy.x, ca.uav_xy.y, c.uav_height};
}

// Bit-equivalent rate of one downlink; semantic links get the mu1/(mu2 Q)
// conversion on top of the Shannon bit rate.
inline double user_rate(const NetworkInstance& inst, std::size_t n, std::size_t u,
                        const Allocation& alloc) {
  const Cluster& c = inst.clusters[n];
  const ClusterAlloc& ca = alloc.clusters[n];
  const double b = ca.b_user[u], p = ca.p_user[u];
  if (!(b > 0)) return 0.0;
  const double h = air_channel_gain(uav_position(c, ca), c.users[u].xy, inst.phys);
  const double cap = bit_rate(b, snr_linear(p, h, b, inst.phys));
  return c.users[u].kind == UserKind::Sem ? semantic_to_bit_r2su(cap, inst.sem) : cap;
}

struct DownlinkSums {
  double su = 0.0;  // sum of semantic-user bit-equivalent rates
  double cu = 0.0;  // sum of conventional-user bit rates
  double total() const { return su + cu; }
};

inline DownlinkSums downlink_rate_sums(const NetworkInstance& inst, std::size_t n,
                                       const Allocation& alloc) {
  DownlinkSums s;
  const Cluster& c = inst.clusters[n];
  for (std::size_t u = 0; u < c.users.size(); ++u) {
    const double r = user_rate(inst, n, u, alloc);
    (c.users[u].kind == UserKind::Sem ? s.su : s.cu) += r;
  }
  return s;
}

// Satellite-hop bit-equivalent rate at the true (not bounded) hop SNR.
inline double satellite_rate(const NetworkInstance& inst, std::size_t n,
                             const Allocation& alloc) {
  const ClusterAlloc& ca = alloc.clusters[n];
  if (!(ca.b_s2r > 0)) return 0.0;
  const double r = snr_s2r_db(ca.p_s2r, inst.clusters[n].sat_link.gain, ca.b_s2r, inst.phys);
  return semantic_to_bit_s2r(ca.b_s2r, r, inst.sem);
}

inline double sum_rate(const NetworkInstance& inst, const Allocation& alloc) {
  check_dimensions(inst, alloc);
  double total = 0.0;
  for (std::size_t n = 0; n < inst.clusters.size(); ++n)
    total += downlink_rate_sums(inst, n, alloc).total();
  return total;
}

// Downlink sums evaluated with the auxiliary bounds (b * eta_hat forms),
// as they appear in the reformulated constraints.
inline DownlinkSums aux_rate_sums(const NetworkInstance& inst, std::size_t n,
                                  const Allocation& alloc, const AuxState& aux) {
  DownlinkSums s;
  const Cluster& c = inst.clusters[n];
  const ClusterAlloc& ca = alloc.clusters[n];
  const ClusterAux& cx = aux.clusters[n];
  for (std::size_t u = 0; u < c.users.size(); ++u) {
    const double cap = ca.b_user[u] * cx.eta_hat[u];
    if (c.users[u].kind == UserKind::Sem)
      s.su += semantic_to_bit_r2su(cap, inst.sem);
    else
      s.cu += cap;
  }
  return s;
}

// Reformulated objective: Shannon rates with the bounded gains h_hat in place
// of the true ones, semantic links weighted by mu1/(mu2 Q).
inline double objective_fobj(const NetworkInstance& inst, const Allocation& alloc,
                             const AuxState& aux) {
  double total = 0.0;
  for (std::size_t n = 0; n < inst.clusters.size(); ++n) {
    const Cluster& c = inst.clusters[n];
    const ClusterAlloc& ca = alloc.clusters[n];
    const ClusterAux& cx = aux.clusters[n];
    for (std::size_t u = 0; u < c.users.size(); ++u) {
      const double b = ca.b_user[u];
      if (!(b > 0)) continue;
      const double cap =
          bit_rate(b, snr_linear(ca.p_user[u], cx.h_hat[u], b, inst.phys));
      total += c.users[u].kind == UserKind::Sem ? semantic_to_bit_r2su(cap, inst.sem) : cap;
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Constraint residuals

struct ConstraintResiduals {
  // Original problem, true gains. residual <= 0 means satisfied.
  std::vector<double> c1;  // per cluster: downlink sum - satellite rate
  double c2 = 0.0;         // sum b_s2r - sat bandwidth budget
  std::vector<double> c3;  // per cluster: total cluster bandwidth - budget
  double c4 = 0.0;         // sum p_s2r - sat power budget
  std::vector<double> c5;  // per cluster: compute power + downlink power - budget

  bool has_aux = false;
  // Reformulated constraints (per cluster, per-user vectors aligned to users).
  std::vector<std::vector<double>> c6, c6p, c8, c9, c9p;
  std::vector<double> c7, c7p, c10, c11, c11p, c12;

  double max_original() const {
    double m = std::max(c2, c4);
    for (double v : c1) m = std::max(m, v);
    for (double v : c3) m = std::max(m, v);
    for (double v : c5) m = std::max(m, v);
    return m;
  }
};

inline ConstraintResiduals constraint_residuals(const NetworkInstance& inst,
                                                const Allocation& alloc,
                                                const AuxState* aux = nullptr) {
  check_dimensions(inst, alloc);
  ConstraintResiduals r;
  const std::size_t N = inst.clusters.size();
  r.c1.resize(N);
  r.c3.resize(N);
  r.c5.resize(N);

  double b_s2r_total = 0.0, p_s2r_total = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    const ClusterAlloc& ca = alloc.clusters[n];
    const DownlinkSums s = downlink_rate_sums(inst, n, alloc);
    r.c1[n] = s.total() - satellite_rate(inst, n, alloc);
    double b_down = 0.0, p_down = 0.0;
    for (double b : ca.b_user) b_down += b;
    for (double p : ca.p_user) p_down += p;
    r.c3[n] = ca.b_s2r + b_down - inst.uav_bandwidth_hz;
    const double nu = compute_load(s.su, s.cu, inst.phys);
    r.c5[n] = compute_power_w(nu, inst.phys) + p_down - inst.uav_power_w;
    b_s2r_total += ca.b_s2r;
    p_s2r_total += ca.p_s2r;
  }
  r.c2 = b_s2r_total - inst.sat_bandwidth_hz;
  r.c4 = p_s2r_total - inst.sat_power_w;

  if (!aux) return r;
  if (aux->clusters.size() != N)
    throw std::invalid_argument("aux/instance cluster count mismatch");

  r.has_aux = true;
  r.c6.resize(N); r.c6p.resize(N); r.c8.resize(N); r.c9.resize(N); r.c9p.resize(N);
  r.c7.resize(N); r.c7p.resize(N); r.c10.resize(N);
  r.c11.resize(N); r.c11p.resize(N); r.c12.resize(N);

  for (std::size_t n = 0; n < N; ++n) {
    const Cluster& c = inst.clusters[n];
    const ClusterAlloc& ca = alloc.clusters[n];
    const ClusterAux& cx = aux->clusters[n];
    const std::size_t U = c.users.size();
    if (cx.h_hat.size() != U || cx.gamma_hat.size() != U || cx.eta_hat.size() != U)
      throw std::invalid_argument("aux/instance user count mismatch in cluster " +
                                  std::to_string(n));

    r.c6[n].resize(U); r.c6p[n].resize(U);
    r.c8[n].resize(U); r.c9[n].resize(U); r.c9p[n].resize(U);
    const Vec3 uav = uav_position(c, ca);
    for (std::size_t u = 0; u < U; ++u) {
      const double h_true = air_channel_gain(uav, c.users[u].xy, inst.phys);
      r.c6[n][u] = cx.h_hat[u] - h_true;
      const double dx = uav.x - c.users[u].xy.x, dy = uav.y - c.users[u].xy.y;
      const double d2 = dx * dx + dy * dy + uav.z * uav.z;
      r.c6p[n][u] =
          d2 - std::pow(inst.phys.beta0 / cx.h_hat[u], 2.0 / inst.phys.alpha);
      const double b = std::max(ca.b_user[u], 0.0);
      const double snr_bound = b > 0
          ? snr_linear(ca.p_user[u], cx.h_hat[u], b, inst.phys)
          : 0.0;
      r.c8[n][u] = snr_bound - cx.gamma_hat[u];
      r.c9[n][u] = std::exp2(-cx.eta_hat[u]) - 1.0 / (1.0 + cx.gamma_hat[u]);
      r.c9p[n][u] = cx.gamma_hat[u] * cx.gamma_hat[u] -
                    (std::exp2(cx.eta_hat[u]) - 1.0) * cx.gamma_hat[u];
    }

    const double g = c.sat_link.gain;
    if (ca.b_s2r > 0) {
      r.c7[n] = cx.r_hat_s2r - snr_s2r_db(ca.p_s2r, g, ca.b_s2r, inst.phys);
    } else {
      r.c7[n] = std::numeric_limits<double>::infinity();  // bound on an absent link
    }
    r.c7p[n] = inst.phys.noise_psd_n0 * std::pow(10.0, cx.r_hat_s2r / 10.0) *
                   ca.b_s2r * ca.b_s2r -
               g * ca.p_s2r * ca.b_s2r;

    const DownlinkSums sh = aux_rate_sums(inst, n, alloc, *aux);
    r.c10[n] = compute_load(sh.su, sh.cu, inst.phys) - cx.nu_hat;
    const double sat_bound =
        semantic_to_bit_s2r(ca.b_s2r, cx.r_hat_s2r, inst.sem);
    r.c11[n] = sh.total() - sat_bound;
    if (ca.b_s2r > 0) {
      const double target = sh.total() * inst.sem.q_symbols / (inst.sem.mu1 * ca.b_s2r);
      const double e = similarity_inverse_clamped(target, inst.sem);
      r.c11p[n] = std::exp(e - cx.r_hat_s2r) - 1.0;
    } else {
      r.c11p[n] = sh.total() > 0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    double p_down = 0.0;
    for (double p : ca.p_user) p_down += p;
    r.c12[n] = compute_power_w(cx.nu_hat, inst.phys) + p_down - inst.uav_power_w;
  }
  return r;
}

// Largest violation of the ORIGINAL constraints, each normalized by its
// natural scale (budget or satellite-hop rate); used for feasibility gates.
inline double max_relative_violation(const NetworkInstance& inst,
                                     const Allocation& alloc) {
  const ConstraintResiduals r = constraint_residuals(inst, alloc);
  double m = 0.0;
  for (std::size_t n = 0; n < r.c1.size(); ++n) {
    const double sat = satellite_rate(inst, n, alloc);
    m = std::max(m, r.c1[n] / std::max(sat, 1.0));
    m = std::max(m, r.c3[n] / inst.uav_bandwidth_hz);
    m = std::max(m, r.c5[n] / inst.uav_power_w);
  }
  m = std::max(m, r.c2 / inst.sat_bandwidth_hz);
  m = std::max(m, r.c4 / inst.sat_power_w);
  return m;
}

}  // namespace semrelay

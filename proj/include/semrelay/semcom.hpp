#pragma once
// Semantic-similarity curve and semantic<->bit rate conversions.
//
// A semantic link carries blocks of Q symbols. The fraction of semantic
// content recovered at receive SNR r (dB) is eps(r) in (a1, a1+a2), modeled
// by a generalized logistic fitted offline. Converting semantic throughput
// into an equivalent conventional bit rate lets semantic and bit links share
// one sum-rate objective.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace semrelay {

struct SemanticParams {
  double mu1 = 48.0;       // bits per data unit, conventional encoding
  double mu2 = 4.0;        // bits per semantic symbol
  double q_symbols = 4.0;  // semantic symbols per block
  double m_suts = 1.0;     // semantic units per data unit; cancels in all
                           // bit-equivalent rates, kept for reporting only
  double a1 = 0.3980;      // logistic floor
  double a2 = 0.5385;      // logistic span (ceiling = a1 + a2)
  double c1 = 0.2815;      // logistic slope, 1/dB
  double c2 = -1.3135;     // logistic offset

  // Inverse-domain guard: eps must stay this far from both asymptotes.
  double inverse_clamp_delta() const { return 1e-6 * a2; }

  void validate() const {
    if (!(mu1 > 0) || !(mu2 > 0) || !(q_symbols > 0))
      throw std::invalid_argument("semantic params: mu1, mu2, q must be > 0");
    if (!(a1 >= 0) || !(a2 > 0) || !(a1 + a2 <= 1))
      throw std::invalid_argument("semantic params: need 0 <= a1, a2 > 0, a1+a2 <= 1");
    if (!(c1 > 0)) throw std::invalid_argument("semantic params: c1 must be > 0");
  }
};

// eps(r) = a1 + a2 / (1 + exp(-c1*r - c2)). Accepts +-inf sentinels and
// returns the corresponding asymptote.
inline double similarity(double r_db, const SemanticParams& sem) {
  if (std::isinf(r_db)) return r_db > 0 ? sem.a1 + sem.a2 : sem.a1;
  return sem.a1 + sem.a2 / (1.0 + std::exp(-sem.c1 * r_db - sem.c2));
}

// d eps / d r, positive everywhere; used by stationarity checks.
inline double similarity_deriv(double r_db, const SemanticParams& sem) {
  if (std::isinf(r_db)) return 0.0;
  const double s = 1.0 / (1.0 + std::exp(-sem.c1 * r_db - sem.c2));
  return sem.a2 * sem.c1 * s * (1.0 - s);
}

// Unique r (dB) with similarity(r) = eps. The logistic inverts analytically:
// r = (logit((eps - a1)/a2) - c2) / c1. eps must sit strictly inside the
// asymptotes with a delta guard so the logit stays finite.
inline double similarity_inverse(double eps, const SemanticParams& sem) {
  const double delta = sem.inverse_clamp_delta();
  if (!(eps >= sem.a1 + delta))
    throw std::domain_error("similarity_inverse: eps <= a1 + delta (floor " +
                            std::to_string(sem.a1) + ")");
  if (!(eps <= sem.a1 + sem.a2 - delta))
    throw std::domain_error("similarity_inverse: eps >= a1 + a2 - delta (ceiling " +
                            std::to_string(sem.a1 + sem.a2) + ")");
  const double s = (eps - sem.a1) / sem.a2;
  return (std::log(s / (1.0 - s)) - sem.c2) / sem.c1;
}

// Clamping variant for solver internals: pulls eps into the guarded interval
// first and reports whether a clamp occurred via *clamped (may be null).
inline double similarity_inverse_clamped(double eps, const SemanticParams& sem,
                                         bool* clamped = nullptr) {
  const double delta = sem.inverse_clamp_delta();
  const double lo = sem.a1 + delta, hi = sem.a1 + sem.a2 - delta;
  double e = eps;
  if (e < lo) e = lo;
  if (e > hi) e = hi;
  if (clamped) *clamped = (e != eps);
  return similarity_inverse(e, sem);
}

// Satellite-hop bit-equivalent rate: Gamma = mu1 * (b/Q) * eps(r).
inline double semantic_to_bit_s2r(double b_hz, double r_db, const SemanticParams& sem) {
  if (b_hz == 0.0) return 0.0;
  return sem.mu1 * (b_hz / sem.q_symbols) * similarity(r_db, sem);
}

// Satellite-hop semantic rate in suts/s: Psi = (b*M/Q) * eps(r). Reporting only.
inline double psi_s2r(double b_hz, double r_db, const SemanticParams& sem) {
  return (b_hz * sem.m_suts / sem.q_symbols) * similarity(r_db, sem);
}

// Downlink semantic-user bit-equivalent rate from the link's bit capacity c:
// Gamma = mu1 * c / (mu2 * Q).
inline double semantic_to_bit_r2su(double c_bits, const SemanticParams& sem) {
  return sem.mu1 * c_bits / (sem.mu2 * sem.q_symbols);
}

// Downlink semantic rate in suts/s: Psi = c*M / (mu2*Q). Reporting only.
inline double psi_r2su(double c_bits, const SemanticParams& sem) {
  return c_bits * sem.m_suts / (sem.mu2 * sem.q_symbols);
}

}  // namespace semrelay

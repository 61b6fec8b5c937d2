#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "semrelay/semcom.hpp"

using namespace semrelay;
using Catch::Approx;

namespace {
const double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("similarity reference points") {
  SemanticParams sem;
  // Frozen from independent evaluation of the logistic with default constants.
  CHECK(similarity(0.0, sem) == Approx(0.5121090960597622).epsilon(1e-12));
  CHECK(similarity(10.0, sem) == Approx(0.8383842710929474).epsilon(1e-12));
  CHECK(similarity(0.0, sem) == Approx(0.51211).margin(1e-4));
  CHECK(similarity(10.0, sem) == Approx(0.83838).margin(1e-4));
}

TEST_CASE("similarity asymptotes") {
  SemanticParams sem;
  CHECK(similarity(-kInf, sem) == Approx(0.3980).margin(1e-12));
  CHECK(similarity(kInf, sem) == Approx(0.9365).margin(1e-12));
  CHECK(similarity(-500.0, sem) == Approx(sem.a1).margin(1e-12));
  CHECK(similarity(500.0, sem) == Approx(sem.a1 + sem.a2).margin(1e-12));
}

TEST_CASE("similarity strictly increasing on a 1000-point grid") {
  SemanticParams sem;
  double prev = similarity(-40.0, sem);
  for (int i = 1; i < 1000; ++i) {
    const double r = -40.0 + 80.0 * i / 999.0;
    const double cur = similarity(r, sem);
    REQUIRE(cur > prev);
    prev = cur;
  }
}

TEST_CASE("similarity derivative positive and consistent") {
  SemanticParams sem;
  for (double r : {-20.0, -5.0, 0.0, 3.0, 10.0, 25.0}) {
    const double d = similarity_deriv(r, sem);
    REQUIRE(d > 0.0);
    const double h = 1e-5;
    const double fd = (similarity(r + h, sem) - similarity(r - h, sem)) / (2 * h);
    CHECK(d == Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("similarity_inverse round trip") {
  SemanticParams sem;
  const double delta = sem.inverse_clamp_delta();
  for (int i = 0; i <= 200; ++i) {
    const double eps = sem.a1 + delta + (sem.a2 - 2 * delta) * i / 200.0;
    const double r = similarity_inverse(eps, sem);
    REQUIRE(std::abs(similarity(r, sem) - eps) <= 1e-9);
  }
  for (double r : {-15.0, -3.0, 0.0, 4.0, 12.0}) {
    CHECK(similarity_inverse(similarity(r, sem), sem) == Approx(r).margin(1e-9));
  }
}

TEST_CASE("similarity_inverse midpoint identity") {
  SemanticParams sem;
  // logistic midpoint: r = -c2/c1
  CHECK(similarity_inverse(sem.a1 + sem.a2 / 2.0, sem) ==
        Approx(4.66607460035524).epsilon(1e-12));
  CHECK(similarity_inverse(sem.a1 + sem.a2 / 2.0, sem) == Approx(4.6661).margin(1e-4));
  CHECK(similarity_inverse(0.51211, sem) == Approx(0.0).margin(1e-4));
}

TEST_CASE("similarity_inverse domain errors") {
  SemanticParams sem;
  CHECK_THROWS_AS(similarity_inverse(0.99, sem), std::domain_error);
  CHECK_THROWS_AS(similarity_inverse(sem.a1, sem), std::domain_error);
  CHECK_THROWS_AS(similarity_inverse(sem.a1 + sem.a2, sem), std::domain_error);
  CHECK_THROWS_AS(similarity_inverse(0.0, sem), std::domain_error);
}

TEST_CASE("similarity_inverse_clamped pulls into domain and flags") {
  SemanticParams sem;
  bool clamped = false;
  const double r_hi = similarity_inverse_clamped(0.99, sem, &clamped);
  CHECK(clamped);
  CHECK(std::isfinite(r_hi));
  CHECK(similarity(r_hi, sem) == Approx(sem.a1 + sem.a2 - sem.inverse_clamp_delta())
                                     .epsilon(1e-9));
  clamped = true;
  const double r_mid = similarity_inverse_clamped(0.6, sem, &clamped);
  CHECK_FALSE(clamped);
  CHECK(r_mid == Approx(similarity_inverse(0.6, sem)));
  const double r_lo = similarity_inverse_clamped(0.0, sem, &clamped);
  CHECK(clamped);
  CHECK(std::isfinite(r_lo));
}

TEST_CASE("semantic_to_bit_s2r evaluations") {
  SemanticParams sem;
  const double r09 = similarity_inverse(0.9, sem);
  CHECK(semantic_to_bit_s2r(1e6, r09, sem) == Approx(1.08e7).epsilon(1e-9));
  CHECK(semantic_to_bit_s2r(0.0, 5.0, sem) == 0.0);
  // at the floor asymptote: mu1/Q * b * a1 = 12 * b * 0.398
  CHECK(semantic_to_bit_s2r(1e6, -kInf, sem) == Approx(4.776e6).epsilon(1e-12));
}

TEST_CASE("semantic_to_bit_r2su evaluations") {
  SemanticParams sem;
  const double c = 6658211.482751795;  // 1e6 * log2(101)
  CHECK(semantic_to_bit_r2su(c, sem) == Approx(19974634.448255382).epsilon(1e-12));
  CHECK(semantic_to_bit_r2su(c, sem) == Approx(1.99747e7).epsilon(1e-5));
  CHECK(semantic_to_bit_r2su(0.0, sem) == 0.0);
  SemanticParams unit = sem;
  unit.mu1 = unit.mu2 * unit.q_symbols;  // conversion factor becomes 1
  CHECK(semantic_to_bit_r2su(12345.0, unit) == Approx(12345.0).epsilon(1e-15));
}

TEST_CASE("conversions linear in rate/bandwidth argument") {
  SemanticParams sem;
  const double r = 3.7;
  CHECK(semantic_to_bit_s2r(5e6, r, sem) ==
        Approx(5.0 * semantic_to_bit_s2r(1e6, r, sem)).epsilon(1e-12));
  CHECK(semantic_to_bit_r2su(7e5, sem) ==
        Approx(7.0 * semantic_to_bit_r2su(1e5, sem)).epsilon(1e-12));
}

TEST_CASE("m_suts never affects bit-equivalent rates") {
  SemanticParams a;
  SemanticParams b = a;
  b.m_suts = 123.456;
  for (double r : {-5.0, 0.0, 8.0}) {
    CHECK(semantic_to_bit_s2r(2e6, r, a) == semantic_to_bit_s2r(2e6, r, b));
  }
  CHECK(semantic_to_bit_r2su(9.9e6, a) == semantic_to_bit_r2su(9.9e6, b));
  // ...but scales the reported suts/s linearly
  CHECK(psi_s2r(2e6, 1.0, b) == Approx(123.456 * psi_s2r(2e6, 1.0, a)).epsilon(1e-12));
  CHECK(psi_r2su(2e6, b) == Approx(123.456 * psi_r2su(2e6, a)).epsilon(1e-12));
}

TEST_CASE("semantic params validation") {
  SemanticParams sem;
  CHECK_NOTHROW(sem.validate());
  SemanticParams bad = sem;
  bad.mu2 = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = sem;
  bad.a1 = 0.6;
  bad.a2 = 0.6;  // a1 + a2 > 1
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = sem;
  bad.c1 = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <stdexcept>

#include "iclflow/wick.hpp"
#include "test_util.hpp"

using namespace iclflow;
using namespace iclflow::oracle;
using testutil::random_spd;

namespace {

ModelSpec spec2(std::mt19937_64& rng, int d = 2, int N = 2) {
  ModelSpec s;
  s.d = d;
  s.N = N;
  s.lambda = random_spd(d, rng);
  return s;
}

}  // namespace

TEST_CASE("pairing_count matches the double factorial") {
  CHECK(pairing_count(0) == 1);
  CHECK(pairing_count(1) == 0);
  CHECK(pairing_count(2) == 1);
  CHECK(pairing_count(3) == 0);
  CHECK(pairing_count(4) == 3);
  CHECK(pairing_count(6) == 15);
  CHECK(pairing_count(8) == 105);
}

TEST_CASE("low moments of a single source") {
  std::mt19937_64 rng(1);
  const ModelSpec s = spec2(rng);
  const WickEvaluator ev(s);

  // context point components: cov = lambda
  const GaussianVar x00{0, 0}, x01{0, 1};
  CHECK(ev.cov(x00, x01) == doctest::Approx(s.lambda(0, 1)).epsilon(1e-15));

  // odd moments vanish identically
  CHECK(ev.expectation({x00}) == 0.0);
  CHECK(ev.expectation({x00, x01, x01}) == 0.0);

  // E[x_0^2] and the 4th-moment identity E[a^2 b^2] = L00 L11 + 2 L01^2
  CHECK(ev.expectation({x00, x00}) ==
        doctest::Approx(s.lambda(0, 0)).epsilon(1e-14));
  const double m4 = ev.expectation({x00, x00, x01, x01});
  CHECK(m4 == doctest::Approx(s.lambda(0, 0) * s.lambda(1, 1) +
                              2 * s.lambda(0, 1) * s.lambda(0, 1))
                  .epsilon(1e-14));

  // E[a^4] = 3 L00^2
  CHECK(ev.expectation({x00, x00, x00, x00}) ==
        doctest::Approx(3 * s.lambda(0, 0) * s.lambda(0, 0)).epsilon(1e-14));

  // 6th moment of a scalar Gaussian: 15 sigma^6
  const double l0 = s.lambda(0, 0);
  CHECK(ev.expectation({x00, x00, x00, x00, x00, x00}) ==
        doctest::Approx(15 * l0 * l0 * l0).epsilon(1e-13));
}

TEST_CASE("distinct sources are independent") {
  std::mt19937_64 rng(2);
  const ModelSpec s = spec2(rng, 2, 3);
  const WickEvaluator ev(s);

  const GaussianVar a{0, 0}, b{1, 0};             // two context points
  const GaussianVar q{3, 1};                      // query (source N)
  const GaussianVar w{4, 0};                      // teacher (source N+1)
  CHECK(ev.cov(a, b) == 0.0);
  CHECK(ev.cov(a, q) == 0.0);
  CHECK(ev.cov(a, w) == 0.0);
  CHECK(ev.expectation({a, b}) == 0.0);
  // E[a^2 b^2] factorizes for independent sources
  CHECK(ev.expectation({a, a, b, b}) ==
        doctest::Approx(s.lambda(0, 0) * s.lambda(0, 0)).epsilon(1e-14));
  // teacher has identity covariance
  CHECK(ev.expectation({w, w}) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("expectation is invariant under factor order") {
  std::mt19937_64 rng(3);
  const ModelSpec s = spec2(rng);
  const WickEvaluator ev(s);
  const GaussianVar a{0, 0}, b{0, 1}, q{2, 0}, w{3, 1};
  const double e1 = ev.expectation({a, b, q, q, w, w});
  const double e2 = ev.expectation({w, q, b, w, q, a});
  CHECK(e1 == doctest::Approx(e2).epsilon(1e-15));
}

TEST_CASE("canonicalize merges equal monomials") {
  WickPolynomial p;
  p.monomials.push_back({2.0, {{0, 1}, {0, 0}}});
  p.monomials.push_back({3.0, {{0, 0}, {0, 1}}});  // same up to order
  p.monomials.push_back({-5.0, {{1, 0}}});
  p.monomials.push_back({5.0, {{1, 0}}});  // cancels to zero
  canonicalize(p);
  REQUIRE(p.monomials.size() == 1);
  CHECK(p.monomials[0].coeff == 5.0);
  CHECK(p.monomials[0].vars.size() == 2);
}

TEST_CASE("evaluator is linear over polynomials") {
  std::mt19937_64 rng(4);
  const ModelSpec s = spec2(rng);
  const WickEvaluator ev(s);

  WickPolynomial p, q;
  p.monomials.push_back({1.3, {{0, 0}, {0, 1}}});
  p.monomials.push_back({-0.4, {{2, 0}, {2, 0}}});
  q.monomials.push_back({0.7, {{0, 1}, {0, 1}}});
  q.monomials.push_back({2.0, {}});  // constant term

  double manual = 0.0;
  for (const auto& mp : p.monomials)
    for (const auto& mq : q.monomials) {
      std::vector<GaussianVar> vars = mp.vars;
      vars.insert(vars.end(), mq.vars.begin(), mq.vars.end());
      manual += mp.coeff * mq.coeff * ev.expectation(vars);
    }
  CHECK(ev.expect_product(p, q) == doctest::Approx(manual).epsilon(1e-13));
}

TEST_CASE("loss at the zero state is half the covariance trace") {
  std::mt19937_64 rng(5);
  for (int N : {1, 2, 4}) {
    const ModelSpec s = spec2(rng, 2, N);
    FullState zero = zero_state(2);
    CHECK(wick_expected_loss(zero, s) ==
          doctest::Approx(0.5 * s.lambda.trace()).epsilon(1e-13));
  }
}

TEST_CASE("feasibility guard") {
  std::mt19937_64 rng(6);
  ModelSpec s;
  s.d = 4;
  s.N = 2;
  s.lambda = Mat::Identity(4, 4);
  CHECK_THROWS_AS(WickEvaluator{s}, std::domain_error);
  CHECK_THROWS_AS(wick_expected_loss(zero_state(4), s), std::domain_error);

  s.d = 2;
  s.N = 5;
  s.lambda = Mat::Identity(2, 2);
  CHECK_THROWS_AS(wick_expected_gradient(zero_state(2), s), std::domain_error);
}

TEST_CASE("gradient of the loss matches a finite difference of the loss") {
  // Internal consistency of the oracle itself: both quantities come from
  // the same pairing enumeration, so they must satisfy calculus.
  std::mt19937_64 rng(7);
  const ModelSpec s = spec2(rng, 2, 2);
  const FullState st = testutil::random_full_state(2, rng);
  const GradState g = wick_expected_gradient(st, s);

  const double h = 1e-6;
  FullState up = st, dn = st;
  up.v += h;
  dn.v -= h;
  const double fd =
      (wick_expected_loss(up, s) - wick_expected_loss(dn, s)) / (2 * h);
  CHECK(g.dv == doctest::Approx(fd).epsilon(1e-7));

  up = st;
  dn = st;
  up.U(0, 1) += h;
  dn.U(0, 1) -= h;
  const double fdU =
      (wick_expected_loss(up, s) - wick_expected_loss(dn, s)) / (2 * h);
  CHECK(g.dU(0, 1) == doctest::Approx(fdU).epsilon(1e-7));

  up = st;
  dn = st;
  up.z(1) += h;
  dn.z(1) -= h;
  const double fdz =
      (wick_expected_loss(up, s) - wick_expected_loss(dn, s)) / (2 * h);
  CHECK(g.dz(1) == doctest::Approx(fdz).epsilon(1e-7));
}

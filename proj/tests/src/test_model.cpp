#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "iclflow/model.hpp"
#include "iclflow/sampling.hpp"
#include "iclflow/serialize.hpp"
#include "test_util.hpp"

using namespace iclflow;
using testutil::random_full_state;
using testutil::random_spd;

TEST_CASE("make_gamma rejects bad specs") {
  ModelSpec s;
  s.d = 0;
  s.N = 1;
  s.lambda = Mat::Identity(1, 1);
  CHECK_THROWS_AS(make_gamma(s), std::invalid_argument);

  s.d = 1;
  s.N = 0;
  CHECK_THROWS_AS(make_gamma(s), std::invalid_argument);

  s.N = 1;
  s.lambda = Mat::Identity(2, 2);  // shape mismatch
  CHECK_THROWS_AS(make_gamma(s), std::invalid_argument);

  s.d = 2;
  s.lambda << 1.0, 0.3, -0.3, 1.0;  // asymmetric
  CHECK_THROWS_AS(make_gamma(s), std::invalid_argument);

  s.lambda << 1.0, 2.0, 2.0, 1.0;  // indefinite
  CHECK_THROWS_AS(make_gamma(s), std::invalid_argument);
}

TEST_CASE("gamma shares eigenvectors with lambda and shifts eigenvalues") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const int d = 1 + static_cast<int>(rng() % 3);
    ModelSpec s;
    s.d = d;
    s.N = 1 + static_cast<int>(rng() % 4);
    s.lambda = random_spd(d, rng);
    const GammaSpec g = make_gamma(s);

    const double tr = s.lambda.trace();
    const Mat expected =
        (1.0 + 1.0 / s.N) * s.lambda + (tr / s.N) * Mat::Identity(d, d);
    CHECK(testutil::sup(Mat(g.gamma - expected)) < 1e-14);

    for (int i = 0; i < d; ++i) {
      // exact relation between paired eigenvalues
      CHECK(g.gamma_eigs[i] ==
            doctest::Approx((1.0 + 1.0 / s.N) * g.lambda_eigs[i] + tr / s.N)
                .epsilon(1e-14));
      if (i) CHECK(g.lambda_eigs[i] >= g.lambda_eigs[i - 1]);  // ascending
      // eigvecs diagonalize lambda
      const Vec r = s.lambda * g.eigvecs.col(i) -
                    g.lambda_eigs[i] * g.eigvecs.col(i);
      CHECK(testutil::sup(r) < 1e-12);
    }
    CHECK(testutil::sup(Mat(g.eigvecs * g.eigvecs.transpose() -
                            Mat::Identity(d, d))) < 1e-12);
  }
}

TEST_CASE("the two prediction paths agree") {
  std::mt19937_64 rng(22);
  for (int rep = 0; rep < 50; ++rep) {
    const int d = 1 + static_cast<int>(rng() % 4);
    ModelSpec s;
    s.d = d;
    s.N = 1 + static_cast<int>(rng() % 6);
    s.lambda = random_spd(d, rng);
    const FullState st = random_full_state(d, rng);
    const PromptSample sample = draw_sample(s, rng());

    const double a = predict_query_sum(st, sample, s);
    const double b = predict_query_matrix(st, sample, s);
    CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));

    const double target = sample.w.dot(sample.xq);
    CHECK(sample_loss(st, sample, s) ==
          doctest::Approx(0.5 * (a - target) * (a - target)).epsilon(1e-12));
  }
}

TEST_CASE("prediction is invariant under the conserved rescaling") {
  // (z, v) -> e^s (z, v), (U, Z) -> e^-s (U, Z) leaves the readout fixed,
  // which is the origin of the conserved quantity.
  std::mt19937_64 rng(33);
  for (int rep = 0; rep < 20; ++rep) {
    const int d = 1 + static_cast<int>(rng() % 3);
    ModelSpec s;
    s.d = d;
    s.N = 1 + static_cast<int>(rng() % 3);
    s.lambda = random_spd(d, rng);
    const FullState st = random_full_state(d, rng);
    const PromptSample sample = draw_sample(s, rng());

    FullState scaled = st;
    const double e = std::exp(0.37);
    scaled.z *= e;
    scaled.v *= e;
    scaled.U /= e;
    scaled.Z /= e;
    CHECK(predict_query_sum(scaled, sample, s) ==
          doctest::Approx(predict_query_sum(st, sample, s)).epsilon(1e-12));
  }
}

TEST_CASE("kappa restrictions and finiteness") {
  std::mt19937_64 rng(44);
  FullState s = random_full_state(3, rng);
  s.z.setZero();
  s.Z.setZero();
  CHECK(kappa_full(s) ==
        doctest::Approx(s.v * s.v - s.U.squaredNorm()).epsilon(1e-15));

  FullState one = random_full_state(1, rng);
  CHECK(kappa_full(one) == doctest::Approx(one.v * one.v + one.z[0] * one.z[0] -
                                           one.Z[0] * one.Z[0] -
                                           one.U(0, 0) * one.U(0, 0))
                               .epsilon(1e-15));

  CHECK(is_finite(one));
  one.U(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK(!is_finite(one));

  const FullState z3 = zero_state(3);
  CHECK(z3.U.rows() == 3);
  CHECK(z3.z.size() == 3);
  CHECK(kappa_full(z3) == 0.0);
}

TEST_CASE("prompt sampling is deterministic and exact") {
  ModelSpec s;
  s.d = 3;
  s.N = 4;
  std::mt19937_64 rng(55);
  s.lambda = random_spd(3, rng);

  const PromptSample a = draw_sample(s, 123);
  const PromptSample b = draw_sample(s, 123);
  CHECK(testutil::sup(Mat(a.xs - b.xs)) == 0.0);
  CHECK(testutil::sup(Vec(a.w - b.w)) == 0.0);
  CHECK(testutil::sup(Vec(a.xq - b.xq)) == 0.0);
  CHECK(testutil::sup(Vec(a.ys - b.ys)) == 0.0);

  const PromptSample c = draw_sample(s, 124);
  CHECK(testutil::sup(Mat(a.xs - c.xs)) > 0.0);

  for (int n = 0; n < s.N; ++n)
    CHECK(a.ys[n] == a.w.dot(a.xs.col(n)));  // labels noiseless by contract
}

TEST_CASE("derive_seed separates streams") {
  CHECK(derive_seed(0, 0) != derive_seed(0, 1));
  CHECK(derive_seed(0, 1) != derive_seed(1, 0));
  CHECK(derive_seed(7, 42) == derive_seed(7, 42));
}

TEST_CASE("mc_gradient is deterministic and validates batch") {
  ModelSpec s;
  s.d = 2;
  s.N = 2;
  s.lambda = Mat::Identity(2, 2);
  std::mt19937_64 rng(66);
  const FullState st = random_full_state(2, rng);

  CHECK_THROWS_AS(mc_gradient(st, s, 1, 0), std::invalid_argument);

  const McEstimate a = mc_gradient(st, s, 4096, 9);
  const McEstimate b = mc_gradient(st, s, 4096, 9);
  CHECK(testutil::diff(a.mean_grad, b.mean_grad) == 0.0);
  CHECK(a.std_err.dv >= 0.0);
  CHECK(a.std_err.dU.minCoeff() >= 0.0);
}

TEST_CASE("serialization round trips") {
  std::mt19937_64 rng(77);
  ModelSpec s;
  s.d = 2;
  s.N = 3;
  s.lambda = random_spd(2, rng);
  const ModelSpec back = model_spec_from_json(to_json_string(s));
  CHECK(back.d == s.d);
  CHECK(back.N == s.N);
  CHECK(testutil::sup(Mat(back.lambda - s.lambda)) == 0.0);

  const FullState st = random_full_state(2, rng);
  const FullState st2 = full_state_from_json(to_json_string(st));
  CHECK(testutil::sup(Mat(st2.U - st.U)) == 0.0);
  CHECK(st2.v == st.v);
  CHECK(testutil::sup(Vec(st2.z - st.z)) == 0.0);
  CHECK(testutil::sup(Vec(st2.Z - st.Z)) == 0.0);

  CHECK_THROWS_AS(model_spec_from_json("{"), std::invalid_argument);
  CHECK_THROWS_AS(full_state_from_json(R"({"U":[[1]],"z":[1]})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      full_state_from_json(R"({"U":[[1,2]],"z":[1],"Z":[1],"v":0})"),
      std::invalid_argument);
}

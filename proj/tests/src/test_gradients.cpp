#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "iclflow/gradients.hpp"
#include "iclflow/simplified.hpp"
#include "iclflow/wick.hpp"
#include "test_util.hpp"

using namespace iclflow;
using testutil::random_full_state;
using testutil::random_spd;
using testutil::sup;

namespace {

struct Case {
  ModelSpec spec;
  GammaSpec gamma;
  FullState state;
};

Case random_case(std::mt19937_64& rng, int d, int N) {
  Case c;
  c.spec.d = d;
  c.spec.N = N;
  c.spec.lambda = random_spd(d, rng);
  c.gamma = make_gamma(c.spec);
  c.state = random_full_state(d, rng);
  return c;
}

}  // namespace

TEST_CASE("term lists sum to the gradient blocks") {
  std::mt19937_64 rng(100);
  const Case c = random_case(rng, 2, 3);
  GradTerms terms;
  const GradState g = full_gradient(c.state, c.spec, c.gamma, nullptr, &terms);

  double v_sum = 0.0;
  for (const auto& [id, val] : terms.v_terms) v_sum += val;
  CHECK(v_sum == doctest::Approx(g.dv).epsilon(1e-14));

  Vec z_sum = Vec::Zero(2), Z_sum = Vec::Zero(2);
  for (const auto& [id, val] : terms.z_terms) z_sum += val;
  for (const auto& [id, val] : terms.Z_terms) Z_sum += val;
  CHECK(sup(Vec(z_sum - g.dz)) < 1e-14);
  CHECK(sup(Vec(Z_sum - g.dZ)) < 1e-14);

  Mat U_sum = Mat::Zero(2, 2);
  for (const auto& [id, val] : terms.U_terms) U_sum += val;
  CHECK(sup(Mat(U_sum - g.dU)) < 1e-14);
}

TEST_CASE("term ids are stable, unique, and complete") {
  const auto& ids = gradient_term_ids();
  CHECK(!ids.empty());
  auto sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());

  std::mt19937_64 rng(101);
  const Case c = random_case(rng, 2, 2);
  GradTerms terms;
  full_gradient(c.state, c.spec, c.gamma, nullptr, &terms);
  std::vector<std::string> seen;
  for (const auto& [id, val] : terms.v_terms) seen.push_back(id);
  for (const auto& [id, val] : terms.z_terms) seen.push_back(id);
  for (const auto& [id, val] : terms.Z_terms) seen.push_back(id);
  for (const auto& [id, val] : terms.U_terms) seen.push_back(id);
  CHECK(seen == ids);
}

TEST_CASE("fault injection rescales exactly one named term") {
  std::mt19937_64 rng(102);
  const Case c = random_case(rng, 2, 2);
  GradTerms terms;
  const GradState clean =
      full_gradient(c.state, c.spec, c.gamma, nullptr, &terms);

  FaultInjection fault;
  fault.line_id = "dU.t05";
  fault.scale = 1.5;
  const GradState bad = full_gradient(c.state, c.spec, c.gamma, &fault);

  Mat expected_delta = Mat::Zero(2, 2);
  for (const auto& [id, val] : terms.U_terms)
    if (id == "dU.t05") expected_delta = 0.5 * val;
  CHECK(sup(Mat((bad.dU - clean.dU) - expected_delta)) < 1e-13);
  CHECK(bad.dv == clean.dv);  // other blocks untouched
  CHECK(sup(Vec(bad.dz - clean.dz)) == 0.0);
}

TEST_CASE("closed form equals the pairing oracle") {
  std::mt19937_64 rng(103);
  for (int d : {1, 2}) {
    for (int N : {1, 2, 3}) {
      for (int rep = 0; rep < 3; ++rep) {
        const Case c = random_case(rng, d, N);
        const GradState g = full_gradient(c.state, c.spec, c.gamma);
        const GradState w = oracle::wick_expected_gradient(c.state, c.spec);
        const double scale = std::max(1.0, std::max(sup(g), sup(w)));
        CHECK(testutil::diff(g, w) / scale < 1e-12);

        CHECK(full_expected_loss(c.state, c.spec, c.gamma) ==
              doctest::Approx(oracle::wick_expected_loss(c.state, c.spec))
                  .epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("loss and gradient satisfy calculus (finite differences)") {
  std::mt19937_64 rng(104);
  const Case c = random_case(rng, 2, 2);
  const GradState g = full_gradient(c.state, c.spec, c.gamma);
  const double h = 1e-6;

  auto fd = [&](FullState up, FullState dn) {
    return (full_expected_loss(up, c.spec, c.gamma) -
            full_expected_loss(dn, c.spec, c.gamma)) /
           (2 * h);
  };

  FullState up = c.state, dn = c.state;
  up.v += h;
  dn.v -= h;
  CHECK(g.dv == doctest::Approx(fd(up, dn)).epsilon(1e-7));

  for (int i = 0; i < 2; ++i) {
    up = c.state;
    dn = c.state;
    up.z[i] += h;
    dn.z[i] -= h;
    CHECK(g.dz[i] == doctest::Approx(fd(up, dn)).epsilon(1e-7));

    up = c.state;
    dn = c.state;
    up.Z[i] += h;
    dn.Z[i] -= h;
    CHECK(g.dZ[i] == doctest::Approx(fd(up, dn)).epsilon(1e-7));

    for (int j = 0; j < 2; ++j) {
      up = c.state;
      dn = c.state;
      up.U(i, j) += h;
      dn.U(i, j) -= h;
      CHECK(g.dU(i, j) == doctest::Approx(fd(up, dn)).epsilon(1e-7));
    }
  }
}

TEST_CASE("gradient blocks vanish on the invariant subspace") {
  std::mt19937_64 rng(105);
  for (int rep = 0; rep < 20; ++rep) {
    const int d = 1 + static_cast<int>(rng() % 3);
    Case c = random_case(rng, d, 1 + static_cast<int>(rng() % 4));
    c.state.z.setZero();
    c.state.Z.setZero();
    const GradState g = full_gradient(c.state, c.spec, c.gamma);
    CHECK(sup(g.dz) <= 1e-14);
    CHECK(sup(g.dZ) <= 1e-14);
  }
}

TEST_CASE("restriction to the invariant subspace matches the reduced flow") {
  std::mt19937_64 rng(106);
  for (int rep = 0; rep < 10; ++rep) {
    const int d = 1 + static_cast<int>(rng() % 3);
    Case c = random_case(rng, d, 1 + static_cast<int>(rng() % 3));
    c.state.z.setZero();
    c.state.Z.setZero();

    const GradState flow = full_flow_rhs(c.state, c.spec, c.gamma);
    SimplifiedState s{c.state.U, c.state.v};
    const SimplifiedState reduced = simplified_rhs(s, c.spec, c.gamma);
    const double scale = std::max(1.0, sup(flow));
    CHECK(sup(Mat(flow.dU - reduced.U)) / scale < 1e-12);
    CHECK(std::abs(flow.dv - reduced.v) / scale < 1e-12);
  }
}

TEST_CASE("gradient splits into odd homogeneous parts of degree 1 and 3") {
  std::mt19937_64 rng(107);
  const Case c = random_case(rng, 2, 2);

  auto scaled = [&](double t) {
    FullState s = c.state;
    s.U *= t;
    s.z *= t;
    s.Z *= t;
    s.v *= t;
    return full_gradient(s, c.spec, c.gamma);
  };
  const GradState g1 = scaled(1.0);
  const GradState g2 = scaled(2.0);
  const GradState g3 = scaled(3.0);
  const GradState gm = scaled(-1.0);

  // odd: g(-x) = -g(x)
  GradState neg = g1;
  neg.dU = -neg.dU;
  neg.dz = -neg.dz;
  neg.dZ = -neg.dZ;
  neg.dv = -neg.dv;
  CHECK(testutil::diff(gm, neg) == 0.0);

  // cubic + linear decomposition predicts the third scaling
  GradState cubic, lin, predict;
  cubic.dU = (g2.dU - 2 * g1.dU) / 6;
  cubic.dz = (g2.dz - 2 * g1.dz) / 6;
  cubic.dZ = (g2.dZ - 2 * g1.dZ) / 6;
  cubic.dv = (g2.dv - 2 * g1.dv) / 6;
  lin.dU = g1.dU - cubic.dU;
  lin.dz = g1.dz - cubic.dz;
  lin.dZ = g1.dZ - cubic.dZ;
  lin.dv = g1.dv - cubic.dv;
  predict.dU = 27 * cubic.dU + 3 * lin.dU;
  predict.dz = 27 * cubic.dz + 3 * lin.dz;
  predict.dZ = 27 * cubic.dZ + 3 * lin.dZ;
  predict.dv = 27 * cubic.dv + 3 * lin.dv;
  CHECK(testutil::diff(g3, predict) / std::max(1.0, sup(g3)) < 1e-12);
}

TEST_CASE("the flow conserves the bilinear balance exactly") {
  // d/dt (v^2 + |z|^2 - |Z|^2 - |U|^2) along the flow is an algebraic
  // identity, not just a numerical observation.
  std::mt19937_64 rng(108);
  for (int rep = 0; rep < 20; ++rep) {
    const int d = 1 + static_cast<int>(rng() % 3);
    const Case c = random_case(rng, d, 1 + static_cast<int>(rng() % 4));
    const GradState f = full_flow_rhs(c.state, c.spec, c.gamma);
    const double kdot = 2 * c.state.v * f.dv + 2 * c.state.z.dot(f.dz) -
                        2 * c.state.Z.dot(f.dZ) -
                        2 * (c.state.U.array() * f.dU.array()).sum();
    CHECK(std::abs(kdot) <= 1e-12 * std::max(1.0, sup(f)));
  }
}

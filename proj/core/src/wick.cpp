#include "iclflow/wick.hpp"

#include <algorithm>
#include <stdexcept>

namespace iclflow::oracle {

namespace {

// Per-source degree cap: single-block pairing never exceeds degree 6 in the
// products formed by this module (residual x gradient monomials).
constexpr int kMaxBlockDegree = 6;

void check_block_degrees(const std::vector<GaussianVar>& sorted) {
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].source == sorted[i].source) ++j;
    if (j - i > kMaxBlockDegree) {
      throw std::logic_error(
          "WickEvaluator: monomial exceeds per-source degree 6");
    }
    i = j;
  }
}

std::vector<GaussianVar> merge_sorted(const std::vector<GaussianVar>& a,
                                      const std::vector<GaussianVar>& b) {
  std::vector<GaussianVar> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

void canonicalize(WickPolynomial& poly) {
  for (auto& m : poly.monomials) std::sort(m.vars.begin(), m.vars.end());
  std::sort(poly.monomials.begin(), poly.monomials.end(),
            [](const WickMonomial& a, const WickMonomial& b) {
              return a.vars < b.vars;
            });
  std::vector<WickMonomial> merged;
  merged.reserve(poly.monomials.size());
  for (auto& m : poly.monomials) {
    if (!merged.empty() && merged.back().vars == m.vars) {
      merged.back().coeff += m.coeff;
    } else {
      merged.push_back(std::move(m));
    }
  }
  std::erase_if(merged, [](const WickMonomial& m) { return m.coeff == 0.0; });
  poly.monomials = std::move(merged);
}

long pairing_count(int degree) {
  if (degree < 0) return 0;
  if (degree == 0) return 1;
  if (degree % 2 != 0) return 0;
  // The enumeration pairs the first factor with each of the remaining
  // (degree - 1) and recurses: (degree - 1)!! complete pairings.
  return static_cast<long>(degree - 1) * pairing_count(degree - 2);
}

WickEvaluator::WickEvaluator(ModelSpec spec) : spec_(std::move(spec)) {
  if (spec_.d > 3 || spec_.N > 4) {
    throw std::domain_error(
        "WickEvaluator: exact pairing enumeration supports d <= 3, N <= 4");
  }
  make_gamma(spec_);  // shape/symmetry/positive-definiteness validation
}

double WickEvaluator::cov(const GaussianVar& a, const GaussianVar& b) const {
  if (a.source != b.source) return 0.0;  // independent sources
  if (a.source == spec_.N + 1) {         // teacher w ~ N(0, I)
    return a.component == b.component ? 1.0 : 0.0;
  }
  return spec_.lambda(a.component, b.component);  // context point or query
}

std::uint64_t WickEvaluator::pack(
    const std::vector<GaussianVar>& sorted) const {
  // Sorted factor ids, 5 bits each (id 0 reserved), up to 12 factors.
  std::uint64_t key = 0;
  for (const auto& v : sorted) {
    const std::uint64_t id =
        static_cast<std::uint64_t>(v.source) * spec_.d + v.component + 1;
    key = (key << 5) | id;
  }
  return key;
}

double WickEvaluator::expectation(std::vector<GaussianVar> vars) const {
  std::sort(vars.begin(), vars.end());
  check_block_degrees(vars);
  return expectation_sorted(vars);
}

double WickEvaluator::expectation_sorted(
    const std::vector<GaussianVar>& vars) const {
  const std::size_t n = vars.size();
  if (n == 0) return 1.0;
  if (n % 2 != 0) return 0.0;

  const std::uint64_t key = pack(vars);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;

  // Pair the first factor with every partner of nonzero covariance; sources
  // are independent, so only factors of the same source qualify, and the
  // sorted order keeps them adjacent at the front.
  double acc = 0.0;
  const GaussianVar& a = vars[0];
  std::vector<GaussianVar> rest(n - 2);
  for (std::size_t j = 1; j < n && vars[j].source == a.source; ++j) {
    const double c = cov(a, vars[j]);
    if (c == 0.0) continue;
    std::size_t out = 0;
    for (std::size_t k = 1; k < n; ++k) {
      if (k != j) rest[out++] = vars[k];
    }
    acc += c * expectation_sorted(rest);
  }
  memo_.emplace(key, acc);
  return acc;
}

double WickEvaluator::expect_product(const WickPolynomial& p,
                                     const WickPolynomial& q) const {
  // Canonicalize the pairwise products first: equal factor multisets are
  // merged so each distinct monomial is enumerated once.
  std::unordered_map<std::uint64_t, double> coeffs;
  std::unordered_map<std::uint64_t, std::vector<GaussianVar>> reps;
  for (const auto& mp : p.monomials) {
    for (const auto& mq : q.monomials) {
      const double c = mp.coeff * mq.coeff;
      if (c == 0.0) continue;
      if ((mp.vars.size() + mq.vars.size()) % 2 != 0) continue;
      std::vector<GaussianVar> vars = merge_sorted(mp.vars, mq.vars);
      const std::uint64_t key = pack(vars);
      auto [it, inserted] = coeffs.try_emplace(key, 0.0);
      it->second += c;
      if (inserted) reps.emplace(key, std::move(vars));
    }
  }
  double acc = 0.0;
  for (const auto& [key, coeff] : coeffs) {
    if (coeff == 0.0) continue;
    const auto& vars = reps.at(key);
    check_block_degrees(vars);
    acc += coeff * expectation_sorted(vars);
  }
  return acc;
}

WickPolynomial WickEvaluator::residual_poly(const FullState& state) const {
  const int d = spec_.d;
  const int N = spec_.N;
  const double inv_n = 1.0 / static_cast<double>(N);
  const std::int16_t q = static_cast<std::int16_t>(N);
  const std::int16_t w = static_cast<std::int16_t>(N + 1);

  WickPolynomial poly;
  auto add = [&poly](double coeff, std::vector<GaussianVar> vars) {
    if (coeff != 0.0) poly.monomials.push_back({coeff, std::move(vars)});
  };

  for (std::int16_t n = 0; n < N; ++n) {
    for (std::int16_t i = 0; i < d; ++i) {
      for (std::int16_t j = 0; j < d; ++j) {
        for (std::int16_t k = 0; k < d; ++k) {
          add(inv_n * state.z(i) * state.U(j, k),
              {{n, i}, {n, j}, {q, k}});
          add(inv_n * state.z(i) * state.Z(k),
              {{n, i}, {n, j}, {q, k}, {w, j}});
          add(inv_n * state.v * state.U(j, k),
              {{n, i}, {n, j}, {q, k}, {w, i}});
          add(inv_n * state.v * state.Z(k),
              {{n, i}, {n, j}, {q, k}, {w, i}, {w, j}});
        }
      }
    }
  }
  // Query self-interaction block.
  for (std::int16_t i = 0; i < d; ++i) {
    for (std::int16_t j = 0; j < d; ++j) {
      for (std::int16_t k = 0; k < d; ++k) {
        add(inv_n * state.z(i) * state.U(j, k), {{q, j}, {q, i}, {q, k}});
      }
    }
  }
  // Minus the target w.x_q.
  for (std::int16_t i = 0; i < d; ++i) add(-1.0, {{w, i}, {q, i}});

  canonicalize(poly);
  return poly;
}

WickPolynomial WickEvaluator::dyhat_dz(const FullState& state, int e) const {
  const int d = spec_.d;
  const int N = spec_.N;
  const double inv_n = 1.0 / static_cast<double>(N);
  const std::int16_t q = static_cast<std::int16_t>(N);
  const std::int16_t w = static_cast<std::int16_t>(N + 1);
  const std::int16_t ie = static_cast<std::int16_t>(e);

  WickPolynomial poly;
  auto add = [&poly](double coeff, std::vector<GaussianVar> vars) {
    if (coeff != 0.0) poly.monomials.push_back({coeff, std::move(vars)});
  };
  for (std::int16_t n = 0; n < N; ++n) {
    for (std::int16_t j = 0; j < d; ++j) {
      for (std::int16_t k = 0; k < d; ++k) {
        add(inv_n * state.U(j, k), {{n, ie}, {n, j}, {q, k}});
        add(inv_n * state.Z(k), {{n, ie}, {n, j}, {q, k}, {w, j}});
      }
    }
  }
  for (std::int16_t j = 0; j < d; ++j) {
    for (std::int16_t k = 0; k < d; ++k) {
      add(inv_n * state.U(j, k), {{q, j}, {q, ie}, {q, k}});
    }
  }
  canonicalize(poly);
  return poly;
}

WickPolynomial WickEvaluator::dyhat_dZ(const FullState& state, int e) const {
  const int d = spec_.d;
  const int N = spec_.N;
  const double inv_n = 1.0 / static_cast<double>(N);
  const std::int16_t q = static_cast<std::int16_t>(N);
  const std::int16_t w = static_cast<std::int16_t>(N + 1);
  const std::int16_t ke = static_cast<std::int16_t>(e);

  WickPolynomial poly;
  auto add = [&poly](double coeff, std::vector<GaussianVar> vars) {
    if (coeff != 0.0) poly.monomials.push_back({coeff, std::move(vars)});
  };
  for (std::int16_t n = 0; n < N; ++n) {
    for (std::int16_t i = 0; i < d; ++i) {
      for (std::int16_t j = 0; j < d; ++j) {
        add(inv_n * state.z(i), {{n, i}, {n, j}, {q, ke}, {w, j}});
        add(inv_n * state.v, {{n, i}, {n, j}, {q, ke}, {w, i}, {w, j}});
      }
    }
  }
  canonicalize(poly);
  return poly;
}

WickPolynomial WickEvaluator::dyhat_dv(const FullState& state) const {
  const int d = spec_.d;
  const int N = spec_.N;
  const double inv_n = 1.0 / static_cast<double>(N);
  const std::int16_t q = static_cast<std::int16_t>(N);
  const std::int16_t w = static_cast<std::int16_t>(N + 1);

  WickPolynomial poly;
  auto add = [&poly](double coeff, std::vector<GaussianVar> vars) {
    if (coeff != 0.0) poly.monomials.push_back({coeff, std::move(vars)});
  };
  for (std::int16_t n = 0; n < N; ++n) {
    for (std::int16_t i = 0; i < d; ++i) {
      for (std::int16_t j = 0; j < d; ++j) {
        for (std::int16_t k = 0; k < d; ++k) {
          add(inv_n * state.U(j, k), {{n, i}, {n, j}, {q, k}, {w, i}});
          add(inv_n * state.Z(k), {{n, i}, {n, j}, {q, k}, {w, i}, {w, j}});
        }
      }
    }
  }
  canonicalize(poly);
  return poly;
}

WickPolynomial WickEvaluator::dyhat_dU(const FullState& state, int e,
                                       int p) const {
  const int d = spec_.d;
  const int N = spec_.N;
  const double inv_n = 1.0 / static_cast<double>(N);
  const std::int16_t q = static_cast<std::int16_t>(N);
  const std::int16_t w = static_cast<std::int16_t>(N + 1);
  const std::int16_t je = static_cast<std::int16_t>(e);
  const std::int16_t kp = static_cast<std::int16_t>(p);

  WickPolynomial poly;
  auto add = [&poly](double coeff, std::vector<GaussianVar> vars) {
    if (coeff != 0.0) poly.monomials.push_back({coeff, std::move(vars)});
  };
  for (std::int16_t n = 0; n < N; ++n) {
    for (std::int16_t i = 0; i < d; ++i) {
      add(inv_n * state.z(i), {{n, i}, {n, je}, {q, kp}});
      add(inv_n * state.v, {{n, i}, {n, je}, {q, kp}, {w, i}});
    }
  }
  for (std::int16_t i = 0; i < d; ++i) {
    add(inv_n * state.z(i), {{q, je}, {q, i}, {q, kp}});
  }
  canonicalize(poly);
  return poly;
}

GradState wick_expected_gradient(const FullState& state,
                                 const ModelSpec& spec) {
  const WickEvaluator ev(spec);
  const WickPolynomial res = ev.residual_poly(state);
  const int d = spec.d;

  GradState g;
  g.dU = Mat(d, d);
  g.dz = Vec(d);
  g.dZ = Vec(d);
  for (int e = 0; e < d; ++e) {
    g.dz(e) = ev.expect_product(res, ev.dyhat_dz(state, e));
    g.dZ(e) = ev.expect_product(res, ev.dyhat_dZ(state, e));
    for (int p = 0; p < d; ++p) {
      g.dU(e, p) = ev.expect_product(res, ev.dyhat_dU(state, e, p));
    }
  }
  g.dv = ev.expect_product(res, ev.dyhat_dv(state));
  return g;
}

double wick_expected_loss(const FullState& state, const ModelSpec& spec) {
  const WickEvaluator ev(spec);
  const WickPolynomial res = ev.residual_poly(state);
  return 0.5 * ev.expect_product(res, res);
}

}  // namespace iclflow::oracle

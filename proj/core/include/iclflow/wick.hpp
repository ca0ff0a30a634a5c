#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "iclflow/model.hpp"

namespace iclflow::oracle {

/// One scalar factor of a Gaussian monomial: component `component` of one of
/// the independent source vectors of a prompt.  Sources 0..N-1 are the
/// context points, source N is the query, source N+1 is the teacher vector.
struct GaussianVar {
  std::int16_t source = 0;
  std::int16_t component = 0;

  friend bool operator==(const GaussianVar&, const GaussianVar&) = default;
  friend auto operator<=>(const GaussianVar&, const GaussianVar&) = default;
};

/// A monomial: scalar coefficient times a product of Gaussian factors.
/// Factors are kept sorted so equal monomials are mergeable.
struct WickMonomial {
  double coeff = 0.0;
  std::vector<GaussianVar> vars;
};

/// A polynomial in the prompt's Gaussian sources with state-dependent
/// coefficients.  Canonical form: factor lists sorted, no duplicate factor
/// lists, zero coefficients dropped.
struct WickPolynomial {
  std::vector<WickMonomial> monomials;
};

/// Sorts factors, merges monomials with equal factor lists, drops zeros.
void canonicalize(WickPolynomial& poly);

/// Number of perfect pairings a full enumeration visits for a monomial of
/// the given degree: (degree-1)!! for even degree, 0 for odd.
long pairing_count(int degree);

/// Exact-moment evaluator for a fixed model.  Feasibility guard: requires
/// d <= 3 and N <= 4 (throws std::domain_error otherwise).  Expectations of
/// monomials are computed by recursive pairing over the sources, memoized per
/// evaluator instance; independent sources have zero cross-covariance, so the
/// recursion never exceeds degree 6 within any single source block.
class WickEvaluator {
 public:
  explicit WickEvaluator(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }

  /// Covariance of two source components (zero across distinct sources).
  double cov(const GaussianVar& a, const GaussianVar& b) const;

  /// E[product of vars]; vars need not be sorted.
  double expectation(std::vector<GaussianVar> vars) const;

  /// E[P * Q]: monomial products are canonicalized (merged) before the
  /// pairing enumeration so shared structures are evaluated once.
  double expect_product(const WickPolynomial& p, const WickPolynomial& q) const;

  /// The residual polynomial yhat - w.x_q for the given predictor state.
  WickPolynomial residual_poly(const FullState& state) const;

  /// d yhat / d z_e, d Z_e, d v, d U_(e,p) as Gaussian polynomials.
  WickPolynomial dyhat_dz(const FullState& state, int e) const;
  WickPolynomial dyhat_dZ(const FullState& state, int e) const;
  WickPolynomial dyhat_dv(const FullState& state) const;
  WickPolynomial dyhat_dU(const FullState& state, int e, int p) const;

 private:
  ModelSpec spec_;
  mutable std::unordered_map<std::uint64_t, double> memo_;

  double expectation_sorted(const std::vector<GaussianVar>& vars) const;
  std::uint64_t pack(const std::vector<GaussianVar>& sorted) const;
};

/// Population gradient of the loss L = 0.5 E[(yhat - w.x_q)^2] computed by
/// exact pairing enumeration.  Feasibility guard d <= 3, N <= 4.
GradState wick_expected_gradient(const FullState& state, const ModelSpec& spec);

/// Population loss 0.5 E[(yhat - w.x_q)^2] by exact pairing enumeration.
double wick_expected_loss(const FullState& state, const ModelSpec& spec);

}  // namespace iclflow::oracle

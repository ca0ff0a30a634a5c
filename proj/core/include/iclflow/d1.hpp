#pragma once

#include <array>
#include <string>
#include <vector>

#include "iclflow/critical.hpp"

namespace iclflow {

// Closed-form constants of the scalar (one-feature, unit-variance) flow.
// All four quadratic couplings depend only on the context length N:
//   a_coef = (N+2)/N            multiplies the "self" interactions
//   b_coef = (3N+6)/N           multiplies v^2 Z and v Z^2 terms
//   c_coef = (2N+7)/N           multiplies the fully mixed products
//   d_coef = (N+8)/N + 15/N^2   multiplies z^2 U and z U^2 terms
// rho is the loss depth of the mixed equilibria, 1/(a_coef +
// sqrt(b_coef*d_coef) + c_coef); mu2 = (sqrt(b)+sqrt(d))^2/sqrt(b*d) sets
// their leaf geometry through Delta = sqrt(kappa^2 + 4 rho^2 mu2).
struct D1Coefficients {
  int N = 1;
  double a_coef = 0.0;
  double b_coef = 0.0;
  double c_coef = 0.0;
  double d_coef = 0.0;
  double rho = 0.0;
  double mu2 = 0.0;
};

// State (U, z, Z, v) of the scalar flow.
struct D1State {
  double U = 0.0;
  double z = 0.0;
  double Z = 0.0;
  double v = 0.0;
};

// One equilibrium of the scalar flow with its stability diagnostics.
struct D1CriticalPoint {
  std::string label;  // "A+", "A-", "A'+", "A'-", "B<signs>", "O"
  CriticalKind kind = CriticalKind::O;
  D1State state;
  double kappa = 0.0;
  double loss = 0.0;
  Vec eigenvalues;  // ascending, size 4
  Classification classification = Classification::unrecognized;
  int zero_multiplicity = 0;
  double residual_inf = 0.0;
};

// Decomposition showing the loss is bounded below by -1/(2 a_coef):
// 2 * loss = P - 1/a_coef + R with P a complete square and R a positive
// semidefinite quadratic form in (v Z, z U).
struct D1LowerBound {
  double P = 0.0;
  double R = 0.0;
  double residual = 0.0;  // |2*loss - (P - 1/a_coef + R)|
};

D1Coefficients d1_coefficients(int N);

// Right-hand side of the scalar flow (the negative gradient of d1_loss):
//   dU/dt = v - a v^2 U - d z^2 U - c v z Z
//   dz/dt = Z - a z Z^2 - d z U^2 - c v Z U
//   dZ/dt = z - a z^2 Z - b v^2 Z - c v z U
//   dv/dt = U - a v U^2 - b v Z^2 - c z Z U
D1State d1_rhs(const D1State& s, const D1Coefficients& c);

// Population loss of the scalar flow, shifted so loss(0) = 0:
//   loss = -(U v + z Z) + (a (v^2 U^2 + z^2 Z^2) + b v^2 Z^2 + d z^2 U^2)/2
//          + c v U z Z.
double d1_loss(const D1State& s, const D1Coefficients& c);

// Conserved quantity v^2 + z^2 - Z^2 - U^2 of the scalar flow.
double kappa_d1(const D1State& s);

// The four exact equivariances of the flow, applied to the given state, in
// the order: (U,z,Z,v) -> (-U,z,Z,-v), (U,-z,-Z,v), (-U,-z,-Z,-v), and the
// swap (z,U,v,Z).  The three sign maps preserve kappa; the swap negates it.
std::array<D1State, 4> d1_symmetries(const D1State& s);

// Symmetric Jacobian of the flow (equals the negative loss Hessian),
// coordinate order (U, z, Z, v).
Mat d1_hessian(const D1State& s, const D1Coefficients& c);

// All equilibria on the leaf of the given kappa, in deterministic order:
// the two gated pairs A+/A- (z = Z = 0, a_coef v U = 1), their swap twins
// A'+/A'- (U = v = 0, a_coef z Z = 1), the four mixed points B (all
// coordinates nonzero, v U = z Z = rho), and the origin when |kappa| <= 1e-12.
std::vector<D1CriticalPoint> d1_critical_points(double kappa,
                                                const D1Coefficients& c);

// Angle (radians) between the kernel eigenvector of the Hessian at the state
// and the conserved-quantity gradient direction (-U, z, -Z, v).  Meaningful
// at the A and B equilibria, whose neutral direction is exactly that vector.
double d1_neutral_alignment_angle(const D1State& s, const D1Coefficients& c);

// Evaluates the lower-bound decomposition at a state.
D1LowerBound d1_lower_bound_check(const D1State& s, const D1Coefficients& c);

}  // namespace iclflow

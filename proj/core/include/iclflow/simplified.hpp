#pragma once

#include <vector>

#include "iclflow/critical.hpp"
#include "iclflow/model.hpp"

namespace iclflow {

// State of the reduced flow obtained by restricting the full state to the
// invariant subspace z = Z = 0.  Only the key matrix U and the scalar gate v
// remain dynamical.
struct SimplifiedState {
  Mat U;
  double v = 0.0;
};

// The same state expressed in the eigenbasis of the data covariance:
// V = E^T U E with E the (ascending-eigenvalue) orthonormal eigenvectors.
// The flow decouples entrywise in these coordinates.
struct DiagState {
  Mat V;
  double v = 0.0;
};

// Scalar invariants of the spectrum entering the equilibrium locations:
//   mu = sum_i 1/gamma_i^2,   nu = sum_i lambda_i^2/gamma_i.
struct SimplifiedSpectrumConstants {
  double mu = 0.0;
  double nu = 0.0;
};

// Full diagnostic record for one equilibrium of the reduced flow.
struct CriticalPointReport {
  CriticalKind kind = CriticalKind::O;
  SimplifiedState state;
  double kappa = 0.0;        // conserved-quantity level of the point
  Vec eigenvalues;           // linearization spectrum, ascending, size d^2+1
  Classification classification = Classification::unrecognized;
  int zero_multiplicity = 0;
  double residual_inf = 0.0;  // sup-norm of the flow at the point
};

// Normal-vector coefficients of the affine locus v = beta_c * m(U) traced by
// the nonzero-speed equilibria, where m(U) is the covariance-weighted trace
// tr(lambda^2 U) normalized by nu.  alpha_c multiplies v (kept explicit so
// callers can express the locus as alpha_c * v - beta_c * tr(lambda^2 U) = 0
// with beta_c scaled by 1/nu folded in).
struct Hyperplane {
  double alpha_c = 1.0;
  double beta_c = 0.0;
};

// Entrywise time derivatives of the squared coordinates; dv2 equals the sum
// of all entries of dV2 (the conserved quantity couples them).
struct CoordinateFlow {
  Mat dV2;
  double dv2 = 0.0;
};

// Right-hand side of the reduced flow:
//   dU/dt = v * lambda (I - v Gamma U) lambda
//   dv/dt = tr[lambda (I - v Gamma U) lambda U^T].
SimplifiedState simplified_rhs(const SimplifiedState& s, const ModelSpec& spec,
                               const GammaSpec& gamma);

// Conserved quantity v^2 - |U|_F^2 of the reduced flow.
double kappa_simplified(const SimplifiedState& s);

// Change of basis into/out of the covariance eigenbasis.
DiagState diagonalize(const SimplifiedState& s, const GammaSpec& gamma);
SimplifiedState from_diag(const DiagState& ds, const GammaSpec& gamma);

// Dimensionless coupling S_ij = v * gamma_i * V_ij; fixed points of the
// diagonal coordinates sit at S_ii = 1.
Mat coupling_matrix(const DiagState& ds, const GammaSpec& gamma);

// Right-hand side in eigenbasis coordinates:
//   dV_ij/dt = v lambda_i lambda_j (delta_ij - v gamma_i V_ij)
//   dv/dt    = sum_i lambda_i^2 V_ii - v sum_ij lambda_i lambda_j gamma_i V_ij^2.
DiagState diag_flow_rhs(const DiagState& ds, const GammaSpec& gamma);

// Time derivatives of the squared coordinates, in the form that makes the
// signs readable:
//   d(V_ij^2)/dt = -2 (lambda_i lambda_j / gamma_i) S_ij^2          (i != j)
//   d(V_ii^2)/dt =  2 (lambda_i^2 / gamma_i) [1/4 - (S_ii - 1/2)^2]
//   d(v^2)/dt    = sum of the above.
CoordinateFlow coordinate_flow(const DiagState& ds, const GammaSpec& gamma);

// Value of the reduced flow's Lyapunov function; the flow is exactly the
// negative Euclidean gradient of this function in (V, v) coordinates:
//   loss = 1/2 [ sum_{i!=j} (lambda_i lambda_j / gamma_i) S_ij^2
//              + sum_i (lambda_i^2 / gamma_i) (1 - S_ii)^2 ].
double simplified_loss(const DiagState& ds, const GammaSpec& gamma);
double simplified_loss(const SimplifiedState& s, const GammaSpec& gamma);

SimplifiedSpectrumConstants spectrum_constants(const GammaSpec& gamma);

// Positive gate level a(kappa) of the nonzero-speed equilibria:
// a^2 = (kappa + sqrt(kappa^2 + 4 mu)) / 2, which solves a^2 - mu/a^2 = kappa.
double leaf_level_a(const GammaSpec& gamma, double kappa);

// The nonzero-speed equilibrium on the given leaf: v = sign * a,
// U = E diag(1/(gamma_i v)) E^T.
SimplifiedState make_point_A(const GammaSpec& gamma, double kappa, int sign);

// True when the state lies in the zero-speed equilibrium family:
// v = 0 and tr(lambda^2 U) = 0 (within tol, relative to the state scale).
bool is_critical_B(const SimplifiedState& s, const GammaSpec& gamma,
                   double tol = 1e-10);

// Exact Jacobian of the eigenbasis flow at an equilibrium, ordered
// [V row-major, v]; symmetric because the flow is a gradient flow.
// Throws std::invalid_argument when the state is not an equilibrium within
// crit_tol * (1 + sup|state|).
Mat linearization(const SimplifiedState& s, const ModelSpec& spec,
                  const GammaSpec& gamma, double crit_tol = 1e-10);

// Semi-analytic linearization spectrum (ascending) at an equilibrium of the
// given family, avoiding a dense eigensolve:
//  - nonzero-speed points: d^2-d decoupled eigenvalues -a^2 lambda_i
//    lambda_j gamma_i plus the spectrum of an arrowhead block, found by
//    bisection on its secular equation (equal poles grouped; each pole of
//    multiplicity m contributes itself m-1 times);
//  - zero-speed points: d^2-1 exact zeros plus the two roots of
//    mu^2 - t0 mu - sum_i lambda_i^4 = 0 with t0 the corner entry.
Vec char_poly_eigs(CriticalKind kind, const DiagState& ds,
                   const GammaSpec& gamma);

// Builds the full report (location, leaf level, spectrum, stability) for an
// equilibrium.  Throws std::invalid_argument when the state is not an
// equilibrium within crit_tol * (1 + sup|state|).
CriticalPointReport analyze_critical_point(const SimplifiedState& s,
                                           const ModelSpec& spec,
                                           const GammaSpec& gamma,
                                           double crit_tol = 1e-10);

// The two nonzero-speed equilibria (v = +a and v = -a) on the given leaf,
// fully analyzed.
std::vector<CriticalPointReport> critical_points_A(const ModelSpec& spec,
                                                   const GammaSpec& gamma,
                                                   double kappa);

// Coefficients of the equilibrium locus at the given leaf level:
// alpha_c = 1, beta_c = a(kappa)^2 / nu.
Hyperplane critical_hyperplane(const GammaSpec& gamma, double kappa);

// Signed membership residual alpha_c * v - beta_c * tr(lambda^2 U);
// zero exactly on the locus.
double hyperplane_membership(const SimplifiedState& s, const GammaSpec& gamma,
                             const Hyperplane& plane);

}  // namespace iclflow

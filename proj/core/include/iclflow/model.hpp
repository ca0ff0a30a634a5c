#pragma once

#include <cstdint>

#include "iclflow/types.hpp"

namespace iclflow {

/// Data-generating model for linear regression prompts.
///
/// A prompt consists of N context points x_1..x_N drawn iid from N(0, lambda),
/// a query point x_q drawn from the same distribution, and labels y_n = w.x_n
/// produced by a teacher vector w ~ N(0, I_d) drawn fresh per prompt.
struct ModelSpec {
  int d = 1;   ///< feature dimension
  int N = 1;   ///< context length
  Mat lambda;  ///< feature covariance (d x d, symmetric positive definite)
};

/// Eigenstructure of the data covariance together with the effective
/// curvature matrix gamma = (1 + 1/N) lambda + (tr(lambda)/N) I, which
/// shares eigenvectors with lambda.
struct GammaSpec {
  Mat gamma;        ///< (1 + 1/N) lambda + (tr(lambda)/N) I
  Vec lambda_eigs;  ///< eigenvalues of lambda, ascending
  Vec gamma_eigs;   ///< matching eigenvalues of gamma, same order
  Mat eigvecs;      ///< shared orthonormal eigenvectors (columns)
};

/// Parameters of the bilinear predictor: the query read-out is assembled
/// from U (d x d), z (d), Z (d) and the scalar v.
struct FullState {
  Mat U;
  Vec z;
  Vec Z;
  double v = 0.0;
};

/// Gradient (or flow direction) with the same shape as FullState.
struct GradState {
  Mat dU;
  Vec dz;
  Vec dZ;
  double dv = 0.0;
};

/// One sampled prompt.
struct PromptSample {
  Mat xs;  ///< context points, d x N (column n is x_n)
  Vec w;   ///< teacher vector, length d
  Vec xq;  ///< query point, length d
  Vec ys;  ///< labels, ys[n] = w.xs.col(n) exactly
};

/// Validates the spec and computes the shared eigenstructure of lambda and
/// gamma.  One symmetric eigendecomposition, eigenvalues ascending; the
/// gamma eigenvalues are formed from the lambda eigenvalues so the pairing
/// is exact by construction.
///
/// Throws std::invalid_argument if d or N is non-positive, lambda has the
/// wrong shape, is asymmetric beyond 1e-12 relative, or is not positive
/// definite (the message reports the smallest eigenvalue).
GammaSpec make_gamma(const ModelSpec& spec);

/// Query prediction evaluated as the literal double sum over context points
/// and component indices.  Slow; used as a mutual oracle for the matrix form.
double predict_query_sum(const FullState& state, const PromptSample& sample,
                         const ModelSpec& spec);

/// Query prediction evaluated through the (d+1) x (d+1) prompt second-moment
/// block matrix: yhat = (z^T, v) B (U; Z^T) x_q / N with
/// B = [[N M + x_q x_q^T, N q], [N q^T, N s]], M = (1/N) sum x_n x_n^T,
/// q = (1/N) sum y_n x_n, s = (1/N) sum y_n^2.
double predict_query_matrix(const FullState& state, const PromptSample& sample,
                            const ModelSpec& spec);

/// Squared prediction error on the query, 0.5 * (yhat - w.x_q)^2.
double sample_loss(const FullState& state, const PromptSample& sample,
                   const ModelSpec& spec);

/// Conserved bilinear form of the population flow:
/// kappa = v^2 + |z|^2 - |Z|^2 - |U|_F^2.
/// The predictor is bilinear in (z, v) x (U, Z), so the population loss is
/// invariant under (z, v) -> e^s (z, v), (U, Z) -> e^-s (U, Z); the gradient
/// flow therefore conserves this quantity.  It restricts to v^2 - |U|_F^2
/// at z = Z = 0 and to v^2 + z^2 - Z^2 - U^2 at d = 1.
double kappa_full(const FullState& state);

/// True when every entry of the state is finite.
bool is_finite(const FullState& state);

/// Zero-initialized state of dimension d.
FullState zero_state(int d);

}  // namespace iclflow

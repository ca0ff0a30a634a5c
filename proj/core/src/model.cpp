#include "iclflow/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace iclflow {

namespace {

void check_spec_shape(const ModelSpec& spec) {
  if (spec.d < 1) throw std::invalid_argument("ModelSpec: d must be >= 1");
  if (spec.N < 1) throw std::invalid_argument("ModelSpec: N must be >= 1");
  if (spec.lambda.rows() != spec.d || spec.lambda.cols() != spec.d) {
    std::ostringstream os;
    os << "ModelSpec: lambda must be " << spec.d << "x" << spec.d << ", got "
       << spec.lambda.rows() << "x" << spec.lambda.cols();
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

GammaSpec make_gamma(const ModelSpec& spec) {
  check_spec_shape(spec);
  const Mat& L = spec.lambda;
  const double scale = 1.0 + L.cwiseAbs().maxCoeff();
  const double asym = (L - L.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    std::ostringstream os;
    os << "make_gamma: lambda is not symmetric (max |L - L^T| = " << asym
       << ", allowed " << 1e-12 * scale << ")";
    throw std::invalid_argument(os.str());
  }

  Eigen::SelfAdjointEigenSolver<Mat> es(L);
  if (es.info() != Eigen::Success) {
    throw std::invalid_argument("make_gamma: eigendecomposition failed");
  }
  const Vec lam = es.eigenvalues();  // ascending
  if (lam(0) <= 0.0) {
    std::ostringstream os;
    os << "make_gamma: lambda is not positive definite (smallest eigenvalue = "
       << lam(0) << ")";
    throw std::invalid_argument(os.str());
  }

  const double n_inv = 1.0 / static_cast<double>(spec.N);
  const double tr = L.trace();

  GammaSpec g;
  g.gamma = (1.0 + n_inv) * L + (n_inv * tr) * Mat::Identity(spec.d, spec.d);
  g.lambda_eigs = lam;
  g.gamma_eigs = (1.0 + n_inv) * lam.array() + n_inv * tr;
  g.eigvecs = es.eigenvectors();
  return g;
}

double predict_query_sum(const FullState& state, const PromptSample& sample,
                         const ModelSpec& spec) {
  const int d = spec.d;
  const int N = spec.N;
  const Mat& U = state.U;
  const Vec& z = state.z;
  const Vec& Z = state.Z;
  const double v = state.v;
  const Vec& xq = sample.xq;
  const Vec& w = sample.w;

  double acc = 0.0;
  for (int n = 0; n < N; ++n) {
    const auto x = sample.xs.col(n);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        for (int k = 0; k < d; ++k) {
          const double coeff = z(i) * U(j, k) + z(i) * Z(k) * w(j) +
                               v * w(i) * U(j, k) + v * Z(k) * w(i) * w(j);
          acc += coeff * x(i) * x(j) * xq(k);
        }
      }
    }
  }
  // Query self-interaction: the query participates in the second-moment
  // block, contributing z_i U_jk x_q^(j) x_q^(i) x_q^(k).
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      for (int k = 0; k < d; ++k) {
        acc += z(i) * U(j, k) * xq(j) * xq(i) * xq(k);
      }
    }
  }
  return acc / static_cast<double>(N);
}

double predict_query_matrix(const FullState& state, const PromptSample& sample,
                            const ModelSpec& spec) {
  const int d = spec.d;
  const double N = static_cast<double>(spec.N);

  const Mat M = (sample.xs * sample.xs.transpose()) / N;
  const Vec q = (sample.xs * sample.ys) / N;
  const double s = sample.ys.squaredNorm() / N;

  Mat B(d + 1, d + 1);
  B.topLeftCorner(d, d) = N * M + sample.xq * sample.xq.transpose();
  B.topRightCorner(d, 1) = N * q;
  B.bottomLeftCorner(1, d) = N * q.transpose();
  B(d, d) = N * s;

  Vec left(d + 1);
  left.head(d) = state.z;
  left(d) = state.v;

  Mat right(d + 1, d);
  right.topRows(d) = state.U;
  right.bottomRows(1) = state.Z.transpose();

  return left.dot(B * (right * sample.xq)) / N;
}

double sample_loss(const FullState& state, const PromptSample& sample,
                   const ModelSpec& spec) {
  const double diff =
      predict_query_matrix(state, sample, spec) - sample.w.dot(sample.xq);
  return 0.5 * diff * diff;
}

double kappa_full(const FullState& state) {
  return state.v * state.v + state.z.squaredNorm() - state.Z.squaredNorm() -
         state.U.squaredNorm();
}

bool is_finite(const FullState& state) {
  return state.U.allFinite() && state.z.allFinite() && state.Z.allFinite() &&
         std::isfinite(state.v);
}

FullState zero_state(int d) {
  FullState s;
  s.U = Mat::Zero(d, d);
  s.z = Vec::Zero(d);
  s.Z = Vec::Zero(d);
  s.v = 0.0;
  return s;
}

}  // namespace iclflow

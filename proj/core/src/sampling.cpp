#include "iclflow/sampling.hpp"

#include <cmath>
#include <future>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

namespace iclflow {

namespace {

constexpr long kChunk = 1024;  // fixed accumulation granularity

struct Accum {
  Mat sU, qU;
  Vec sz, qz, sZ, qZ;
  double sv = 0.0, qv = 0.0;

  explicit Accum(int d)
      : sU(Mat::Zero(d, d)),
        qU(Mat::Zero(d, d)),
        sz(Vec::Zero(d)),
        qz(Vec::Zero(d)),
        sZ(Vec::Zero(d)),
        qZ(Vec::Zero(d)) {}

  void add(const GradState& g) {
    sU += g.dU;
    qU += g.dU.cwiseProduct(g.dU);
    sz += g.dz;
    qz += g.dz.cwiseProduct(g.dz);
    sZ += g.dZ;
    qZ += g.dZ.cwiseProduct(g.dZ);
    sv += g.dv;
    qv += g.dv * g.dv;
  }

  void merge(const Accum& o) {
    sU += o.sU;
    qU += o.qU;
    sz += o.sz;
    qz += o.qz;
    sZ += o.sZ;
    qZ += o.qZ;
    sv += o.sv;
    qv += o.qv;
  }
};

void draw_into(PromptSample& out, const ModelSpec& spec, const Mat& chol,
               std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int d = spec.d;
  const int N = spec.N;

  Vec buf(d);
  for (int n = 0; n < N; ++n) {
    for (int i = 0; i < d; ++i) buf(i) = gauss(eng);
    out.xs.col(n) = chol * buf;
  }
  for (int i = 0; i < d; ++i) buf(i) = gauss(eng);
  out.xq = chol * buf;
  for (int i = 0; i < d; ++i) out.w(i) = gauss(eng);
  out.ys = out.xs.transpose() * out.w;
}

GradState eval_sample_gradient(const FullState& state,
                               const PromptSample& sample, int N) {
  const double n_inv = 1.0 / static_cast<double>(N);
  const Mat M = (sample.xs * sample.xs.transpose()) * n_inv;
  const Vec q = (sample.xs * sample.ys) * n_inv;
  const double s = sample.ys.squaredNorm() * n_inv;
  const Vec& xq = sample.xq;

  const Vec Uxq = state.U * xq;
  const double z_xq = state.z.dot(xq);
  const double Z_xq = state.Z.dot(xq);
  const double xqUxq = xq.dot(Uxq);
  const double z_q = state.z.dot(q);
  const double qUxq = q.dot(Uxq);

  const double yhat = state.z.dot(M * Uxq) + z_q * Z_xq + state.v * qUxq +
                      state.v * s * Z_xq + n_inv * z_xq * xqUxq;
  const double r = yhat - sample.w.dot(xq);

  GradState g;
  g.dz = r * (M * Uxq + Z_xq * q + n_inv * xqUxq * xq);
  g.dZ = r * ((z_q + state.v * s) * xq);
  g.dv = r * (qUxq + s * Z_xq);
  g.dU = r * ((M * state.z + state.v * q) * xq.transpose() +
              (n_inv * z_xq) * (xq * xq.transpose()));
  return g;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + index * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

PromptSample draw_sample(const ModelSpec& spec, std::uint64_t seed) {
  const GammaSpec g = make_gamma(spec);  // validates the spec
  (void)g;
  const Mat chol = Eigen::LLT<Mat>(spec.lambda).matrixL();

  PromptSample sample;
  sample.xs = Mat(spec.d, spec.N);
  sample.w = Vec(spec.d);
  sample.xq = Vec(spec.d);
  sample.ys = Vec(spec.N);
  draw_into(sample, spec, chol, seed);
  return sample;
}

GradState sample_loss_gradient(const FullState& state,
                               const PromptSample& sample,
                               const ModelSpec& spec) {
  return eval_sample_gradient(state, sample, spec.N);
}

McEstimate mc_gradient(const FullState& state, const ModelSpec& spec,
                       long batch, std::uint64_t seed) {
  if (batch < 2) {
    throw std::invalid_argument("mc_gradient: batch must be >= 2");
  }
  make_gamma(spec);  // validate before spawning work
  const Mat chol = Eigen::LLT<Mat>(spec.lambda).matrixL();
  const int d = spec.d;

  const long n_chunks = (batch + kChunk - 1) / kChunk;
  auto run_chunk = [&](long c) {
    Accum acc(d);
    PromptSample sample;
    sample.xs = Mat(d, spec.N);
    sample.w = Vec(d);
    sample.xq = Vec(d);
    sample.ys = Vec(spec.N);
    const long lo = c * kChunk;
    const long hi = std::min(batch, lo + kChunk);
    for (long i = lo; i < hi; ++i) {
      draw_into(sample, spec, chol, derive_seed(seed, static_cast<std::uint64_t>(i)));
      acc.add(eval_sample_gradient(state, sample, spec.N));
    }
    return acc;
  };

  // Chunks may run on worker threads, but partials are merged in chunk
  // order, so the result is independent of the scheduling.
  Accum total(d);
  const unsigned hw = std::thread::hardware_concurrency();
  if (hw > 1 && n_chunks > 1) {
    const long stride = static_cast<long>(hw);
    std::vector<std::future<Accum>> futures;
    for (long c = 0; c < n_chunks; c += stride) {
      futures.clear();
      const long end = std::min(n_chunks, c + stride);
      for (long k = c; k < end; ++k) {
        futures.push_back(
            std::async(std::launch::async, [&run_chunk, k] { return run_chunk(k); }));
      }
      for (auto& f : futures) total.merge(f.get());
    }
  } else {
    for (long c = 0; c < n_chunks; ++c) total.merge(run_chunk(c));
  }

  const double nb = static_cast<double>(batch);
  auto stderr_of = [&](double sum, double sumsq) {
    const double mean = sum / nb;
    const double var = std::max(0.0, (sumsq - nb * mean * mean) / (nb - 1.0));
    return std::sqrt(var / nb);
  };

  McEstimate est;
  est.batch = batch;
  est.seed = seed;
  est.mean_grad.dU = total.sU / nb;
  est.mean_grad.dz = total.sz / nb;
  est.mean_grad.dZ = total.sZ / nb;
  est.mean_grad.dv = total.sv / nb;
  est.std_err.dU = Mat(d, d);
  est.std_err.dz = Vec(d);
  est.std_err.dZ = Vec(d);
  for (int i = 0; i < d; ++i) {
    est.std_err.dz(i) = stderr_of(total.sz(i), total.qz(i));
    est.std_err.dZ(i) = stderr_of(total.sZ(i), total.qZ(i));
    for (int j = 0; j < d; ++j) {
      est.std_err.dU(i, j) = stderr_of(total.sU(i, j), total.qU(i, j));
    }
  }
  est.std_err.dv = stderr_of(total.sv, total.qv);
  return est;
}

}  // namespace iclflow

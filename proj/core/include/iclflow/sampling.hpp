#pragma once

#include <cstdint>

#include "iclflow/model.hpp"

namespace iclflow {

/// Derives an independent child seed from (seed, index) via splitmix64.
/// Used to give every sampled item its own deterministic RNG stream, so
/// results do not depend on how work is chunked or scheduled.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Draws one prompt: context points and query from N(0, lambda) through the
/// Cholesky factor, teacher from N(0, I); ys[n] = w.x_n computed exactly.
/// Deterministic for a fixed (spec, seed).
PromptSample draw_sample(const ModelSpec& spec, std::uint64_t seed);

/// Analytic per-sample gradient of sample_loss with respect to the state
/// (chain rule through the prompt second moments; no finite differences).
GradState sample_loss_gradient(const FullState& state,
                               const PromptSample& sample,
                               const ModelSpec& spec);

/// Monte-Carlo estimate of the population loss gradient.
struct McEstimate {
  GradState mean_grad;     ///< per-coordinate sample mean
  GradState std_err;       ///< per-coordinate standard error (non-negative)
  long batch = 0;          ///< number of samples, >= 2
  std::uint64_t seed = 0;  ///< root seed of the estimate
};

/// Averages sample_loss_gradient over `batch` independent prompts.  Samples
/// are accumulated in fixed-size chunks merged in index order, so the result
/// is bit-identical regardless of how the work is scheduled.  Throws
/// std::invalid_argument for batch < 2.
McEstimate mc_gradient(const FullState& state, const ModelSpec& spec,
                       long batch, std::uint64_t seed);

}  // namespace iclflow

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "iclflow/model.hpp"

namespace iclflow {

/// Optional per-term breakdown of a gradient evaluation.  Every displayed
/// line of the closed forms is one named entry; the sum of the entries of a
/// block equals the block's gradient.  Used by the validation tool to
/// localize a failing line.
struct GradTerms {
  std::vector<std::pair<std::string, double>> v_terms;
  std::vector<std::pair<std::string, Vec>> z_terms;
  std::vector<std::pair<std::string, Vec>> Z_terms;
  std::vector<std::pair<std::string, Mat>> U_terms;
};

/// Test fixture: rescales the named term, corrupting the closed form on
/// purpose so the validation pipeline can demonstrate line-level detection.
struct FaultInjection {
  std::string line_id;
  double scale = 1.0 + 1e-3;
};

/// All valid line ids, in evaluation order ("dv.t1", "dz.t01", ...).
const std::vector<std::string>& gradient_term_ids();

/// Population gradient of L = 0.5 E[(yhat - w.x_q)^2] in closed form.
/// Each block is a sum of named terms (see GradTerms); lambda powers and
/// shared matrix products are computed once per call.  `gamma` is accepted
/// for interface uniformity with the reduced-flow helpers; the closed forms
/// depend only on lambda and N.
GradState full_gradient(const FullState& state, const ModelSpec& spec,
                        const GammaSpec& gamma,
                        const FaultInjection* fault = nullptr,
                        GradTerms* terms = nullptr);

/// Single-block accessors (thin wrappers over full_gradient's term lists).
double grad_v(const FullState& state, const ModelSpec& spec,
              const GammaSpec& gamma);
Vec grad_z(const FullState& state, const ModelSpec& spec,
           const GammaSpec& gamma);
Vec grad_Z(const FullState& state, const ModelSpec& spec,
           const GammaSpec& gamma);
Mat grad_U(const FullState& state, const ModelSpec& spec,
           const GammaSpec& gamma);

/// Negated gradient: the autonomous flow direction of every block.
GradState full_flow_rhs(const FullState& state, const ModelSpec& spec,
                        const GammaSpec& gamma);

/// Population loss recovered from the gradient's homogeneity structure.
/// Every gradient coordinate is an odd polynomial (degrees 1 and 3) in the
/// state, so L = Q4 + Q2 + tr(lambda)/2 with Q4 homogeneous quartic and Q2
/// homogeneous quadratic; Euler's identity at two scalings of the state
/// determines Q4 and Q2 from two gradient evaluations.  Exactly consistent
/// with full_gradient by construction.
double full_expected_loss(const FullState& state, const ModelSpec& spec,
                          const GammaSpec& gamma);

}  // namespace iclflow

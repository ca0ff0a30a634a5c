#include "iclflow/gradients.hpp"

namespace iclflow {

namespace {

double inner(const GradState& g, const FullState& s) {
  return g.dU.cwiseProduct(s.U).sum() + g.dz.dot(s.z) + g.dZ.dot(s.Z) +
         g.dv * s.v;
}

FullState scaled(const FullState& s, double c) {
  return FullState{c * s.U, c * s.z, c * s.Z, c * s.v};
}

}  // namespace

GradState full_gradient(const FullState& state, const ModelSpec& spec,
                        const GammaSpec& /*gamma*/, const FaultInjection* fault,
                        GradTerms* terms) {
  const int d = spec.d;
  const double N = static_cast<double>(spec.N);
  const double iN = 1.0 / N;
  const double iN2 = iN * iN;

  const Mat& L = spec.lambda;
  const Mat& U = state.U;
  const Vec& z = state.z;
  const Vec& Z = state.Z;
  const double v = state.v;

  // Shared lambda powers and state contractions, computed once per call.
  const Mat L2 = L * L;
  const double trL = L.trace();
  const double trL2 = L2.trace();

  const Mat UL = U * L;
  const Mat LU = L * U;
  const Mat LUL = LU * L;                  // lambda U lambda
  const Mat LUtL = L * U.transpose() * L;  // lambda U^T lambda
  const Mat L2UL = L2 * UL;                // lambda^2 U lambda

  const double trUL = UL.trace();
  const double tr_ULUtL = UL.cwiseProduct(LU).sum();          // tr(UL U^T L)
  const double tr_ULUtL2 = UL.cwiseProduct(L2 * U).sum();     // tr(UL U^T L^2)
  const double tr_ULUL = UL.cwiseProduct(UL.transpose()).sum();  // tr(UL UL)

  const Vec zL = L * z;    // column form of the row z^T lambda
  const Vec zL2 = L2 * z;
  const Vec ZL = L * Z;
  const Vec ZL2 = L2 * Z;

  // Column forms of rows z^T lambda (U|U^T) lambda ...; each matrix below is
  // symmetric (lambda-sandwiched), so column form = matrix * z.
  const Vec zLUL = LUtL * z;             // row z^T.L.U.L
  const Vec zLUtL = LUL * z;             // row z^T.L.U^T.L
  const Vec zLULUL = L * (U.transpose() * (L * (U.transpose() * zL)));
  const Vec zLULUtL = L * (U * (L * (U.transpose() * zL)));
  const Vec zLUtLUL = L * (U.transpose() * (L * (U * zL)));
  const Vec zLUtLUtL = L * (U * (L * (U * zL)));
  const Vec zL2UL = L * (U.transpose() * zL2);  // row z^T.L^2.U.L

  const Vec ZLUtL = LUL * Z;    // row Z^T.L.U^T.L
  const Vec ZLUtL2 = L2UL * Z;  // row Z^T.L.U^T.L^2
  const Vec ZLUL = LUtL * Z;    // row Z^T.L.U.L

  const double zLz = z.dot(zL);
  const double zL2z = z.dot(zL2);
  const double ZLZ = Z.dot(ZL);
  const double zLZ = z.dot(ZL);
  const double zLULZ = zLUL.dot(Z);    // z^T.L.U.L.Z
  const double zL2ULZ = zL2UL.dot(Z);  // z^T.L^2.U.L.Z
  const double zLUtLZ = zLUtL.dot(Z);  // z^T.L.U^T.L.Z
  const double zLULz = zLUL.dot(z);
  const double zLUtLz = zLUtL.dot(z);

  GradState g;
  g.dU = Mat::Zero(d, d);
  g.dz = Vec::Zero(d);
  g.dZ = Vec::Zero(d);
  g.dv = 0.0;

  const auto scale_of = [fault](const char* id) {
    return (fault && fault->line_id == id) ? fault->scale : 1.0;
  };
  const auto add_v = [&](const char* id, double val) {
    val *= scale_of(id);
    g.dv += val;
    if (terms) terms->v_terms.emplace_back(id, val);
  };
  const auto add_z = [&](const char* id, Vec val) {
    val *= scale_of(id);
    g.dz += val;
    if (terms) terms->z_terms.emplace_back(id, std::move(val));
  };
  const auto add_Z = [&](const char* id, Vec val) {
    val *= scale_of(id);
    g.dZ += val;
    if (terms) terms->Z_terms.emplace_back(id, std::move(val));
  };
  const auto add_U = [&](const char* id, Mat val) {
    val *= scale_of(id);
    g.dU += val;
    if (terms) terms->U_terms.emplace_back(id, std::move(val));
  };

  // ----- dL/dv ---------------------------------------------------------
  add_v("dv.t1", iN * v * tr_ULUtL * trL);
  add_v("dv.t2", (N + 1.0) * iN * v * tr_ULUtL2);
  add_v("dv.t3", (N + 2.0) * iN * zLULZ * trL);
  add_v("dv.t4", (N + 3.0) * iN * zL2ULZ);
  add_v("dv.t5", (N + 2.0) * iN * (trL * trL + 2.0 * trL2) * v * ZLZ);
  add_v("dv.t6", iN * (zLUtLZ + zLZ * trUL) * trL);
  add_v("dv.t7", -U.cwiseProduct(L2).sum());  // -tr(L U L)

  // ----- dL/dz ---------------------------------------------------------
  add_z("dz.t01", iN * tr_ULUtL * zL);
  add_z("dz.t02", (N + 2.0) * iN * zLULUtL);
  add_z("dz.t03", iN * trUL * zLUL);
  add_z("dz.t04", iN * zLULUL);
  add_z("dz.t05", iN * trL * ZLZ * zL);
  add_z("dz.t06", (N + 1.0) * iN * ZLZ * zL2);
  add_z("dz.t07", (N + 2.0) * iN * v * trL * ZLUtL);
  add_z("dz.t08", (N + 3.0) * iN * v * ZLUtL2);
  add_z("dz.t09", iN * v * trL * trUL * ZL);
  add_z("dz.t10", iN * v * trL * ZLUL);
  add_z("dz.t11", iN * zLULUtL);
  add_z("dz.t12", iN * zLUtLUtL);
  add_z("dz.t13", iN * trUL * zLUtL);
  add_z("dz.t14",
        iN2 * (2.0 * trUL * zLUL + 2.0 * zLULUL + 2.0 * zLULUtL +
               2.0 * trUL * zLUtL + 2.0 * zLUtLUL + 2.0 * zLUtLUtL +
               tr_ULUL * zL + tr_ULUtL * zL + trUL * trUL * zL));
  add_z("dz.t15", -ZL2);

  // ----- dL/dZ ---------------------------------------------------------
  add_Z("dZ.t01", 2.0 * iN * v * zL2UL);
  add_Z("dZ.t02", v * trL * zLUL);
  add_Z("dZ.t03", iN * zLz * trL * ZL);
  add_Z("dZ.t04", (N + 1.0) * iN * zL2z * ZL);
  add_Z("dZ.t05", 2.0 * iN * v * trL * zLUL);
  add_Z("dZ.t06", (N + 1.0) * iN * v * zL2UL);
  add_Z("dZ.t07", (N + 2.0) * iN * v * v * trL * trL * ZL);
  add_Z("dZ.t08", 2.0 * (N + 2.0) * iN * v * v * trL2 * ZL);
  add_Z("dZ.t09", iN * v * trL * zLUtL);
  add_Z("dZ.t10", iN * v * trUL * trL * zL);
  add_Z("dZ.t11", -zL2);

  // ----- dL/dU ---------------------------------------------------------
  add_U("dU.t01", iN * zLz * LUL);
  add_U("dU.t02", (N + 3.0) * iN * zL * zLUL.transpose());
  add_U("dU.t03", iN * zLULz * L);
  add_U("dU.t04", iN * zLUL * zL.transpose());
  add_U("dU.t05", (N + 1.0) * iN * v * trL * zL * ZL.transpose());
  add_U("dU.t06", (N + 3.0) * iN * v * zL2 * ZL.transpose());
  add_U("dU.t07", iN * v * v * trL * LUL);
  add_U("dU.t08", (N + 1.0) * iN * v * v * L2UL);
  add_U("dU.t09", iN * v * trL *
                      (zLZ * L + ZL * zL.transpose() + zL * ZL.transpose()));
  add_U("dU.t10", iN * zL * zLUtL.transpose());
  add_U("dU.t11", iN * trUL * zL * zL.transpose());
  add_U("dU.t12",
        iN2 * (zLULz * L + 2.0 * zLUL * zL.transpose() +
               2.0 * zL * zLUL.transpose() + zLUtLz * L +
               2.0 * zL * zLUtL.transpose() + zLz * trUL * L + zLz * LUtL +
               zLz * LUL + 2.0 * zLUtL * zL.transpose() +
               2.0 * trUL * zL * zL.transpose()));
  add_U("dU.t13", -v * L2);

  return g;
}

const std::vector<std::string>& gradient_term_ids() {
  static const std::vector<std::string> ids = [] {
    ModelSpec spec;
    spec.d = 1;
    spec.N = 1;
    spec.lambda = Mat::Identity(1, 1);
    const GammaSpec gamma = make_gamma(spec);
    FullState s = zero_state(1);
    s.U(0, 0) = 1.0;
    s.z(0) = 1.0;
    s.Z(0) = 1.0;
    s.v = 1.0;
    GradTerms t;
    full_gradient(s, spec, gamma, nullptr, &t);
    std::vector<std::string> out;
    for (const auto& [id, val] : t.v_terms) out.push_back(id);
    for (const auto& [id, val] : t.z_terms) out.push_back(id);
    for (const auto& [id, val] : t.Z_terms) out.push_back(id);
    for (const auto& [id, val] : t.U_terms) out.push_back(id);
    return out;
  }();
  return ids;
}

double grad_v(const FullState& state, const ModelSpec& spec,
              const GammaSpec& gamma) {
  return full_gradient(state, spec, gamma).dv;
}

Vec grad_z(const FullState& state, const ModelSpec& spec,
           const GammaSpec& gamma) {
  return full_gradient(state, spec, gamma).dz;
}

Vec grad_Z(const FullState& state, const ModelSpec& spec,
           const GammaSpec& gamma) {
  return full_gradient(state, spec, gamma).dZ;
}

Mat grad_U(const FullState& state, const ModelSpec& spec,
           const GammaSpec& gamma) {
  return full_gradient(state, spec, gamma).dU;
}

GradState full_flow_rhs(const FullState& state, const ModelSpec& spec,
                        const GammaSpec& gamma) {
  GradState g = full_gradient(state, spec, gamma);
  g.dU = -g.dU;
  g.dz = -g.dz;
  g.dZ = -g.dZ;
  g.dv = -g.dv;
  return g;
}

double full_expected_loss(const FullState& state, const ModelSpec& spec,
                          const GammaSpec& gamma) {
  // L = Q4 + Q2 + tr(lambda)/2 with Q4 quartic-homogeneous and Q2
  // quadratic-homogeneous.  Euler: <grad L(c s), c s> = 4 c^4 Q4 + 2 c^2 Q2.
  const double g1 = inner(full_gradient(state, spec, gamma), state);
  const FullState s2 = scaled(state, 2.0);
  const double g2 = inner(full_gradient(s2, spec, gamma), s2);
  const double q4 = (g2 - 4.0 * g1) / 48.0;
  const double q2 = (g1 - 4.0 * q4) / 2.0;
  return q4 + q2 + 0.5 * spec.lambda.trace();
}

}  // namespace iclflow

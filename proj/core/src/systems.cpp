#include "iclflow/systems.hpp"

#include <stdexcept>

#include "iclflow/gradients.hpp"

namespace iclflow {

namespace {

void check_size(const Vec& x, int expected, const char* who) {
  if (x.size() != expected)
    throw std::invalid_argument(std::string(who) +
                                ": state vector has wrong size");
}

}  // namespace

Vec pack_full(const FullState& s) {
  const int d = static_cast<int>(s.z.size());
  Vec x(d * d + 2 * d + 1);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) x[i * d + j] = s.U(i, j);
  x.segment(d * d, d) = s.z;
  x.segment(d * d + d, d) = s.Z;
  x[d * d + 2 * d] = s.v;
  return x;
}

FullState unpack_full(const Vec& x, int d) {
  check_size(x, d * d + 2 * d + 1, "unpack_full");
  FullState s;
  s.U = Mat(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) s.U(i, j) = x[i * d + j];
  s.z = x.segment(d * d, d);
  s.Z = x.segment(d * d + d, d);
  s.v = x[d * d + 2 * d];
  return s;
}

Vec pack_simplified(const SimplifiedState& s) {
  const int d = static_cast<int>(s.U.rows());
  Vec x(d * d + 1);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) x[i * d + j] = s.U(i, j);
  x[d * d] = s.v;
  return x;
}

SimplifiedState unpack_simplified(const Vec& x, int d) {
  check_size(x, d * d + 1, "unpack_simplified");
  SimplifiedState s;
  s.U = Mat(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) s.U(i, j) = x[i * d + j];
  s.v = x[d * d];
  return s;
}

Vec pack_d1(const D1State& s) {
  Vec x(4);
  x << s.U, s.z, s.Z, s.v;
  return x;
}

D1State unpack_d1(const Vec& x) {
  check_size(x, 4, "unpack_d1");
  return D1State{x[0], x[1], x[2], x[3]};
}

FlowSystem make_full_system(const ModelSpec& spec) {
  const GammaSpec gamma = make_gamma(spec);
  FlowSystem sys;
  sys.dim = spec.d * spec.d + 2 * spec.d + 1;
  sys.name = "full";
  sys.rhs = [spec, gamma](const Vec& x, Vec& dxdt) {
    const FullState s = unpack_full(x, spec.d);
    const GradState g = full_flow_rhs(s, spec, gamma);
    dxdt = pack_full(FullState{g.dU, g.dz, g.dZ, g.dv});
  };
  sys.loss = [spec, gamma](const Vec& x) {
    return full_expected_loss(unpack_full(x, spec.d), spec, gamma);
  };
  sys.kappa = [spec](const Vec& x) { return kappa_full(unpack_full(x, spec.d)); };
  return sys;
}

FlowSystem make_simplified_system(const ModelSpec& spec) {
  const GammaSpec gamma = make_gamma(spec);
  FlowSystem sys;
  sys.dim = spec.d * spec.d + 1;
  sys.name = "simplified";
  sys.rhs = [spec, gamma](const Vec& x, Vec& dxdt) {
    const SimplifiedState s = unpack_simplified(x, spec.d);
    const SimplifiedState r = simplified_rhs(s, spec, gamma);
    dxdt = pack_simplified(r);
  };
  sys.loss = [spec, gamma](const Vec& x) {
    return simplified_loss(unpack_simplified(x, spec.d), gamma);
  };
  sys.kappa = [spec](const Vec& x) {
    return kappa_simplified(unpack_simplified(x, spec.d));
  };
  return sys;
}

FlowSystem make_d1_system(int N) {
  const D1Coefficients c = d1_coefficients(N);
  FlowSystem sys;
  sys.dim = 4;
  sys.name = "d1";
  sys.rhs = [c](const Vec& x, Vec& dxdt) {
    dxdt = pack_d1(d1_rhs(unpack_d1(x), c));
  };
  sys.loss = [c](const Vec& x) { return d1_loss(unpack_d1(x), c); };
  sys.kappa = [](const Vec& x) { return kappa_d1(unpack_d1(x)); };
  return sys;
}

}  // namespace iclflow

#include "iclflow/d1.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace iclflow {

namespace {

double sup_norm(const D1State& s) {
  return std::max(std::max(std::abs(s.U), std::abs(s.z)),
                  std::max(std::abs(s.Z), std::abs(s.v)));
}

Vec to_vec(const D1State& s) {
  Vec x(4);
  x << s.U, s.z, s.Z, s.v;
  return x;
}

D1CriticalPoint analyze(std::string label, CriticalKind kind, const D1State& s,
                        const D1Coefficients& c) {
  D1CriticalPoint p;
  p.label = std::move(label);
  p.kind = kind;
  p.state = s;
  p.kappa = kappa_d1(s);
  p.loss = d1_loss(s, c);
  p.residual_inf = sup_norm(d1_rhs(s, c));
  Eigen::SelfAdjointEigenSolver<Mat> es(d1_hessian(s, c));
  p.eigenvalues = es.eigenvalues();
  p.classification = classify(p.eigenvalues, &p.zero_multiplicity);
  return p;
}

}  // namespace

D1Coefficients d1_coefficients(int N) {
  if (N < 1) throw std::invalid_argument("d1_coefficients: N must be >= 1");
  const double n = static_cast<double>(N);
  D1Coefficients c;
  c.N = N;
  c.a_coef = (n + 2.0) / n;
  c.b_coef = (3.0 * n + 6.0) / n;
  c.c_coef = (2.0 * n + 7.0) / n;
  c.d_coef = (n + 8.0) / n + 15.0 / (n * n);
  const double bd = std::sqrt(c.b_coef * c.d_coef);
  c.rho = 1.0 / (c.a_coef + bd + c.c_coef);
  const double sb = std::sqrt(c.b_coef), sd = std::sqrt(c.d_coef);
  c.mu2 = (sb + sd) * (sb + sd) / bd;
  return c;
}

D1State d1_rhs(const D1State& s, const D1Coefficients& c) {
  const double a = c.a_coef, b = c.b_coef, g = c.c_coef, dd = c.d_coef;
  const double U = s.U, z = s.z, Z = s.Z, v = s.v;
  D1State out;
  out.U = v - a * v * v * U - dd * z * z * U - g * v * z * Z;
  out.z = Z - a * z * Z * Z - dd * z * U * U - g * v * Z * U;
  out.Z = z - a * z * z * Z - b * v * v * Z - g * v * z * U;
  out.v = U - a * v * U * U - b * v * Z * Z - g * z * Z * U;
  return out;
}

double d1_loss(const D1State& s, const D1Coefficients& c) {
  const double a = c.a_coef, b = c.b_coef, g = c.c_coef, dd = c.d_coef;
  const double U = s.U, z = s.z, Z = s.Z, v = s.v;
  return -(U * v + z * Z) +
         0.5 * (a * (v * v * U * U + z * z * Z * Z) + b * v * v * Z * Z +
                dd * z * z * U * U) +
         g * v * U * z * Z;
}

double kappa_d1(const D1State& s) {
  return s.v * s.v + s.z * s.z - s.Z * s.Z - s.U * s.U;
}

std::array<D1State, 4> d1_symmetries(const D1State& s) {
  return {D1State{-s.U, s.z, s.Z, -s.v}, D1State{s.U, -s.z, -s.Z, s.v},
          D1State{-s.U, -s.z, -s.Z, -s.v}, D1State{s.z, s.U, s.v, s.Z}};
}

Mat d1_hessian(const D1State& s, const D1Coefficients& c) {
  const double a = c.a_coef, b = c.b_coef, g = c.c_coef, dd = c.d_coef;
  const double U = s.U, z = s.z, Z = s.Z, v = s.v;
  Mat H(4, 4);
  H(0, 0) = -(a * v * v + dd * z * z);
  H(0, 1) = -(2.0 * dd * z * U + g * v * Z);
  H(0, 2) = -g * v * z;
  H(0, 3) = 1.0 - (2.0 * a * v * U + g * z * Z);
  H(1, 1) = -(a * Z * Z + dd * U * U);
  H(1, 2) = 1.0 - (2.0 * a * z * Z + g * v * U);
  H(1, 3) = -g * Z * U;
  H(2, 2) = -(a * z * z + b * v * v);
  H(2, 3) = -(2.0 * b * v * Z + g * z * U);
  H(3, 3) = -(a * U * U + b * Z * Z);
  H(1, 0) = H(0, 1);
  H(2, 0) = H(0, 2);
  H(2, 1) = H(1, 2);
  H(3, 0) = H(0, 3);
  H(3, 1) = H(1, 3);
  H(3, 2) = H(2, 3);
  return H;
}

std::vector<D1CriticalPoint> d1_critical_points(double kappa,
                                                const D1Coefficients& c) {
  std::vector<D1CriticalPoint> out;
  const double a = c.a_coef, b = c.b_coef, dd = c.d_coef;

  // Gated pair: z = Z = 0, a v U = 1, v^2 - U^2 = kappa.
  const double S = std::sqrt(kappa * kappa + 4.0 / (a * a));
  const double gate_v = std::sqrt(0.5 * (S + kappa));
  const double gate_U = std::sqrt(0.5 * (S - kappa));
  out.push_back(analyze("A+", CriticalKind::A,
                        D1State{gate_U, 0.0, 0.0, gate_v}, c));
  out.push_back(analyze("A-", CriticalKind::A,
                        D1State{-gate_U, 0.0, 0.0, -gate_v}, c));

  // Swap twins: U = v = 0, a z Z = 1, z^2 - Z^2 = kappa.
  const double twin_z = std::sqrt(0.5 * (S + kappa));
  const double twin_Z = std::sqrt(0.5 * (S - kappa));
  out.push_back(analyze("A'+", CriticalKind::A,
                        D1State{0.0, twin_z, twin_Z, 0.0}, c));
  out.push_back(analyze("A'-", CriticalKind::A,
                        D1State{0.0, -twin_z, -twin_Z, 0.0}, c));

  // Mixed points: all coordinates nonzero, v U = z Z = rho.
  const double delta = std::sqrt(kappa * kappa + 4.0 * c.rho * c.rho * c.mu2);
  const double sb = std::sqrt(b), sd = std::sqrt(dd);
  const double cb = sb / (2.0 * (sb + sd));
  const double cd = sd / (2.0 * (sb + sd));
  const D1State base{std::sqrt(cb * (delta - kappa)),
                     std::sqrt(cb * (delta + kappa)),
                     std::sqrt(cd * (delta - kappa)),
                     std::sqrt(cd * (delta + kappa))};
  const auto mirrored = d1_symmetries(base);
  out.push_back(analyze("B++++", CriticalKind::B, base, c));
  out.push_back(analyze("B+--+", CriticalKind::B, mirrored[1], c));
  out.push_back(analyze("B-++-", CriticalKind::B, mirrored[0], c));
  out.push_back(analyze("B----", CriticalKind::B, mirrored[2], c));

  if (std::abs(kappa) <= 1e-12)
    out.push_back(analyze("O", CriticalKind::O, D1State{}, c));
  return out;
}

double d1_neutral_alignment_angle(const D1State& s, const D1Coefficients& c) {
  Eigen::SelfAdjointEigenSolver<Mat> es(d1_hessian(s, c));
  // Eigenvector whose eigenvalue is closest to zero.
  int k = 0;
  for (int i = 1; i < 4; ++i)
    if (std::abs(es.eigenvalues()[i]) < std::abs(es.eigenvalues()[k])) k = i;
  Vec kernel = es.eigenvectors().col(k);
  Vec neutral(4);
  neutral << -s.U, s.z, -s.Z, s.v;
  const double nn = neutral.norm();
  if (nn == 0.0)
    throw std::invalid_argument(
        "d1_neutral_alignment_angle: zero conserved-quantity gradient");
  const double cosang =
      std::min(1.0, std::abs(kernel.dot(neutral)) / (kernel.norm() * nn));
  return std::acos(cosang);
}

D1LowerBound d1_lower_bound_check(const D1State& s, const D1Coefficients& c) {
  // Both sides are evaluated in extended precision: quartic terms reach ~1e4
  // for tail states, and double rounding alone would otherwise dominate the
  // reported residual of the (exact) algebraic identity.
  const long double a = c.a_coef, b = c.b_coef, g = c.c_coef, dd = c.d_coef;
  const long double vU = static_cast<long double>(s.v) * s.U;
  const long double zZ = static_cast<long double>(s.z) * s.Z;
  const long double vZ = static_cast<long double>(s.v) * s.Z;
  const long double zU = static_cast<long double>(s.z) * s.U;
  // Doubled loss, mirroring d1_loss term by term.
  const long double two_loss = -2.0L * (vU + zZ) +
                               a * (vU * vU + zZ * zZ) + b * vZ * vZ +
                               dd * zU * zU + 2.0L * g * vU * zZ;
  const long double miss = vU + zZ - 1.0L / a;
  const long double p = a * miss * miss;
  const long double r = b * vZ * vZ + dd * zU * zU + 2.0L * (g - a) * vZ * zU;
  D1LowerBound out;
  out.P = static_cast<double>(p);
  out.R = static_cast<double>(r);
  out.residual = static_cast<double>(std::abs(two_loss - (p - 1.0L / a + r)));
  return out;
}

}  // namespace iclflow

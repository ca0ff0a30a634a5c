#include "iclflow/simplified.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace iclflow {

namespace {

double sup_norm(const SimplifiedState& s) {
  double m = std::abs(s.v);
  if (s.U.size() > 0) m = std::max(m, s.U.cwiseAbs().maxCoeff());
  return m;
}

double rhs_sup_norm(const SimplifiedState& s, const ModelSpec& spec,
                    const GammaSpec& gamma) {
  const SimplifiedState r = simplified_rhs(s, spec, gamma);
  return sup_norm(r);
}

// Solves the arrowhead secular equation
//   f(mu) = (t0 - mu) - sum_g B_g / (p_g - mu) = 0
// by bisection.  f is strictly decreasing between consecutive poles and on
// the outer intervals, so each interval brackets exactly one root.
class SecularSolver {
 public:
  SecularSolver(std::vector<double> poles, std::vector<double> weights,
                double t0)
      : t0_(t0) {
    // Group numerically equal poles; a pole of multiplicity m is itself an
    // eigenvalue of multiplicity m-1, and its weights aggregate.
    double scale = 1.0;
    for (double p : poles) scale = std::max(scale, std::abs(p));
    const double same_tol = 1e-12 * scale;
    std::vector<std::pair<double, double>> items;
    for (std::size_t i = 0; i < poles.size(); ++i)
      items.emplace_back(poles[i], weights[i]);
    std::sort(items.begin(), items.end());
    for (const auto& [p, w] : items) {
      if (!groups_.empty() && p - groups_.back().first <= same_tol) {
        groups_.back().second += w;
        extra_roots_.push_back(groups_.back().first);
      } else {
        groups_.emplace_back(p, w);
      }
    }
  }

  std::vector<double> solve() const {
    std::vector<double> roots = extra_roots_;
    const std::size_t g = groups_.size();
    // Initial outer half-widths, expanded until the signs confirm a bracket.
    double reach = 1.0 + std::abs(t0_);
    for (const auto& [p, w] : groups_) reach += std::abs(p) + std::sqrt(w);

    // Root below the smallest pole.
    {
      double lo = groups_.front().first - reach;
      while (f(lo) <= 0.0) lo = groups_.front().first - (reach *= 2.0);
      roots.push_back(bisect(lo, groups_.front().first));
    }
    // One root strictly between each pair of consecutive distinct poles.
    for (std::size_t k = 0; k + 1 < g; ++k)
      roots.push_back(bisect(groups_[k].first, groups_[k + 1].first));
    // Root above the largest pole.
    {
      double hi = groups_.back().first + reach;
      while (f(hi) >= 0.0) hi = groups_.back().first + (reach *= 2.0);
      roots.push_back(bisect(groups_.back().first, hi));
    }
    std::sort(roots.begin(), roots.end());
    return roots;
  }

 private:
  double f(double mu) const {
    double val = t0_ - mu;
    for (const auto& [p, w] : groups_) val -= w / (p - mu);
    return val;
  }

  // Bisection on (lo, hi) where f -> +inf at lo+ and -inf at hi- (or the
  // endpoints are regular with f(lo) > 0 > f(hi)).
  double bisect(double lo, double hi) const {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;  // interval at rounding resolution
      if (f(mid) > 0.0)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  }

  std::vector<std::pair<double, double>> groups_;  // (pole, aggregated weight)
  std::vector<double> extra_roots_;
  double t0_ = 0.0;
};

}  // namespace

SimplifiedState simplified_rhs(const SimplifiedState& s, const ModelSpec& spec,
                               const GammaSpec& gamma) {
  const Mat& L = spec.lambda;
  const int d = spec.d;
  const Mat core = Mat::Identity(d, d) - s.v * (gamma.gamma * s.U);
  SimplifiedState out;
  out.U = s.v * (L * core * L);
  out.v = (L * core * L * s.U.transpose()).trace();
  return out;
}

double kappa_simplified(const SimplifiedState& s) {
  return s.v * s.v - s.U.squaredNorm();
}

DiagState diagonalize(const SimplifiedState& s, const GammaSpec& gamma) {
  DiagState ds;
  ds.V = gamma.eigvecs.transpose() * s.U * gamma.eigvecs;
  ds.v = s.v;
  return ds;
}

SimplifiedState from_diag(const DiagState& ds, const GammaSpec& gamma) {
  SimplifiedState s;
  s.U = gamma.eigvecs * ds.V * gamma.eigvecs.transpose();
  s.v = ds.v;
  return s;
}

Mat coupling_matrix(const DiagState& ds, const GammaSpec& gamma) {
  return ds.v * (gamma.gamma_eigs.asDiagonal() * ds.V);
}

DiagState diag_flow_rhs(const DiagState& ds, const GammaSpec& gamma) {
  const Vec& lam = gamma.lambda_eigs;
  const Vec& gam = gamma.gamma_eigs;
  const int d = static_cast<int>(lam.size());
  DiagState out;
  out.V = Mat::Zero(d, d);
  double vdot = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const double delta = (i == j) ? 1.0 : 0.0;
      out.V(i, j) = ds.v * lam[i] * lam[j] * (delta - ds.v * gam[i] * ds.V(i, j));
      vdot -= ds.v * lam[i] * lam[j] * gam[i] * ds.V(i, j) * ds.V(i, j);
    }
    vdot += lam[i] * lam[i] * ds.V(i, i);
  }
  out.v = vdot;
  return out;
}

CoordinateFlow coordinate_flow(const DiagState& ds, const GammaSpec& gamma) {
  const Vec& lam = gamma.lambda_eigs;
  const Vec& gam = gamma.gamma_eigs;
  const int d = static_cast<int>(lam.size());
  const Mat S = coupling_matrix(ds, gamma);
  CoordinateFlow out;
  out.dV2 = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const double ratio = lam[i] * lam[j] / gam[i];
      if (i == j) {
        const double centered = S(i, i) - 0.5;
        out.dV2(i, i) = 2.0 * ratio * (0.25 - centered * centered);
      } else {
        out.dV2(i, j) = -2.0 * ratio * S(i, j) * S(i, j);
      }
    }
  }
  // Computed independently of dV2 so the balance is a real cross-check.
  double dv2 = 0.0;
  for (int i = 0; i < d; ++i) {
    dv2 += 2.0 * ds.v * lam[i] * lam[i] * ds.V(i, i);
    for (int j = 0; j < d; ++j)
      dv2 -= 2.0 * ds.v * ds.v * lam[i] * lam[j] * gam[i] * ds.V(i, j) * ds.V(i, j);
  }
  out.dv2 = dv2;
  return out;
}

double simplified_loss(const DiagState& ds, const GammaSpec& gamma) {
  const Vec& lam = gamma.lambda_eigs;
  const Vec& gam = gamma.gamma_eigs;
  const int d = static_cast<int>(lam.size());
  const Mat S = coupling_matrix(ds, gamma);
  double loss = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const double ratio = lam[i] * lam[j] / gam[i];
      if (i == j) {
        const double miss = 1.0 - S(i, i);
        loss += ratio * miss * miss;
      } else {
        loss += ratio * S(i, j) * S(i, j);
      }
    }
  }
  return 0.5 * loss;
}

double simplified_loss(const SimplifiedState& s, const GammaSpec& gamma) {
  return simplified_loss(diagonalize(s, gamma), gamma);
}

SimplifiedSpectrumConstants spectrum_constants(const GammaSpec& gamma) {
  SimplifiedSpectrumConstants c;
  for (int i = 0; i < gamma.lambda_eigs.size(); ++i) {
    const double lam = gamma.lambda_eigs[i];
    const double gam = gamma.gamma_eigs[i];
    c.mu += 1.0 / (gam * gam);
    c.nu += lam * lam / gam;
  }
  return c;
}

double leaf_level_a(const GammaSpec& gamma, double kappa) {
  const double mu = spectrum_constants(gamma).mu;
  const double a2 = 0.5 * (kappa + std::sqrt(kappa * kappa + 4.0 * mu));
  return std::sqrt(a2);
}

SimplifiedState make_point_A(const GammaSpec& gamma, double kappa, int sign) {
  if (sign != 1 && sign != -1)
    throw std::invalid_argument("make_point_A: sign must be +1 or -1");
  const double v = sign * leaf_level_a(gamma, kappa);
  const int d = static_cast<int>(gamma.lambda_eigs.size());
  Vec diag(d);
  for (int i = 0; i < d; ++i) diag[i] = 1.0 / (gamma.gamma_eigs[i] * v);
  SimplifiedState s;
  s.U = gamma.eigvecs * diag.asDiagonal() * gamma.eigvecs.transpose();
  s.v = v;
  return s;
}

bool is_critical_B(const SimplifiedState& s, const GammaSpec& gamma,
                   double tol) {
  const DiagState ds = diagonalize(s, gamma);
  double weighted_trace = 0.0;
  double weight_scale = 0.0;
  for (int i = 0; i < gamma.lambda_eigs.size(); ++i) {
    const double l2 = gamma.lambda_eigs[i] * gamma.lambda_eigs[i];
    weighted_trace += l2 * ds.V(i, i);
    weight_scale += l2;
  }
  const double scale = (1.0 + sup_norm(s)) * (1.0 + weight_scale);
  return std::abs(s.v) <= tol * scale &&
         std::abs(weighted_trace) <= tol * scale;
}

Mat linearization(const SimplifiedState& s, const ModelSpec& spec,
                  const GammaSpec& gamma, double crit_tol) {
  const double res = rhs_sup_norm(s, spec, gamma);
  if (res > crit_tol * (1.0 + sup_norm(s)))
    throw std::invalid_argument(
        "linearization: state is not an equilibrium (flow sup-norm " +
        std::to_string(res) + ")");
  const DiagState ds = diagonalize(s, gamma);
  const Vec& lam = gamma.lambda_eigs;
  const Vec& gam = gamma.gamma_eigs;
  const int d = static_cast<int>(lam.size());
  const int n = d * d + 1;
  Mat M = Mat::Zero(n, n);
  const auto idx = [d](int i, int j) { return i * d + j; };
  double corner = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const int k = idx(i, j);
      M(k, k) = -ds.v * ds.v * lam[i] * lam[j] * gam[i];
      const double delta = (i == j) ? 1.0 : 0.0;
      const double border =
          lam[i] * lam[j] * delta - 2.0 * ds.v * lam[i] * lam[j] * gam[i] * ds.V(i, j);
      M(k, d * d) = border;
      M(d * d, k) = border;
      corner -= lam[i] * lam[j] * gam[i] * ds.V(i, j) * ds.V(i, j);
    }
  }
  M(d * d, d * d) = corner;
  return M;
}

Vec char_poly_eigs(CriticalKind kind, const DiagState& ds,
                   const GammaSpec& gamma) {
  const Vec& lam = gamma.lambda_eigs;
  const Vec& gam = gamma.gamma_eigs;
  const int d = static_cast<int>(lam.size());
  std::vector<double> eigs;
  eigs.reserve(d * d + 1);

  if (kind == CriticalKind::A) {
    const double a2 = ds.v * ds.v;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (i != j) eigs.push_back(-a2 * lam[i] * lam[j] * gam[i]);
    // Arrowhead block over the diagonal coordinates and v.
    std::vector<double> poles(d), weights(d);
    double nu = 0.0;
    for (int i = 0; i < d; ++i) {
      poles[i] = -a2 * lam[i] * lam[i] * gam[i];
      weights[i] = lam[i] * lam[i] * lam[i] * lam[i];  // border entry squared
      nu += lam[i] * lam[i] / gam[i];
    }
    const double t0 = -nu / a2;
    for (double r : SecularSolver(std::move(poles), std::move(weights), t0).solve())
      eigs.push_back(r);
  } else {
    // Zero-speed points (including the origin): the V-V block vanishes, the
    // border couples only the diagonal coordinates, so the spectrum is
    // d^2 - 1 zeros plus the eigenvalues of [[0, b], [b, t0]].
    double t0 = 0.0;
    double b2 = 0.0;
    for (int i = 0; i < d; ++i) {
      b2 += lam[i] * lam[i] * lam[i] * lam[i];
      for (int j = 0; j < d; ++j)
        t0 -= lam[i] * lam[j] * gam[i] * ds.V(i, j) * ds.V(i, j);
    }
    for (int k = 0; k < d * d - 1; ++k) eigs.push_back(0.0);
    const double disc = std::sqrt(t0 * t0 + 4.0 * b2);
    eigs.push_back(0.5 * (t0 - disc));
    eigs.push_back(0.5 * (t0 + disc));
  }

  std::sort(eigs.begin(), eigs.end());
  Vec out(static_cast<int>(eigs.size()));
  for (std::size_t k = 0; k < eigs.size(); ++k)
    out[static_cast<int>(k)] = eigs[k];
  return out;
}

CriticalPointReport analyze_critical_point(const SimplifiedState& s,
                                           const ModelSpec& spec,
                                           const GammaSpec& gamma,
                                           double crit_tol) {
  CriticalPointReport rep;
  rep.state = s;
  rep.residual_inf = rhs_sup_norm(s, spec, gamma);
  const double scale = 1.0 + sup_norm(s);
  if (rep.residual_inf > crit_tol * scale)
    throw std::invalid_argument(
        "analyze_critical_point: state is not an equilibrium (flow sup-norm " +
        std::to_string(rep.residual_inf) + ")");
  rep.kappa = kappa_simplified(s);
  const DiagState ds = diagonalize(s, gamma);
  // Any equilibrium with v != 0 has V = diag(1/(gamma_i v)); v = 0 gives the
  // zero-speed family, with the origin as the special fully-zero member.
  if (std::abs(s.v) > crit_tol * scale)
    rep.kind = CriticalKind::A;
  else if (sup_norm(s) <= crit_tol)
    rep.kind = CriticalKind::O;
  else
    rep.kind = CriticalKind::B;
  rep.eigenvalues = char_poly_eigs(rep.kind, ds, gamma);
  rep.classification = classify(rep.eigenvalues, &rep.zero_multiplicity);
  return rep;
}

std::vector<CriticalPointReport> critical_points_A(const ModelSpec& spec,
                                                   const GammaSpec& gamma,
                                                   double kappa) {
  std::vector<CriticalPointReport> out;
  out.push_back(analyze_critical_point(make_point_A(gamma, kappa, +1), spec,
                                       gamma, 1e-8));
  out.push_back(analyze_critical_point(make_point_A(gamma, kappa, -1), spec,
                                       gamma, 1e-8));
  return out;
}

Hyperplane critical_hyperplane(const GammaSpec& gamma, double kappa) {
  const double a = leaf_level_a(gamma, kappa);
  const double nu = spectrum_constants(gamma).nu;
  Hyperplane plane;
  plane.alpha_c = 1.0;
  plane.beta_c = a * a / nu;
  return plane;
}

double hyperplane_membership(const SimplifiedState& s, const GammaSpec& gamma,
                             const Hyperplane& plane) {
  const DiagState ds = diagonalize(s, gamma);
  double weighted_trace = 0.0;
  for (int i = 0; i < gamma.lambda_eigs.size(); ++i)
    weighted_trace += gamma.lambda_eigs[i] * gamma.lambda_eigs[i] * ds.V(i, i);
  return plane.alpha_c * s.v - plane.beta_c * weighted_trace;
}

}  // namespace iclflow

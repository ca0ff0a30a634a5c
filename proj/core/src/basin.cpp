#include "iclflow/basin.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "iclflow/d1.hpp"
#include "iclflow/sampling.hpp"
#include "iclflow/simplified.hpp"
#include "iclflow/systems.hpp"

namespace iclflow {

namespace {

double sup_dist(const Vec& a, const Vec& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

BasinStats basin_probe(const BasinRequest& request) {
  if (request.n_samples < 1)
    throw std::invalid_argument("basin_probe: n_samples must be >= 1");

  const bool scalar = request.system == ProbeSystem::d1;
  const FlowSystem system = scalar ? make_d1_system(request.spec.N)
                                   : make_simplified_system(request.spec);

  // Candidate builders capture whatever the equilibrium formulas need.
  GammaSpec gamma;
  D1Coefficients coeffs;
  if (scalar)
    coeffs = d1_coefficients(request.spec.N);
  else
    gamma = make_gamma(request.spec);

  const auto candidates_on_leaf =
      [&](double kappa) -> std::vector<std::pair<std::string, Vec>> {
    std::vector<std::pair<std::string, Vec>> out;
    if (scalar) {
      for (const D1CriticalPoint& p : d1_critical_points(kappa, coeffs))
        out.emplace_back(p.label, pack_d1(p.state));
    } else {
      out.emplace_back("A+", pack_simplified(make_point_A(gamma, kappa, +1)));
      out.emplace_back("A-", pack_simplified(make_point_A(gamma, kappa, -1)));
    }
    return out;
  };

  BasinStats stats;
  stats.n_samples = request.n_samples;
  double converged_time_sum = 0.0;
  int converged_count = 0;

  for (int i = 0; i < request.n_samples; ++i) {
    std::mt19937_64 rng(derive_seed(request.seed, static_cast<std::uint64_t>(i)));
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec x0(system.dim);
    for (int k = 0; k < system.dim; ++k)
      x0[k] = request.init_scale * normal(rng);

    const Trajectory traj = integrate(system, x0, request.cfg);
    ++stats.terminal_counts[to_string(traj.terminal)];
    if (traj.terminal == Terminal::converged) {
      converged_time_sum += traj.final_time;
      ++converged_count;
    }
    for (std::size_t k = 1; k < traj.loss.size(); ++k)
      stats.max_loss_increase =
          std::max(stats.max_loss_increase, traj.loss[k] - traj.loss[k - 1]);

    const Vec& final_state = traj.states.back();
    const double kappa0 = system.kappa(x0);
    std::string best_label;
    double best_dist = std::numeric_limits<double>::infinity();
    double best_scale = 1.0;
    for (const auto& [label, point] : candidates_on_leaf(kappa0)) {
      const double dist = sup_dist(final_state, point);
      if (dist < best_dist) {
        best_dist = dist;
        best_label = label;
        best_scale = 1.0 + point.cwiseAbs().maxCoeff();
      }
    }
    if (!best_label.empty() && best_dist <= request.hit_tol * best_scale)
      ++stats.attractor_hits[best_label];
    else
      ++stats.unclassified;
  }

  stats.mean_convergence_time =
      converged_count ? converged_time_sum / converged_count : 0.0;
  return stats;
}

}  // namespace iclflow

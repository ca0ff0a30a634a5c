#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "iclflow/integrate.hpp"
#include "iclflow/model.hpp"

namespace iclflow {

// Which flow the probe runs on.  The simplified flow uses spec.{d, N,
// lambda}; the scalar flow uses only spec.N.
enum class ProbeSystem { simplified, d1 };

struct BasinRequest {
  ProbeSystem system = ProbeSystem::simplified;
  ModelSpec spec;
  int n_samples = 1000;
  double init_scale = 1.0;   // initial states are init_scale * N(0, I)
  std::uint64_t seed = 0;
  IntegratorConfig cfg;
  double hit_tol = 1e-5;  // sup-norm capture radius around each equilibrium
};

struct BasinStats {
  int n_samples = 0;
  // Endpoint tallies keyed by equilibrium label ("A+", "A-", "A'+", "B...",
  // "O").  Candidates are recomputed per start on its own conserved leaf.
  std::map<std::string, int> attractor_hits;
  std::map<std::string, int> terminal_counts;
  double mean_convergence_time = 0.0;  // over runs that converged
  int unclassified = 0;
  // Largest loss increase between consecutive snapshots over all runs;
  // the flows are gradient flows, so this should be rounding-level only.
  double max_loss_increase = 0.0;
};

// Integrates n_samples random starts and tallies which equilibrium each one
// reaches.  Start i is drawn from a generator seeded with
// derive_seed(request.seed, i), so results are reproducible and independent
// of scheduling.
BasinStats basin_probe(const BasinRequest& request);

}  // namespace iclflow

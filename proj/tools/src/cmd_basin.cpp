#include "commands.hpp"
#include "iclflow/basin.hpp"

namespace icltool {

int run_basin(const BasinParams& p) {
  iclflow::BasinRequest req;
  if (p.system == "simplified") {
    req.system = iclflow::ProbeSystem::simplified;
  } else if (p.system == "d1") {
    req.system = iclflow::ProbeSystem::d1;
  } else {
    throw usage_error("unknown --system '" + p.system +
                      "' (expected simplified or d1)");
  }

  int d = p.d;
  req.spec.N = p.N;
  req.spec.lambda = parse_lambda(p.lambda, d);
  req.spec.d = d;
  if (p.samples < 1) throw usage_error("--samples must be positive");
  req.n_samples = p.samples;
  req.init_scale = p.init_scale;
  req.seed = p.seed;
  req.cfg = p.integ.to_config();
  req.hit_tol = p.hit_tol;

  const iclflow::BasinStats stats = iclflow::basin_probe(req);

  if (p.io.csv()) {
    std::string csv = "key,value\n";
    for (const auto& [label, count] : stats.attractor_hits)
      csv += "hit:" + label + ',' + std::to_string(count) + '\n';
    for (const auto& [label, count] : stats.terminal_counts)
      csv += "terminal:" + label + ',' + std::to_string(count) + '\n';
    csv += "unclassified," + std::to_string(stats.unclassified) + '\n';
    csv += "mean_convergence_time," +
           format_double(stats.mean_convergence_time) + '\n';
    csv += "max_loss_increase," + format_double(stats.max_loss_increase) +
           '\n';
    write_output(p.io.out, csv);
    return kOk;
  }

  ordered_json j = make_envelope("basin-probe");
  j["config"]["system"] = p.system;
  j["config"]["d"] = d;
  j["config"]["N"] = p.N;
  j["config"]["lambda"] = to_json(req.spec.lambda);
  j["config"]["samples"] = p.samples;
  j["config"]["init_scale"] = p.init_scale;
  j["config"]["seed"] = p.seed;
  j["config"]["hit_tol"] = p.hit_tol;
  j["config"]["integrator"] = p.integ.to_json();
  ordered_json hits = ordered_json::object();
  for (const auto& [label, count] : stats.attractor_hits) hits[label] = count;
  ordered_json terminals = ordered_json::object();
  for (const auto& [label, count] : stats.terminal_counts)
    terminals[label] = count;
  j["result"]["attractor_hits"] = std::move(hits);
  j["result"]["terminal_counts"] = std::move(terminals);
  j["result"]["unclassified"] = stats.unclassified;
  j["result"]["mean_convergence_time"] = stats.mean_convergence_time;
  j["result"]["max_loss_increase"] = stats.max_loss_increase;
  write_output(p.io.out, j.dump(2));
  return kOk;
}

}  // namespace icltool

#include <fstream>
#include <random>
#include <sstream>

#include "commands.hpp"
#include "iclflow/sampling.hpp"
#include "iclflow/serialize.hpp"
#include "iclflow/systems.hpp"

namespace icltool {

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw usage_error("cannot open state file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

iclflow::Vec initial_state(const SimulateParams& p,
                           const iclflow::FlowSystem& sys, int d) {
  if (p.init == "random" || p.init.rfind("random:", 0) == 0) {
    std::uint64_t seed = p.seed;
    if (p.init != "random") {  // "random:<seed>" overrides --seed
      try {
        seed = std::stoull(p.init.substr(7));
      } catch (const std::exception&) {
        throw usage_error("bad --init '" + p.init +
                          "': expected random:<seed>");
      }
    }
    std::mt19937_64 rng(iclflow::derive_seed(seed, 0));
    std::normal_distribution<double> normal(0.0, 1.0);
    iclflow::Vec x0(sys.dim);
    for (int i = 0; i < sys.dim; ++i) x0[i] = p.init_scale * normal(rng);
    return x0;
  }
  if (p.init == "zero") return iclflow::Vec::Zero(sys.dim);

  const std::string text = slurp(p.init);
  try {
    if (p.system == "full") {
      const iclflow::FullState s = iclflow::full_state_from_json(text);
      if (s.z.size() != d)
        throw usage_error("state file dimension disagrees with the model");
      return iclflow::pack_full(s);
    }
    const ordered_json j = ordered_json::parse(text);
    if (p.system == "simplified") {
      iclflow::SimplifiedState s;
      const auto& u = j.at("U");
      const int n = static_cast<int>(u.size());
      if (n != d) throw usage_error("state file dimension disagrees with --d");
      s.U = iclflow::Mat(n, n);
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) s.U(i, k) = u.at(i).at(k).get<double>();
      s.v = j.at("v").get<double>();
      return iclflow::pack_simplified(s);
    }
    iclflow::D1State s{j.at("U").get<double>(), j.at("z").get<double>(),
                       j.at("Z").get<double>(), j.at("v").get<double>()};
    return iclflow::pack_d1(s);
  } catch (const usage_error&) {
    throw;
  } catch (const std::exception& e) {
    throw usage_error("bad state file: " + std::string(e.what()));
  }
}

}  // namespace

int run_simulate(const SimulateParams& p) {
  int d = p.d;
  iclflow::FlowSystem sys;
  iclflow::ModelSpec spec;
  if (p.system == "full" || p.system == "simplified") {
    spec.N = p.N;
    spec.lambda = parse_lambda(p.lambda, d);
    spec.d = d;
    try {
      sys = p.system == "full" ? iclflow::make_full_system(spec)
                               : iclflow::make_simplified_system(spec);
    } catch (const std::invalid_argument& e) {
      throw usage_error(e.what());
    }
  } else if (p.system == "d1") {
    d = 1;
    sys = iclflow::make_d1_system(p.N);
  } else {
    throw usage_error("unknown --system '" + p.system +
                      "' (expected full, simplified, or d1)");
  }

  const iclflow::Vec x0 = initial_state(p, sys, d);
  const iclflow::IntegratorConfig cfg = p.integ.to_config();

  ordered_json j = make_envelope("simulate");
  {
    ordered_json c;
    c["system"] = p.system;
    if (p.system != "d1") {
      c["d"] = d;
      c["lambda"] = to_json(spec.lambda);
    }
    c["N"] = p.N;
    c["init"] = p.init;
    c["init-scale"] = p.init_scale;
    c["seed"] = p.seed;
    c["integrator"] = p.integ.to_json();
    j["config"] = std::move(c);
  }

  iclflow::Trajectory traj;
  try {
    traj = iclflow::integrate(sys, x0, cfg);
  } catch (const iclflow::integration_error& e) {
    ordered_json result;
    result["terminal"] = "non_finite";
    result["error"] = e.what();
    result["last_time"] = e.last_time;
    result["last_state"] = to_json(e.last_state);
    j["result"] = std::move(result);
    write_output(p.io.out, p.io.csv() ? std::string("error,") + e.what() + "\n"
                                      : j.dump(2));
    return kBlowUp;
  }

  if (p.io.csv()) {
    std::string csv = "t,loss,kappa,grad_inf_norm";
    if (p.save_states)
      for (int i = 0; i < sys.dim; ++i) csv += ",x" + std::to_string(i);
    csv += '\n';
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
      csv += format_double(traj.times[k]) + ',' + format_double(traj.loss[k]) +
             ',' + format_double(traj.kappa[k]) + ',' +
             format_double(traj.grad_inf_norm[k]);
      if (p.save_states)
        for (int i = 0; i < sys.dim; ++i)
          csv += ',' + format_double(traj.states[k][i]);
      csv += '\n';
    }
    write_output(p.io.out, csv);
    return kOk;
  }

  ordered_json result;
  result["terminal"] = iclflow::to_string(traj.terminal);
  result["steps_accepted"] = traj.steps_accepted;
  result["steps_rejected"] = traj.steps_rejected;
  result["final_time"] = traj.final_time;
  result["final_loss"] = traj.loss.back();
  result["final_kappa"] = traj.kappa.back();
  result["kappa_drift"] = std::abs(traj.kappa.back() - traj.kappa.front()) /
                          std::max(1.0, std::abs(traj.kappa.front()));
  result["final_grad_inf_norm"] = traj.grad_inf_norm.back();
  result["final_state"] = to_json(traj.states.back());
  j["result"] = std::move(result);

  ordered_json snaps = ordered_json::array();
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    ordered_json s;
    s["t"] = traj.times[k];
    s["loss"] = traj.loss[k];
    s["kappa"] = traj.kappa[k];
    s["grad_inf_norm"] = traj.grad_inf_norm[k];
    if (p.save_states) s["state"] = to_json(traj.states[k]);
    snaps.push_back(std::move(s));
  }
  j["snapshots"] = std::move(snaps);
  write_output(p.io.out, j.dump(2));
  return kOk;
}

}  // namespace icltool

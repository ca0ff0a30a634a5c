#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "commands.hpp"
#include "common.hpp"
#include "iclflow/integrate.hpp"
#include "iclflow/version.hpp"

namespace icltool {
namespace {

// Per-subcommand option registry.  Every long option doubles as a key in an
// optional --config JSON file; values from the file fill options the user
// did not pass, so the command line always wins.
class Binder {
 public:
  explicit Binder(CLI::App* cmd) : cmd_(cmd) {
    cmd->add_option("--config", config_path_,
                    "JSON object with defaults for any long option; "
                    "explicit flags take precedence")
        ->check(CLI::ExistingFile);
  }

  template <typename T>
  CLI::Option* opt(const std::string& name, T& target,
                   const std::string& desc) {
    CLI::Option* o = cmd_->add_option(name, target, desc);
    register_fill(name, target);
    return o;
  }

  CLI::Option* flag(const std::string& name, bool& target,
                    const std::string& desc) {
    CLI::Option* o = cmd_->add_flag(name, target, desc);
    register_fill(name, target);
    return o;
  }

  // Loads the config file (if any) and fills unset options.
  void apply() const {
    if (config_path_.empty()) return;
    std::ifstream in(config_path_);
    if (!in)
      throw usage_error("cannot open config file '" + config_path_ + "'");
    ordered_json cfg;
    try {
      cfg = ordered_json::parse(in);
    } catch (const std::exception& e) {
      throw usage_error("config file '" + config_path_ +
                        "': " + std::string(e.what()));
    }
    if (!cfg.is_object())
      throw usage_error("config file must hold a JSON object");
    for (const auto& [key, value] : cfg.items()) {
      (void)value;
      if (!keys_.count(key))
        throw usage_error("config file: unknown key '" + key + "'");
    }
    for (const auto& fill : fills_) fill(cfg);
  }

 private:
  template <typename T>
  void register_fill(const std::string& name, T& target) {
    const std::string key = name.substr(2);  // strip the leading "--"
    keys_.insert(key);
    fills_.push_back([this, name, key, &target](const ordered_json& cfg) {
      if (!cfg.contains(key) || cmd_->count(name) > 0) return;
      try {
        target = cfg.at(key).get<T>();
      } catch (const std::exception& e) {
        throw usage_error("config key '" + key + "': " +
                          std::string(e.what()));
      }
    });
  }

  CLI::App* cmd_;
  std::string config_path_;
  std::set<std::string> keys_;
  std::vector<std::function<void(const ordered_json&)>> fills_;
};

void add_model_flags(Binder& b, int& d, int& N, std::string& lambda) {
  b.opt("--d", d, "Input dimension");
  b.opt("--N", N, "Prompt length");
  b.opt("--lambda", lambda,
        "Input covariance: identity, diag:a,b,..., or a JSON file");
}

void add_integrator_flags(Binder& b, IntegratorParams& ip) {
  b.opt("--method", ip.method, "Integrator: rk45 (adaptive) or rk4-fixed");
  b.opt("--dt", ip.dt, "Step size (rk4-fixed) or initial step (rk45)");
  b.opt("--rtol", ip.rtol, "Relative error tolerance (rk45)");
  b.opt("--atol", ip.atol, "Absolute error tolerance (rk45)");
  b.opt("--t-end", ip.t_end, "Integration horizon");
  b.opt("--invariant-budget", ip.invariant_budget,
        "Stop when the conserved quantity drifts by more than this relative "
        "amount (<=0: unlimited)");
  b.opt("--grad-tol", ip.grad_tol,
        "Declare convergence when the flow speed stays below this "
        "(<=0: always run to the horizon)");
  b.opt("--max-steps", ip.max_steps, "Step budget");
  b.opt("--snapshot-stride", ip.snapshot_stride,
        "Record every k-th accepted step");
}

void add_output_flags(Binder& b, OutputParams& io) {
  b.opt("--out", io.out, "Output path ('-' for stdout)");
  b.opt("--format", io.format, "Report format: json or csv");
}

int run(int argc, char** argv) {
  CLI::App app{
      "Gradient-flow toolkit for a linear attention model trained on "
      "in-context regression prompts: exact expected gradients with "
      "validation oracles, flow integration, equilibrium reports, and "
      "basin statistics."};
  app.set_version_flag("--version", std::string(iclflow::kVersion));
  app.require_subcommand(1);
  int rc = kOk;

  {
    auto p = std::make_shared<ValidateParams>();
    CLI::App* cmd = app.add_subcommand(
        "validate-gradients",
        "Check the closed-form expected gradients against an exact "
        "Gaussian-pairing oracle and Monte Carlo estimates");
    auto b = std::make_shared<Binder>(cmd);
    add_model_flags(*b, p->d, p->N, p->lambda);
    b->opt("--states", p->states, "Number of random states to check");
    b->opt("--seed", p->seed, "Base seed for the state generator");
    b->opt("--scale", p->scale, "Std-dev of random state entries");
    b->opt("--mc-batch", p->mc_batch,
           "Monte Carlo batch size (0: skip the MC check)");
    b->opt("--tol", p->tol, "Relative tolerance against the pairing oracle");
    b->opt("--mc-sigma", p->mc_sigma,
           "Allowed standard-error multiple for the MC check");
    b->opt("--inject-fault", p->inject_fault, "")->group("");
    b->opt("--fault-scale", p->fault_scale, "")->group("");
    add_output_flags(*b, p->io);
    cmd->callback([&rc, p, b] {
      b->apply();
      rc = run_validate(*p);
    });
  }

  {
    auto p = std::make_shared<SimulateParams>();
    CLI::App* cmd = app.add_subcommand(
        "simulate", "Integrate one trajectory of the chosen flow");
    auto b = std::make_shared<Binder>(cmd);
    b->opt("--system", p->system, "Flow: full, simplified, or d1");
    add_model_flags(*b, p->d, p->N, p->lambda);
    b->opt("--init", p->init,
           "Initial state: random, random:<seed>, zero, or a JSON file");
    b->opt("--init-scale", p->init_scale, "Std-dev of random initial entries");
    b->opt("--seed", p->seed, "Seed for --init random");
    b->flag("--save-states", p->save_states,
            "Include full state vectors in the output");
    add_integrator_flags(*b, p->integ);
    add_output_flags(*b, p->io);
    cmd->callback([&rc, p, b] {
      b->apply();
      rc = run_simulate(*p);
    });
  }

  {
    auto p = std::make_shared<CriticalParams>();
    CLI::App* cmd = app.add_subcommand(
        "critical-points",
        "Report the equilibria on a conserved-quantity leaf with their "
        "spectra and classifications");
    auto b = std::make_shared<Binder>(cmd);
    b->opt("--system", p->system, "Flow: simplified or d1");
    add_model_flags(*b, p->d, p->N, p->lambda);
    b->opt("--kappa", p->kappa, "Leaf level of the conserved quantity");
    add_output_flags(*b, p->io);
    cmd->callback([&rc, p, b] {
      b->apply();
      rc = run_critical(*p);
    });
  }

  {
    auto p = std::make_shared<SweepParams>();
    CLI::App* cmd = app.add_subcommand(
        "sweep-kappa",
        "Tabulate equilibrium locations and rates across leaf levels");
    auto b = std::make_shared<Binder>(cmd);
    b->opt("--system", p->system, "Flow: simplified or d1");
    add_model_flags(*b, p->d, p->N, p->lambda);
    b->opt("--kappa-min", p->kappa_min, "Lowest leaf level");
    b->opt("--kappa-max", p->kappa_max, "Highest leaf level");
    b->opt("--steps", p->steps, "Number of grid points");
    add_output_flags(*b, p->io);
    cmd->callback([&rc, p, b] {
      b->apply();
      rc = run_sweep(*p);
    });
  }

  {
    auto p = std::make_shared<BasinParams>();
    CLI::App* cmd = app.add_subcommand(
        "basin-probe",
        "Integrate many random starts and tally which equilibrium each "
        "reaches");
    auto b = std::make_shared<Binder>(cmd);
    b->opt("--system", p->system, "Flow: simplified or d1");
    add_model_flags(*b, p->d, p->N, p->lambda);
    b->opt("--samples", p->samples, "Number of random starts");
    b->opt("--init-scale", p->init_scale, "Std-dev of start entries");
    b->opt("--seed", p->seed, "Base seed for the start generator");
    b->opt("--hit-tol", p->hit_tol, "Capture radius around each equilibrium");
    add_integrator_flags(*b, p->integ);
    add_output_flags(*b, p->io);
    cmd->callback([&rc, p, b] {
      b->apply();
      rc = run_basin(*p);
    });
  }

  {
    CLI::App* d1 = app.add_subcommand(
        "d1", "Tools specific to the scalar (one-dimensional) flow");
    d1->require_subcommand(1);

    {
      auto p = std::make_shared<CriticalParams>();
      p->system = "d1";
      CLI::App* cmd = d1->add_subcommand(
          "critical-points",
          "Report all equilibria of the scalar flow on one leaf");
      auto b = std::make_shared<Binder>(cmd);
      b->opt("--N", p->N, "Prompt length");
      b->opt("--kappa", p->kappa, "Leaf level of the conserved quantity");
      add_output_flags(*b, p->io);
      cmd->callback([&rc, p, b] {
        b->apply();
        rc = run_critical(*p);
      });
    }

    {
      auto p = std::make_shared<PortraitParams>();
      CLI::App* cmd = d1->add_subcommand(
          "portrait",
          "Classify the endpoint of every start on a grid in an invariant "
          "plane of the scalar flow");
      auto b = std::make_shared<Binder>(cmd);
      b->opt("--N", p->N, "Prompt length");
      b->opt("--plane", p->plane, "Invariant plane: Uv or zZ");
      b->opt("--range", p->range, "Half-width of the grid");
      b->opt("--grid", p->grid, "Grid points per axis");
      b->opt("--hit-tol", p->hit_tol,
             "Capture radius around each equilibrium");
      add_integrator_flags(*b, p->integ);
      add_output_flags(*b, p->io);
      cmd->callback([&rc, p, b] {
        b->apply();
        rc = run_portrait(*p);
      });
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  return rc;
}

}  // namespace
}  // namespace icltool

int main(int argc, char** argv) {
  try {
    return icltool::run(argc, argv);
  } catch (const icltool::usage_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return icltool::kUsage;
  } catch (const iclflow::integration_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return icltool::kBlowUp;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return icltool::kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return icltool::kValidationFailure;
  }
}

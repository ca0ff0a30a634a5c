#include <cmath>

#include "commands.hpp"
#include "iclflow/d1.hpp"
#include "iclflow/simplified.hpp"

namespace icltool {

namespace {

std::vector<double> kappa_grid(const SweepParams& p) {
  if (p.steps < 1) throw usage_error("--steps must be at least 1");
  if (p.kappa_max < p.kappa_min)
    throw usage_error("--kappa-max must not be below --kappa-min");
  std::vector<double> grid;
  if (p.steps == 1) {
    grid.push_back(p.kappa_min);
    return grid;
  }
  const double h = (p.kappa_max - p.kappa_min) / (p.steps - 1);
  for (int i = 0; i < p.steps; ++i) grid.push_back(p.kappa_min + i * h);
  return grid;
}

int sweep_simplified(const SweepParams& p) {
  int d = p.d;
  iclflow::ModelSpec spec;
  spec.N = p.N;
  spec.lambda = parse_lambda(p.lambda, d);
  spec.d = d;
  iclflow::GammaSpec gamma;
  try {
    gamma = iclflow::make_gamma(spec);
  } catch (const std::invalid_argument& e) {
    throw usage_error(e.what());
  }

  ordered_json rows = ordered_json::array();
  for (double kappa : kappa_grid(p)) {
    const double a = iclflow::leaf_level_a(gamma, kappa);
    const iclflow::Hyperplane plane =
        iclflow::critical_hyperplane(gamma, kappa);
    const auto reports = iclflow::critical_points_A(spec, gamma, kappa);
    const auto& rep = reports.front();  // v = +a branch
    ordered_json row;
    row["kappa"] = kappa;
    row["a"] = a;
    ordered_json diag = ordered_json::array();
    for (int i = 0; i < d; ++i) diag.push_back(rep.state.U(i, i));
    row["V_diag"] = std::move(diag);
    row["eig_min"] = rep.eigenvalues[0];
    row["eig_max"] = rep.eigenvalues[rep.eigenvalues.size() - 1];
    row["zero_mult"] = rep.zero_multiplicity;
    row["classification"] = iclflow::to_string(rep.classification);
    row["beta_c"] = plane.beta_c;
    rows.push_back(std::move(row));
  }

  if (p.io.csv()) {
    std::string csv = "kappa,a";
    for (int i = 1; i <= d; ++i)
      csv += ",V" + std::to_string(i) + std::to_string(i);
    csv += ",eig_min,eig_max,zero_mult\n";
    for (const auto& row : rows) {
      csv += format_double(row.at("kappa").get<double>()) + ',' +
             format_double(row.at("a").get<double>());
      for (const auto& vii : row.at("V_diag"))
        csv += ',' + format_double(vii.get<double>());
      csv += ',' + format_double(row.at("eig_min").get<double>()) + ',' +
             format_double(row.at("eig_max").get<double>()) + ',' +
             std::to_string(row.at("zero_mult").get<int>()) + '\n';
    }
    write_output(p.io.out, csv);
    return kOk;
  }

  ordered_json j = make_envelope("sweep-kappa");
  j["config"]["system"] = "simplified";
  j["config"]["d"] = d;
  j["config"]["N"] = p.N;
  j["config"]["lambda"] = to_json(spec.lambda);
  j["config"]["kappa_min"] = p.kappa_min;
  j["config"]["kappa_max"] = p.kappa_max;
  j["config"]["steps"] = p.steps;
  j["rows"] = std::move(rows);
  write_output(p.io.out, j.dump(2));
  return kOk;
}

int sweep_d1(const SweepParams& p) {
  const iclflow::D1Coefficients c = iclflow::d1_coefficients(p.N);
  ordered_json rows = ordered_json::array();
  for (double kappa : kappa_grid(p)) {
    const auto points = iclflow::d1_critical_points(kappa, c);
    ordered_json row;
    row["kappa"] = kappa;
    for (const auto& pt : points) {
      if (pt.label == "A+") {
        row["A_U"] = pt.state.U;
        row["A_v"] = pt.state.v;
        row["A_slowest_rate"] = pt.eigenvalues[2];
        row["A_loss"] = pt.loss;
      } else if (pt.label == "B++++") {
        row["B_U"] = pt.state.U;
        row["B_z"] = pt.state.z;
        row["B_Z"] = pt.state.Z;
        row["B_v"] = pt.state.v;
        row["B_unstable_rate"] = pt.eigenvalues[3];
        row["B_loss"] = pt.loss;
      }
    }
    rows.push_back(std::move(row));
  }

  if (p.io.csv()) {
    std::string csv =
        "kappa,A_U,A_v,A_slowest_rate,A_loss,B_U,B_z,B_Z,B_v,B_unstable_rate,"
        "B_loss\n";
    for (const auto& row : rows) {
      const char* keys[] = {"kappa", "A_U",  "A_v", "A_slowest_rate",
                            "A_loss", "B_U", "B_z", "B_Z",
                            "B_v",    "B_unstable_rate", "B_loss"};
      bool first = true;
      for (const char* key : keys) {
        if (!first) csv += ',';
        first = false;
        csv += format_double(row.at(key).get<double>());
      }
      csv += '\n';
    }
    write_output(p.io.out, csv);
    return kOk;
  }

  ordered_json j = make_envelope("sweep-kappa");
  j["config"]["system"] = "d1";
  j["config"]["N"] = p.N;
  j["config"]["kappa_min"] = p.kappa_min;
  j["config"]["kappa_max"] = p.kappa_max;
  j["config"]["steps"] = p.steps;
  j["rows"] = std::move(rows);
  write_output(p.io.out, j.dump(2));
  return kOk;
}

}  // namespace

int run_sweep(const SweepParams& p) {
  if (p.system == "simplified") return sweep_simplified(p);
  if (p.system == "d1") return sweep_d1(p);
  throw usage_error("unknown --system '" + p.system +
                    "' (expected simplified or d1)");
}

}  // namespace icltool

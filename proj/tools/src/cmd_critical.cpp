#include <cmath>

#include "commands.hpp"
#include "iclflow/d1.hpp"
#include "iclflow/simplified.hpp"

namespace icltool {

namespace {

std::string join_eigs(const iclflow::Vec& eigs) {
  std::string s;
  for (int i = 0; i < eigs.size(); ++i) {
    if (i) s += ';';
    s += format_double(eigs[i]);
  }
  return s;
}

int emit_simplified(const CriticalParams& p) {
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

  const auto constants = iclflow::spectrum_constants(gamma);
  const double a = iclflow::leaf_level_a(gamma, p.kappa);
  const iclflow::Hyperplane plane = iclflow::critical_hyperplane(gamma, p.kappa);

  std::vector<std::pair<std::string, iclflow::CriticalPointReport>> points;
  for (auto& rep : iclflow::critical_points_A(spec, gamma, p.kappa)) {
    const std::string label = rep.state.v > 0 ? "A+" : "A-";
    points.emplace_back(label, std::move(rep));
  }
  if (std::abs(p.kappa) <= 1e-12) {
    iclflow::SimplifiedState origin{iclflow::Mat::Zero(d, d), 0.0};
    points.emplace_back(
        "O", iclflow::analyze_critical_point(origin, spec, gamma));
  }
  const bool zero_speed_exists = (p.kappa < 0.0 && d >= 2);
  if (zero_speed_exists) {
    // One representative of the continuum: all weight on a symmetric
    // off-diagonal pair, which satisfies both defining constraints.
    iclflow::DiagState ds;
    ds.V = iclflow::Mat::Zero(d, d);
    ds.V(0, 1) = ds.V(1, 0) = std::sqrt(-p.kappa / 2.0);
    ds.v = 0.0;
    points.emplace_back("B-sample",
                        iclflow::analyze_critical_point(
                            iclflow::from_diag(ds, gamma), spec, gamma));
  }

  if (p.io.csv()) {
    std::string csv =
        "label,kind,classification,zero_multiplicity,kappa,residual_inf,"
        "eigenvalues\n";
    for (const auto& [label, rep] : points) {
      csv += label;
      csv += ',';
      csv += to_string(rep.kind);
      csv += ',';
      csv += to_string(rep.classification);
      csv += ',' + std::to_string(rep.zero_multiplicity) + ',' +
             format_double(rep.kappa) + ',' + format_double(rep.residual_inf) +
             ',' + join_eigs(rep.eigenvalues) + '\n';
    }
    write_output(p.io.out, csv);
    return kOk;
  }

  ordered_json j = make_envelope("critical-points");
  {
    ordered_json c;
    c["system"] = "simplified";
    c["d"] = d;
    c["N"] = p.N;
    c["lambda"] = to_json(spec.lambda);
    c["kappa"] = p.kappa;
    j["config"] = std::move(c);
  }
  {
    ordered_json c;
    c["mu"] = constants.mu;
    c["nu"] = constants.nu;
    c["a"] = a;
    c["alpha_c"] = plane.alpha_c;
    c["beta_c"] = plane.beta_c;
    j["constants"] = std::move(c);
  }
  ordered_json pts = ordered_json::array();
  for (const auto& [label, rep] : points) {
    ordered_json pt;
    pt["label"] = label;
    pt["kind"] = to_string(rep.kind);
    pt["classification"] = to_string(rep.classification);
    pt["zero_multiplicity"] = rep.zero_multiplicity;
    pt["kappa"] = rep.kappa;
    pt["residual_inf"] = rep.residual_inf;
    pt["locus_residual"] =
        iclflow::hyperplane_membership(rep.state, gamma, plane);
    pt["eigenvalues"] = to_json(rep.eigenvalues);
    pt["state"]["U"] = to_json(rep.state.U);
    pt["state"]["v"] = rep.state.v;
    pts.push_back(std::move(pt));
  }
  j["points"] = std::move(pts);
  j["zero_speed_family"]["exists"] =
      zero_speed_exists || std::abs(p.kappa) <= 1e-12;
  j["zero_speed_family"]["note"] =
      "nonempty only for kappa < 0 (d >= 2) or kappa = 0 (the origin)";
  write_output(p.io.out, j.dump(2));
  return kOk;
}

int emit_d1(const CriticalParams& p) {
  const iclflow::D1Coefficients c = iclflow::d1_coefficients(p.N);
  const auto points = iclflow::d1_critical_points(p.kappa, c);

  if (p.io.csv()) {
    std::string csv =
        "label,kind,classification,zero_multiplicity,kappa,loss,residual_inf,"
        "eigenvalues\n";
    for (const auto& pt : points) {
      csv += pt.label;
      csv += ',';
      csv += to_string(pt.kind);
      csv += ',';
      csv += to_string(pt.classification);
      csv += ',' + std::to_string(pt.zero_multiplicity) + ',' +
             format_double(pt.kappa) + ',' + format_double(pt.loss) + ',' +
             format_double(pt.residual_inf) + ',' + join_eigs(pt.eigenvalues) +
             '\n';
    }
    write_output(p.io.out, csv);
    return kOk;
  }

  ordered_json j = make_envelope("critical-points");
  {
    ordered_json cc;
    cc["system"] = "d1";
    cc["N"] = p.N;
    cc["kappa"] = p.kappa;
    j["config"] = std::move(cc);
  }
  {
    ordered_json cc;
    cc["a"] = c.a_coef;
    cc["b"] = c.b_coef;
    cc["c"] = c.c_coef;
    cc["d"] = c.d_coef;
    cc["rho"] = c.rho;
    cc["mu2"] = c.mu2;
    j["coefficients"] = std::move(cc);
  }
  ordered_json pts = ordered_json::array();
  for (const auto& pt : points) {
    ordered_json o;
    o["label"] = pt.label;
    o["kind"] = to_string(pt.kind);
    o["classification"] = to_string(pt.classification);
    o["zero_multiplicity"] = pt.zero_multiplicity;
    o["kappa"] = pt.kappa;
    o["loss"] = pt.loss;
    o["residual_inf"] = pt.residual_inf;
    o["eigenvalues"] = to_json(pt.eigenvalues);
    o["state"]["U"] = pt.state.U;
    o["state"]["z"] = pt.state.z;
    o["state"]["Z"] = pt.state.Z;
    o["state"]["v"] = pt.state.v;
    o["pairings"]["vU"] = pt.state.v * pt.state.U;
    o["pairings"]["zZ"] = pt.state.z * pt.state.Z;
    if (pt.kind != iclflow::CriticalKind::O)
      o["neutral_alignment_angle"] =
          iclflow::d1_neutral_alignment_angle(pt.state, c);
    pts.push_back(std::move(o));
  }
  j["points"] = std::move(pts);
  write_output(p.io.out, j.dump(2));
  return kOk;
}

}  // namespace

int run_critical(const CriticalParams& p) {
  if (p.system == "simplified") return emit_simplified(p);
  if (p.system == "d1") return emit_d1(p);
  throw usage_error("unknown --system '" + p.system +
                    "' (expected simplified or d1)");
}

}  // namespace icltool

#include <algorithm>
#include <cmath>

#include "commands.hpp"
#include "iclflow/d1.hpp"
#include "iclflow/systems.hpp"

namespace icltool {

namespace {

iclflow::D1State plane_state(const std::string& plane, double x, double y) {
  iclflow::D1State s{};
  if (plane == "Uv") {
    s.U = x;
    s.v = y;
  } else if (plane == "zZ") {
    s.z = x;
    s.Z = y;
  } else {
    throw usage_error("unknown --plane '" + plane + "' (expected Uv or zZ)");
  }
  return s;
}

}  // namespace

int run_portrait(const PortraitParams& p) {
  if (p.grid < 2) throw usage_error("--grid must be at least 2");
  if (!(p.range > 0)) throw usage_error("--range must be positive");
  plane_state(p.plane, 0, 0);  // validate the plane name up front

  const iclflow::D1Coefficients c = iclflow::d1_coefficients(p.N);
  const iclflow::FlowSystem sys = iclflow::make_d1_system(p.N);
  const iclflow::IntegratorConfig cfg = p.integ.to_config();
  const double h = 2 * p.range / (p.grid - 1);

  ordered_json rows = ordered_json::array();
  for (int iy = 0; iy < p.grid; ++iy) {
    for (int ix = 0; ix < p.grid; ++ix) {
      const double x = -p.range + ix * h;
      const double y = -p.range + iy * h;
      const iclflow::D1State start = plane_state(p.plane, x, y);
      const double kappa0 = iclflow::kappa_d1(start);

      ordered_json row;
      row["x"] = x;
      row["y"] = y;
      row["kappa"] = kappa0;
      try {
        const iclflow::Trajectory traj =
            iclflow::integrate(sys, iclflow::pack_d1(start), cfg);
        const iclflow::Vec& xf = traj.states.back();

        std::string label = "unclassified";
        for (const auto& pt : iclflow::d1_critical_points(kappa0, c)) {
          const iclflow::Vec target = iclflow::pack_d1(pt.state);
          const double dist = (xf - target).cwiseAbs().maxCoeff();
          if (dist <= p.hit_tol * (1.0 + target.cwiseAbs().maxCoeff())) {
            label = pt.label;
            break;
          }
        }
        row["label"] = label;
        row["terminal"] = iclflow::to_string(traj.terminal);
        row["t_final"] = traj.final_time;
        row["loss_final"] = traj.loss.back();
      } catch (const iclflow::integration_error&) {
        row["label"] = "blow_up";
        row["terminal"] = "non_finite";
        row["t_final"] = nullptr;
        row["loss_final"] = nullptr;
      }
      rows.push_back(std::move(row));
    }
  }

  if (p.io.csv()) {
    std::string csv = "x,y,kappa,label,terminal,t_final,loss_final\n";
    for (const auto& row : rows) {
      csv += format_double(row.at("x").get<double>()) + ',' +
             format_double(row.at("y").get<double>()) + ',' +
             format_double(row.at("kappa").get<double>()) + ',' +
             row.at("label").get<std::string>() + ',' +
             row.at("terminal").get<std::string>() + ',';
      if (row.at("t_final").is_null()) {
        csv += "nan,nan\n";
      } else {
        csv += format_double(row.at("t_final").get<double>()) + ',' +
               format_double(row.at("loss_final").get<double>()) + '\n';
      }
    }
    write_output(p.io.out, csv);
    return kOk;
  }

  ordered_json j = make_envelope("d1 portrait");
  j["config"]["N"] = p.N;
  j["config"]["plane"] = p.plane;
  j["config"]["range"] = p.range;
  j["config"]["grid"] = p.grid;
  j["config"]["hit_tol"] = p.hit_tol;
  j["config"]["integrator"] = p.integ.to_json();
  j["rows"] = std::move(rows);
  write_output(p.io.out, j.dump(2));
  return kOk;
}

}  // namespace icltool

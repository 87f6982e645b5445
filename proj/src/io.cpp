#include "framescope/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "framescope/error.hpp"

namespace framescope {

namespace {

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

std::string ot_name(const OtMethod& m) { return m.kind == OtMethod::Kind::Exact ? "exact" : "entropic"; }

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

json measure_to_json(const DiscreteMeasure& mu) {
  json points = json::array();
  for (int i = 0; i < mu.size(); ++i) {
    json row = json::array();
    for (int k = 0; k < mu.dim(); ++k) row.push_back(mu.points()(i, k));
    points.push_back(std::move(row));
  }
  json weights = json::array();
  for (int i = 0; i < mu.size(); ++i) weights.push_back(mu.weights()(i));
  return json{{"dim", mu.dim()}, {"points", std::move(points)}, {"weights", std::move(weights)}};
}

DiscreteMeasure measure_from_json(const json& j) {
  try {
    const int dim = j.at("dim").get<int>();
    const auto points = j.at("points").get<std::vector<std::vector<double>>>();
    const auto weights = j.at("weights").get<std::vector<double>>();
    for (const auto& p : points) {
      if (static_cast<int>(p.size()) != dim) {
        throw Error(ErrorCode::DimensionMismatch, "point length differs from dim");
      }
    }
    return new_measure(points, weights);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("measure JSON: ") + e.what());
  }
}

DiscreteMeasure read_measure(const std::string& path) { return measure_from_json(parse_file(path)); }

void write_measure(const std::string& path, const DiscreteMeasure& mu) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path);
  out << measure_to_json(mu).dump(2) << '\n';
}

json report_to_json(const PotentialReport& report) {
  json j{{"value", report.value}, {"lower_bound", report.lower_bound}, {"gap", report.gap}};
  j["spectral_value"] = report.spectral_value ? json(*report.spectral_value) : json(nullptr);
  j["operator_norm"] = report.operator_norm ? json(*report.operator_norm) : json(nullptr);
  return j;
}

json plan_to_json(const TransportPlan& plan) {
  json coupling = json::array();
  for (int i = 0; i < plan.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < plan.cols(); ++j) row.push_back(plan.coupling(i, j));
    coupling.push_back(std::move(row));
  }
  json out{{"rows", plan.rows()}, {"cols", plan.cols()}, {"p", plan.p},
           {"cost", plan.cost}, {"method", ot_name(plan.method)}, {"coupling", std::move(coupling)}};
  if (plan.method.kind == OtMethod::Kind::Entropic) out["reg"] = plan.method.reg;
  return out;
}

void write_plan_csv(std::ostream& out, const TransportPlan& plan) {
  out << "i,j,mass\n";
  for (int i = 0; i < plan.rows(); ++i) {
    for (int j = 0; j < plan.cols(); ++j) {
      if (plan.coupling(i, j) > 0.0) out << i << ',' << j << ',' << format_double(plan.coupling(i, j)) << '\n';
    }
  }
}

json config_to_json(const FlowConfig& c) {
  return json{
      {"scheme", c.scheme == Scheme::Jko ? "jko" : "explicit"},
      {"potential", c.potential == PotentialKind::PFrame ? "pfp" : "tp"},
      {"p", c.p},
      {"sphere_constrained", c.sphere_constrained},
      {"epsilon", c.epsilon},
      {"dt", c.dt},
      {"tau", c.tau},
      {"max_steps", c.max_steps},
      {"stop_tp", c.stop_tp},
      {"stop_stall", c.stop_stall},
      {"stall_window", c.stall_window},
      {"record_every", c.record_every},
      {"seed", c.seed},
      {"tight_tol", c.tight_tol},
      {"integrator", c.integrator == Integrator::Rk4 ? "rk4" : "euler"},
      {"inner",
       {{"inner_iters", c.inner.inner_iters},
        {"inner_lr", c.inner.inner_lr},
        {"inner_tol", c.inner.inner_tol},
        {"ot_method", ot_name(c.inner.ot)},
        {"reg", c.inner.ot.reg}}},
  };
}

FlowConfig config_from_json(const json& j) {
  static const std::vector<std::string> known = {
      "scheme", "potential", "p", "sphere_constrained", "epsilon", "dt", "tau", "max_steps", "stop_tp",
      "stop_stall", "stall_window", "record_every", "seed", "tight_tol", "integrator", "inner"};
  FlowConfig c;
  try {
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "flow config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        throw Error(ErrorCode::ParseError, "unknown flow config field '" + key + "'");
      }
    }
    if (j.contains("scheme")) {
      const auto s = j.at("scheme").get<std::string>();
      if (s == "explicit") c.scheme = Scheme::Explicit;
      else if (s == "jko") c.scheme = Scheme::Jko;
      else throw Error(ErrorCode::ParseError, "scheme must be explicit or jko");
    }
    if (j.contains("potential")) {
      const auto s = j.at("potential").get<std::string>();
      if (s == "tp") c.potential = PotentialKind::Tightness;
      else if (s == "pfp") c.potential = PotentialKind::PFrame;
      else throw Error(ErrorCode::ParseError, "potential must be tp or pfp");
    }
    if (j.contains("integrator")) {
      const auto s = j.at("integrator").get<std::string>();
      if (s == "euler") c.integrator = Integrator::Euler;
      else if (s == "rk4") c.integrator = Integrator::Rk4;
      else throw Error(ErrorCode::ParseError, "integrator must be euler or rk4");
    }
    read_field(j, "p", c.p);
    read_field(j, "sphere_constrained", c.sphere_constrained);
    read_field(j, "epsilon", c.epsilon);
    read_field(j, "dt", c.dt);
    read_field(j, "tau", c.tau);
    read_field(j, "max_steps", c.max_steps);
    read_field(j, "stop_tp", c.stop_tp);
    read_field(j, "stop_stall", c.stop_stall);
    read_field(j, "stall_window", c.stall_window);
    read_field(j, "record_every", c.record_every);
    read_field(j, "seed", c.seed);
    read_field(j, "tight_tol", c.tight_tol);
    if (j.contains("inner")) {
      const json& in = j.at("inner");
      read_field(in, "inner_iters", c.inner.inner_iters);
      read_field(in, "inner_lr", c.inner.inner_lr);
      read_field(in, "inner_tol", c.inner.inner_tol);
      double reg = c.inner.ot.reg;
      read_field(in, "reg", reg);
      std::string method = ot_name(c.inner.ot);
      read_field(in, "ot_method", method);
      if (method == "exact") c.inner.ot = OtMethod::exact();
      else if (method == "entropic") c.inner.ot = OtMethod::entropic(reg);
      else throw Error(ErrorCode::ParseError, "ot_method must be exact or entropic");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("flow config: ") + e.what());
  }
  return c;
}

FlowConfig read_config(const std::string& path) { return config_from_json(parse_file(path)); }

void write_trajectory_csv(std::ostream& out, const FlowTrajectory& traj) {
  out << kTrajectoryHeader << '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out << traj.steps[k] << ',' << format_double(traj.times[k]) << ',' << format_double(traj.tp_values[k]) << ','
        << format_double(traj.m2_values[k]) << ',' << format_double(traj.spectra[k].first) << ','
        << format_double(traj.spectra[k].second) << ',' << format_double(traj.energy_integrand[k]) << ','
        << format_double(traj.w2_steps[k]) << '\n';
  }
}

std::vector<TrajectoryRow> read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTrajectoryHeader) {
    throw Error(ErrorCode::ParseError, "trajectory CSV header mismatch");
  }
  std::vector<TrajectoryRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8) throw Error(ErrorCode::ParseError, "trajectory CSV row needs 8 columns: " + line);
    try {
      TrajectoryRow r;
      r.step = std::stoi(cells[0]);
      r.t = std::stod(cells[1]);
      r.tp = std::stod(cells[2]);
      r.m2 = std::stod(cells[3]);
      r.lambda_min = std::stod(cells[4]);
      r.lambda_max = std::stod(cells[5]);
      r.energy_integrand = std::stod(cells[6]);
      r.w2_step = std::stod(cells[7]);
      rows.push_back(r);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "bad number in trajectory CSV row: " + line);
    }
  }
  return rows;
}

}  // namespace framescope

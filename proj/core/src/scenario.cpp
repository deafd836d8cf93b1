// Copyright 2026 The oqdyn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "oqdyn/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace oqdyn {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ValidationError("scenario: " + path + ": " + message);
}

void check_keys(const ordered_json& obj, const std::set<std::string>& allowed,
                const std::string& path) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      fail(path + "." + item.key(), "unknown key");
    }
  }
}

double get_number(const ordered_json& obj, const std::string& key, const std::string& path) {
  if (!obj.at(key).is_number()) fail(path + "." + key, "expected a number");
  return obj.at(key).get<double>();
}

int get_int(const ordered_json& obj, const std::string& key, const std::string& path) {
  if (!obj.at(key).is_number_integer()) fail(path + "." + key, "expected an integer");
  return obj.at(key).get<int>();
}

std::string get_string(const ordered_json& obj, const std::string& key,
                       const std::string& path) {
  if (!obj.at(key).is_string()) fail(path + "." + key, "expected a string");
  return obj.at(key).get<std::string>();
}

RealVector get_real_vector(const ordered_json& arr, const std::string& path) {
  if (!arr.is_array()) fail(path, "expected an array of numbers");
  RealVector v(arr.size());
  Index i = 0;
  for (const auto& x : arr) {
    if (!x.is_number()) fail(path + "[" + std::to_string(i) + "]", "expected a number");
    v(i++) = x.get<double>();
  }
  return v;
}

std::string resolve_file(const std::string& name, const std::string& base_dir,
                         const std::string& path) {
  fs::path p(name);
  if (p.is_relative()) p = fs::path(base_dir) / p;
  if (!fs::exists(p)) fail(path, "referenced file does not exist: " + p.string());
  return p.string();
}

const std::set<std::string> kNamedStates = {"zero",   "one",    "plus", "minus",
                                            "plus_i", "minus_i", "mixed"};

ModelSpecConfig parse_model(const ordered_json& j, const std::string& base_dir) {
  if (!j.is_object()) fail("$.model", "expected an object");
  ModelSpecConfig model;
  const std::string type = get_string(j, "type", "$.model");
  if (type == "zurek" || type == "extended") {
    model.kind = type == "zurek" ? ModelKind::zurek : ModelKind::extended;
    check_keys(j, {"type", "n_env", "Z", "X", "mu"}, "$.model");
    if (!j.contains("n_env")) fail("$.model.n_env", "required for spin-bath models");
    model.spins.n_env = get_int(j, "n_env", "$.model");
    if (model.spins.n_env < 1 || model.spins.n_env > 30) {
      fail("$.model.n_env", "must be in [1, 30]");
    }
    if (!j.contains("Z")) fail("$.model.Z", "required for spin-bath models");
    model.spins.z = get_real_vector(j.at("Z"), "$.model.Z");
    model.spins.x = j.contains("X") ? get_real_vector(j.at("X"), "$.model.X")
                                    : RealVector::Zero(model.spins.n_env);
    model.spins.mu = j.contains("mu") ? get_number(j, "mu", "$.model") : 0.0;
    if (model.spins.z.size() != model.spins.n_env ||
        model.spins.x.size() != model.spins.n_env) {
      fail("$.model", "Z and X must have length n_env");
    }
    if (model.kind == ModelKind::zurek) {
      if (model.spins.mu != 0.0) fail("$.model.mu", "the Zurek model has mu = 0");
      if (model.spins.x.cwiseAbs().maxCoeff() != 0.0) {
        fail("$.model.X", "the Zurek model has X = 0");
      }
    }
  } else if (type == "custom") {
    model.kind = ModelKind::custom;
    check_keys(j, {"type", "h_s", "h_e", "coupling"}, "$.model");
    if (!j.contains("h_s") || !j.contains("h_e")) {
      fail("$.model", "custom models require h_s and h_e matrix files");
    }
    model.h_s_file = get_string(j, "h_s", "$.model");
    model.h_e_file = get_string(j, "h_e", "$.model");
    model.h_s = parse_matrix_file(resolve_file(model.h_s_file, base_dir, "$.model.h_s"));
    model.h_e = parse_matrix_file(resolve_file(model.h_e_file, base_dir, "$.model.h_e"));
    if (j.contains("coupling")) {
      if (!j.at("coupling").is_array()) fail("$.model.coupling", "expected an array");
      Index idx = 0;
      for (const auto& term : j.at("coupling")) {
        const std::string tpath = "$.model.coupling[" + std::to_string(idx) + "]";
        if (!term.is_object()) fail(tpath, "expected an object");
        check_keys(term, {"s", "b"}, tpath);
        const std::string s_file = get_string(term, "s", tpath);
        const std::string b_file = get_string(term, "b", tpath);
        CouplingTerm ct;
        ct.system_op = parse_matrix_file(resolve_file(s_file, base_dir, tpath + ".s"));
        ct.env_op = parse_matrix_file(resolve_file(b_file, base_dir, tpath + ".b"));
        model.coupling.push_back(std::move(ct));
        model.coupling_files.emplace_back(s_file, b_file);
        ++idx;
      }
    }
    if (model.h_s.rows() != model.h_s.cols() || model.h_e.rows() != model.h_e.cols()) {
      fail("$.model", "h_s and h_e must be square");
    }
  } else {
    fail("$.model.type", "unknown model type '" + type + "'");
  }
  return model;
}

InitialStateConfig parse_initial_state(const ordered_json& j, const std::string& base_dir) {
  InitialStateConfig init;
  if (!j.is_object()) fail("$.initial_state", "expected an object");
  if (j.contains("file")) {
    check_keys(j, {"file"}, "$.initial_state");
    init.from_file = true;
    init.file = get_string(j, "file", "$.initial_state");
    init.rho0 = parse_matrix_file(resolve_file(init.file, base_dir, "$.initial_state.file"));
    return init;
  }
  check_keys(j, {"system", "env"}, "$.initial_state");
  if (!j.contains("system") || !j.contains("env")) {
    fail("$.initial_state", "expected 'system' and 'env' (or 'file')");
  }
  init.system_state = get_string(j, "system", "$.initial_state");
  if (!kNamedStates.count(init.system_state)) {
    fail("$.initial_state.system", "unknown state name '" + init.system_state + "'");
  }
  const auto& env = j.at("env");
  if (env.is_string()) {
    if (env.get<std::string>() != "thermal") {
      fail("$.initial_state.env", "expected 'thermal' or an array of state names");
    }
    init.env_thermal = true;
  } else if (env.is_array()) {
    Index idx = 0;
    for (const auto& name : env) {
      const std::string path = "$.initial_state.env[" + std::to_string(idx) + "]";
      if (!name.is_string() || !kNamedStates.count(name.get<std::string>())) {
        fail(path, "unknown state name");
      }
      init.env_states.push_back(name.get<std::string>());
      ++idx;
    }
  } else {
    fail("$.initial_state.env", "expected 'thermal' or an array of state names");
  }
  return init;
}

MethodConfig parse_method(const ordered_json& j) {
  MethodConfig method;
  if (!j.is_object()) fail("$.method", "expected an object");
  check_keys(j,
             {"name", "L", "improved_energy_order", "order_cap", "depth", "kraus_kmax",
              "milburn_lmax", "milburn_kmax", "j_interaction_picture"},
             "$.method");
  method.name = method_name_from_string(get_string(j, "name", "$.method"));
  if (j.contains("L")) method.series_order = get_int(j, "L", "$.method");
  if (j.contains("improved_energy_order")) {
    method.improved_energy_order = get_int(j, "improved_energy_order", "$.method");
  }
  if (j.contains("order_cap")) method.master_order_cap = get_int(j, "order_cap", "$.method");
  if (j.contains("depth")) method.master_depth = get_int(j, "depth", "$.method");
  if (j.contains("kraus_kmax")) method.kraus_kmax = get_int(j, "kraus_kmax", "$.method");
  if (j.contains("milburn_lmax")) method.milburn_lmax = get_int(j, "milburn_lmax", "$.method");
  if (j.contains("milburn_kmax")) method.milburn_kmax = get_int(j, "milburn_kmax", "$.method");
  if (j.contains("j_interaction_picture")) {
    if (!j.at("j_interaction_picture").is_boolean()) {
      fail("$.method.j_interaction_picture", "expected a boolean");
    }
    method.j_interaction_picture = j.at("j_interaction_picture").get<bool>();
  }
  if (method.series_order < 0 || method.series_order > 6) {
    fail("$.method.L", "must be in [0, 6]");
  }
  if (method.improved_energy_order < 1 || method.improved_energy_order > 5) {
    fail("$.method.improved_energy_order", "must be in [1, 5]");
  }
  if (method.master_order_cap < 1 || method.master_order_cap > 4) {
    fail("$.method.order_cap", "must be in [1, 4]");
  }
  if (method.master_depth < 0 || method.master_depth > 3) {
    fail("$.method.depth", "must be in [0, 3]");
  }
  if (method.milburn_lmax < 0 || method.milburn_lmax > 6) {
    fail("$.method.milburn_lmax", "must be in [0, 6]");
  }
  if (method.milburn_kmax < 0) fail("$.method.milburn_kmax", "must be nonnegative");
  return method;
}

bool is_series_like(MethodName name) {
  return name == MethodName::exact_series || name == MethodName::improved_series ||
         name == MethodName::milburn_perturbative;
}

bool is_master_method(MethodName name) {
  return name == MethodName::perturbed_master || name == MethodName::improved_master ||
         name == MethodName::redfield || name == MethodName::exact_master;
}

void cross_validate(const Scenario& s) {
  if (s.t_end < s.t_start) fail("$.time", "t_end must be >= t_start");
  if (s.n_steps < 1) fail("$.time.steps", "must be >= 1");
  if (s.dt == 0.0 || (s.dt > 0.0 && !std::isfinite(s.dt))) fail("$.dt", "must be positive");
  if (s.theta0 && *s.theta0 < 0.0) fail("$.theta0", "must be nonnegative");
  if (s.beta_B && *s.beta_B < 0.0) fail("$.beta_B", "must be nonnegative");

  const bool milburn_method = s.method.name == MethodName::milburn_closed ||
                              s.method.name == MethodName::milburn_kraus ||
                              s.method.name == MethodName::milburn_perturbative;
  if (milburn_method && !s.theta0) {
    fail("$.theta0", "required for Milburn methods");
  }
  if (s.model.kind == ModelKind::extended) {
    if (is_series_like(s.method.name) && s.sesr_case == ScenarioCase::inherent) {
      fail("$.case", "series methods on the extended model require case 'one' or 'four'");
    }
  } else if (s.sesr_case != ScenarioCase::inherent) {
    fail("$.case", "cases 'one'/'four' apply to the extended model only");
  }
  if (s.initial_state.from_file) {
    if (is_master_method(s.method.name)) {
      fail("$.initial_state.file", "master methods require a factorized initial state; "
                                   "use named system and environment states");
    }
    const Index dim = s.model.kind == ModelKind::custom
                          ? s.model.h_s.rows() * s.model.h_e.rows()
                          : s.model.spins.dim();
    if (s.initial_state.rho0.rows() != dim) {
      fail("$.initial_state.file", "state dimension " +
                                       std::to_string(s.initial_state.rho0.rows()) +
                                       " does not match the model dimension " +
                                       std::to_string(dim));
    }
  } else {
    if (s.initial_state.env_thermal) {
      if (!s.beta_B) fail("$.beta_B", "required when the environment state is 'thermal'");
    } else if (s.model.kind != ModelKind::custom) {
      if (static_cast<int>(s.initial_state.env_states.size()) != s.model.spins.n_env) {
        fail("$.initial_state.env", "expected one named state per environment qubit");
      }
    }
  }
  if (s.model.kind == ModelKind::custom && !s.initial_state.from_file &&
      !s.initial_state.env_thermal) {
    // Named product states assume qubit factors.
    const Index de = s.model.h_e.rows();
    Index expect = 1;
    for (std::size_t i = 0; i < s.initial_state.env_states.size(); ++i) expect *= 2;
    if (expect != de || s.model.h_s.rows() != 2) {
      fail("$.initial_state", "named product states require qubit-shaped factors; use "
                              "an explicit state file instead");
    }
  }
}

}  // namespace

std::string method_name_string(MethodName name) {
  switch (name) {
    case MethodName::exact_series: return "exact_series";
    case MethodName::improved_series: return "improved_series";
    case MethodName::perturbed_master: return "perturbed_master";
    case MethodName::improved_master: return "improved_master";
    case MethodName::redfield: return "redfield";
    case MethodName::exact_master: return "exact_master";
    case MethodName::milburn_closed: return "milburn_closed";
    case MethodName::milburn_kraus: return "milburn_kraus";
    case MethodName::milburn_perturbative: return "milburn_perturbative";
  }
  throw Error("unreachable method name");
}

MethodName method_name_from_string(const std::string& s) {
  if (s == "exact_series") return MethodName::exact_series;
  if (s == "improved_series") return MethodName::improved_series;
  if (s == "perturbed_master") return MethodName::perturbed_master;
  if (s == "improved_master") return MethodName::improved_master;
  if (s == "redfield") return MethodName::redfield;
  if (s == "exact_master") return MethodName::exact_master;
  if (s == "milburn_closed") return MethodName::milburn_closed;
  if (s == "milburn_kraus") return MethodName::milburn_kraus;
  if (s == "milburn_perturbative") return MethodName::milburn_perturbative;
  throw ValidationError("scenario: $.method.name: unknown method '" + s + "'");
}

std::vector<double> Scenario::time_grid() const {
  std::vector<double> grid(n_steps + 1);
  for (int i = 0; i <= n_steps; ++i) {
    grid[i] = t_start + (t_end - t_start) * static_cast<double>(i) / n_steps;
  }
  grid.back() = t_end;
  return grid;
}

Scenario parse_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("scenario: cannot open file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario_string(buffer.str(), fs::path(path).parent_path().string());
}

Scenario parse_scenario_string(const std::string& text, const std::string& base_dir) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("scenario: malformed JSON at byte " + std::to_string(e.byte) +
                          ": " + e.what());
  }
  if (!j.is_object()) fail("$", "expected a JSON object");
  check_keys(j,
             {"model", "case", "initial_state", "method", "theta0", "beta_B", "time", "dt",
              "oracle", "output", "seed", "limits"},
             "$");

  Scenario s;
  if (!j.contains("model")) fail("$.model", "required");
  const std::string dir = base_dir.empty() ? "." : base_dir;
  s.model = parse_model(j.at("model"), dir);

  if (j.contains("case")) {
    const std::string c = get_string(j, "case", "$");
    if (c == "one") s.sesr_case = ScenarioCase::one;
    else if (c == "four") s.sesr_case = ScenarioCase::four;
    else if (c == "inherent") s.sesr_case = ScenarioCase::inherent;
    else fail("$.case", "expected 'one', 'four', or 'inherent'");
  }

  if (!j.contains("initial_state")) fail("$.initial_state", "required");
  s.initial_state = parse_initial_state(j.at("initial_state"), dir);

  if (!j.contains("method")) fail("$.method", "required");
  s.method = parse_method(j.at("method"));

  if (j.contains("theta0")) s.theta0 = get_number(j, "theta0", "$");
  if (j.contains("beta_B")) s.beta_B = get_number(j, "beta_B", "$");

  if (!j.contains("time")) fail("$.time", "required");
  {
    const auto& t = j.at("time");
    if (!t.is_object()) fail("$.time", "expected an object");
    check_keys(t, {"start", "end", "steps"}, "$.time");
    if (!t.contains("start") || !t.contains("end") || !t.contains("steps")) {
      fail("$.time", "requires start, end, and steps");
    }
    s.t_start = get_number(t, "start", "$.time");
    s.t_end = get_number(t, "end", "$.time");
    s.n_steps = get_int(t, "steps", "$.time");
  }
  if (j.contains("dt")) s.dt = get_number(j, "dt", "$");
  if (j.contains("oracle")) {
    if (!j.at("oracle").is_boolean()) fail("$.oracle", "expected a boolean");
    s.oracle = j.at("oracle").get<bool>();
  }
  if (j.contains("output")) {
    const auto& o = j.at("output");
    if (!o.is_object()) fail("$.output", "expected an object");
    check_keys(o, {"trajectory", "summary"}, "$.output");
    if (o.contains("trajectory")) s.out_trajectory = get_string(o, "trajectory", "$.output");
    if (o.contains("summary")) s.out_summary = get_string(o, "summary", "$.output");
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer()) {
      fail("$.seed", "expected an integer");
    }
    s.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("limits")) {
    const auto& lim = j.at("limits");
    if (!lim.is_object()) fail("$.limits", "expected an object");
    check_keys(lim, {"dim_budget", "path_budget"}, "$.limits");
    if (lim.contains("dim_budget")) {
      s.dim_budget = get_int(lim, "dim_budget", "$.limits");
      if (s.dim_budget < 1) fail("$.limits.dim_budget", "must be positive");
    }
    if (lim.contains("path_budget")) {
      if (!lim.at("path_budget").is_number_integer()) {
        fail("$.limits.path_budget", "expected an integer");
      }
      s.path_budget = lim.at("path_budget").get<std::int64_t>();
      if (s.path_budget < 1) fail("$.limits.path_budget", "must be positive");
    }
  }
  s.model.spins.dim_budget = s.dim_budget;
  cross_validate(s);
  return s;
}

std::string scenario_to_json_string(const Scenario& s) {
  ordered_json j;
  ordered_json model;
  switch (s.model.kind) {
    case ModelKind::zurek: model["type"] = "zurek"; break;
    case ModelKind::extended: model["type"] = "extended"; break;
    case ModelKind::custom: model["type"] = "custom"; break;
  }
  if (s.model.kind != ModelKind::custom) {
    model["n_env"] = s.model.spins.n_env;
    model["Z"] = std::vector<double>(s.model.spins.z.begin(), s.model.spins.z.end());
    model["X"] = std::vector<double>(s.model.spins.x.begin(), s.model.spins.x.end());
    if (s.model.kind == ModelKind::extended) model["mu"] = s.model.spins.mu;
  } else {
    model["h_s"] = s.model.h_s_file;
    model["h_e"] = s.model.h_e_file;
    ordered_json coupling = ordered_json::array();
    for (const auto& [sf, bf] : s.model.coupling_files) {
      coupling.push_back(ordered_json{{"s", sf}, {"b", bf}});
    }
    model["coupling"] = coupling;
  }
  j["model"] = model;

  switch (s.sesr_case) {
    case ScenarioCase::one: j["case"] = "one"; break;
    case ScenarioCase::four: j["case"] = "four"; break;
    case ScenarioCase::inherent: j["case"] = "inherent"; break;
  }

  ordered_json init;
  if (s.initial_state.from_file) {
    init["file"] = s.initial_state.file;
  } else {
    init["system"] = s.initial_state.system_state;
    if (s.initial_state.env_thermal) {
      init["env"] = "thermal";
    } else {
      init["env"] = s.initial_state.env_states;
    }
  }
  j["initial_state"] = init;

  ordered_json method;
  method["name"] = method_name_string(s.method.name);
  method["L"] = s.method.series_order;
  method["improved_energy_order"] = s.method.improved_energy_order;
  method["order_cap"] = s.method.master_order_cap;
  method["depth"] = s.method.master_depth;
  method["kraus_kmax"] = s.method.kraus_kmax;
  method["milburn_lmax"] = s.method.milburn_lmax;
  method["milburn_kmax"] = s.method.milburn_kmax;
  method["j_interaction_picture"] = s.method.j_interaction_picture;
  j["method"] = method;

  if (s.theta0) j["theta0"] = *s.theta0;
  if (s.beta_B) j["beta_B"] = *s.beta_B;
  j["time"] = ordered_json{{"start", s.t_start}, {"end", s.t_end}, {"steps", s.n_steps}};
  if (s.dt > 0.0) j["dt"] = s.dt;
  j["oracle"] = s.oracle;
  j["output"] = ordered_json{{"trajectory", s.out_trajectory}, {"summary", s.out_summary}};
  j["seed"] = s.seed;
  j["limits"] = ordered_json{{"dim_budget", static_cast<std::int64_t>(s.dim_budget)},
                             {"path_budget", s.path_budget}};
  return j.dump(2) + "\n";
}

Matrix parse_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("matrix file: cannot open " + path);
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("matrix file " + path + ": malformed JSON at byte " +
                          std::to_string(e.byte) + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("rows") || !j.at("rows").is_array()) {
    throw ValidationError("matrix file " + path + ": expected {\"rows\": [[[re, im], ...], ...]}");
  }
  const auto& rows = j.at("rows");
  const Index n = static_cast<Index>(rows.size());
  Matrix m(n, n);
  Index r = 0;
  for (const auto& row : rows) {
    if (!row.is_array() || static_cast<Index>(row.size()) != n) {
      throw ValidationError("matrix file " + path + ": row " + std::to_string(r) +
                            " does not have " + std::to_string(n) + " entries");
    }
    Index c = 0;
    for (const auto& entry : row) {
      if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() ||
          !entry[1].is_number()) {
        throw ValidationError("matrix file " + path + ": entry (" + std::to_string(r) + "," +
                              std::to_string(c) + ") must be [re, im]");
      }
      m(r, c) = Complex(entry[0].get<double>(), entry[1].get<double>());
      ++c;
    }
    ++r;
  }
  if (!m.allFinite()) {
    throw ValidationError("matrix file " + path + ": non-finite entries");
  }
  return m;
}

std::string matrix_to_json_string(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Index c = 0; c < m.cols(); ++c) {
      row.push_back(ordered_json::array({m(r, c).real(), m(r, c).imag()}));
    }
    rows.push_back(row);
  }
  ordered_json j;
  j["rows"] = rows;
  return j.dump(2) + "\n";
}

}  // namespace oqdyn

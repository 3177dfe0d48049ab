#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "sassc/errors.hpp"
#include "sassc/io.hpp"

namespace sassc {

namespace {

void dump_number(std::string& out, double v) {
  if (std::isnan(v)) {
    out += "\"nan\"";
  } else if (std::isinf(v)) {
    out += v > 0 ? "\"inf\"" : "\"-inf\"";
  } else {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
  }
}

void dump(std::string& out, const Json& j, int depth) {
  const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(2 * depth), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad;
        out += Json(it.key()).dump();
        out += ": ";
        dump(out, it.value(), depth + 1);
      }
      out += "\n" + close_pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      bool flat = true;
      for (const auto& e : j) flat = flat && !e.is_structured();
      if (flat) {
        out += "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out += ", ";
          dump(out, j[i], depth + 1);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        dump(out, j[i], depth + 1);
      }
      out += "\n" + close_pad + "]";
      return;
    }
    case Json::value_t::number_float:
      dump_number(out, j.get<double>());
      return;
    default:
      out += j.dump();
  }
}

double as_double(const Json& j, const char* what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    if (s == "nan") return NAN;
  }
  throw InputError(std::string(what) + " must be a number");
}

const Json& member(const Json& j, const char* key, const char* context) {
  if (!j.is_object()) throw InputError(std::string(context) + " must be an object");
  auto it = j.find(key);
  if (it == j.end()) throw InputError(std::string(context) + "." + key + " is missing");
  return *it;
}

int as_int(const Json& j, const char* what) {
  if (!j.is_number_integer()) throw InputError(std::string(what) + " must be an integer");
  return j.get<int>();
}

std::vector<double> as_double_list(const Json& j, const char* what) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array()) throw InputError(std::string(what) + " must be a number or an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(as_double(e, what));
  return out;
}

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json array_json(const ScenarioArray& a) {
  Json out = Json::array();
  for (Eigen::Index k = 0; k < a.cols(); ++k) out.push_back(vector_json(a.col(k)));
  return out;
}

Vector vector_from(const Json& j, int n, const char* what) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(n))
    throw InputError(std::string(what) + " must be an array of length " + std::to_string(n));
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = as_double(j[static_cast<std::size_t>(i)], what);
  return v;
}

ScenarioArray array_from(const Json& j, int n, int S, const char* what) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(S))
    throw InputError(std::string(what) + " must hold " + std::to_string(S) + " scenario rows");
  ScenarioArray a(n, S);
  for (int k = 0; k < S; ++k) a.col(k) = vector_from(j[static_cast<std::size_t>(k)], n, what);
  return a;
}

Json double_list_json(const std::vector<double>& v) {
  if (v.size() == 1) return v.front();
  return Json(v);
}

}  // namespace

std::string canonical_dump(const Json& value) {
  std::string out;
  dump(out, value, 0);
  out += "\n";
  return out;
}

Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed JSON: ") + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw InputError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

Json field_spec_to_json(const FieldSpec& spec) {
  Json j;
  j["base"] = spec.base;
  j["modes"] = Json::array();
  for (const auto& m : spec.modes) j["modes"].push_back({{"amplitude", m.amplitude}, {"k", {m.k1, m.k2}}});
  if (spec.clip) j["clip"] = {spec.clip->lo, spec.clip->hi};
  return j;
}

FieldSpec field_spec_from_json(const Json& j) {
  FieldSpec spec;
  spec.base = as_double(member(j, "base", "field"), "field.base");
  const Json& modes = member(j, "modes", "field");
  if (!modes.is_array()) throw InputError("field.modes must be an array");
  for (const auto& m : modes) {
    FieldMode fm;
    fm.amplitude = as_double(member(m, "amplitude", "field.modes[]"), "amplitude");
    const Json& k = member(m, "k", "field.modes[]");
    if (!k.is_array() || k.size() != 2) throw InputError("field.modes[].k must be [k1, k2]");
    fm.k1 = as_int(k[0], "k1");
    fm.k2 = as_int(k[1], "k2");
    spec.modes.push_back(fm);
  }
  if (auto it = j.find("clip"); it != j.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != 2) throw InputError("field.clip must be [lo, hi]");
    spec.clip = ClipBounds{as_double((*it)[0], "clip.lo"), as_double((*it)[1], "clip.hi")};
  }
  return spec;
}

Json instance_to_json(const InstanceConfig& c) {
  Json j;
  j["grid"] = {{"n1d", c.n1d}};
  Json sc;
  sc["S"] = c.scenario_count;
  sc["seed"] = c.seed;
  if (!c.probabilities.empty()) sc["probabilities"] = c.probabilities;
  sc["spec_a"] = field_spec_to_json(c.coefficient);
  sc["spec_g"] = field_spec_to_json(c.load);
  sc["spec_psi"] = field_spec_to_json(c.obstacle);
  j["scenarios"] = sc;
  j["c1"] = {{"lo", double_list_json(c.c1_lo)}, {"hi", double_list_json(c.c1_hi)}};
  j["c2"] = {{"M", c.c2_bound}};
  if (const auto* spec = std::get_if<FieldSpec>(&c.target))
    j["y_D"] = field_spec_to_json(*spec);
  else
    j["y_D"] = std::get<std::vector<double>>(c.target);
  j["alpha"] = c.alpha;
  j["alpha_prime"] = c.alpha_prime;
  j["mode"] = c.mode == ConstraintMode::Slack ? "slack" : "hard";
  return j;
}

InstanceConfig instance_from_json(const Json& j) {
  InstanceConfig c;
  try {
    c.n1d = as_int(member(member(j, "grid", "instance"), "n1d", "grid"), "grid.n1d");
    const Json& sc = member(j, "scenarios", "instance");
    c.scenario_count = as_int(member(sc, "S", "scenarios"), "scenarios.S");
    const Json& seed = member(sc, "seed", "scenarios");
    if (!seed.is_number_unsigned()) throw InputError("scenarios.seed must be a nonnegative integer");
    c.seed = seed.get<std::uint64_t>();
    if (auto it = sc.find("probabilities"); it != sc.end()) c.probabilities = as_double_list(*it, "probabilities");
    c.coefficient = field_spec_from_json(member(sc, "spec_a", "scenarios"));
    c.load = field_spec_from_json(member(sc, "spec_g", "scenarios"));
    c.obstacle = field_spec_from_json(member(sc, "spec_psi", "scenarios"));
    const Json& c1 = member(j, "c1", "instance");
    c.c1_lo = as_double_list(member(c1, "lo", "c1"), "c1.lo");
    c.c1_hi = as_double_list(member(c1, "hi", "c1"), "c1.hi");
    c.c2_bound = as_double(member(member(j, "c2", "instance"), "M", "c2"), "c2.M");
    const Json& yd = member(j, "y_D", "instance");
    if (yd.is_array())
      c.target = as_double_list(yd, "y_D");
    else
      c.target = field_spec_from_json(yd);
    c.alpha = as_double(member(j, "alpha", "instance"), "alpha");
    c.alpha_prime = as_double(member(j, "alpha_prime", "instance"), "alpha_prime");
    const Json& mode = member(j, "mode", "instance");
    if (mode == "slack")
      c.mode = ConstraintMode::Slack;
    else if (mode == "hard")
      c.mode = ConstraintMode::Hard;
    else
      throw InputError("mode must be \"slack\" or \"hard\"");
  } catch (const Json::exception& e) {
    throw InputError(std::string("instance file: ") + e.what());
  }
  validate_config(c);
  return c;
}

std::string instance_hash(const InstanceConfig& config) { return sha256_hex(canonical_dump(instance_to_json(config))); }

Json primal_to_json(const PrimalPoint& x) {
  return {{"x1", vector_json(x.x1)}, {"y", array_json(x.y)}, {"z", array_json(x.z)}};
}

Json dual_to_json(const DualPoint& d) {
  return {{"lambda_e", array_json(d.lambda_e)}, {"lambda_i", array_json(d.lambda_i)}, {"rho", array_json(d.rho)}};
}

PrimalPoint primal_from_json(const Instance& inst, const Json& j) {
  const int n = inst.nodes();
  const int S = inst.scenarios();
  PrimalPoint x;
  x.x1 = vector_from(member(j, "x1", "primal"), n, "primal.x1");
  x.y = array_from(member(j, "y", "primal"), n, S, "primal.y");
  if (auto it = j.find("z"); it != j.end())
    x.z = array_from(*it, n, S, "primal.z");
  else
    x.z = ScenarioArray::Zero(n, S);
  return x;
}

DualPoint dual_from_json(const Instance& inst, const Json& j) {
  const int n = inst.nodes();
  const int S = inst.scenarios();
  DualPoint d;
  d.lambda_e = array_from(member(j, "lambda_e", "dual"), n, S, "dual.lambda_e");
  d.lambda_i = array_from(member(j, "lambda_i", "dual"), n, S, "dual.lambda_i");
  if (auto it = j.find("rho"); it != j.end())
    d.rho = array_from(*it, n, S, "dual.rho");
  else
    d.rho = extract_rho(inst, d.lambda_e);
  return d;
}

Json kkt_to_json(const KktReport& r) {
  return {{"r1", r.r1},
          {"r2", r.r2},
          {"r3", r.r3},
          {"r3p", r.r3p},
          {"r4", r.r4},
          {"r5_sign", r.r5_sign},
          {"r5_feas", r.r5_feas},
          {"r5_comp", r.r5_comp},
          {"r5_comp_pointwise", r.r5_comp_pointwise},
          {"objective", r.objective},
          {"dual_value", r.dual_value},
          {"duality_gap", r.duality_gap},
          {"relative_gap", r.relative_gap()},
          {"max_residual", r.max_residual()},
          {"l1_lambda_e", r.l1_lambda_e},
          {"l1_lambda_i", r.l1_lambda_i},
          {"l1_rho", r.l1_rho}};
}

Json params_to_json(const SolverParams& p) {
  Json j = {{"max_iters", p.max_iters},
            {"kkt_tolerance", p.kkt_tolerance},
            {"step_safety", p.step_safety},
            {"primal_weight", p.primal_weight},
            {"check_interval", p.check_interval},
            {"adaptive_restarts", p.adaptive_restarts},
            {"ph_penalty", p.ph_penalty},
            {"ph_tolerance", p.ph_tolerance},
            {"ph_inner_tolerance", p.ph_inner_tolerance},
            {"ph_max_outer", p.ph_max_outer},
            {"barrier_mu0", p.barrier_mu0},
            {"barrier_shrink", p.barrier_shrink},
            {"barrier_mu_final", p.barrier_mu_final}};
  return j;
}

Json solve_report_to_json(const SolveReport& r) {
  return {{"algorithm", r.algorithm},
          {"iterations", r.iterations},
          {"status", to_string(r.status)},
          {"converged", r.converged()},
          {"kkt", kkt_to_json(r.kkt)},
          {"objective", r.objective},
          {"dual_value", r.dual_value},
          {"message", r.message}};
}

Json homotopy_to_json(const HomotopyReport& rep) {
  Json j;
  j["schedule"] = rep.schedule;
  j["levels"] = Json::array();
  for (const auto& lv : rep.levels)
    j["levels"].push_back({{"alpha_prime", lv.alpha_prime},
                           {"Ez2", lv.ez2},
                           {"dist_x1", lv.dist_x1},
                           {"objective", lv.objective},
                           {"hard_part", lv.hard_part},
                           {"kkt_max", lv.kkt_max},
                           {"z_link", lv.z_link},
                           {"status", to_string(lv.status)},
                           {"iterations", lv.iterations}});
  if (rep.fit)
    j["fit"] = {{"slope", rep.fit->slope},
                {"intercept", rep.fit->intercept},
                {"r_squared", rep.fit->r_squared},
                {"points", rep.fit->points}};
  else
    j["fit"] = nullptr;
  if (!rep.fit_error.empty()) j["fit_error"] = rep.fit_error;
  j["reference"] = solve_report_to_json(rep.reference);
  return j;
}

}  // namespace sassc

#include "cdn/model.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace cdn {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::vector<std::string> validate(const CdnModel& m) {
  std::vector<std::string> issues;
  if (m.variables.empty()) issues.push_back("model has no variables");
  if (m.factors.empty()) issues.push_back("model has no factors");
  const int n = m.num_vars();
  std::vector<int> count(n, 0);
  for (int f = 0; f < m.num_factors(); ++f) {
    const CopulaFactor& fac = m.factors[f];
    const std::string tag = "factor " + std::to_string(f);
    if (fac.scope.empty()) {
      issues.push_back(tag + ": empty scope");
      continue;
    }
    bool scope_ok = true;
    std::vector<char> seen(n, 0);
    for (int v : fac.scope) {
      if (v < 0 || v >= n) {
        issues.push_back(tag + ": unknown variable index " +
                         std::to_string(v));
        scope_ok = false;
        continue;
      }
      if (seen[v]) {
        issues.push_back(tag + ": duplicate variable " + std::to_string(v));
        scope_ok = false;
      }
      seen[v] = 1;
      ++count[v];
    }
    if (!scope_ok) continue;
    const int arity = static_cast<int>(fac.scope.size());
    try {
      const ParamInterval dom = param_domain(fac.kind, arity);
      if (!dom.contains(fac.param))
        issues.push_back(tag + ": parameter " + std::to_string(fac.param) +
                         " outside the open domain");
    } catch (const UnsupportedArity&) {
      issues.push_back(tag + ": unsupported arity " + std::to_string(arity) +
                       " for this copula kind");
    }
  }
  for (int v = 0; v < n; ++v) {
    if (count[v] == 0)
      issues.push_back("variable " + std::to_string(v) + " (" +
                       m.variables[v].name + ") appears in no factor");
    if (!(m.variables[v].margin.sigma > 0.0))
      issues.push_back("variable " + std::to_string(v) +
                       ": margin sigma must be positive");
  }
  return issues;
}

void CdnModel::finalize() {
  const std::vector<std::string> issues = validate(*this);
  if (!issues.empty()) {
    std::string msg = "invalid model:";
    for (const std::string& s : issues) msg += "\n  " + s;
    throw InvalidModel(msg);
  }
  const int n = num_vars();
  k.assign(n, 0);
  probit_scale.assign(n, 0);
  for (const CopulaFactor& f : factors) {
    for (int v : f.scope) {
      ++k[v];
      if (f.kind == CopulaKind::normal_pair) probit_scale[v] = 1;
    }
  }
  d.resize(n);
  for (int v = 0; v < n; ++v) d[v] = 1.0 / k[v];
}

void CdnModel::finalize_with_exponents(const std::vector<double>& d_override) {
  finalize();
  d = d_override;
}

namespace {

// Shared by the real-space and copula-space builders; u must already be the
// copula coordinate. with_margin_density adds ln f_i(x_i) externally.
EvalPoint build_point(const CdnModel& m, std::vector<double> u,
                      const std::vector<char>& diff) {
  const int n = m.num_vars();
  EvalPoint p;
  p.u = std::move(u);
  p.v.resize(n);
  p.w.assign(n, std::numeric_limits<double>::quiet_NaN());
  p.diff = diff;
  p.log_kappa = 0.0;
  for (int i = 0; i < n; ++i) {
    const bool in_diff = diff[i] != 0;
    double ui = p.u[i];
    if (ui == 1.0 && !in_diff) {
      p.v[i] = 1.0;
      if (m.probit_scale[i]) p.w[i] = kInf;
      continue;
    }
    if (ui == 0.0 && !in_diff) {
      p.v[i] = 0.0;
      if (m.probit_scale[i]) p.w[i] = -kInf;
      continue;
    }
    ui = clamp_unit(ui);
    p.u[i] = ui;
    const double log_u = std::log(ui);
    p.v[i] = std::exp(m.d[i] * log_u);
    if (m.probit_scale[i]) p.w[i] = std_normal_quantile(p.v[i]);
    if (in_diff) {
      p.log_kappa += std::log(m.d[i]) + (m.d[i] - 1.0) * log_u;
      if (m.probit_scale[i]) p.log_kappa -= std_normal_log_pdf(p.w[i]);
    }
  }
  return p;
}

}  // namespace

EvalPoint transform_point(const CdnModel& m, const std::vector<double>& x,
                          const std::vector<char>& diff) {
  const int n = m.num_vars();
  std::vector<double> u(n);
  double log_margin = 0.0;
  for (int i = 0; i < n; ++i) {
    u[i] = to_copula_coord(m.variables[i].margin, x[i]);
    if (diff[i]) log_margin += m.variables[i].margin.log_pdf(x[i]);
  }
  EvalPoint p = build_point(m, std::move(u), diff);
  p.log_kappa += log_margin;
  return p;
}

EvalPoint eval_point_from_u(const CdnModel& m, const std::vector<double>& u,
                            const std::vector<char>& diff) {
  return build_point(m, u, diff);
}

EvalPoint reduce(const CdnModel& m, const Evidence& e) {
  const int n = m.num_vars();
  std::vector<double> x(n, kInf);
  std::vector<char> diff(n, 0);
  for (int i = 0; i < n; ++i) {
    const Evidence::Entry& entry = e.entries[i];
    switch (entry.state) {
      case VarState::free:
      case VarState::marginalized:
        x[i] = kInf;
        break;
      case VarState::point:
        x[i] = entry.value;
        diff[i] = 1;
        break;
      case VarState::cumulative:
        x[i] = entry.value;
        break;
    }
  }
  return transform_point(m, x, diff);
}

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<const char*> keys,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : keys)
      if (it.key() == key) known = true;
    if (!known)
      throw InvalidModel("unknown field \"" + it.key() + "\" in " + where);
  }
}

}  // namespace

namespace {

CdnModel model_from_json_object(const json& j) {
  reject_unknown(j, {"variables", "factors"}, "model");
  CdnModel m;
  for (const json& jv : j.at("variables")) {
    reject_unknown(jv, {"name", "margin"}, "variable");
    const json& jm = jv.at("margin");
    reject_unknown(jm, {"type", "mu", "sigma"}, "margin");
    if (jm.at("type").get<std::string>() != "normal")
      throw InvalidModel("unsupported margin type");
    CdnModel::Variable v;
    v.name = jv.at("name").get<std::string>();
    v.margin.mu = jm.at("mu").get<double>();
    v.margin.sigma = jm.at("sigma").get<double>();
    m.variables.push_back(std::move(v));
  }
  for (const json& jf : j.at("factors")) {
    reject_unknown(jf, {"kind", "param", "scope"}, "factor");
    CopulaFactor f;
    const std::string kind = jf.at("kind").get<std::string>();
    if (kind == "clayton")
      f.kind = CopulaKind::clayton;
    else if (kind == "normal_pair")
      f.kind = CopulaKind::normal_pair;
    else
      throw InvalidModel("unknown factor kind \"" + kind + "\"");
    f.param = jf.at("param").get<double>();
    f.scope = jf.at("scope").get<std::vector<int>>();
    m.factors.push_back(std::move(f));
  }
  m.finalize();
  return m;
}

}  // namespace

CdnModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidModel(std::string("model JSON parse error: ") + e.what());
  }
  if (!j.is_object()) throw InvalidModel("model JSON must be an object");
  try {
    return model_from_json_object(j);
  } catch (const json::exception& e) {
    throw InvalidModel(std::string("model JSON: ") + e.what());
  }
}

std::string model_to_json(const CdnModel& m) {
  json j;
  j["variables"] = json::array();
  for (const CdnModel::Variable& v : m.variables) {
    j["variables"].push_back(
        {{"name", v.name},
         {"margin",
          {{"type", "normal"}, {"mu", v.margin.mu}, {"sigma", v.margin.sigma}}}});
  }
  j["factors"] = json::array();
  for (const CopulaFactor& f : m.factors) {
    j["factors"].push_back(
        {{"kind", f.kind == CopulaKind::clayton ? "clayton" : "normal_pair"},
         {"param", f.param},
         {"scope", f.scope}});
  }
  return j.dump(2);
}

CdnModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidModel("cannot open model file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return model_from_json(buf.str());
  } catch (const InvalidModel& e) {
    throw InvalidModel(path + ": " + e.what());
  }
}

void save_model(const CdnModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidModel("cannot write model file: " + path);
  out << model_to_json(m) << "\n";
}

}  // namespace cdn

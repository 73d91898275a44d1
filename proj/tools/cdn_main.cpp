#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cdn/archetypes.hpp"
#include "cdn/cliquetree.hpp"
#include "cdn/errors.hpp"
#include "cdn/experiments.hpp"
#include "cdn/format.hpp"
#include "cdn/inference.hpp"
#include "cdn/learning.hpp"
#include "cdn/model.hpp"
#include "cdn/rng.hpp"
#include "cdn/sampling.hpp"
#include "cdn/signed_log.hpp"

namespace {

using cdn::CdnModel;
using cdn::InvalidSpec;

cdn::CopulaKind copula_from_string(const std::string& s) {
  if (s == "clayton") return cdn::CopulaKind::clayton;
  if (s == "normal") return cdn::CopulaKind::normal_pair;
  throw InvalidSpec("unknown copula kind: " + s + " (use clayton or normal)");
}

int var_index(const CdnModel& m, const std::string& name) {
  for (int i = 0; i < m.num_vars(); ++i)
    if (m.variables[i].name == name) return i;
  throw InvalidSpec("unknown variable name: " + name);
}

std::pair<std::string, double> parse_assignment(const std::string& s) {
  const auto pos = s.find('=');
  if (pos == std::string::npos)
    throw InvalidSpec("expected NAME=VALUE, got: " + s);
  const std::string name = s.substr(0, pos);
  const std::string text = s.substr(pos + 1);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (name.empty() || used != text.size())
    throw InvalidSpec("bad numeric value in: " + s);
  return {name, value};
}

void write_text(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out_path);
  if (!f) throw InvalidSpec("cannot open output file: " + out_path);
  f << text;
  if (!f) throw InvalidSpec("failed writing output file: " + out_path);
}

cdn::DspEngine make_engine(const CdnModel& m) {
  std::vector<std::vector<int>> scopes;
  for (const auto& f : m.factors) scopes.push_back(f.scope);
  return cdn::DspEngine(m, cdn::build_min_fill(scopes, m.num_vars()));
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string family = "chain";
  int n = 4;
  std::string copula = "clayton";
  double param = 0.0;
  bool param_given = false;
  bool random_params = false;
  std::uint64_t seed = 0;
  std::string out;
};

void run_generate(const GenerateArgs& a) {
  cdn::ArchetypeSpec spec;
  spec.family = cdn::family_from_string(a.family);
  spec.n = a.n;
  spec.kind = copula_from_string(a.copula);
  spec.random_params = a.random_params;
  spec.param = a.param_given
                   ? a.param
                   : (spec.kind == cdn::CopulaKind::clayton ? 1.0 : 0.5);
  const CdnModel m = cdn::generate(spec, a.seed);
  write_text(a.out, cdn::model_to_json(m) + "\n");
}

// ------------------------------------------------------------------- query

struct QueryArgs {
  std::string model;
  std::string type = "density";
  std::vector<std::string> at;
  std::vector<std::string> cum;
  std::vector<std::string> given;
};

void apply_assignments(const CdnModel& m, const std::vector<std::string>& raw,
                       cdn::VarState state, cdn::Evidence& ev) {
  for (const auto& s : raw) {
    const auto [name, value] = parse_assignment(s);
    const int idx = var_index(m, name);
    if (ev.entries[idx].state != cdn::VarState::marginalized)
      throw InvalidSpec("variable assigned twice: " + name);
    ev.entries[idx].state = state;
    ev.entries[idx].value = value;
  }
}

void print_query_result(const std::string& type, cdn::SignedLog value) {
  std::string log_text = "-inf";
  double linear = 0.0;
  if (value.sign > 0) {
    log_text = cdn::to_decimal(value.log_abs);
    linear = std::exp(value.log_abs);
  } else if (value.sign < 0) {
    // Mixed partials of a valid CDF are nonnegative; tiny negatives are
    // cancellation noise, reported as zero.
    log_text = "-inf";
  }
  std::cout << "type=" << type << "\n";
  std::cout << "log_value=" << log_text << "\n";
  std::cout << "value=" << cdn::to_decimal(linear) << "\n";
}

void run_query(const QueryArgs& a) {
  const CdnModel m = cdn::load_model(a.model);
  const cdn::DspEngine engine = make_engine(m);
  const int n = m.num_vars();

  const auto require = [&](bool ok, const char* msg) {
    if (!ok) throw InvalidSpec(std::string(msg) + " for --type " + a.type);
  };

  if (a.type == "marginal-cdf") {
    require(a.given.empty(), "--given is not accepted");
    cdn::Evidence ev = cdn::Evidence::all_marginalized(n);
    apply_assignments(m, a.at, cdn::VarState::cumulative, ev);
    apply_assignments(m, a.cum, cdn::VarState::cumulative, ev);
    print_query_result(a.type, cdn::log_query(engine, ev));
    return;
  }
  if (a.type == "density" || a.type == "mixed") {
    require(a.given.empty(), "--given is not accepted");
    if (a.type == "density")
      require(a.cum.empty(), "--cum is not accepted");
    cdn::Evidence ev = cdn::Evidence::all_marginalized(n);
    apply_assignments(m, a.at, cdn::VarState::point, ev);
    apply_assignments(m, a.cum, cdn::VarState::cumulative, ev);
    print_query_result(a.type, cdn::log_query(engine, ev));
    return;
  }
  if (a.type == "conditional-density" || a.type == "conditional-cdf") {
    require(!a.given.empty(), "--given is required");
    require(!a.at.empty(), "--at is required");
    require(a.cum.empty(), "--cum is not accepted (use --at)");
    const auto at_state = a.type == "conditional-density"
                              ? cdn::VarState::point
                              : cdn::VarState::cumulative;
    cdn::Evidence num = cdn::Evidence::all_marginalized(n);
    apply_assignments(m, a.at, at_state, num);
    apply_assignments(m, a.given, cdn::VarState::point, num);
    cdn::Evidence den = cdn::Evidence::all_marginalized(n);
    apply_assignments(m, a.given, cdn::VarState::point, den);

    const cdn::SignedLog num_v = cdn::log_query(engine, num);
    const cdn::SignedLog den_v = cdn::log_query(engine, den);
    if (den_v.sign <= 0)
      throw InvalidSpec("conditioning event has zero density");
    cdn::SignedLog ratio;
    ratio.sign = num_v.sign;
    ratio.log_abs = num_v.log_abs - den_v.log_abs;
    if (num_v.sign == 0) ratio.log_abs = 0.0;
    print_query_result(a.type, ratio);
    return;
  }
  throw InvalidSpec("unknown query type: " + a.type);
}

// ------------------------------------------------------------------ sample

struct SampleArgs {
  std::string model;
  int count = 100;
  std::uint64_t seed = 0;
  std::string out;
  bool copula_space = false;
  std::vector<std::string> given;
};

void run_sample(const SampleArgs& a) {
  const CdnModel m = cdn::load_model(a.model);
  std::vector<std::vector<double>> rows;
  if (a.given.empty()) {
    const auto plan = cdn::make_sampling_cliques(
        m, cdn::Rng::substream(a.seed, 0).next_u64());
    const std::uint64_t draw_seed = cdn::Rng::substream(a.seed, 1).next_u64();
    rows = a.copula_space ? cdn::sample_cdn_copula(m, plan, a.count, draw_seed)
                          : cdn::sample_cdn(m, plan, a.count, draw_seed);
  } else {
    std::vector<std::pair<int, double>> observed;
    for (const auto& s : a.given) {
      const auto [name, value] = parse_assignment(s);
      observed.push_back({var_index(m, name), value});
    }
    rows = a.copula_space
               ? cdn::sample_conditional_copula(m, observed, a.count, a.seed)
               : cdn::sample_conditional(m, observed, a.count, a.seed);
  }

  std::ostringstream csv;
  for (int i = 0; i < m.num_vars(); ++i)
    csv << (i ? "," : "") << m.variables[i].name;
  csv << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      csv << (i ? "," : "") << cdn::to_decimal(row[i]);
    csv << '\n';
  }
  write_text(a.out, csv.str());
}

// ------------------------------------------------------------------- learn

struct LearnArgs {
  std::string data;
  std::string model;
  std::string family = "chain";
  int n = 3;
  std::string copula = "clayton";
  std::string method = "lbfgs-restart";
  double eps = 1e-8;
  int max_iter = 100;
  int restarts = 3;
  std::uint64_t seed = 0;
  std::string out;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

cdn::Dataset read_dataset(const std::string& path, const CdnModel& m) {
  std::ifstream f(path);
  if (!f) throw InvalidSpec("cannot open data file: " + path);
  std::string line;
  if (!std::getline(f, line))
    throw InvalidSpec("empty data file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_csv_line(line);
  std::vector<int> col_var(header.size());
  std::vector<char> seen(m.num_vars(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) {
    const int idx = var_index(m, header[c]);
    if (seen[idx]) throw InvalidSpec("duplicate data column: " + header[c]);
    seen[idx] = 1;
    col_var[c] = idx;
  }
  if (static_cast<int>(header.size()) != m.num_vars())
    throw InvalidSpec("data file must have one column per model variable");

  cdn::Dataset data;
  int line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw InvalidSpec(path + ":" + std::to_string(line_no) +
                        ": wrong cell count");
    std::vector<double> x(m.num_vars(), 0.0);
    std::vector<char> state(m.num_vars(), 0);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto& cell = cells[c];
      if (cell.empty() || cell == "NA" || cell == "na") {
        state[col_var[c]] = static_cast<char>(cdn::ObsState::missing);
        continue;
      }
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cell.size())
        throw InvalidSpec(path + ":" + std::to_string(line_no) +
                          ": bad numeric cell '" + cell + "'");
      x[col_var[c]] = v;
    }
    data.x.push_back(std::move(x));
    data.state.push_back(std::move(state));
  }
  if (data.x.empty()) throw InvalidSpec("data file has no rows: " + path);
  return data;
}

void run_learn(const LearnArgs& a) {
  CdnModel structure;
  if (!a.model.empty()) {
    structure = cdn::load_model(a.model);
  } else {
    cdn::ArchetypeSpec spec;
    spec.family = cdn::family_from_string(a.family);
    spec.n = a.n;
    spec.kind = copula_from_string(a.copula);
    spec.param = spec.kind == cdn::CopulaKind::clayton ? 1.0 : 0.5;
    structure = cdn::generate(spec, 0);
  }
  const cdn::Dataset data = read_dataset(a.data, structure);

  cdn::OptimizerConfig cfg;
  cfg.epsilon = a.eps;
  cfg.max_iter = a.max_iter;
  cfg.restarts = a.restarts;
  cfg.seed = a.seed;
  const cdn::FitResult res =
      cdn::fit(structure, data, cdn::learn_method_from_string(a.method), cfg);

  nlohmann::json j;
  j["model"] = nlohmann::json::parse(cdn::model_to_json(res.model));
  j["report"] = {{"method", res.report.method},
                 {"energy", res.report.energy},
                 {"iterations", res.report.iterations},
                 {"restarts", res.report.restarts},
                 {"converged", res.report.converged},
                 {"reason", res.report.reason}};
  write_text(a.out, j.dump(2) + "\n");
}

// -------------------------------------------------------------- experiment

struct ExperimentArgs {
  std::string id;
  std::string family = "chain";
  std::string copula = "clayton";
  std::vector<int> sizes;
  std::vector<int> samples;
  std::vector<double> missing;
  std::vector<std::string> methods;
  int trials = 5;
  int reps = 30;
  std::uint64_t seed = 0;
  std::string out;
};

void run_experiment_cmd(const ExperimentArgs& a) {
  cdn::ExperimentOptions opt;
  opt.family = cdn::family_from_string(a.family);
  opt.copula = copula_from_string(a.copula);
  opt.sizes = a.sizes;
  opt.sample_sizes = a.samples;
  opt.missing_fractions = a.missing;
  opt.methods = a.methods;
  opt.trials = a.trials;
  opt.repetitions = a.reps;
  opt.seed = a.seed;

  if (a.out.empty()) {
    cdn::run_experiment(a.id, opt, std::cout);
    return;
  }
  std::ofstream f(a.out);
  if (!f) throw InvalidSpec("cannot open output file: " + a.out);
  cdn::run_experiment(a.id, opt, f);
  if (!f) throw InvalidSpec("failed writing output file: " + a.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Copula cumulative distribution network toolkit"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* sub_gen = app.add_subcommand(
      "generate", "Generate an archetypal model (JSON to --out or stdout)");
  sub_gen->add_option("--family", gen.family,
                      "Model family: chain, loop, tree, grid");
  sub_gen->add_option("--n", gen.n, "Size parameter (family-specific)");
  sub_gen->add_option("--copula", gen.copula, "Factor kind: clayton, normal");
  auto* param_opt = sub_gen->add_option(
      "--param", gen.param,
      "Shared factor parameter (default: clayton 1.0, normal 0.5)");
  sub_gen->add_flag("--random-params", gen.random_params,
                    "Draw each factor parameter from the seeded init range");
  sub_gen->add_option("--seed", gen.seed, "PRNG seed");
  sub_gen->add_option("--out", gen.out, "Output path (default stdout)");
  sub_gen->callback([&] {
    gen.param_given = param_opt->count() > 0;
    run_generate(gen);
  });

  QueryArgs qry;
  auto* sub_qry = app.add_subcommand(
      "query", "Evaluate one probability query against a model");
  sub_qry->add_option("--model", qry.model, "Model JSON path")->required();
  sub_qry->add_option("--type", qry.type,
                      "marginal-cdf, density, mixed, conditional-density, "
                      "conditional-cdf");
  sub_qry->add_option("--at", qry.at, "NAME=VALUE point (or bound) per use");
  sub_qry->add_option("--cum", qry.cum, "NAME=VALUE cumulative bound");
  sub_qry->add_option("--given", qry.given, "NAME=VALUE conditioning point");
  sub_qry->callback([&] { run_query(qry); });

  SampleArgs smp;
  auto* sub_smp =
      app.add_subcommand("sample", "Draw samples and write them as CSV");
  sub_smp->add_option("--model", smp.model, "Model JSON path")->required();
  sub_smp->add_option("--count", smp.count, "Number of rows");
  sub_smp->add_option("--seed", smp.seed, "PRNG seed");
  sub_smp->add_option("--out", smp.out, "Output path (default stdout)");
  sub_smp->add_flag("--copula-space", smp.copula_space,
                    "Emit copula-scale coordinates instead of real-space");
  sub_smp->add_option("--given", smp.given,
                      "NAME=VALUE observed coordinate (conditional sampling)");
  sub_smp->callback([&] { run_sample(smp); });

  LearnArgs lrn;
  auto* sub_lrn = app.add_subcommand(
      "learn", "Fit parameters to a CSV dataset (JSON model + report)");
  sub_lrn->add_option("--data", lrn.data, "CSV with one column per variable")
      ->required();
  sub_lrn->add_option("--model", lrn.model,
                      "Structure JSON (otherwise --family/--n/--copula)");
  sub_lrn->add_option("--family", lrn.family, "Generated structure family");
  sub_lrn->add_option("--n", lrn.n, "Generated structure size");
  sub_lrn->add_option("--copula", lrn.copula, "Generated structure kind");
  sub_lrn->add_option("--method", lrn.method,
                      "gd, lbfgs-restart, lbfgs-barrier, piecewise");
  sub_lrn->add_option("--eps", lrn.eps, "Convergence tolerance");
  sub_lrn->add_option("--max-iter", lrn.max_iter, "Iteration cap");
  sub_lrn->add_option("--restarts", lrn.restarts, "Random restarts");
  sub_lrn->add_option("--seed", lrn.seed, "PRNG seed");
  sub_lrn->add_option("--out", lrn.out, "Output path (default stdout)");
  sub_lrn->callback([&] { run_learn(lrn); });

  ExperimentArgs exp;
  auto* sub_exp = app.add_subcommand(
      "experiment", "Run a named study and write CSV results");
  sub_exp->add_option("--id", exp.id,
                      "inference, learning, mcar, piecewise, limitation")
      ->required();
  sub_exp->add_option("--family", exp.family, "Model family under study");
  sub_exp->add_option("--copula", exp.copula, "Factor kind under study");
  sub_exp->add_option("--sizes", exp.sizes, "Model sizes (comma separated)")
      ->delimiter(',');
  sub_exp->add_option("--samples", exp.samples, "Training-set sizes")
      ->delimiter(',');
  sub_exp->add_option("--missing-frac", exp.missing, "MCAR fractions")
      ->delimiter(',');
  sub_exp->add_option("--methods", exp.methods, "Learning methods")
      ->delimiter(',');
  sub_exp->add_option("--trials", exp.trials, "Trials per cell");
  sub_exp->add_option("--reps", exp.reps, "Timing repetitions per trial");
  sub_exp->add_option("--seed", exp.seed, "Master PRNG seed");
  sub_exp->add_option("--out", exp.out, "Output path (default stdout)");
  sub_exp->callback([&] { run_experiment_cmd(exp); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

#include "cdn/learning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <limits>
#include <numeric>
#include <set>
#include <thread>

#include "cdn/errors.hpp"
#include "cdn/rng.hpp"

namespace cdn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm(const std::vector<double>& v) { return std::sqrt(dot(v, v)); }

DspEngine build_engine(CdnModel m) {
  m.finalize();
  std::vector<std::vector<int>> scopes;
  scopes.reserve(m.factors.size());
  for (const auto& f : m.factors) scopes.push_back(f.scope);
  CliqueTree tree = build_min_fill(scopes, m.num_vars());
  return DspEngine(std::move(m), std::move(tree));
}

// Runs fn(chunk, begin, end) over [0, m) split into one contiguous chunk per
// thread; chunk results must be combined by the caller in chunk order so the
// reduction is deterministic for a fixed thread count.
template <class Fn>
void run_chunked(int m, int threads, const Fn& fn) {
  if (threads <= 1 || m < 2) {
    fn(0, 0, m);
    return;
  }
  const int chunk = (m + threads - 1) / threads;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    const int begin = t * chunk;
    const int end = std::min(m, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, t, begin, end] { fn(t, begin, end); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

int learn_thread_count() {
  int t = static_cast<int>(std::thread::hardware_concurrency());
  if (t < 1) t = 1;
  if (const char* env = std::getenv("CDN_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) t = std::min(t, cap);
  }
  return t;
}

void validate(const OptimizerConfig& cfg) {
  if (!(cfg.alpha > 0.0 && cfg.alpha < 0.5))
    throw InvalidSpec("optimizer alpha must lie in (0, 0.5)");
  if (!(cfg.beta > 0.0 && cfg.beta < 1.0))
    throw InvalidSpec("optimizer beta must lie in (0, 1)");
  if (!(cfg.epsilon > 0.0)) throw InvalidSpec("optimizer epsilon must be > 0");
  if (cfg.max_iter < 1) throw InvalidSpec("optimizer max_iter must be >= 1");
  if (cfg.lbfgs_memory < 1)
    throw InvalidSpec("optimizer lbfgs_memory must be >= 1");
}

EnergyEvaluator::EnergyEvaluator(CdnModel model, const Dataset& data)
    : engine_(build_engine(std::move(model))) {
  const CdnModel& m = engine_.model();
  if (data.cols() != m.num_vars())
    throw InvalidSpec("dataset width does not match the model");
  domains_.reserve(m.num_factors());
  for (const auto& f : m.factors)
    domains_.push_back(param_domain(f.kind, static_cast<int>(f.scope.size())));

  const int rows = data.rows();
  points_.reserve(rows);
  u_rows_.reserve(rows);
  diff_rows_.reserve(rows);
  for (int s = 0; s < rows; ++s) {
    std::vector<double> u(m.num_vars(), 1.0);
    std::vector<char> diff(m.num_vars(), 0);
    for (int v = 0; v < m.num_vars(); ++v) {
      switch (data.state_of(s, v)) {
        case ObsState::observed:
          u[v] = to_copula_coord(m.variables[v].margin, data.x[s][v]);
          diff[v] = 1;
          break;
        case ObsState::missing:
          u[v] = 1.0;
          break;
        case ObsState::censored:
          u[v] = to_copula_coord(m.variables[v].margin, data.x[s][v]);
          break;
      }
    }
    points_.push_back(eval_point_from_u(m, u, diff));
    u_rows_.push_back(std::move(u));
    diff_rows_.push_back(std::move(diff));
  }
  pool_.resize(learn_thread_count());
  for (auto& ws : pool_) ws = engine_.make_workspace();
}

bool EnergyEvaluator::in_domain(const std::vector<double>& theta) const {
  if (theta.size() != domains_.size()) return false;
  for (std::size_t i = 0; i < theta.size(); ++i)
    if (!domains_[i].contains(theta[i])) return false;
  return true;
}

double EnergyEvaluator::energy(const std::vector<double>& theta) {
  if (!in_domain(theta)) return kInf;
  engine_.set_params(theta);
  const int m = num_samples();
  if (m == 0) return 0.0;
  const int threads = static_cast<int>(pool_.size());
  std::vector<double> partial(threads, 0.0);
  std::vector<char> bad(threads, 0);
  run_chunked(m, threads, [&](int t, int begin, int end) {
    double acc = 0.0;
    for (int s = begin; s < end && !bad[t]; ++s) {
      const SignedLog val = engine_.evaluate(pool_[t], points_[s]);
      if (val.sign <= 0) {
        bad[t] = 1;
        break;
      }
      acc += val.log_abs + points_[s].log_kappa;
    }
    partial[t] = acc;
  });
  double sum = 0.0;
  for (int t = 0; t < threads; ++t) {
    if (bad[t]) return kInf;
    sum += partial[t];
  }
  return -sum / m;
}

double EnergyEvaluator::energy_and_grad(const std::vector<double>& theta,
                                        std::vector<double>& grad) {
  grad.assign(num_params(), 0.0);
  if (!in_domain(theta)) return kInf;
  engine_.set_params(theta);
  const int m = num_samples();
  if (m == 0) return 0.0;
  const int threads = static_cast<int>(pool_.size());
  std::vector<double> partial(threads, 0.0);
  std::vector<std::vector<double>> gpartial(
      threads, std::vector<double>(num_params(), 0.0));
  std::vector<char> bad(threads, 0);
  run_chunked(m, threads, [&](int t, int begin, int end) {
    double acc = 0.0;
    for (int s = begin; s < end && !bad[t]; ++s) {
      engine_.calibrate(pool_[t], points_[s]);
      const SignedLog val = engine_.full_value(pool_[t]);
      if (val.sign <= 0) {
        bad[t] = 1;
        break;
      }
      acc += val.log_abs + points_[s].log_kappa;
      const std::vector<double> g = engine_.log_param_gradient(pool_[t]);
      for (int f = 0; f < num_params(); ++f) gpartial[t][f] += g[f];
    }
    partial[t] = acc;
  });
  double sum = 0.0;
  for (int t = 0; t < threads; ++t) {
    if (bad[t]) return kInf;
    sum += partial[t];
    for (int f = 0; f < num_params(); ++f) grad[f] -= gpartial[t][f] / m;
  }
  return -sum / m;
}

std::pair<SignedLog, std::vector<double>> EnergyEvaluator::grad_loglik(
    const std::vector<double>& theta, int sample) {
  if (!in_domain(theta))
    throw ParamOutOfDomain("grad_loglik called outside the parameter domain");
  engine_.set_params(theta);
  engine_.calibrate(pool_[0], points_[sample]);
  const SignedLog value = engine_.full_value(pool_[0]) *
                          SignedLog::from_log(points_[sample].log_kappa);
  return {value, engine_.log_param_gradient(pool_[0])};
}

namespace {

Objective make_energy_objective(EnergyEvaluator& ev) {
  return [&ev](const std::vector<double>& th, std::vector<double>* grad) {
    if (!grad) return ev.energy(th);
    return ev.energy_and_grad(th, *grad);
  };
}

constexpr double kEtaFloor = 1e-18;

struct LineSearchResult {
  bool accepted = false;
  double eta = 0.0;
  double value = kInf;
};

// Backtracking with the sufficient-decrease condition
// f(x + eta d) <= f(x) + alpha eta (g . d).
LineSearchResult backtrack(const Objective& f, const std::vector<double>& x,
                           const std::vector<double>& d, double fx, double gd,
                           const OptimizerConfig& cfg,
                           std::vector<double>& scratch) {
  LineSearchResult r;
  double eta = 1.0;
  while (eta >= kEtaFloor) {
    for (std::size_t i = 0; i < x.size(); ++i) scratch[i] = x[i] + eta * d[i];
    const double fn = f(scratch, nullptr);
    if (fn <= fx + cfg.alpha * eta * gd) {
      r.accepted = true;
      r.eta = eta;
      r.value = fn;
      return r;
    }
    eta *= cfg.beta;
  }
  return r;
}

}  // namespace

LearnReport gradient_descent(const Objective& f, std::vector<double> x,
                             const OptimizerConfig& cfg) {
  validate(cfg);
  LearnReport rep;
  rep.method = "gd";
  const std::size_t n = x.size();
  std::vector<double> g(n, 0.0);
  std::vector<double> xn(n, 0.0);
  std::vector<double> d(n, 0.0);
  double E = f(x, &g);
  rep.energy_trace.push_back(E);
  if (!std::isfinite(E)) {
    rep.theta = std::move(x);
    rep.energy = E;
    rep.reason = "infeasible-start";
    return rep;
  }
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const double gn = norm(g);
    if (gn <= cfg.epsilon) {
      rep.converged = true;
      rep.reason = "gradient-norm";
      break;
    }
    for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
    const LineSearchResult ls = backtrack(f, x, d, E, -gn * gn, cfg, xn);
    if (!ls.accepted) {
      rep.iterations = it;
      rep.reason = "line-search-failure";
      break;
    }
    std::swap(x, xn);
    const double Eprev = E;
    E = f(x, &g);
    rep.energy_trace.push_back(E);
    rep.iterations = it;
    if (std::abs(Eprev - E) <= cfg.epsilon * std::max(1.0, std::abs(Eprev))) {
      rep.converged = true;
      rep.reason = "objective-change";
      break;
    }
    if (ls.eta * gn <= cfg.epsilon * std::max(1.0, norm(x))) {
      rep.converged = true;
      rep.reason = "step-length";
      break;
    }
  }
  if (!rep.converged && rep.reason.empty()) rep.reason = "max-iterations";
  rep.theta = std::move(x);
  rep.energy = E;
  return rep;
}

LearnReport lbfgs_restart(const Objective& f, std::vector<double> x,
                          const OptimizerConfig& cfg) {
  validate(cfg);
  LearnReport rep;
  rep.method = "lbfgs-restart";
  const std::size_t n = x.size();
  std::vector<double> g(n, 0.0);
  std::vector<double> xn(n, 0.0);
  double E = f(x, &g);
  rep.energy_trace.push_back(E);
  if (!std::isfinite(E)) {
    rep.theta = std::move(x);
    rep.energy = E;
    rep.reason = "infeasible-start";
    return rep;
  }
  std::deque<std::vector<double>> S;
  std::deque<std::vector<double>> Y;
  std::deque<double> rho;

  const auto two_loop = [&](const std::vector<double>& grad) {
    std::vector<double> q = grad;
    const int k = static_cast<int>(S.size());
    std::vector<double> a(k, 0.0);
    for (int i = k - 1; i >= 0; --i) {
      a[i] = rho[i] * dot(S[i], q);
      for (std::size_t j = 0; j < n; ++j) q[j] -= a[i] * Y[i][j];
    }
    if (k > 0) {
      const double gamma = dot(S[k - 1], Y[k - 1]) / dot(Y[k - 1], Y[k - 1]);
      for (double& qj : q) qj *= gamma;
    }
    for (int i = 0; i < k; ++i) {
      const double b = rho[i] * dot(Y[i], q);
      for (std::size_t j = 0; j < n; ++j) q[j] += (a[i] - b) * S[i][j];
    }
    for (double& qj : q) qj = -qj;
    return q;
  };

  for (int it = 1; it <= cfg.max_iter; ++it) {
    const double gn = norm(g);
    if (gn <= cfg.epsilon) {
      rep.converged = true;
      rep.reason = "gradient-norm";
      break;
    }
    std::vector<double> d = two_loop(g);
    double gd = dot(g, d);
    if (gd >= 0.0) {
      // Degenerate direction: wipe the curvature memory and fall back.
      S.clear();
      Y.clear();
      rho.clear();
      ++rep.restarts;
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      gd = -gn * gn;
    }
    LineSearchResult ls = backtrack(f, x, d, E, gd, cfg, xn);
    if (!ls.accepted && !S.empty()) {
      S.clear();
      Y.clear();
      rho.clear();
      ++rep.restarts;
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      gd = -gn * gn;
      ls = backtrack(f, x, d, E, gd, cfg, xn);
    }
    if (!ls.accepted) {
      rep.iterations = it;
      rep.reason = "line-search-failure";
      break;
    }
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = xn[i] - x[i];
    std::swap(x, xn);
    const double Eprev = E;
    std::vector<double> gnew(n, 0.0);
    E = f(x, &gnew);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = gnew[i] - g[i];
    const double sy = dot(s, y);
    if (sy > 1e-12 * norm(s) * norm(y)) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > cfg.lbfgs_memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    g = std::move(gnew);
    rep.energy_trace.push_back(E);
    rep.iterations = it;
    if (std::abs(Eprev - E) <= cfg.epsilon * std::max(1.0, std::abs(Eprev))) {
      rep.converged = true;
      rep.reason = "objective-change";
      break;
    }
    if (ls.eta * norm(d) <= cfg.epsilon * std::max(1.0, norm(x))) {
      rep.converged = true;
      rep.reason = "step-length";
      break;
    }
  }
  if (!rep.converged && rep.reason.empty()) rep.reason = "max-iterations";
  rep.theta = std::move(x);
  rep.energy = E;
  return rep;
}

LearnReport lbfgs_barrier(const Objective& f,
                          const std::vector<ParamInterval>& domains,
                          std::vector<double> x, const OptimizerConfig& cfg) {
  validate(cfg);
  int ncon = 0;
  for (const auto& dom : domains) {
    if (std::isfinite(dom.lo)) ++ncon;
    if (std::isfinite(dom.hi)) ++ncon;
  }
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!domains[i].contains(x[i]))
      throw ParamOutOfDomain("barrier start must be strictly feasible");

  LearnReport rep;
  rep.method = "lbfgs-barrier";
  if (ncon == 0) {
    rep = lbfgs_restart(f, std::move(x), cfg);
    rep.method = "lbfgs-barrier";
    return rep;
  }

  double t = cfg.barrier_t0;
  bool inner_failed = false;
  while (true) {
    const Objective fb = [&f, &domains, t](const std::vector<double>& z,
                                           std::vector<double>* grad) {
      const double base = f(z, grad);
      if (!std::isfinite(base)) return kInf;
      double pen = 0.0;
      for (std::size_t i = 0; i < z.size(); ++i) {
        const auto& dom = domains[i];
        if (std::isfinite(dom.lo)) {
          const double gap = z[i] - dom.lo;
          if (gap <= 0.0) return kInf;
          pen -= std::log(gap);
          if (grad) (*grad)[i] -= 1.0 / (t * gap);
        }
        if (std::isfinite(dom.hi)) {
          const double gap = dom.hi - z[i];
          if (gap <= 0.0) return kInf;
          pen -= std::log(gap);
          if (grad) (*grad)[i] += 1.0 / (t * gap);
        }
      }
      return base + pen / t;
    };
    const LearnReport inner = lbfgs_restart(fb, x, cfg);
    x = inner.theta;
    rep.iterations += inner.iterations;
    rep.restarts += inner.restarts;
    rep.energy_trace.push_back(f(x, nullptr));
    if (inner.reason == "line-search-failure" ||
        inner.reason == "infeasible-start") {
      inner_failed = true;
      rep.reason = "barrier-inner-" + inner.reason;
      break;
    }
    if (static_cast<double>(ncon) / t < cfg.epsilon) {
      rep.reason = "barrier-gap";
      break;
    }
    t *= cfg.barrier_mu;
    if (t > 1e300) {
      rep.reason = "barrier-stall";
      break;
    }
  }
  rep.converged = !inner_failed && rep.reason == "barrier-gap";
  rep.energy = f(x, nullptr);
  rep.theta = std::move(x);
  return rep;
}

LearnReport gradient_descent(EnergyEvaluator& ev, std::vector<double> x0,
                             const OptimizerConfig& cfg) {
  return gradient_descent(make_energy_objective(ev), std::move(x0), cfg);
}

LearnReport lbfgs_restart(EnergyEvaluator& ev, std::vector<double> x0,
                          const OptimizerConfig& cfg) {
  return lbfgs_restart(make_energy_objective(ev), std::move(x0), cfg);
}

LearnReport lbfgs_barrier(EnergyEvaluator& ev, std::vector<double> x0,
                          const OptimizerConfig& cfg) {
  return lbfgs_barrier(make_energy_objective(ev), ev.domains(), std::move(x0),
                       cfg);
}

ParameterGraph make_parameter_graph(const CdnModel& m) {
  const int nf = m.num_factors();
  ParameterGraph pg;
  pg.neighbors.resize(nf);
  for (int i = 0; i < nf; ++i) {
    for (int j = 0; j < nf; ++j) {
      if (i == j) continue;
      const auto& a = m.factors[i].scope;
      const auto& b = m.factors[j].scope;
      const bool overlap = std::any_of(a.begin(), a.end(), [&](int v) {
        return std::find(b.begin(), b.end(), v) != b.end();
      });
      if (overlap) pg.neighbors[i].push_back(j);
    }
  }
  for (int i = 0; i < nf; ++i) {
    std::vector<int> nodes{i};
    nodes.insert(nodes.end(), pg.neighbors[i].begin(), pg.neighbors[i].end());
    std::set<int> var_set;
    for (int f : nodes)
      var_set.insert(m.factors[f].scope.begin(), m.factors[f].scope.end());
    std::vector<int> locals(var_set.begin(), var_set.end());
    std::vector<int> local_of(m.num_vars(), -1);
    for (std::size_t l = 0; l < locals.size(); ++l)
      local_of[locals[l]] = static_cast<int>(l);

    CdnModel sub;
    std::vector<double> d_override;
    for (int g : locals) {
      sub.variables.push_back(m.variables[g]);
      d_override.push_back(m.d[g]);
    }
    for (int f : nodes) {
      CopulaFactor cf = m.factors[f];
      for (int& v : cf.scope) v = local_of[v];
      sub.factors.push_back(std::move(cf));
    }
    sub.finalize_with_exponents(d_override);
    std::vector<std::vector<int>> scopes;
    for (const auto& f : sub.factors) scopes.push_back(f.scope);
    pg.trees.push_back(build_min_fill(scopes, sub.num_vars()));
    pg.submodels.push_back(std::move(sub));
    pg.node_factors.push_back(std::move(nodes));
    pg.local_vars.push_back(std::move(locals));
  }
  return pg;
}

LearnReport piecewise_learn(EnergyEvaluator& ev, std::vector<double> x0,
                            const OptimizerConfig& cfg) {
  validate(cfg);
  const CdnModel& m = ev.model();
  const int nf = m.num_factors();
  const int samples = ev.num_samples();
  ParameterGraph pg = make_parameter_graph(m);

  std::vector<DspEngine> engines;
  engines.reserve(nf);
  for (int i = 0; i < nf; ++i)
    engines.emplace_back(pg.submodels[i], pg.trees[i]);
  std::vector<DspEngine::Workspace> ws;
  ws.reserve(nf);
  for (int i = 0; i < nf; ++i) ws.push_back(engines[i].make_workspace());

  // Per-node evaluation points: focal-scope observed coordinates are
  // differentiated, every other local variable sits at its cumulative
  // coordinate (1 when missing).
  std::vector<std::vector<EvalPoint>> points(nf);
  for (int i = 0; i < nf; ++i) {
    const auto& locals = pg.local_vars[i];
    const auto& focal_scope = m.factors[i].scope;
    points[i].reserve(samples);
    std::vector<double> u(locals.size());
    std::vector<char> diff(locals.size());
    for (int s = 0; s < samples; ++s) {
      for (std::size_t l = 0; l < locals.size(); ++l) {
        const int g = locals[l];
        u[l] = ev.u_rows()[s][g];
        const bool focal = std::find(focal_scope.begin(), focal_scope.end(),
                                     g) != focal_scope.end();
        diff[l] = focal && ev.diff_rows()[s][g] ? 1 : 0;
      }
      points[i].push_back(eval_point_from_u(engines[i].model(), u, diff));
    }
  }

  LearnReport rep;
  rep.method = "piecewise";
  std::vector<double> theta = std::move(x0);
  std::vector<double> node_params(nf);
  std::vector<double> prev_theta(nf, kInf);
  std::vector<double> prev_obj(nf, kInf);
  std::vector<double> obj(nf, kInf);
  std::vector<int> inner_iters(nf, 0);
  Rng rng(cfg.seed);
  std::vector<int> order(nf);

  for (int outer = 1; outer <= cfg.max_iter; ++outer) {
    std::iota(order.begin(), order.end(), 0);
    for (int i = nf - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.next_below(i + 1));
      std::swap(order[i], order[j]);
    }
    for (int node : order) {
      DspEngine& eng = engines[node];
      const auto& nodes = pg.node_factors[node];
      // Neighbor factors keep their current parameters; slot 0 is focal.
      for (std::size_t k = 0; k < nodes.size(); ++k)
        node_params[k] = theta[nodes[k]];
      const Objective local = [&](const std::vector<double>& th,
                                  std::vector<double>* grad) {
        if (!ev.domains()[node].contains(th[0])) {
          if (grad) (*grad)[0] = 0.0;
          return kInf;
        }
        std::vector<double> ps(nodes.size());
        ps[0] = th[0];
        for (std::size_t k = 1; k < nodes.size(); ++k) ps[k] = node_params[k];
        eng.set_params(ps);
        double acc = 0.0;
        double gacc = 0.0;
        for (int s = 0; s < samples; ++s) {
          if (grad) {
            eng.calibrate(ws[node], points[node][s]);
            const SignedLog val = eng.full_value(ws[node]);
            if (val.sign <= 0) return kInf;
            acc += val.log_abs;
            gacc += eng.log_param_gradient(ws[node])[0];
          } else {
            const SignedLog val = eng.evaluate(ws[node], points[node][s]);
            if (val.sign <= 0) return kInf;
            acc += val.log_abs;
          }
        }
        if (grad) (*grad)[0] = -gacc / samples;
        return -acc / samples;
      };
      const LearnReport sub =
          lbfgs_restart(local, {theta[nodes[0]]}, cfg);
      theta[nodes[0]] = sub.theta[0];
      obj[node] = sub.energy;
      inner_iters[node] = sub.iterations;
    }

    rep.iterations = outer;
    bool all_active = outer > 1;
    for (int i = 0; i < nf && all_active; ++i) {
      const double dp = theta[i] - prev_theta[i];
      const bool active =
          dp * dp < cfg.epsilon || std::abs(obj[i] - prev_obj[i]) < cfg.epsilon;
      all_active = all_active && active;
    }
    const bool all_stationary = std::all_of(
        inner_iters.begin(), inner_iters.end(), [](int k) { return k <= 1; });
    prev_theta = theta;
    prev_obj = obj;
    rep.energy_trace.push_back(ev.energy(theta));
    if (all_active) {
      rep.converged = true;
      rep.reason = "piecewise-activity";
      break;
    }
    if (all_stationary) {
      rep.converged = true;
      rep.reason = "piecewise-stationary";
      break;
    }
  }
  if (!rep.converged) rep.reason = "max-iterations";
  rep.energy = ev.energy(theta);
  rep.theta = std::move(theta);
  return rep;
}

LearnMethod learn_method_from_string(const std::string& s) {
  if (s == "gd") return LearnMethod::gd;
  if (s == "lbfgs-restart") return LearnMethod::lbfgs_restart;
  if (s == "lbfgs-barrier") return LearnMethod::lbfgs_barrier;
  if (s == "piecewise") return LearnMethod::piecewise;
  throw InvalidSpec("unknown learning method: " + s);
}

std::string to_string(LearnMethod m) {
  switch (m) {
    case LearnMethod::gd:
      return "gd";
    case LearnMethod::lbfgs_restart:
      return "lbfgs-restart";
    case LearnMethod::lbfgs_barrier:
      return "lbfgs-barrier";
    case LearnMethod::piecewise:
      return "piecewise";
  }
  return "gd";
}

FitResult fit(const CdnModel& structure, const Dataset& data,
              LearnMethod method, const OptimizerConfig& cfg) {
  validate(cfg);
  CdnModel model = structure;
  if (data.cols() != model.num_vars())
    throw InvalidSpec("dataset width does not match the model");
  for (int v = 0; v < model.num_vars(); ++v) {
    std::vector<double> col;
    for (int s = 0; s < data.rows(); ++s)
      if (data.state_of(s, v) == ObsState::observed)
        col.push_back(data.x[s][v]);
    model.variables[v].margin = fit_mle(col);
  }
  model.finalize();

  EnergyEvaluator ev(model, data);
  const int runs = std::max(1, cfg.restarts);
  LearnReport best;
  best.energy = kInf;
  bool have_best = false;
  for (int r = 0; r < runs; ++r) {
    Rng rng = Rng::substream(cfg.seed, static_cast<std::uint64_t>(r));
    std::vector<double> x0(model.num_factors());
    for (int f = 0; f < model.num_factors(); ++f) {
      if (model.factors[f].kind == CopulaKind::clayton) {
        const double tau = rng.next_open(0.0, 0.5);
        x0[f] = 2.0 * tau / (1.0 - tau);
      } else {
        x0[f] = rng.next_open(0.0, 1.0);
      }
    }
    OptimizerConfig sub = cfg;
    sub.seed = Rng::substream(cfg.seed, 1000 + static_cast<std::uint64_t>(r))
                   .next_u64();
    LearnReport rep;
    switch (method) {
      case LearnMethod::gd:
        rep = gradient_descent(ev, x0, sub);
        break;
      case LearnMethod::lbfgs_restart:
        rep = lbfgs_restart(ev, x0, sub);
        break;
      case LearnMethod::lbfgs_barrier:
        rep = lbfgs_barrier(ev, x0, sub);
        break;
      case LearnMethod::piecewise:
        rep = piecewise_learn(ev, x0, sub);
        break;
    }
    const bool better =
        !have_best ||
        (rep.converged && !best.converged) ||
        (rep.converged == best.converged && rep.energy < best.energy);
    if (better) {
      best = std::move(rep);
      have_best = true;
    }
  }
  for (int f = 0; f < model.num_factors(); ++f)
    model.factors[f].param = best.theta[f];
  return {std::move(model), std::move(best)};
}

}  // namespace cdn

#pragma once

// Batch tuning: grids over parameter space, empirical utility maximization
// over a sample of instances, structure-aware 1-D refinement, and the
// empirical uniform-convergence study.

#include "ddtune/bounds.hpp"
#include "ddtune/io.hpp"
#include "ddtune/linkage.hpp"
#include "ddtune/logreg.hpp"
#include "ddtune/ssl.hpp"

#include <map>
#include <mutex>
#include <optional>

namespace ddtune {

enum class Task { ClusteringM1, ClusteringM2, ClusteringM3, Ssl, LogReg };

inline Task parse_task(const std::string& s) {
  if (s == "clustering-M1") return Task::ClusteringM1;
  if (s == "clustering-M2") return Task::ClusteringM2;
  if (s == "clustering-M3") return Task::ClusteringM3;
  if (s == "ssl") return Task::Ssl;
  if (s == "logreg") return Task::LogReg;
  throw InvalidArgument("task", "unknown task '" + s +
                                    "' (expected clustering-M1|clustering-M2|clustering-M3|ssl|logreg)");
}

inline const char* task_name(Task t) {
  switch (t) {
    case Task::ClusteringM1: return "clustering-M1";
    case Task::ClusteringM2: return "clustering-M2";
    case Task::ClusteringM3: return "clustering-M3";
    case Task::Ssl: return "ssl";
    case Task::LogReg: return "logreg";
  }
  return "?";
}

inline bool is_clustering(Task t) {
  return t == Task::ClusteringM1 || t == Task::ClusteringM2 || t == Task::ClusteringM3;
}

/// Logistic regression scores are losses; everything else is a utility.
inline bool maximizes(Task t) { return t != Task::LogReg; }

inline PruneKind parse_objective(const std::string& s) {
  if (s == "hamming") return PruneKind::Hamming;
  if (s == "k-center") return PruneKind::KCenter;
  if (s == "k-median") return PruneKind::KMedian;
  throw InvalidArgument("objective", "expected hamming, k-center or k-median, got '" + s + "'");
}

inline const char* objective_name(PruneKind k) {
  switch (k) {
    case PruneKind::Hamming: return "hamming";
    case PruneKind::KCenter: return "k-center";
    case PruneKind::KMedian: return "k-median";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Grids

struct AxisGrid {
  double lo = 0.05;
  double hi = 20.0;
  int points = 50;
  bool log_spaced = true;
  /// Mirror the axis to negative values (alpha grids).
  bool symmetric = false;
  bool include_inf = false;

  std::vector<double> values() const {
    std::vector<double> pos;
    for (int i = 0; i < points; ++i) {
      const double t = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
      pos.push_back(log_spaced ? std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)))
                               : lo + t * (hi - lo));
    }
    std::vector<double> out;
    if (include_inf && symmetric) out.push_back(-kInf);
    if (symmetric)
      for (auto it = pos.rbegin(); it != pos.rend(); ++it) out.push_back(-*it);
    out.insert(out.end(), pos.begin(), pos.end());
    if (include_inf) out.push_back(kInf);
    return out;
  }
};

/// All points of the simplex with coordinates in {0, 1/s, ..., 1}.
inline std::vector<std::vector<double>> simplex_lattice(int dim, int subdivisions) {
  require(dim >= 1, "L", "must be at least 1");
  require(subdivisions >= 1, "beta_subdivisions", "must be at least 1");
  std::vector<std::vector<double>> out;
  std::vector<int> counts(static_cast<std::size_t>(dim), 0);
  auto rec = [&](auto&& self, int pos, int left) -> void {
    if (pos == dim - 1) {
      counts[static_cast<std::size_t>(pos)] = left;
      std::vector<double> b;
      for (int c : counts) b.push_back(static_cast<double>(c) / subdivisions);
      out.push_back(std::move(b));
      return;
    }
    for (int c = left; c >= 0; --c) {
      counts[static_cast<std::size_t>(pos)] = c;
      self(self, pos + 1, left - c);
    }
  };
  rec(rec, 0, subdivisions);
  return out;
}

struct LogRegSettings {
  double lam_min = 0.1;
  double lam_max = 1.1;
  double eps = 0.05;
  Penalty penalty = Penalty::L2;
  /// Batch scoring through the coefficient-path surrogate or the exact solver.
  bool surrogate = true;
};

struct TuneConfig {
  Task task = Task::ClusteringM2;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  AxisGrid alpha{0.05, 20.0, 50, true, true, true};
  AxisGrid sigma{0.01, 10.0, 20, true, false, false};
  std::optional<std::vector<double>> beta;  // fixed weights; otherwise a lattice
  int beta_subdivisions = 10;
  PruneKind objective = PruneKind::Hamming;
  LogRegSettings logreg;
  int refine_budget = 0;
  /// M1 with L = 1: enumerate boundaries and evaluate once per gap.
  bool exact_m1 = false;

  void validate() const {
    auto check_axis = [](const AxisGrid& g, const std::string& name, bool positive) {
      require(g.points >= 1, name + ".points", "must be at least 1");
      require(std::isfinite(g.lo) && std::isfinite(g.hi) && g.lo <= g.hi, name,
              "needs finite lo <= hi");
      if (g.log_spaced) require(g.lo > 0.0, name + ".lo", "log spacing needs lo > 0");
      if (positive) require(g.lo > 0.0, name + ".lo", "must be positive");
    };
    if (task == Task::ClusteringM1 || task == Task::ClusteringM2 || task == Task::ClusteringM3) {
      check_axis(alpha, "alpha", false);
      for (double a : alpha.values())
        if (!std::isinf(a)) validate_scalar_alpha(a, "alpha");
    }
    if (task == Task::Ssl) check_axis(sigma, "sigma", true);
    if (task == Task::LogReg) {
      require(logreg.lam_min > 0.0 && logreg.lam_max > logreg.lam_min, "lambda",
              "need 0 < lambda_min < lambda_max");
      require(logreg.eps > 0.0, "lambda.eps", "must be positive");
    }
    if (beta) {
      double s = 0.0;
      for (double b : *beta) {
        require(std::isfinite(b) && b >= 0.0, "beta", "entries must be nonnegative");
        s += b;
      }
      require(std::abs(s - 1.0) <= kSimplexTol, "beta", "weights do not sum to 1");
    }
    require(beta_subdivisions >= 1, "beta_subdivisions", "must be at least 1");
    require(refine_budget == 0 || refine_budget >= 3, "refine.budget", "must be at least 3");
    if (exact_m1) require(task == Task::ClusteringM1, "exact_m1", "only available for clustering-M1");
  }
};

namespace detail {

inline AxisGrid axis_from_json(const json& j, AxisGrid g, const std::string& name) {
  if (!j.is_object()) throw ParseError(name, "expected an object");
  try {
    if (j.contains("lo")) g.lo = j.at("lo").get<double>();
    if (j.contains("hi")) g.hi = j.at("hi").get<double>();
    if (j.contains("points")) g.points = j.at("points").get<int>();
    if (j.contains("spacing")) {
      const auto s = j.at("spacing").get<std::string>();
      if (s != "log" && s != "linear") throw ParseError(name + ".spacing", "expected log or linear");
      g.log_spaced = s == "log";
    }
    if (j.contains("symmetric")) g.symmetric = j.at("symmetric").get<bool>();
    if (j.contains("include_inf")) g.include_inf = j.at("include_inf").get<bool>();
  } catch (const json::exception& e) {
    throw ParseError(name, std::string("wrong type: ") + e.what());
  }
  return g;
}

}  // namespace detail

/// Parses and validates a tuning config. Unknown keys are ignored.
inline TuneConfig tune_config_from_json(const json& j) {
  TuneConfig c;
  c.task = parse_task(detail::field_as<std::string>(j, "task"));
  try {
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) c.threads = j.at("threads").get<unsigned>();
    if (j.contains("alpha")) c.alpha = detail::axis_from_json(j.at("alpha"), c.alpha, "alpha");
    if (j.contains("sigma")) c.sigma = detail::axis_from_json(j.at("sigma"), c.sigma, "sigma");
    if (j.contains("beta")) c.beta = detail::field_as<std::vector<double>>(j, "beta");
    if (j.contains("beta_subdivisions")) c.beta_subdivisions = j.at("beta_subdivisions").get<int>();
    if (j.contains("objective")) c.objective = parse_objective(j.at("objective").get<std::string>());
    if (j.contains("lambda")) {
      const json& l = j.at("lambda");
      if (l.contains("lo")) c.logreg.lam_min = l.at("lo").get<double>();
      if (l.contains("hi")) c.logreg.lam_max = l.at("hi").get<double>();
      if (l.contains("eps")) c.logreg.eps = l.at("eps").get<double>();
    }
    if (j.contains("penalty")) c.logreg.penalty = parse_penalty(j.at("penalty").get<std::string>());
    if (j.contains("loss")) {
      const auto s = j.at("loss").get<std::string>();
      if (s != "surrogate" && s != "true") throw ParseError("loss", "expected surrogate or true");
      c.logreg.surrogate = s == "surrogate";
    }
    if (j.contains("refine")) c.refine_budget = detail::field_as<int>(j.at("refine"), "budget");
    if (j.contains("exact_m1")) c.exact_m1 = j.at("exact_m1").get<bool>();
  } catch (const json::exception& e) {
    throw ParseError("", std::string("config has a field of the wrong type: ") + e.what());
  }
  try {
    c.validate();
  } catch (const ParseError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ParseError(e.field(), e.message());
  }
  return c;
}

/// Shape shared by every instance of a tuning sample.
struct SampleShape {
  int n = 0;
  int L = 0;
  int k = 0;
  int n_unlabeled = 0;
  Eigen::Index m = 0;
  Eigen::Index p = 0;
};

inline SampleShape shape_of(const AnyInstance& inst) {
  SampleShape s;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ClusteringInstance>) {
          s.n = v.n();
          s.L = v.L();
          s.k = v.k();
        } else if constexpr (std::is_same_v<T, SslInstance>) {
          s.n = v.n();
          s.L = v.L();
          s.n_unlabeled = static_cast<int>(v.unlabeled.size());
        } else {
          s.m = v.m();
          s.p = v.p();
        }
      },
      inst);
  return s;
}

/// Checks that all instances match the task and share one shape.
inline SampleShape check_sample(std::span<const AnyInstance> instances, Task task) {
  require(!instances.empty(), "instances", "at least one instance required");
  const SampleShape first = shape_of(instances.front());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    const bool ok = is_clustering(task) ? std::holds_alternative<ClusteringInstance>(inst)
                    : task == Task::Ssl ? std::holds_alternative<SslInstance>(inst)
                                        : std::holds_alternative<LogRegInstance>(inst);
    require(ok, "instances", "instance " + std::to_string(i) + " does not match task " + task_name(task));
    const SampleShape s = shape_of(inst);
    require(s.n == first.n && s.L == first.L && s.m == first.m && s.p == first.p, "instances",
            "heterogeneous instance shapes (instance " + std::to_string(i) + ")");
  }
  return first;
}

/// Every grid point for `task` at L metrics.
inline std::vector<ParamPoint> make_grid(const TuneConfig& cfg, int L) {
  std::vector<std::vector<double>> betas;
  if (cfg.task == Task::LogReg || cfg.task == Task::ClusteringM3) {
    // No metric weights in the parameter.
  } else if (cfg.beta) {
    check_simplex(*cfg.beta, static_cast<std::size_t>(L));
    betas.push_back(*cfg.beta);
  } else if (L <= 3) {
    betas = simplex_lattice(L, cfg.beta_subdivisions);
  } else {
    betas.push_back(uniform_simplex_point(static_cast<std::size_t>(L)));
  }
  std::vector<ParamPoint> grid;
  switch (cfg.task) {
    case Task::ClusteringM1:
    case Task::ClusteringM2:
      for (double a : cfg.alpha.values())
        for (const auto& b : betas) grid.push_back(LinkageScalarParam{a, b});
      break;
    case Task::ClusteringM3: {
      std::vector<double> axis;
      for (double a : cfg.alpha.values())
        if (std::isfinite(a)) axis.push_back(a);
      std::vector<std::size_t> idx(static_cast<std::size_t>(L), 0);
      for (;;) {
        std::vector<double> v;
        double sum = 0.0;
        for (auto i : idx) {
          v.push_back(axis[i]);
          sum += axis[i];
        }
        if (std::abs(sum) >= kAlphaGuard) grid.push_back(LinkageVectorParam{v});
        std::size_t pos = 0;
        while (pos < idx.size() && ++idx[pos] == axis.size()) idx[pos++] = 0;
        if (pos == idx.size()) break;
      }
      break;
    }
    case Task::Ssl:
      for (double s : cfg.sigma.values())
        for (const auto& b : betas) grid.push_back(SslParam{s, b});
      break;
    case Task::LogReg: {
      const auto& lr = cfg.logreg;
      const auto steps = static_cast<int>(std::ceil((lr.lam_max - lr.lam_min) / lr.eps - 1e-9));
      for (int t = 0; t <= steps; ++t)
        grid.push_back(LogRegParam{t == steps ? lr.lam_max : lr.lam_min + t * lr.eps});
      break;
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Evaluation

/// Score of one parameter on one instance: utility (clustering, ssl) or
/// validation loss (logreg).
inline double evaluate(const AnyInstance& inst, const ParamPoint& param, const TuneConfig& cfg) {
  if (is_clustering(cfg.task)) {
    const auto& c = std::get<ClusteringInstance>(inst);
    if (cfg.task == Task::ClusteringM3) {
      const auto& v = std::get<LinkageVectorParam>(param);
      const auto beta = uniform_simplex_point(static_cast<std::size_t>(c.L()));
      return clustering_utility(c, M3{v.alpha}, beta, cfg.objective);
    }
    const auto& v = std::get<LinkageScalarParam>(param);
    const MergeFamily fam = cfg.task == Task::ClusteringM1 ? MergeFamily{M1{v.alpha}} : MergeFamily{M2{v.alpha}};
    return clustering_utility(c, fam, v.beta, cfg.objective);
  }
  if (cfg.task == Task::Ssl) {
    const auto& v = std::get<SslParam>(param);
    return ssl_utility(std::get<SslInstance>(inst), v.sigma, v.beta);
  }
  const auto& lr = cfg.logreg;
  const auto& inst_lr = std::get<LogRegInstance>(inst);
  const double lambda = std::get<LogRegParam>(param).lambda;
  if (!lr.surrogate) return true_val_loss(inst_lr, lambda, lr.penalty);
  return surrogate_val_loss(approx_path(inst_lr, lr.eps, lr.lam_min, lr.lam_max, lr.penalty), lambda, inst_lr);
}

/// Memo of scores keyed by (instance id, parameter).
class UtilityCache {
 public:
  template <class Fn>
  double get_or_compute(std::size_t instance, const ParamPoint& param, Fn&& compute) {
    Key key{instance, param_key(param)};
    {
      std::lock_guard lock(mutex_);
      if (auto it = map_.find(key); it != map_.end()) {
        ++hits_;
        return it->second;
      }
    }
    const double v = compute();
    std::lock_guard lock(mutex_);
    map_.emplace(std::move(key), v);
    return v;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return map_.size();
  }
  std::size_t hits() const {
    std::lock_guard lock(mutex_);
    return hits_;
  }

 private:
  using Key = std::pair<std::size_t, std::vector<double>>;
  mutable std::mutex mutex_;
  std::map<Key, double> map_;
  std::size_t hits_ = 0;
};

/// scores[g][i] for every grid point g and instance i.
inline std::vector<std::vector<double>> score_table(std::span<const AnyInstance> instances,
                                                    const std::vector<ParamPoint>& grid,
                                                    const TuneConfig& cfg,
                                                    UtilityCache* cache = nullptr) {
  const std::size_t N = instances.size();
  std::vector<std::vector<double>> table(grid.size(), std::vector<double>(N));
  if (cfg.task == Task::LogReg && cfg.logreg.surrogate) {
    // One path per instance serves the whole lambda grid.
    const auto& lr = cfg.logreg;
    parallel_for(
        N,
        [&](std::size_t i) {
          const auto& inst = std::get<LogRegInstance>(instances[i]);
          const RegPath path = approx_path(inst, lr.eps, lr.lam_min, lr.lam_max, lr.penalty);
          for (std::size_t g = 0; g < grid.size(); ++g) {
            auto compute = [&] {
              return surrogate_val_loss(path, std::get<LogRegParam>(grid[g]).lambda, inst);
            };
            table[g][i] = cache ? cache->get_or_compute(i, grid[g], compute) : compute();
          }
        },
        cfg.threads);
    return table;
  }
  parallel_for(
      grid.size() * N,
      [&](std::size_t flat) {
        const std::size_t g = flat / N, i = flat % N;
        auto compute = [&] { return evaluate(instances[i], grid[g], cfg); };
        table[g][i] = cache ? cache->get_or_compute(i, grid[g], compute) : compute();
      },
      cfg.threads);
  return table;
}

struct UtilityRow {
  ParamPoint param;
  double mean = 0.0;
  std::vector<double> per_instance;
};

struct TuneResult {
  ParamPoint best_param;
  std::size_t best_index = 0;
  /// Mean score of best_param on the tuning sample.
  double train_utility = 0.0;
  std::optional<double> holdout_utility;
  std::vector<UtilityRow> utility_table;
  std::optional<BoundReport> bound_report;
  bool maximize = true;
  /// "grid", "exact-m1" or "refine".
  std::string method = "grid";
};

/// True when (value a, key ka) beats (value b, key kb): better score, then
/// lexicographically smaller parameter.
inline bool better_score(double a, const std::vector<double>& ka, double b,
                         const std::vector<double>& kb, bool maximize) {
  if (a != b) return maximize ? a > b : a < b;
  return ka < kb;
}

inline std::optional<BoundReport> bound_for(Task task, const SampleShape& s, const TuneConfig& cfg) {
  if (task == Task::LogReg) {
    const auto& lr = cfg.logreg;
    const auto pieces = static_cast<long>(std::ceil((lr.lam_max - lr.lam_min) / lr.eps - 1e-9));
    BoundReport r;
    r.formula_name = "pdim_partition";
    const BigInt m = static_cast<long>(s.m);
    r.pdim_bound = pdim_partition(1, m, m, m, std::max(1L, pieces));
    r.inputs = {{"d", 1}, {"q", s.m}, {"M", s.m}, {"Delta", s.m}, {"n_regions", pieces}};
    r.note = "x C, C unspecified in source";
    return r;
  }
  if (s.n < 2) return std::nullopt;
  BoundFamily fam = task == Task::ClusteringM1   ? BoundFamily::H1
                    : task == Task::ClusteringM2 ? BoundFamily::H2
                    : task == Task::ClusteringM3 ? BoundFamily::H3
                                                 : BoundFamily::G;
  std::optional<int> u;
  if (task == Task::Ssl) {
    if (s.n_unlabeled < 1) return std::nullopt;
    u = s.n_unlabeled;
  }
  return piecewise_report(family_params(fam, s.n, s.L, u));
}

inline TuneResult select_best(const std::vector<ParamPoint>& grid,
                              const std::vector<std::vector<double>>& table, bool maximize) {
  TuneResult r;
  r.maximize = maximize;
  std::vector<double> best_key;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    UtilityRow row{grid[g], mean(table[g]), table[g]};
    auto key = param_key(grid[g]);
    if (g == 0 || better_score(row.mean, key, r.train_utility, best_key, maximize)) {
      r.best_index = g;
      r.train_utility = row.mean;
      best_key = std::move(key);
    }
    r.utility_table.push_back(std::move(row));
  }
  r.best_param = grid[r.best_index];
  return r;
}

/// Candidate alphas for exact M1 tuning: one point inside each gap between
/// consecutive utility breakpoints of any instance on (lo, hi).
inline std::vector<double> m1_gap_points(std::span<const AnyInstance> instances,
                                         std::span<const double> beta, double lo, double hi) {
  std::vector<double> roots;
  for (const auto& inst : instances) {
    auto r = utility_breakpoints_m1(std::get<ClusteringInstance>(inst), beta, lo, hi);
    roots.insert(roots.end(), r.begin(), r.end());
  }
  std::sort(roots.begin(), roots.end());
  std::vector<double> edges{lo};
  for (double r : roots)
    if (r - edges.back() > kRootDedupTol) edges.push_back(r);
  if (hi - edges.back() > kRootDedupTol) edges.push_back(hi);
  else edges.back() = hi;
  std::vector<double> mids;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) mids.push_back(0.5 * (edges[i] + edges[i + 1]));
  return mids;
}

/// Empirical score optimization over the configured grid (or the exact M1
/// gap set). Ties go to the lexicographically smallest parameter vector.
inline TuneResult erm_tune(std::span<const AnyInstance> instances, const TuneConfig& cfg,
                           UtilityCache* cache = nullptr) {
  cfg.validate();
  const SampleShape shape = check_sample(instances, cfg.task);
  std::vector<ParamPoint> grid;
  std::string method = "grid";
  if (cfg.exact_m1) {
    require(shape.L == 1, "exact_m1", "needs L = 1");
    require(shape.n <= kMaxBoundaryN, "exact_m1", "needs n <= 12");
    const std::vector<double> beta{1.0};
    const double lo = cfg.alpha.lo, hi = cfg.alpha.hi;
    require(lo > 0.0, "alpha.lo", "exact mode covers positive alpha only");
    for (double a : m1_gap_points(instances, beta, lo, hi)) grid.push_back(LinkageScalarParam{a, beta});
    method = "exact-m1";
  } else {
    grid = make_grid(cfg, shape.L);
  }
  require(!grid.empty(), "grid", "is empty");
  const auto table = score_table(instances, grid, cfg, cache);
  TuneResult r = select_best(grid, table, maximizes(cfg.task));
  r.method = method;
  r.bound_report = bound_for(cfg.task, shape, cfg);
  return r;
}

/// Named scalar fields of a parameter point, in a fixed column order.
inline std::vector<std::pair<std::string, double>> param_fields(const ParamPoint& p) {
  std::vector<std::pair<std::string, double>> out;
  auto betas = [&](const std::vector<double>& b) {
    for (std::size_t i = 0; i < b.size(); ++i) out.emplace_back("beta_" + std::to_string(i), b[i]);
  };
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, LinkageScalarParam>) {
          out.emplace_back("alpha", v.alpha);
          betas(v.beta);
        } else if constexpr (std::is_same_v<T, LinkageVectorParam>) {
          for (std::size_t i = 0; i < v.alpha.size(); ++i)
            out.emplace_back("alpha_" + std::to_string(i), v.alpha[i]);
        } else if constexpr (std::is_same_v<T, SslParam>) {
          out.emplace_back("sigma", v.sigma);
          betas(v.beta);
        } else {
          out.emplace_back("lambda", v.lambda);
        }
      },
      p);
  return out;
}

/// JSON numbers cannot hold infinities; those are written as "inf"/"-inf".
inline json param_to_json(const ParamPoint& p) {
  json j = json::object();
  for (const auto& [k, v] : param_fields(p)) {
    if (std::isinf(v)) j[k] = v > 0 ? "inf" : "-inf";
    else j[k] = v;
  }
  return j;
}

inline json to_json(const TuneResult& r, bool per_instance = false) {
  json rows = json::array();
  for (const auto& row : r.utility_table) {
    json jr{{"param", param_to_json(row.param)}, {"mean", row.mean}};
    if (per_instance) jr["per_instance"] = row.per_instance;
    rows.push_back(std::move(jr));
  }
  json j{{"best_param", param_to_json(r.best_param)},
         {"best_index", r.best_index},
         {"train_utility", r.train_utility},
         {"direction", r.maximize ? "maximize" : "minimize"},
         {"method", r.method},
         {"utility_table", std::move(rows)}};
  if (r.holdout_utility) j["holdout_utility"] = *r.holdout_utility;
  if (r.bound_report) j["bound_report"] = to_json(*r.bound_report);
  return j;
}

// ---------------------------------------------------------------------------
// 1-D refinement

struct RefineResult {
  /// Sorted (parameter, mean score) samples.
  std::vector<std::pair<double, double>> samples;
  /// Maximal runs of consecutive equal samples: (first x, last x, value).
  std::vector<std::tuple<double, double, double>> plateaus;
  double best_x = 0.0;
  double best_score = 0.0;
  int evaluations = 0;
  TuneResult result;
};

inline constexpr double kRefineMinWidth = 1e-6;

/// Scalar parameter of `task` at x with the remaining coordinates fixed.
inline ParamPoint scalar_param(Task task, double x, const std::vector<double>& beta) {
  switch (task) {
    case Task::ClusteringM1:
    case Task::ClusteringM2: return LinkageScalarParam{x, beta};
    case Task::Ssl: return SslParam{x, beta};
    case Task::LogReg: return LogRegParam{x};
    case Task::ClusteringM3: break;
  }
  throw InvalidArgument("task", "refinement needs a scalar-parameter task");
}

/// Samples both ends and the midpoint, then keeps bisecting the widest
/// interval whose endpoint means differ, until `budget` evaluations or all
/// such intervals are narrower than 1e-6. `score` maps x to a mean score.
template <class ScoreFn>
RefineResult refine_1d_fn(ScoreFn&& score, double lo, double hi, int budget, bool maximize) {
  require(budget >= 3, "budget", "must be at least 3");
  require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, "range", "need finite lo < hi");
  std::map<double, double> s;
  RefineResult r;
  auto eval = [&](double x) {
    s[x] = score(x);
    ++r.evaluations;
  };
  eval(lo);
  eval(0.5 * (lo + hi));
  eval(hi);
  while (r.evaluations < budget) {
    double best_w = 0.0, pick = 0.0;
    bool found = false;
    for (auto it = s.begin(), nx = std::next(it); nx != s.end(); ++it, ++nx) {
      const double w = nx->first - it->first;
      if (it->second == nx->second || w < kRefineMinWidth) continue;
      if (!found || w > best_w) {
        found = true;
        best_w = w;
        pick = 0.5 * (it->first + nx->first);
      }
    }
    if (!found) break;
    eval(pick);
  }
  r.samples.assign(s.begin(), s.end());
  bool first = true;
  for (const auto& [x, v] : r.samples) {
    if (first || better_score(v, {x}, r.best_score, {r.best_x}, maximize)) {
      r.best_x = x;
      r.best_score = v;
      first = false;
    }
  }
  for (std::size_t i = 0; i < r.samples.size();) {
    std::size_t j = i;
    while (j + 1 < r.samples.size() && r.samples[j + 1].second == r.samples[i].second) ++j;
    if (j > i) r.plateaus.emplace_back(r.samples[i].first, r.samples[j].first, r.samples[i].second);
    i = j + 1;
  }
  return r;
}

/// Refinement of the mean score over `instances` along the task's scalar
/// parameter (alpha for M1/M2, sigma for ssl, lambda for logreg).
inline RefineResult refine_1d(std::span<const AnyInstance> instances, const TuneConfig& cfg,
                              double lo, double hi, int budget) {
  const SampleShape shape = check_sample(instances, cfg.task);
  require(cfg.task != Task::ClusteringM3, "task", "refinement needs a scalar-parameter task");
  const std::vector<double> beta =
      cfg.beta ? *cfg.beta : uniform_simplex_point(static_cast<std::size_t>(std::max(1, shape.L)));
  if (cfg.task == Task::ClusteringM1 || cfg.task == Task::ClusteringM2) {
    require(lo >= kAlphaGuard || hi <= -kAlphaGuard, "range", "must not contain alpha = 0");
  }
  if (cfg.task == Task::Ssl) require(lo > 0.0, "range", "sigma must be positive");
  std::vector<ParamPoint> seen;
  std::vector<std::vector<double>> rows;
  auto score = [&](double x) {
    const ParamPoint p = scalar_param(cfg.task, x, beta);
    std::vector<double> row(instances.size());
    parallel_for(
        instances.size(), [&](std::size_t i) { row[i] = evaluate(instances[i], p, cfg); }, cfg.threads);
    seen.push_back(p);
    rows.push_back(row);
    return mean(row);
  };
  RefineResult r = refine_1d_fn(score, lo, hi, budget, maximizes(cfg.task));
  // Table in parameter order.
  std::vector<std::size_t> order(seen.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](auto a, auto b) { return param_key(seen[a]) < param_key(seen[b]); });
  std::vector<ParamPoint> grid;
  std::vector<std::vector<double>> table;
  for (auto i : order) {
    grid.push_back(seen[i]);
    table.push_back(rows[i]);
  }
  r.result = select_best(grid, table, maximizes(cfg.task));
  r.result.method = "refine";
  r.result.bound_report = bound_for(cfg.task, shape, cfg);
  return r;
}

// ---------------------------------------------------------------------------
// Uniform convergence study

struct GeneratorConfig {
  int n = 6;
  int L = 1;
  int k = 2;
  double R = 1.0;
  ClusteringGenerator kind = ClusteringGenerator::UniformSmooth;
  // ssl only
  int n_labeled = 2;
  int n_unlabeled = 4;
};

inline AnyInstance generate_instance(Task task, const GeneratorConfig& g, std::uint64_t seed) {
  if (is_clustering(task)) return gen_clustering(seed, g.n, g.L, g.k, g.R, g.kind);
  if (task == Task::Ssl) return gen_ssl(seed, g.n_labeled, g.n_unlabeled, g.L, g.R);
  throw InvalidArgument("task", "convergence study supports clustering and ssl tasks");
}

struct ConvergenceRow {
  std::size_t N = 0;
  double sup_gap = 0.0;
  double theory_gap = 0.0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  double pdim = 0.0;
  double delta = 0.05;
};

/// Derived per-instance seed so train and fresh samples never collide.
inline std::uint64_t instance_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::uint64_t z = seed ^ (stream * 0x9E3779B97F4A7C15ULL) ^ (index * 0xBF58476D1CE4E5B9ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// sup over grid points of |mean over the first N train instances - mean over
/// M fresh instances|, for each N. With `fresh_is_train` the fresh set is the
/// first fresh_M train instances.
inline ConvergenceReport convergence_report(const TuneConfig& cfg, const GeneratorConfig& gen,
                                            const std::vector<std::size_t>& N_list,
                                            std::size_t fresh_M, const std::vector<ParamPoint>& grid,
                                            double delta = 0.05, bool fresh_is_train = false) {
  require(!N_list.empty(), "N_list", "must be nonempty");
  for (std::size_t i = 0; i < N_list.size(); ++i) {
    require(N_list[i] >= 1, "N_list", "entries must be positive");
    if (i > 0) require(N_list[i] > N_list[i - 1], "N_list", "must be increasing");
  }
  require(fresh_M >= 1, "fresh_M", "must be positive");
  require(!grid.empty(), "grid", "must be nonempty");
  const std::size_t n_train = std::max(N_list.back(), fresh_is_train ? fresh_M : std::size_t{0});
  std::vector<AnyInstance> train, fresh;
  for (std::size_t i = 0; i < n_train; ++i)
    train.push_back(generate_instance(cfg.task, gen, instance_seed(cfg.seed, 1, i)));
  if (!fresh_is_train)
    for (std::size_t i = 0; i < fresh_M; ++i)
      fresh.push_back(generate_instance(cfg.task, gen, instance_seed(cfg.seed, 2, i)));
  const auto train_table = score_table(train, grid, cfg);
  const auto fresh_table =
      fresh_is_train ? train_table : score_table(fresh, grid, cfg);
  std::vector<double> fresh_mean(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g)
    fresh_mean[g] = mean(std::span<const double>(fresh_table[g]).first(fresh_M));
  ConvergenceReport rep;
  rep.delta = delta;
  const SampleShape shape = shape_of(train.front());
  const auto bound = bound_for(cfg.task, shape, cfg);
  rep.pdim = bound ? bound->pdim_bound : 0.0;
  for (std::size_t N : N_list) {
    double sup = 0.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double m = mean(std::span<const double>(train_table[g]).first(N));
      sup = std::max(sup, std::abs(m - fresh_mean[g]));
    }
    rep.rows.push_back({N, sup, generalization_gap(rep.pdim, 1.0, static_cast<double>(N), delta)});
  }
  return rep;
}

}  // namespace ddtune

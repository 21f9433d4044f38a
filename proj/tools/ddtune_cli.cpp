// ddtune: instance generation, batch and online tuning, dispersion studies,
// regularization-path studies and bound calculation.
//
// Exit codes: 0 success, 2 invalid arguments or config, 1 runtime error.

#include "ddtune/acceptance.hpp"
#include "ddtune/ddtune.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>

namespace {

using namespace ddtune;

struct Global {
  std::string format = "csv";
  int threads = 0;
  std::string out = "-";
};

/// Relative output paths are placed under $DDTUNE_OUTPUT_DIR when it is set.
std::string resolve_output(const std::string& path) {
  if (path == "-" || path.empty() || path.front() == '/') return path;
  if (const char* dir = std::getenv("DDTUNE_OUTPUT_DIR"); dir && *dir)
    return std::string(dir) + "/" + path;
  return path;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    const std::string p = resolve_output(path);
    if (p == "-") return;
    file_ = std::make_unique<std::ofstream>(p);
    if (!*file_) throw Error("cannot write '" + p + "'");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::vector<double> parse_list(const std::string& s, const std::string& field) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw InvalidArgument(field, "not a number: '" + tok + "'");
    }
  }
  require(!out.empty(), field, "list is empty");
  return out;
}

void write_json(const Global& g, const json& body) {
  Output out(g.out);
  out.stream() << body.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
  std::string task;
  std::uint64_t seed = 0;
  int n = 6, L = 1, k = 2;
  double R = 1.0;
  std::string generator = "uniform";
  int n_labeled = 2, n_unlabeled = 4;
  int m = 50, p = 5, m_val = 50;
  double signal = 2.0, feature_scale = 1.0;

  json config() const {
    json j{{"task", task}, {"seed", seed}};
    if (task == "clustering") j.update({{"n", n}, {"L", L}, {"k", k}, {"R", R}, {"generator", generator}});
    if (task == "ssl") j.update({{"n_labeled", n_labeled}, {"n_unlabeled", n_unlabeled}, {"L", L}, {"R", R}});
    if (task == "logreg")
      j.update({{"m", m}, {"p", p}, {"m_val", m_val}, {"signal", signal}, {"feature_scale", feature_scale}});
    return j;
  }
};

ClusteringGenerator parse_generator(const std::string& s) {
  if (s == "uniform") return ClusteringGenerator::UniformSmooth;
  if (s == "blobs") return ClusteringGenerator::PlantedBlobs;
  throw InvalidArgument("generator", "expected uniform or blobs");
}

AnyInstance generate(const GenArgs& a, std::uint64_t seed) {
  if (a.task == "clustering") return gen_clustering(seed, a.n, a.L, a.k, a.R, parse_generator(a.generator));
  if (a.task == "ssl") return gen_ssl(seed, a.n_labeled, a.n_unlabeled, a.L, a.R);
  if (a.task == "logreg") return gen_logreg(seed, a.m, a.p, a.m_val, a.signal, a.feature_scale);
  throw InvalidArgument("task", "expected clustering, ssl or logreg");
}

void add_generator_flags(CLI::App* c, GenArgs& a, bool with_task) {
  if (with_task)
    c->add_option("--task", a.task, "clustering | ssl | logreg")
        ->required()
        ->check(CLI::IsMember({"clustering", "ssl", "logreg"}));
  c->add_option("--n", a.n, "Points per clustering instance");
  c->add_option("--L", a.L, "Number of distance matrices");
  c->add_option("--k", a.k, "Target clusters");
  c->add_option("--R", a.R, "Distance cap");
  c->add_option("--generator", a.generator, "uniform | blobs");
  c->add_option("--n-labeled", a.n_labeled, "SSL labeled points");
  c->add_option("--n-unlabeled", a.n_unlabeled, "SSL unlabeled points");
  c->add_option("--m", a.m, "Logreg training rows");
  c->add_option("--p", a.p, "Logreg features");
  c->add_option("--m-val", a.m_val, "Logreg validation rows");
  c->add_option("--signal", a.signal, "Norm of the logreg ground-truth weights");
  c->add_option("--feature-scale", a.feature_scale, "Standard deviation of logreg features");
}

int run_gen(const Global& g, const GenArgs& a) {
  const json cfg = a.config();
  const AnyInstance inst = generate(a, a.seed);
  json j = to_json(inst);
  j["meta"] = header_json(a.seed, cfg);
  write_json(g, j);
  return 0;
}

// ---------------------------------------------------------------------------
// tune-batch

struct BatchArgs {
  std::string config;
  bool per_instance = false;
};

std::vector<AnyInstance> sample_from_config(const json& j, const TuneConfig& cfg, const char* key,
                                            std::uint64_t stream) {
  std::vector<AnyInstance> out;
  if (!j.contains(key)) return out;
  const json& src = j.at(key);
  if (src.is_array()) {
    for (const auto& p : src) {
      if (!p.is_string()) throw ParseError(key, "expected a list of instance paths");
      out.push_back(load_instance(p.get<std::string>()));
    }
    return out;
  }
  if (!src.is_object()) throw ParseError(key, "expected a list of paths or a generator object");
  GenArgs a;
  a.task = is_clustering(cfg.task) ? "clustering" : cfg.task == Task::Ssl ? "ssl" : "logreg";
  const auto count = detail::field_as<int>(src, "count");
  require(count >= 1, std::string(key) + ".count", "must be at least 1");
  try {
    a.n = src.value("n", a.n);
    a.L = src.value("L", a.L);
    a.k = src.value("k", a.k);
    a.R = src.value("R", a.R);
    a.generator = src.value("generator", a.generator);
    a.n_labeled = src.value("n_labeled", a.n_labeled);
    a.n_unlabeled = src.value("n_unlabeled", a.n_unlabeled);
    a.m = src.value("m", a.m);
    a.p = src.value("p", a.p);
    a.m_val = src.value("m_val", a.m_val);
    a.signal = src.value("signal", a.signal);
    a.feature_scale = src.value("feature_scale", a.feature_scale);
  } catch (const json::exception& e) {
    throw ParseError(key, std::string("wrong type: ") + e.what());
  }
  for (int i = 0; i < count; ++i) out.push_back(generate(a, instance_seed(cfg.seed, stream, static_cast<std::uint64_t>(i))));
  return out;
}

int run_tune_batch(const Global& g, const BatchArgs& a) {
  const json j = read_json_file(a.config);
  TuneConfig cfg = tune_config_from_json(j);
  if (g.threads > 0) cfg.threads = static_cast<unsigned>(g.threads);
  std::vector<AnyInstance> train = sample_from_config(j, cfg, "instances", 1);
  if (train.empty()) train = sample_from_config(j, cfg, "generate", 1);
  if (train.empty()) throw ParseError("instances", "config needs 'instances' or 'generate'");
  const std::vector<AnyInstance> holdout = sample_from_config(j, cfg, "holdout", 2);

  TuneResult result;
  std::optional<RefineResult> refined;
  if (cfg.refine_budget > 0) {
    const AxisGrid& axis = cfg.task == Task::Ssl ? cfg.sigma : cfg.alpha;
    const double lo = cfg.task == Task::LogReg ? cfg.logreg.lam_min : axis.lo;
    const double hi = cfg.task == Task::LogReg ? cfg.logreg.lam_max : axis.hi;
    refined = refine_1d(train, cfg, lo, hi, cfg.refine_budget);
    result = refined->result;
  } else {
    UtilityCache cache;
    result = erm_tune(train, cfg, &cache);
  }
  if (!holdout.empty()) {
    check_sample(holdout, cfg.task);
    const auto row = score_table(holdout, {result.best_param}, cfg);
    result.holdout_utility = mean(row[0]);
  }

  Output out(g.out);
  if (g.format == "json") {
    json body = to_json(result, a.per_instance);
    body["header"] = header_json(cfg.seed, j);
    body["task"] = task_name(cfg.task);
    body["objective"] = objective_name(cfg.objective);
    if (cfg.task == Task::LogReg) body["surrogate"] = cfg.logreg.surrogate ? "coefficient-path" : "none (exact solver)";
    body["n_instances"] = train.size();
    if (refined) {
      json plateaus = json::array();
      for (const auto& [x0, x1, v] : refined->plateaus) plateaus.push_back({x0, x1, v});
      body["refine"] = {{"evaluations", refined->evaluations}, {"plateaus", plateaus}};
    }
    out.stream() << body.dump(2) << '\n';
    return 0;
  }
  CsvWriter w(out.stream());
  w.header(cfg.seed, j);
  std::vector<std::string> cols;
  for (const auto& [k, v] : param_fields(result.best_param)) cols.push_back(k);
  cols.emplace_back(result.maximize ? "mean_utility" : "mean_loss");
  cols.emplace_back("n_instances");
  if (a.per_instance)
    for (std::size_t i = 0; i < train.size(); ++i) cols.push_back("instance_" + std::to_string(i));
  w.columns(cols);
  for (const auto& row : result.utility_table) {
    for (const auto& [k, v] : param_fields(row.param)) w.cell(v);
    w.cell(row.mean).cell(train.size());
    if (a.per_instance)
      for (double v : row.per_instance) w.cell(v);
    w.end_row();
  }
  std::cerr << "best " << param_to_json(result.best_param).dump() << " train " << fmt17(result.train_utility)
            << (result.holdout_utility ? " holdout " + fmt17(*result.holdout_utility) : "") << " method "
            << result.method << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// tune-online

struct OnlineArgs {
  std::string task = "clustering-M1";
  std::size_t T = 500;
  std::uint64_t seed = 0;
  int grid_points = 200;
  std::optional<double> lo, hi;
  std::optional<double> eta;
  std::string penalty = "l2";
  double h_loss = 3.0;
  std::size_t audit_stride = 1;
  GenArgs gen;
};

int run_tune_online(const Global& g, const OnlineArgs& a) {
  const Task task = parse_task(a.task);
  json cfg{{"task", a.task}, {"T", a.T}, {"seed", a.seed}, {"grid_points", a.grid_points}};
  if (a.lo) cfg["lo"] = *a.lo;
  if (a.hi) cfg["hi"] = *a.hi;
  if (a.eta) cfg["eta"] = *a.eta;
  require(a.T >= 1, "T", "must be positive");
  OnlineRun run;
  json extra;
  if (task == Task::LogReg) {
    GenArgs gen = a.gen;
    gen.task = "logreg";
    cfg["generator"] = gen.config();
    OnlineLogRegOptions opt;
    opt.lam_min = a.lo.value_or(0.1);
    opt.lam_max = a.hi.value_or(1.1);
    opt.penalty = parse_penalty(a.penalty);
    opt.H_loss = a.h_loss;
    opt.audit_stride = a.audit_stride;
    opt.eta = a.eta;
    opt.threads = g.threads;
    cfg.update({{"penalty", a.penalty}, {"h_loss", a.h_loss}, {"audit_stride", a.audit_stride}});
    auto stream = [&](std::size_t t) {
      return std::get<LogRegInstance>(generate(gen, instance_seed(a.seed, 0, t)));
    };
    const auto res = online_logreg_run(stream, a.T, a.seed, opt);
    run = res.surrogate;
    extra = {{"eps", res.eps},
             {"r", res.r},
             {"surrogate", "loss-interpolation"},
             {"clip_events", run.clip_events},
             {"audited_rounds", res.audit_rounds.size()},
             {"audit_surrogate_regret", res.audit_surrogate_regret},
             {"audit_true_regret", res.audit_true_regret}};
    if (!res.audit_gap.empty()) {
      extra["audit_max_grid_gap"] = *std::max_element(res.audit_gap.begin(), res.audit_gap.end());
      extra["audit_max_knot_gap"] = *std::max_element(res.audit_knot_gap.begin(), res.audit_knot_gap.end());
    }
    extra["regret_scale"] = logreg_regret_scale(a.T, opt.lam_min, opt.lam_max);
  } else {
    require(task != Task::ClusteringM3, "task", "online tuning needs a scalar parameter");
    require(a.grid_points >= 1, "grid-points", "must be at least 1");
    GenArgs gen = a.gen;
    gen.task = task == Task::Ssl ? "ssl" : "clustering";
    cfg["generator"] = gen.config();
    const double lo = a.lo.value_or(task == Task::Ssl ? 0.05 : 0.5);
    const double hi = a.hi.value_or(task == Task::Ssl ? 5.0 : 4.0);
    require(std::isfinite(lo) && std::isfinite(hi) && lo <= hi, "lo", "need finite lo <= hi");
    const std::vector<double> beta = uniform_simplex_point(static_cast<std::size_t>(gen.L));
    std::vector<ParamPoint> grid;
    for (int i = 0; i < a.grid_points; ++i) {
      const double t = a.grid_points == 1 ? 0.0 : static_cast<double>(i) / (a.grid_points - 1);
      double x = task == Task::Ssl ? std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)))
                                   : lo + t * (hi - lo);
      if (task == Task::Ssl) require(lo > 0.0, "lo", "sigma must be positive");
      else validate_scalar_alpha(x, "lo");
      grid.push_back(scalar_param(task, x, beta));
    }
    TuneConfig tc;
    tc.task = task;
    tc.threads = static_cast<unsigned>(std::max(0, g.threads));
    auto stream = [&](std::size_t t) { return generate(gen, instance_seed(a.seed, 0, t)); };
    run = hedge_run(stream, a.T, tc, grid, a.eta, a.seed);
  }
  Output out(g.out);
  if (g.format == "json") {
    json body{{"header", header_json(a.seed, cfg)},
              {"T", run.T},
              {"eta", run.eta},
              {"regret", run.regret()},
              {"expected_regret", run.expected_regret()},
              {"best_param", param_to_json(run.grid[run.best_index])},
              {"direction", run.maximize ? "maximize" : "minimize"},
              {"regret_trace", run.regret_trace}};
    if (!extra.is_null()) body["logreg"] = extra;
    out.stream() << body.dump(2) << '\n';
    return 0;
  }
  CsvWriter w(out.stream());
  w.header(a.seed, cfg);
  w.columns({"t", run.maximize ? "cum_utility" : "cum_loss", "cum_best", "regret"});
  for (std::size_t t = 0; t < run.regret_trace.size(); ++t) {
    w.cell(t + 1).cell(run.cum_score[t]).cell(run.cum_best[t]).cell(run.regret_trace[t]);
    w.end_row();
  }
  return 0;
}

// ---------------------------------------------------------------------------
// bounds

struct BoundsArgs {
  std::string family;
  int n = 0, L = 1;
  std::optional<int> n_unlabeled;
  std::string formula;
  std::string d, q, M, Delta, K, k_F, k_G, n_regions;
  std::optional<double> N, gap;
  double delta = 0.05, H = 1.0;
};

BigInt big_arg(const std::string& s, const char* field) {
  require(!s.empty(), field, "is required for this formula");
  try {
    const BigInt v(s);
    require(v >= 0, field, "must be a nonnegative integer");
    return v;
  } catch (const std::runtime_error&) {
    throw InvalidArgument(field, "not an integer: '" + s + "'");
  }
}

int run_bounds(const Global& g, const BoundsArgs& a) {
  BoundReport rep;
  std::optional<PfaffianParams> params;
  json cfg;
  if (!a.family.empty()) {
    require(a.n > 0, "n", "--n is required with --family");
    params = family_params(parse_bound_family(a.family), a.n, a.L, a.n_unlabeled);
    rep = piecewise_report(*params);
    cfg = {{"family", a.family}, {"n", a.n}, {"L", a.L}};
    if (a.n_unlabeled) cfg["n_unlabeled"] = *a.n_unlabeled;
  } else {
    require(!a.formula.empty(), "family", "either --family or --formula is required");
    cfg = {{"formula", a.formula}};
    const BigInt d = big_arg(a.d, "d"), q = big_arg(a.q, "q"), M = big_arg(a.M, "M"),
                 D = big_arg(a.Delta, "Delta");
    rep.inputs = {{"d", a.d}, {"q", a.q}, {"M", a.M}, {"Delta", a.Delta}};
    if (a.formula == "gj") {
      rep.pdim_bound = pdim_pfaffian_gj(d, q, M, D, big_arg(a.K, "K"));
      rep.inputs["K"] = a.K;
      rep.formula_name = "pdim_pfaffian_gj";
    } else if (a.formula == "piecewise") {
      rep.pdim_bound = pdim_piecewise(d, q, M, D, big_arg(a.k_F, "k_F"), big_arg(a.k_G, "k_G"));
      rep.inputs.update({{"k_F", a.k_F}, {"k_G", a.k_G}});
      rep.formula_name = "pdim_piecewise";
    } else if (a.formula == "partition") {
      rep.pdim_bound = pdim_partition(d, q, M, D, big_arg(a.n_regions, "n_regions"));
      rep.inputs["n_regions"] = a.n_regions;
      rep.formula_name = "pdim_partition";
      rep.note = "x C, C unspecified in source";
    } else if (a.formula == "prior") {
      rep.pdim_bound = pdim_prior_framework(d, q, M, D, big_arg(a.k_G, "k_G"));
      rep.inputs["k_G"] = a.k_G;
      rep.formula_name = "pdim_prior_framework";
      rep.note = "x C, C unspecified in source";
    } else {
      throw InvalidArgument("formula", "expected gj, piecewise, partition or prior");
    }
    cfg["inputs"] = rep.inputs;
  }
  json body = to_json(rep);
  if (a.N) {
    body["generalization_gap"] = generalization_gap(rep.pdim_bound, a.H, *a.N, a.delta);
    body["gap_note"] = "x C, C unspecified in source";
  }
  if (a.gap) body["sample_complexity"] = sample_complexity(rep.pdim_bound, a.H, *a.gap, a.delta);
  Output out(g.out);
  if (g.format == "json") {
    body["header"] = header_json(0, cfg);
    out.stream() << body.dump(2) << '\n';
    return 0;
  }
  CsvWriter w(out.stream());
  w.header(0, cfg);
  std::vector<std::string> cols{"formula", "pdim_bound", "log_base"};
  for (const auto& [k, v] : rep.inputs.items()) cols.push_back(k);
  if (body.contains("generalization_gap")) cols.emplace_back("generalization_gap");
  if (body.contains("sample_complexity")) cols.emplace_back("sample_complexity");
  cols.emplace_back("note");
  w.columns(cols);
  w.cell(rep.formula_name).cell(rep.pdim_bound).cell(rep.log_base);
  for (const auto& [k, v] : rep.inputs.items()) {
    if (k == "note") continue;
    w.cell(v.is_string() ? v.get<std::string>() : v.dump());
  }
  if (body.contains("generalization_gap")) w.cell(body["generalization_gap"].get<double>());
  if (body.contains("sample_complexity")) w.cell(body["sample_complexity"].get<std::uint64_t>());
  w.cell(rep.note);
  w.end_row();
  return 0;
}

// ---------------------------------------------------------------------------
// dispersion

struct DispersionArgs {
  std::size_t T = 500;
  std::uint64_t seed = 0;
  double lo = 0.5, hi = 4.0;
  std::string eps = "0.01,0.02,0.04";
  std::size_t resolution = 1000;
  std::optional<double> fixed_jump;
  GenArgs gen;
};

int run_dispersion(const Global& g, const DispersionArgs& a) {
  const auto eps = parse_list(a.eps, "eps");
  GenArgs gen = a.gen;
  gen.task = "clustering";
  require(a.lo > 0.0 && a.lo < a.hi, "lo", "need 0 < lo < hi");
  json cfg{{"T", a.T}, {"seed", a.seed}, {"lo", a.lo}, {"hi", a.hi}, {"eps", eps}, {"resolution", a.resolution}};
  std::vector<std::vector<double>> locs;
  if (a.fixed_jump) {
    const double at = *a.fixed_jump;
    require(at > a.lo && at < a.hi, "fixed-jump", "must lie inside (lo, hi)");
    cfg["fixed_jump"] = at;
    for (std::size_t t = 0; t < a.T; ++t)
      locs.push_back(locate_discontinuities([at](double x) { return x < at ? 0.0 : 1.0; }, a.lo, a.hi, a.resolution));
  } else {
    cfg["generator"] = gen.config();
    auto stream = [&](std::size_t t) {
      return std::get<ClusteringInstance>(generate(gen, instance_seed(a.seed, 0, t)));
    };
    locs = clustering_jump_stream(stream, a.T, a.lo, a.hi, a.resolution, g.threads);
  }
  const auto rep = estimate_dispersion(std::move(locs), eps);
  Output out(g.out);
  if (g.format == "json") {
    json body{{"header", header_json(a.seed, cfg)},
              {"T", rep.T},
              {"eps", rep.eps_list},
              {"max_count", rep.max_count},
              {"ratio", rep.ratio},
              {"locations", rep.locations}};
    out.stream() << body.dump(2) << '\n';
    return 0;
  }
  CsvWriter w(out.stream());
  w.header(a.seed, cfg);
  w.columns({"eps", "max_count", "ratio"});
  for (std::size_t i = 0; i < rep.eps_list.size(); ++i) {
    w.cell(rep.eps_list[i]).cell(rep.max_count[i]).cell(rep.ratio[i]);
    w.end_row();
  }
  return 0;
}

// ---------------------------------------------------------------------------
// path-study

struct PathArgs {
  std::uint64_t seed = 1;
  std::string penalty = "both";
  double lam_min = 0.1, lam_max = 1.1;
  int stride = 1;
  GenArgs gen;
};

int run_path_study(const Global& g, const PathArgs& a) {
  GenArgs gen = a.gen;
  gen.task = "logreg";
  require(a.lam_min == 0.1 && a.lam_max == 1.1, "lambda", "the study fixes lambda in [0.1, 1.1]");
  const auto inst = std::get<LogRegInstance>(generate(gen, a.seed));
  std::vector<Penalty> pens;
  if (a.penalty == "both") pens = {Penalty::L2, Penalty::L1};
  else pens = {parse_penalty(a.penalty)};
  json cfg{{"seed", a.seed}, {"penalty", a.penalty}, {"stride", a.stride}, {"generator", gen.config()}};
  std::vector<std::pair<Penalty, acceptance::PathAccuracy>> rows;
  for (Penalty p : pens) rows.emplace_back(p, acceptance::path_accuracy(inst, p, a.stride, g.threads));
  Output out(g.out);
  if (g.format == "json") {
    json body{{"header", header_json(a.seed, cfg)}, {"results", json::array()}};
    for (const auto& [p, r] : rows)
      body["results"].push_back({{"penalty", penalty_name(p)},
                                 {"eps", r.eps},
                                 {"max_error", r.E},
                                 {"slope", r.slope},
                                 {"ratio", r.ratio},
                                 {"within_band", r.pass}});
    out.stream() << body.dump(2) << '\n';
    return 0;
  }
  CsvWriter w(out.stream());
  w.header(a.seed, cfg);
  w.columns({"penalty", "eps", "max_error", "slope", "ratio"});
  for (const auto& [p, r] : rows)
    for (std::size_t i = 0; i < r.eps.size(); ++i) {
      w.cell(penalty_name(p)).cell(r.eps[i]).cell(r.E[i]).cell(r.slope).cell(r.ratio);
      w.end_row();
    }
  return 0;
}

// ---------------------------------------------------------------------------
// convergence

struct ConvergenceArgs {
  std::string task = "clustering-M1";
  std::uint64_t seed = 0;
  std::string N = "50,200,800";
  std::size_t fresh = 1000;
  double delta = 0.05;
  GenArgs gen;
};

int run_convergence(const Global& g, const ConvergenceArgs& a) {
  TuneConfig cfg;
  cfg.task = parse_task(a.task);
  cfg.seed = a.seed;
  cfg.threads = static_cast<unsigned>(std::max(0, g.threads));
  cfg.alpha.include_inf = false;
  GeneratorConfig gc;
  gc.n = a.gen.n;
  gc.L = a.gen.L;
  gc.k = a.gen.k;
  gc.R = a.gen.R;
  gc.kind = parse_generator(a.gen.generator);
  gc.n_labeled = a.gen.n_labeled;
  gc.n_unlabeled = a.gen.n_unlabeled;
  std::vector<std::size_t> Ns;
  for (double v : parse_list(a.N, "N")) {
    require(v >= 1 && v == std::floor(v), "N", "entries must be positive integers");
    Ns.push_back(static_cast<std::size_t>(v));
  }
  const int L = is_clustering(cfg.task) || cfg.task == Task::Ssl ? gc.L : 1;
  const auto grid = make_grid(cfg, L);
  const auto rep = convergence_report(cfg, gc, Ns, a.fresh, grid, a.delta);
  json jcfg{{"task", a.task}, {"seed", a.seed}, {"N", Ns}, {"fresh", a.fresh}, {"delta", a.delta},
            {"n", gc.n}, {"L", gc.L}, {"k", gc.k}, {"grid_points", grid.size()}};
  Output out(g.out);
  if (g.format == "json") {
    json rows = json::array();
    for (const auto& r : rep.rows) rows.push_back({{"N", r.N}, {"sup_gap", r.sup_gap}, {"theory_gap", r.theory_gap}});
    out.stream() << json{{"header", header_json(a.seed, jcfg)}, {"pdim", rep.pdim}, {"rows", rows},
                         {"theory_note", "unit constant; x C, C unspecified in source"}}
                        .dump(2)
                 << '\n';
    return 0;
  }
  CsvWriter w(out.stream());
  w.header(a.seed, jcfg);
  w.columns({"N", "sup_gap", "theory_gap"});
  for (const auto& r : rep.rows) {
    w.cell(r.N).cell(r.sup_gap).cell(r.theory_gap);
    w.end_row();
  }
  return 0;
}

// ---------------------------------------------------------------------------
// acceptance

struct AcceptanceArgs {
  acceptance::Options opt;
  std::vector<int> only;
};

int run_acceptance(const Global& g, AcceptanceArgs a) {
  a.opt.threads = g.threads;
  const auto results = acceptance::run_suite(a.opt, a.only);
  bool all = true;
  for (const auto& r : results) all = all && r.pass;
  Output out(g.out);
  if (g.format == "json") {
    json rows = json::array();
    for (const auto& r : results)
      rows.push_back({{"id", r.id}, {"name", r.name}, {"measured", r.measured}, {"threshold", r.threshold},
                      {"pass", r.pass}, {"seconds", r.seconds}, {"detail", r.detail}, {"info", r.info}});
    out.stream() << json{{"header", header_json(a.opt.seed, {{"path_stride", a.opt.path_stride}})},
                         {"criteria", rows}, {"all_pass", all}}
                        .dump(2)
                 << '\n';
  } else {
    CsvWriter w(out.stream());
    w.header(a.opt.seed, {{"path_stride", a.opt.path_stride}});
    w.columns({"id", "name", "measured", "threshold", "pass", "seconds", "detail"});
    for (const auto& r : results) {
      w.cell(r.id).cell(r.name).cell(r.measured).cell(r.threshold).cell(r.pass).cell(r.seconds).cell(r.detail);
      w.end_row();
    }
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ddtune: data-driven hyperparameter tuning for linkage clustering, graph SSL and "
               "regularized logistic regression"};
  app.set_version_flag("--version", std::string(ddtune::kVersion));
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--out", g.out, "Output file ('-' for stdout)");

  GenArgs gen_args;
  auto* gen = app.add_subcommand("gen", "Generate a problem instance as JSON");
  add_generator_flags(gen, gen_args, true);
  gen->add_option("--seed", gen_args.seed, "Generator seed");

  BatchArgs batch_args;
  auto* batch = app.add_subcommand("tune-batch", "Grid (or refined / exact M1) ERM over a sample of instances");
  batch->add_option("--config", batch_args.config, "Tuning config JSON")->required()->check(CLI::ExistingFile);
  batch->add_flag("--per-instance", batch_args.per_instance, "Add per-instance score columns");

  OnlineArgs online_args;
  auto* online = app.add_subcommand("tune-online", "Exponentially weighted forecaster on an instance stream");
  online->add_option("--task", online_args.task, "clustering-M1 | clustering-M2 | ssl | logreg");
  online->add_option("--T", online_args.T, "Rounds");
  online->add_option("--seed", online_args.seed, "Stream and sampling seed");
  online->add_option("--grid-points", online_args.grid_points, "Grid size (clustering, ssl)");
  online->add_option("--lo", online_args.lo, "Parameter range start (alpha, sigma or lambda_min)");
  online->add_option("--hi", online_args.hi, "Parameter range end");
  online->add_option("--eta", online_args.eta, "Learning rate (default sqrt(8 ln N / T))");
  online->add_option("--penalty", online_args.penalty, "l1 | l2 (logreg)");
  online->add_option("--h-loss", online_args.h_loss, "Loss clipping level (logreg)");
  online->add_option("--audit-stride", online_args.audit_stride, "True-loss audit every k-th round, 0 = off");
  add_generator_flags(online, online_args.gen, false);

  BoundsArgs bounds_args;
  auto* bounds = app.add_subcommand("bounds", "Pseudo-dimension bound for a cataloged family or explicit inputs");
  bounds->add_option("--family", bounds_args.family, "H1 | H2 | H3 | G");
  bounds->add_option("--n", bounds_args.n, "Points per instance");
  bounds->add_option("--L", bounds_args.L, "Number of metrics");
  bounds->add_option("--n-unlabeled", bounds_args.n_unlabeled, "|U| for family G (default n/2)");
  bounds->add_option("--formula", bounds_args.formula, "gj | piecewise | partition | prior");
  for (auto [flag, dst] : {std::pair{"--d", &bounds_args.d}, {"--q", &bounds_args.q}, {"--M", &bounds_args.M},
                           {"--Delta", &bounds_args.Delta}, {"--K", &bounds_args.K}, {"--k-F", &bounds_args.k_F},
                           {"--k-G", &bounds_args.k_G}, {"--n-regions", &bounds_args.n_regions}})
    bounds->add_option(flag, *dst, "Integer input (arbitrary size)");
  bounds->add_option("--N", bounds_args.N, "Sample size for the generalization gap");
  bounds->add_option("--gap", bounds_args.gap, "Target gap for the sample complexity");
  bounds->add_option("--delta", bounds_args.delta, "Failure probability");
  bounds->add_option("--H", bounds_args.H, "Utility range");

  DispersionArgs disp_args;
  auto* disp = app.add_subcommand("dispersion", "Empirical dispersion of M1 clustering utilities over alpha");
  disp->add_option("--T", disp_args.T, "Rounds");
  disp->add_option("--seed", disp_args.seed, "Stream seed");
  disp->add_option("--lo", disp_args.lo, "alpha_min");
  disp->add_option("--hi", disp_args.hi, "alpha_max");
  disp->add_option("--eps", disp_args.eps, "Comma-separated window widths");
  disp->add_option("--resolution", disp_args.resolution, "Scan points per round");
  disp->add_option("--fixed-jump", disp_args.fixed_jump, "Adversarial control: every round jumps here");
  add_generator_flags(disp, disp_args.gen, false);

  PathArgs path_args;
  auto* path = app.add_subcommand("path-study", "Approximate regularization path error versus step size");
  path->add_option("--seed", path_args.seed, "Instance seed");
  path->add_option("--penalty", path_args.penalty, "l1 | l2 | both");
  path->add_option("--stride", path_args.stride, "Fault injection: lambda_t = lambda_min + stride t eps")
      ->check(CLI::PositiveNumber);
  add_generator_flags(path, path_args.gen, false);

  ConvergenceArgs conv_args;
  auto* conv = app.add_subcommand("convergence", "Sup-gap between train and fresh means over the alpha grid");
  conv->add_option("--task", conv_args.task, "clustering-M1 | clustering-M2 | clustering-M3 | ssl");
  conv->add_option("--seed", conv_args.seed, "Seed");
  conv->add_option("--N", conv_args.N, "Comma-separated increasing sample sizes");
  conv->add_option("--fresh", conv_args.fresh, "Fresh sample size");
  conv->add_option("--delta", conv_args.delta, "Failure probability for the theory column");
  add_generator_flags(conv, conv_args.gen, false);

  AcceptanceArgs acc_args;
  auto* acc = app.add_subcommand("acceptance", "Run the acceptance criteria");
  acc->add_option("--only", acc_args.only, "Criterion ids");
  acc->add_option("--seed", acc_args.opt.seed, "Suite seed");
  acc->add_option("--path-stride", acc_args.opt.path_stride, "Fault injection for the path criterion")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) return run_gen(g, gen_args);
    if (*batch) return run_tune_batch(g, batch_args);
    if (*online) return run_tune_online(g, online_args);
    if (*bounds) {
      if (g.format == "csv" && app.get_option("--format")->count() == 0) g.format = "json";
      return run_bounds(g, bounds_args);
    }
    if (*disp) return run_dispersion(g, disp_args);
    if (*path) return run_path_study(g, path_args);
    if (*conv) return run_convergence(g, conv_args);
    if (*acc) return run_acceptance(g, acc_args);
  } catch (const ddtune::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

#pragma once

// The acceptance suite: each criterion is a self-contained experiment that
// reports a measured value against a pinned threshold.

#include "ddtune/online.hpp"
#include "ddtune/ssl.hpp"

#include <chrono>

namespace ddtune::acceptance {

struct Result {
  int id = 0;
  std::string name;
  double measured = 0.0;
  std::string threshold;
  bool pass = false;
  double seconds = 0.0;
  std::string detail;
  /// Informational lines that do not affect the verdict.
  std::vector<std::string> info;
};

struct Options {
  std::uint64_t seed = 20240601;
  int threads = 0;
  /// Fault injection for the path criterion: lambda_t = lambda_min + stride t eps.
  int path_stride = 1;
  /// Also print unit-feature and multi-seed path diagnostics.
  bool path_diagnostics = true;
};

namespace detail {

inline std::string num(double v, int prec = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Least-squares slope of log y on log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

inline std::uint64_t sub_seed(const Options& o, std::uint64_t criterion, std::uint64_t index) {
  return instance_seed(o.seed, criterion, index);
}

}  // namespace detail

// 1 ----------------------------------------------------------------------

inline Result piecewise_constancy(const Options& o) {
  Result r{1, "piecewise-constancy", 0.0, "non-constant gaps == 0 and time < 60 s"};
  const auto t0 = std::chrono::steady_clock::now();
  const double lo = 0.5, hi = 4.0;
  const std::vector<double> beta{1.0};
  std::size_t bad = 0, gaps = 0, roots_total = 0;
  for (int s = 0; s < 20; ++s) {
    const auto inst = gen_clustering(detail::sub_seed(o, 1, s), 6, 1, 2, 1.0,
                                     ClusteringGenerator::UniformSmooth);
    std::vector<double> edges{lo};
    const auto roots = enumerate_boundaries_m1(inst, beta, lo, hi);
    roots_total += roots.size();
    edges.insert(edges.end(), roots.begin(), roots.end());
    edges.push_back(hi);
    for (std::size_t g = 0; g + 1 < edges.size(); ++g) {
      const double a = edges[g], b = edges[g + 1];
      if (!(b > a)) continue;
      ++gaps;
      const double u0 = clustering_utility(inst, M1{a + (b - a) / 6.0}, beta);
      for (int j = 2; j <= 5; ++j)
        if (clustering_utility(inst, M1{a + (b - a) * j / 6.0}, beta) != u0) {
          ++bad;
          break;
        }
    }
  }
  r.seconds = detail::seconds_since(t0);
  r.measured = static_cast<double>(bad);
  r.pass = bad == 0 && r.seconds < 60.0;
  r.detail = std::to_string(gaps) + " gaps from " + std::to_string(roots_total) + " roots over 20 instances";
  return r;
}

// 2 ----------------------------------------------------------------------

namespace detail {

inline long double g_ld(long double a, const std::array<long double, 4>& d) {
  return std::pow(d[0], a) + std::pow(d[1], a) - std::pow(d[2], a) - std::pow(d[3], a);
}

/// Bisection in long double on a bracketing interval.
inline long double bisect_ld(long double a, long double b, const std::array<long double, 4>& d) {
  long double ga = g_ld(a, d);
  for (int i = 0; i < 200 && b - a > 1e-15L; ++i) {
    const long double m = 0.5L * (a + b);
    const long double gm = g_ld(m, d);
    if ((gm > 0) == (ga > 0) && gm != 0) {
      a = m;
      ga = gm;
    } else {
      b = m;
    }
  }
  return 0.5L * (a + b);
}

}  // namespace detail

inline Result root_uniqueness(const Options& o) {
  Result r{2, "boundary-root-uniqueness", 0.0,
           "max sign changes <= 1, root error <= 1e-8, time < 10 s"};
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(detail::sub_seed(o, 2, 0));
  // Log-uniform on [0.05, 20] so both magnitudes below and above 1 occur.
  std::uniform_real_distribution<double> logd(std::log(0.05), std::log(20.0));
  constexpr int kScan = 10000;
  constexpr double kHi = 32.0;
  int max_changes = 0, with_root = 0, missed = 0;
  double max_err = 0.0;
  for (int k = 0; k < 1000; ++k) {
    std::array<double, 4> d{};
    for (double& v : d) v = std::exp(logd(rng));
    const std::array<long double, 4> dl{d[0], d[1], d[2], d[3]};
    const std::array<double, 4> ln{std::log(d[0]), std::log(d[1]), std::log(d[2]), std::log(d[3])};
    int changes = 0, prev_sign = 0;
    double bracket_lo = 0, bracket_hi = 0;
    double prev_a = 0;
    for (int i = 1; i < kScan; ++i) {
      const double a = kHi * i / kScan;
      const double g = std::exp(a * ln[0]) + std::exp(a * ln[1]) - std::exp(a * ln[2]) - std::exp(a * ln[3]);
      const int s = (g > 0) - (g < 0);
      if (s != 0) {
        if (prev_sign != 0 && s != prev_sign) {
          ++changes;
          bracket_lo = prev_a;
          bracket_hi = a;
        }
        prev_sign = s;
        prev_a = a;
      }
    }
    max_changes = std::max(max_changes, changes);
    if (changes == 1) {
      ++with_root;
      const double truth = static_cast<double>(detail::bisect_ld(bracket_lo, bracket_hi, dl));
      const auto found = boundary_root_m1(d[0], d[1], d[2], d[3], kHi / kScan, kHi * (kScan - 1) / kScan);
      if (!found) ++missed;
      else max_err = std::max(max_err, std::abs(*found - truth));
    }
  }
  r.seconds = detail::seconds_since(t0);
  r.measured = max_err;
  r.pass = max_changes <= 1 && missed == 0 && max_err <= 1e-8 && r.seconds < 10.0;
  r.detail = "max sign changes " + std::to_string(max_changes) + ", " + std::to_string(with_root) +
             " tuples with a root, " + std::to_string(missed) + " missed";
  return r;
}

// 3 ----------------------------------------------------------------------

inline Result linkage_limits(const Options& o) {
  Result r{3, "linkage-limits", 0.0, "relative deviation <= 0.05"};
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(detail::sub_seed(o, 3, 0));
  std::uniform_real_distribution<double> dist(0.01, 1.0);
  std::uniform_int_distribution<int> size(1, 3);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int n = 6;
    Matrix d = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) d(i, j) = d(j, i) = dist(rng);
    std::vector<int> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    std::shuffle(ids.begin(), ids.end(), rng);
    const int a = size(rng), b = size(rng);
    const std::vector<int> A(ids.begin(), ids.begin() + a), B(ids.begin() + a, ids.begin() + a + b);
    double mx = 0, mn = kInf;
    for (int i : A)
      for (int j : B) {
        mx = std::max(mx, d(i, j));
        mn = std::min(mn, d(i, j));
      }
    worst = std::max(worst, std::abs(merge_distance(M2{64.0}, A, B, d) - mx) / mx);
    worst = std::max(worst, std::abs(merge_distance(M2{-64.0}, A, B, d) - mn) / mn);
  }
  r.seconds = detail::seconds_since(t0);
  r.measured = worst;
  r.pass = worst <= 0.05;
  r.detail = "100 random (A, B) pairs, |A||B| <= 9";
  return r;
}

// 4 ----------------------------------------------------------------------

inline Result harmonic_solver(const Options& o) {
  Result r{4, "harmonic-solver", 0.0,
           "max-principle slack <= 1e-10, residual <= 1e-8, hand example error <= 1e-12"};
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(detail::sub_seed(o, 4, 0));
  double worst_mp = 0.0, worst_res = 0.0;
  for (int k = 0; k < 50; ++k) {
    const int n = 4 + static_cast<int>((200 - 4) * k / 49);
    const int nl = std::max(1, n / 4);
    const auto inst = gen_ssl(rng(), nl, n - nl, 2, 1.0);
    const double sigma = std::uniform_real_distribution<double>(0.3, 2.0)(rng);
    const std::vector<double> beta{0.5, 0.5};
    const WeightedGraph g = build_rbf_graph(inst, sigma, beta);
    Vector fl(g.n_labeled);
    for (int i = 0; i < g.n_labeled; ++i) fl[i] = inst.labeled[static_cast<std::size_t>(i)].label;
    const Vector fu = harmonic_solve(g, fl);
    const double lo = fl.minCoeff(), hi = fl.maxCoeff();
    for (Eigen::Index i = 0; i < fu.size(); ++i)
      worst_mp = std::max({worst_mp, lo - fu[i], fu[i] - hi});
    // Residual recomputed from W with explicit loops.
    const int L = g.n_labeled, N = g.n();
    double res = 0.0, scale = 0.0;
    for (int u = L; u < N; ++u) {
      double deg = 0.0, rhs = 0.0, lhs = 0.0;
      for (int v = 0; v < N; ++v) deg += g.W(u, v);
      for (int v = 0; v < L; ++v) rhs += g.W(u, v) * fl[v];
      for (int v = L; v < N; ++v) lhs -= g.W(u, v) * fu[v - L];
      lhs += deg * fu[u - L];
      res = std::max(res, std::abs(lhs - rhs));
      scale = std::max(scale, std::abs(rhs));
    }
    worst_res = std::max(worst_res, scale > 0 ? res / scale : res);
  }
  WeightedGraph hand;
  hand.W = Matrix::Zero(3, 3);
  hand.W(0, 1) = hand.W(1, 0) = 1.0;
  hand.W(1, 2) = hand.W(2, 1) = 1.0;
  hand.n_labeled = 1;
  hand.order = {0, 1, 2};
  const Vector f = harmonic_solve(hand, Vector::Ones(1));
  const double hand_err = std::max(std::abs(f[0] - 1.0), std::abs(f[1] - 1.0));
  r.seconds = detail::seconds_since(t0);
  r.measured = std::max({worst_mp, worst_res, hand_err});
  r.pass = worst_mp <= 1e-10 && worst_res <= 1e-8 && hand_err <= 1e-12;
  r.detail = "max-principle slack " + detail::num(std::max(0.0, worst_mp)) + ", residual " +
             detail::num(worst_res) + ", hand example error " + detail::num(hand_err);
  return r;
}

// 5 ----------------------------------------------------------------------

struct PathAccuracy {
  std::vector<double> eps{0.2, 0.1, 0.05};
  std::vector<double> E;
  double slope = 0.0;
  double ratio = 0.0;
  bool pass = false;
};

/// Path fixture: m = 50, p = 5, signal 2. Features have standard deviation 12
/// so the unregularized gradient is large against lambda_max and the path
/// stays in its small-eps regime on [0.1, 1.1].
inline constexpr double kPathFeatureScale = 12.0;

inline PathAccuracy path_accuracy(const LogRegInstance& inst, Penalty penalty, int stride = 1,
                                  int threads = 0) {
  PathAccuracy out;
  const double lam_min = 0.1, lam_max = 1.1;
  constexpr int kDense = 401;
  std::vector<Vector> exact(kDense);
  auto lam_at = [&](int i) { return lam_min + (lam_max - lam_min) * i / (kDense - 1); };
  parallel_for(
      kDense,
      [&](std::size_t i) {
        exact[i] = solve_rlr(inst.X, inst.y, lam_at(static_cast<int>(i)), penalty);
      },
      threads);
  PathOptions opt;
  opt.lambda_stride = stride;
  for (double eps : out.eps) {
    const RegPath path = approx_path(inst, eps, lam_min, lam_max, penalty, opt);
    double E = 0.0;
    for (int i = 0; i < kDense; ++i)
      E = std::max(E, (path.at(lam_at(i)) - exact[static_cast<std::size_t>(i)]).norm());
    out.E.push_back(E);
  }
  out.slope = detail::loglog_slope(out.eps, out.E);
  out.ratio = out.E[2] / out.E[1];
  out.pass = out.slope >= 1.5 && out.slope <= 2.5 && out.ratio >= 0.15 && out.ratio <= 0.45;
  return out;
}

inline Result path_accuracy_criterion(const Options& o) {
  Result r{5, "path-accuracy", 0.0, "slope in [1.5, 2.5] and E(0.05)/E(0.1) in [0.15, 0.45], time < 120 s"};
  const auto t0 = std::chrono::steady_clock::now();
  const auto inst = gen_logreg(1, 50, 5, 50, 2.0, kPathFeatureScale);
  bool pass = true;
  double worst_slope_dev = 0.0;
  for (Penalty pen : {Penalty::L2, Penalty::L1}) {
    const auto a = path_accuracy(inst, pen, o.path_stride, o.threads);
    pass = pass && a.pass;
    worst_slope_dev = std::max(worst_slope_dev, std::abs(a.slope - 2.0));
    r.detail += std::string(r.detail.empty() ? "" : "; ") + penalty_name(pen) + " slope " +
                detail::num(a.slope) + " ratio " + detail::num(a.ratio) + " E(0.05) " +
                detail::num(a.E[2]);
  }
  r.seconds = detail::seconds_since(t0);
  r.measured = worst_slope_dev;
  r.pass = pass && r.seconds < 120.0;
  if (o.path_diagnostics && o.path_stride == 1) {
    const auto unit = gen_logreg(1, 50, 5, 50, 2.0);
    for (Penalty pen : {Penalty::L2, Penalty::L1}) {
      const auto a = path_accuracy(unit, pen, 1, o.threads);
      r.info.push_back(std::string("unit-variance features, ") + penalty_name(pen) + ": slope " +
                       detail::num(a.slope) + " ratio " + detail::num(a.ratio) +
                       (a.pass ? " (within band)" : " (outside band)"));
    }
    for (double scale : {1.0, kPathFeatureScale}) {
      int ok = 0;
      for (int s = 1; s <= 20; ++s) {
        const auto inst_s = gen_logreg(static_cast<std::uint64_t>(s), 50, 5, 50, 2.0, scale);
        ok += path_accuracy(inst_s, Penalty::L2, 1, o.threads).pass &&
              path_accuracy(inst_s, Penalty::L1, 1, o.threads).pass;
      }
      r.info.push_back("feature scale " + detail::num(scale) + ": " + std::to_string(ok) +
                       "/20 seeds within band for both penalties");
    }
  }
  return r;
}

// 6 ----------------------------------------------------------------------

inline std::vector<ParamPoint> m1_alpha_grid(std::size_t points, double lo = 0.5, double hi = 4.0) {
  std::vector<ParamPoint> grid;
  for (std::size_t i = 0; i < points; ++i)
    grid.emplace_back(LinkageScalarParam{
        lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1), {1.0}});
  return grid;
}

inline Result uniform_convergence(const Options& o) {
  Result r{6, "uniform-convergence", 0.0,
           ">= 8/10 replicates with quadrupling ratio 4^slope in [0.35, 0.8]"};
  const auto t0 = std::chrono::steady_clock::now();
  TuneConfig cfg;
  cfg.task = Task::ClusteringM1;
  cfg.threads = o.threads;
  GeneratorConfig gen;
  // The tuner's default alpha axis without the infinite endpoints: 100 values.
  cfg.alpha.include_inf = false;
  const auto grid = make_grid(cfg, 1);
  const std::vector<double> Ns{50, 200, 800};
  int good = 0, pairwise_good = 0, under_bound = 0;
  for (int rep = 0; rep < 10; ++rep) {
    cfg.seed = detail::sub_seed(o, 6, rep);
    const auto rp = convergence_report(cfg, gen, {50, 200, 800}, 1000, grid);
    std::vector<double> gaps;
    for (const auto& row : rp.rows) gaps.push_back(row.sup_gap);
    // Per-quadrupling factor from the log-log fit over all three N.
    const double ratio = std::pow(4.0, detail::loglog_slope(Ns, gaps));
    const bool ok = ratio >= 0.35 && ratio <= 0.8;
    good += ok;
    const double r1 = gaps[1] / gaps[0], r2 = gaps[2] / gaps[1];
    pairwise_good += r1 >= 0.35 && r1 <= 0.8 && r2 >= 0.35 && r2 <= 0.8;
    under_bound += gaps[2] <= rp.rows[2].theory_gap;
    r.detail += (rep ? " " : "ratios ") + detail::num(ratio, 3);
    r.info.push_back("replicate " + std::to_string(rep) + ": sup-gaps " + detail::num(gaps[0]) +
                     ", " + detail::num(gaps[1]) + ", " + detail::num(gaps[2]) +
                     "; adjacent ratios " + detail::num(r1, 3) + ", " + detail::num(r2, 3));
  }
  r.info.push_back(std::to_string(pairwise_good) + "/10 replicates have both adjacent ratios in [0.35, 0.8]");
  r.info.push_back(std::to_string(under_bound) + "/10 replicates under the unit-constant bound at N=800");
  r.seconds = detail::seconds_since(t0);
  r.measured = good;
  r.pass = good >= 8;
  r.detail = std::to_string(good) + "/10 replicates; " + r.detail;
  return r;
}

// 7 ----------------------------------------------------------------------

inline Result online_regret(const Options& o) {
  const double T = 2000.0;
  const double budget = 2.0 * std::sqrt(T * std::log(200.0));
  Result r{7, "online-regret", 0.0,
           "mean regret <= " + detail::num(budget) + " and regret/T at 2000 < half of that at 250"};
  const auto t0 = std::chrono::steady_clock::now();
  TuneConfig cfg;
  cfg.task = Task::ClusteringM1;
  cfg.threads = o.threads;
  const auto grid = m1_alpha_grid(200);
  double mean_long = 0.0, mean_short = 0.0;
  for (int s = 0; s < 10; ++s) {
    const std::uint64_t stream_seed = detail::sub_seed(o, 7, s);
    auto stream = [&](std::size_t t) -> AnyInstance {
      return gen_clustering(instance_seed(stream_seed, 0, t), 6, 1, 2, 1.0,
                            ClusteringGenerator::UniformSmooth);
    };
    mean_long += hedge_run(stream, 2000, cfg, grid, std::nullopt, stream_seed + 1).regret() / 10.0;
    mean_short += hedge_run(stream, 250, cfg, grid, std::nullopt, stream_seed + 2).regret() / 10.0;
  }
  const double per_long = mean_long / 2000.0, per_short = mean_short / 250.0;
  r.seconds = detail::seconds_since(t0);
  r.measured = mean_long;
  r.pass = mean_long <= budget && per_long < 0.5 * per_short;
  r.detail = "mean regret T=2000 " + detail::num(mean_long) + " (per round " + detail::num(per_long) +
             "), T=250 " + detail::num(mean_short) + " (per round " + detail::num(per_short) + ")";
  return r;
}

// 8 ----------------------------------------------------------------------

/// max over calibration instances of sup_lambda |h_eps - h| / eps^2, with the
/// coefficient-path surrogate at `eps` on a 101-point lambda grid.
inline double fit_surrogate_constant(std::uint64_t seed, std::size_t count, double eps,
                                     Penalty penalty, int threads = 0) {
  std::vector<double> ratio(count);
  parallel_for(
      count,
      [&](std::size_t i) {
        const auto inst = gen_logreg(instance_seed(seed, 0, i), 50, 5, 50, 2.0);
        const RegPath path = approx_path(inst, eps, 0.1, 1.1, penalty);
        double gap = 0.0;
        for (int k = 0; k <= 100; ++k) {
          const double lam = 0.1 + k / 100.0;
          gap = std::max(gap, std::abs(surrogate_val_loss(path, lam, inst) - true_val_loss(inst, lam, penalty)));
        }
        ratio[i] = gap / (eps * eps);
      },
      threads);
  return *std::max_element(ratio.begin(), ratio.end());
}

inline Result online_logreg(const Options& o) {
  const std::size_t T = 500;
  const double lam_min = 0.1, lam_max = 1.1;
  const double budget = 5.0 * logreg_regret_scale(T, lam_min, lam_max);
  Result r{8, "online-logreg", 0.0,
           "mean surrogate regret <= " + detail::num(budget) + " and knot gaps <= C eps^2"};
  const auto t0 = std::chrono::steady_clock::now();
  const double C = fit_surrogate_constant(detail::sub_seed(o, 8, 999), 1000, 0.2, Penalty::L2, o.threads);
  double mean_regret = 0.0, worst_knot = 0.0, worst_grid = 0.0;
  bool decomposition = true;
  double eps = 0.0;
  OnlineLogRegOptions opt;
  opt.threads = o.threads;
  for (int s = 0; s < 10; ++s) {
    const std::uint64_t stream_seed = detail::sub_seed(o, 8, s);
    auto stream = [&](std::size_t t) { return gen_logreg(instance_seed(stream_seed, 0, t), 50, 5, 50, 2.0); };
    const auto run = online_logreg_run(stream, T, stream_seed + 1, opt);
    eps = run.eps;
    mean_regret += run.surrogate.regret() / 10.0;
    const double kg = *std::max_element(run.audit_knot_gap.begin(), run.audit_knot_gap.end());
    const double gg = *std::max_element(run.audit_gap.begin(), run.audit_gap.end());
    worst_knot = std::max(worst_knot, kg);
    worst_grid = std::max(worst_grid, gg);
    decomposition = decomposition && run.audit_true_regret <=
                                         run.audit_surrogate_regret +
                                             2.0 * gg * static_cast<double>(run.audit_rounds.size()) + 1e-9;
  }
  const double limit = C * eps * eps;
  r.seconds = detail::seconds_since(t0);
  r.measured = mean_regret;
  r.pass = mean_regret <= budget && worst_knot <= limit;
  r.detail = "eps " + detail::num(eps) + ", fitted C " + detail::num(C) + ", worst knot gap " +
             detail::num(worst_knot) + " vs C eps^2 " + detail::num(limit) + ", mean regret " +
             detail::num(mean_regret);
  r.info.push_back("worst gap on the full lambda grid (interpolation included): " + detail::num(worst_grid) +
                   " = " + detail::num(worst_grid / (eps * eps)) + " eps^2");
  r.info.push_back(std::string("true-loss regret within surrogate regret + 2 gap T: ") +
                   (decomposition ? "yes" : "no"));
  return r;
}

// 9 ----------------------------------------------------------------------

inline Result dispersion_scaling(const Options& o) {
  Result r{9, "dispersion-scaling", 0.0, "max/min ratio across eps < 3 and fixed-jump count == T"};
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t T = 500;
  const std::vector<double> eps{0.01, 0.02, 0.04};
  const std::uint64_t stream_seed = detail::sub_seed(o, 9, 0);
  auto stream = [&](std::size_t t) {
    return gen_clustering(instance_seed(stream_seed, 0, t), 6, 1, 2, 1.0, ClusteringGenerator::UniformSmooth);
  };
  const auto rep = estimate_dispersion(clustering_jump_stream(stream, T, 0.5, 4.0, 1000, o.threads), eps);
  const double hi = *std::max_element(rep.ratio.begin(), rep.ratio.end());
  const double lo = *std::min_element(rep.ratio.begin(), rep.ratio.end());
  const double spread = lo > 0 ? hi / lo : kInf;
  std::vector<std::vector<double>> fixed(T);
  for (std::size_t t = 0; t < T; ++t)
    fixed[t] = locate_discontinuities([](double a) { return a < 1.7 ? 0.0 : 1.0; }, 0.5, 4.0, 1000);
  const auto ctrl = estimate_dispersion(fixed, eps);
  const bool control = std::all_of(ctrl.max_count.begin(), ctrl.max_count.end(),
                                   [&](std::size_t c) { return c == T; });
  r.seconds = detail::seconds_since(t0);
  r.measured = spread;
  r.pass = spread < 3.0 && control;
  for (std::size_t i = 0; i < eps.size(); ++i)
    r.detail += (i ? ", " : "") + std::string("eps ") + detail::num(eps[i]) + ": count " +
                std::to_string(rep.max_count[i]) + " ratio " + detail::num(rep.ratio[i]);
  r.detail += control ? "; control count = T" : "; control count != T";
  return r;
}

// 10 ---------------------------------------------------------------------

/// Reference values from tests/oracles/bounds_oracle.py (mpmath, 50 digits).
struct BoundOracle {
  const char* name;
  double value;
};
inline constexpr BoundOracle kBoundOracle[] = {
    {"gj(2,1,1,2,3)", 60.679700005769249452},
    {"piecewise H1 n=3 L=1", 3385.8982672610058646},
    {"piecewise H3 n=2 L=2", 176.06723315074621556},
    {"partition(1,10,10,10,10)", 146.54120904376098583},
    {"gj(3,5,2,1,2^400+7)", 2815.6466250649040563},
};

inline Result bound_formulas(const Options& o) {
  Result r{10, "bound-formulas", 0.0, "exact values, identity on 1e4 tuples, oracle rel. error <= 1e-12"};
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = pdim_pfaffian_gj(1, 0, 0, 1, 2) == 18.0 && pdim_pfaffian_gj(1, 0, 0, 1, 1) == 16.0;
  std::string detail_s = ok ? "18 and 16 exact" : "18/16 mismatch";
  std::mt19937_64 rng(detail::sub_seed(o, 10, 0));
  std::uniform_int_distribution<int> small(0, 50), pos(1, 50);
  int mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    const BigInt d = pos(rng), q = small(rng), M = small(rng), D = pos(rng), kF = small(rng);
    const BigInt kG = BigInt(pos(rng)) << small(rng);
    mismatches += pdim_piecewise(d, q, M, D, kF, kG) != pdim_pfaffian_gj(d, q, M, D, kF + kG);
  }
  ok = ok && mismatches == 0;
  const PfaffianParams h1 = family_params(BoundFamily::H1, 3, 1);
  const bool tuple_ok = h1.k_F == 4 && h1.k_G == 6561 && h1.q == 27 && h1.M == 2 && h1.Delta == 1 && h1.d == 2;
  ok = ok && tuple_ok;
  const PfaffianParams h3 = family_params(BoundFamily::H3, 2, 2);
  const double computed[] = {
      pdim_pfaffian_gj(2, 1, 1, 2, 3),
      pdim_piecewise(h1.d, h1.q, h1.M, h1.Delta, h1.k_F, h1.k_G),
      pdim_piecewise(h3.d, h3.q, h3.M, h3.Delta, h3.k_F, h3.k_G),
      pdim_partition(1, 10, 10, 10, 10),
      pdim_pfaffian_gj(3, 5, 2, 1, (BigInt(1) << 400) + 7),
  };
  double worst = 0.0;
  for (std::size_t i = 0; i < std::size(kBoundOracle); ++i)
    worst = std::max(worst, std::abs(computed[i] - kBoundOracle[i].value) / kBoundOracle[i].value);
  r.seconds = detail::seconds_since(t0);
  r.measured = worst;
  r.pass = ok && worst <= 1e-12 && r.seconds < 5.0;
  r.detail = detail_s + ", " + std::to_string(mismatches) + " identity mismatches, H1 tuple " +
             (tuple_ok ? "(4,6561,27,2,1,2)" : "wrong") + ", worst oracle rel. error " + detail::num(worst);
  return r;
}

// ---------------------------------------------------------------------------

using Runner = Result (*)(const Options&);

inline const std::vector<std::pair<int, Runner>>& registry() {
  static const std::vector<std::pair<int, Runner>> all{
      {1, piecewise_constancy},   {2, root_uniqueness},    {3, linkage_limits},
      {4, harmonic_solver},       {5, path_accuracy_criterion}, {6, uniform_convergence},
      {7, online_regret},         {8, online_logreg},      {9, dispersion_scaling},
      {10, bound_formulas},
  };
  return all;
}

/// Runs the selected criteria (all when `ids` is empty). A criterion that
/// throws is reported as failed; the suite continues.
inline std::vector<Result> run_suite(const Options& o, const std::vector<int>& ids = {}) {
  std::vector<Result> out;
  for (const auto& [id, fn] : registry()) {
    if (!ids.empty() && std::find(ids.begin(), ids.end(), id) == ids.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      out.push_back(fn(o));
    } catch (const std::exception& e) {
      Result r;
      r.id = id;
      r.name = "criterion-" + std::to_string(id);
      r.pass = false;
      r.seconds = detail::seconds_since(t0);
      r.detail = std::string("error: ") + e.what();
      out.push_back(r);
    }
  }
  return out;
}

inline std::string format_line(const Result& r) {
  return std::string(r.pass ? "PASS" : "FAIL") + " " + std::to_string(r.id) + " " + r.name +
         " measured=" + detail::num(r.measured, 6) + " threshold=\"" + r.threshold + "\" time=" +
         detail::num(r.seconds, 3) + "s :: " + r.detail;
}

}  // namespace ddtune::acceptance

#pragma once

// Full-information exponentially weighted forecaster over a parameter grid,
// the online logistic-regression learner, and empirical dispersion.

#include "ddtune/tune.hpp"

#include <functional>

namespace ddtune {

struct OnlineRun {
  std::size_t T = 0;
  std::vector<ParamPoint> grid;
  bool maximize = true;
  double eta = 0.0;
  /// Scale the scores were normalized by (H, or H_loss for losses).
  double H = 1.0;
  std::vector<std::size_t> choices;
  /// scores[t][g]: score of grid point g on round t, after clipping.
  std::vector<std::vector<double>> scores;
  std::vector<double> chosen_score;
  /// Expected score of the round's sampling distribution.
  std::vector<double> expected_score;
  /// cum_score[t], cum_best[t] and regret_trace[t] after rounds 0..t.
  std::vector<double> cum_score;
  std::vector<double> cum_best;
  std::vector<double> regret_trace;
  std::vector<double> expected_regret_trace;
  std::size_t best_index = 0;
  std::size_t clip_events = 0;

  double regret() const { return regret_trace.empty() ? 0.0 : regret_trace.back(); }
  double expected_regret() const {
    return expected_regret_trace.empty() ? 0.0 : expected_regret_trace.back();
  }
};

/// Default learning rate sqrt(8 ln N / T).
inline double default_eta(std::size_t grid_size, std::size_t T) {
  if (grid_size <= 1) return 0.0;
  return std::sqrt(8.0 * std::log(static_cast<double>(grid_size)) / static_cast<double>(T));
}

/// Regret of `scores` against the best fixed grid point in hindsight, in the
/// direction given by `maximize`, per prefix.
inline void fill_regret(OnlineRun& run) {
  const std::size_t G = run.grid.empty() ? (run.scores.empty() ? 0 : run.scores[0].size())
                                         : run.grid.size();
  std::vector<double> cum(G, 0.0);
  double played = 0.0, expected = 0.0;
  run.cum_score.assign(run.scores.size(), 0.0);
  run.cum_best.assign(run.scores.size(), 0.0);
  run.regret_trace.assign(run.scores.size(), 0.0);
  run.expected_regret_trace.assign(run.scores.size(), 0.0);
  for (std::size_t t = 0; t < run.scores.size(); ++t) {
    for (std::size_t g = 0; g < G; ++g) cum[g] += run.scores[t][g];
    played += run.chosen_score[t];
    expected += run.expected_score[t];
    std::size_t best = 0;
    for (std::size_t g = 1; g < G; ++g)
      if (run.maximize ? cum[g] > cum[best] : cum[g] < cum[best]) best = g;
    run.cum_score[t] = played;
    run.cum_best[t] = cum[best];
    run.regret_trace[t] = run.maximize ? cum[best] - played : played - cum[best];
    run.expected_regret_trace[t] = run.maximize ? cum[best] - expected : expected - cum[best];
    run.best_index = best;
  }
}

/// Hedge over `G` actions. `round_scores(t)` returns the full-information
/// score vector of round t; scores outside [0, H] are clipped and counted.
inline OnlineRun hedge_play(std::size_t T, std::size_t G,
                            const std::function<std::vector<double>(std::size_t)>& round_scores,
                            bool maximize, double H, std::optional<double> eta, std::uint64_t seed) {
  require(T >= 1, "T", "must be positive");
  require(G >= 1, "grid", "must be nonempty");
  require(std::isfinite(H) && H > 0.0, "H", "must be positive");
  OnlineRun run;
  run.T = T;
  run.maximize = maximize;
  run.H = H;
  run.eta = eta.value_or(default_eta(G, T));
  require(std::isfinite(run.eta) && run.eta >= 0.0, "eta", "must be nonnegative");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // Log-weights; the update is additive so no renormalization drift.
  std::vector<double> logw(G, 0.0);
  std::vector<double> prob(G);
  for (std::size_t t = 0; t < T; ++t) {
    const double lse = log_sum_exp(logw);
    for (std::size_t g = 0; g < G; ++g) prob[g] = std::exp(logw[g] - lse);
    const double u = unit(rng);
    std::size_t choice = G - 1;
    double acc = 0.0;
    for (std::size_t g = 0; g < G; ++g) {
      acc += prob[g];
      if (u < acc) {
        choice = g;
        break;
      }
    }
    std::vector<double> s = round_scores(t);
    require(s.size() == G, "round_scores", "score vector length must equal the grid size");
    for (double& v : s) {
      if (std::isnan(v)) throw NumericalError("round " + std::to_string(t) + " produced a NaN score");
      if (v > H || v < 0.0) {
        v = std::clamp(v, 0.0, H);
        ++run.clip_events;
      }
    }
    double expected = 0.0;
    for (std::size_t g = 0; g < G; ++g) expected += prob[g] * s[g];
    run.choices.push_back(choice);
    run.chosen_score.push_back(s[choice]);
    run.expected_score.push_back(expected);
    const double dir = maximize ? 1.0 : -1.0;
    for (std::size_t g = 0; g < G; ++g) logw[g] += dir * run.eta * s[g] / H;
    run.scores.push_back(std::move(s));
  }
  fill_regret(run);
  return run;
}

/// Hedge on a stream of clustering or ssl instances (utilities in [0, 1]).
inline OnlineRun hedge_run(const std::function<AnyInstance(std::size_t)>& stream, std::size_t T,
                           const TuneConfig& cfg, const std::vector<ParamPoint>& grid,
                           std::optional<double> eta, std::uint64_t seed) {
  require(cfg.task != Task::LogReg, "task", "use online_logreg_run for logreg");
  auto scores = [&](std::size_t t) {
    const AnyInstance inst = stream(t);
    std::vector<double> s(grid.size());
    parallel_for(grid.size(), [&](std::size_t g) { s[g] = evaluate(inst, grid[g], cfg); },
                 cfg.threads);
    return s;
  };
  OnlineRun run = hedge_play(T, grid.size(), scores, true, 1.0, eta, seed);
  run.grid = grid;
  return run;
}

// ---------------------------------------------------------------------------
// Online logistic regression

struct OnlineLogRegOptions {
  double lam_min = 0.1;
  double lam_max = 1.1;
  Penalty penalty = Penalty::L2;
  /// Losses above this are clipped before the update.
  double H_loss = 3.0;
  /// True-loss audit on every audit_stride-th round (0 disables the audit).
  std::size_t audit_stride = 1;
  std::optional<double> eta;
  int threads = 0;
};

struct OnlineLogRegRun {
  OnlineRun surrogate;
  double eps = 0.0;
  double r = 0.0;
  std::vector<std::size_t> audit_rounds;
  /// True validation loss of every grid point on each audited round.
  std::vector<std::vector<double>> audit_true;
  /// max over grid of |surrogate - true| on each audited round.
  std::vector<double> audit_gap;
  /// max over the round's knots, where the surrogate equals the path model.
  std::vector<double> audit_knot_gap;
  /// Regret on the audited rounds, measured with surrogate and true losses.
  double audit_surrogate_regret = 0.0;
  double audit_true_regret = 0.0;
};

/// eps = T^(-1/4) and grid spacing r = T^(-3/4).
inline std::pair<double, double> online_logreg_steps(std::size_t T) {
  const double t = static_cast<double>(T);
  return {std::pow(t, -0.25), std::pow(t, -0.75)};
}

/// lam_min + j r for j = 0.. while inside the range, plus lam_max.
inline std::vector<double> lambda_grid(double lam_min, double lam_max, double r) {
  require(r > 0.0, "r", "must be positive");
  require(lam_max > lam_min, "lam_max", "must exceed lam_min");
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(std::floor((lam_max - lam_min) / r + 1e-9));
  for (std::size_t j = 0; j <= n; ++j) out.push_back(lam_min + static_cast<double>(j) * r);
  if (lam_max - out.back() > 1e-12) out.push_back(lam_max);
  else out.back() = lam_max;
  return out;
}

/// Regret of a fixed choice sequence restricted to rounds `rows` of `scores`.
inline double subsequence_regret(const std::vector<std::vector<double>>& scores,
                                 const std::vector<std::size_t>& choices, bool maximize) {
  if (scores.empty()) return 0.0;
  const std::size_t G = scores[0].size();
  std::vector<double> cum(G, 0.0);
  double played = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    for (std::size_t g = 0; g < G; ++g) cum[g] += scores[i][g];
    played += scores[i][choices[i]];
  }
  const double best = maximize ? *std::max_element(cum.begin(), cum.end())
                               : *std::min_element(cum.begin(), cum.end());
  return maximize ? best - played : played - best;
}

inline OnlineLogRegRun online_logreg_run(const std::function<LogRegInstance(std::size_t)>& stream,
                                         std::size_t T, std::uint64_t seed,
                                         const OnlineLogRegOptions& opt = {}) {
  require(T >= 16, "T", "must be at least 16");
  OnlineLogRegRun out;
  std::tie(out.eps, out.r) = online_logreg_steps(T);
  const std::vector<double> lambdas = lambda_grid(opt.lam_min, opt.lam_max, out.r);
  std::mt19937_64 knot_rng(seed ^ 0x5DEECE66DULL);
  auto scores = [&](std::size_t t) {
    const LogRegInstance inst = stream(t);
    const PiecewiseLinear f =
        online_surrogate(inst, out.eps, knot_rng, opt.lam_min, opt.lam_max, opt.penalty);
    std::vector<double> s(lambdas.size());
    for (std::size_t g = 0; g < lambdas.size(); ++g) s[g] = f(lambdas[g]);
    if (opt.audit_stride > 0 && t % opt.audit_stride == 0) {
      std::vector<double> truth(lambdas.size());
      parallel_for(
          lambdas.size(),
          [&](std::size_t g) { truth[g] = true_val_loss(inst, lambdas[g], opt.penalty); },
          opt.threads);
      double gap = 0.0;
      for (std::size_t g = 0; g < lambdas.size(); ++g) gap = std::max(gap, std::abs(s[g] - truth[g]));
      double knot_gap = 0.0;
      for (std::size_t k = 0; k < f.knots.size(); ++k)
        knot_gap = std::max(knot_gap, std::abs(f.values[k] - true_val_loss(inst, f.knots[k], opt.penalty)));
      out.audit_rounds.push_back(t);
      out.audit_true.push_back(std::move(truth));
      out.audit_gap.push_back(gap);
      out.audit_knot_gap.push_back(knot_gap);
    }
    return s;
  };
  out.surrogate = hedge_play(T, lambdas.size(), scores, false, opt.H_loss, opt.eta, seed);
  for (double l : lambdas) out.surrogate.grid.emplace_back(LogRegParam{l});
  if (!out.audit_rounds.empty()) {
    std::vector<std::vector<double>> sur;
    std::vector<std::size_t> ch;
    for (std::size_t t : out.audit_rounds) {
      sur.push_back(out.surrogate.scores[t]);
      ch.push_back(out.surrogate.choices[t]);
    }
    std::vector<std::vector<double>> truth = out.audit_true;
    for (auto& row : truth)
      for (double& v : row) v = std::clamp(v, 0.0, opt.H_loss);
    out.audit_surrogate_regret = subsequence_regret(sur, ch, false);
    out.audit_true_regret = subsequence_regret(truth, ch, false);
  }
  return out;
}

/// Regret budget sqrt(T log((lam_max - lam_min) T)) with natural log.
inline double logreg_regret_scale(std::size_t T, double lam_min, double lam_max) {
  const double t = static_cast<double>(T);
  return std::sqrt(t * std::log((lam_max - lam_min) * t));
}

// ---------------------------------------------------------------------------
// Discontinuities and dispersion

inline constexpr double kJumpTol = 1e-9;
inline constexpr double kJumpWidth = 1e-8;

namespace detail {

inline void bisect_jumps(const std::function<double(double)>& f, double a, double fa, double b,
                         double fb, double lip, std::vector<double>& out) {
  auto jumps = [&](double x0, double f0, double x1, double f1) {
    return std::abs(f1 - f0) > lip * (x1 - x0) + kJumpTol;
  };
  if (b - a <= kJumpWidth) {
    out.push_back(0.5 * (a + b));
    return;
  }
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const bool left = jumps(a, fa, m, fm);
  const bool right = jumps(m, fm, b, fb);
  if (left) bisect_jumps(f, a, fa, m, fm, lip, out);
  if (right) bisect_jumps(f, m, fm, b, fb, lip, out);
  // A jump can hide behind a Lipschitz allowance split across halves.
  if (!left && !right) out.push_back(m);
}

}  // namespace detail

/// Locations where f jumps by more than lip * step + 1e-9 on a uniform scan
/// of `resolution` points, each refined by bisection to 1e-8.
inline std::vector<double> locate_discontinuities(const std::function<double(double)>& f, double lo,
                                                  double hi, std::size_t resolution,
                                                  double lip = 0.0) {
  require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, "lo", "need finite lo < hi");
  require(resolution >= 2, "resolution", "must be at least 2");
  require(lip >= 0.0, "lip", "must be nonnegative");
  const double step = (hi - lo) / static_cast<double>(resolution - 1);
  std::vector<double> out;
  double x0 = lo, f0 = f(lo);
  for (std::size_t i = 1; i < resolution; ++i) {
    const double x1 = i + 1 == resolution ? hi : lo + static_cast<double>(i) * step;
    const double f1 = f(x1);
    if (std::abs(f1 - f0) > lip * (x1 - x0) + kJumpTol) detail::bisect_jumps(f, x0, f0, x1, f1, lip, out);
    x0 = x1;
    f0 = f1;
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct DispersionReport {
  std::vector<double> eps_list;
  std::vector<std::size_t> max_count;
  /// max_count / (eps T).
  std::vector<double> ratio;
  std::size_t T = 0;
  std::vector<std::vector<double>> locations;
};

/// Largest number of distinct rounds with a discontinuity inside one closed
/// window of width eps.
inline std::size_t max_window_count(const std::vector<std::vector<double>>& locations, double eps) {
  std::vector<std::pair<double, std::size_t>> pts;
  for (std::size_t t = 0; t < locations.size(); ++t)
    for (double x : locations[t]) pts.emplace_back(x, t);
  std::sort(pts.begin(), pts.end());
  std::vector<std::size_t> mult(locations.size(), 0);
  std::size_t distinct = 0, best = 0, lo = 0;
  for (std::size_t hi = 0; hi < pts.size(); ++hi) {
    if (mult[pts[hi].second]++ == 0) ++distinct;
    while (pts[hi].first - pts[lo].first > eps) {
      if (--mult[pts[lo].second] == 0) --distinct;
      ++lo;
    }
    best = std::max(best, distinct);
  }
  return best;
}

inline DispersionReport estimate_dispersion(std::vector<std::vector<double>> locations,
                                            const std::vector<double>& eps_list) {
  require(!eps_list.empty(), "eps_list", "must be nonempty");
  DispersionReport rep;
  rep.T = locations.size();
  for (double eps : eps_list) {
    require(std::isfinite(eps) && eps > 0.0, "eps_list", "entries must be positive");
    const std::size_t c = max_window_count(locations, eps);
    rep.eps_list.push_back(eps);
    rep.max_count.push_back(c);
    rep.ratio.push_back(rep.T == 0 ? 0.0 : static_cast<double>(c) / (eps * static_cast<double>(rep.T)));
  }
  rep.locations = std::move(locations);
  return rep;
}

/// Discontinuities of alpha -> clustering utility (M1, fixed beta) for each
/// round of a stream.
inline std::vector<std::vector<double>> clustering_jump_stream(
    const std::function<ClusteringInstance(std::size_t)>& stream, std::size_t T, double lo,
    double hi, std::size_t resolution, int threads = 0) {
  std::vector<std::vector<double>> locs(T);
  parallel_for(
      T,
      [&](std::size_t t) {
        const ClusteringInstance inst = stream(t);
        const auto beta = uniform_simplex_point(static_cast<std::size_t>(inst.L()));
        auto u = [&](double a) { return clustering_utility(inst, M1{a}, beta); };
        locs[t] = locate_discontinuities(u, lo, hi, resolution);
      },
      threads);
  return locs;
}

}  // namespace ddtune

#pragma once

// Regularized logistic regression: exact solvers, the incremental quadratic
// approximation of the regularization path, and validation losses built on it.

#include "ddtune/instances.hpp"

#include <Eigen/Cholesky>

#include <random>

namespace ddtune {

enum class Penalty { L1, L2 };

inline const char* penalty_name(Penalty p) { return p == Penalty::L1 ? "l1" : "l2"; }

inline Penalty parse_penalty(const std::string& s) {
  if (s == "l1") return Penalty::L1;
  if (s == "l2") return Penalty::L2;
  throw InvalidArgument("penalty", "expected 'l1' or 'l2', got '" + s + "'");
}

namespace detail {

/// log(1 + exp(z)), branching on sign so neither overflow nor cancellation occurs.
inline double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline void check_shapes(const Vector& beta, const Matrix& X, const Vector& y) {
  require(X.rows() == y.size(), "y", "length differs from rows of X");
  require(X.cols() == beta.size(), "beta", "length differs from columns of X");
}

}  // namespace detail

/// (1/m) sum_i log(1 + exp(-y_i x_i^T beta)).
inline double logistic_loss(const Vector& beta, const Matrix& X, const Vector& y) {
  detail::check_shapes(beta, X, y);
  const Vector margin = (X * beta).cwiseProduct(y);
  std::vector<double> terms(static_cast<std::size_t>(margin.size()));
  for (Eigen::Index i = 0; i < margin.size(); ++i)
    terms[static_cast<std::size_t>(i)] = detail::softplus(-margin[i]);
  return mean(terms);
}

inline Vector logistic_gradient(const Vector& beta, const Matrix& X, const Vector& y) {
  const Vector margin = (X * beta).cwiseProduct(y);
  Vector w(margin.size());
  for (Eigen::Index i = 0; i < margin.size(); ++i) w[i] = -y[i] * detail::sigmoid(-margin[i]);
  return X.transpose() * w / static_cast<double>(X.rows());
}

inline Matrix logistic_hessian(const Vector& beta, const Matrix& X) {
  const Vector z = X * beta;
  Vector w(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double s = detail::sigmoid(z[i]);
    w[i] = s * (1.0 - s);
  }
  return X.transpose() * w.asDiagonal() * X / static_cast<double>(X.rows());
}

/// Largest violation of the l1 optimality conditions grad + lambda * subgrad(|beta|) = 0.
inline double l1_residual(const Vector& beta, const Vector& grad, double lambda) {
  double r = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    const double v = beta[j] != 0.0 ? std::abs(grad[j] + lambda * (beta[j] > 0 ? 1.0 : -1.0))
                                    : std::max(0.0, std::abs(grad[j]) - lambda);
    r = std::max(r, v);
  }
  return r;
}

struct SolverOptions {
  double l2_tol = 1e-10;  // gradient infinity norm
  double l1_tol = 1e-8;   // subgradient optimality residual
  int max_iter = 10000;
};

namespace detail {

inline Vector solve_l2(const Matrix& X, const Vector& y, double lambda, Vector beta,
                       const SolverOptions& opt) {
  auto objective = [&](const Vector& b) { return logistic_loss(b, X, y) + lambda * b.squaredNorm(); };
  double f = objective(beta);
  double res = kInf;
  for (int it = 0; it < opt.max_iter; ++it) {
    const Vector g = logistic_gradient(beta, X, y) + 2.0 * lambda * beta;
    res = g.lpNorm<Eigen::Infinity>();
    if (res <= opt.l2_tol) return beta;
    Matrix H = logistic_hessian(beta, X);
    H.diagonal().array() += 2.0 * lambda;
    const Vector step = -Eigen::LLT<Matrix>(H).solve(g);
    const double slope = g.dot(step);
    Vector next = beta + step;
    double fn = objective(next);
    // Near the optimum objective differences drown in rounding; there a
    // full step that halves the gradient is accepted as well.
    const bool full_ok =
        fn <= f + 1e-4 * slope ||
        (logistic_gradient(next, X, y) + 2.0 * lambda * next).lpNorm<Eigen::Infinity>() <= 0.5 * res;
    for (double t = 0.5; !full_ok && t > 1e-12; t *= 0.5) {
      next = beta + t * step;
      fn = objective(next);
      if (fn <= f + 1e-4 * t * slope) break;
    }
    beta = std::move(next);
    f = fn;
  }
  throw ConvergenceError("l2 Newton solver hit the iteration cap", res);
}

inline Vector soft_threshold(const Vector& v, double t) {
  Vector out(v.size());
  for (Eigen::Index j = 0; j < v.size(); ++j)
    out[j] = v[j] > t ? v[j] - t : (v[j] < -t ? v[j] + t : 0.0);
  return out;
}

/// Newton refinement on the support with signs held fixed; kept only when it
/// preserves the signs and lowers the residual.
inline Vector polish_l1(const Matrix& X, const Vector& y, double lambda, Vector beta) {
  std::vector<Eigen::Index> support;
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    if (beta[j] != 0.0) support.push_back(j);
  if (support.empty()) return beta;
  const auto s = static_cast<Eigen::Index>(support.size());
  for (int it = 0; it < 20; ++it) {
    const Vector g = logistic_gradient(beta, X, y);
    const double before = l1_residual(beta, g, lambda);
    const Matrix H = logistic_hessian(beta, X);
    Matrix Hs(s, s);
    Vector rhs(s);
    for (Eigen::Index a = 0; a < s; ++a) {
      const auto ja = support[static_cast<std::size_t>(a)];
      rhs[a] = g[ja] + lambda * (beta[ja] > 0 ? 1.0 : -1.0);
      for (Eigen::Index b = 0; b < s; ++b) Hs(a, b) = H(ja, support[static_cast<std::size_t>(b)]);
    }
    Eigen::LLT<Matrix> llt(Hs);
    if (llt.info() != Eigen::Success) return beta;
    const Vector step = llt.solve(rhs);
    Vector next = beta;
    for (Eigen::Index a = 0; a < s; ++a) {
      const auto ja = support[static_cast<std::size_t>(a)];
      next[ja] -= step[a];
      if ((next[ja] > 0) != (beta[ja] > 0) || next[ja] == 0.0) return beta;
    }
    const double after = l1_residual(next, logistic_gradient(next, X, y), lambda);
    if (!(after < before)) return beta;
    beta = std::move(next);
    if (after <= 1e-13) break;
  }
  return beta;
}

/// Accelerated proximal gradient (FISTA) with backtracking and
/// function-value restarts.
inline Vector solve_l1(const Matrix& X, const Vector& y, double lambda, Vector beta,
                       const SolverOptions& opt) {
  const auto m = static_cast<double>(X.rows());
  // Global Lipschitz constant of the loss gradient: ||X||_2^2 / (4m).
  const double lip = std::max(1e-12, Eigen::SelfAdjointEigenSolver<Matrix>(X.transpose() * X)
                                             .eigenvalues()
                                             .maxCoeff() /
                                         (4.0 * m));
  auto F = [&](const Vector& b) { return logistic_loss(b, X, y) + lambda * b.lpNorm<1>(); };
  Vector z = beta;
  double theta = 1.0;
  double L = lip;
  double f_prev = F(beta);
  double res = kInf;
  for (int it = 0; it < opt.max_iter; ++it) {
    const Vector gb = logistic_gradient(beta, X, y);
    res = l1_residual(beta, gb, lambda);
    if (res <= opt.l1_tol) return polish_l1(X, y, lambda, beta);
    const Vector gz = logistic_gradient(z, X, y);
    const double lz = logistic_loss(z, X, y);
    Vector next;
    for (;;) {
      next = soft_threshold(z - gz / L, lambda / L);
      const Vector diff = next - z;
      if (logistic_loss(next, X, y) <= lz + gz.dot(diff) + 0.5 * L * diff.squaredNorm() + 1e-15)
        break;
      L *= 2.0;
    }
    const double f_next = F(next);
    if (f_next > f_prev && z != beta) {
      // Restart momentum from the current iterate.
      theta = 1.0;
      z = beta;
      continue;
    }
    const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
    z = next + ((theta - 1.0) / theta_next) * (next - beta);
    beta = std::move(next);
    theta = theta_next;
    f_prev = f_next;
  }
  throw ConvergenceError("l1 proximal gradient solver hit the iteration cap", res);
}

}  // namespace detail

/// argmin_beta l(beta) + lambda * R(beta), R = ||.||_1 or ||.||_2^2, started
/// from `init` (zero when empty).
inline Vector solve_rlr(const Matrix& X, const Vector& y, double lambda, Penalty penalty,
                        const SolverOptions& opt = {}, const Vector& init = Vector()) {
  require(std::isfinite(lambda) && lambda > 0.0, "lambda", "must be positive");
  require(X.rows() == y.size() && X.rows() >= 1, "y", "length differs from rows of X");
  Vector beta = init.size() == 0 ? Vector::Zero(X.cols()) : init;
  require(beta.size() == X.cols(), "init", "length differs from columns of X");
  return penalty == Penalty::L2 ? detail::solve_l2(X, y, lambda, std::move(beta), opt)
                                : detail::solve_l1(X, y, lambda, std::move(beta), opt);
}

// ---------------------------------------------------------------------------
// Approximate regularization path

struct PathSegment {
  double lam_lo = 0.0;
  double lam_hi = 0.0;
  Vector a;
  Vector b;
  std::vector<int> active_set;  // l1 only

  Vector at(double lambda) const { return a * lambda + b; }
};

struct RegPath {
  std::vector<PathSegment> segments;
  double eps = 0.0;
  double lam_min = 0.0;
  double lam_max = 0.0;
  Penalty penalty = Penalty::L2;
  /// Steps where the active Hessian needed the +1e-10 I ridge.
  int ridge_fallbacks = 0;

  const PathSegment& segment_for(double lambda) const {
    require(lambda >= lam_min && lambda <= lam_max, "lambda",
            "outside the path domain [" + std::to_string(lam_min) + ", " + std::to_string(lam_max) + "]");
    auto it = std::upper_bound(segments.begin(), segments.end(), lambda,
                               [](double v, const PathSegment& s) { return v < s.lam_lo; });
    if (it != segments.begin()) --it;
    return *it;
  }

  Vector at(double lambda) const { return segment_for(lambda).at(lambda); }
};

struct PathOptions {
  double delta_drop = 1e-6;
  /// Fault injection for the acceptance suite: Newton targets are taken at
  /// lambda_min + stride * t * eps while segments keep the eps spacing.
  int lambda_stride = 1;
  SolverOptions solver{};
};

namespace detail {

inline constexpr double kRidgeFallback = 1e-10;

/// Solves H x = rhs for the symmetric PSD H, adding a tiny ridge if needed.
inline Matrix spd_solve(Matrix H, const Matrix& rhs, int& fallbacks) {
  Eigen::LLT<Matrix> llt(H);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-14)) {
    ++fallbacks;
    H.diagonal().array() += kRidgeFallback;
    llt.compute(H);
    if (llt.info() != Eigen::Success) throw NumericalError("active-set Hessian is singular");
  }
  return llt.solve(rhs);
}

inline std::pair<Vector, Vector> l2_affine(const Matrix& X, const Vector& y, const Vector& beta,
                                           double target, int& fallbacks) {
  const Vector g = logistic_gradient(beta, X, y);
  Matrix H = logistic_hessian(beta, X);
  H.diagonal().array() += 2.0 * target;
  Matrix rhs(beta.size(), 2);
  rhs.col(0) = g;
  rhs.col(1) = beta;
  const Matrix sol = spd_solve(std::move(H), rhs, fallbacks);
  // beta(lambda) = beta - H^{-1}(g + 2 lambda beta)
  return {-2.0 * sol.col(1), beta - sol.col(0)};
}

/// Affine map of the l1 Newton update on `active` with fixed signs `sign`.
inline std::pair<Vector, Vector> l1_affine(const Vector& g, const Matrix& H, const Vector& beta,
                                           const std::vector<int>& active,
                                           const std::vector<double>& sign, int& fallbacks) {
  const auto p = beta.size();
  Vector a = Vector::Zero(p), b = Vector::Zero(p);
  if (active.empty()) return {a, b};
  const auto s = static_cast<Eigen::Index>(active.size());
  Matrix Ha(s, s), rhs(s, 2);
  for (Eigen::Index i = 0; i < s; ++i) {
    const int ji = active[static_cast<std::size_t>(i)];
    rhs(i, 0) = g[ji];
    rhs(i, 1) = sign[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < s; ++k) Ha(i, k) = H(ji, active[static_cast<std::size_t>(k)]);
  }
  const Matrix sol = spd_solve(std::move(Ha), rhs, fallbacks);
  for (Eigen::Index i = 0; i < s; ++i) {
    const int ji = active[static_cast<std::size_t>(i)];
    a[ji] = -sol(i, 1);
    b[ji] = beta[ji] - sol(i, 0);
  }
  return {a, b};
}

inline double sign_of(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

}  // namespace detail

/// Piecewise-affine approximation of lambda -> beta_hat(lambda) on
/// [lam_min, lam_max], seeded with the exact solution at lam_min. Knots sit
/// at lam_min + t*eps (last interval clamped at lam_max). For l1 an interval
/// is additionally split where an active coefficient reaches zero.
inline RegPath approx_path(const Matrix& X, const Vector& y, double eps, double lam_min,
                           double lam_max, Penalty penalty, const PathOptions& opt = {}) {
  require(std::isfinite(eps) && eps > 0.0, "eps", "must be positive");
  require(lam_min > 0.0 && lam_max > lam_min && std::isfinite(lam_max), "lambda_range",
          "need 0 < lambda_min < lambda_max");
  require(opt.lambda_stride >= 1, "lambda_stride", "must be at least 1");
  RegPath path;
  path.eps = eps;
  path.lam_min = lam_min;
  path.lam_max = lam_max;
  path.penalty = penalty;
  const auto p = X.cols();
  Vector beta = solve_rlr(X, y, lam_min, penalty, opt.solver);
  const auto steps = static_cast<int>(std::ceil((lam_max - lam_min) / eps - 1e-9));
  std::vector<int> active;
  std::vector<double> sign;
  if (penalty == Penalty::L1)
    for (Eigen::Index j = 0; j < p; ++j)
      if (beta[j] != 0.0) {
        active.push_back(static_cast<int>(j));
        sign.push_back(detail::sign_of(beta[j]));
      }
  for (int t = 0; t < steps; ++t) {
    const double lo = lam_min + t * eps;
    const double hi = t + 1 == steps ? lam_max : lam_min + (t + 1) * eps;
    const double target = opt.lambda_stride == 1 ? hi : lam_min + opt.lambda_stride * (t + 1) * eps;
    if (penalty == Penalty::L2) {
      auto [a, b] = detail::l2_affine(X, y, beta, target, path.ridge_fallbacks);
      beta = a * target + b;
      path.segments.push_back({lo, hi, std::move(a), std::move(b), {}});
      continue;
    }
    double cur = lo;
    // Active-set events inside the interval: an active coefficient reaching
    // zero, or an inactive coordinate's predicted gradient reaching +-lambda.
    std::vector<int> changed_at_cur;
    for (int events = 0;; ++events) {
      const Vector g = logistic_gradient(beta, X, y);
      const Matrix H = logistic_hessian(beta, X);
      auto [a, b] = detail::l1_affine(g, H, beta, active, sign, path.ridge_fallbacks);
      if (events > 4 * static_cast<int>(p)) {
        beta = a * target + b;
        path.segments.push_back({cur, hi, std::move(a), std::move(b), active});
        break;
      }
      double when = kInf;
      int which = -1;
      bool entering = false;
      auto consider = [&](double root, int j, bool enter) {
        if (root < cur || root >= hi) return;
        if (root == cur && std::find(changed_at_cur.begin(), changed_at_cur.end(), j) != changed_at_cur.end())
          return;
        if (root < when) {
          when = root;
          which = j;
          entering = enter;
        }
      };
      for (std::size_t i = 0; i < active.size(); ++i) {
        const int j = active[i];
        if (sign[i] * (a[j] * hi + b[j]) >= 0.0 || a[j] == 0.0) continue;
        consider(std::max(cur, -b[j] / a[j]), j, false);
      }
      // Predicted gradient of inactive j: g_j + H_j. (a lambda + b - beta).
      const Vector c0 = g + H * (b - beta);
      const Vector c1 = H * a;
      for (Eigen::Index j = 0; j < p; ++j) {
        if (std::find(active.begin(), active.end(), static_cast<int>(j)) != active.end()) continue;
        const double q = c1[j], p0 = c0[j];
        if (std::abs(p0 + q * cur) > cur) {
          consider(cur, static_cast<int>(j), true);
          continue;
        }
        if (q > 1.0) consider(p0 / (1.0 - q), static_cast<int>(j), true);
        if (q < -1.0) consider(-p0 / (1.0 + q), static_cast<int>(j), true);
      }
      if (which < 0) {
        beta = a * target + b;
        path.segments.push_back({cur, hi, std::move(a), std::move(b), active});
        break;
      }
      if (when > cur) {
        path.segments.push_back({cur, when, a, b, active});
        beta = a * when + b;
        cur = when;
        changed_at_cur.clear();
      }
      changed_at_cur.push_back(which);
      if (entering) {
        const double grad = c0[which] + c1[which] * cur;
        beta[which] = 0.0;
        active.push_back(which);
        sign.push_back(-detail::sign_of(grad));
      } else {
        const auto pos = static_cast<std::size_t>(std::find(active.begin(), active.end(), which) - active.begin());
        beta[which] = 0.0;
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(pos));
        sign.erase(sign.begin() + static_cast<std::ptrdiff_t>(pos));
      }
    }
    // Drop vanished coefficients, then admit coordinates whose gradient
    // exceeds the penalty level.
    for (std::size_t i = active.size(); i-- > 0;) {
      const int j = active[i];
      if (std::abs(beta[j]) < opt.delta_drop || sign[i] * beta[j] < 0.0) {
        beta[j] = 0.0;
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(i));
        sign.erase(sign.begin() + static_cast<std::ptrdiff_t>(i));
      }
    }
    const Vector g = logistic_gradient(beta, X, y);
    for (Eigen::Index j = 0; j < p; ++j) {
      if (std::find(active.begin(), active.end(), static_cast<int>(j)) != active.end()) continue;
      if (std::abs(g[j]) > target) {
        active.push_back(static_cast<int>(j));
        sign.push_back(-detail::sign_of(g[j]));
      }
    }
    std::vector<std::size_t> idx(active.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](auto l, auto r) { return active[l] < active[r]; });
    std::vector<int> sa;
    std::vector<double> ss;
    for (auto i : idx) {
      sa.push_back(active[i]);
      ss.push_back(sign[i]);
    }
    active = std::move(sa);
    sign = std::move(ss);
  }
  return path;
}

inline RegPath approx_path(const LogRegInstance& inst, double eps, double lam_min, double lam_max,
                           Penalty penalty, const PathOptions& opt = {}) {
  return approx_path(inst.X, inst.y, eps, lam_min, lam_max, penalty, opt);
}

/// Validation loss of the path model at lambda.
inline double surrogate_val_loss(const RegPath& path, double lambda, const LogRegInstance& inst) {
  return logistic_loss(path.at(lambda), inst.X_val, inst.y_val);
}

/// Validation loss of the exact regularized solution at lambda.
inline double true_val_loss(const LogRegInstance& inst, double lambda, Penalty penalty,
                            const SolverOptions& opt = {}) {
  return logistic_loss(solve_rlr(inst.X, inst.y, lambda, penalty, opt), inst.X_val, inst.y_val);
}

// ---------------------------------------------------------------------------
// Loss-interpolation surrogate for online play

/// Linear interpolation through (knots, values); constant beyond the ends.
struct PiecewiseLinear {
  std::vector<double> knots;
  std::vector<double> values;

  double operator()(double x) const {
    if (knots.empty()) return 0.0;
    if (x <= knots.front()) return values.front();
    if (x >= knots.back()) return values.back();
    const auto it = std::upper_bound(knots.begin(), knots.end(), x);
    const auto i = static_cast<std::size_t>(it - knots.begin());
    const double w = (x - knots[i - 1]) / (knots[i] - knots[i - 1]);
    return values[i - 1] + w * (values[i] - values[i - 1]);
  }
};

/// One uniformly random knot per eps-interval of [lam_min, lam_max], valued
/// by the coefficient-path surrogate built with the same eps.
inline PiecewiseLinear online_surrogate(const LogRegInstance& inst, double eps, std::mt19937_64& rng,
                                        double lam_min, double lam_max, Penalty penalty,
                                        const PathOptions& opt = {}) {
  const RegPath path = approx_path(inst, eps, lam_min, lam_max, penalty, opt);
  PiecewiseLinear f;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto intervals = static_cast<int>(std::ceil((lam_max - lam_min) / eps - 1e-9));
  for (int k = 0; k < intervals; ++k) {
    const double lo = lam_min + k * eps;
    const double hi = k + 1 == intervals ? lam_max : lam_min + (k + 1) * eps;
    const double knot = lo + unit(rng) * (hi - lo);
    f.knots.push_back(knot);
    f.values.push_back(surrogate_val_loss(path, knot, inst));
  }
  return f;
}

}  // namespace ddtune

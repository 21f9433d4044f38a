#pragma once

// Problem-instance value types, hyperparameter points and seeded generators.

#include "ddtune/common.hpp"

#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace ddtune {

/// k disjoint nonempty blocks covering {0..n-1}. Canonical form keeps every
/// block sorted and orders blocks by their smallest element.
using Partition = std::vector<std::vector<int>>;

inline void canonicalize(Partition& p) {
  for (auto& b : p) std::sort(b.begin(), b.end());
  std::sort(p.begin(), p.end(), [](const auto& a, const auto& b) {
    if (a.empty() || b.empty()) return !a.empty() && b.empty();
    return a.front() < b.front();
  });
}

inline void validate_partition(const Partition& p, int n, const std::string& field) {
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  int covered = 0;
  for (std::size_t b = 0; b < p.size(); ++b) {
    require(!p[b].empty(), field, "block " + std::to_string(b) + " is empty");
    for (int i : p[b]) {
      require(i >= 0 && i < n, field, "index " + std::to_string(i) + " out of range");
      require(!seen[static_cast<std::size_t>(i)], field,
              "index " + std::to_string(i) + " appears twice");
      seen[static_cast<std::size_t>(i)] = 1;
      ++covered;
    }
  }
  require(covered == n, field, "blocks do not cover all " + std::to_string(n) + " points");
}

/// Symmetric, zero diagonal, entries in [0, R].
inline void validate_distance_matrix(const Matrix& d, Eigen::Index n, double R,
                                     const std::string& field) {
  require(d.rows() == n && d.cols() == n, field,
          "expected " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
  for (Eigen::Index i = 0; i < n; ++i) {
    require(d(i, i) == 0.0, field, "nonzero diagonal at (" + std::to_string(i) + "," +
                                       std::to_string(i) + ")");
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const std::string at = "(" + std::to_string(i) + "," + std::to_string(j) + ")";
      require(d(i, j) == d(j, i), field, "symmetry violated at " + at);
      require(std::isfinite(d(i, j)) && d(i, j) >= 0.0 && d(i, j) <= R, field,
              "entry out of [0,R] at " + at);
    }
  }
}

struct ClusteringInstance {
  std::vector<Matrix> distances;
  Partition target;
  double R = 1.0;

  int n() const { return distances.empty() ? 0 : static_cast<int>(distances.front().rows()); }
  int L() const { return static_cast<int>(distances.size()); }
  int k() const { return static_cast<int>(target.size()); }
  /// Density bound of the uniform-smooth generator.
  double kappa() const { return 1.0 / R; }

  void validate() const {
    require(!distances.empty(), "distances", "at least one distance matrix required");
    require(R > 0.0 && std::isfinite(R), "R", "must be positive and finite");
    const int size = n();
    require(size >= 1, "n", "must be at least 1");
    for (std::size_t l = 0; l < distances.size(); ++l)
      validate_distance_matrix(distances[l], size, R, "distances[" + std::to_string(l) + "]");
    validate_partition(target, size, "target");
  }

  friend bool operator==(const ClusteringInstance& a, const ClusteringInstance& b) {
    if (a.R != b.R || a.target != b.target || a.distances.size() != b.distances.size())
      return false;
    for (std::size_t l = 0; l < a.distances.size(); ++l)
      if (a.distances[l] != b.distances[l]) return false;
    return true;
  }
};

struct LabeledPoint {
  int index = 0;
  int label = 0;
  friend bool operator==(const LabeledPoint&, const LabeledPoint&) = default;
};

struct SslInstance {
  std::vector<Matrix> distances;
  std::vector<LabeledPoint> labeled;
  std::vector<int> unlabeled;
  /// Ground truth for `unlabeled`, same order. Only ssl_loss reads this.
  std::vector<int> eval_labels;
  double R = 1.0;

  int n() const { return distances.empty() ? 0 : static_cast<int>(distances.front().rows()); }
  int L() const { return static_cast<int>(distances.size()); }

  void validate() const {
    require(!distances.empty(), "distances", "at least one distance matrix required");
    require(R > 0.0 && std::isfinite(R), "R", "must be positive and finite");
    const int size = n();
    for (std::size_t l = 0; l < distances.size(); ++l)
      validate_distance_matrix(distances[l], size, R, "distances[" + std::to_string(l) + "]");
    require(!labeled.empty(), "labeled", "at least one labeled point required");
    std::vector<char> seen(static_cast<std::size_t>(size), 0);
    auto mark = [&](int i, const std::string& field) {
      require(i >= 0 && i < size, field, "index " + std::to_string(i) + " out of range");
      require(!seen[static_cast<std::size_t>(i)], field,
              "index " + std::to_string(i) + " appears twice");
      seen[static_cast<std::size_t>(i)] = 1;
    };
    for (const auto& lp : labeled) {
      mark(lp.index, "labeled");
      require(lp.label == 0 || lp.label == 1, "labeled", "labels must be 0 or 1");
    }
    for (int u : unlabeled) mark(u, "unlabeled");
    require(labeled.size() + unlabeled.size() == static_cast<std::size_t>(size), "unlabeled",
            "labeled and unlabeled sets do not cover all points");
    require(eval_labels.empty() || eval_labels.size() == unlabeled.size(), "eval_labels",
            "length must match the unlabeled set");
    for (int g : eval_labels) require(g == 0 || g == 1, "eval_labels", "labels must be 0 or 1");
  }

  friend bool operator==(const SslInstance& a, const SslInstance& b) {
    if (a.R != b.R || a.labeled != b.labeled || a.unlabeled != b.unlabeled ||
        a.eval_labels != b.eval_labels || a.distances.size() != b.distances.size())
      return false;
    for (std::size_t l = 0; l < a.distances.size(); ++l)
      if (a.distances[l] != b.distances[l]) return false;
    return true;
  }
};

/// Training and validation sets of one regularized logistic regression problem.
/// Labels are +1 / -1.
struct LogRegInstance {
  Matrix X;
  Vector y;
  Matrix X_val;
  Vector y_val;

  Eigen::Index m() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }
  Eigen::Index m_val() const { return X_val.rows(); }

  void validate() const {
    require(X.rows() >= 1, "X", "needs at least one row");
    require(X_val.rows() >= 1, "X_val", "needs at least one row");
    require(X.cols() == X_val.cols(), "X_val", "column count differs from X");
    require(y.size() == X.rows(), "y", "length differs from rows of X");
    require(y_val.size() == X_val.rows(), "y_val", "length differs from rows of X_val");
    for (Eigen::Index i = 0; i < y.size(); ++i)
      require(y[i] == 1.0 || y[i] == -1.0, "y", "labels must be +1 or -1");
    for (Eigen::Index i = 0; i < y_val.size(); ++i)
      require(y_val[i] == 1.0 || y_val[i] == -1.0, "y_val", "labels must be +1 or -1");
    require(X.allFinite() && X_val.allFinite(), "X", "entries must be finite");
  }

  friend bool operator==(const LogRegInstance& a, const LogRegInstance& b) {
    return a.X.rows() == b.X.rows() && a.X.cols() == b.X.cols() &&
           a.X_val.rows() == b.X_val.rows() && a.X_val.cols() == b.X_val.cols() &&
           a.X == b.X && a.y == b.y && a.X_val == b.X_val && a.y_val == b.y_val;
  }
};

// ---------------------------------------------------------------------------
// Hyperparameter points

inline constexpr double kAlphaGuard = 1e-6;

struct LinkageScalarParam {
  double alpha = 1.0;
  std::vector<double> beta{1.0};
  friend bool operator==(const LinkageScalarParam&, const LinkageScalarParam&) = default;
};
struct LinkageVectorParam {
  std::vector<double> alpha;
  friend bool operator==(const LinkageVectorParam&, const LinkageVectorParam&) = default;
};
struct SslParam {
  double sigma = 1.0;
  std::vector<double> beta{1.0};
  friend bool operator==(const SslParam&, const SslParam&) = default;
};
struct LogRegParam {
  double lambda = 0.1;
  friend bool operator==(const LogRegParam&, const LogRegParam&) = default;
};

using ParamPoint = std::variant<LinkageScalarParam, LinkageVectorParam, SslParam, LogRegParam>;

inline void validate_scalar_alpha(double alpha, const std::string& field = "alpha") {
  require(!std::isnan(alpha), field, "is NaN");
  require(std::isinf(alpha) || std::abs(alpha) >= kAlphaGuard, field,
          "must satisfy |alpha| >= 1e-6");
}

/// Checks the invariants of `p` for instances with `L` distance matrices.
inline void validate_param(const ParamPoint& p, std::size_t L) {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, LinkageScalarParam>) {
          validate_scalar_alpha(v.alpha);
          check_simplex(v.beta, L);
        } else if constexpr (std::is_same_v<T, LinkageVectorParam>) {
          require(v.alpha.size() == L, "alpha",
                  "expected " + std::to_string(L) + " exponents, got " +
                      std::to_string(v.alpha.size()));
        } else if constexpr (std::is_same_v<T, SslParam>) {
          require(std::isfinite(v.sigma) && v.sigma > 0.0, "sigma", "must be positive");
          check_simplex(v.beta, L);
        } else {
          require(std::isfinite(v.lambda), "lambda", "must be finite");
        }
      },
      p);
}

/// Flat numeric key used for lexicographic tie-breaking and caching.
inline std::vector<double> param_key(const ParamPoint& p) {
  return std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        std::vector<double> key;
        if constexpr (std::is_same_v<T, LinkageScalarParam>) {
          key.push_back(v.alpha);
          key.insert(key.end(), v.beta.begin(), v.beta.end());
        } else if constexpr (std::is_same_v<T, LinkageVectorParam>) {
          key = v.alpha;
        } else if constexpr (std::is_same_v<T, SslParam>) {
          key.push_back(v.sigma);
          key.insert(key.end(), v.beta.begin(), v.beta.end());
        } else {
          key.push_back(v.lambda);
        }
        return key;
      },
      p);
}

// ---------------------------------------------------------------------------
// Distance combination

/// Entrywise sum_i beta_i * distances[i].
inline Matrix combine_distance(std::span<const double> beta, std::span<const Matrix> distances) {
  require(!distances.empty(), "distances", "at least one matrix required");
  check_simplex(beta, distances.size());
  const auto n = distances.front().rows();
  for (std::size_t l = 0; l < distances.size(); ++l)
    require(distances[l].rows() == n && distances[l].cols() == n,
            "distances[" + std::to_string(l) + "]", "dimension mismatch");
  Matrix out = Matrix::Zero(n, n);
  for (std::size_t l = 0; l < distances.size(); ++l)
    if (beta[l] != 0.0) out += beta[l] * distances[l];
  // Exact symmetry even when the weighted sum rounds differently per side.
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) out(j, i) = out(i, j);
  return out;
}

// ---------------------------------------------------------------------------
// Generators

enum class ClusteringGenerator { UniformSmooth, PlantedBlobs };

namespace detail {

inline Partition random_partition(int n, int k, std::mt19937_64& rng) {
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Partition p(static_cast<std::size_t>(k));
  std::uniform_int_distribution<int> pick(0, k - 1);
  for (int i = 0; i < n; ++i) {
    const int block = i < k ? i : pick(rng);
    p[static_cast<std::size_t>(block)].push_back(order[static_cast<std::size_t>(i)]);
  }
  canonicalize(p);
  return p;
}

/// One metric per coordinate: |x_a[l] - x_b[l]| rescaled so the largest entry is R.
inline std::vector<Matrix> coordinate_metrics(const Matrix& points, double R) {
  const auto n = points.rows();
  std::vector<Matrix> out;
  for (Eigen::Index l = 0; l < points.cols(); ++l) {
    Matrix d = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j)
        d(i, j) = d(j, i) = std::abs(points(i, l) - points(j, l));
    const double top = d.maxCoeff();
    if (top > 0.0) {
      d *= R / top;
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
          d(i, j) = std::min(d(i, j), R);
          d(j, i) = d(i, j);
        }
    }
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace detail

/// Draws a clustering instance. UniformSmooth draws each off-diagonal entry
/// i<j independently from Uniform(0, R] (density 1/R) with a random target
/// k-partition; PlantedBlobs places k Gaussian blobs in R^L and uses one
/// coordinate-difference metric per axis, with blob membership as target.
inline ClusteringInstance gen_clustering(std::uint64_t seed, int n, int L, int k, double R,
                                         ClusteringGenerator generator) {
  require(n >= 2, "n", "must be at least 2");
  require(L >= 1, "L", "must be at least 1");
  require(k >= 1, "k", "must be at least 1");
  require(k <= n, "k", "must not exceed n");
  require(R > 0.0 && std::isfinite(R), "R", "must be positive and finite");
  std::mt19937_64 rng(seed);
  ClusteringInstance inst;
  inst.R = R;
  if (generator == ClusteringGenerator::UniformSmooth) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int l = 0; l < L; ++l) {
      Matrix d = Matrix::Zero(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) d(i, j) = d(j, i) = R * (1.0 - unit(rng));
      inst.distances.push_back(std::move(d));
    }
    inst.target = detail::random_partition(n, k, rng);
  } else {
    std::normal_distribution<double> gauss(0.0, 1.0);
    constexpr double kCenterSpread = 5.0;
    Matrix centers(k, L);
    for (int c = 0; c < k; ++c)
      for (int l = 0; l < L; ++l) centers(c, l) = kCenterSpread * gauss(rng);
    Partition target = detail::random_partition(n, k, rng);
    Matrix points(n, L);
    for (int c = 0; c < k; ++c)
      for (int i : target[static_cast<std::size_t>(c)])
        for (int l = 0; l < L; ++l) points(i, l) = centers(c, l) + gauss(rng);
    inst.distances = detail::coordinate_metrics(points, R);
    inst.target = std::move(target);
  }
  return inst;
}

/// Two-class Gaussian data in R^L with coordinate metrics. Points
/// 0..n_labeled-1 are labeled; the rest are unlabeled with held-out labels.
inline SslInstance gen_ssl(std::uint64_t seed, int n_labeled, int n_unlabeled, int L, double R) {
  require(n_labeled >= 1, "n_labeled", "must be at least 1");
  require(n_unlabeled >= 0, "n_unlabeled", "must be nonnegative");
  require(L >= 1, "L", "must be at least 1");
  require(R > 0.0 && std::isfinite(R), "R", "must be positive and finite");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  constexpr double kClassGap = 3.0;
  const int n = n_labeled + n_unlabeled;
  std::vector<int> cls(static_cast<std::size_t>(n));
  Matrix points(n, L);
  for (int i = 0; i < n; ++i) {
    cls[static_cast<std::size_t>(i)] = coin(rng) ? 1 : 0;
    for (int l = 0; l < L; ++l) points(i, l) = kClassGap * cls[static_cast<std::size_t>(i)] + gauss(rng);
  }
  SslInstance inst;
  inst.R = R;
  inst.distances = detail::coordinate_metrics(points, R);
  for (int i = 0; i < n_labeled; ++i) inst.labeled.push_back({i, cls[static_cast<std::size_t>(i)]});
  for (int i = n_labeled; i < n; ++i) {
    inst.unlabeled.push_back(i);
    inst.eval_labels.push_back(cls[static_cast<std::size_t>(i)]);
  }
  return inst;
}

/// Gaussian features with standard deviation `feature_scale`, a ground-truth
/// weight vector of norm `signal` (acting on unit-scale features), and labels
/// drawn through the logistic link.
inline LogRegInstance gen_logreg(std::uint64_t seed, int m, int p, int m_val, double signal,
                                 double feature_scale = 1.0) {
  require(m >= 1, "m", "must be at least 1");
  require(p >= 1, "p", "must be at least 1");
  require(m_val >= 1, "m_val", "must be at least 1");
  require(std::isfinite(signal) && signal >= 0.0, "signal", "must be nonnegative");
  require(std::isfinite(feature_scale) && feature_scale > 0.0, "feature_scale", "must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector w(p);
  for (int j = 0; j < p; ++j) w[j] = gauss(rng);
  const double norm = w.norm();
  if (norm > 0.0) w *= signal / norm;
  auto draw = [&](int rows, Matrix& X, Vector& y) {
    X.resize(rows, p);
    y.resize(rows);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < p; ++j) X(i, j) = gauss(rng);
      const double prob = 1.0 / (1.0 + std::exp(-X.row(i).dot(w)));
      X.row(i) *= feature_scale;
      y[i] = unit(rng) < prob ? 1.0 : -1.0;
    }
  };
  LogRegInstance inst;
  draw(m, inst.X, inst.y);
  draw(m_val, inst.X_val, inst.y_val);
  return inst;
}

}  // namespace ddtune

#pragma once

// Graph-based semi-supervised labeling: Gaussian RBF graph over a combined
// metric and the harmonic (label propagation) closed form.

#include "ddtune/instances.hpp"

#include <Eigen/Cholesky>

namespace ddtune {

/// Complete RBF graph with nodes ordered labeled-first. `order[r]` is the
/// instance index of row r.
struct WeightedGraph {
  Matrix W;
  std::vector<int> order;
  int n_labeled = 0;

  int n() const { return static_cast<int>(W.rows()); }
  int n_unlabeled() const { return n() - n_labeled; }
};

/// Reciprocal-condition floor of the harmonic system (condition above 1e14).
inline constexpr double kMinRcond = 1e-14;
/// Dense solves only; the graph is complete.
inline constexpr int kMaxSslNodes = 2000;

inline WeightedGraph build_rbf_graph(const SslInstance& inst, double sigma,
                                     std::span<const double> beta) {
  require(std::isfinite(sigma) && sigma > 0.0, "sigma", "must be positive");
  require(inst.n() <= kMaxSslNodes, "n", "dense solver is limited to 2000 nodes");
  const Matrix d = combine_distance(beta, inst.distances);
  WeightedGraph g;
  g.n_labeled = static_cast<int>(inst.labeled.size());
  for (const auto& lp : inst.labeled) g.order.push_back(lp.index);
  g.order.insert(g.order.end(), inst.unlabeled.begin(), inst.unlabeled.end());
  const auto n = static_cast<Eigen::Index>(g.order.size());
  const double s2 = sigma * sigma;
  g.W = Matrix::Zero(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = r + 1; c < n; ++c)
      g.W(r, c) = g.W(c, r) = std::exp(-d(g.order[static_cast<std::size_t>(r)],
                                          g.order[static_cast<std::size_t>(c)]) / s2);
  return g;
}

/// f_U solving (D_UU - W_UU) f_U = W_UL f_L, with D the full row sums of W.
inline Vector harmonic_solve(const WeightedGraph& g, const Vector& f_L) {
  const Eigen::Index nl = g.n_labeled;
  const Eigen::Index nu = g.n_unlabeled();
  require(nl >= 1, "labeled", "at least one labeled node required");
  require(f_L.size() == nl, "f_L", "length must equal the number of labeled nodes");
  if (nu == 0) return Vector();
  const Vector degree = g.W.rowwise().sum();
  Matrix A = -g.W.bottomRightCorner(nu, nu);
  A.diagonal() += degree.tail(nu);
  const Vector rhs = g.W.bottomLeftCorner(nu, nl) * f_L;
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success)
    throw NumericalError("harmonic system is not positive definite (weights underflowed?)");
  const double rcond = llt.rcond();
  if (!(rcond >= kMinRcond))
    throw NumericalError("harmonic system is ill-conditioned (rcond " + std::to_string(rcond) + ")");
  return llt.solve(rhs);
}

inline std::vector<int> ssl_predict(const Vector& f_U) {
  std::vector<int> out(static_cast<std::size_t>(f_U.size()));
  for (Eigen::Index i = 0; i < f_U.size(); ++i) out[static_cast<std::size_t>(i)] = f_U[i] >= 0.5 ? 1 : 0;
  return out;
}

/// Harmonic solution for `inst` in the order of `inst.unlabeled`.
inline Vector ssl_scores(const SslInstance& inst, double sigma, std::span<const double> beta) {
  const WeightedGraph g = build_rbf_graph(inst, sigma, beta);
  Vector f_L(g.n_labeled);
  for (int i = 0; i < g.n_labeled; ++i) f_L[i] = inst.labeled[static_cast<std::size_t>(i)].label;
  return harmonic_solve(g, f_L);
}

/// Fraction of unlabeled nodes whose rounded harmonic score disagrees with
/// the held-out labels.
inline double ssl_loss(const SslInstance& inst, double sigma, std::span<const double> beta) {
  if (inst.unlabeled.empty()) return 0.0;
  require(inst.eval_labels.size() == inst.unlabeled.size(), "eval_labels",
          "instance carries no evaluation labels");
  const auto pred = ssl_predict(ssl_scores(inst, sigma, beta));
  int wrong = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) wrong += pred[i] != inst.eval_labels[i];
  return static_cast<double>(wrong) / static_cast<double>(pred.size());
}

/// Utility used by the tuners: higher is better.
inline double ssl_utility(const SslInstance& inst, double sigma, std::span<const double> beta) {
  return 1.0 - ssl_loss(inst, sigma, beta);
}

}  // namespace ddtune

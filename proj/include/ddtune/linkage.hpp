#pragma once

// Parameterized agglomerative clustering: merge-function families, greedy
// tree construction, dynamic-programming pruning, Hamming utility, and the
// exact boundary analysis of the min/max family in its exponent.

#include "ddtune/assignment.hpp"
#include "ddtune/instances.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <map>
#include <numeric>
#include <optional>
#include <variant>

namespace ddtune {

// ---------------------------------------------------------------------------
// Merge families
//
//   M1: (min d^a + max d^a)^(1/a)                     over A x B
//   M2: (mean d^a)^(1/a)                              power mean
//   M3: (mean prod_i d_i^(a_i))^(1/sum_i a_i)         one exponent per metric
//
// M1/M2 run on the combined distance sum_i beta_i d_i.

struct M1 {
  double alpha = 1.0;
};
struct M2 {
  double alpha = 1.0;
};
struct M3 {
  std::vector<double> alpha;
};
using MergeFamily = std::variant<M1, M2, M3>;

/// Exponents beyond this magnitude are treated as exact min / max.
inline constexpr double kAlphaSnap = 64.0;

inline double snap_alpha(double alpha) {
  if (alpha > kAlphaSnap) return kInf;
  if (alpha < -kAlphaSnap) return -kInf;
  return alpha;
}

inline void validate_family(const MergeFamily& family, std::size_t L) {
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, M3>) {
          require(f.alpha.size() == L, "alpha",
                  "M3 needs one exponent per metric (" + std::to_string(L) + ")");
          int infinite = 0;
          double sum = 0.0;
          for (double a : f.alpha) {
            require(!std::isnan(a), "alpha", "is NaN");
            if (std::isinf(a)) ++infinite;
            else sum += a;
          }
          if (infinite > 0) {
            require(infinite == 1, "alpha", "at most one infinite exponent is supported");
            require(sum == 0.0, "alpha",
                    "an infinite exponent requires all other exponents to be 0");
          } else {
            require(std::abs(sum) >= kAlphaGuard, "alpha", "sum of exponents must satisfy |sum| >= 1e-6");
          }
        } else {
          validate_scalar_alpha(f.alpha);
        }
      },
      family);
}

/// Sufficient statistics of the point pairs between two clusters.
struct PairStats {
  double min_d = kInf;
  double max_d = -kInf;
  double log_sum = -kInf;  // log of the sum of per-pair powered terms
  double count = 0.0;

  static PairStats merge(const PairStats& a, const PairStats& b) {
    return {std::min(a.min_d, b.min_d), std::max(a.max_d, b.max_d),
            log_add_exp(a.log_sum, b.log_sum), a.count + b.count};
  }
};

/// Evaluates one merge family in log space. For a fixed family and point
/// set it produces per-pair statistics that fold under cluster union.
class LinkageKernel {
 public:
  LinkageKernel(const MergeFamily& family, std::span<const Matrix> distances,
                std::span<const double> beta) {
    require(!distances.empty(), "distances", "at least one matrix required");
    validate_family(family, distances.size());
    std::visit(
        [&](const auto& f) {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, M3>) {
            raw_.assign(distances.begin(), distances.end());
            exponents_ = f.alpha;
            exponent_sum_ = 0.0;
            for (std::size_t i = 0; i < exponents_.size(); ++i) {
              if (std::isinf(exponents_[i])) {
                axis_ = static_cast<int>(i);
                mode_ = exponents_[i] > 0 ? Mode::Max : Mode::Min;
              } else {
                exponent_sum_ += exponents_[i];
              }
            }
            if (axis_ < 0) mode_ = Mode::Product;
          } else {
            combined_ = distances.size() == 1 && beta.size() <= 1
                            ? distances.front()
                            : combine_distance(beta, distances);
            alpha_ = snap_alpha(f.alpha);
            if (alpha_ == kInf) mode_ = Mode::Max;
            else if (alpha_ == -kInf) mode_ = Mode::Min;
            else mode_ = std::is_same_v<T, M1> ? Mode::MinPlusMax : Mode::PowerMean;
          }
        },
        family);
    if (distances.size() == 1 && beta.size() == 1) check_simplex(beta, 1);
  }

  Eigen::Index size() const { return axis_ >= 0 || mode_ == Mode::Product ? raw_.front().rows() : combined_.rows(); }

  /// Statistics of the single pair (a, b).
  PairStats leaf(int a, int b) const {
    PairStats s;
    s.count = 1.0;
    if (mode_ == Mode::Product) {
      double term = 0.0;
      for (std::size_t i = 0; i < exponents_.size(); ++i) {
        const double e = exponents_[i];
        if (e == 0.0) continue;
        const double d = raw_[i](a, b);
        if (d == 0.0) {
          if (e < 0.0) throw DomainError("zero distance raised to a negative power");
          term = -kInf;
        } else if (term != -kInf) {
          term += e * std::log(d);
        }
      }
      s.log_sum = term;
      return s;
    }
    const double d = axis_ >= 0 ? raw_[static_cast<std::size_t>(axis_)](a, b) : combined_(a, b);
    s.min_d = s.max_d = d;
    if (mode_ == Mode::PowerMean) {
      if (d == 0.0) {
        if (alpha_ < 0.0) throw DomainError("zero distance raised to a negative power");
        s.log_sum = -kInf;
      } else {
        s.log_sum = alpha_ * std::log(d);
      }
    }
    return s;
  }

  /// The merge distance itself; exact for the min / max limits.
  double value(const PairStats& s) const {
    if (mode_ == Mode::Max) return s.max_d;
    if (mode_ == Mode::Min) return s.min_d;
    return std::exp(log_value(s));
  }

  /// log of the merge distance for clusters with statistics `s`.
  double log_value(const PairStats& s) const {
    switch (mode_) {
      case Mode::Max:
        return std::log(s.max_d);
      case Mode::Min:
        return std::log(s.min_d);
      case Mode::MinPlusMax: {
        if (s.min_d == 0.0 && alpha_ < 0.0)
          throw DomainError("zero distance raised to a negative power");
        const double lo = s.min_d == 0.0 ? -kInf : alpha_ * std::log(s.min_d);
        const double hi = s.max_d == 0.0 ? -kInf : alpha_ * std::log(s.max_d);
        return log_add_exp(lo, hi) / alpha_;
      }
      case Mode::PowerMean:
        return (s.log_sum - std::log(s.count)) / alpha_;
      case Mode::Product:
        return (s.log_sum - std::log(s.count)) / exponent_sum_;
    }
    return 0.0;
  }

 private:
  enum class Mode { Max, Min, MinPlusMax, PowerMean, Product };
  Mode mode_ = Mode::PowerMean;
  Matrix combined_;
  std::vector<Matrix> raw_;
  std::vector<double> exponents_;
  double exponent_sum_ = 0.0;
  double alpha_ = 1.0;
  int axis_ = -1;
};

inline PairStats fold_stats(const LinkageKernel& kernel, std::span<const int> A,
                            std::span<const int> B) {
  PairStats s;
  for (int a : A)
    for (int b : B) s = PairStats::merge(s, kernel.leaf(a, b));
  return s;
}

/// Cluster-pair distance m(A, B). `beta` weights the metrics for M1/M2 and is
/// ignored for M3.
inline double merge_distance(const MergeFamily& family, std::span<const int> A,
                             std::span<const int> B, std::span<const Matrix> distances,
                             std::span<const double> beta) {
  require(!A.empty() && !B.empty(), "A", "clusters must be nonempty");
  for (int a : A)
    require(std::find(B.begin(), B.end(), a) == B.end(), "A", "clusters must be disjoint");
  LinkageKernel kernel(family, distances, beta);
  return kernel.value(fold_stats(kernel, A, B));
}

inline double merge_distance(const MergeFamily& family, std::span<const int> A,
                             std::span<const int> B, const Matrix& d) {
  const double one = 1.0;
  return merge_distance(family, A, B, std::span<const Matrix>(&d, 1), std::span<const double>(&one, 1));
}

// ---------------------------------------------------------------------------
// Cluster trees

struct Merge {
  int left = 0;   // smaller node id
  int right = 0;  // larger node id
  double height = 0.0;
};

/// Leaves are nodes 0..n-1; merge t creates node n+t.
struct ClusterTree {
  int n = 0;
  std::vector<Merge> merges;

  int root() const { return n == 1 ? 0 : n + static_cast<int>(merges.size()) - 1; }
  int node_count() const { return n + static_cast<int>(merges.size()); }

  /// Sorted point ids under `node`.
  std::vector<int> members(int node) const {
    std::vector<int> out;
    std::vector<int> stack{node};
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      if (v < n) {
        out.push_back(v);
      } else {
        const auto& m = merges[static_cast<std::size_t>(v - n)];
        stack.push_back(m.left);
        stack.push_back(m.right);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Same merge sequence, ignoring heights.
  bool same_topology(const ClusterTree& o) const {
    if (n != o.n || merges.size() != o.merges.size()) return false;
    for (std::size_t i = 0; i < merges.size(); ++i)
      if (merges[i].left != o.merges[i].left || merges[i].right != o.merges[i].right) return false;
    return true;
  }
};

inline nlohmann::json tree_to_json(const ClusterTree& tree) {
  nlohmann::json merges = nlohmann::json::array();
  for (const auto& m : tree.merges) merges.push_back({m.left, m.right, m.height});
  return {{"n", tree.n}, {"merges", merges}};
}

/// Greedy agglomeration from singletons: each step merges the active pair
/// with the smallest linkage value. Exact ties go to the pair with the
/// smallest (lower id, higher id).
inline ClusterTree build_tree(std::span<const Matrix> distances, const MergeFamily& family,
                              std::span<const double> beta) {
  LinkageKernel kernel(family, distances, beta);
  const int n = static_cast<int>(distances.front().rows());
  ClusterTree tree;
  tree.n = n;
  if (n <= 1) return tree;
  const auto N = static_cast<std::size_t>(n);
  // Slot s holds one active cluster; stats/keys are indexed by slot pairs.
  std::vector<int> node_of(N);
  std::iota(node_of.begin(), node_of.end(), 0);
  std::vector<char> active(N, 1);
  std::vector<PairStats> stats(N * N);
  std::vector<double> key(N * N, kInf);
  auto at = [N](std::size_t a, std::size_t b) { return a * N + b; };
  for (std::size_t a = 0; a < N; ++a)
    for (std::size_t b = a + 1; b < N; ++b) {
      stats[at(a, b)] = stats[at(b, a)] = kernel.leaf(static_cast<int>(a), static_cast<int>(b));
      key[at(a, b)] = key[at(b, a)] = kernel.log_value(stats[at(a, b)]);
    }
  tree.merges.reserve(N - 1);
  for (int step = 0; step < n - 1; ++step) {
    std::size_t best_a = 0, best_b = 0;
    double best = kInf;
    int best_lo = 0, best_hi = 0;
    bool found = false;
    for (std::size_t a = 0; a < N; ++a) {
      if (!active[a]) continue;
      for (std::size_t b = a + 1; b < N; ++b) {
        if (!active[b]) continue;
        const double v = key[at(a, b)];
        const int lo = std::min(node_of[a], node_of[b]);
        const int hi = std::max(node_of[a], node_of[b]);
        if (!found || v < best || (v == best && (lo < best_lo || (lo == best_lo && hi < best_hi)))) {
          found = true;
          best = v;
          best_a = a;
          best_b = b;
          best_lo = lo;
          best_hi = hi;
        }
      }
    }
    tree.merges.push_back({best_lo, best_hi, std::exp(best)});
    // The merged cluster lives on in slot best_a.
    active[best_b] = 0;
    node_of[best_a] = n + step;
    for (std::size_t c = 0; c < N; ++c) {
      if (!active[c] || c == best_a) continue;
      const PairStats merged = PairStats::merge(stats[at(best_a, c)], stats[at(best_b, c)]);
      stats[at(best_a, c)] = stats[at(c, best_a)] = merged;
      key[at(best_a, c)] = key[at(c, best_a)] = kernel.log_value(merged);
    }
  }
  return tree;
}

inline ClusterTree build_tree(const ClusteringInstance& inst, const MergeFamily& family,
                              std::span<const double> beta) {
  return build_tree(std::span<const Matrix>(inst.distances), family, beta);
}

// ---------------------------------------------------------------------------
// Pruning

struct KCenter {};
struct KMedian {};
struct HammingObjective {
  Partition target;
};
using PruneObjective = std::variant<KCenter, KMedian, HammingObjective>;

/// Labels used by the Hamming pruning table are bitmasks over target blocks.
inline constexpr int kMaxHammingPruneK = 12;

namespace detail {

/// Sorted smallest-id of each block: the tie-break key among equal-cost prunings.
inline std::vector<int> merge_keys(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

template <class Cost>
struct PruneEntry {
  Cost cost{};
  std::vector<int> keys;   // sorted block minima
  std::vector<int> nodes;  // chosen subtree roots
  bool valid = false;

  bool better_than(const PruneEntry& o) const {
    if (!o.valid) return valid;
    if (!valid) return false;
    if (cost != o.cost) return cost < o.cost;
    return keys < o.keys;
  }
};

inline Partition nodes_to_partition(const ClusterTree& tree, const std::vector<int>& nodes) {
  Partition p;
  for (int v : nodes) p.push_back(tree.members(v));
  canonicalize(p);
  return p;
}

inline std::vector<std::vector<int>> all_members(const ClusterTree& tree) {
  std::vector<std::vector<int>> mem(static_cast<std::size_t>(tree.node_count()));
  for (int i = 0; i < tree.n; ++i) mem[static_cast<std::size_t>(i)] = {i};
  for (std::size_t t = 0; t < tree.merges.size(); ++t) {
    const auto& m = tree.merges[t];
    mem[static_cast<std::size_t>(tree.n) + t] =
        merge_keys(mem[static_cast<std::size_t>(m.left)], mem[static_cast<std::size_t>(m.right)]);
  }
  return mem;
}

inline Partition prune_by_count(const ClusterTree& tree, int k, bool use_max, const Matrix& d) {
  const auto mem = all_members(tree);
  using Entry = PruneEntry<double>;
  std::vector<std::vector<Entry>> table(mem.size());
  auto cluster_cost = [&](const std::vector<int>& pts) {
    double best = kInf;
    for (int c : pts) {
      double acc = 0.0;
      for (int x : pts) acc = use_max ? std::max(acc, d(x, c)) : acc + d(x, c);
      best = std::min(best, acc);
    }
    return best;
  };
  auto fill = [&](int v) {
    const auto& pts = mem[static_cast<std::size_t>(v)];
    const int cap = std::min<int>(static_cast<int>(pts.size()), k);
    auto& row = table[static_cast<std::size_t>(v)];
    row.assign(static_cast<std::size_t>(cap) + 1, Entry{});
    row[1] = Entry{cluster_cost(pts), {pts.front()}, {v}, true};
    if (v < tree.n) return;
    const auto& m = tree.merges[static_cast<std::size_t>(v - tree.n)];
    const auto& L = table[static_cast<std::size_t>(m.left)];
    const auto& R = table[static_cast<std::size_t>(m.right)];
    for (std::size_t jl = 1; jl < L.size(); ++jl)
      for (std::size_t jr = 1; jr < R.size() && jl + jr <= static_cast<std::size_t>(cap); ++jr) {
        if (!L[jl].valid || !R[jr].valid) continue;
        Entry e;
        e.valid = true;
        e.cost = use_max ? std::max(L[jl].cost, R[jr].cost) : L[jl].cost + R[jr].cost;
        e.keys = merge_keys(L[jl].keys, R[jr].keys);
        e.nodes = L[jl].nodes;
        e.nodes.insert(e.nodes.end(), R[jr].nodes.begin(), R[jr].nodes.end());
        if (e.better_than(row[jl + jr])) row[jl + jr] = std::move(e);
      }
  };
  for (int v = 0; v < tree.node_count(); ++v) fill(v);
  return nodes_to_partition(tree, table[static_cast<std::size_t>(tree.root())][static_cast<std::size_t>(k)].nodes);
}

/// Joint minimization over prunings and injective block labelings; the
/// state is the set of target labels consumed by a subtree.
inline Partition prune_by_hamming(const ClusterTree& tree, int k, const Partition& target) {
  const int labels = std::max<int>(k, static_cast<int>(target.size()));
  require(labels <= kMaxHammingPruneK, "k",
          "Hamming pruning supports at most " + std::to_string(kMaxHammingPruneK) + " blocks");
  std::vector<int> label_of(static_cast<std::size_t>(tree.n), -1);
  for (std::size_t b = 0; b < target.size(); ++b)
    for (int i : target[b]) {
      require(i >= 0 && i < tree.n, "target", "index out of range");
      label_of[static_cast<std::size_t>(i)] = static_cast<int>(b);
    }
  const auto mem = all_members(tree);
  using Entry = PruneEntry<int>;
  std::vector<std::map<unsigned, Entry>> table(mem.size());
  for (int v = 0; v < tree.node_count(); ++v) {
    const auto& pts = mem[static_cast<std::size_t>(v)];
    auto& row = table[static_cast<std::size_t>(v)];
    std::vector<int> hits(static_cast<std::size_t>(labels), 0);
    for (int x : pts)
      if (label_of[static_cast<std::size_t>(x)] >= 0) ++hits[static_cast<std::size_t>(label_of[static_cast<std::size_t>(x)])];
    for (int l = 0; l < labels; ++l)
      row[1u << l] = Entry{static_cast<int>(pts.size()) - hits[static_cast<std::size_t>(l)],
                           {pts.front()}, {v}, true};
    if (v < tree.n) continue;
    const auto& m = tree.merges[static_cast<std::size_t>(v - tree.n)];
    const auto& L = table[static_cast<std::size_t>(m.left)];
    const auto& R = table[static_cast<std::size_t>(m.right)];
    for (const auto& [ml, el] : L)
      for (const auto& [mr, er] : R) {
        if (ml & mr) continue;
        if (std::popcount(ml | mr) > k) continue;
        Entry e;
        e.valid = true;
        e.cost = el.cost + er.cost;
        e.keys = merge_keys(el.keys, er.keys);
        e.nodes = el.nodes;
        e.nodes.insert(e.nodes.end(), er.nodes.begin(), er.nodes.end());
        auto& slot = row[ml | mr];
        if (e.better_than(slot)) slot = std::move(e);
      }
  }
  Entry best;
  for (const auto& [mask, e] : table[static_cast<std::size_t>(tree.root())])
    if (std::popcount(mask) == k && e.better_than(best)) best = e;
  return nodes_to_partition(tree, best.nodes);
}

}  // namespace detail

/// Best k-pruning of `tree` (a set of k disjoint subtrees covering all
/// leaves) under `objective`. `d` supplies point distances for k-center and
/// k-median and is unused for the Hamming objective. Equal-cost prunings are
/// resolved toward the lexicographically smallest sorted block minima.
inline Partition prune_tree(const ClusterTree& tree, int k, const PruneObjective& objective,
                            const Matrix& d = Matrix()) {
  require(k >= 1, "k", "must be at least 1");
  require(k <= tree.n, "k", "exceeds the number of leaves");
  require(static_cast<int>(tree.merges.size()) == tree.n - 1, "tree", "incomplete merge list");
  return std::visit(
      [&](const auto& obj) -> Partition {
        using T = std::decay_t<decltype(obj)>;
        if constexpr (std::is_same_v<T, HammingObjective>) {
          return detail::prune_by_hamming(tree, k, obj.target);
        } else {
          require(d.rows() == tree.n && d.cols() == tree.n, "d", "distance matrix size mismatch");
          return detail::prune_by_count(tree, k, std::is_same_v<T, KCenter>, d);
        }
      },
      objective);
}

// ---------------------------------------------------------------------------
// Hamming loss

/// min over block matchings of (1/n) sum_i |Y_i \ P_match(i)|. Partitions with
/// different block counts are padded with empty blocks.
inline double hamming_loss(const Partition& P, const Partition& Y) {
  Partition p, y;
  for (const auto& b : P)
    if (!b.empty()) p.push_back(b);
  for (const auto& b : Y)
    if (!b.empty()) y.push_back(b);
  int n = 0;
  int max_id = -1;
  for (const auto& b : y) {
    n += static_cast<int>(b.size());
    for (int i : b) max_id = std::max(max_id, i);
  }
  require(n > 0, "Y", "partition is empty");
  require(max_id + 1 == n, "Y", "must cover {0..n-1}");
  validate_partition(y, n, "Y");
  try {
    validate_partition(p, n, "P");
  } catch (const InvalidArgument&) {
    throw InvalidArgument("P", "partitions are over different ground sets");
  }
  const std::size_t K = std::max(p.size(), y.size());
  p.resize(K);
  y.resize(K);
  std::vector<int> owner(static_cast<std::size_t>(n));
  for (std::size_t j = 0; j < K; ++j)
    for (int i : p[j]) owner[static_cast<std::size_t>(i)] = static_cast<int>(j);
  std::vector<std::vector<double>> cost(K, std::vector<double>(K, 0.0));
  for (std::size_t i = 0; i < K; ++i) {
    std::vector<int> overlap(K, 0);
    for (int x : y[i]) ++overlap[static_cast<std::size_t>(owner[static_cast<std::size_t>(x)])];
    for (std::size_t j = 0; j < K; ++j)
      cost[i][j] = static_cast<double>(y[i].size()) - overlap[j];
  }
  double best = kInf;
  if (K <= 8) {
    std::vector<int> perm(K);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      double c = 0.0;
      for (std::size_t i = 0; i < K; ++i) c += cost[i][static_cast<std::size_t>(perm[i])];
      best = std::min(best, c);
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    best = solve_assignment(cost).cost;
  }
  return best / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Utility

enum class PruneKind { Hamming, KCenter, KMedian };

/// 1 - Hamming loss of the pruned tree against the instance's target.
/// k-center / k-median pruning measures distances with the beta-combined metric.
inline double clustering_utility(const ClusteringInstance& inst, const MergeFamily& family,
                                 std::span<const double> beta,
                                 PruneKind objective = PruneKind::Hamming) {
  const ClusterTree tree = build_tree(inst, family, beta);
  Partition pruned;
  switch (objective) {
    case PruneKind::Hamming:
      pruned = prune_tree(tree, inst.k(), HammingObjective{inst.target});
      break;
    case PruneKind::KCenter:
    case PruneKind::KMedian: {
      const Matrix d = combine_distance(beta, inst.distances);
      pruned = objective == PruneKind::KCenter ? prune_tree(tree, inst.k(), KCenter{}, d)
                                               : prune_tree(tree, inst.k(), KMedian{}, d);
      break;
    }
  }
  return 1.0 - hamming_loss(pruned, inst.target);
}

// ---------------------------------------------------------------------------
// Boundary analysis for M1
//
// Merge decisions under M1 with alpha > 0 flip only where
//   d1^a + d2^a = d3^a + d4^a
// for distance values d1..d4. Besides a = 0 such an equation has at most one
// positive root, so a sign change on [lo, hi] brackets it.

inline constexpr double kRootTol = 1e-10;
inline constexpr double kRootDedupTol = 1e-9;
inline constexpr int kMaxBoundaryN = 12;

namespace detail {

/// Sign-preserving rescaling of g(a) = e^{a x1} + e^{a x2} - e^{a x3} - e^{a x4}
/// for log-distances x (x may be -inf for a zero distance).
inline double boundary_g(double a, double x1, double x2, double x3, double x4) {
  const double top = std::max({x1, x2, x3, x4});
  auto term = [&](double x) { return x == -kInf ? 0.0 : std::exp(a * (x - top)); };
  return (term(x1) + term(x2)) - (term(x3) + term(x4));
}

inline std::optional<double> boundary_root_logs(double x1, double x2, double x3, double x4,
                                                double lo, double hi) {
  if (x1 > x2) std::swap(x1, x2);
  if (x3 > x4) std::swap(x3, x4);
  if (x1 == x3 && x2 == x4) return std::nullopt;  // identical for every alpha
  double glo = boundary_g(lo, x1, x2, x3, x4);
  const double ghi = boundary_g(hi, x1, x2, x3, x4);
  if (glo == 0.0) return lo;
  if (ghi == 0.0) return hi;
  if ((glo < 0.0) == (ghi < 0.0)) return std::nullopt;
  double a = lo, b = hi;
  while (b - a > kRootTol) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    const double gm = boundary_g(mid, x1, x2, x3, x4);
    if (gm == 0.0) return mid;
    if ((gm < 0.0) == (glo < 0.0)) {
      a = mid;
      glo = gm;
    } else {
      b = mid;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

/// Root in (lo, hi) of d1^a + d2^a - d3^a - d4^a, if the sign changes there.
/// Returns nothing when {d1,d2} == {d3,d4} (the equation holds identically).
inline std::optional<double> boundary_root_m1(double d1, double d2, double d3, double d4,
                                              double lo, double hi) {
  for (double d : {d1, d2, d3, d4})
    require(std::isfinite(d) && d > 0.0, "d", "distances must be positive");
  require(lo > 0.0 && lo < hi && std::isfinite(hi), "alpha_range", "need 0 < lo < hi");
  return detail::boundary_root_logs(std::log(d1), std::log(d2), std::log(d3), std::log(d4), lo, hi);
}

/// Sorted, deduplicated candidate discontinuities of alpha -> utility under
/// M1 on (lo, hi): the roots of every pairwise equation between two
/// {min, max} candidates drawn from the combined distances.
inline std::vector<double> enumerate_boundaries_m1(const Matrix& d, double lo, double hi) {
  const auto n = d.rows();
  if (n > kMaxBoundaryN) {
    const double tuples = std::pow(static_cast<double>(n), 8);
    throw InvalidArgument("n", "boundary enumeration is limited to n <= " +
                                   std::to_string(kMaxBoundaryN) + " (n^8 = " +
                                   std::to_string(tuples) + " tuples)");
  }
  require(lo > 0.0 && lo < hi, "alpha_range", "need 0 < lo < hi");
  std::vector<double> values;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) values.push_back(d(i, j));
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<double> logs;
  for (double v : values) logs.push_back(v > 0.0 ? std::log(v) : -kInf);
  std::vector<std::pair<double, double>> pairs;
  for (std::size_t a = 0; a < logs.size(); ++a)
    for (std::size_t b = a; b < logs.size(); ++b) pairs.emplace_back(logs[a], logs[b]);
  std::vector<double> roots;
  for (std::size_t s = 0; s < pairs.size(); ++s)
    for (std::size_t t = s + 1; t < pairs.size(); ++t) {
      auto r = detail::boundary_root_logs(pairs[s].first, pairs[s].second, pairs[t].first,
                                          pairs[t].second, lo, hi);
      if (r && *r > lo && *r < hi) roots.push_back(*r);
    }
  std::sort(roots.begin(), roots.end());
  std::vector<double> out;
  for (double r : roots)
    if (out.empty() || r - out.back() > kRootDedupTol) out.push_back(r);
  return out;
}

inline std::vector<double> enumerate_boundaries_m1(const ClusteringInstance& inst,
                                                   std::span<const double> beta, double lo,
                                                   double hi) {
  require(inst.n() <= kMaxBoundaryN, "n",
          "boundary enumeration is limited to n <= " + std::to_string(kMaxBoundaryN) +
              " (n^8 = " + std::to_string(std::pow(static_cast<double>(inst.n()), 8)) + " tuples)");
  return enumerate_boundaries_m1(combine_distance(beta, inst.distances), lo, hi);
}

/// The subset of enumerated roots at which the M1 utility actually changes,
/// found by evaluating once inside every gap.
inline std::vector<double> utility_breakpoints_m1(const ClusteringInstance& inst,
                                                  std::span<const double> beta, double lo,
                                                  double hi) {
  const auto roots = enumerate_boundaries_m1(inst, beta, lo, hi);
  std::vector<double> edges{lo};
  edges.insert(edges.end(), roots.begin(), roots.end());
  edges.push_back(hi);
  std::vector<double> gap_value;
  for (std::size_t g = 0; g + 1 < edges.size(); ++g)
    gap_value.push_back(clustering_utility(inst, M1{0.5 * (edges[g] + edges[g + 1])}, beta));
  std::vector<double> out;
  for (std::size_t r = 0; r < roots.size(); ++r)
    if (gap_value[r] != gap_value[r + 1]) out.push_back(roots[r]);
  return out;
}

}  // namespace ddtune

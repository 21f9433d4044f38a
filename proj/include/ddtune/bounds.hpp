#pragma once

// Closed-form pseudo-dimension, generalization-gap and sample-complexity
// calculators, and the catalog of piecewise-structure tuples for the
// clustering and SSL families. All logarithms are base 2 except ln(1/delta).

#include "ddtune/common.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <nlohmann/json.hpp>

#include <optional>

namespace ddtune {

using BigInt = boost::multiprecision::cpp_int;

/// log2 of a positive big integer, accurate to ~1e-15 relative.
inline double log2_big(const BigInt& x) {
  require(x > 0, "x", "log of a nonpositive integer");
  const auto bits = static_cast<long>(boost::multiprecision::msb(x));
  if (bits < 62) return std::log2(x.convert_to<double>());
  const long shift = bits - 60;
  const BigInt top = x >> shift;
  return static_cast<double>(shift) + std::log2(top.convert_to<double>());
}

inline double to_double(const BigInt& x) { return x.convert_to<double>(); }

/// Piecewise-structure parameters (k_F, k_G, q, M, Delta, d).
struct PfaffianParams {
  BigInt k_F = 0;
  BigInt k_G = 0;
  BigInt q = 0;
  BigInt M = 0;
  BigInt Delta = 0;
  BigInt d = 0;
  /// Set when a parameter was not given by the source and had to be inferred.
  std::string note;

  friend bool operator==(const PfaffianParams& a, const PfaffianParams& b) {
    return a.k_F == b.k_F && a.k_G == b.k_G && a.q == b.q && a.M == b.M && a.Delta == b.Delta &&
           a.d == b.d;
  }
};

namespace detail {

inline void nonnegative(const BigInt& v, const char* name) {
  require(v >= 0, name, "must be a nonnegative integer");
}

/// c * log2(x), with c == 0 contributing 0 whatever x is.
inline double weighted_log(const BigInt& c, const BigInt& x) {
  if (c == 0) return 0.0;
  return to_double(c) * log2_big(x);
}

}  // namespace detail

/// d^2 q^2 + 2dq log(Delta+M) + 4dq log d + 2d log(Delta K) + 16d.
inline double pdim_pfaffian_gj(const BigInt& d, const BigInt& q, const BigInt& M,
                               const BigInt& Delta, const BigInt& K) {
  for (auto [v, n] : {std::pair{&d, "d"}, {&q, "q"}, {&M, "M"}, {&Delta, "Delta"}, {&K, "K"}})
    detail::nonnegative(*v, n);
  require(d >= 1, "d", "must be at least 1");
  require(Delta + M >= 1, "Delta", "Delta + M must be positive");
  require(Delta * K >= 1, "K", "Delta * K must be positive");
  const BigInt dq = d * q;
  return to_double(dq * dq) + detail::weighted_log(2 * dq, Delta + M) +
         detail::weighted_log(4 * dq, d) + detail::weighted_log(2 * d, Delta * K) +
         16.0 * to_double(d);
}

/// The same bound with K = k_F + k_G.
inline double pdim_piecewise(const BigInt& d, const BigInt& q, const BigInt& M,
                             const BigInt& Delta, const BigInt& k_F, const BigInt& k_G) {
  detail::nonnegative(k_F, "k_F");
  detail::nonnegative(k_G, "k_G");
  return pdim_pfaffian_gj(d, q, M, Delta, k_F + k_G);
}

/// q^2 d^2 + qd log(Delta+M) + qd log d + log n_regions, unit constant.
inline double pdim_partition(const BigInt& d, const BigInt& q, const BigInt& M,
                             const BigInt& Delta, const BigInt& n_regions) {
  for (auto [v, n] : {std::pair{&d, "d"}, {&q, "q"}, {&M, "M"}, {&Delta, "Delta"}})
    detail::nonnegative(*v, n);
  require(n_regions >= 1, "n_regions", "must be at least 1");
  const BigInt qd = q * d;
  if (qd > 0) {
    require(Delta + M >= 1, "Delta", "Delta + M must be positive");
    require(d >= 1, "d", "must be at least 1");
  }
  return to_double(qd * qd) + detail::weighted_log(qd, Delta + M) + detail::weighted_log(qd, d) +
         log2_big(n_regions);
}

/// P log(P k_G) with P = d^2 q^2 + dq log(Delta+M) + dq log d + d, unit
/// constant: the bound obtained through the older piecewise framework.
inline double pdim_prior_framework(const BigInt& d, const BigInt& q, const BigInt& M,
                                   const BigInt& Delta, const BigInt& k_G) {
  for (auto [v, n] : {std::pair{&d, "d"}, {&q, "q"}, {&M, "M"}, {&Delta, "Delta"}})
    detail::nonnegative(*v, n);
  require(d >= 1, "d", "must be at least 1");
  require(Delta + M >= 1, "Delta", "Delta + M must be positive");
  require(k_G >= 1, "k_G", "must be at least 1");
  const BigInt dq = d * q;
  const double P = to_double(dq * dq) + detail::weighted_log(dq, Delta + M) +
                   detail::weighted_log(dq, d) + to_double(d);
  return P * (std::log2(P) + log2_big(k_G));
}

// ---------------------------------------------------------------------------
// Catalog

enum class BoundFamily { H1, H2, H3, G };

inline BoundFamily parse_bound_family(const std::string& s) {
  if (s == "H1") return BoundFamily::H1;
  if (s == "H2") return BoundFamily::H2;
  if (s == "H3") return BoundFamily::H3;
  if (s == "G") return BoundFamily::G;
  throw InvalidArgument("family", "unknown family '" + s + "' (expected H1, H2, H3 or G)");
}

inline const char* bound_family_name(BoundFamily f) {
  switch (f) {
    case BoundFamily::H1: return "H1";
    case BoundFamily::H2: return "H2";
    case BoundFamily::H3: return "H3";
    case BoundFamily::G: return "G";
  }
  return "?";
}

/// Structure tuple of a family at n points and L metrics. H1/H2/H3 are the
/// M1/M2/M3 linkage utilities (d = L+1, L+1, L), G the RBF-graph SSL loss
/// (parameters sigma and beta). For G, `n_unlabeled` defaults to n/2.
inline PfaffianParams family_params(BoundFamily family, int n, int L,
                                    std::optional<int> n_unlabeled = std::nullopt) {
  require(n >= 2, "n", "must be at least 2");
  require(L >= 1, "L", "must be at least 1");
  const BigInt N = n;
  const BigInt two_4n = BigInt(1) << (4 * n);
  PfaffianParams p;
  switch (family) {
    case BoundFamily::H1:
    case BoundFamily::H2:
      p.k_F = N + 1;
      p.k_G = family == BoundFamily::H1 ? pow(N, 8) : two_4n;
      p.q = 3 * N * N;
      p.M = 2;
      p.Delta = 1;
      p.d = L + 1;
      break;
    case BoundFamily::H3:
      p.k_F = N + 1;
      p.k_G = two_4n;
      p.q = N * N;
      p.M = 1;
      p.Delta = 1;
      p.d = L;
      break;
    case BoundFamily::G: {
      const int u = n_unlabeled.value_or(n / 2);
      require(u >= 1 && u < n, "n_unlabeled", "must be in [1, n-1]");
      p.k_F = u + 1;
      p.k_G = u + 1;
      p.q = N * N + 1;
      p.M = 5;
      p.Delta = u;
      p.d = L + 1;
      p.note = "source tuple has five entries; d = L+1 inferred (sigma plus L weights)";
      break;
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Generalization

/// H sqrt((pdim + ln(1/delta)) / N), with the unknown constant set to 1.
inline double generalization_gap(double pdim, double H, double N, double delta) {
  require(delta > 0.0 && delta < 1.0, "delta", "must lie in (0,1)");
  require(N >= 1.0, "N", "must be at least 1");
  require(H > 0.0, "H", "must be positive");
  require(pdim >= 0.0, "pdim", "must be nonnegative");
  return H * std::sqrt((pdim + std::log(1.0 / delta)) / N);
}

/// Smallest N with generalization_gap(pdim, H, N, delta) <= gap.
inline std::uint64_t sample_complexity(double pdim, double H, double gap, double delta) {
  require(delta > 0.0 && delta < 1.0, "delta", "must lie in (0,1)");
  require(gap > 0.0, "eps", "must be positive");
  require(H > 0.0, "H", "must be positive");
  require(pdim >= 0.0, "pdim", "must be nonnegative");
  const double n = std::ceil(H * H * (pdim + std::log(1.0 / delta)) / (gap * gap));
  return static_cast<std::uint64_t>(std::max(1.0, n));
}

// ---------------------------------------------------------------------------
// Reports

struct BoundReport {
  std::string formula_name;
  double pdim_bound = 0.0;
  nlohmann::json inputs;
  int log_base = 2;
  std::string note;
};

inline std::string big_to_string(const BigInt& v) { return v.str(); }

inline nlohmann::json params_to_json(const PfaffianParams& p) {
  auto num = [](const BigInt& v) -> nlohmann::json {
    if (v <= BigInt(std::numeric_limits<std::int64_t>::max())) return v.convert_to<std::int64_t>();
    return v.str();
  };
  nlohmann::json j{{"k_F", num(p.k_F)}, {"k_G", num(p.k_G)}, {"q", num(p.q)},
                   {"M", num(p.M)},     {"Delta", num(p.Delta)}, {"d", num(p.d)}};
  if (!p.note.empty()) j["note"] = p.note;
  return j;
}

inline BoundReport piecewise_report(const PfaffianParams& p) {
  BoundReport r;
  r.formula_name = "pdim_piecewise";
  r.pdim_bound = pdim_piecewise(p.d, p.q, p.M, p.Delta, p.k_F, p.k_G);
  r.inputs = params_to_json(p);
  r.note = p.note;
  return r;
}

inline nlohmann::json to_json(const BoundReport& r) {
  nlohmann::json j{{"formula", r.formula_name},
                   {"pdim_bound", r.pdim_bound},
                   {"inputs", r.inputs},
                   {"log_base", r.log_base}};
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

}  // namespace ddtune

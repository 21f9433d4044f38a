#pragma once

// Shared vocabulary for the ddtune headers: error types, numeric helpers and
// a tiny deterministic parallel loop.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace ddtune {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kSimplexTol = 1e-12;

/// Base class of everything ddtune throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied argument or configuration value is invalid.
/// `field()` names the offending parameter so front ends can report it.
class InvalidArgument : public Error {
 public:
  InvalidArgument(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)), message_(what) {}
  const std::string& field() const noexcept { return field_; }
  /// The description without the field prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  std::string field_;
  std::string message_;
};

/// A file could not be parsed into a valid object.
class ParseError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Mathematical domain violation, e.g. 0 raised to a negative power.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Linear algebra failed or was too ill-conditioned to trust.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver hit its iteration cap.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

inline void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw InvalidArgument(field, what);
}

/// log(exp(a) + exp(b)) without overflow; handles -inf operands.
inline double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

inline double log_sum_exp(std::span<const double> xs) {
  double hi = -kInf;
  for (double x : xs) hi = std::max(hi, x);
  if (hi == -kInf || hi == kInf) return hi;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - hi);
  return hi + std::log(s);
}

/// Pairwise (cascade) summation in index order. The result depends only on
/// the sequence, never on thread scheduling.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

inline double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return pairwise_sum(xs) / static_cast<double>(xs.size());
}

/// Checks that `beta` lies on the probability simplex of dimension `dim`.
inline void check_simplex(std::span<const double> beta, std::size_t dim,
                          const std::string& field = "beta") {
  require(beta.size() == dim, field,
          "expected " + std::to_string(dim) + " weights, got " + std::to_string(beta.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < beta.size(); ++i) {
    require(std::isfinite(beta[i]) && beta[i] >= 0.0, field,
            "entry " + std::to_string(i) + " is negative or not finite");
    s += beta[i];
  }
  require(std::abs(s - 1.0) <= kSimplexTol, field, "weights do not sum to 1");
}

inline std::vector<double> uniform_simplex_point(std::size_t dim) {
  return std::vector<double>(dim, 1.0 / static_cast<double>(dim));
}

/// Runs fn(i) for i in [0, count). Each index is handled by exactly one
/// worker, so writes to slot i are race-free and results are independent of
/// `threads`.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn, unsigned threads = 0) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  if (threads <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < count; i += threads) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// 64-bit FNV-1a; used for config hashes written into output headers.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ddtune

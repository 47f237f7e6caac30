#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <system_error>
#include <thread>
#include <vector>

namespace viscmod {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ////////////////////////////////////////////////////////////////////////////
// Error hierarchy. The CLI maps each family onto an exit code.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or precondition on inputs (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// p-Laplace diffusion evaluated at a zero gradient with exponent < 2.
class SingularDiffusion : public Error {
 public:
  using Error::Error;
};

/// Off-diagonal diffusion too large for the positive-coefficient stencil.
class NonMonotoneStencil : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// NaN or infinity during pseudo-time iteration (exit code 3).
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t iteration)
      : Error(what), iteration_(iteration) {}
  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t iteration_;
};

class SamplerStarvation : public Error {
 public:
  using Error::Error;
};

/// An operation refused because a verified premise does not hold (exit code 1).
class RefusalError : public Error {
 public:
  using Error::Error;
};

// ////////////////////////////////////////////////////////////////////////////
// Seeding. All randomness derives from a base seed through splitmix64, so the
// stream used by sample i depends only on (base, i), not on thread layout.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31U);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t base, std::uint64_t counter = 0) {
  return Rng(splitmix64(base ^ counter));
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double gaussian(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

// ////////////////////////////////////////////////////////////////////////////
// Data-parallel loop over [0, count) split into contiguous chunks. The body
// receives (begin, end, chunk_index); callers reduce per-chunk results in
// chunk order, which keeps every reduction independent of the thread count
// as long as the reduction itself is order-insensitive (max) or the chunks
// are concatenated in order.

struct Parallelism {
  int threads = 1;
};

template <class Body>
void parallel_chunks(std::size_t count, Parallelism par, Body&& body) {
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(par.threads > 0 ? par.threads : 1, count));
  if (workers == 1) {
    body(std::size_t{0}, count, std::size_t{0});
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  const std::size_t base = count / workers;
  const std::size_t extra = count % workers;
  std::size_t begin = 0;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t len = base + (w < extra ? 1 : 0);
    pool.emplace_back([&body, &errors, begin, len, w] {
      try {
        body(begin, begin + len, w);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
    begin += len;
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline std::size_t chunk_count(std::size_t count, Parallelism par) {
  return std::max<std::size_t>(1, std::min<std::size_t>(par.threads > 0 ? par.threads : 1, count));
}

// ////////////////////////////////////////////////////////////////////////////
// Small numeric helpers.

/// Shortest round-trip decimal representation.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc{}) return "nan";
  return std::string(buf, res.ptr);
}

inline Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

inline double min_eigenvalue(const Mat& sym) {
  Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double max_eigenvalue(const Mat& sym) {
  Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

/// Random symmetric matrix with standard normal entries times `scale`.
inline Mat random_symmetric(Rng& rng, int n, double scale = 1.0) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = scale * gaussian(rng);
  return m;
}

/// Random positive semi-definite matrix G Gᵀ.
inline Mat random_psd(Rng& rng, int n, double scale = 1.0) {
  Mat g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = scale * gaussian(rng);
  return g * g.transpose();
}

inline Vec random_unit(Rng& rng, int n) {
  Vec v(n);
  do {
    for (int i = 0; i < n; ++i) v(i) = gaussian(rng);
  } while (v.norm() < 1e-8);
  return v / v.norm();
}

}  // namespace viscmod

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace projdim {

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-composable edge words in graph-directed systems.
class PathError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Deterministic random source. mt19937_64 has a fully specified stream, and
// the conversions below avoid std::*_distribution, whose output is
// implementation-defined; identical seeds reproduce identical runs on any
// conforming compiler.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  // Uniform in [0, 1).
  double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log1p(-u1));  // log(1-u1), never log(0)
    double a = 6.28318530717958647692529 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::size_t index(std::size_t bound) {
    return std::size_t(uniform() * double(bound)) % bound;
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline int& thread_count_storage() {
  static int count = std::max(1u, std::thread::hardware_concurrency());
  return count;
}
inline void set_thread_count(int n) { thread_count_storage() = std::max(1, n); }
inline int thread_count() { return std::max(1, thread_count_storage()); }

// fn(lo, hi) over contiguous index ranges. Callers must write results to
// disjoint slots so the outcome does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn, int threads = 0) {
  if (count == 0) return;
  if (threads <= 0) threads = thread_count();
  std::size_t nt = std::min<std::size_t>(std::size_t(threads), count);
  if (nt <= 1) {
    fn(std::size_t{0}, count);
    return;
  }
  std::vector<std::thread> pool;
  std::size_t chunk = (count + nt - 1) / nt;
  for (std::size_t t = 0; t < nt; ++t) {
    std::size_t lo = t * chunk;
    std::size_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

// Weighted least squares y = a + b x. Weights need not be normalized; the
// slope standard error reduces to the usual OLS expression at unit weights.
inline LinearFit fit_line_weighted(const std::vector<double>& x,
                                   const std::vector<double>& y,
                                   const std::vector<double>& w) {
  std::size_t m = x.size();
  if (m != y.size() || m != w.size())
    throw ValidationError("fit_line: mismatched input lengths");
  if (m < 2) throw ValidationError("fit_line: need at least two points");
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  if (sw <= 0) throw ValidationError("fit_line: nonpositive total weight");
  double xb = sx / sw, yb = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += w[i] * (x[i] - xb) * (x[i] - xb);
    sxy += w[i] * (x[i] - xb) * (y[i] - yb);
  }
  if (sxx <= 0) throw ValidationError("fit_line: x values are all equal");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = yb - fit.slope * xb;
  double ss_res = 0;
  for (std::size_t i = 0; i < m; ++i) {
    double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += w[i] * r * r;
  }
  if (m > 2) fit.slope_stderr = std::sqrt((ss_res / double(m - 2)) / sxx);
  return fit;
}

inline LinearFit fit_line(const std::vector<double>& x,
                          const std::vector<double>& y) {
  return fit_line_weighted(x, y, std::vector<double>(x.size(), 1.0));
}

// %.17g always round-trips a double through text.
inline std::string format_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

}  // namespace projdim

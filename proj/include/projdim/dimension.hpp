#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "projdim/grassmannian.hpp"
#include "projdim/ifs.hpp"

// Box counting and dimension estimation: covering counts over jittered grids,
// log-log regression, greedy upper bounds and natural-measure lower bounds on
// Hausdorff content, and box dimension of finite direction sets.

namespace projdim {

struct BoxCountSeries {
  std::vector<double> scales;      // strictly decreasing
  std::vector<std::size_t> counts; // N(A, delta) per scale
  int grid_offsets_averaged = 1;   // jittered grids per scale
};

enum class DimensionMethod { box_regression, content, closed_form };

inline std::string to_string(DimensionMethod m) {
  switch (m) {
    case DimensionMethod::box_regression: return "box_regression";
    case DimensionMethod::content: return "content";
    case DimensionMethod::closed_form: return "closed_form";
  }
  return "unknown";
}

inline DimensionMethod dimension_method_from_string(const std::string& s) {
  if (s == "box_regression") return DimensionMethod::box_regression;
  if (s == "content") return DimensionMethod::content;
  if (s == "closed_form") return DimensionMethod::closed_form;
  throw ValidationError("unknown dimension method: " + s);
}

struct DimensionEstimate {
  double value = 0.0;
  double std_error = 0.0;
  double delta_min = 0.0;
  double delta_max = 0.0;
  DimensionMethod method = DimensionMethod::box_regression;
};

namespace detail {

// Exact packing when indices fit 21 bits each (dim <= 3); hashed otherwise.
inline std::uint64_t cell_key(const long long* idx, int dim) {
  bool packable = dim <= 3;
  if (packable)
    for (int i = 0; i < dim; ++i)
      if (idx[i] < -(1LL << 20) || idx[i] >= (1LL << 20)) packable = false;
  if (packable) {
    std::uint64_t key = 1;
    for (int i = 0; i < dim; ++i)
      key = (key << 21) | std::uint64_t(idx[i] + (1LL << 20));
    return key;
  }
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (int i = 0; i < dim; ++i) h = mix_u64(h ^ std::uint64_t(idx[i] + (1LL << 40)));
  return h | 0x8000000000000000ULL;
}

}  // namespace detail

// Occupied cells of an axis-aligned grid of side delta, minimized over
// jitter_count grid offsets (the first offset is always zero). Grid counts
// bound ball-cover counts within dimension-dependent factors that cancel in
// the regression.
inline std::size_t box_count(const double* pts, std::size_t count, int dim, double delta,
                             int jitter_count = 1, std::uint64_t seed = 0x9e3779b9ULL) {
  if (count == 0) throw ValidationError("box_count: empty point set");
  if (!(delta > 0.0)) throw ValidationError("box_count: delta must be positive");
  if (jitter_count < 1) jitter_count = 1;
  Rng rng(seed);
  std::size_t best = std::size_t(-1);
  std::vector<double> offset(std::size_t(dim), 0.0);
  long long idx[16];
  for (int pass = 0; pass < jitter_count; ++pass) {
    if (pass > 0)
      for (double& o : offset) o = rng.uniform(0.0, delta);
    std::unordered_set<std::uint64_t> cells;
    cells.reserve(count * 2);
    for (std::size_t p = 0; p < count; ++p) {
      const double* x = pts + p * std::size_t(dim);
      for (int i = 0; i < dim; ++i)
        idx[i] = (long long)std::floor((x[i] - offset[std::size_t(i)]) / delta);
      cells.insert(detail::cell_key(idx, dim));
    }
    best = std::min(best, cells.size());
  }
  return best;
}

inline std::size_t box_count(const std::vector<double>& pts, int dim, double delta,
                             int jitter_count = 1, std::uint64_t seed = 0x9e3779b9ULL) {
  return box_count(pts.data(), pts.size() / std::size_t(dim), dim, delta, jitter_count, seed);
}

inline std::size_t box_count(const PointCloud& cloud, double delta, int jitter_count = 1,
                             std::uint64_t seed = 0x9e3779b9ULL) {
  return box_count(cloud.coords.data(), cloud.size(), cloud.ambient_dim, delta, jitter_count,
                   seed);
}

inline BoxCountSeries box_count_series(const double* pts, std::size_t count, int dim,
                                       const std::vector<double>& scales, int jitter_count = 1,
                                       std::uint64_t seed = 0x9e3779b9ULL) {
  if (scales.empty()) throw ValidationError("box_count_series: no scales");
  for (std::size_t i = 0; i + 1 < scales.size(); ++i)
    if (!(scales[i] > scales[i + 1]))
      throw ValidationError("box_count_series: scales must be strictly decreasing");
  BoxCountSeries series;
  series.scales = scales;
  series.grid_offsets_averaged = jitter_count;
  series.counts.resize(scales.size());
  for (std::size_t i = 0; i < scales.size(); ++i)
    series.counts[i] = box_count(pts, count, dim, scales[i], jitter_count, seed + i);
  return series;
}

// Dyadic ladder between spread/2 and 2*resolution, trimmed at the coarse end
// so every retained scale holds at least min_cells occupied cells.
inline BoxCountSeries auto_box_series(const double* pts, std::size_t count, int dim,
                                      double resolution, int jitter_count = 1,
                                      std::uint64_t seed = 0x9e3779b9ULL,
                                      std::size_t min_cells = 10) {
  if (count == 0) throw ValidationError("auto_box_series: empty point set");
  double lo[16], hi[16];
  for (int i = 0; i < dim; ++i) {
    lo[i] = 1e300;
    hi[i] = -1e300;
  }
  for (std::size_t p = 0; p < count; ++p)
    for (int i = 0; i < dim; ++i) {
      double v = pts[p * std::size_t(dim) + std::size_t(i)];
      lo[i] = std::min(lo[i], v);
      hi[i] = std::max(hi[i], v);
    }
  double spread = 0;
  for (int i = 0; i < dim; ++i) spread = std::max(spread, hi[i] - lo[i]);
  spread = std::max(spread, std::max(resolution * 16.0, 1e-12));

  double coarse = std::exp2(std::floor(std::log2(spread / 2.0)));
  double fine = std::max(resolution, spread * std::exp2(-24));
  std::vector<double> scales;
  for (double d = coarse; d >= fine && scales.size() < 24; d *= 0.5) scales.push_back(d);
  if (scales.size() < 4) {
    scales.clear();
    for (int j = 0; j < 4; ++j) scales.push_back(coarse * std::exp2(-j));
  }
  BoxCountSeries series = box_count_series(pts, count, dim, scales, jitter_count, seed);
  // trim coarse scales with too few cells, keeping at least four scales
  std::size_t first = 0;
  while (first + 4 < series.scales.size() && series.counts[first] < min_cells) ++first;
  series.scales.erase(series.scales.begin(), series.scales.begin() + long(first));
  series.counts.erase(series.counts.begin(), series.counts.begin() + long(first));
  // drop fine scales where the sample saturates (count ~ point count); those
  // rungs measure the sample, not the set, and drag the slope down
  while (series.scales.size() > 4 &&
         double(series.counts.back()) >= 0.95 * double(count)) {
    series.scales.pop_back();
    series.counts.pop_back();
  }
  return series;
}

inline BoxCountSeries auto_box_series(const PointCloud& cloud, int jitter_count = 1,
                                      std::uint64_t seed = 0x9e3779b9ULL,
                                      std::size_t min_cells = 10) {
  return auto_box_series(cloud.coords.data(), cloud.size(), cloud.ambient_dim,
                         cloud.resolution, jitter_count, seed, min_cells);
}

// Least-squares slope of log N against log(1/delta), clamped to [0, ambient].
// Self-similar counts oscillate multiplicatively around the power law, which
// the OLS residual error understates badly; the reported error also includes
// the dispersion of slopes over contiguous sub-windows, which tracks that
// oscillation directly.
inline DimensionEstimate upper_box_dimension(const BoxCountSeries& series, int ambient_dim) {
  if (series.scales.size() < 4)
    throw ValidationError("upper_box_dimension: need at least 4 scales");
  if (!(series.scales.front() / series.scales.back() >= 4.0 - 1e-9))
    throw ValidationError("upper_box_dimension: scales must span at least two octaves");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < series.scales.size(); ++i) {
    x.push_back(std::log(1.0 / series.scales[i]));
    y.push_back(std::log(double(series.counts[i])));
  }
  LinearFit fit = fit_line(x, y);
  double window_spread = 0.0;
  std::size_t m = x.size();
  if (m >= 6) {
    std::size_t win = std::max<std::size_t>(4, m / 2);
    std::vector<double> slopes;
    for (std::size_t lo = 0; lo + win <= m; ++lo) {
      if (!(series.scales[lo] / series.scales[lo + win - 1] >= 4.0 - 1e-9)) continue;
      std::vector<double> xs(x.begin() + long(lo), x.begin() + long(lo + win));
      std::vector<double> ys(y.begin() + long(lo), y.begin() + long(lo + win));
      slopes.push_back(fit_line(xs, ys).slope);
    }
    if (slopes.size() >= 2) {
      double mean = 0;
      for (double s : slopes) mean += s;
      mean /= double(slopes.size());
      double var = 0;
      for (double s : slopes) var += (s - mean) * (s - mean);
      // adjacent windows overlap almost entirely, so the raw spread
      // overstates the slope error; halving matches the handful of
      // effectively independent windows
      window_spread = 0.5 * std::sqrt(var / double(slopes.size()));
    }
  }
  DimensionEstimate est;
  est.value = std::clamp(fit.slope, 0.0, double(ambient_dim));
  est.std_error = std::max(fit.slope_stderr, window_spread);
  est.delta_min = series.scales.back();
  est.delta_max = series.scales.front();
  est.method = DimensionMethod::box_regression;
  return est;
}

namespace detail {

// Coarsen a point set onto grid-cell centers until at most max_points remain.
// The returned resolution accounts for the displacement to cell centers, so
// covers of the reduced set still cover the original set.
inline void grid_reduce(std::vector<double>& pts, int dim, double& resolution,
                        std::size_t max_points) {
  std::size_t count = pts.size() / std::size_t(dim);
  if (count <= max_points) return;
  double spread = 0;
  for (int i = 0; i < dim; ++i) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t p = 0; p < count; ++p) {
      double v = pts[p * std::size_t(dim) + std::size_t(i)];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    spread = std::max(spread, hi - lo);
  }
  double cell = std::max(spread * std::exp2(-20), 1e-300);
  while (true) {
    std::unordered_set<std::uint64_t> seen;
    std::vector<double> reduced;
    long long idx[16];
    bool ok = true;
    for (std::size_t p = 0; p < count; ++p) {
      const double* x = pts.data() + p * std::size_t(dim);
      for (int i = 0; i < dim; ++i) idx[i] = (long long)std::floor(x[i] / cell);
      if (seen.insert(cell_key(idx, dim)).second) {
        for (int i = 0; i < dim; ++i) reduced.push_back((double(idx[i]) + 0.5) * cell);
        if (reduced.size() / std::size_t(dim) > max_points) {
          ok = false;
          break;
        }
      }
    }
    if (ok) {
      pts = std::move(reduced);
      resolution += cell * std::sqrt(double(dim)) * 0.5;
      return;
    }
    cell *= 2.0;
  }
}

}  // namespace detail

// Greedy multi-scale ball-cover upper bound on the s-dimensional Hausdorff
// content of the set sampled by `pts`. Candidate balls sit at data points with
// radii taken from nearest-neighbor ladders; `resolution` inflates every ball
// so covers of the sample certifiably cover the underlying set. Any cover
// witnesses the infimum, so the result is always an upper bound.
inline double hausdorff_content_upper(const double* pts_in, std::size_t count_in, int dim,
                                      double s, std::size_t cover_budget = 4096,
                                      double resolution = 0.0) {
  if (s < 0.0) throw ValidationError("hausdorff_content_upper: s must be >= 0");
  if (count_in == 0) return 0.0;
  std::vector<double> pts(pts_in, pts_in + count_in * std::size_t(dim));
  double res = resolution;
  detail::grid_reduce(pts, dim, res, 3000);
  std::size_t count = pts.size() / std::size_t(dim);

  auto ball_cost = [&](double r) { return std::pow(2.0 * (r + res), s); };

  std::vector<char> covered(count, 0);
  std::size_t uncovered = count;
  double total = 0.0;
  std::size_t balls = 0;

  struct Option {
    double effectiveness;
    double radius;
    std::size_t center;
    std::size_t stamp;  // uncovered count at evaluation time
  };
  auto evaluate = [&](std::size_t c) {
    // best cost-per-newly-covered among nearest-neighbor radii ladders
    const double* xc = pts.data() + c * std::size_t(dim);
    std::vector<double> d;
    d.reserve(uncovered);
    for (std::size_t p = 0; p < count; ++p) {
      if (covered[p]) continue;
      double acc = 0;
      for (int i = 0; i < dim; ++i) {
        double t = pts[p * std::size_t(dim) + std::size_t(i)] - xc[i];
        acc += t * t;
      }
      d.push_back(std::sqrt(acc));
    }
    std::sort(d.begin(), d.end());
    Option best{1e300, 0.0, c, uncovered};
    for (std::size_t K = 1; K <= d.size(); K = (K < 8 ? K + 1 : K * 2)) {
      double r = d[K - 1];
      double eff = ball_cost(r) / double(K);
      if (eff < best.effectiveness) {
        best.effectiveness = eff;
        best.radius = r;
      }
      if (K == d.size()) break;
      if (K * 2 > d.size()) {
        double r_all = d.back();
        double eff_all = ball_cost(r_all) / double(d.size());
        if (eff_all < best.effectiveness) {
          best.effectiveness = eff_all;
          best.radius = r_all;
        }
        break;
      }
    }
    return best;
  };

  // lazy greedy: re-evaluate the top option until its snapshot is current
  std::vector<Option> heap;
  auto cmp = [](const Option& a, const Option& b) { return a.effectiveness > b.effectiveness; };
  for (std::size_t c = 0; c < count; ++c) heap.push_back(evaluate(c));
  std::make_heap(heap.begin(), heap.end(), cmp);

  while (uncovered > 0 && balls < cover_budget && !heap.empty()) {
    std::pop_heap(heap.begin(), heap.end(), cmp);
    Option top = heap.back();
    heap.pop_back();
    if (covered[top.center]) continue;
    if (top.stamp != uncovered) {
      Option fresh = evaluate(top.center);
      heap.push_back(fresh);
      std::push_heap(heap.begin(), heap.end(), cmp);
      continue;
    }
    // commit
    const double* xc = pts.data() + top.center * std::size_t(dim);
    double r2 = (top.radius + 1e-12) * (top.radius + 1e-12);
    for (std::size_t p = 0; p < count; ++p) {
      if (covered[p]) continue;
      double acc = 0;
      for (int i = 0; i < dim; ++i) {
        double t = pts[p * std::size_t(dim) + std::size_t(i)] - xc[i];
        acc += t * t;
      }
      if (acc <= r2) {
        covered[p] = 1;
        --uncovered;
      }
    }
    total += ball_cost(top.radius);
    ++balls;
  }
  // budget exhausted: close the cover with per-point balls
  total += double(uncovered) * ball_cost(0.0);
  // a single ball around everything is also a valid cover; never do worse
  {
    double lo[16], hi[16];
    for (int i = 0; i < dim; ++i) {
      lo[i] = 1e300;
      hi[i] = -1e300;
    }
    for (std::size_t p = 0; p < count; ++p)
      for (int i = 0; i < dim; ++i) {
        double v = pts[p * std::size_t(dim) + std::size_t(i)];
        lo[i] = std::min(lo[i], v);
        hi[i] = std::max(hi[i], v);
      }
    double r = 0;
    for (std::size_t p = 0; p < count; ++p) {
      double acc = 0;
      for (int i = 0; i < dim; ++i) {
        double t = pts[p * std::size_t(dim) + std::size_t(i)] - 0.5 * (lo[i] + hi[i]);
        acc += t * t;
      }
      r = std::max(r, acc);
    }
    total = std::min(total, ball_cost(std::sqrt(r)));
  }
  return total;
}

inline double hausdorff_content_upper(const std::vector<double>& pts, int dim, double s,
                                      std::size_t cover_budget = 4096, double resolution = 0.0) {
  return hausdorff_content_upper(pts.data(), pts.size() / std::size_t(dim), dim, s, cover_budget,
                                 resolution);
}

// Lower bound on the s-dimensional Hausdorff content carried by a cloud (or a
// slice of one) with equal-ratio self-similar provenance. The natural measure
// gives each depth-j word mass N^{-j}; the bound is total mass divided by
// 2^s times the largest observed ball-mass ratio mu(B(x,r)) / (2r)^s.
inline double hausdorff_content_lower(const PointCloud& cloud, double s) {
  if (cloud.source != CloudSource::self_similar || cloud.words.size() != cloud.size() ||
      cloud.branch_count < 2)
    throw ValidationError("hausdorff_content_lower: symbolic provenance missing");
  if (!(cloud.common_ratio > 0.0))
    throw ValidationError("hausdorff_content_lower: maps must share one ratio");
  if (cloud.size() == 0) return 0.0;
  double N = double(cloud.branch_count);
  double sigma = std::log(N) / std::log(1.0 / cloud.common_ratio);
  if (s > sigma + 1e-12) return 0.0;
  if (s < 0.0) throw ValidationError("hausdorff_content_lower: s must be >= 0");

  std::size_t count = cloud.size();
  int dim = cloud.ambient_dim;
  std::vector<double> mass(count);
  double mu_total = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    mass[i] = std::pow(N, -double(cloud.words[i].letters.size()));
    mu_total += mass[i];
  }

  // diameter of the sample
  double diam = 0.0;
  {
    double lo[16], hi[16];
    for (int i = 0; i < dim; ++i) {
      lo[i] = 1e300;
      hi[i] = -1e300;
    }
    for (std::size_t p = 0; p < count; ++p)
      for (int i = 0; i < dim; ++i) {
        double v = cloud.coords[p * std::size_t(dim) + std::size_t(i)];
        lo[i] = std::min(lo[i], v);
        hi[i] = std::max(hi[i], v);
      }
    double acc = 0;
    for (int i = 0; i < dim; ++i) acc += (hi[i] - lo[i]) * (hi[i] - lo[i]);
    diam = std::sqrt(acc);
  }
  if (diam <= 0.0) diam = std::max(cloud.cover_radius * 8.0, 1e-12);

  double cover = std::max(cloud.cover_radius, 1e-300);
  std::size_t stride = std::max<std::size_t>(1, count / 512);
  double c_emp = 0.0;
  std::vector<double> dists(count);
  for (std::size_t c = 0; c < count; c += stride) {
    const double* xc = cloud.coords.data() + c * std::size_t(dim);
    for (std::size_t p = 0; p < count; ++p) {
      double acc = 0;
      for (int i = 0; i < dim; ++i) {
        double t = cloud.coords[p * std::size_t(dim) + std::size_t(i)] - xc[i];
        acc += t * t;
      }
      dists[p] = std::sqrt(acc);
    }
    for (double rho = diam; rho > 4.0 * cover; rho *= 0.70710678118654752) {
      double mu = 0.0;
      for (std::size_t p = 0; p < count; ++p)
        if (dists[p] <= rho) mu += mass[p];
      // shrink the radius by the cover slack so the empirical ball mass
      // dominates the true ball mass at radius rho - 2*cover
      double r_eff = rho - 2.0 * cover;
      if (r_eff <= 0) continue;
      c_emp = std::max(c_emp, mu / std::pow(2.0 * r_eff, s));
    }
  }
  if (c_emp <= 0.0) return 0.0;
  return mu_total / (c_emp * std::pow(2.0, s));
}

// Box-count series of a finite direction set in the projector metric, by
// greedy covering at each scale. The regression slope is an upper-box proxy:
// an upper bound for the packing dimension of whatever the sample represents.
inline DimensionEstimate direction_set_box_dimension(const std::vector<Subspace>& dirs,
                                                     const std::vector<double>& scales) {
  if (dirs.empty()) throw ValidationError("direction_set_box_dimension: no directions");
  int n = dirs[0].n(), k = dirs[0].k();
  BoxCountSeries series;
  series.scales = scales;
  series.grid_offsets_averaged = 1;
  double prune_hi = std::sqrt(2.0 * double(k));
  for (double delta : scales) {
    std::vector<char> covered(dirs.size(), 0);
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      if (covered[i]) continue;
      ++cnt;
      covered[i] = 1;
      for (std::size_t j = i + 1; j < dirs.size(); ++j) {
        if (covered[j]) continue;
        double frob = 0;
        for (std::size_t t = 0; t < dirs[i].projector().a.size(); ++t) {
          double d = dirs[i].projector().a[t] - dirs[j].projector().a[t];
          frob += d * d;
        }
        frob = std::sqrt(frob);
        if (frob <= delta) {
          covered[j] = 1;
          continue;
        }
        if (frob > delta * prune_hi) continue;
        if (metric(dirs[i], dirs[j]) <= delta) covered[j] = 1;
      }
    }
    series.counts.push_back(cnt);
  }
  return upper_box_dimension(series, k * (n - k));
}

}  // namespace projdim

#pragma once

#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "projdim/linalg.hpp"

// Self-similar and graph-directed iterated function systems: attractor point
// clouds with symbolic provenance, separation certificates, similarity and
// spectral dimensions, and transformation groups.

namespace projdim {

struct Similarity {
  double ratio = 0.5;
  Mat rotation;     // orthogonal part
  Vec translation;

  Similarity(double ratio_, Mat rotation_, Vec translation_)
      : ratio(ratio_), rotation(std::move(rotation_)), translation(std::move(translation_)) {
    int n = int(translation.size());
    if (!(ratio > 0.0 && ratio < 1.0))
      throw ValidationError("Similarity: ratio must lie in (0,1)");
    if (rotation.rows != n || rotation.cols != n)
      throw ValidationError("Similarity: orthogonal part shape mismatch");
    if (!is_orthogonal(rotation, 1e-12))
      throw ValidationError("Similarity: orthogonal part fails T*T^t = I at 1e-12");
  }

  int dim() const { return int(translation.size()); }

  Vec apply(const Vec& x) const {
    Vec y = mul(rotation, x);
    for (std::size_t i = 0; i < y.size(); ++i)
      y[i] = ratio * y[i] + translation[i];
    return y;
  }

  // Unique solution of g(p) = p, i.e. (I - ratio*T) p = b.
  Vec fixed_point() const {
    int n = dim();
    Mat A = Mat::identity(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) -= ratio * rotation(i, j);
    return solve_linear(A, translation);
  }

  bool is_rotation_free(double tol = 1e-12) const {
    return max_abs_diff(rotation, Mat::identity(rotation.rows)) <= tol;
  }
};

// Composition of similarities kept in closed form: x -> s * Q x + t.
struct AffineMap {
  double s = 1.0;
  Mat Q;
  Vec t;

  static AffineMap identity(int n) { return {1.0, Mat::identity(n), Vec(std::size_t(n), 0.0)}; }

  AffineMap then_inner(const Similarity& g) const {
    // this ∘ g
    AffineMap r;
    r.s = s * g.ratio;
    r.Q = mul(Q, g.rotation);
    r.t = t;
    Vec qb = mul(Q, g.translation);
    for (std::size_t i = 0; i < r.t.size(); ++i) r.t[i] += s * qb[i];
    return r;
  }

  Vec apply(const Vec& x) const {
    Vec y = mul(Q, x);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = s * y[i] + t[i];
    return y;
  }
};

class SelfSimilarIFS {
 public:
  SelfSimilarIFS(int ambient_dim, std::vector<Similarity> maps)
      : n_(ambient_dim), maps_(std::move(maps)) {
    if (n_ < 1) throw ValidationError("SelfSimilarIFS: ambient_dim must be >= 1");
    if (maps_.size() < 2) throw ValidationError("SelfSimilarIFS: need at least 2 maps");
    for (const auto& g : maps_)
      if (g.dim() != n_) throw ValidationError("SelfSimilarIFS: map dimension mismatch");
    compute_geometry();
  }

  int ambient_dim() const { return n_; }
  const std::vector<Similarity>& maps() const { return maps_; }
  std::size_t map_count() const { return maps_.size(); }

  double max_ratio() const { return max_ratio_; }
  bool rotation_free(double tol = 1e-12) const {
    for (const auto& g : maps_)
      if (!g.is_rotation_free(tol)) return false;
    return true;
  }
  bool equal_ratios(double tol = 1e-14) const {
    for (const auto& g : maps_)
      if (std::abs(g.ratio - maps_[0].ratio) > tol) return false;
    return true;
  }

  // Invariant bounding ball: every map sends B(center, radius) into itself,
  // so the attractor lies inside it.
  const Vec& center() const { return center_; }
  double radius() const { return radius_; }
  // Upper bound on the attractor diameter from a depth-limited ball cover.
  double diameter_bound() const { return diameter_; }
  // Cylinder size multiplier used by cloud enumeration: a word w is emitted
  // once (prod of ratios) * enumeration_scale() <= delta.
  double enumeration_scale() const { return scale_; }
  // sup |y| over attractor points; truncation certificates use this.
  double anchor_norm_bound() const { return norm(center_) + radius_; }

 private:
  void compute_geometry() {
    // Barycenter of the natural measure solves c = mean_i g_i(c).
    Vec c(std::size_t(n_), 0.0);
    for (const auto& g : maps_) c = add(c, g.fixed_point());
    c = scale(c, 1.0 / double(maps_.size()));
    for (int iter = 0; iter < 256; ++iter) {
      Vec next(std::size_t(n_), 0.0);
      for (const auto& g : maps_) next = add(next, g.apply(c));
      next = scale(next, 1.0 / double(maps_.size()));
      double moved = dist(next, c);
      c = std::move(next);
      if (moved < 1e-16) break;
    }
    center_ = c;
    max_ratio_ = 0.0;
    radius_ = 0.0;
    for (const auto& g : maps_) {
      max_ratio_ = std::max(max_ratio_, g.ratio);
      radius_ = std::max(radius_, dist(g.apply(c), c) / (1.0 - g.ratio));
    }
    // Depth-limited cylinder balls give a diameter bound:
    // diam K <= max over ball pairs (center distance + both radii).
    std::vector<AffineMap> level{AffineMap::identity(n_)};
    std::size_t budget = 2048;
    while (level.size() * maps_.size() <= budget) {
      std::vector<AffineMap> next;
      next.reserve(level.size() * maps_.size());
      for (const auto& A : level)
        for (const auto& g : maps_) next.push_back(A.then_inner(g));
      level = std::move(next);
    }
    std::vector<Vec> centers;
    centers.reserve(level.size());
    std::vector<double> radii;
    for (const auto& A : level) {
      centers.push_back(A.apply(center_));
      radii.push_back(A.s * radius_);
    }
    double diam = 0.0;
    for (std::size_t i = 0; i < centers.size(); ++i)
      for (std::size_t j = i + 1; j < centers.size(); ++j)
        diam = std::max(diam, dist(centers[i], centers[j]) + radii[i] + radii[j]);
    if (centers.size() == 1) diam = 2.0 * radii[0];
    diameter_ = diam;
    scale_ = std::max(diameter_, radius_);
  }

  int n_;
  std::vector<Similarity> maps_;
  Vec center_;
  double radius_ = 0.0;
  double diameter_ = 0.0;
  double scale_ = 0.0;
  double max_ratio_ = 0.0;
};

struct GraphEdge {
  int source = 0;
  int target = 0;
  Similarity map;
};

class GraphDirectedIFS {
 public:
  GraphDirectedIFS(int ambient_dim, int num_vertices, std::vector<GraphEdge> edges)
      : n_(ambient_dim), vertices_(num_vertices), edges_(std::move(edges)) {
    if (n_ < 1) throw ValidationError("GraphDirectedIFS: ambient_dim must be >= 1");
    if (vertices_ < 1) throw ValidationError("GraphDirectedIFS: need at least one vertex");
    if (edges_.empty()) throw ValidationError("GraphDirectedIFS: need at least one edge");
    outgoing_.assign(std::size_t(vertices_), {});
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const auto& ed = edges_[e];
      if (ed.source < 0 || ed.source >= vertices_ || ed.target < 0 || ed.target >= vertices_)
        throw ValidationError("GraphDirectedIFS: edge endpoint out of range");
      if (ed.map.dim() != n_)
        throw ValidationError("GraphDirectedIFS: edge map dimension mismatch");
      outgoing_[std::size_t(ed.source)].push_back(int(e));
    }
    for (int v = 0; v < vertices_; ++v)
      if (outgoing_[std::size_t(v)].empty())
        throw ValidationError("GraphDirectedIFS: vertex without outgoing edge");
    if (!strongly_connected())
      throw ValidationError("GraphDirectedIFS: digraph is not strongly connected");
    compute_geometry();
  }

  int ambient_dim() const { return n_; }
  int vertex_count() const { return vertices_; }
  const std::vector<GraphEdge>& edges() const { return edges_; }
  const std::vector<int>& outgoing(int v) const { return outgoing_[std::size_t(v)]; }
  double vertex_radius(int v) const { return radii_[std::size_t(v)]; }
  double enumeration_scale() const { return scale_; }
  double max_ratio() const { return max_ratio_; }
  bool equal_ratios(double tol = 1e-14) const {
    for (const auto& e : edges_)
      if (std::abs(e.map.ratio - edges_[0].map.ratio) > tol) return false;
    return true;
  }

 private:
  bool strongly_connected() const {
    auto reach = [&](bool forward) {
      std::vector<bool> seen(std::size_t(vertices_), false);
      std::vector<int> stack{0};
      seen[0] = true;
      while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (const auto& e : edges_) {
          int from = forward ? e.source : e.target;
          int to = forward ? e.target : e.source;
          if (from == v && !seen[std::size_t(to)]) {
            seen[std::size_t(to)] = true;
            stack.push_back(to);
          }
        }
      }
      for (bool b : seen)
        if (!b) return false;
      return true;
    };
    return reach(true) && reach(false);
  }

  void compute_geometry() {
    // Smallest radii with g_e(B(0,R_target)) inside B(0,R_source) for all e.
    radii_.assign(std::size_t(vertices_), 0.0);
    max_ratio_ = 0.0;
    for (const auto& e : edges_) max_ratio_ = std::max(max_ratio_, e.map.ratio);
    for (int iter = 0; iter < 512; ++iter) {
      double moved = 0.0;
      std::vector<double> next(std::size_t(vertices_), 0.0);
      for (const auto& e : edges_) {
        double v = e.map.ratio * radii_[std::size_t(e.target)] + norm(e.map.translation);
        next[std::size_t(e.source)] = std::max(next[std::size_t(e.source)], v);
      }
      for (int v = 0; v < vertices_; ++v) {
        moved = std::max(moved, std::abs(next[std::size_t(v)] - radii_[std::size_t(v)]));
        radii_[std::size_t(v)] = next[std::size_t(v)];
      }
      if (moved < 1e-15) break;
    }
    double rmax = 0.0;
    for (double r : radii_) rmax = std::max(rmax, r);
    scale_ = std::max(2.0 * rmax, 1e-300);
  }

  int n_;
  int vertices_;
  std::vector<GraphEdge> edges_;
  std::vector<std::vector<int>> outgoing_;
  std::vector<double> radii_;
  double scale_ = 0.0;
  double max_ratio_ = 0.0;
};

// Finite words over map indices (self-similar) or edge indices
// (graph-directed). Letters are 0-based in code; text form is 1-based.
struct SymbolWord {
  std::vector<int> letters;
};

inline std::string word_to_string(const SymbolWord& w) {
  std::string s;
  for (std::size_t i = 0; i < w.letters.size(); ++i) {
    if (i) s += '.';
    s += std::to_string(w.letters[i] + 1);
  }
  return s;
}

inline SymbolWord word_from_string(const std::string& s) {
  SymbolWord w;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t next = s.find('.', pos);
    if (next == std::string::npos) next = s.size();
    w.letters.push_back(std::stoi(s.substr(pos, next - pos)) - 1);
    pos = next + 1;
  }
  return w;
}

// g_{w_1} ∘ ... ∘ g_{w_m} applied to the origin; the empty word gives the
// origin itself. Truncation error is (prod of ratios) * anchor_norm_bound().
inline Vec symbol_point(const SelfSimilarIFS& sys, const SymbolWord& w) {
  Vec x(std::size_t(sys.ambient_dim()), 0.0);
  for (auto it = w.letters.rbegin(); it != w.letters.rend(); ++it) {
    if (*it < 0 || std::size_t(*it) >= sys.map_count())
      throw PathError("symbol_point: letter out of range");
    x = sys.maps()[std::size_t(*it)].apply(x);
  }
  return x;
}

inline Vec symbol_point(const GraphDirectedIFS& sys, const SymbolWord& w) {
  for (std::size_t i = 0; i < w.letters.size(); ++i) {
    int e = w.letters[i];
    if (e < 0 || std::size_t(e) >= sys.edges().size())
      throw PathError("symbol_point: edge index out of range");
    if (i + 1 < w.letters.size()) {
      int next = w.letters[i + 1];
      if (sys.edges()[std::size_t(e)].target != sys.edges()[std::size_t(next)].source)
        throw PathError("symbol_point: word is not a composable edge path");
    }
  }
  Vec x(std::size_t(sys.ambient_dim()), 0.0);
  for (auto it = w.letters.rbegin(); it != w.letters.rend(); ++it)
    x = sys.edges()[std::size_t(*it)].map.apply(x);
  return x;
}

enum class CloudSource { self_similar, graph_directed };

// Finite resolution sample of an attractor. Every attractor point lies within
// cover_radius (<= resolution) of some cloud point, and each point carries the
// symbol word of the cylinder it represents.
struct PointCloud {
  int ambient_dim = 0;
  double resolution = 0.0;            // achieved cylinder scale (<= requested)
  double requested_resolution = 0.0;  // the delta the enumeration was asked for
  double cover_radius = 0.0;
  double scale = 0.0;  // enumeration scale of the source system
  CloudSource source = CloudSource::self_similar;
  std::size_t branch_count = 0;
  double common_ratio = 0.0;  // 0 when ratios differ across maps/edges
  std::vector<double> coords;
  std::vector<SymbolWord> words;

  std::size_t size() const {
    return ambient_dim > 0 ? coords.size() / std::size_t(ambient_dim) : 0;
  }
  std::span<const double> point(std::size_t i) const {
    return {coords.data() + i * std::size_t(ambient_dim), std::size_t(ambient_dim)};
  }
  Vec point_vec(std::size_t i) const {
    auto p = point(i);
    return Vec(p.begin(), p.end());
  }
};

// Deterministic cylinder enumeration: emit a word as soon as its cylinder size
// (product of ratios times enumeration_scale) drops to delta. The emitted
// point is the image of the invariant-ball center, so the cover radius is
// certified by construction. `resolution` records the coarsest emitted
// cylinder size, the scale the sample actually achieves; for systems whose
// ratio ladder misses the requested delta this is strictly finer.
inline PointCloud attractor_cloud(const SelfSimilarIFS& sys, double delta,
                                  std::size_t point_budget = 4'000'000) {
  if (!(delta > 0.0)) throw ValidationError("attractor_cloud: delta must be positive");
  PointCloud cloud;
  cloud.ambient_dim = sys.ambient_dim();
  cloud.requested_resolution = delta;
  cloud.scale = sys.enumeration_scale();
  cloud.source = CloudSource::self_similar;
  cloud.branch_count = sys.map_count();
  cloud.common_ratio = sys.equal_ratios() ? sys.maps()[0].ratio : 0.0;

  const double stop = delta * (1.0 + 1e-12);
  double max_leaf_radius = 0.0;
  double max_cylinder = 0.0;
  std::vector<int> letters;

  auto emit = [&](const AffineMap& A) {
    if (cloud.words.size() >= point_budget) {
      double sigma = 0.0;
      {
        // Hutchinson exponent for the feasible-delta estimate.
        double lo = 0.0, hi = double(sys.ambient_dim()) + 1.0;
        auto f = [&](double s) {
          double acc = -1.0;
          for (const auto& g : sys.maps()) acc += std::pow(g.ratio, s);
          return acc;
        };
        while (f(hi) > 0.0 && hi < 1e4) hi *= 2.0;
        for (int it = 0; it < 100; ++it) {
          double mid = 0.5 * (lo + hi);
          (f(mid) > 0.0 ? lo : hi) = mid;
        }
        sigma = 0.5 * (lo + hi);
      }
      double feasible = cloud.scale * std::pow(double(point_budget), -1.0 / std::max(sigma, 1e-9));
      throw BudgetError("attractor_cloud: point budget " + std::to_string(point_budget) +
                        " exceeded; feasible delta is about " + format_double(feasible));
    }
    Vec p = A.apply(sys.center());
    cloud.coords.insert(cloud.coords.end(), p.begin(), p.end());
    cloud.words.push_back(SymbolWord{letters});
    max_leaf_radius = std::max(max_leaf_radius, A.s * sys.radius());
    max_cylinder = std::max(max_cylinder, A.s * cloud.scale);
  };

  auto dfs = [&](auto&& self, const AffineMap& A) -> void {
    if (A.s * cloud.scale <= stop) {
      emit(A);
      return;
    }
    for (std::size_t i = 0; i < sys.map_count(); ++i) {
      letters.push_back(int(i));
      self(self, A.then_inner(sys.maps()[i]));
      letters.pop_back();
    }
  };
  dfs(dfs, AffineMap::identity(sys.ambient_dim()));
  cloud.cover_radius = max_leaf_radius;
  cloud.resolution = std::min(delta, max_cylinder);
  return cloud;
}

// Cloud of the component K_{start_vertex} of a graph-directed attractor.
inline PointCloud attractor_cloud(const GraphDirectedIFS& sys, double delta,
                                  int start_vertex = 0,
                                  std::size_t point_budget = 4'000'000) {
  if (!(delta > 0.0)) throw ValidationError("attractor_cloud: delta must be positive");
  if (start_vertex < 0 || start_vertex >= sys.vertex_count())
    throw ValidationError("attractor_cloud: start vertex out of range");
  PointCloud cloud;
  cloud.ambient_dim = sys.ambient_dim();
  cloud.requested_resolution = delta;
  cloud.scale = sys.enumeration_scale();
  cloud.source = CloudSource::graph_directed;
  cloud.branch_count = sys.edges().size();
  cloud.common_ratio = sys.equal_ratios() ? sys.edges()[0].map.ratio : 0.0;

  const double stop = delta * (1.0 + 1e-12);
  double max_leaf_radius = 0.0;
  double max_cylinder = 0.0;
  std::vector<int> letters;
  Vec origin(std::size_t(sys.ambient_dim()), 0.0);

  auto dfs = [&](auto&& self, const AffineMap& A, int vertex) -> void {
    if (A.s * cloud.scale <= stop) {
      if (cloud.words.size() >= point_budget)
        throw BudgetError("attractor_cloud: point budget exceeded for graph-directed system");
      Vec p = A.apply(origin);
      cloud.coords.insert(cloud.coords.end(), p.begin(), p.end());
      cloud.words.push_back(SymbolWord{letters});
      max_leaf_radius = std::max(max_leaf_radius, A.s * sys.vertex_radius(vertex));
      max_cylinder = std::max(max_cylinder, A.s * cloud.scale);
      return;
    }
    for (int e : sys.outgoing(vertex)) {
      letters.push_back(e);
      self(self, A.then_inner(sys.edges()[std::size_t(e)].map), sys.edges()[std::size_t(e)].target);
      letters.pop_back();
    }
  };
  dfs(dfs, AffineMap::identity(sys.ambient_dim()), start_vertex);
  cloud.cover_radius = max_leaf_radius;
  cloud.resolution = std::min(delta, max_cylinder);
  return cloud;
}

namespace detail {

struct SepNode {
  AffineMap A;
  Vec center;
  double radius;
  int depth;
};

inline detail::SepNode sep_child(const SepNode& node, const SelfSimilarIFS& sys, std::size_t i,
                                 const Vec& c0, double r0) {
  SepNode child;
  child.A = node.A.then_inner(sys.maps()[i]);
  child.center = child.A.apply(c0);
  child.radius = child.A.s * r0;
  child.depth = node.depth + 1;
  return child;
}

}  // namespace detail

// Exact minimum, over all pairs of depth-`depth` cylinders with different
// first letters, of (center distance - both ball radii). This is a certified
// lower bound for min_{i != j} dist(g_i(K), g_j(K)); cylinder balls nest, so
// the value is nondecreasing in depth. Returns nullopt when the expansion
// budget runs out before the value is exact.
inline std::optional<double> separation_gap_at_depth(const SelfSimilarIFS& sys, int depth,
                                                     std::size_t budget = 2'000'000) {
  const Vec& c0 = sys.center();
  const double r0 = sys.radius();
  double cur = std::numeric_limits<double>::infinity();
  std::size_t expansions = 0;
  bool aborted = false;

  auto visit = [&](auto&& self, const detail::SepNode& a, const detail::SepNode& b) -> void {
    if (aborted) return;
    double gap = dist(a.center, b.center) - a.radius - b.radius;
    if (gap >= cur) return;  // descendants only increase the gap
    if (a.depth >= depth && b.depth >= depth) {
      cur = std::min(cur, gap);
      return;
    }
    if (++expansions > budget) {
      aborted = true;
      return;
    }
    bool expand_a = (a.depth < depth) &&
                    (b.depth >= depth || a.radius >= b.radius);
    const detail::SepNode& fixee = expand_a ? b : a;
    const detail::SepNode& split = expand_a ? a : b;
    // visit closer children first so the running minimum prunes aggressively
    std::vector<detail::SepNode> children;
    children.reserve(sys.map_count());
    for (std::size_t i = 0; i < sys.map_count(); ++i)
      children.push_back(detail::sep_child(split, sys, i, c0, r0));
    std::sort(children.begin(), children.end(),
              [&](const detail::SepNode& x, const detail::SepNode& y) {
                return dist(x.center, fixee.center) - x.radius <
                       dist(y.center, fixee.center) - y.radius;
              });
    for (const auto& ch : children) self(self, ch, fixee);
  };

  detail::SepNode root{AffineMap::identity(sys.ambient_dim()), c0, r0, 0};
  std::vector<detail::SepNode> first;
  for (std::size_t i = 0; i < sys.map_count(); ++i)
    first.push_back(detail::sep_child(root, sys, i, c0, r0));
  for (std::size_t i = 0; i < first.size() && !aborted; ++i)
    for (std::size_t j = i + 1; j < first.size() && !aborted; ++j)
      visit(visit, first[i], first[j]);
  if (aborted) return std::nullopt;
  return cur;
}

// Certified strong-separation constant: deepens the cylinder refinement until
// the bound stabilizes, the depth cap is hit, or the budget runs out. Returns
// nullopt when no positive bound was certified.
inline std::optional<double> separation_constant(const SelfSimilarIFS& sys, int max_depth = 14,
                                                 std::size_t budget = 2'000'000) {
  double best = -std::numeric_limits<double>::infinity();
  double prev = std::numeric_limits<double>::quiet_NaN();
  int stable = 0;
  for (int d = 1; d <= max_depth; ++d) {
    auto g = separation_gap_at_depth(sys, d, budget);
    if (!g) break;
    best = *g;
    if (d > 1 && std::abs(*g - prev) < 1e-13) {
      if (++stable >= 2) break;
    } else {
      stable = 0;
    }
    prev = *g;
  }
  if (best > 0.0) return best;
  return std::nullopt;
}

// Unique sigma with sum_i ratio_i^sigma = 1, by bisection; the left side is
// strictly decreasing from N >= 2 at sigma = 0.
inline double similarity_dimension(const SelfSimilarIFS& sys) {
  auto f = [&](double s) {
    double acc = -1.0;
    for (const auto& g : sys.maps()) acc += std::pow(g.ratio, s);
    return acc;
  };
  double lo = 0.0;
  double hi = double(sys.ambient_dim()) + 1.0;
  while (f(hi) > 0.0 && hi < 1e6) hi *= 2.0;
  for (int it = 0; it < 200 && (hi - lo) > 1e-14; ++it) {
    double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

namespace detail {

// Perron root of a nonnegative irreducible matrix via power iteration on
// M + I (always primitive, so the iteration cannot cycle).
inline double perron_root(const Mat& M) {
  int n = M.rows;
  Vec v(std::size_t(n), 1.0);
  double lambda = 0.0;
  for (int it = 0; it < 200000; ++it) {
    Vec w = mul(M, v);
    for (int i = 0; i < n; ++i) w[std::size_t(i)] += v[std::size_t(i)];
    double s = 0;
    for (double x : w) s += x;
    double next = s / double(n);
    double vn = 0;
    for (double x : w) vn = std::max(vn, std::abs(x));
    if (vn == 0.0) return 0.0;
    for (double& x : w) x /= vn;
    double ratio_sum = 0, weight = 0;
    for (int i = 0; i < n; ++i) {
      if (v[std::size_t(i)] > 1e-300) {
        ratio_sum += w[std::size_t(i)] * vn / v[std::size_t(i)];
        weight += 1.0;
      }
    }
    next = ratio_sum / weight;
    if (it > 8 && std::abs(next - lambda) <= 1e-14 * std::max(1.0, std::abs(next))) {
      return next - 1.0;
    }
    lambda = next;
    v = std::move(w);
  }
  return lambda - 1.0;
}

}  // namespace detail

// Dimension of a graph-directed attractor: the sigma at which the spectral
// radius of M(sigma)_{ij} = sum_{e: i->j} ratio_e^sigma crosses 1.
inline double graph_directed_dimension(const GraphDirectedIFS& sys) {
  int n = sys.vertex_count();
  auto rho = [&](double s) {
    Mat M(n, n);
    for (const auto& e : sys.edges()) M(e.source, e.target) += std::pow(e.map.ratio, s);
    return detail::perron_root(M);
  };
  double lo = 0.0;
  double hi = double(sys.ambient_dim()) + 1.0;
  while (rho(hi) > 1.0 && hi < 1e6) hi *= 2.0;
  for (int it = 0; it < 120 && (hi - lo) > 1e-12; ++it) {
    double mid = 0.5 * (lo + hi);
    (rho(mid) > 1.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct TransformationGroup {
  std::vector<Mat> elements;
  bool budget_exceeded = false;
};

namespace detail {

// Set of orthogonal matrices with tolerance-based dedup, bucketed by rounded
// trace so membership tests stay cheap even for large groups.
class MatSet {
 public:
  explicit MatSet(double tol) : tol_(tol) {}

  bool contains(const Mat& m) const { return find(m) >= 0; }

  bool insert(const Mat& m) {
    if (contains(m)) return false;
    long long key = trace_key(m);
    buckets_[key].push_back(int(items_.size()));
    items_.push_back(m);
    return true;
  }

  const std::vector<Mat>& items() const { return items_; }

 private:
  long long trace_key(const Mat& m) const {
    double t = 0;
    for (int i = 0; i < m.rows; ++i) t += m(i, i);
    return llround(t * 1e6);
  }

  int find(const Mat& m) const {
    long long key = trace_key(m);
    for (long long k = key - 1; k <= key + 1; ++k) {
      auto it = buckets_.find(k);
      if (it == buckets_.end()) continue;
      for (int idx : it->second)
        if (max_abs_diff(items_[std::size_t(idx)], m) <= tol_) return idx;
    }
    return -1;
  }

  double tol_;
  std::vector<Mat> items_;
  std::unordered_map<long long, std::vector<int>> buckets_;
};

inline TransformationGroup close_group(const std::vector<Mat>& generators, int n,
                                       std::size_t budget, double tol) {
  MatSet set(tol);
  std::vector<Mat> gens;
  {
    MatSet gset(tol);
    for (const auto& g : generators) {
      if (gset.insert(g)) gens.push_back(g);
      Mat gt = transpose(g);
      if (gset.insert(gt)) gens.push_back(gt);
    }
  }
  TransformationGroup out;
  set.insert(Mat::identity(n));
  std::queue<std::size_t> work;
  work.push(0);
  while (!work.empty()) {
    std::size_t i = work.front();
    work.pop();
    for (const auto& g : gens) {
      Mat prod = mul(set.items()[i], g);
      if (set.insert(prod)) {
        if (set.items().size() > budget) {
          out.elements = set.items();
          out.budget_exceeded = true;
          return out;
        }
        work.push(set.items().size() - 1);
      }
    }
  }
  out.elements = set.items();
  return out;
}

}  // namespace detail

// Group generated by the orthogonal parts of the maps.
inline TransformationGroup transformation_group(const SelfSimilarIFS& sys,
                                                std::size_t budget = 10'000,
                                                double tol = 1e-9) {
  std::vector<Mat> gens;
  for (const auto& g : sys.maps()) gens.push_back(g.rotation);
  return detail::close_group(gens, sys.ambient_dim(), budget, tol);
}

// Group generated by orthogonal parts of cycle compositions through `vertex`.
// Each edge contributes one generator conjugated along a spanning tree of
// paths from the vertex; together with transposes these generate exactly the
// closed-walk products, closed into a group.
inline TransformationGroup transformation_group(const GraphDirectedIFS& sys, int vertex,
                                                std::size_t budget = 10'000,
                                                double tol = 1e-9) {
  if (vertex < 0 || vertex >= sys.vertex_count())
    throw ValidationError("transformation_group: vertex out of range");
  int n = sys.ambient_dim();
  int V = sys.vertex_count();
  // BFS tree of paths from `vertex`; path_rot[v] is the orthogonal part of
  // the tree path vertex -> v.
  std::vector<Mat> path_rot(std::size_t(V), Mat{});
  std::vector<bool> have(std::size_t(V), false);
  path_rot[std::size_t(vertex)] = Mat::identity(n);
  have[std::size_t(vertex)] = true;
  std::queue<int> bfs;
  bfs.push(vertex);
  while (!bfs.empty()) {
    int v = bfs.front();
    bfs.pop();
    for (int e : sys.outgoing(v)) {
      int t = sys.edges()[std::size_t(e)].target;
      if (!have[std::size_t(t)]) {
        have[std::size_t(t)] = true;
        path_rot[std::size_t(t)] = mul(path_rot[std::size_t(v)], sys.edges()[std::size_t(e)].map.rotation);
        bfs.push(t);
      }
    }
  }
  std::vector<Mat> gens;
  for (const auto& e : sys.edges()) {
    Mat g = mul(mul(path_rot[std::size_t(e.source)], e.map.rotation),
                transpose(path_rot[std::size_t(e.target)]));
    gens.push_back(std::move(g));
  }
  return detail::close_group(gens, n, budget, tol);
}

}  // namespace projdim

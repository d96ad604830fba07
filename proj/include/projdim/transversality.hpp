#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "projdim/grassmannian.hpp"
#include "projdim/ifs.hpp"

// Projected families over the sphere: the induced hyperplane systems
// f_i(xi; e) = a_i xi + rho_e(b_i) of a rotation-free base system, symbolic
// limit points, the closed-form parameter Jacobian of e -> rho_e(z) with its
// finite-difference validator, and the transversality scan with threshold
// c / sqrt(2) derived from the separation constant.

namespace projdim {

// Orthogonal projection onto the hyperplane orthogonal to the unit vector e:
// rho_e(x) = x - (x . e) e.
inline Vec rho(const Vec& e, const Vec& x) {
  if (std::abs(norm(e) - 1.0) > 1e-12)
    throw ValidationError("rho: direction must be a unit vector at 1e-12");
  if (e.size() != x.size()) throw ValidationError("rho: dimension mismatch");
  double d = dot(e, x);
  Vec out(x);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= d * e[i];
  return out;
}

// Family of hyperplane systems induced by projecting a rotation-free base
// system along each direction. Induced points live in ambient coordinates on
// the hyperplane orthogonal to e.
class ProjectedFamily {
 public:
  explicit ProjectedFamily(SelfSimilarIFS base) : base_(std::move(base)) {
    if (!base_.rotation_free())
      throw ValidationError(
          "ProjectedFamily: base maps must have identity orthogonal parts");
  }

  const SelfSimilarIFS& base() const { return base_; }

  // f_i(xi; e) = ratio_i * xi + rho_e(translation_i)
  Vec induced_apply(std::size_t i, const Vec& xi, const Vec& e) const {
    const Similarity& g = base_.maps()[i];
    Vec out = rho(e, g.translation);
    for (std::size_t t = 0; t < out.size(); ++t) out[t] += g.ratio * xi[t];
    return out;
  }

 private:
  SelfSimilarIFS base_;
};

// f_{w}(0; e), checked against rho_e of the ambient symbol point; the two
// routes agree identically for rotation-free maps.
inline Vec family_limit(const ProjectedFamily& family, const Vec& e, const SymbolWord& w) {
  Vec xi(std::size_t(family.base().ambient_dim()), 0.0);
  for (auto it = w.letters.rbegin(); it != w.letters.rend(); ++it) {
    if (*it < 0 || std::size_t(*it) >= family.base().map_count())
      throw PathError("family_limit: letter out of range");
    xi = family.induced_apply(std::size_t(*it), xi, e);
  }
  Vec check = rho(e, symbol_point(family.base(), w));
  if (dist(xi, check) > 1e-10)
    throw ValidationError("family_limit: induced composition drifted from rho of the symbol point");
  return xi;
}

struct Jacobian {
  Mat matrix;  // restriction to the tangent plane, in an adapted frame
  double det = 0.0;
};

// Derivative of e -> rho_e(z) restricted to the tangent plane at u. In any
// adapted orthonormal frame the restricted matrix is -(z . u) I_{n-1}; the
// determinant is frame independent.
inline Jacobian jacobian_analytic(const Vec& z, const Vec& u) {
  if (!(norm(z) > 0.0)) throw ValidationError("jacobian_analytic: z must be nonzero");
  if (std::abs(norm(u) - 1.0) > 1e-12)
    throw ValidationError("jacobian_analytic: u must be a unit vector");
  int n = int(z.size());
  double zu = dot(z, u);
  Jacobian out;
  out.matrix = Mat::identity(n - 1);
  for (double& v : out.matrix.a) v *= -zu;
  out.det = std::pow(-zu, n - 1);
  return out;
}

// Central finite differences of e -> rho_e(z) along an orthonormal tangent
// frame at u, rows projected back onto the tangent plane. Agrees with the
// closed form to second order in h.
inline Mat jacobian_fd(const Vec& z, const Vec& u, double h) {
  if (!(h > 0.0 && h <= 1e-3)) throw ValidationError("jacobian_fd: h must lie in (0, 1e-3]");
  int n = int(z.size());
  Mat uf(n, 1);
  for (int i = 0; i < n; ++i) uf(i, 0) = u[std::size_t(i)];
  Mat tangent = orthonormal_complement(uf);  // n x (n-1)
  Mat F(n - 1, n - 1);
  for (int j = 0; j < n - 1; ++j) {
    Vec ep(u), em(u);
    for (int i = 0; i < n; ++i) {
      ep[std::size_t(i)] += h * tangent(i, j);
      em[std::size_t(i)] -= h * tangent(i, j);
    }
    double np = norm(ep), nm = norm(em);
    for (double& v : ep) v /= np;
    for (double& v : em) v /= nm;
    Vec rp = rho(ep, z), rm = rho(em, z);
    for (int i = 0; i < n - 1; ++i) {
      double ti = 0;
      for (int r = 0; r < n; ++r) ti += tangent(r, i) * (rp[std::size_t(r)] - rm[std::size_t(r)]);
      F(i, j) = ti / (2.0 * h);
    }
  }
  return F;
}

struct ScanRecord {
  std::size_t direction_index = 0;
  SymbolWord word_a, word_b;
  double lhs = 0.0;      // |rho_u(z)| at the truncated words
  double det_abs = 0.0;  // |z . u|^{n-1}
  double margin = 0.0;   // |z . u| - (threshold - tail); <= 0 means violation
  bool flagged = false;
};

struct TransversalityReport {
  double c = 0.0;          // separation constant in force
  double threshold = 0.0;  // c / sqrt(2)
  double tail = 0.0;       // truncation slack on both sides
  bool tail_limited = false;  // threshold - tail <= 0: scan cannot certify
  bool pairs_sampled = false;
  std::size_t directions = 0;
  std::size_t words = 0;
  std::uint64_t pairs_tested = 0;
  std::uint64_t close_pairs = 0;
  std::uint64_t violations = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  std::vector<Vec> direction_samples;
  std::vector<ScanRecord> close_sample;  // capped sample of close pairs
  std::vector<ScanRecord> flagged_records;
};

namespace detail {

inline SymbolWord decode_word(std::size_t index, std::size_t branches, int depth) {
  SymbolWord w;
  w.letters.resize(std::size_t(depth));
  for (int p = depth - 1; p >= 0; --p) {
    w.letters[std::size_t(p)] = int(index % branches);
    index /= branches;
  }
  return w;
}

}  // namespace detail

// Scans direction samples and depth-truncated word pairs with distinct first
// letters. Whenever the projected distance is certainly below c / sqrt(2)
// (after truncation slack), the parameter-derivative determinant must
// certainly clear the same threshold; remaining pairs pass vacuously.
// c_override replaces the certified separation constant, which the self-test
// harness uses to force violations.
inline TransversalityReport transversality_scan(const ProjectedFamily& family,
                                                int num_directions, int word_depth,
                                                std::size_t pair_budget, std::uint64_t seed,
                                                std::optional<double> c_override = {}) {
  const SelfSimilarIFS& sys = family.base();
  int n = sys.ambient_dim();
  std::size_t branches = sys.map_count();
  if (num_directions < 1) throw ValidationError("transversality_scan: need directions");
  if (word_depth < 1) throw ValidationError("transversality_scan: need positive word depth");

  TransversalityReport rep;
  if (c_override) {
    rep.c = *c_override;
  } else {
    auto c = separation_constant(sys);
    if (!c)
      throw ValidationError(
          "transversality_scan: strong separation not certified for the base system");
    rep.c = *c;
  }
  rep.threshold = rep.c / std::sqrt(2.0);
  rep.tail = 2.0 * std::pow(sys.max_ratio(), word_depth) * sys.anchor_norm_bound();
  rep.tail_limited = !(rep.threshold - rep.tail > 0.0);

  // direction samples: an even circle grid in the plane, uniform otherwise
  rep.directions = std::size_t(num_directions);
  rep.direction_samples.reserve(rep.directions);
  if (n == 2) {
    for (int i = 0; i < num_directions; ++i) {
      double t = 2.0 * M_PI * double(i) / double(num_directions);
      rep.direction_samples.push_back({std::cos(t), std::sin(t)});
    }
  } else {
    Rng rng(seed);
    while (rep.direction_samples.size() < rep.directions) {
      Vec u(std::size_t(n), 0.0);
      for (double& v : u) v = rng.gaussian();
      double nn = norm(u);
      if (nn < 1e-6) continue;
      for (double& v : u) v /= nn;
      rep.direction_samples.push_back(std::move(u));
    }
  }

  // depth-truncated limit points of every word
  double words_f = std::pow(double(branches), word_depth);
  if (words_f > double(1 << 21))
    throw BudgetError("transversality_scan: too many words at this depth");
  std::size_t words = std::size_t(words_f + 0.5);
  rep.words = words;
  std::vector<double> pts(words * std::size_t(n));
  {
    std::vector<int> letters;
    std::size_t emit = 0;
    auto dfs = [&](auto&& self, const AffineMap& A) -> void {
      if (int(letters.size()) == word_depth) {
        Vec p = A.apply(Vec(std::size_t(n), 0.0));
        for (int t = 0; t < n; ++t) pts[emit * std::size_t(n) + std::size_t(t)] = p[std::size_t(t)];
        ++emit;
        return;
      }
      for (std::size_t i = 0; i < branches; ++i) {
        letters.push_back(int(i));
        self(self, A.then_inner(sys.maps()[i]));
        letters.pop_back();
      }
    };
    dfs(dfs, AffineMap::identity(n));
  }

  std::size_t first_letter_block = words / branches;
  auto first_letter = [&](std::size_t w) { return w / first_letter_block; };

  // enumerate pairs (exhaustive when they fit the budget, sampled otherwise)
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  {
    double total = 0.5 * double(words) * double(words - 1) *
                   (double(branches - 1) / double(branches));
    if (total <= double(pair_budget)) {
      pairs.reserve(std::size_t(total) + words);
      for (std::size_t i = 0; i < words; ++i)
        for (std::size_t j = i + 1; j < words; ++j)
          if (first_letter(i) != first_letter(j)) pairs.emplace_back(i, j);
    } else {
      rep.pairs_sampled = true;
      Rng rng(seed ^ 0xabcdefULL);
      pairs.reserve(pair_budget);
      while (pairs.size() < pair_budget) {
        std::size_t i = rng.index(words), j = rng.index(words);
        if (i == j || first_letter(i) == first_letter(j)) continue;
        pairs.emplace_back(std::min(i, j), std::max(i, j));
      }
    }
  }
  rep.pairs_tested = pairs.size();

  // flatten directions for the hot loop
  std::vector<double> dirs(rep.directions * std::size_t(n));
  for (std::size_t d = 0; d < rep.directions; ++d)
    for (int t = 0; t < n; ++t) dirs[d * std::size_t(n) + std::size_t(t)] = rep.direction_samples[d][std::size_t(t)];

  double clear = rep.threshold - rep.tail;  // certified antecedent/conclusion margin
  const std::size_t close_cap = 10000;

  struct Partial {
    std::uint64_t close = 0, violations = 0;
    double min_margin = std::numeric_limits<double>::infinity();
    std::vector<ScanRecord> close_sample;
    std::vector<ScanRecord> flagged;
  };
  int nthreads = thread_count();
  std::vector<Partial> partials(std::size_t(std::max(nthreads, 1)));
  std::size_t chunk = (pairs.size() + partials.size() - 1) / partials.size();

  parallel_for(partials.size(), [&](std::size_t lo_t, std::size_t hi_t) {
    for (std::size_t t = lo_t; t < hi_t; ++t) {
      Partial& part = partials[t];
      std::size_t lo = t * chunk, hi = std::min(pairs.size(), lo + chunk);
      double zbuf[8];
      for (std::size_t pi = lo; pi < hi; ++pi) {
        auto [i, j] = pairs[pi];
        const double* a = pts.data() + std::size_t(i) * std::size_t(n);
        const double* b = pts.data() + std::size_t(j) * std::size_t(n);
        double z2 = 0;
        for (int r = 0; r < n; ++r) {
          zbuf[r] = a[r] - b[r];
          z2 += zbuf[r] * zbuf[r];
        }
        for (std::size_t d = 0; d < rep.directions; ++d) {
          const double* u = dirs.data() + d * std::size_t(n);
          double zu = 0;
          for (int r = 0; r < n; ++r) zu += zbuf[r] * u[r];
          double rho2 = z2 - zu * zu;
          if (!(clear > 0.0) || rho2 >= clear * clear) continue;  // vacuous
          ++part.close;
          double margin = std::abs(zu) - clear;
          part.min_margin = std::min(part.min_margin, margin);
          bool flagged = std::abs(zu) <= clear;
          if (flagged) ++part.violations;
          if (flagged ? part.flagged.size() < close_cap
                      : part.close_sample.size() < close_cap / partials.size() + 1) {
            ScanRecord rec;
            rec.direction_index = d;
            rec.word_a = detail::decode_word(i, branches, word_depth);
            rec.word_b = detail::decode_word(j, branches, word_depth);
            rec.lhs = std::sqrt(std::max(rho2, 0.0));
            rec.det_abs = std::pow(std::abs(zu), n - 1);
            rec.margin = margin;
            rec.flagged = flagged;
            (flagged ? part.flagged : part.close_sample).push_back(std::move(rec));
          }
        }
      }
    }
  });
  for (const Partial& part : partials) {
    rep.close_pairs += part.close;
    rep.violations += part.violations;
    rep.min_margin = std::min(rep.min_margin, part.min_margin);
    for (const auto& r : part.close_sample)
      if (rep.close_sample.size() < close_cap) rep.close_sample.push_back(r);
    for (const auto& r : part.flagged)
      if (rep.flagged_records.size() < close_cap) rep.flagged_records.push_back(r);
  }
  return rep;
}

}  // namespace projdim

#pragma once

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "projdim/common.hpp"
#include "projdim/linalg.hpp"

// k-planes of R^n represented by orthonormal frames, the operator-norm metric
// between their projectors, invariant sampling, greedy separated nets, and
// the separated-count-versus-bound ratio check.

namespace projdim {

class Subspace {
 public:
  static Subspace from_frame(Mat frame) {
    Mat G = mul(transpose(frame), frame);
    if (max_abs_diff(G, Mat::identity(frame.cols)) > 1e-12)
      throw ValidationError("Subspace: frame columns are not orthonormal at 1e-12");
    return Subspace(std::move(frame));
  }

  static Subspace from_span(Mat vectors) {
    if (!orthonormalize_columns(vectors))
      throw ValidationError("Subspace: spanning vectors are rank deficient");
    return Subspace(std::move(vectors));
  }

  int n() const { return frame_.rows; }
  int k() const { return frame_.cols; }
  const Mat& frame() const { return frame_; }
  const Mat& projector() const { return proj_; }

 private:
  explicit Subspace(Mat frame) : frame_(std::move(frame)) {
    proj_ = mul(frame_, transpose(frame_));
  }

  Mat frame_;
  Mat proj_;
};

// Span of a subset of coordinate axes (0-based).
inline Subspace coordinate_subspace(int n, const std::vector<int>& axes) {
  Mat F(n, int(axes.size()));
  for (std::size_t j = 0; j < axes.size(); ++j) {
    if (axes[j] < 0 || axes[j] >= n)
      throw ValidationError("coordinate_subspace: axis out of range");
    F(axes[j], int(j)) = 1.0;
  }
  return Subspace::from_frame(std::move(F));
}

// Line in the plane at the given angle to the first axis.
inline Subspace line_at_angle(double theta) {
  Mat F(2, 1);
  F(0, 0) = std::cos(theta);
  F(1, 0) = std::sin(theta);
  return Subspace::from_frame(std::move(F));
}

// Coordinates of the orthogonal projection in the frame basis; the Euclidean
// norm of the result equals the norm of the projected point.
inline Vec project(const Subspace& V, const Vec& x) {
  if (int(x.size()) != V.n())
    throw ValidationError("project: point dimension mismatch");
  Vec out(std::size_t(V.k()), 0.0);
  for (int j = 0; j < V.k(); ++j) {
    double s = 0;
    for (int i = 0; i < V.n(); ++i) s += V.frame()(i, j) * x[std::size_t(i)];
    out[std::size_t(j)] = s;
  }
  return out;
}

inline double projected_norm(const Subspace& V, const double* x) {
  double acc = 0;
  for (int j = 0; j < V.k(); ++j) {
    double s = 0;
    for (int i = 0; i < V.n(); ++i) s += V.frame()(i, j) * x[i];
    acc += s * s;
  }
  return std::sqrt(acc);
}

// Projects a flat (count x n) point array to flat (count x k) coordinates.
inline std::vector<double> project_points(const Subspace& V, const std::vector<double>& pts) {
  int n = V.n(), k = V.k();
  std::size_t count = pts.size() / std::size_t(n);
  std::vector<double> out(count * std::size_t(k));
  for (std::size_t p = 0; p < count; ++p) {
    const double* x = pts.data() + p * std::size_t(n);
    for (int j = 0; j < k; ++j) {
      double s = 0;
      for (int i = 0; i < n; ++i) s += V.frame()(i, j) * x[i];
      out[p * std::size_t(k) + std::size_t(j)] = s;
    }
  }
  return out;
}

// d(V, W) = operator norm of P_V - P_W. The difference is symmetric, so the
// norm is the largest absolute eigenvalue.
inline double metric(const Subspace& V, const Subspace& W) {
  if (V.n() != W.n() || V.k() != W.k())
    throw ValidationError("metric: subspaces live on different Grassmannians");
  int n = V.n();
  std::array<double, 64> buf;
  std::vector<double> big;
  double* d = buf.data();
  if (n * n > 64) {
    big.resize(std::size_t(n) * std::size_t(n));
    d = big.data();
  }
  for (int i = 0; i < n * n; ++i) d[i] = V.projector().a[std::size_t(i)] - W.projector().a[std::size_t(i)];
  return sym_opnorm_buf(d, n);
}

// Orthonormalized Gaussian frames carry the rotation-invariant distribution.
inline std::vector<Subspace> sample_uniform(int n, int k, std::size_t count, Rng& rng) {
  if (!(k >= 1 && k < n)) throw ValidationError("sample_uniform: need 1 <= k < n");
  std::vector<Subspace> out;
  out.reserve(count);
  while (out.size() < count) {
    Mat F(n, k);
    for (double& v : F.a) v = rng.gaussian();
    if (!orthonormalize_columns(F)) continue;  // measure-zero event
    out.push_back(Subspace::from_frame(std::move(F)));
  }
  return out;
}

inline std::vector<Subspace> sample_uniform(int n, int k, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  return sample_uniform(n, k, count, rng);
}

namespace detail {

inline std::uint64_t mix_u64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Greedy packing helper. Keeps candidates whose metric to every kept member
// exceeds delta2. Members are bucketed by the quantized image of a fixed
// probe vector under their projectors; since |(P_V - P_W) y| <= d(V, W) for a
// unit probe y, any member within delta2 of a candidate shares a neighboring
// bucket, so only those buckets need exact metric evaluations.
class SubspacePacker {
 public:
  SubspacePacker(int n, int k, double delta2, Rng& rng)
      : n_(n), k_(k), qdims_(std::min(n, 3)), delta2_(delta2), probe_(std::size_t(n), 0.0) {
    double nrm = 0;
    for (double& v : probe_) v = rng.gaussian();
    nrm = norm(probe_);
    for (double& v : probe_) v /= nrm;
    cell_ = std::max(delta2, 1e-9);
  }

  bool try_add(const Subspace& V) {
    Vec img = mul(V.projector(), probe_);
    // quantize at most three probe coordinates; any coordinate subset still
    // lower-bounds the metric, and fewer coordinates keep the neighborhood
    // enumeration at <= 27 buckets
    std::vector<long long> q(std::size_t(qdims_), 0);
    for (int i = 0; i < qdims_; ++i)
      q[std::size_t(i)] = (long long)std::floor(img[std::size_t(i)] / cell_);
    if (!clear_of_neighbors(V, q)) return false;
    buckets_[key_of(q)].push_back(members_.size());
    members_.push_back(V);
    images_.push_back(std::move(img));
    return true;
  }

  std::vector<Subspace> take_members() { return std::move(members_); }
  std::size_t size() const { return members_.size(); }

 private:
  std::uint64_t key_of(const std::vector<long long>& q) const {
    std::uint64_t h = 0x51ab39cd13ULL;
    for (long long v : q) h = mix_u64(h ^ std::uint64_t(v + (1LL << 40)));
    return h;
  }

  bool clear_of_neighbors(const Subspace& V, const std::vector<long long>& q) {
    std::vector<long long> nb(q);
    int n = qdims_;
    // iterate the 3^qdims neighborhood
    std::vector<int> offs(std::size_t(n), -1);
    while (true) {
      for (int i = 0; i < n; ++i) nb[std::size_t(i)] = q[std::size_t(i)] + offs[std::size_t(i)];
      auto it = buckets_.find(key_of(nb));
      if (it != buckets_.end()) {
        for (std::size_t idx : it->second) {
          // cheap Frobenius bounds around the exact operator norm
          double frob = 0;
          int nn = n_ * n_;
          for (int i = 0; i < nn; ++i) {
            double d = V.projector().a[std::size_t(i)] - members_[idx].projector().a[std::size_t(i)];
            frob += d * d;
          }
          frob = std::sqrt(frob);
          if (frob <= delta2_) return false;  // opnorm <= frob
          if (frob > delta2_ * std::sqrt(2.0 * k_)) continue;  // opnorm >= frob/sqrt(2k)
          if (metric(V, members_[idx]) <= delta2_) return false;
        }
      }
      int carry = 0;
      while (carry < n && ++offs[std::size_t(carry)] > 1) {
        offs[std::size_t(carry)] = -1;
        ++carry;
      }
      if (carry == n) break;
    }
    return true;
  }

  int n_, k_, qdims_;
  double delta2_;
  Vec probe_;
  double cell_;
  std::vector<Subspace> members_;
  std::vector<Vec> images_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets_;
};

}  // namespace detail

struct DeltaNet {
  int n = 0;
  int k = 0;
  double separation = 0.0;
  std::uint64_t seed = 0;
  std::vector<Subspace> members;

  std::size_t size() const { return members.size(); }
};

// Greedy random packing: stream invariant samples and keep those farther than
// delta2 from every kept member. Stops once oversample * delta2^{-k(n-k)}
// consecutive candidates were rejected, after which the net is delta2-separated
// and with high probability close to maximal.
inline DeltaNet build_delta_net(int n, int k, double delta2, double oversample_factor,
                                std::uint64_t seed) {
  if (!(delta2 > 0.0)) throw ValidationError("build_delta_net: delta2 must be positive");
  Rng rng(seed);
  detail::SubspacePacker packer(n, k, delta2, rng);
  double raw = oversample_factor * std::pow(delta2, -double(k * (n - k)));
  std::size_t stall_limit = std::size_t(std::clamp(raw, 16.0, double(1 << 20)));
  std::size_t consecutive_rejects = 0;
  while (consecutive_rejects < stall_limit) {
    auto sample = sample_uniform(n, k, 1, rng);
    if (packer.try_add(sample[0]))
      consecutive_rejects = 0;
    else
      ++consecutive_rejects;
  }
  DeltaNet net;
  net.n = n;
  net.k = k;
  net.separation = delta2;
  net.seed = seed;
  net.members = packer.take_members();
  return net;
}

struct CountingCheck {
  std::size_t count = 0;   // members with |pi_V(x)| <= delta1
  double bound = 0.0;      // delta1^k * delta2^{-k(n-k)} * |x|^{-k}
  double ratio = 0.0;      // empirical constant count / bound
};

// Compares the number of net directions that nearly annihilate x against the
// separated-count bound delta1^k delta2^{-k(n-k)} |x|^{-k}.
inline CountingCheck counting_bound_ratio(const Vec& x, double delta1, double delta2,
                                          const DeltaNet& net) {
  double xn = norm(x);
  if (!(xn > 0.0)) throw ValidationError("counting_bound_ratio: x must be nonzero");
  if (!(delta1 > 0.0 && delta1 <= 1.0 && delta2 > 0.0 && delta2 <= 1.0))
    throw ValidationError("counting_bound_ratio: delta1, delta2 must lie in (0,1]");
  CountingCheck out;
  for (const auto& V : net.members)
    if (projected_norm(V, x.data()) <= delta1) ++out.count;
  out.bound = std::pow(delta1, net.k) * std::pow(delta2, -double(net.k * (net.n - net.k))) *
              std::pow(xn, -double(net.k));
  out.ratio = double(out.count) / out.bound;
  return out;
}

}  // namespace projdim

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "projdim/grassmannian.hpp"

using namespace projdim;

namespace {

// Largest singular value by dense direction search; slow but independent of
// the eigenvalue path used by metric().
double opnorm_by_search(const Mat& M) {
  double best = 0;
  int grid = 20000;
  for (int i = 0; i < grid; ++i) {
    double t = M_PI * double(i) / grid;
    Vec u{std::cos(t), std::sin(t)};
    best = std::max(best, norm(mul(M, u)));
  }
  return best;
}

Mat proj_diff(const Subspace& V, const Subspace& W) {
  Mat D = V.projector();
  for (std::size_t i = 0; i < D.a.size(); ++i) D.a[i] -= W.projector().a[i];
  return D;
}

}  // namespace

TEST_SUITE("grassmannian") {

TEST_CASE("projector invariants: idempotent, symmetric, trace k") {
  Rng rng(101);
  for (auto [n, k] : {std::pair{2, 1}, {3, 1}, {3, 2}, {4, 2}}) {
    for (const auto& V : sample_uniform(n, k, 40, rng)) {
      const Mat& P = V.projector();
      CHECK(max_abs_diff(mul(P, P), P) < 1e-10);
      CHECK(max_abs_diff(P, transpose(P)) < 1e-10);
      double tr = 0;
      for (int i = 0; i < n; ++i) tr += P(i, i);
      CHECK(tr == doctest::Approx(double(k)).epsilon(1e-10));
    }
  }
}

TEST_CASE("project: axis projection and norm preservation") {
  Subspace e1 = coordinate_subspace(2, {0});
  Vec p = project(e1, {3.0, 4.0});
  REQUIRE(p.size() == 1);
  CHECK(p[0] == doctest::Approx(3.0).epsilon(1e-14));

  // points already in V keep their norm
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    auto V = sample_uniform(3, 2, 1, rng)[0];
    Vec coeff{rng.gaussian(), rng.gaussian()};
    Vec x(3, 0.0);
    for (int i = 0; i < 3; ++i)
      x[std::size_t(i)] = V.frame()(i, 0) * coeff[0] + V.frame()(i, 1) * coeff[1];
    CHECK(norm(project(V, x)) == doctest::Approx(norm(x)).epsilon(1e-12));
  }

  // hyperplane case in R^3: dropping the e3 component
  Subspace H = coordinate_subspace(3, {0, 1});
  Vec q = project(H, {1.0, 2.0, 3.0});
  CHECK(q[0] == doctest::Approx(1.0));
  CHECK(q[1] == doctest::Approx(2.0));

  CHECK_THROWS_AS(project(e1, {1.0, 2.0, 3.0}), ValidationError);
}

TEST_CASE("projections never increase norms") {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    auto V = sample_uniform(4, 2, 1, rng)[0];
    Vec x(4, 0.0);
    for (double& v : x) v = rng.gaussian();
    CHECK(norm(project(V, x)) <= norm(x) + 1e-12);
  }
}

TEST_CASE("metric: zero at equality, one for orthogonal lines") {
  Subspace a = line_at_angle(0.3);
  CHECK(metric(a, a) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(metric(line_at_angle(0.0), line_at_angle(M_PI / 2)) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("metric on planar lines is |sin| of the angle difference") {
  for (int i = 0; i < 100; ++i) {
    double a = 0.031 * i, b = 1.7 - 0.013 * i;
    Subspace V = line_at_angle(a), W = line_at_angle(b);
    double want = std::abs(std::sin(a - b));
    CHECK(metric(V, W) == doctest::Approx(want).epsilon(1e-10));
    // independent route: dense search for the largest singular value
    if (i % 10 == 0)
      CHECK(opnorm_by_search(proj_diff(V, W)) == doctest::Approx(want).epsilon(1e-6));
  }
}

TEST_CASE("metric axioms on random triples") {
  Rng rng(13);
  for (auto [n, k] : {std::pair{3, 1}, {4, 2}}) {
    for (int trial = 0; trial < 60; ++trial) {
      auto s = sample_uniform(n, k, 3, rng);
      double ab = metric(s[0], s[1]);
      double ba = metric(s[1], s[0]);
      double bc = metric(s[1], s[2]);
      double ac = metric(s[0], s[2]);
      CHECK(std::abs(ab - ba) < 1e-13);
      CHECK(ac <= ab + bc + 1e-12);
    }
  }
}

TEST_CASE("metric vanishes for frames spanning the same plane") {
  Rng rng(21);
  auto V = sample_uniform(3, 2, 1, rng)[0];
  // re-span with mixed columns
  Mat M(3, 2);
  for (int i = 0; i < 3; ++i) {
    M(i, 0) = 2.0 * V.frame()(i, 0) + 0.5 * V.frame()(i, 1);
    M(i, 1) = -1.0 * V.frame()(i, 0) + 3.0 * V.frame()(i, 1);
  }
  Subspace W = Subspace::from_span(std::move(M));
  CHECK(metric(V, W) < 1e-12);
}

TEST_CASE("sample_uniform: mean projector approaches (k/n) I") {
  Rng rng(2024);
  int n = 3, k = 1;
  Mat mean(n, n);
  std::size_t count = 100000;
  for (const auto& V : sample_uniform(n, k, count, rng))
    for (std::size_t i = 0; i < mean.a.size(); ++i) mean.a[i] += V.projector().a[i];
  for (double& v : mean.a) v /= double(count);
  Mat want = Mat::identity(n);
  for (double& v : want.a) v *= double(k) / double(n);
  CHECK(max_abs_diff(mean, want) < 0.01);
}

TEST_CASE("sample_uniform: planar line angles are uniform (KS)") {
  std::size_t m = 4000;
  auto lines = sample_uniform(2, 1, m, std::uint64_t(7));
  std::vector<double> angles;
  for (const auto& V : lines) {
    double t = std::atan2(V.frame()(1, 0), V.frame()(0, 0));
    if (t < 0) t += M_PI;
    if (t >= M_PI) t -= M_PI;
    angles.push_back(t / M_PI);
  }
  std::sort(angles.begin(), angles.end());
  double ks = 0;
  for (std::size_t i = 0; i < m; ++i) {
    double f = double(i + 1) / double(m);
    double f0 = double(i) / double(m);
    ks = std::max({ks, std::abs(f - angles[i]), std::abs(angles[i] - f0)});
  }
  // critical value for p = 0.01 is 1.63 / sqrt(m)
  CHECK(ks < 1.63 / std::sqrt(double(m)));
}

TEST_CASE("sample_uniform is deterministic under a fixed seed") {
  auto a = sample_uniform(3, 2, 10, std::uint64_t(99));
  auto b = sample_uniform(3, 2, 10, std::uint64_t(99));
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(max_abs_diff(a[i].frame(), b[i].frame()) == 0.0);
}

TEST_CASE("build_delta_net: separation holds and planar sizes are sane") {
  DeltaNet net = build_delta_net(2, 1, 0.5, 4.0, 31);
  CHECK(net.size() >= 3);
  CHECK(net.size() <= 7);
  for (std::size_t i = 0; i < net.size(); ++i)
    for (std::size_t j = i + 1; j < net.size(); ++j)
      CHECK(metric(net.members[i], net.members[j]) > net.separation);

  DeltaNet wide = build_delta_net(2, 1, 2.0, 4.0, 31);
  CHECK(wide.size() == 1);  // the metric never exceeds 1
}

TEST_CASE("build_delta_net: cardinality scales like delta2^{-k(n-k)}") {
  for (auto [n, k] : {std::pair{2, 1}, {3, 1}, {3, 2}}) {
    std::vector<double> values;
    for (int j = 2; j <= 6; ++j) {
      double d2 = std::pow(2.0, -j);
      DeltaNet net = build_delta_net(n, k, d2, 4.0, 1234 + j);
      values.push_back(double(net.size()) * std::pow(d2, double(k * (n - k))));
    }
    double lo = *std::min_element(values.begin(), values.end());
    double hi = *std::max_element(values.begin(), values.end());
    CHECK(lo > 0.05);
    CHECK(hi < 50.0);
    CHECK(hi / lo < 4.0);
  }
}

TEST_CASE("counting_bound_ratio: planar ratios stay below ~3") {
  Vec x{1.0, 0.0};
  for (int j = 3; j <= 8; ++j) {
    double d = std::pow(2.0, -j);
    DeltaNet net = build_delta_net(2, 1, d, 4.0, 400 + j);
    CountingCheck chk = counting_bound_ratio(x, d, d, net);
    CHECK(chk.ratio <= 3.5);
  }
}

TEST_CASE("counting_bound_ratio: zero below the minimal projected norm") {
  DeltaNet net = build_delta_net(2, 1, 0.25, 4.0, 5);
  Vec x{1.0, 0.0};
  double min_proj = 1e18;
  for (const auto& V : net.members)
    min_proj = std::min(min_proj, projected_norm(V, x.data()));
  CountingCheck chk = counting_bound_ratio(x, min_proj * 0.5, 0.25, net);
  CHECK(chk.count == 0);
  CHECK(chk.ratio == 0.0);
}

TEST_CASE("counting_bound_ratio: doubling x does not increase the count") {
  DeltaNet net = build_delta_net(3, 1, 0.2, 4.0, 8);
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    Vec x{rng.gaussian(), rng.gaussian(), rng.gaussian()};
    if (norm(x) < 0.3) continue;
    CountingCheck a = counting_bound_ratio(x, 0.15, 0.2, net);
    CountingCheck b = counting_bound_ratio(scale(x, 2.0), 0.15, 0.2, net);
    CHECK(b.count <= a.count);
  }
}

TEST_CASE("counting_bound_ratio rejects the origin") {
  DeltaNet net = build_delta_net(2, 1, 0.5, 4.0, 1);
  CHECK_THROWS_AS(counting_bound_ratio(Vec{0.0, 0.0}, 0.5, 0.5, net), ValidationError);
}

}  // TEST_SUITE

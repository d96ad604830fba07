#include <cmath>

#include "doctest.h"
#include "projdim/sweep.hpp"
#include "projdim/systems.hpp"

using namespace projdim;

namespace {

const SelfSimilarIFS& four_corner() { return *find_builtin("four_corner").ss; }
const SelfSimilarIFS& product_cantor() { return *find_builtin("product_cantor_thirds").ss; }

PointCloud raw_cloud(std::vector<double> coords, int dim, double res) {
  PointCloud c;
  c.ambient_dim = dim;
  c.resolution = res;
  c.cover_radius = res;
  c.scale = 1.0;
  c.coords = std::move(coords);
  c.words.resize(c.size());
  return c;
}

}  // namespace

TEST_SUITE("sweep") {

TEST_CASE("fat_plane_index: floor arithmetic and the half-open convention") {
  FatPlaneGrid grid(coordinate_subspace(3, {0, 1}), 0.5);
  auto idx = fat_plane_index(grid, {0.25, 0.75, 2.2});
  REQUIRE(idx.size() == 2);
  CHECK(idx[0] == 0);
  CHECK(idx[1] == 1);
  // lower edge inclusive
  auto edge = fat_plane_index(grid, {0.5, 0.0, -1.0});
  CHECK(edge[0] == 1);
  CHECK(edge[1] == 0);
  // translation along the complement leaves the index unchanged
  auto moved = fat_plane_index(grid, {0.25, 0.75, -7.9});
  CHECK(moved == idx);
}

TEST_CASE("no delta-ball touches more than 3^k fat planes") {
  Rng rng(3);
  for (int k : {1, 2, 3}) {
    for (int trial = 0; trial < 200; ++trial) {
      double delta = rng.uniform(0.01, 1.0);
      std::vector<double> p(std::size_t(k), 0.0);
      for (double& v : p) v = rng.uniform(-3.0, 3.0);
      auto cells = detail::cells_touching(p.data(), k, delta);
      CHECK(cells.size() >= 1);
      CHECK(cells.size() <= std::size_t(std::pow(3, k)));
    }
  }
}

TEST_CASE("relate: base cases in the plane") {
  Subspace V = coordinate_subspace(2, {0});
  double delta = 0.1, eta = 0.25;
  // identical points fail the distance condition
  CHECK(!relate(V, {0.3, 0.3}, {0.3, 0.3}, delta, eta));
  // same fat plane, large vertical separation
  CHECK(relate(V, {0.05, 0.0}, {0.05, 10.0}, delta, eta));
  // projections three cells apart cannot share a reachable fat plane
  CHECK(!relate(V, {0.05, 0.0}, {0.35, 5.0}, delta, eta));
  // eta must exceed delta
  CHECK_THROWS_AS(relate(V, {0.0, 0.0}, {1.0, 1.0}, 0.1, 0.05), ValidationError);
}

TEST_CASE("relate: symmetric and invariant under complement translations") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    Subspace V = line_at_angle(rng.uniform(0.0, M_PI));
    FatPlaneGrid grid(V, 0.05);
    Vec x{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    Vec y{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    bool xy = relate(grid, x, y, 0.2);
    CHECK(relate(grid, y, x, 0.2) == xy);
    // translate both points along V-perp
    double w = rng.uniform(-5.0, 5.0);
    Vec t{-V.frame()(1, 0) * w, V.frame()(0, 0) * w};
    CHECK(relate(grid, add(x, t), add(y, t), 0.2) == xy);
  }
}

TEST_CASE("energy: degenerate clouds carry no energy") {
  DeltaNet net = build_delta_net(2, 1, 0.25, 4.0, 17);
  PointCloud one = raw_cloud({0.3, 0.4}, 2, 0.01);
  CHECK(energy_over_net(one, net, 0.04).total == 0);
  // two points closer than 2*eta
  PointCloud two = raw_cloud({0.0, 0.0, 0.05, 0.0}, 2, 0.01);
  CHECK(energy_over_net(two, net, 0.04).total == 0);
}

TEST_CASE("energy: bucketed count equals the brute-force oracle") {
  const auto& sys = four_corner();
  for (double delta : {1.0 / 16, 1.0 / 32}) {
    PointCloud cloud = attractor_cloud(sys, delta);
    REQUIRE(cloud.size() <= 2000);
    DeltaNet net = build_delta_net(2, 1, delta * 2.0, 4.0, 23);
    REQUIRE(net.size() <= 50);
    double eta = 4.0 * delta;
    for (const auto& V : net.members) {
      CHECK(relation_count(cloud, V, eta) == relation_count_brute(cloud, V, eta));
    }
  }
}

TEST_CASE("energy: counts are even and nonincreasing in eta") {
  const auto& sys = four_corner();
  PointCloud cloud = attractor_cloud(sys, 1.0 / 32);
  DeltaNet net = build_delta_net(2, 1, 1.0 / 32, 4.0, 29);
  std::uint64_t prev = std::uint64_t(-1);
  for (double factor : {4.0, 6.0, 8.0}) {
    EnergyCount e = energy_over_net(cloud, net, factor / 32.0);
    for (std::uint64_t c : e.per_direction) CHECK(c % 2 == 0);
    CHECK(e.total <= prev);
    prev = e.total;
  }
}

TEST_CASE("energy: grid delta must match the cloud resolution") {
  PointCloud cloud = raw_cloud({0.0, 0.0, 1.0, 0.0}, 2, 0.01);
  DeltaNet net = build_delta_net(2, 1, 0.5, 4.0, 3);
  CHECK_THROWS_AS(energy_over_net(cloud, net, 0.04, 0.02), ValidationError);
}

TEST_CASE("sweep_directions: trivial regime flags everything at coarse scale") {
  const auto& sys = four_corner();
  PointCloud cloud = attractor_cloud(sys, 1.0 / 8);
  DeltaNet net = build_delta_net(2, 1, 1.0 / 8, 4.0, 37);
  DirectionSweep sw = sweep_directions(cloud, net, 1.5);
  CHECK(sw.flagged_count == net.size());
}

TEST_CASE("sweep_directions: flags are monotone in s") {
  const auto& sys = four_corner();
  PointCloud cloud = attractor_cloud(sys, 1.0 / 64);
  DeltaNet net = build_delta_net(2, 1, 1.0 / 32, 4.0, 41);
  DirectionSweep lo = sweep_directions(cloud, net, 0.55);
  DirectionSweep hi = sweep_directions(cloud, net, 0.85);
  for (std::size_t v = 0; v < net.size(); ++v)
    if (lo.flagged[v]) CHECK(hi.flagged[v]);
  CHECK(lo.flagged_count <= hi.flagged_count);
}

TEST_CASE("sweep_directions: lattice slab flags concentrate near the annihilator") {
  double s = 0.5;
  std::vector<double> deltas{1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256};
  std::vector<double> xs, ys;
  for (double delta : deltas) {
    std::size_t m = std::size_t(std::lround(1.0 / delta));
    std::vector<double> coords;
    for (std::size_t j = 0; j <= m; ++j) {
      coords.push_back(double(j) * delta);
      coords.push_back(0.0);
    }
    PointCloud slab = raw_cloud(std::move(coords), 2, delta);
    DeltaNet net = build_delta_net(2, 1, delta, 4.0, 53);
    DirectionSweep sw = sweep_directions(slab, net, s);
    REQUIRE(sw.flagged_count > 0);
    // flagged directions sit near the vertical (the annihilator of the slab)
    for (std::size_t v = 0; v < net.size(); ++v)
      if (sw.flagged[v])
        CHECK(std::abs(net.members[v].frame()(0, 0)) < 8.0 * std::pow(delta, 1.0 - s));
    xs.push_back(std::log(1.0 / delta));
    ys.push_back(std::log(double(sw.flagged_count)));
  }
  LinearFit fit = fit_line(xs, ys);
  // expected exponent is s = k(n-k) - (k-s)
  CHECK(fit.slope > 0.2);
  CHECK(fit.slope < 0.8);
}

TEST_CASE("almost_dc_check: product cantor with an axis direction") {
  const auto& sys = product_cantor();
  PointCloud cloud = attractor_cloud(sys, std::pow(3.0, -7) * sys.enumeration_scale());
  double D = std::log(2.0) / std::log(3.0);
  AlmostDcResult res = almost_dc_check(cloud, coordinate_subspace(2, {0}), D, 0.05);
  CHECK(res.witness);
  CHECK(res.cloud_dim.value == doctest::Approx(2.0 * D).epsilon(0.08));
  CHECK(res.yset_dim.value == doctest::Approx(D).epsilon(0.15));
  // fibers over occupied cells carry the vertical Cantor structure
  std::size_t near = 0;
  for (double f : res.fiber_dims)
    if (std::abs(f - D) < 0.15) ++near;
  CHECK(near * 2 >= res.fiber_dims.size());
}

TEST_CASE("almost_dc_check: Delta above the cloud dimension refutes at scale") {
  const auto& sys = product_cantor();
  PointCloud cloud = attractor_cloud(sys, std::pow(3.0, -5) * sys.enumeration_scale());
  AlmostDcResult res = almost_dc_check(cloud, coordinate_subspace(2, {0}), 1.8, 0.05);
  CHECK(!res.witness);
  CHECK(res.refuted_at_scale);
  CHECK(res.yset_empty);
}

TEST_CASE("almost_dc_check: Delta = 0 reduces to the projected-dimension comparison") {
  const auto& sys = four_corner();
  PointCloud cloud = attractor_cloud(sys, std::pow(4.0, -5) * sys.enumeration_scale());
  // a direction whose projection keeps the four-corner dimension at this scale
  AlmostDcResult res = almost_dc_check(cloud, line_at_angle(1.1), 0.0, 0.05);
  CHECK(res.cells_collected == res.cells_total);
  CHECK(res.witness);
  // the projection onto an axis drops the dimension to 1/2, so Delta = 0 fails
  AlmostDcResult axis = almost_dc_check(cloud, coordinate_subspace(2, {0}), 0.0, 0.05);
  CHECK(axis.cells_collected == axis.cells_total);
  CHECK(!axis.witness);
  CHECK(axis.refuted_at_scale);
}

TEST_CASE("delta_prime_scan: grid filtering on the product cantor set") {
  const auto& sys = product_cantor();
  PointCloud cloud = attractor_cloud(sys, std::pow(3.0, -7) * sys.enumeration_scale());
  Subspace V = coordinate_subspace(2, {0});
  double D = std::log(2.0) / std::log(3.0);
  CHECK(delta_prime_scan(cloud, V, 0.05, {}).empty());
  auto passing = delta_prime_scan(cloud, V, 0.05, {0.0, 0.2, D, 1.0});
  REQUIRE(passing.size() == 1);
  CHECK(passing[0] == doctest::Approx(D));
}

TEST_CASE("checkerboard_partition: alignment, diameter, and separation") {
  // n = 2, k = 1: complement coordinates are one-dimensional
  {
    double eta = 0.05, delta = 0.01;
    FatPlaneGrid grid(coordinate_subspace(2, {0}), delta);
    // points spanning one 4*eta interval in the complement coordinate
    std::vector<double> coords{0.0, 0.01, 0.0, 0.19};
    PointCloud cloud = raw_cloud(std::move(coords), 2, delta);
    auto boxes = checkerboard_partition(grid, {0}, eta, cloud);
    CHECK(boxes.size() >= 1);
    CHECK(boxes.size() <= 2);  // 2^{n-k}
  }
  // n = 3, k = 1: diameter bound sqrt(2 (4 eta)^2 + delta^2) < sqrt(3) * 4 eta
  {
    double eta = 0.1, delta = 1e-3;
    FatPlaneGrid grid(coordinate_subspace(3, {0}), delta);
    std::vector<double> coords{0.0, 0.0, 0.0, 0.0, 0.9, 0.9};
    PointCloud cloud = raw_cloud(std::move(coords), 3, delta);
    auto boxes = checkerboard_partition(grid, {0}, eta, cloud);
    REQUIRE(!boxes.empty());
    double want = std::sqrt(2.0 * 16.0 * eta * eta + delta * delta);
    CHECK(boxes[0].diameter() == doctest::Approx(want).epsilon(1e-12));
    CHECK(boxes[0].diameter() < std::sqrt(3.0) * 4.0 * eta);
  }
  // non-adjacent boxes are 4*eta apart, so points in them separated by more
  // than 4*eta - 2*delta > 2*eta
  {
    double eta = 0.05, delta = 0.01;
    CHECK(4.0 * eta - 2.0 * delta > 2.0 * eta);
  }
}

TEST_CASE("asymptotic_eta: formula value and the domain guard") {
  double got = asymptotic_eta(2, 1, 1.0, 0.6, 0.3);
  double want = std::pow(0.3, 10.0) /
                (std::sqrt(2.0) * std::pow(2.0, 12.0) * std::pow(3.0, 10.0));
  CHECK(got == doctest::Approx(want).epsilon(1e-12));
  CHECK(got < 1e-12);  // far below any usable grid
  CHECK_THROWS_AS(asymptotic_eta(2, 1, 1.0, 0.9, 0.2), ValidationError);
}

}  // TEST_SUITE

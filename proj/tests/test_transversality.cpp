#include <cmath>

#include "doctest.h"
#include "projdim/systems.hpp"
#include "projdim/transversality.hpp"

using namespace projdim;

namespace {

const SelfSimilarIFS& four_corner() { return *find_builtin("four_corner").ss; }

Vec random_unit(Rng& rng, int n) {
  Vec u(std::size_t(n), 0.0);
  double nn = 0;
  do {
    for (double& v : u) v = rng.gaussian();
    nn = norm(u);
  } while (nn < 1e-6);
  for (double& v : u) v /= nn;
  return u;
}

Mat random_rotation(Rng& rng, int n) {
  Mat Q(n, n);
  do {
    for (double& v : Q.a) v = rng.gaussian();
  } while (!orthonormalize_columns(Q));
  return Q;
}

}  // namespace

TEST_SUITE("transversality") {

TEST_CASE("rho: coordinate example, parallel collapse, idempotence") {
  Vec r = rho({0.0, 0.0, 1.0}, {1.0, 2.0, 3.0});
  CHECK(r[0] == doctest::Approx(1.0));
  CHECK(r[1] == doctest::Approx(2.0));
  CHECK(r[2] == doctest::Approx(0.0).epsilon(1e-14));

  Vec par = rho({0.0, 1.0}, {0.0, -4.2});
  CHECK(norm(par) < 1e-14);

  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    Vec e = random_unit(rng, 3);
    Vec x{rng.gaussian(), rng.gaussian(), rng.gaussian()};
    Vec once = rho(e, x);
    CHECK(dist(rho(e, once), once) < 1e-12);
    // Pythagoras: |x|^2 = |rho_e(x)|^2 + (x.e)^2
    double lhs = dot(x, x);
    double rhs = dot(once, once) + dot(x, e) * dot(x, e);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    CHECK(norm(once) <= norm(x) + 1e-12);
  }

  CHECK_THROWS_AS(rho({0.5, 0.5}, {1.0, 1.0}), ValidationError);
}

TEST_CASE("ProjectedFamily rejects rotation-bearing systems") {
  CHECK_THROWS_AS(ProjectedFamily(*find_builtin("quarter_turn").ss), ValidationError);
}

TEST_CASE("family_limit: fixed-point words and the rho identity") {
  ProjectedFamily fam(four_corner());
  Rng rng(7);
  // deep repetition of one letter approaches rho_e of that map's fixed point
  for (std::size_t i = 0; i < 4; ++i) {
    Vec e = random_unit(rng, 2);
    SymbolWord w;
    w.letters.assign(40, int(i));
    Vec lim = family_limit(fam, e, w);
    Vec want = rho(e, four_corner().maps()[i].fixed_point());
    CHECK(dist(lim, want) < 1e-10);
  }
  // identity with rho of the ambient symbol point at random words
  for (int trial = 0; trial < 100; ++trial) {
    Vec e = random_unit(rng, 2);
    SymbolWord w;
    int depth = 1 + int(rng.index(8));
    for (int d = 0; d < depth; ++d) w.letters.push_back(int(rng.index(4)));
    Vec lim = family_limit(fam, e, w);  // throws if the two routes disagree
    CHECK(dist(lim, rho(e, symbol_point(four_corner(), w))) < 1e-10);
  }
}

TEST_CASE("family_limit: planar case reduces to a one-dimensional system") {
  ProjectedFamily fam(four_corner());
  Vec e{0.0, 1.0};  // project onto the x-axis
  SymbolWord w{{1, 0, 3, 2}};
  Vec lim = family_limit(fam, e, w);
  // by hand: x-coordinates follow the 1-d maps x/4 + {0, 3/4, 0, 3/4}
  double x = 0.0;
  for (auto it = w.letters.rbegin(); it != w.letters.rend(); ++it)
    x = 0.25 * x + ((*it == 1 || *it == 3) ? 0.75 : 0.0);
  CHECK(lim[0] == doctest::Approx(x).epsilon(1e-13));
  CHECK(lim[1] == doctest::Approx(0.0).epsilon(1e-13));
}

TEST_CASE("jacobian_analytic: aligned, orthogonal, and random cases") {
  {
    Jacobian J = jacobian_analytic({0.0, 0.0, 1.0}, {0.0, 0.0, 1.0});
    CHECK(max_abs_diff(J.matrix, Mat::identity(2)) == doctest::Approx(2.0));  // -I vs I
    CHECK(J.det == doctest::Approx(1.0));  // (-1)^2
  }
  {
    Jacobian J = jacobian_analytic({1.0, 0.0}, {0.0, 1.0});
    CHECK(std::abs(J.matrix(0, 0)) < 1e-14);
    CHECK(J.det == doctest::Approx(0.0));
  }
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Vec z{rng.gaussian(), rng.gaussian(), rng.gaussian()};
    Vec u = random_unit(rng, 3);
    Jacobian J = jacobian_analytic(z, u);
    CHECK(J.det == doctest::Approx(dot(z, u) * dot(z, u)).epsilon(1e-12));
  }
}

TEST_CASE("jacobian determinant is invariant under joint rotations") {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 2 + int(rng.index(3));
    Vec z(std::size_t(n), 0.0);
    for (double& v : z) v = rng.gaussian();
    Vec u = random_unit(rng, n);
    Mat Q = random_rotation(rng, n);
    Jacobian a = jacobian_analytic(z, u);
    Jacobian b = jacobian_analytic(mul(Q, z), mul(Q, u));
    CHECK(a.det == doctest::Approx(b.det).epsilon(1e-10));
  }
}

TEST_CASE("jacobian_fd agrees with the closed form") {
  Rng rng(17);
  // z = u on the unit sphere: derivative is -I
  for (int trial = 0; trial < 10; ++trial) {
    Vec u = random_unit(rng, 3);
    Mat F = jacobian_fd(u, u, 1e-4);
    Mat want = Mat::identity(2);
    for (double& v : want.a) v = -v;
    CHECK(max_abs_diff(F, want) < 10.0 * 1e-8 * norm(u) + 1e-12);
  }
  // relative error below 1e-6 at h = 1e-4, over random draws
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    int n = 2 + int(rng.index(3));
    Vec z(std::size_t(n), 0.0);
    for (double& v : z) v = rng.gaussian();
    if (norm(z) < 1e-3) continue;
    Vec u = random_unit(rng, n);
    Mat fd = jacobian_fd(z, u, 1e-4);
    Jacobian an = jacobian_analytic(z, u);
    worst = std::max(worst, max_abs_diff(fd, an.matrix) / norm(z));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("jacobian_fd converges at second order") {
  Rng rng(23);
  Vec z{0.7, -1.2, 0.4};
  Vec u = random_unit(rng, 3);
  Jacobian an = jacobian_analytic(z, u);
  double e1 = max_abs_diff(jacobian_fd(z, u, 2e-4), an.matrix);
  double e2 = max_abs_diff(jacobian_fd(z, u, 1e-4), an.matrix);
  CHECK(e1 / e2 > 2.5);
  CHECK(e1 / e2 < 6.0);
}

TEST_CASE("transversality hypothesis chain on random witnesses") {
  Rng rng(31);
  int kept = 0;
  while (kept < 100) {
    double c = rng.uniform(0.1, 1.0);
    Vec z{rng.gaussian(), rng.gaussian(), rng.gaussian()};
    Vec u = random_unit(rng, 3);
    Vec r = rho(u, z);
    if (!(dot(r, r) < 0.5 * c * c)) continue;
    if (!(dot(z, z) > c * c)) continue;
    ++kept;
    double zu = dot(z, u);
    CHECK(zu * zu > 0.5 * c * c);
  }
}

TEST_CASE("transversality_scan: four-corner family passes at modest depth") {
  ProjectedFamily fam(four_corner());
  TransversalityReport rep = transversality_scan(fam, 90, 4, 1u << 22, 5);
  CHECK(!rep.tail_limited);
  CHECK(rep.close_pairs > 0);
  CHECK(rep.violations == 0);
  CHECK(rep.min_margin > 0.0);
}

TEST_CASE("transversality_scan: inflated separation constant is flagged") {
  ProjectedFamily fam(four_corner());
  TransversalityReport rep = transversality_scan(fam, 45, 4, 1u << 22, 5, 5.0);
  CHECK(rep.violations > 0);
  CHECK(!rep.flagged_records.empty());
  CHECK(rep.flagged_records[0].flagged);
}

TEST_CASE("transversality_scan requires certified separation") {
  ProjectedFamily fam(*find_builtin("sierpinski").ss);
  CHECK_THROWS_AS(transversality_scan(fam, 10, 3, 1u << 20, 5), ValidationError);
}

}  // TEST_SUITE

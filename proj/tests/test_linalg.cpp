#include <cmath>

#include "doctest.h"
#include "projdim/linalg.hpp"

using namespace projdim;

TEST_SUITE("linalg") {

TEST_CASE("gram-schmidt produces orthonormal columns") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 2 + int(rng.index(4));
    int k = 1 + int(rng.index(std::size_t(n)));
    Mat A(n, k);
    for (double& v : A.a) v = rng.gaussian();
    if (!orthonormalize_columns(A)) continue;
    Mat G = mul(transpose(A), A);
    CHECK(max_abs_diff(G, Mat::identity(k)) < 1e-12);
  }
}

TEST_CASE("jacobi eigenvalues match hand values") {
  Mat A(2, 2);
  A(0, 0) = 2;
  A(0, 1) = 1;
  A(1, 0) = 1;
  A(1, 1) = 2;
  Vec ev = sym_eigenvalues(A);
  std::sort(ev.begin(), ev.end());
  CHECK(ev[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ev[1] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("opnorm closed form agrees with jacobi on random symmetric") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 2 + int(rng.index(4));
    Mat A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double v = rng.gaussian();
        A(i, j) = v;
        A(j, i) = v;
      }
    Vec ev = sym_eigenvalues(A);
    double want = 0;
    for (double v : ev) want = std::max(want, std::abs(v));
    CHECK(sym_opnorm(A) == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("orthonormal complement spans the rest of space") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 2 + int(rng.index(4));
    int k = 1 + int(rng.index(std::size_t(n - 1)));
    Mat F(n, k);
    for (double& v : F.a) v = rng.gaussian();
    if (!orthonormalize_columns(F)) continue;
    Mat C = orthonormal_complement(F);
    REQUIRE(C.cols == n - k);
    // complement columns orthonormal and orthogonal to the frame
    CHECK(max_abs_diff(mul(transpose(C), C), Mat::identity(n - k)) < 1e-12);
    Mat cross = mul(transpose(F), C);
    double m = 0;
    for (double v : cross.a) m = std::max(m, std::abs(v));
    CHECK(m < 1e-12);
  }
}

TEST_CASE("solve_linear inverts small systems") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 1 + int(rng.index(5));
    Mat A(n, n);
    for (double& v : A.a) v = rng.gaussian();
    for (int i = 0; i < n; ++i) A(i, i) += 4.0;  // well conditioned
    Vec x(std::size_t(n), 0.0);
    for (double& v : x) v = rng.gaussian();
    Vec b = mul(A, x);
    Vec got = solve_linear(A, b);
    for (int i = 0; i < n; ++i)
      CHECK(got[std::size_t(i)] == doctest::Approx(x[std::size_t(i)]).epsilon(1e-9));
  }
}

TEST_CASE("weighted fit reduces to OLS at unit weights") {
  std::vector<double> x{0, 1, 2, 3, 4};
  std::vector<double> y{1.0, 2.9, 5.1, 7.0, 9.05};
  LinearFit f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(2.0).epsilon(0.05));
  CHECK(f.slope_stderr > 0.0);
  LinearFit exact = fit_line({1, 2, 3, 4}, {3, 5, 7, 9});
  CHECK(exact.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(exact.slope_stderr == doctest::Approx(0.0).epsilon(1e-9));
}

}  // TEST_SUITE

#include <cmath>

#include "doctest.h"
#include "qsr/linalg.hpp"
#include "qsr/random.hpp"
#include "qsr/sdp.hpp"

using namespace qsr;

namespace {

Mat phi_plus_proj() {
  Mat m = Mat::Zero(4, 4);
  m(0, 0) = m(0, 3) = m(3, 0) = m(3, 3) = 0.5;
  return m;
}

}  // namespace

TEST_SUITE("sdp") {

TEST_CASE("known closed forms certify tightly") {
  // min Tr Y s.t. rho_A (x) Y >= phi+  has value 4 (Imax = 2 bits)
  auto r1 = solve_dominance_sdp(Mat::Identity(2, 2) * 0.5, phi_plus_proj(), 2, 2);
  CHECK(r1.converged);
  CHECK(r1.trace_y == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(r1.gap < 1e-9);
  CHECK(r1.min_eig_s > -1e-10);

  // with K = I_A the value is 2 (Hmin = -1)
  auto r2 = solve_dominance_sdp(Mat::Identity(2, 2), phi_plus_proj(), 2, 2);
  CHECK(r2.converged);
  CHECK(r2.trace_y == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("duality gap sandwiches the optimum") {
  Rng rng(1234);
  for (int trial = 0; trial < 20; ++trial) {
    const int da = 2, db = 2 + (int)rng.integer(2);
    Mat r = random_density_matrix(da * db, rng);
    Mat k = partial_trace_axes(r, {da, db}, {0});
    auto sol = solve_dominance_sdp(k, r, da, db);
    CHECK(sol.converged);
    // primal feasible: K (x) Y - R is PSD up to tolerance
    CHECK(sol.min_eig_s >= -1e-8);
    // weak duality: dual objective <= primal objective, gap matches
    CHECK(sol.dual_obj <= sol.trace_y + 1e-8);
    CHECK(sol.trace_y - sol.dual_obj == doctest::Approx(sol.gap).epsilon(1e-6));
    CHECK(sol.gap < 1e-9 * (1.0 + sol.trace_y));
    // Y is Hermitian PSD
    CHECK((sol.y - sol.y.adjoint()).norm() < 1e-10);
    auto ey = eig_hermitian(sol.y);
    CHECK(ey.values(ey.values.size() - 1) > -1e-10);
  }
}

TEST_CASE("perturbing the optimum upward confirms minimality") {
  Rng rng(77);
  Mat r = random_density_matrix(4, rng);
  Mat k = partial_trace_axes(r, {2, 2}, {0});
  auto sol = solve_dominance_sdp(k, r, 2, 2);
  REQUIRE(sol.converged);
  // shrinking Y* by 2% must break feasibility (optimum is on the boundary)
  Mat y_small = sol.y * 0.98;
  auto e = eig_hermitian(Mat(kron(k, y_small) - r));
  CHECK(e.values(e.values.size() - 1) < 0.0);
}

TEST_CASE("rank-deficient K restricts to the support") {
  // K = |0><0|, R supported on |0> x B
  Mat k = Mat::Zero(2, 2);
  k(0, 0) = 1.0;
  Mat r = Mat::Zero(4, 4);
  r(0, 0) = 0.7;
  r(1, 1) = 0.3;
  auto sol = solve_dominance_sdp(k, r, 2, 2);
  CHECK(sol.converged);
  CHECK(sol.trace_y == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(sol.min_eig_s > -1e-10);
}

TEST_CASE("dimension mismatch rejected") {
  CHECK_THROWS_AS(solve_dominance_sdp(Mat::Identity(2, 2), Mat::Identity(4, 4), 2, 3),
                  invalid_input);
}

}  // TEST_SUITE

#include <doctest.h>

#include <cmath>

#include "heatctl/basis.hpp"
#include "heatctl/rng.hpp"
#include "test_util.hpp"

using namespace heatctl;
using testutil::kPi;

TEST_CASE("first eigenpair on the square is the constant mode") {
  const SpectralBasis b = SpectralBasis::build(testutil::square_domain(), 1);
  CHECK(b.pair(0).kx == 0);
  CHECK(b.pair(0).ky == 0);
  CHECK(b.pair(0).lambda == 0.0);
  // phi_1 = 1/sqrt(|O|) = 1/pi on the pi x pi square
  CHECK(b.pair(0).norm_const == doctest::Approx(1.0 / kPi).epsilon(1e-14));
}

TEST_CASE("mode (1,0) on the square has lambda 1") {
  const SpectralBasis b = SpectralBasis::build(testutil::square_domain(), 4);
  bool found = false;
  for (const EigenPair& p : b.pairs())
    if (p.kx == 1 && p.ky == 0) {
      CHECK(p.lambda == doctest::Approx(1.0).epsilon(1e-14));
      found = true;
    }
  CHECK(found);
}

TEST_CASE("aspect-sqrt(2) spectrum starts 0,1,2,3,4,6,8") {
  // Oracle: brute-force enumeration of kx^2 + 2 ky^2 over a wide window.
  const auto oracle = testutil::lattice_eigenvalues(kPi, kPi / std::sqrt(2.0), 7);
  const SpectralBasis b = SpectralBasis::build(testutil::aspect_domain(), 7);
  const std::vector<double> expected = {0, 1, 2, 3, 4, 6, 8};
  for (int j = 0; j < 7; ++j) {
    CHECK(b.lambda(j) == doctest::Approx(expected[static_cast<size_t>(j)]).epsilon(1e-12));
    CHECK(b.lambda(j) == doctest::Approx(oracle[static_cast<size_t>(j)]).epsilon(1e-12));
  }
}

TEST_CASE("eigenvalues are nondecreasing and ordered lexicographically on ties") {
  const SpectralBasis b = SpectralBasis::build(testutil::square_domain(), 30);
  for (int j = 1; j < b.size(); ++j) {
    CHECK(b.lambda(j) >= b.lambda(j - 1));
    if (b.lambda(j) == b.lambda(j - 1))
      CHECK(b.pair(j - 1).kx < b.pair(j).kx);
  }
}

TEST_CASE("build rejects an under-resolved grid and an oversized J") {
  RectDomain d = testutil::square_domain(8, 8);
  CHECK_THROWS_AS(SpectralBasis::build(d, 30), ResolutionError);
  CHECK_THROWS_AS(SpectralBasis::build(d, 1000), ResolutionError);
  CHECK_NOTHROW(SpectralBasis::build(d, 10));
}

TEST_CASE("domain invariants are enforced") {
  RectDomain d = testutil::square_domain();
  d.gamma1_edges.clear();
  CHECK_THROWS_AS(SpectralBasis::build(d, 4), ConfigError);
  d = testutil::square_domain(3, 32);
  CHECK_THROWS_AS(SpectralBasis::build(d, 4), ConfigError);
  d = testutil::square_domain();
  d.Lx = -1.0;
  CHECK_THROWS_AS(SpectralBasis::build(d, 4), ConfigError);
}

TEST_CASE("synthesis of the first unit vector is the constant field 1/pi") {
  const SpectralBasis b = SpectralBasis::build(testutil::square_domain(), 9);
  ModeVector e1 = ModeVector::Zero(9);
  e1(0) = 1.0;
  const Eigen::VectorXd field = b.synthesize(e1);
  for (Eigen::Index i = 0; i < field.size(); ++i)
    CHECK(field(i) == doctest::Approx(1.0 / kPi).epsilon(1e-14));
  CHECK(b.synthesize(ModeVector::Zero(9)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("project inverts synthesize to 1e-10 for random modes") {
  const SpectralBasis b = SpectralBasis::build(testutil::square_domain(), 25);
  Rng rng(11);
  ModeVector y(25);
  for (int j = 0; j < 25; ++j) y(j) = rng.normal();
  const ModeVector back = b.project(b.synthesize(y));
  CHECK((back - y).cwiseAbs().maxCoeff() < 1e-10);
  const ModeVector back_pad = b.project_padded(b.synthesize_padded(y));
  CHECK((back_pad - y).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("quadrature Gram matrix is the identity to 1e-8") {
  const SpectralBasis b = SpectralBasis::build(testutil::aspect_domain(), 40);
  const Eigen::MatrixXd gram = b.grid_values().transpose() *
                               b.grid_weights().asDiagonal() * b.grid_values();
  CHECK((gram - Eigen::MatrixXd::Identity(40, 40)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("Parseval: grid L2 norm equals coefficient norm") {
  const SpectralBasis b = SpectralBasis::build(testutil::aspect_domain(), 30);
  Rng rng(5);
  ModeVector y(30);
  for (int j = 0; j < 30; ++j) y(j) = rng.normal();
  const Eigen::VectorXd f = b.synthesize(y);
  const double grid_norm = std::sqrt((b.grid_weights().array() * f.array().square()).sum());
  CHECK(grid_norm == doctest::Approx(y.norm()).epsilon(1e-8));
}

TEST_CASE("fractional norm definition and interlacing") {
  const SpectralBasis b = SpectralBasis::build(testutil::square_domain(), 9);
  // single mode with lambda = 2 (the (1,1) mode), coefficient 3, s = 1/2:
  // sqrt((1+2)^(1/2) * 9) = 3 * 3^(1/4)
  int idx = -1;
  for (int j = 0; j < b.size(); ++j)
    if (b.pair(j).kx == 1 && b.pair(j).ky == 1) idx = j;
  REQUIRE(idx >= 0);
  ModeVector y = ModeVector::Zero(9);
  y(idx) = 3.0;
  CHECK(b.fractional_norm(y, 0.5) ==
        doctest::Approx(3.0 * std::pow(3.0, 0.25)).epsilon(1e-14));
  CHECK(b.fractional_norm(ModeVector::Zero(9), 0.5) == 0.0);
  CHECK_THROWS_AS(b.fractional_norm(y, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(b.fractional_norm(y, 1.5), std::invalid_argument);

  Rng rng(17);
  for (int rep = 0; rep < 100; ++rep) {
    ModeVector v(9);
    for (int j = 0; j < 9; ++j) v(j) = rng.normal();
    CHECK(b.fractional_norm(v, 0.5) <= b.fractional_norm(v, 1.0) + 1e-12);
  }
}

TEST_CASE("series audit converges for exponent 5/3 on the square") {
  const RectDomain d = testutil::square_domain();
  const SeriesReport r = audit_series(d, 5.0 / 3.0, 10000);
  CHECK(r.converged);
  CHECK(std::isfinite(r.tail_bound));

  // doubling consistency: the increment is below the previous tail bound
  const SeriesReport r2 = audit_series(d, 5.0 / 3.0, 20000);
  CHECK(r2.partial_sum >= r.partial_sum);
  CHECK(r2.partial_sum - r.partial_sum <= r.tail_bound);
}

TEST_CASE("series audit reports divergence for exponent 1/2") {
  const RectDomain d = testutil::square_domain();
  const SeriesReport r = audit_series(d, 0.5, 10000);
  CHECK_FALSE(r.converged);
  CHECK(std::isinf(r.tail_bound));
  // partial sums keep growing by a non-vanishing amount under doubling
  const SeriesReport r2 = audit_series(d, 0.5, 40000);
  CHECK(r2.partial_sum - r.partial_sum > 0.1 * r.partial_sum);
}

TEST_CASE("series audit rejects bad inputs and diverges for exponent 1") {
  const RectDomain d = testutil::square_domain();
  CHECK_THROWS_AS(audit_series(d, -1.0, 1000), ConfigError);
  CHECK_THROWS_AS(audit_series(d, 1.5, 50), ConfigError);
  CHECK_FALSE(audit_series(d, 1.0, 10000).converged);
}

TEST_CASE("eigenfunction sup bound on the square: 2/pi for double cosines") {
  const SpectralBasis b = SpectralBasis::build(testutil::square_domain(), 25);
  for (int j = 0; j < b.size(); ++j)
    if (b.pair(j).kx >= 1 && b.pair(j).ky >= 1)
      CHECK(b.grid_values().col(j).cwiseAbs().maxCoeff() ==
            doctest::Approx(2.0 / kPi).epsilon(1e-13));
}

TEST_CASE("full-boundary trace norm of phi_(1,0) matches closed-form integrals") {
  // Closed form on the pi x pi square: bottom+top edges contribute
  // 2 * n_0(0)^2 * int n_1^2 = 2/pi, left+right contribute 2 * n_1(0)^2 = 4/pi,
  // so ||phi||^2 = 6/pi.
  const SpectralBasis b = SpectralBasis::build(testutil::square_domain(), 4);
  int idx = -1;
  for (int j = 0; j < b.size(); ++j)
    if (b.pair(j).kx == 1 && b.pair(j).ky == 0) idx = j;
  REQUIRE(idx >= 0);
  CHECK(b.full_boundary_norm(idx) ==
        doctest::Approx(std::sqrt(6.0 / kPi)).epsilon(1e-8));
}

TEST_CASE("eigen-bound audit is finite and stable under doubling") {
  const SpectralBasis b = SpectralBasis::build(testutil::square_domain(64, 64), 40);
  const EigenBoundsReport r = audit_eigen_bounds(b);
  CHECK(std::isfinite(r.c_infty_fit));
  CHECK(std::isfinite(r.c_trace_fit));
  CHECK(std::isfinite(r.c_heatkernel_fit));
  CHECK(r.c_heatkernel_fit > 0.0);
  CHECK(r.stable);
  // known sup for the square: C_infty is attained by the (1,1)-type modes
  CHECK(r.c_infty_fit <= 2.0 / kPi + 1e-12);
}

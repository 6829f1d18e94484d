#include <doctest.h>

#include <cmath>

#include "heatctl/stabilizer.hpp"
#include "heatctl/rng.hpp"
#include "test_util.hpp"

using namespace heatctl;
using testutil::kPi;

TEST_CASE("unstable selection on the aspect-sqrt(2) spectrum") {
  const SpectralBasis b = SpectralBasis::build(testutil::aspect_domain(), 12);

  // Oracle: enumerate mu_j = lambda_j - c over the brute-force spectrum and
  // count entries <= rho.
  const auto lam = testutil::lattice_eigenvalues(kPi, kPi / std::sqrt(2.0), 12);
  auto count = [&](double c, double rho) {
    int n = 0;
    for (double l : lam)
      if (l - c <= rho) ++n;
    return n;
  };

  const UnstableSelection s1 = select_unstable(b, 5.0, 2.0);
  CHECK(s1.N == 6);
  CHECK(s1.N == count(5.0, 2.0));
  CHECK(s1.mu(0) == doctest::Approx(-5.0));
  CHECK(s1.mu(5) == doctest::Approx(1.0));
  CHECK(s1.mu(6) == doctest::Approx(3.0));

  const UnstableSelection s2 = select_unstable(b, 0.0, 2.0);
  CHECK(s2.N == 3);
  CHECK(s2.N == count(0.0, 2.0));

  CHECK_THROWS_AS(select_unstable(b, 5.0, 1.0), DesignRejected);
  // rho = 3 collides with mu_7 = 3 exactly
  CHECK_THROWS_AS(select_unstable(b, 5.0, 3.0), DesignRejected);
}

namespace {

// Independent oracle: the four margin inequalities written out directly.
double h3_oracle_worst(double alpha, double rho, const std::vector<double>& lam) {
  double worst = -1e300;
  for (double li : lam) {
    worst = std::max(worst, -rho + 2 * alpha + 3.0 / 4.0 + li / 4.0 - 1.0 / 100.0);
    worst = std::max(worst, -rho + 3 * alpha + 7.0 / 12.0 + li / 4.0 - 1.0 / 100.0);
    for (double lj : lam) {
      worst = std::max(worst,
                       -rho + 2 * alpha + (li + lj) / 4.0 + 0.5 - 1.0 / 100.0);
      worst = std::max(worst,
                       -rho + 3 * alpha + 5.0 / 12.0 + (li + lj) / 4.0 - 1.0 / 100.0);
    }
  }
  return worst;
}

} // namespace

TEST_CASE("H3 margin inequalities") {
  Eigen::VectorXd lam1(1);
  lam1 << 0.0;
  // alpha = 0.1, N = 1, lambda = 0: the binding condition is
  // -rho + 2 alpha + 3/4 - 1/100, so the audit flips at rho = 0.94.
  CHECK(h3_oracle_worst(0.1, 0.94, {0.0}) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(audit_h3(0.1, 0.95, 1, lam1).ok);
  CHECK_FALSE(audit_h3(0.1, 0.93, 1, lam1).ok);
  CHECK(audit_h3(0.1, 0.90, 1, lam1).worst_margin ==
        doctest::Approx(0.04).epsilon(1e-12));

  // alpha = 0: rho = 0.75 + lambda_N/2 + 0.5 clears every inequality
  Eigen::VectorXd lam2(2);
  lam2 << 0.0, 1.0;
  CHECK(audit_h3(0.0, 0.75 + 0.5 + 0.5, 2, lam2).ok);

  // N = 2, lambda = (0,1), alpha = 0.1, rho = 5
  const H3Report r = audit_h3(0.1, 5.0, 2, lam2);
  CHECK(r.ok);
  CHECK(r.worst_margin < 0.0);
  CHECK(r.worst_margin ==
        doctest::Approx(h3_oracle_worst(0.1, 5.0, {0.0, 1.0})).epsilon(1e-12));
}

TEST_CASE("H4 simplicity audit") {
  const SpectralBasis b = SpectralBasis::build(testutil::aspect_domain(), 12);
  const UnstableSelection s = select_unstable(b, 5.0, 2.0);
  CHECK(audit_h4(s.mu, 6).ok);
  CHECK(audit_h4(s.mu, 7).ok);  // first 7 are 0,1,2,3,4,6,8 shifted: distinct
  CHECK_FALSE(audit_h4(s.mu, 9).ok);  // lambda = 9 appears twice

  // square: lambda = 1 has multiplicity two among the first modes
  const SpectralBasis sq = SpectralBasis::build(testutil::square_domain(), 6);
  Eigen::VectorXd mu_sq = sq.lambdas();
  CHECK_FALSE(audit_h4(mu_sq, 3).ok);
  CHECK(audit_h4(mu_sq, 1).ok);  // N = 1 is always simple
}

TEST_CASE("gram matrix entries match closed-form edge integrals") {
  // bottom edge of the pi x pi square, phi_(1,0) against itself:
  // (2/pi)(1/pi) int_0^pi cos^2 x dx = 1/pi
  const SpectralBasis b = SpectralBasis::build(testutil::square_domain(), 4);
  int idx = -1;
  for (int j = 0; j < b.size(); ++j)
    if (b.pair(j).kx == 1 && b.pair(j).ky == 0) idx = j;
  REQUIRE(idx >= 0);
  const GramResult g = gram_matrix(b, 4);
  CHECK(g.B(idx, idx) == doctest::Approx(1.0 / kPi).epsilon(1e-8));
  CHECK((g.B - g.B.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("proportional traces on a single edge make the Gram singular") {
  // modes (0,0) and (0,1) restricted to the bottom edge are both constant
  const SpectralBasis sq = SpectralBasis::build(testutil::square_domain(), 3);
  REQUIRE(sq.pair(0).kx == 0);
  REQUIRE(sq.pair(1).ky == 1);  // square ordering: (0,0), (0,1), (1,0)
  CHECK(gram_matrix(sq, 2).rank < 2);

  // same effect drives a design rejection on the aspect rectangle where the
  // first three modes are simple: c = 0, rho = 2.5 gives N = 3 but the
  // bottom-edge traces of (0,0) and (0,1) are proportional.
  const SpectralBasis b =
      SpectralBasis::build(testutil::aspect_domain(32, 24, {Edge::Bottom}), 8);
  CHECK(gram_matrix(b, 3).rank == 2);
  CHECK_THROWS_AS(assemble_design(b, 0.0, 2.5, 0.0, {3.5, 4.5, 5.5}), DesignRejected);
}

TEST_CASE("two adjacent edges leave the first six aspect modes rank deficient") {
  // The first six modes form the full tensor set {0,1,2} x {0,1}; on
  // bottom+left their traces admit two independent null combinations,
  // so the numerical rank drops to 4 (quadrature Gram oracle).
  const SpectralBasis b = SpectralBasis::build(
      testutil::aspect_domain(32, 24, {Edge::Bottom, Edge::Left}), 12);
  const GramResult g = gram_matrix(b, 6);
  CHECK(g.rank == 4);
  CHECK_THROWS_AS(testutil::reference_design(b), DesignRejected);
}

TEST_CASE("three controlled edges give a full-rank design") {
  const SpectralBasis b = SpectralBasis::build(testutil::aspect_domain(), 12);
  const GramResult g = gram_matrix(b, 6);
  CHECK(g.rank == 6);
  const StabilizerDesign d = testutil::reference_design(b);
  CHECK(d.N == 6);
  CHECK(d.gram_rank == 6);
  CHECK(std::isfinite(d.cond_sum));

  // A (sum B_k) = I within 1e-8
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(6, 6);
  for (const Eigen::MatrixXd& bk : d.Bk) sum += bk;
  CHECK((d.A * sum - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("scalar design: A = (gamma_1 - mu_1)^2 / b") {
  // shrink the rectangle so that N = 1 with c = 1, rho = 2
  RectDomain dom = testutil::aspect_domain();
  dom.Lx = kPi / 2.0;
  dom.Ly = kPi / (2.0 * std::sqrt(2.0));
  const SpectralBasis b = SpectralBasis::build(dom, 8);
  const StabilizerDesign d = assemble_design(b, 1.0, 2.0, 0.1, {3.0});
  REQUIRE(d.N == 1);
  const double gram = d.B(0, 0);
  CHECK(d.A(0, 0) ==
        doctest::Approx((3.0 - d.mu(0)) * (3.0 - d.mu(0)) / gram).epsilon(1e-12));
}

TEST_CASE("design rejects malformed gamma ladders") {
  const SpectralBasis b = SpectralBasis::build(testutil::aspect_domain(), 12);
  CHECK_THROWS_AS(assemble_design(b, 5.0, 2.0, 0.1, {3, 4, 5, 6, 7}), DesignRejected);
  CHECK_THROWS_AS(assemble_design(b, 5.0, 2.0, 0.1, {1.5, 4, 5, 6, 7, 8}),
                  DesignRejected);
  CHECK_THROWS_AS(assemble_design(b, 5.0, 2.0, 0.1, {3, 3, 5, 6, 7, 8}),
                  DesignRejected);
  DesignOptions strict;
  strict.enforce_h3 = true;  // H3 fails at rho = 2 with lambda up to 6
  CHECK_THROWS_AS(assemble_design(b, 5.0, 2.0, 0.1, {3, 4, 5, 6, 7, 8}, strict),
                  DesignRejected);
}

TEST_CASE("feedback law is linear and reads only the unstable modes") {
  const SpectralBasis b = SpectralBasis::build(testutil::aspect_domain(), 12);
  const StabilizerDesign d = testutil::reference_design(b);

  ModeVector tail_only = ModeVector::Zero(12);
  tail_only(8) = 2.0;
  tail_only(11) = -1.0;
  CHECK(feedback_field(b, d, tail_only).cwiseAbs().maxCoeff() == 0.0);

  Rng rng(23);
  ModeVector y(12), z(12);
  for (int j = 0; j < 12; ++j) {
    y(j) = rng.normal();
    z(j) = rng.normal();
  }
  const Eigen::VectorXd uy = feedback_field(b, d, y);
  const Eigen::VectorXd uz = feedback_field(b, d, z);
  const Eigen::VectorXd mix = feedback_field(b, d, 2.0 * y - 3.0 * z);
  CHECK((mix - (2.0 * uy - 3.0 * uz)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((feedback_field(b, d, 2.0 * y) - 2.0 * uy).cwiseAbs().maxCoeff() < 1e-12);

  // u = sum of the component laws
  const auto comps = feedback_components(b, d, y);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(uy.size());
  for (const auto& c : comps) total += c;
  CHECK((total - uy).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("scalar feedback formula for N = 1") {
  RectDomain dom = testutil::aspect_domain();
  dom.Lx = kPi / 2.0;
  dom.Ly = kPi / (2.0 * std::sqrt(2.0));
  const SpectralBasis b = SpectralBasis::build(dom, 8);
  const StabilizerDesign d = assemble_design(b, 1.0, 2.0, 0.1, {3.0});
  ModeVector y = ModeVector::Zero(8);
  y(0) = 0.7;
  const Eigen::VectorXd u = feedback_field(b, d, y);
  const Eigen::VectorXd expect =
      d.A(0, 0) * 0.7 / (3.0 - d.mu(0)) * b.trace_of_mode(0);
  CHECK((u - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Neumann map modes follow the two-branch formula") {
  const SpectralBasis b = SpectralBasis::build(testutil::aspect_domain(), 12);
  const StabilizerDesign d = testutil::reference_design(b);

  const Eigen::VectorXd g = b.trace_of_mode(0);
  const ModeVector m = neumann_modes(b, d, g, 0);
  CHECK(m(0) == doctest::Approx(-d.B(0, 0) / (d.gammas(0) - d.mu(0))).epsilon(1e-12));

  const ModeVector zero = neumann_modes(b, d, Eigen::VectorXd::Zero(g.size()), 0);
  CHECK(zero.cwiseAbs().maxCoeff() == 0.0);

  // last mode magnitude equals |<g,phi_J>_0| / (gamma + mu_J)
  const double pj = b.boundary_inner(g, b.trace_of_mode(11));
  CHECK(std::abs(m(11)) ==
        doctest::Approx(std::abs(pj) / (d.gammas(0) + d.mu(11))).epsilon(1e-12));
}

TEST_CASE("Neumann map satisfies its defining equation mode by mode") {
  // (gamma - mu_j) d_j + <g,phi_j>_0 = 0 for j <= N and
  // (gamma + mu_j) d_j + <g,phi_j>_0 = 0 for j > N.
  const SpectralBasis b = SpectralBasis::build(testutil::aspect_domain(), 12);
  const StabilizerDesign d = testutil::reference_design(b);
  Rng rng(31);
  Eigen::VectorXd g(b.trace_weights().size());
  for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = rng.normal();
  const ModeVector m = neumann_modes(b, d, g, 2);
  const ModeVector pb = b.project_boundary(g);
  for (int j = 0; j < 12; ++j) {
    const double factor = j < d.N ? d.gammas(2) - d.mu(j) : d.gammas(2) + d.mu(j);
    CHECK(std::abs(factor * m(j) + pb(j)) < 1e-8);
  }
}

TEST_CASE("boundary inner product matches closed-form cosine integrals") {
  // on the bottom edge of the square, <phi_(1,0), phi_(1,0)>_0 = 1/pi and
  // <phi_(0,0), phi_(1,0)>_0 = 0
  const SpectralBasis b = SpectralBasis::build(testutil::square_domain(), 4);
  int i10 = -1, i00 = -1;
  for (int j = 0; j < 4; ++j) {
    if (b.pair(j).kx == 1 && b.pair(j).ky == 0) i10 = j;
    if (b.pair(j).kx == 0 && b.pair(j).ky == 0) i00 = j;
  }
  REQUIRE(i10 >= 0);
  REQUIRE(i00 >= 0);
  CHECK(b.boundary_inner(b.trace_of_mode(i10), b.trace_of_mode(i10)) ==
        doctest::Approx(1.0 / kPi).epsilon(1e-8));
  CHECK(std::abs(b.boundary_inner(b.trace_of_mode(i00), b.trace_of_mode(i10))) <
        1e-8);
}

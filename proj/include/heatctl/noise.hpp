#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "heatctl/basis.hpp"

namespace heatctl {

/// One additive term of a polynomial-in-time coefficient:
///   amplitude * t^exponent * cos(kx pi x/Lx) cos(ky pi y/Ly).
/// kx = ky = 0 gives a spatially constant term.
struct CoeffTerm {
  double exponent = 0.0;
  double amplitude = 0.0;
  int kx = 0;
  int ky = 0;
};

/// Time-space coefficients a_2, a_3 of the cubic nonlinearity, with the
/// envelope amplitude C_a. Every term must satisfy |amplitude| <= C_a so the
/// growth envelope C_a (sum_k t^{m_k} + 1) holds by construction.
struct CoeffSpec {
  std::vector<CoeffTerm> a2;
  std::vector<CoeffTerm> a3;
  double C_a = 1.0;

  void validate() const;
  bool all_zero() const;
};

/// Largest top exponent of the two coefficient families (0 when both empty).
double coeff_m_s(const CoeffSpec& coeff);

/// a_i(t, .) sampled on the basis grid (padded = dealiasing grid).
/// Throws std::logic_error if the sampled field violates the envelope.
Eigen::VectorXd eval_coeff_field(const CoeffSpec& coeff, int which, double t,
                                 const SpectralBasis& basis, bool padded);

/// Discretized scalar Brownian path with the pathwise rescaling factor
/// Gamma(t) = exp(theta W(t) - t theta^2 / 2), kept in log space.
struct NoisePath {
  double theta = 0.0;
  Eigen::VectorXd t;
  Eigen::VectorXd W;
  Eigen::VectorXd log_gamma;
  std::uint64_t seed = 0;

  double gamma(int i) const { return std::exp(log_gamma(i)); }
  double dt() const { return t.size() > 1 ? t(1) - t(0) : 0.0; }
};

/// Seeded Gaussian-increment sampling; identical seed gives a bit-identical
/// path. Horizon is rounded to a whole number of steps.
NoisePath sample_path(std::uint64_t seed, double theta, double dt, double T);

/// theta1 = theta^2/2 - m_S - 1/100; the noise must dominate the coefficient
/// growth for the rescaled equation to decay.
struct NoiseConditionReport {
  double theta1 = 0.0;
  double m_s = 0.0;
  bool ok = false;
};
NoiseConditionReport audit_noise_condition(double theta, const CoeffSpec& coeff);

/// Per-path suprema of t^{1/100} Gamma(t) sup_x |a_i(t,x)| over the sampled
/// horizon; finite constants certify the rescaled-coefficient decay.
struct RescaledDecayReport {
  double sup_ratio_a2 = 0.0;
  double sup_ratio_a3 = 0.0;
};
RescaledDecayReport audit_rescaled_decay(const NoisePath& path, const CoeffSpec& coeff,
                                         const SpectralBasis& basis);

} // namespace heatctl

#include "heatctl/noise.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "heatctl/rng.hpp"

namespace heatctl {

void CoeffSpec::validate() const {
  if (!(C_a > 0.0)) throw ConfigError("coefficient amplitude C_a must be positive");
  for (const auto* terms : {&a2, &a3}) {
    double prev = 0.0;
    for (const CoeffTerm& term : *terms) {
      if (term.exponent < 0.0) throw ConfigError("coefficient exponents must be >= 0");
      if (term.exponent < prev)
        throw ConfigError("coefficient exponents must be sorted nondecreasing");
      if (std::abs(term.amplitude) > C_a)
        throw ConfigError("coefficient term amplitude exceeds C_a");
      if (term.kx < 0 || term.ky < 0)
        throw ConfigError("coefficient profile wavenumbers must be >= 0");
      prev = term.exponent;
    }
  }
}

bool CoeffSpec::all_zero() const {
  for (const auto* terms : {&a2, &a3})
    for (const CoeffTerm& term : *terms)
      if (term.amplitude != 0.0) return false;
  return true;
}

double coeff_m_s(const CoeffSpec& coeff) {
  double m = 0.0;
  if (!coeff.a2.empty()) m = std::max(m, coeff.a2.back().exponent);
  if (!coeff.a3.empty()) m = std::max(m, coeff.a3.back().exponent);
  return m;
}

Eigen::VectorXd eval_coeff_field(const CoeffSpec& coeff, int which, double t,
                                 const SpectralBasis& basis, bool padded) {
  if (which != 2 && which != 3) throw std::invalid_argument("which must be 2 or 3");
  if (t < 0.0) throw std::invalid_argument("time must be nonnegative");
  const std::vector<CoeffTerm>& terms = which == 2 ? coeff.a2 : coeff.a3;
  const Eigen::VectorXd& xs = padded ? basis.padded_x() : basis.grid_x();
  const Eigen::VectorXd& ys = padded ? basis.padded_y() : basis.grid_y();
  const double Lx = basis.domain().Lx, Ly = basis.domain().Ly;

  Eigen::VectorXd field = Eigen::VectorXd::Zero(xs.size());
  double envelope = 1.0;
  for (const CoeffTerm& term : terms) {
    const double tm = term.exponent == 0.0 ? 1.0 : std::pow(t, term.exponent);
    envelope += tm;
    for (Eigen::Index n = 0; n < xs.size(); ++n)
      field(n) += term.amplitude * tm *
                  std::cos(term.kx * std::numbers::pi * xs(n) / Lx) *
                  std::cos(term.ky * std::numbers::pi * ys(n) / Ly);
  }
  envelope *= coeff.C_a;
  const double sup = field.size() > 0 ? field.cwiseAbs().maxCoeff() : 0.0;
  if (!(sup <= envelope * (1.0 + 1e-12)))
    throw std::logic_error("coefficient envelope violated");
  return field;
}

NoisePath sample_path(std::uint64_t seed, double theta, double dt, double T) {
  if (!(dt > 0.0) || !(T >= dt)) throw ConfigError("need dt > 0 and T >= dt");
  if (theta < 0.0) throw ConfigError("theta must be nonnegative");
  const int n = static_cast<int>(std::llround(T / dt));

  NoisePath p;
  p.theta = theta;
  p.seed = seed;
  p.t.resize(n + 1);
  p.W.resize(n + 1);
  p.log_gamma.resize(n + 1);
  Rng rng(seed);
  const double sdt = std::sqrt(dt);
  p.t(0) = 0.0;
  p.W(0) = 0.0;
  p.log_gamma(0) = 0.0;
  for (int i = 1; i <= n; ++i) {
    p.t(i) = i * dt;
    p.W(i) = p.W(i - 1) + sdt * rng.normal();
    p.log_gamma(i) = theta * p.W(i) - p.t(i) * theta * theta / 2.0;
  }
  return p;
}

NoiseConditionReport audit_noise_condition(double theta, const CoeffSpec& coeff) {
  NoiseConditionReport r;
  r.m_s = coeff_m_s(coeff);
  r.theta1 = theta * theta / 2.0 - r.m_s - 0.01;
  r.ok = r.theta1 > 0.0;
  return r;
}

RescaledDecayReport audit_rescaled_decay(const NoisePath& path, const CoeffSpec& coeff,
                                         const SpectralBasis& basis) {
  RescaledDecayReport r;
  for (int i = 1; i < path.t.size(); ++i) {
    const double t = path.t(i);
    const double w = std::pow(t, 0.01) * path.gamma(i);
    const double s2 = eval_coeff_field(coeff, 2, t, basis, false).cwiseAbs().maxCoeff();
    const double s3 = eval_coeff_field(coeff, 3, t, basis, false).cwiseAbs().maxCoeff();
    r.sup_ratio_a2 = std::max(r.sup_ratio_a2, w * s2);
    r.sup_ratio_a3 = std::max(r.sup_ratio_a3, w * s3);
  }
  return r;
}

} // namespace heatctl

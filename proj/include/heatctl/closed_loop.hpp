#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "heatctl/kernel.hpp"
#include "heatctl/noise.hpp"

namespace heatctl {

struct SimConfig {
  double dt = 1e-2;
  double T = 1.0;
  double alpha = 0.1;
  double theta = 0.0;
  std::uint64_t seed = 1;
  int mc_paths = 1;
  CoeffSpec coeffs;
  ModeVector y0;
  bool feedback_on = true;
  std::string solver = "etd";
  int picard_max_iters = 40;
  double picard_tol = 1e-10;
  double blowup_guard = 1e12;
  int threads = 0;  // 0 = hardware concurrency

  int steps() const;
  void validate(int J) const;
};

/// Closed-loop trajectory in mode space, with per-sample norms, the rescaled
/// state Y = Gamma y and the feedback magnitude on Gamma1.
struct Trajectory {
  Eigen::VectorXd t;
  std::vector<ModeVector> y;
  Eigen::VectorXd log_gamma;
  Eigen::VectorXd l2;       // |y(t)|_2
  Eigen::VectorXd h_half;   // spectral H^{1/2} norm
  Eigen::VectorXd Y_l2;     // Gamma(t) |y(t)|_2
  Eigen::VectorXd u_norm;   // ||u(t)||_{L2(Gamma1)}
  bool blew_up = false;
  double blowup_time = 0.0;

  int samples() const { return static_cast<int>(y.size()); }
};

/// Modes of Gamma a2 y^2 + Gamma^2 a3 y^3 by dealiased pseudospectral
/// evaluation: synthesize on the padded grid, multiply pointwise, project.
/// Throws BlowUpError on non-finite values.
ModeVector nonlinear_modes(const SpectralBasis& basis, const ModeVector& y,
                           const Eigen::VectorXd& a2_padded,
                           const Eigen::VectorXd& a3_padded, double gamma);

/// The quadratic and cubic contributions separately (for the bound audits).
std::pair<ModeVector, ModeVector> nonlinear_mode_parts(
    const SpectralBasis& basis, const ModeVector& y,
    const Eigen::VectorXd& a2_padded, const Eigen::VectorXd& a3_padded,
    double gamma);

/// Exponential midpoint integrator for the closed loop: the linear part is
/// applied exactly through the kernel representation, the nonlinearity is
/// frozen at an exponential-Euler midpoint predictor.
class EtdStepper {
public:
  EtdStepper(const SpectralBasis& basis, const StabilizerDesign& design,
             const CoeffSpec& coeffs, double dt, bool feedback_on,
             double blowup_guard = 1e12);

  /// One step from t to t + dt; gamma_t and gamma_mid are the rescaling
  /// factors at t and t + dt/2.
  ModeVector step(const ModeVector& y, double t, double gamma_t,
                  double gamma_mid) const;

  double dt() const { return dt_; }

private:
  ModeVector apply_linear(const ModeVector& v, bool half) const;
  ModeVector integrate_linear(const ModeVector& v, bool half) const;
  ModeVector forcing(const ModeVector& y, double t, double gamma) const;
  void check(const ModeVector& y, double t) const;

  const SpectralBasis* basis_;
  const CoeffSpec* coeffs_;
  double dt_;
  bool feedback_on_;
  double guard_;
  bool coeffs_zero_;
  bool coeffs_static_;
  Eigen::VectorXd a2_static_, a3_static_;
  // feedback on: exact one-step kernels; off: diagonal semigroup
  std::optional<OneStepKernel> full_, half_;
  Eigen::VectorXd off_exp_full_, off_exp_half_, off_phi_full_, off_phi_half_;
};

/// Simulate by exponential time stepping along the given noise path. The path
/// must be sampled at dt/2 so midpoint rescaling factors are exact. Blow-up
/// truncates the trajectory and sets the flag instead of throwing.
Trajectory run_etd(const SpectralBasis& basis, const StabilizerDesign& design,
                   const SimConfig& config, const NoisePath& path);

/// Picard iteration of the mild-solution map on the sampled horizon.
struct PicardResult {
  Trajectory trajectory;
  std::vector<double> iterate_distances;  // successive Y-norm distances
  double q_ratio = 0.0;                   // median ratio of successive distances
  bool converged = false;
  bool blew_up = false;
  int iterations = 0;
};
PicardResult picard_solve(const SpectralBasis& basis, const StabilizerDesign& design,
                          const SimConfig& config, const NoisePath& path);

/// Weighted trajectory norm sup_t e^{alpha t}(|y|_2 + t^{1/12} ||y||_{1/2}).
struct YNormReport {
  double y_norm = 0.0;
  double argmax_t = 0.0;
  double sup_l2_weighted = 0.0;
  double sup_h_half_weighted = 0.0;
};
YNormReport y_norm(const SpectralBasis& basis, const Trajectory& traj, double alpha);

/// Ensemble statistics of sup_t e^{alpha t} Gamma(t)^2 |y(t)|_2^2 over
/// independently seeded noise paths.
struct McPathStat {
  double sup_stat = 0.0;
  double growth = 0.0;        // sup over the running statistic / initial value
  double argmax_t = 0.0;      // last time the running sup increased
  bool bounded = false;       // running sup flat over the last half horizon
  bool blew_up = false;
  double blowup_time = 0.0;
};
struct McReport {
  std::vector<McPathStat> paths;
  double bounded_fraction = 0.0;
  double q10 = 0.0, q50 = 0.0, q90 = 0.0;
};
McReport run_monte_carlo(const SpectralBasis& basis, const StabilizerDesign& design,
                         const SimConfig& config);

/// Supremum ratios of the eight nonlinearity bounds over sampled (s,t) pairs,
/// with the unspecified constants fitted as the reported values.
struct Lemma2Report {
  std::array<double, 8> ratios{};  // quadratic x4 then cubic x4
  bool finite = false;
};
Lemma2Report audit_lemma2(const SpectralBasis& basis, const StabilizerDesign& design,
                          const Trajectory& traj, const CoeffSpec& coeffs, double mu,
                          int s_samples, int t_samples);

/// Bisect the initial-data norm at which the Picard map stops contracting.
/// lo must contract and hi must not; returns the midpoint estimate.
double bisect_contraction(const SpectralBasis& basis, const StabilizerDesign& design,
                          SimConfig config, const NoisePath& path, double lo,
                          double hi, int iters);

} // namespace heatctl

#include "heatctl/kernel.hpp"

#include <cmath>
#include <limits>

#include <unsupported/Eigen/MatrixFunctions>

#include "heatctl/rng.hpp"

namespace heatctl {

Eigen::MatrixXd reduced_system_matrix(const StabilizerDesign& design) {
  const int N = design.N;
  Eigen::MatrixXd M = -design.gammas(0) * Eigen::MatrixXd::Identity(N, N);
  for (int k = 1; k < N; ++k)
    M += (design.gammas(0) - design.gammas(k)) * design.Bk[static_cast<size_t>(k)] *
         design.A;
  return M;
}

std::vector<Eigen::MatrixXd> solve_reduced(const StabilizerDesign& design,
                                           const Eigen::VectorXd& t_grid) {
  if (t_grid.size() < 1 || t_grid(0) != 0.0)
    throw ConfigError("reduced solve needs a time grid starting at 0");
  const Eigen::MatrixXd M = reduced_system_matrix(design);
  std::vector<Eigen::MatrixXd> Q;
  Q.reserve(static_cast<size_t>(t_grid.size()));
  for (Eigen::Index i = 0; i < t_grid.size(); ++i)
    Q.push_back((M * t_grid(i)).exp());
  return Q;
}

FeedbackCoeffPath feedback_coeff_fields(const StabilizerDesign& design,
                                        const std::vector<Eigen::MatrixXd>& Q) {
  FeedbackCoeffPath path;
  path.C.reserve(Q.size());
  for (const Eigen::MatrixXd& q : Q) {
    const Eigen::MatrixXd aq = design.A * q;
    std::vector<Eigen::MatrixXd> per_i;
    per_i.reserve(static_cast<size_t>(design.N));
    for (int i = 0; i < design.N; ++i)
      per_i.push_back(design.lambda_diag[static_cast<size_t>(i)].asDiagonal() * aq);
    path.C.push_back(std::move(per_i));
  }
  return path;
}

Eigen::VectorXd feedback_coeff_field(const SpectralBasis& basis,
                                     const StabilizerDesign& design,
                                     const FeedbackCoeffPath& coeffs, int t_index,
                                     int i, int k) {
  const Eigen::MatrixXd& C = coeffs.C[static_cast<size_t>(t_index)][static_cast<size_t>(i)];
  return basis.trace_values().leftCols(design.N) * C.col(k);
}

namespace {

// Shared recurrence: march Q exactly with E = expm(M h) and accumulate the
// trapezoid of w' = -mu w - f, f(s) = coupling_tail Q(s). Calls sink at each
// refined node index.
template <typename Sink>
void march_tail(const StabilizerDesign& design, double hr, int steps, Sink&& sink) {
  const int N = design.N;
  const int JT = design.J - N;
  const Eigen::MatrixXd M = reduced_system_matrix(design);
  const Eigen::MatrixXd E = (M * hr).exp();
  const Eigen::MatrixXd Ftail = design.coupling.bottomRows(JT);
  const Eigen::VectorXd emu = (-design.mu.tail(JT) * hr).array().exp();

  Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(N, N);
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(JT, N);
  Eigen::MatrixXd f_prev = Ftail * Q;
  sink(0, Q, W);
  for (int i = 1; i <= steps; ++i) {
    Q = E * Q;
    const Eigen::MatrixXd f_new = Ftail * Q;
    W = emu.asDiagonal() * W -
        0.5 * hr * (emu.asDiagonal() * f_prev + f_new);
    f_prev = f_new;
    sink(i, Q, W);
  }
}

} // namespace

std::vector<Eigen::MatrixXd> tail_coeffs(const StabilizerDesign& design,
                                         const Eigen::VectorXd& t_grid, int refine) {
  if (t_grid.size() < 2 || t_grid(0) != 0.0)
    throw ConfigError("tail coefficients need a uniform grid starting at 0");
  const double dt = t_grid(1) - t_grid(0);
  const int steps = static_cast<int>(t_grid.size()) - 1;
  const double hr = dt / refine;
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<size_t>(t_grid.size()));
  march_tail(design, hr, steps * refine,
             [&](int i, const Eigen::MatrixXd&, const Eigen::MatrixXd& W) {
               if (i % refine == 0) out.push_back(W);
             });
  return out;
}

KernelRep build_kernel(const SpectralBasis& basis, const StabilizerDesign& design,
                       double dt, double T, int refine) {
  if (!(dt > 0.0) || !(T >= dt)) throw ConfigError("kernel needs dt > 0, T >= dt");
  const int steps = static_cast<int>(std::llround(T / dt));

  KernelRep k;
  k.N = design.N;
  k.J = design.J;
  k.dt = dt;
  k.rho = design.rho;
  k.gamma1 = design.gammas(0);
  k.mu = design.mu;
  k.lambda = design.mu.array() + design.c;
  k.Msys = reduced_system_matrix(design);
  k.t.resize(steps + 1);
  for (int i = 0; i <= steps; ++i) k.t(i) = i * dt;
  k.Q.reserve(static_cast<size_t>(steps + 1));
  k.W.reserve(static_cast<size_t>(steps + 1));
  march_tail(design, dt / refine, steps * refine,
             [&](int i, const Eigen::MatrixXd& Q, const Eigen::MatrixXd& W) {
               if (i % refine == 0) {
                 k.Q.push_back(Q);
                 k.W.push_back(W);
               }
             });
  (void)basis;
  return k;
}

ModeVector apply_semigroup(const KernelRep& kernel, const ModeVector& z0, double t) {
  if (z0.size() != kernel.J) throw std::invalid_argument("mode vector length mismatch");
  if (t < -1e-12 || t > kernel.horizon() + 1e-9 * std::max(1.0, kernel.horizon()))
    throw std::out_of_range("time beyond kernel horizon");
  t = std::max(t, 0.0);

  const double pos = t / kernel.dt;
  const int i0 = std::min(static_cast<int>(pos),
                          static_cast<int>(kernel.t.size()) - 1);
  const int i1 = std::min(i0 + 1, static_cast<int>(kernel.t.size()) - 1);
  const double frac = std::clamp(pos - i0, 0.0, 1.0);

  const int N = kernel.N;
  const int JT = kernel.J - N;
  Eigen::MatrixXd Q = kernel.Q[static_cast<size_t>(i0)];
  Eigen::MatrixXd W = kernel.W[static_cast<size_t>(i0)];
  if (frac > 0.0 && i1 != i0) {
    Q += frac * (kernel.Q[static_cast<size_t>(i1)] - Q);
    W += frac * (kernel.W[static_cast<size_t>(i1)] - W);
  }
  ModeVector out(kernel.J);
  out.head(N) = Q * z0.head(N);
  out.tail(JT) = (-kernel.mu.tail(JT) * t).array().exp() * z0.tail(JT).array();
  out.tail(JT) += W * z0.head(N);
  return out;
}

ModeVector OneStepKernel::apply(const ModeVector& v) const {
  ModeVector out(J);
  out.head(N) = Q * v.head(N);
  out.tail(J - N) = exp_tail.cwiseProduct(v.tail(J - N)) + W * v.head(N);
  return out;
}

ModeVector OneStepKernel::integrate(const ModeVector& v) const {
  ModeVector out(J);
  out.head(N) = phi_red * v.head(N);
  out.tail(J - N) = phi_tail.cwiseProduct(v.tail(J - N)) + w_int * v.head(N);
  return out;
}

OneStepKernel one_step_kernel(const StabilizerDesign& design, double h, int refine) {
  OneStepKernel ops;
  ops.h = h;
  ops.N = design.N;
  ops.J = design.J;
  const int JT = design.J - design.N;
  march_tail(design, h / refine, refine,
             [&](int i, const Eigen::MatrixXd& Q, const Eigen::MatrixXd& W) {
               if (i == refine) {
                 ops.Q = Q;
                 ops.W = W;
               }
             });
  const Eigen::MatrixXd M = reduced_system_matrix(design);
  ops.phi_red = M.partialPivLu().solve(ops.Q - Eigen::MatrixXd::Identity(design.N, design.N));
  ops.exp_tail = (-design.mu.tail(JT) * h).array().exp();
  ops.phi_tail = (1.0 - ops.exp_tail.array()) / design.mu.tail(JT).array();
  ops.w_int = 0.5 * h * ops.W;
  return ops;
}

KernelDecayReport audit_kernel_decay(const KernelRep& kernel, int trials,
                                     std::uint64_t seed) {
  const double T = kernel.horizon();
  if (!(T >= 5.0 / kernel.rho))
    throw ConfigError("decay audit needs horizon T >= 5/rho");
  const int n = static_cast<int>(kernel.t.size());
  const int N = kernel.N;
  const int JT = kernel.J - N;

  KernelDecayReport r;

  // Least-squares decay rate of log max|q_ij| past the transient.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (int i = 0; i < n; ++i) {
    const double t = kernel.t(i);
    const double qmax = kernel.Q[static_cast<size_t>(i)].cwiseAbs().maxCoeff();
    r.C_q_fit = std::max(r.C_q_fit, qmax * qmax * std::exp(kernel.rho * t));
    const double z2 = kernel.Q[static_cast<size_t>(i)].operatorNorm();
    r.C_Z_fit = std::max(r.C_Z_fit, z2 * z2 * std::exp(kernel.gamma1 * t));
    if (t >= T / 5.0) {
      const double y = std::log(qmax);
      sx += t; sy += y; sxx += t * t; sxy += t * y;
      ++cnt;
    }
  }
  r.rho_fit = -(cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);

  // Tail coefficient fits and the amplitude envelope across j.
  Eigen::VectorXd amp = Eigen::VectorXd::Zero(JT);
  for (int i = 0; i < n; ++i) {
    const double w = std::exp(kernel.rho * kernel.t(i));
    amp = amp.cwiseMax(kernel.W[static_cast<size_t>(i)].cwiseAbs().rowwise().maxCoeff() * w);
  }
  Eigen::VectorXd shape(JT);
  for (int j = 0; j < JT; ++j)
    shape(j) = std::pow(kernel.lambda(N + j), 1.0 / 6.0) / (kernel.mu(N + j) - kernel.rho);
  r.C_w_fit = (amp.array() / shape.array()).maxCoeff();
  const int q = std::max(1, JT / 4);
  r.w_env_observed = amp.head(q).maxCoeff() / std::max(amp.tail(q).maxCoeff(), 1e-300);
  r.w_env_predicted = shape.head(q).maxCoeff() / shape.tail(q).maxCoeff();
  const double env_ratio = r.w_env_observed / r.w_env_predicted;
  r.shape_ok = env_ratio >= 1.0 / 3.0 && env_ratio <= 3.0;

  // Random initial data: L2 decay constant and the integrated H1 bound.
  Rng rng(seed);
  const Eigen::VectorXd h1w = (1.0 + kernel.lambda.array()).sqrt();
  for (int trial = 0; trial < trials; ++trial) {
    ModeVector z0(kernel.J);
    for (int j = 0; j < kernel.J; ++j) z0(j) = rng.normal();
    const double z0n = z0.norm();
    double h1_int = 0.0, prev = 0.0;
    for (int i = 0; i < n; ++i) {
      const ModeVector z = apply_semigroup(kernel, z0, kernel.t(i));
      r.C_decay_fit = std::max(
          r.C_decay_fit, z.norm() * std::exp(kernel.rho * kernel.t(i)) / z0n);
      const double h1 = h1w.cwiseProduct(z).norm();
      if (i > 0) h1_int += 0.5 * kernel.dt * (prev + h1);
      prev = h1;
    }
    r.L1_H1_bound = std::max(r.L1_H1_bound, h1_int / z0n);
  }

  r.ok = r.rho_fit >= 0.95 * kernel.rho && std::isfinite(r.C_q_fit) &&
         std::isfinite(r.C_w_fit) && std::isfinite(r.C_decay_fit) &&
         std::isfinite(r.L1_H1_bound) && std::isfinite(r.C_Z_fit);
  return r;
}

} // namespace heatctl

#include "heatctl/closed_loop.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "heatctl/rng.hpp"

namespace heatctl {

int SimConfig::steps() const { return static_cast<int>(std::llround(T / dt)); }

void SimConfig::validate(int J) const {
  if (!(dt > 0.0) || !(T >= dt)) throw ConfigError("need dt > 0 and T >= dt");
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be nonnegative");
  if (theta < 0.0) throw ConfigError("theta must be nonnegative");
  if (!(picard_tol > 0.0)) throw ConfigError("picard_tol must be positive");
  if (picard_max_iters < 1) throw ConfigError("picard_max_iters must be >= 1");
  if (mc_paths < 1) throw ConfigError("mc_paths must be >= 1");
  if (y0.size() != J) throw ConfigError("y0 length must equal the basis size J");
  if (!y0.allFinite()) throw ConfigError("y0 must be finite");
  if (solver != "etd" && solver != "picard")
    throw ConfigError("solver must be 'etd' or 'picard'");
  coeffs.validate();
}

ModeVector nonlinear_modes(const SpectralBasis& basis, const ModeVector& y,
                           const Eigen::VectorXd& a2_padded,
                           const Eigen::VectorXd& a3_padded, double gamma) {
  auto [a2, a3] = nonlinear_mode_parts(basis, y, a2_padded, a3_padded, gamma);
  return a2 + a3;
}

std::pair<ModeVector, ModeVector> nonlinear_mode_parts(
    const SpectralBasis& basis, const ModeVector& y,
    const Eigen::VectorXd& a2_padded, const Eigen::VectorXd& a3_padded,
    double gamma) {
  if (!y.allFinite())
    throw BlowUpError(std::nan(""), "non-finite mode vector in nonlinear term");
  const Eigen::ArrayXd f = basis.synthesize_padded(y).array();
  const Eigen::ArrayXd f2 = f * f;
  Eigen::VectorXd g2 = (gamma * a2_padded.array() * f2).matrix();
  Eigen::VectorXd g3 = (gamma * gamma * a3_padded.array() * f2 * f).matrix();
  if (!g2.allFinite() || !g3.allFinite())
    throw BlowUpError(std::nan(""), "overflow in nonlinear term");
  return {basis.project_padded(g2), basis.project_padded(g3)};
}

EtdStepper::EtdStepper(const SpectralBasis& basis, const StabilizerDesign& design,
                       const CoeffSpec& coeffs, double dt, bool feedback_on,
                       double blowup_guard)
    : basis_(&basis),
      coeffs_(&coeffs),
      dt_(dt),
      feedback_on_(feedback_on),
      guard_(blowup_guard) {
  coeffs_zero_ = coeffs.all_zero();
  coeffs_static_ = true;
  for (const auto* terms : {&coeffs.a2, &coeffs.a3})
    for (const CoeffTerm& term : *terms)
      if (term.exponent != 0.0) coeffs_static_ = false;
  if (!coeffs_zero_ && coeffs_static_) {
    a2_static_ = eval_coeff_field(coeffs, 2, 0.0, basis, true);
    a3_static_ = eval_coeff_field(coeffs, 3, 0.0, basis, true);
  }
  if (feedback_on_) {
    full_ = one_step_kernel(design, dt);
    half_ = one_step_kernel(design, dt / 2.0);
  } else {
    // u == 0: plain diagonal semigroup e^{-mu_j t} on every mode.
    auto fill = [&](double h, Eigen::VectorXd& e, Eigen::VectorXd& p) {
      e = (-design.mu * h).array().exp();
      p.resize(design.J);
      for (int j = 0; j < design.J; ++j) {
        const double m = design.mu(j);
        p(j) = std::abs(m) < 1e-12 ? h : -std::expm1(-m * h) / m;
      }
    };
    fill(dt, off_exp_full_, off_phi_full_);
    fill(dt / 2.0, off_exp_half_, off_phi_half_);
  }
}

ModeVector EtdStepper::apply_linear(const ModeVector& v, bool half) const {
  if (feedback_on_) return (half ? *half_ : *full_).apply(v);
  return (half ? off_exp_half_ : off_exp_full_).cwiseProduct(v);
}

ModeVector EtdStepper::integrate_linear(const ModeVector& v, bool half) const {
  if (feedback_on_) return (half ? *half_ : *full_).integrate(v);
  return (half ? off_phi_half_ : off_phi_full_).cwiseProduct(v);
}

ModeVector EtdStepper::forcing(const ModeVector& y, double t, double gamma) const {
  if (coeffs_static_)
    return nonlinear_modes(*basis_, y, a2_static_, a3_static_, gamma);
  return nonlinear_modes(*basis_, y, eval_coeff_field(*coeffs_, 2, t, *basis_, true),
                         eval_coeff_field(*coeffs_, 3, t, *basis_, true), gamma);
}

void EtdStepper::check(const ModeVector& y, double t) const {
  if (!y.allFinite() || y.cwiseAbs().maxCoeff() > guard_)
    throw BlowUpError(t, "state exceeded the blow-up guard");
}

ModeVector EtdStepper::step(const ModeVector& y, double t, double gamma_t,
                            double gamma_mid) const {
  if (coeffs_zero_) {
    ModeVector out = apply_linear(y, false);
    check(out, t + dt_);
    return out;
  }
  const ModeVector p0 = forcing(y, t, gamma_t);
  ModeVector mid = apply_linear(y, true) + integrate_linear(p0, true);
  check(mid, t + 0.5 * dt_);
  const ModeVector pm = forcing(mid, t + 0.5 * dt_, gamma_mid);
  ModeVector out = apply_linear(y, false) + integrate_linear(pm, false);
  check(out, t + dt_);
  return out;
}

namespace {

void record_sample(const SpectralBasis& basis, const StabilizerDesign& design,
                   bool feedback_on, Trajectory& traj, int k, const ModeVector& y,
                   double lg) {
  traj.y[static_cast<size_t>(k)] = y;
  traj.log_gamma(k) = lg;
  traj.l2(k) = y.norm();
  traj.h_half(k) = basis.fractional_norm(y, 0.5);
  traj.Y_l2(k) = std::exp(lg) * traj.l2(k);
  if (feedback_on) {
    const Eigen::VectorXd u = feedback_field(basis, design, y);
    traj.u_norm(k) = std::sqrt(std::max(0.0, basis.boundary_inner(u, u)));
  } else {
    traj.u_norm(k) = 0.0;
  }
}

Trajectory make_trajectory(int n, double dt, int /*J*/) {
  Trajectory traj;
  traj.t.resize(n + 1);
  for (int k = 0; k <= n; ++k) traj.t(k) = k * dt;
  traj.y.resize(static_cast<size_t>(n + 1));
  traj.log_gamma.resize(n + 1);
  traj.l2.resize(n + 1);
  traj.h_half.resize(n + 1);
  traj.Y_l2.resize(n + 1);
  traj.u_norm.resize(n + 1);
  return traj;
}

void truncate(Trajectory& traj, int kept_samples) {
  traj.t.conservativeResize(kept_samples);
  traj.y.resize(static_cast<size_t>(kept_samples));
  traj.log_gamma.conservativeResize(kept_samples);
  traj.l2.conservativeResize(kept_samples);
  traj.h_half.conservativeResize(kept_samples);
  traj.Y_l2.conservativeResize(kept_samples);
  traj.u_norm.conservativeResize(kept_samples);
}

void check_path(const SimConfig& config, const NoisePath& path) {
  const int n = config.steps();
  if (path.t.size() < 2 * n + 1)
    throw ConfigError("noise path does not cover the simulation horizon");
  if (std::abs(path.dt() - config.dt / 2.0) > 1e-12 * std::max(1.0, config.dt))
    throw ConfigError("noise path must be sampled at dt/2");
}

} // namespace

Trajectory run_etd(const SpectralBasis& basis, const StabilizerDesign& design,
                   const SimConfig& config, const NoisePath& path) {
  config.validate(basis.size());
  check_path(config, path);
  const int n = config.steps();
  const EtdStepper stepper(basis, design, config.coeffs, config.dt,
                           config.feedback_on, config.blowup_guard);

  Trajectory traj = make_trajectory(n, config.dt, basis.size());
  ModeVector y = config.y0;
  record_sample(basis, design, config.feedback_on, traj, 0, y, 0.0);
  for (int k = 0; k < n; ++k) {
    const double t = k * config.dt;
    try {
      y = stepper.step(y, t, std::exp(path.log_gamma(2 * k)),
                       std::exp(path.log_gamma(2 * k + 1)));
    } catch (const BlowUpError& e) {
      traj.blew_up = true;
      traj.blowup_time = std::isnan(e.time) ? t : e.time;
      truncate(traj, k + 1);
      return traj;
    }
    record_sample(basis, design, config.feedback_on, traj, k + 1, y,
                  path.log_gamma(2 * (k + 1)));
  }
  return traj;
}

namespace {

// Y-norm distance between two trajectories sampled on the same grid.
double ynorm_distance(const SpectralBasis& basis, const Eigen::VectorXd& t,
                      const std::vector<ModeVector>& a,
                      const std::vector<ModeVector>& b, double alpha) {
  double d = 0.0;
  for (size_t k = 0; k < a.size(); ++k) {
    const ModeVector dv = a[k] - b[k];
    const double w = std::exp(alpha * t(static_cast<Eigen::Index>(k)));
    const double tw = std::pow(t(static_cast<Eigen::Index>(k)), 1.0 / 12.0);
    d = std::max(d, w * (dv.norm() + tw * basis.fractional_norm(dv, 0.5)));
  }
  return d;
}

} // namespace

PicardResult picard_solve(const SpectralBasis& basis, const StabilizerDesign& design,
                          const SimConfig& config, const NoisePath& path) {
  config.validate(basis.size());
  check_path(config, path);
  const int n = config.steps();
  const int J = basis.size();

  const EtdStepper evaluator(basis, design, config.coeffs, config.dt,
                             config.feedback_on, config.blowup_guard);
  OneStepKernel ops;
  Eigen::VectorXd off_exp, off_phi;
  if (config.feedback_on) {
    ops = one_step_kernel(design, config.dt);
  } else {
    off_exp = (-design.mu * config.dt).array().exp();
  }
  auto apply_lin = [&](const ModeVector& v) {
    return config.feedback_on ? ops.apply(v)
                              : ModeVector(off_exp.cwiseProduct(v));
  };

  const bool zero_forcing = config.coeffs.all_zero();
  std::vector<Eigen::VectorXd> a2_fields, a3_fields;
  if (!zero_forcing) {
    a2_fields.reserve(static_cast<size_t>(n + 1));
    a3_fields.reserve(static_cast<size_t>(n + 1));
    for (int k = 0; k <= n; ++k) {
      a2_fields.push_back(eval_coeff_field(config.coeffs, 2, k * config.dt, basis, true));
      a3_fields.push_back(eval_coeff_field(config.coeffs, 3, k * config.dt, basis, true));
    }
  }

  // Linear part of the fixed-point map, shared by every iterate.
  std::vector<ModeVector> linear(static_cast<size_t>(n + 1));
  linear[0] = config.y0;
  for (int k = 0; k < n; ++k) linear[static_cast<size_t>(k + 1)] = apply_lin(linear[static_cast<size_t>(k)]);

  PicardResult res;
  std::vector<ModeVector> cur = linear;
  for (int it = 0; it < config.picard_max_iters; ++it) {
    std::vector<ModeVector> next(static_cast<size_t>(n + 1));
    next[0] = config.y0;
    bool blew = false;
    try {
      // Duhamel convolution of the frozen forcing by the trapezoid recurrence.
      std::vector<ModeVector> P(static_cast<size_t>(n + 1), ModeVector::Zero(J));
      if (!zero_forcing) {
        for (int k = 0; k <= n; ++k) {
          const double gamma = std::exp(path.log_gamma(2 * k));
          P[static_cast<size_t>(k)] = nonlinear_modes(
              basis, cur[static_cast<size_t>(k)], a2_fields[static_cast<size_t>(k)],
              a3_fields[static_cast<size_t>(k)], gamma);
        }
      }
      ModeVector conv = ModeVector::Zero(J);
      for (int k = 0; k < n; ++k) {
        conv = apply_lin(conv) +
               0.5 * config.dt * (apply_lin(P[static_cast<size_t>(k)]) + P[static_cast<size_t>(k + 1)]);
        next[static_cast<size_t>(k + 1)] = linear[static_cast<size_t>(k + 1)] + conv;
        if (!next[static_cast<size_t>(k + 1)].allFinite() ||
            next[static_cast<size_t>(k + 1)].cwiseAbs().maxCoeff() > config.blowup_guard)
          throw BlowUpError((k + 1) * config.dt, "Picard iterate exceeded the guard");
      }
    } catch (const BlowUpError&) {
      blew = true;
    }
    res.iterations = it + 1;
    if (blew) {
      res.blew_up = true;
      res.q_ratio = std::numeric_limits<double>::infinity();
      break;
    }
    const double d = ynorm_distance(basis, Eigen::VectorXd::LinSpaced(n + 1, 0.0, n * config.dt),
                                    next, cur, config.alpha);
    res.iterate_distances.push_back(d);
    cur = std::move(next);
    if (d < config.picard_tol) {
      res.converged = true;
      break;
    }
  }

  // Median ratio of successive distances; infinity already set on blow-up.
  if (!res.blew_up) {
    std::vector<double> ratios;
    for (size_t i = 1; i < res.iterate_distances.size(); ++i)
      if (res.iterate_distances[i - 1] > 0.0)
        ratios.push_back(res.iterate_distances[i] / res.iterate_distances[i - 1]);
    if (!ratios.empty()) {
      std::sort(ratios.begin(), ratios.end());
      res.q_ratio = ratios[ratios.size() / 2];
    }
    if (!res.converged && !res.iterate_distances.empty() &&
        res.iterate_distances.back() >= 1.0 / config.picard_tol)
      res.q_ratio = std::max(res.q_ratio, 1.0);
  }

  // Materialize the fixed point as a trajectory.
  Trajectory traj = make_trajectory(n, config.dt, J);
  for (int k = 0; k <= n; ++k)
    record_sample(basis, design, config.feedback_on, traj, k, cur[static_cast<size_t>(k)],
                  path.log_gamma(2 * k));
  res.trajectory = std::move(traj);
  return res;
}

YNormReport y_norm(const SpectralBasis& basis, const Trajectory& traj, double alpha) {
  YNormReport r;
  for (int k = 0; k < traj.samples(); ++k) {
    const double w = std::exp(alpha * traj.t(k));
    const double tw = std::pow(traj.t(k), 1.0 / 12.0);
    const double val = w * (traj.l2(k) + tw * traj.h_half(k));
    r.sup_l2_weighted = std::max(r.sup_l2_weighted, w * traj.l2(k));
    r.sup_h_half_weighted = std::max(r.sup_h_half_weighted, w * tw * traj.h_half(k));
    if (val > r.y_norm) {
      r.y_norm = val;
      r.argmax_t = traj.t(k);
    }
  }
  (void)basis;
  return r;
}

McReport run_monte_carlo(const SpectralBasis& basis, const StabilizerDesign& design,
                         const SimConfig& config) {
  config.validate(basis.size());
  McReport report;
  report.paths.resize(static_cast<size_t>(config.mc_paths));

  auto run_path = [&](int i) {
    SimConfig pc = config;
    const NoisePath path =
        sample_path(child_seed(config.seed, static_cast<std::uint64_t>(i)),
                    config.theta, config.dt / 2.0, config.T);
    const Trajectory traj = run_etd(basis, design, pc, path);
    McPathStat stat;
    stat.blew_up = traj.blew_up;
    stat.blowup_time = traj.blowup_time;
    double running = 0.0;
    for (int k = 0; k < traj.samples(); ++k) {
      const double s =
          std::exp(config.alpha * traj.t(k)) * traj.Y_l2(k) * traj.Y_l2(k);
      if (s > running) {
        running = s;
        stat.argmax_t = traj.t(k);
      }
    }
    stat.sup_stat = running;
    const double s0 = config.y0.squaredNorm();
    stat.growth = s0 > 0.0 ? running / s0 : 0.0;
    stat.bounded = !traj.blew_up && stat.argmax_t <= config.T / 2.0;
    report.paths[static_cast<size_t>(i)] = stat;
  };

  const int hw = config.threads > 0 ? config.threads
                                    : static_cast<int>(std::thread::hardware_concurrency());
  const int workers = std::max(1, std::min(hw, config.mc_paths));
  if (workers == 1) {
    for (int i = 0; i < config.mc_paths; ++i) run_path(i);
  } else {
    std::atomic<int> counter{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int i = counter.fetch_add(1); i < config.mc_paths; i = counter.fetch_add(1))
          run_path(i);
      });
    for (auto& th : pool) th.join();
  }

  int bounded = 0;
  std::vector<double> sups;
  sups.reserve(report.paths.size());
  for (const McPathStat& s : report.paths) {
    bounded += s.bounded ? 1 : 0;
    sups.push_back(s.sup_stat);
  }
  report.bounded_fraction = static_cast<double>(bounded) / config.mc_paths;
  std::sort(sups.begin(), sups.end());
  auto quantile = [&](double q) {
    const size_t idx = static_cast<size_t>(q * (sups.size() - 1));
    return sups[idx];
  };
  report.q10 = quantile(0.10);
  report.q50 = quantile(0.50);
  report.q90 = quantile(0.90);
  return report;
}

Lemma2Report audit_lemma2(const SpectralBasis& basis, const StabilizerDesign& design,
                          const Trajectory& traj, const CoeffSpec& coeffs, double mu,
                          int s_samples, int t_samples) {
  const int n = traj.samples();
  if (n < 4) throw ConfigError("lemma-2 audit needs at least four samples");
  const int N = design.N;
  const Eigen::VectorXd lam = basis.lambdas();

  Lemma2Report rep;
  std::array<double, 8>& R = rep.ratios;
  R.fill(0.0);
  bool finite = true;

  auto ratio = [&](double num, double den) {
    if (num == 0.0) return 0.0;
    if (den == 0.0) {
      finite = false;
      return std::numeric_limits<double>::infinity();
    }
    return num / den;
  };

  const Eigen::MatrixXd& phi_pad = basis.padded_values();
  for (int si = 0; si < s_samples; ++si) {
    const int ks = 1 + static_cast<int>((static_cast<double>(si) / s_samples) * (n - 2));
    const double s = traj.t(ks);
    const double gamma = std::exp(traj.log_gamma(ks));
    const Eigen::VectorXd a2f = eval_coeff_field(coeffs, 2, s, basis, true);
    const Eigen::VectorXd a3f = eval_coeff_field(coeffs, 3, s, basis, true);
    const auto [A2, A3] = nonlinear_mode_parts(basis, traj.y[static_cast<size_t>(ks)],
                                               a2f, a3f, gamma);
    // q_i = int y(s)^2 phi_i^2
    const Eigen::ArrayXd ys2 =
        basis.synthesize_padded(traj.y[static_cast<size_t>(ks)]).array().square();
    Eigen::VectorXd qint(N);
    for (int i = 0; i < N; ++i)
      qint(i) = (basis.padded_weights().array() * ys2 *
                 phi_pad.col(i).array().square())
                    .sum();
    const double yl2 = traj.l2(ks);
    const double yh = traj.h_half(ks);
    const double s50 = std::pow(s, -1.0 / 50.0);
    const double s100 = std::pow(s, -1.0 / 100.0);

    for (int ti = 0; ti < t_samples; ++ti) {
      const int kt = ks + 1 +
                     static_cast<int>((static_cast<double>(ti) / t_samples) * (n - 2 - ks));
      if (kt <= ks || kt >= n) continue;
      const double tau = traj.t(kt) - s;
      const double em = std::exp(-mu * tau);
      for (int i = 0; i < N; ++i) {
        const double li = lam(i);
        const double a2n = em * std::abs(A2(i));
        const double a3n = em * std::abs(A3(i));
        // quadratic term, pure-exponential and integral forms
        R[0] = std::max(R[0], ratio(a2n,
            std::exp((-mu + 0.75 + 0.25 * li - 0.01) * tau) *
            std::pow(tau, -1.0 + 0.01) * s100 * yl2 * yl2));
        R[1] = std::max(R[1], ratio(a2n,
            std::sqrt(std::exp((-2 * mu + 1.0 - 0.02) * tau) *
                      std::pow(tau, -(1.0 - 0.02)) * s50 * s50 * qint(i)) * yl2));
        // cubic term
        R[4] = std::max(R[4], ratio(a3n,
            std::exp((-mu + 7.0 / 12.0 + 0.25 * li - 0.01) * tau) *
            std::pow(tau, -10.0 / 12.0 + 0.01) * s100 * yl2 * yh * yh));
        R[5] = std::max(R[5], ratio(a3n,
            std::sqrt(std::exp((-2 * mu + 2.0 / 3.0 - 0.02) * tau) *
                      std::pow(tau, -2.0 / 3.0 + 0.02) * s50 * s50 * qint(i)) * yh * yh));
        for (int j = 0; j < N; ++j) {
          const double lj = lam(j);
          const double wj = std::pow(lj, 0.25);
          R[2] = std::max(R[2], ratio(wj * a2n,
              std::exp((-mu + 0.25 * (li + lj) + 0.5 - 0.01) * tau) *
              std::pow(tau, -1.0 + 0.01) * s100 * yl2 * yl2));
          R[3] = std::max(R[3], ratio(wj * a2n,
              std::sqrt(std::exp((-2 * mu + 0.5 * lj + 0.5 - 0.02) * tau) *
                        std::pow(tau, -1.0 + 0.02) * s50 * s50 * qint(i)) * yl2));
          R[6] = std::max(R[6], ratio(wj * a3n,
              std::exp((-mu + 5.0 / 12.0 + 0.25 * (li + lj) - 0.01) * tau) *
              std::pow(tau, -11.0 / 12.0 + 0.01) * s100 * yl2 * yh * yh));
          R[7] = std::max(R[7], ratio(wj * a3n,
              std::sqrt(std::exp((-2 * mu + 0.5 * lj + 1.0 / 3.0 - 0.02) * tau) *
                        std::pow(tau, -5.0 / 6.0 + 0.02) * s50 * s50 * qint(i)) * yh * yh));
        }
      }
    }
  }
  for (double v : R)
    if (!std::isfinite(v)) finite = false;
  rep.finite = finite;
  return rep;
}

double bisect_contraction(const SpectralBasis& basis, const StabilizerDesign& design,
                          SimConfig config, const NoisePath& path, double lo,
                          double hi, int iters) {
  if (!(lo > 0.0) || !(hi > lo)) throw ConfigError("need 0 < lo < hi");
  const ModeVector dir = config.y0 / config.y0.norm();
  auto contracts = [&](double scale) {
    config.y0 = scale * dir;
    const PicardResult r = picard_solve(basis, design, config, path);
    return r.converged && r.q_ratio < 1.0;
  };
  if (!contracts(lo)) throw ConfigError("lower bisection endpoint does not contract");
  if (contracts(hi)) throw ConfigError("upper bisection endpoint contracts");
  for (int i = 0; i < iters; ++i) {
    const double mid = std::sqrt(lo * hi);
    if (contracts(mid))
      lo = mid;
    else
      hi = mid;
  }
  return std::sqrt(lo * hi);
}

} // namespace heatctl

#include "heatctl/commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "heatctl/rng.hpp"

namespace heatctl {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

constexpr char kArtifactVersion[] = "0.1.0";

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class Timer {
public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

private:
  std::chrono::steady_clock::time_point start_;
};

struct Context {
  fs::path out;
  bool quiet = false;
  Timer timer;

  void log(const std::string& line) const {
    if (!quiet) std::cout << line << "\n";
  }
  void finish(const std::string& command) const {
    if (!quiet)
      std::cout << command << " finished in " << fmt17(timer.ms()) << " ms\n";
  }
};

Context make_context(const ExperimentConfig& cfg, const CommandOptions& opts) {
  Context ctx;
  ctx.out = opts.out_dir.empty() ? fs::path(cfg.out_dir) : fs::path(opts.out_dir);
  ctx.quiet = opts.quiet;
  fs::create_directories(ctx.out);
  return ctx;
}

ordered_json base_report(const std::string& command, const ExperimentConfig& cfg) {
  ordered_json rep;
  rep["artifact_version"] = kArtifactVersion;
  rep["command"] = command;
  rep["rng_algorithm"] = kRngAlgorithm;
  rep["config"] = config_echo(cfg);
  return rep;
}

void write_report(const Context& ctx, const ordered_json& rep) {
  std::ofstream out(ctx.out / "report.json");
  out << rep.dump(2) << "\n";
}

ordered_json matrix_json(const Eigen::MatrixXd& m) {
  // row-major nested arrays
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

ordered_json vector_json(const Eigen::VectorXd& v) {
  ordered_json arr = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

void write_timeseries(const Context& ctx, const Trajectory& traj, double alpha,
                      const std::string& name = "timeseries.csv") {
  std::ofstream out(ctx.out / name);
  out << "t,y_l2,y_h_half,Y_l2,exp_alpha_Y_l2_sq,u_l2_gamma1\n";
  for (int k = 0; k < traj.samples(); ++k) {
    const double stat = std::exp(alpha * traj.t(k)) * traj.Y_l2(k) * traj.Y_l2(k);
    out << fmt17(traj.t(k)) << ',' << fmt17(traj.l2(k)) << ','
        << fmt17(traj.h_half(k)) << ',' << fmt17(traj.Y_l2(k)) << ','
        << fmt17(stat) << ',' << fmt17(traj.u_norm(k)) << "\n";
  }
}

struct BuiltDesign {
  SpectralBasis basis;
  StabilizerDesign design;
};

BuiltDesign build_design(const ExperimentConfig& cfg) {
  BuiltDesign b{SpectralBasis::build(cfg.domain, cfg.J), {}};
  const UnstableSelection sel = select_unstable(b.basis, cfg.c, cfg.rho);
  DesignOptions opts;
  opts.enforce_h3 = cfg.require_h3;
  b.design = assemble_design(b.basis, cfg.c, cfg.rho, cfg.alpha,
                             effective_gammas(cfg, sel.N), opts);
  return b;
}

ordered_json design_summary(const StabilizerDesign& d) {
  ordered_json j;
  j["N"] = d.N;
  j["J"] = d.J;
  j["c"] = d.c;
  j["rho"] = d.rho;
  j["alpha"] = d.alpha;
  j["gammas"] = vector_json(d.gammas);
  j["mu"] = vector_json(d.mu);
  j["cond_sum"] = d.cond_sum;
  j["gram_rank"] = d.gram_rank;
  j["h3"] = {{"ok", d.h3.ok}, {"worst_margin", d.h3.worst_margin}};
  j["h4"] = {{"ok", d.h4.ok}, {"min_gap", d.h4.min_gap}};
  return j;
}

ordered_json decay_json(const KernelDecayReport& r) {
  ordered_json j;
  j["rho_fit"] = r.rho_fit;
  j["C_q_fit"] = r.C_q_fit;
  j["C_w_fit"] = r.C_w_fit;
  j["C_decay_fit"] = r.C_decay_fit;
  j["C_Z_fit"] = r.C_Z_fit;
  j["L1_H1_bound"] = r.L1_H1_bound;
  j["w_env_observed"] = r.w_env_observed;
  j["w_env_predicted"] = r.w_env_predicted;
  j["shape_ok"] = r.shape_ok;
  j["ok"] = r.ok;
  return j;
}

int fail_with(const Context& ctx, ordered_json rep, const std::string& error,
              int code) {
  rep["error"] = error;
  rep["exit_code"] = code;
  write_report(ctx, rep);
  ctx.log("error: " + error);
  return code;
}

} // namespace

int cmd_audit(const ExperimentConfig& cfg, const CommandOptions& opts) {
  Context ctx = make_context(cfg, opts);
  ordered_json rep = base_report("audit", cfg);

  const SpectralBasis basis = SpectralBasis::build(cfg.domain, cfg.J);
  const SeriesReport series =
      audit_series(cfg.domain, cfg.series_exponent, cfg.series_j_max);
  rep["audits"]["series_h1"] = {{"partial_sum", series.partial_sum},
                                {"tail_bound", series.tail_bound},
                                {"converged", series.converged},
                                {"window", series.window},
                                {"terms", series.terms}};

  const NoiseConditionReport noise = audit_noise_condition(cfg.theta, cfg.coeffs);
  rep["audits"]["noise_h1"] = {{"theta1", noise.theta1},
                               {"m_s", noise.m_s},
                               {"ok", noise.ok}};

  const UnstableSelection sel = select_unstable(basis, cfg.c, cfg.rho);
  const H3Report h3 = audit_h3(cfg.alpha, cfg.rho, sel.N, basis.lambdas());
  const H4Report h4 = audit_h4(sel.mu, sel.N);
  rep["audits"]["N"] = sel.N;
  rep["audits"]["h3"] = {{"ok", h3.ok}, {"worst_margin", h3.worst_margin}};
  rep["audits"]["h4"] = {{"ok", h4.ok}, {"min_gap", h4.min_gap}};

  const GramResult gram = gram_matrix(basis, sel.N);
  rep["audits"]["gram"] = {{"rank", gram.rank}, {"N", sel.N}, {"cond", gram.cond}};

  const EigenBoundsReport eb = audit_eigen_bounds(basis);
  rep["audits"]["eigen_bounds"] = {{"c_infty_fit", eb.c_infty_fit},
                                   {"c_trace_fit", eb.c_trace_fit},
                                   {"c_heatkernel_fit", eb.c_heatkernel_fit},
                                   {"c_infty_refined", eb.c_infty_refined},
                                   {"c_trace_refined", eb.c_trace_refined},
                                   {"c_heatkernel_refined", eb.c_heatkernel_refined},
                                   {"stable", eb.stable}};

  const NoisePath path = sample_path(cfg.seed, cfg.theta, cfg.dt, cfg.T);
  const RescaledDecayReport rd = audit_rescaled_decay(path, cfg.coeffs, basis);
  rep["audits"]["rescaled_decay"] = {{"sup_ratio_a2", rd.sup_ratio_a2},
                                     {"sup_ratio_a3", rd.sup_ratio_a3}};

  // Mandatory hypotheses: noise-(H1), series-(H1), (H4), Gram invertibility.
  // (H3) is a sufficient condition only and is reported as advisory unless
  // design.require_h3 is set.
  bool ok = noise.ok && series.converged && h4.ok && gram.rank == sel.N &&
            eb.stable;
  if (cfg.require_h3) ok = ok && h3.ok;
  rep["audits"]["mandatory_ok"] = ok;
  rep["exit_code"] = ok ? kExitOk : kExitAuditFailed;
  write_report(ctx, rep);
  ctx.finish("audit");
  return ok ? kExitOk : kExitAuditFailed;
}

int cmd_design(const ExperimentConfig& cfg, const CommandOptions& opts) {
  Context ctx = make_context(cfg, opts);
  ordered_json rep = base_report("design", cfg);
  try {
    const BuiltDesign b = build_design(cfg);
    rep["design"] = design_summary(b.design);
    rep["design"]["B"] = matrix_json(b.design.B);
    rep["design"]["A"] = matrix_json(b.design.A);
    rep["exit_code"] = kExitOk;
    write_report(ctx, rep);
    ctx.finish("design");
    return kExitOk;
  } catch (const DesignRejected& e) {
    return fail_with(ctx, std::move(rep), e.what(), kExitDesignRejected);
  }
}

int cmd_kernel(const ExperimentConfig& cfg, const CommandOptions& opts) {
  Context ctx = make_context(cfg, opts);
  ordered_json rep = base_report("kernel", cfg);
  try {
    const BuiltDesign b = build_design(cfg);
    rep["design"] = design_summary(b.design);
    const KernelRep kernel = build_kernel(b.basis, b.design, cfg.dt, cfg.T);
    const KernelDecayReport decay = audit_kernel_decay(kernel, 16, cfg.seed);
    rep["kernel"] = decay_json(decay);

    std::ofstream qcsv(ctx.out / "q_path.csv");
    qcsv << "t";
    for (int i = 0; i < kernel.N; ++i)
      for (int j = 0; j < kernel.N; ++j) qcsv << ",q_" << i + 1 << "_" << j + 1;
    qcsv << "\n";
    for (Eigen::Index k = 0; k < kernel.t.size(); ++k) {
      qcsv << fmt17(kernel.t(k));
      const Eigen::MatrixXd& Q = kernel.Q[static_cast<size_t>(k)];
      for (int i = 0; i < kernel.N; ++i)
        for (int j = 0; j < kernel.N; ++j) qcsv << ',' << fmt17(Q(i, j));
      qcsv << "\n";
    }
    std::ofstream wcsv(ctx.out / "w_tail.csv");
    wcsv << "t";
    for (int j = kernel.N + 1; j <= kernel.J; ++j)
      for (int k = 1; k <= kernel.N; ++k) wcsv << ",w_" << j << "_" << k;
    wcsv << "\n";
    for (Eigen::Index s = 0; s < kernel.t.size(); ++s) {
      wcsv << fmt17(kernel.t(s));
      const Eigen::MatrixXd& W = kernel.W[static_cast<size_t>(s)];
      for (Eigen::Index i = 0; i < W.rows(); ++i)
        for (Eigen::Index j = 0; j < W.cols(); ++j) wcsv << ',' << fmt17(W(i, j));
      wcsv << "\n";
    }

    rep["exit_code"] = kExitOk;
    write_report(ctx, rep);
    ctx.finish("kernel");
    return kExitOk;
  } catch (const DesignRejected& e) {
    return fail_with(ctx, std::move(rep), e.what(), kExitDesignRejected);
  }
}

int cmd_simulate(const ExperimentConfig& cfg, const CommandOptions& opts) {
  Context ctx = make_context(cfg, opts);
  ordered_json rep = base_report("simulate", cfg);
  try {
    const BuiltDesign b = build_design(cfg);
    rep["design"] = design_summary(b.design);
    const SimConfig sim = make_sim_config(cfg, b.basis.size());
    const NoisePath path = sample_path(cfg.seed, cfg.theta, cfg.dt / 2.0, cfg.T);
    const Trajectory traj = run_etd(b.basis, b.design, sim, path);
    write_timeseries(ctx, traj, cfg.alpha);

    const YNormReport yn = y_norm(b.basis, traj, cfg.alpha);
    rep["result"] = {{"samples", traj.samples()},
                     {"blew_up", traj.blew_up},
                     {"blowup_time", traj.blowup_time},
                     {"terminal_l2", traj.l2(traj.samples() - 1)},
                     {"y_norm", yn.y_norm},
                     {"y_norm_argmax_t", yn.argmax_t}};
    const int code = traj.blew_up ? kExitBlowUp : kExitOk;
    rep["exit_code"] = code;
    write_report(ctx, rep);
    ctx.finish("simulate");
    return code;
  } catch (const DesignRejected& e) {
    return fail_with(ctx, std::move(rep), e.what(), kExitDesignRejected);
  }
}

int cmd_picard(const ExperimentConfig& cfg, const CommandOptions& opts) {
  Context ctx = make_context(cfg, opts);
  ordered_json rep = base_report("picard", cfg);
  try {
    const BuiltDesign b = build_design(cfg);
    rep["design"] = design_summary(b.design);
    const SimConfig sim = make_sim_config(cfg, b.basis.size());
    const NoisePath path = sample_path(cfg.seed, cfg.theta, cfg.dt / 2.0, cfg.T);
    const PicardResult res = picard_solve(b.basis, b.design, sim, path);
    write_timeseries(ctx, res.trajectory, cfg.alpha);

    ordered_json dists = ordered_json::array();
    for (double d : res.iterate_distances) dists.push_back(d);
    rep["result"] = {{"converged", res.converged},
                     {"iterations", res.iterations},
                     {"q_ratio", res.q_ratio},
                     {"blew_up", res.blew_up},
                     {"iterate_distances", dists}};
    rep["exit_code"] = kExitOk;
    write_report(ctx, rep);
    ctx.finish("picard");
    return kExitOk;
  } catch (const DesignRejected& e) {
    return fail_with(ctx, std::move(rep), e.what(), kExitDesignRejected);
  }
}

int cmd_mc(const ExperimentConfig& cfg, const CommandOptions& opts) {
  Context ctx = make_context(cfg, opts);
  ordered_json rep = base_report("mc", cfg);
  try {
    const BuiltDesign b = build_design(cfg);
    rep["design"] = design_summary(b.design);
    const SimConfig sim = make_sim_config(cfg, b.basis.size());
    const McReport mc = run_monte_carlo(b.basis, b.design, sim);

    std::ofstream csv(ctx.out / "paths.csv");
    csv << "path,sup_stat,growth,argmax_t,bounded,blew_up,blowup_time\n";
    for (size_t i = 0; i < mc.paths.size(); ++i) {
      const McPathStat& s = mc.paths[i];
      csv << i << ',' << fmt17(s.sup_stat) << ',' << fmt17(s.growth) << ','
          << fmt17(s.argmax_t) << ',' << (s.bounded ? 1 : 0) << ','
          << (s.blew_up ? 1 : 0) << ',' << fmt17(s.blowup_time) << "\n";
    }
    int blowups = 0;
    for (const McPathStat& s : mc.paths) blowups += s.blew_up ? 1 : 0;
    rep["result"] = {{"paths", cfg.mc_paths},
                     {"bounded_fraction", mc.bounded_fraction},
                     {"q10", mc.q10},
                     {"q50", mc.q50},
                     {"q90", mc.q90},
                     {"blowups", blowups}};
    rep["exit_code"] = kExitOk;
    write_report(ctx, rep);
    ctx.finish("mc");
    return kExitOk;
  } catch (const DesignRejected& e) {
    return fail_with(ctx, std::move(rep), e.what(), kExitDesignRejected);
  }
}

} // namespace heatctl

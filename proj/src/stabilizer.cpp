#include "heatctl/stabilizer.hpp"

#include <cmath>
#include <string>

namespace heatctl {

UnstableSelection select_unstable(const SpectralBasis& basis, double c, double rho) {
  if (!(rho > 1.0)) throw DesignRejected("rho must exceed 1");
  UnstableSelection sel;
  sel.mu = basis.lambdas().array() - c;
  for (int j = 0; j < sel.mu.size(); ++j) {
    if (std::abs(sel.mu(j) - rho) < 1e-9)
      throw DesignRejected("rho collides with a shifted eigenvalue mu_" +
                           std::to_string(j + 1));
    if (sel.mu(j) <= rho) sel.N = j + 1;
  }
  return sel;
}

H3Report audit_h3(double alpha, double rho, int N, const Eigen::VectorXd& lambdas) {
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be nonnegative");
  H3Report r;
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < N; ++i) {
    const double li = lambdas(i);
    worst = std::max(worst, -rho + 2 * alpha + 0.75 + 0.25 * li - 0.01);
    worst = std::max(worst, -rho + 3 * alpha + 7.0 / 12.0 + 0.25 * li - 0.01);
    for (int j = 0; j < N; ++j) {
      const double lij = 0.25 * (li + lambdas(j));
      worst = std::max(worst, -rho + 2 * alpha + lij + 0.5 - 0.01);
      worst = std::max(worst, -rho + 3 * alpha + 5.0 / 12.0 + lij - 0.01);
    }
  }
  r.worst_margin = worst;
  r.ok = worst <= 0.0;
  return r;
}

H4Report audit_h4(const Eigen::VectorXd& mu, int N, double gap_tol) {
  if (!(gap_tol > 0.0)) throw ConfigError("gap tolerance must be positive");
  H4Report r;
  r.min_gap = std::numeric_limits<double>::infinity();
  for (int j = 1; j < N; ++j) r.min_gap = std::min(r.min_gap, mu(j) - mu(j - 1));
  if (N <= 1) r.min_gap = std::numeric_limits<double>::infinity();
  r.ok = r.min_gap > gap_tol;
  return r;
}

GramResult gram_matrix(const SpectralBasis& basis, int N) {
  if (N < 1 || N > basis.size())
    throw DesignRejected("gram matrix needs 1 <= N <= J");
  GramResult g;
  const Eigen::MatrixXd traces = basis.trace_values().leftCols(N);
  g.B = traces.transpose() * basis.trace_weights().asDiagonal() * traces;
  g.B = 0.5 * (g.B + g.B.transpose());  // enforce exact symmetry
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(g.B);
  const Eigen::VectorXd s = svd.singularValues();
  const double tol = 1e-10 * s(0);
  g.rank = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > tol) ++g.rank;
  g.cond = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1)
                                 : std::numeric_limits<double>::infinity();
  return g;
}

StabilizerDesign assemble_design(const SpectralBasis& basis, double c, double rho,
                                 double alpha, const std::vector<double>& gammas,
                                 const DesignOptions& opts) {
  const UnstableSelection sel = select_unstable(basis, c, rho);
  const int N = sel.N;
  if (N >= basis.size())
    throw DesignRejected("truncation J leaves no stable tail modes beyond N");
  if (static_cast<int>(gammas.size()) != N)
    throw DesignRejected("expected exactly N = " + std::to_string(N) +
                         " gamma constants, got " + std::to_string(gammas.size()));
  if (!(gammas.front() > rho))
    throw DesignRejected("gamma_1 must exceed rho");
  for (size_t k = 1; k < gammas.size(); ++k)
    if (!(gammas[k] > gammas[k - 1]))
      throw DesignRejected("gamma constants must be strictly increasing");

  StabilizerDesign d;
  d.c = c;
  d.rho = rho;
  d.alpha = alpha;
  d.N = N;
  d.J = basis.size();
  d.mu = sel.mu;
  d.gammas = Eigen::Map<const Eigen::VectorXd>(gammas.data(),
                                               static_cast<Eigen::Index>(gammas.size()));

  d.h4 = audit_h4(d.mu, N);
  if (!d.h4.ok)
    throw DesignRejected("H4 fails: the first N shifted eigenvalues are not simple");
  d.h3 = audit_h3(alpha, rho, N, basis.lambdas());
  if (opts.enforce_h3 && !d.h3.ok)
    throw DesignRejected("H3 fails: worst margin " + std::to_string(d.h3.worst_margin));

  for (int k = 0; k < N; ++k)
    for (int j = 0; j < N; ++j)
      if (std::abs(d.gammas(k) - d.mu(j)) < opts.singular_guard)
        throw DesignRejected("gamma_k too close to an unstable eigenvalue");

  GramResult gram = gram_matrix(basis, N);
  d.B = gram.B;
  d.gram_rank = gram.rank;
  if (gram.rank < N)
    throw DesignRejected("boundary trace Gram is rank deficient: rank " +
                         std::to_string(gram.rank) + " < N = " + std::to_string(N));

  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(N, N);
  d.lambda_diag.reserve(static_cast<size_t>(N));
  d.Bk.reserve(static_cast<size_t>(N));
  for (int k = 0; k < N; ++k) {
    Eigen::VectorXd diag(N);
    for (int j = 0; j < N; ++j) diag(j) = 1.0 / (d.gammas(k) - d.mu(j));
    Eigen::MatrixXd bk = diag.asDiagonal() * d.B * diag.asDiagonal();
    sum += bk;
    d.lambda_diag.push_back(std::move(diag));
    d.Bk.push_back(std::move(bk));
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sum, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd s = svd.singularValues();
  d.cond_sum = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1)
                                     : std::numeric_limits<double>::infinity();
  if (!(d.cond_sum < opts.cond_limit))
    throw DesignRejected("sum of B_k is numerically singular (cond " +
                         std::to_string(d.cond_sum) + ")");
  d.A = svd.solve(Eigen::MatrixXd::Identity(N, N));

  // Full boundary Gram against the first N traces, and the mode-space
  // coupling G (sum_k Lambda_k) A through which the feedback acts.
  d.G = basis.trace_values().transpose() * basis.trace_weights().asDiagonal() *
        basis.trace_values().leftCols(N);
  Eigen::VectorXd lam_sum = Eigen::VectorXd::Zero(N);
  for (int k = 0; k < N; ++k) lam_sum += d.lambda_diag[static_cast<size_t>(k)];
  d.coupling = d.G * lam_sum.asDiagonal() * d.A;
  return d;
}

Eigen::VectorXd trace_matrix_entry(const SpectralBasis& basis,
                                   const StabilizerDesign& design, int k, int j) {
  return basis.trace_of_mode(j) / (design.gammas(k) - design.mu(j));
}

std::vector<Eigen::VectorXd> feedback_components(const SpectralBasis& basis,
                                                 const StabilizerDesign& design,
                                                 const ModeVector& y) {
  const int N = design.N;
  const Eigen::VectorXd ay = design.A * y.head(N);
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<size_t>(N));
  for (int k = 0; k < N; ++k) {
    const Eigen::VectorXd coeff =
        design.lambda_diag[static_cast<size_t>(k)].cwiseProduct(ay);
    out.push_back(basis.trace_values().leftCols(N) * coeff);
  }
  return out;
}

Eigen::VectorXd feedback_field(const SpectralBasis& basis,
                               const StabilizerDesign& design, const ModeVector& y) {
  const int N = design.N;
  Eigen::VectorXd lam_sum = Eigen::VectorXd::Zero(N);
  for (int k = 0; k < N; ++k) lam_sum += design.lambda_diag[static_cast<size_t>(k)];
  const Eigen::VectorXd coeff = lam_sum.cwiseProduct(design.A * y.head(N));
  return basis.trace_values().leftCols(N) * coeff;
}

ModeVector neumann_modes(const SpectralBasis& basis, const StabilizerDesign& design,
                         const Eigen::VectorXd& g, int gamma_index) {
  if (gamma_index < 0 || gamma_index >= design.N)
    throw DesignRejected("gamma index out of range");
  const double gamma = design.gammas(gamma_index);
  ModeVector m = basis.project_boundary(g);
  for (int j = 0; j < design.J; ++j) {
    const double denom =
        j < design.N ? gamma - design.mu(j) : gamma + design.mu(j);
    if (std::abs(denom) < 1e-9)
      throw DesignRejected("Neumann map singular at mode " + std::to_string(j + 1));
    m(j) = -m(j) / denom;
  }
  return m;
}

} // namespace heatctl

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "heatctl/basis.hpp"

namespace heatctl {

/// Split of the spectrum mu_j = lambda_j - c at the margin rho.
struct UnstableSelection {
  int N = 0;                 // count of mu_j <= rho
  Eigen::VectorXd mu;        // all J shifted eigenvalues
};
UnstableSelection select_unstable(const SpectralBasis& basis, double c, double rho);

/// The four spectral-margin inequalities; ok iff every left-hand side <= 0.
struct H3Report {
  bool ok = false;
  double worst_margin = 0.0;
};
H3Report audit_h3(double alpha, double rho, int N, const Eigen::VectorXd& lambdas);

/// Simplicity of the first N shifted eigenvalues.
struct H4Report {
  bool ok = false;
  double min_gap = 0.0;
};
H4Report audit_h4(const Eigen::VectorXd& mu, int N, double gap_tol = 1e-9);

/// Boundary Gram of the first N eigenfunction traces on Gamma1.
struct GramResult {
  Eigen::MatrixXd B;
  int rank = 0;
  double cond = 0.0;
};
GramResult gram_matrix(const SpectralBasis& basis, int N);

struct DesignOptions {
  bool enforce_h3 = false;       // reject when the margin inequalities fail
  double cond_limit = 1e12;      // sum(B_k) conditioning guard
  double rank_rel_tol = 1e-10;   // singular values below tol*max count as zero
  double singular_guard = 1e-9;  // minimum |gamma_k - mu_j|, j <= N
};

/// Realized boundary feedback data: the matrices B, Lambda_{gamma_k}, B_k,
/// A = (sum B_k)^{-1} and the full boundary coupling. Immutable.
struct StabilizerDesign {
  double c = 0.0;
  double rho = 0.0;
  double alpha = 0.0;
  int N = 0;
  int J = 0;
  Eigen::VectorXd mu;                    // J
  Eigen::VectorXd gammas;                // N, strictly increasing, > rho
  Eigen::MatrixXd B;                     // N x N trace Gram
  std::vector<Eigen::VectorXd> lambda_diag;  // N vectors of 1/(gamma_k - mu_j)
  std::vector<Eigen::MatrixXd> Bk;       // Lambda_k B Lambda_k
  Eigen::MatrixXd A;                     // (sum B_k)^{-1}
  Eigen::MatrixXd G;                     // J x N boundary Gram <phi_j, phi_m>_0
  Eigen::MatrixXd coupling;              // G * (sum Lambda_k) * A
  double cond_sum = 0.0;
  int gram_rank = 0;
  H3Report h3;
  H4Report h4;
};

StabilizerDesign assemble_design(const SpectralBasis& basis, double c, double rho,
                                 double alpha, const std::vector<double>& gammas,
                                 const DesignOptions& opts = {});

/// Entry T_{kj} of the trace matrix: phi_j / (gamma_k - mu_j) on Gamma1 nodes.
Eigen::VectorXd trace_matrix_entry(const SpectralBasis& basis,
                                   const StabilizerDesign& design, int k, int j);

/// The component feedback laws u_k(y) on the Gamma1 nodes.
std::vector<Eigen::VectorXd> feedback_components(const SpectralBasis& basis,
                                                 const StabilizerDesign& design,
                                                 const ModeVector& y);

/// The summed feedback u = u_1 + ... + u_N on the Gamma1 nodes.
Eigen::VectorXd feedback_field(const SpectralBasis& basis,
                               const StabilizerDesign& design, const ModeVector& y);

/// Modes of the Neumann map D_{gamma_k} applied to a boundary field g:
///   -<g,phi_j>_0/(gamma_k - mu_j) for j <= N, -<g,phi_j>_0/(gamma_k + mu_j) else.
ModeVector neumann_modes(const SpectralBasis& basis, const StabilizerDesign& design,
                         const Eigen::VectorXd& g, int gamma_index);

} // namespace heatctl

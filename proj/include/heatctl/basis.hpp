#pragma once

#include <Eigen/Dense>
#include <vector>

#include "heatctl/errors.hpp"

namespace heatctl {

/// Coefficients of a field in the eigenbasis, aligned with SpectralBasis.
using ModeVector = Eigen::VectorXd;

enum class Edge { Bottom, Top, Left, Right };

/// Rectangle [0,Lx]x[0,Ly] with tensor trapezoid quadrature and a controlled
/// boundary part Gamma1 given as a set of edges.
struct RectDomain {
  double Lx = 0.0;
  double Ly = 0.0;
  int grid_nx = 0;   // intervals per direction; closed grid has n+1 nodes
  int grid_ny = 0;
  std::vector<Edge> gamma1_edges;

  void validate() const;
};

/// One Neumann-Laplace eigenpair on the rectangle:
///   phi(x,y) = norm_const * cos(kx pi x / Lx) * cos(ky pi y / Ly),
///   lambda   = (kx pi / Lx)^2 + (ky pi / Ly)^2.
struct EigenPair {
  int kx = 0;
  int ky = 0;
  double lambda = 0.0;
  double norm_const = 0.0;
};

/// Truncated Neumann-Laplace eigenbasis with grid, dealiasing-padded grid and
/// Gamma1 trace samples. Immutable after construction; safe to share.
class SpectralBasis {
public:
  static SpectralBasis build(const RectDomain& domain, int J);

  const RectDomain& domain() const { return domain_; }
  int size() const { return static_cast<int>(pairs_.size()); }
  const EigenPair& pair(int j) const { return pairs_[static_cast<size_t>(j)]; }
  const std::vector<EigenPair>& pairs() const { return pairs_; }
  double lambda(int j) const { return pairs_[static_cast<size_t>(j)].lambda; }
  Eigen::VectorXd lambdas() const;

  // Interior quadrature grid (closed tensor grid, x-major node order).
  const Eigen::MatrixXd& grid_values() const { return grid_values_; }   // nodes x J
  const Eigen::VectorXd& grid_weights() const { return grid_weights_; }
  const Eigen::VectorXd& grid_x() const { return grid_x_; }
  const Eigen::VectorXd& grid_y() const { return grid_y_; }

  // 2x-padded grid used for quadratic/cubic products.
  const Eigen::MatrixXd& padded_values() const { return padded_values_; }
  const Eigen::VectorXd& padded_weights() const { return padded_weights_; }
  const Eigen::VectorXd& padded_x() const { return padded_x_; }
  const Eigen::VectorXd& padded_y() const { return padded_y_; }

  // Gamma1 trace samples (edges concatenated in Bottom,Top,Left,Right order).
  const Eigen::MatrixXd& trace_values() const { return trace_values_; }  // nodes x J
  const Eigen::VectorXd& trace_weights() const { return trace_weights_; }

  /// Pointwise synthesis sum_j y_j phi_j at the grid nodes.
  Eigen::VectorXd synthesize(const ModeVector& y) const;
  Eigen::VectorXd synthesize_padded(const ModeVector& y) const;

  /// Quadrature projection <field, phi_j> for all j.
  ModeVector project(const Eigen::VectorXd& grid_field) const;
  ModeVector project_padded(const Eigen::VectorXd& padded_field) const;

  /// Spectral fractional norm (sum (1+lambda_j)^s y_j^2)^(1/2), s in (0,1].
  double fractional_norm(const ModeVector& y, double s) const;

  /// L2(Gamma1) inner product of two trace-sampled fields.
  double boundary_inner(const Eigen::VectorXd& g, const Eigen::VectorXd& h) const;

  /// <g, phi_j>_0 over Gamma1 for all j.
  ModeVector project_boundary(const Eigen::VectorXd& g) const;

  /// phi_j sampled on the Gamma1 nodes.
  Eigen::VectorXd trace_of_mode(int j) const { return trace_values_.col(j); }

  /// L2 norm of phi_j over the full boundary (all four edges).
  double full_boundary_norm(int j) const;

private:
  RectDomain domain_;
  std::vector<EigenPair> pairs_;
  Eigen::MatrixXd grid_values_, padded_values_, trace_values_;
  Eigen::VectorXd grid_weights_, padded_weights_, trace_weights_;
  Eigen::VectorXd grid_x_, grid_y_, padded_x_, padded_y_;
};

/// Convergence audit of sum_j lambda_j^(-exponent) over the nonzero spectrum.
/// The partial sum runs over the lattice window [0,K]^2 (K derived from
/// j_max); the tail is an integral-test upper bound on everything outside
/// the window, infinite when exponent <= 1.
struct SeriesReport {
  double partial_sum = 0.0;
  double tail_bound = 0.0;
  bool converged = false;
  int window = 0;        // K
  long long terms = 0;   // lattice points summed exactly
};
SeriesReport audit_series(const RectDomain& domain, double exponent,
                          long long j_max, double tolerance = 1e-2);

/// Fits the smallest constants in the eigenfunction sup bound, the boundary
/// trace bound and the truncated heat-kernel tail, then re-fits with the
/// basis size doubled and reports stability.
struct EigenBoundsReport {
  double c_infty_fit = 0.0;
  double c_trace_fit = 0.0;
  double c_heatkernel_fit = 0.0;
  double c_infty_refined = 0.0;
  double c_trace_refined = 0.0;
  double c_heatkernel_refined = 0.0;
  bool stable = false;
};
EigenBoundsReport audit_eigen_bounds(const SpectralBasis& basis);

} // namespace heatctl

#include "heatctl/basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <tuple>

namespace heatctl {

namespace {

constexpr double kPi = std::numbers::pi;

double norm1d(int k, double L) { return std::sqrt((k >= 1 ? 2.0 : 1.0) / L); }

Eigen::VectorXd trap_weights(int n, double L) {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n + 1, L / n);
  w(0) *= 0.5;
  w(n) *= 0.5;
  return w;
}

// phi values on a closed tensor grid with nx, ny intervals; x-major nodes.
void tensor_grid(const RectDomain& d, const std::vector<EigenPair>& pairs,
                 int nx, int ny, Eigen::MatrixXd& values, Eigen::VectorXd& weights,
                 Eigen::VectorXd& node_x, Eigen::VectorXd& node_y) {
  const int J = static_cast<int>(pairs.size());
  const int nodes = (nx + 1) * (ny + 1);
  values.resize(nodes, J);
  weights.resize(nodes);
  node_x.resize(nodes);
  node_y.resize(nodes);
  const Eigen::VectorXd wx = trap_weights(nx, d.Lx);
  const Eigen::VectorXd wy = trap_weights(ny, d.Ly);
  for (int j = 0; j < J; ++j) {
    const EigenPair& p = pairs[static_cast<size_t>(j)];
    Eigen::VectorXd cx(nx + 1), cy(ny + 1);
    for (int ix = 0; ix <= nx; ++ix)
      cx(ix) = std::cos(p.kx * kPi * (ix * d.Lx / nx) / d.Lx);
    for (int iy = 0; iy <= ny; ++iy)
      cy(iy) = std::cos(p.ky * kPi * (iy * d.Ly / ny) / d.Ly);
    for (int ix = 0; ix <= nx; ++ix)
      for (int iy = 0; iy <= ny; ++iy)
        values(ix * (ny + 1) + iy, j) = p.norm_const * cx(ix) * cy(iy);
  }
  for (int ix = 0; ix <= nx; ++ix)
    for (int iy = 0; iy <= ny; ++iy) {
      const int n = ix * (ny + 1) + iy;
      weights(n) = wx(ix) * wy(iy);
      node_x(n) = ix * d.Lx / nx;
      node_y(n) = iy * d.Ly / ny;
    }
}

std::vector<Edge> normalized_edges(const std::vector<Edge>& edges) {
  std::vector<Edge> out;
  for (Edge e : {Edge::Bottom, Edge::Top, Edge::Left, Edge::Right})
    if (std::find(edges.begin(), edges.end(), e) != edges.end()) out.push_back(e);
  return out;
}

// Trace samples of all modes over the given edges, concatenated.
void edge_traces(const RectDomain& d, const std::vector<EigenPair>& pairs,
                 const std::vector<Edge>& edges, Eigen::MatrixXd& values,
                 Eigen::VectorXd& weights) {
  const int J = static_cast<int>(pairs.size());
  int nodes = 0;
  for (Edge e : edges)
    nodes += (e == Edge::Bottom || e == Edge::Top) ? d.grid_nx + 1 : d.grid_ny + 1;
  values.resize(nodes, J);
  weights.resize(nodes);
  int off = 0;
  for (Edge e : edges) {
    const bool horiz = (e == Edge::Bottom || e == Edge::Top);
    const int n = horiz ? d.grid_nx : d.grid_ny;
    const double L = horiz ? d.Lx : d.Ly;
    const Eigen::VectorXd w = trap_weights(n, L);
    for (int i = 0; i <= n; ++i) {
      const double s = i * L / n;
      double x, y;
      switch (e) {
        case Edge::Bottom: x = s; y = 0.0; break;
        case Edge::Top:    x = s; y = d.Ly; break;
        case Edge::Left:   x = 0.0; y = s; break;
        default:           x = d.Lx; y = s; break;
      }
      for (int j = 0; j < J; ++j) {
        const EigenPair& p = pairs[static_cast<size_t>(j)];
        values(off + i, j) = p.norm_const * std::cos(p.kx * kPi * x / d.Lx) *
                             std::cos(p.ky * kPi * y / d.Ly);
      }
      weights(off + i) = w(i);
    }
    off += n + 1;
  }
}

} // namespace

void RectDomain::validate() const {
  if (!(Lx > 0.0) || !(Ly > 0.0))
    throw ConfigError("domain lengths must be positive");
  if (grid_nx < 4 || grid_ny < 4)
    throw ConfigError("grid resolutions must be at least 4");
  if (gamma1_edges.empty())
    throw ConfigError("gamma1_edges must be nonempty");
}

SpectralBasis SpectralBasis::build(const RectDomain& domain, int J) {
  domain.validate();
  if (J < 1) throw ConfigError("basis size J must be >= 1");

  // Largest wavenumber the closed grid resolves without aliasing:
  // 2k+2 nodes needed per direction.
  const int Kx = (domain.grid_nx - 1) / 2;
  const int Ky = (domain.grid_ny - 1) / 2;

  std::vector<EigenPair> cand;
  cand.reserve(static_cast<size_t>((Kx + 1) * (Ky + 1)));
  for (int kx = 0; kx <= Kx; ++kx)
    for (int ky = 0; ky <= Ky; ++ky) {
      EigenPair p;
      p.kx = kx;
      p.ky = ky;
      const double ax = kx * kPi / domain.Lx;
      const double ay = ky * kPi / domain.Ly;
      p.lambda = ax * ax + ay * ay;
      p.norm_const = norm1d(kx, domain.Lx) * norm1d(ky, domain.Ly);
      cand.push_back(p);
    }
  std::sort(cand.begin(), cand.end(), [](const EigenPair& a, const EigenPair& b) {
    return std::tie(a.lambda, a.kx, a.ky) < std::tie(b.lambda, b.kx, b.ky);
  });

  if (static_cast<int>(cand.size()) < J)
    throw ResolutionError("basis size J exceeds the enumerable lattice window");
  const double ax1 = (Kx + 1) * kPi / domain.Lx;
  const double ay1 = (Ky + 1) * kPi / domain.Ly;
  const double lambda_safe = std::min(ax1 * ax1, ay1 * ay1);
  if (!(cand[static_cast<size_t>(J - 1)].lambda < lambda_safe))
    throw ResolutionError(
        "grid resolution too low: requested modes reach the aliasing limit");

  SpectralBasis b;
  b.domain_ = domain;
  b.domain_.gamma1_edges = normalized_edges(domain.gamma1_edges);
  b.pairs_.assign(cand.begin(), cand.begin() + J);
  tensor_grid(domain, b.pairs_, domain.grid_nx, domain.grid_ny, b.grid_values_,
              b.grid_weights_, b.grid_x_, b.grid_y_);
  tensor_grid(domain, b.pairs_, 2 * domain.grid_nx, 2 * domain.grid_ny,
              b.padded_values_, b.padded_weights_, b.padded_x_, b.padded_y_);
  edge_traces(domain, b.pairs_, b.domain_.gamma1_edges, b.trace_values_,
              b.trace_weights_);
  return b;
}

Eigen::VectorXd SpectralBasis::lambdas() const {
  Eigen::VectorXd out(size());
  for (int j = 0; j < size(); ++j) out(j) = pairs_[static_cast<size_t>(j)].lambda;
  return out;
}

Eigen::VectorXd SpectralBasis::synthesize(const ModeVector& y) const {
  if (y.size() != size()) throw std::invalid_argument("mode vector length mismatch");
  return grid_values_ * y;
}

Eigen::VectorXd SpectralBasis::synthesize_padded(const ModeVector& y) const {
  if (y.size() != size()) throw std::invalid_argument("mode vector length mismatch");
  return padded_values_ * y;
}

ModeVector SpectralBasis::project(const Eigen::VectorXd& grid_field) const {
  if (grid_field.size() != grid_weights_.size())
    throw std::invalid_argument("grid field length mismatch");
  return grid_values_.transpose() * grid_weights_.cwiseProduct(grid_field);
}

ModeVector SpectralBasis::project_padded(const Eigen::VectorXd& padded_field) const {
  if (padded_field.size() != padded_weights_.size())
    throw std::invalid_argument("padded field length mismatch");
  return padded_values_.transpose() * padded_weights_.cwiseProduct(padded_field);
}

double SpectralBasis::fractional_norm(const ModeVector& y, double s) const {
  if (!(s > 0.0 && s <= 1.0)) throw std::invalid_argument("s must lie in (0,1]");
  if (y.size() != size()) throw std::invalid_argument("mode vector length mismatch");
  double acc = 0.0;
  for (int j = 0; j < size(); ++j)
    acc += std::pow(1.0 + lambda(j), s) * y(j) * y(j);
  return std::sqrt(acc);
}

double SpectralBasis::boundary_inner(const Eigen::VectorXd& g,
                                     const Eigen::VectorXd& h) const {
  if (g.size() != trace_weights_.size() || h.size() != trace_weights_.size())
    throw std::invalid_argument("trace field length mismatch");
  return (trace_weights_.array() * g.array() * h.array()).sum();
}

ModeVector SpectralBasis::project_boundary(const Eigen::VectorXd& g) const {
  if (g.size() != trace_weights_.size())
    throw std::invalid_argument("trace field length mismatch");
  return trace_values_.transpose() * trace_weights_.cwiseProduct(g);
}

double SpectralBasis::full_boundary_norm(int j) const {
  const EigenPair& p = pairs_[static_cast<size_t>(j)];
  Eigen::MatrixXd tv;
  Eigen::VectorXd tw;
  edge_traces(domain_, {p}, {Edge::Bottom, Edge::Top, Edge::Left, Edge::Right}, tv, tw);
  return std::sqrt((tw.array() * tv.col(0).array().square()).sum());
}

SeriesReport audit_series(const RectDomain& domain, double exponent,
                          long long j_max, double tolerance) {
  if (!(exponent > 0.0)) throw ConfigError("series exponent must be positive");
  if (j_max < 100) throw ConfigError("series audit needs j_max >= 100");

  const double a = (kPi / domain.Lx) * (kPi / domain.Lx);
  const double b = (kPi / domain.Ly) * (kPi / domain.Ly);
  const double p = exponent;

  SeriesReport r;
  long long K = 1;
  while ((K + 1) * (K + 1) - 1 < j_max) ++K;
  r.window = static_cast<int>(K);

  for (long long kx = 0; kx <= K; ++kx)
    for (long long ky = 0; ky <= K; ++ky) {
      if (kx == 0 && ky == 0) continue;
      const double lam = a * static_cast<double>(kx * kx) +
                         b * static_cast<double>(ky * ky);
      r.partial_sum += std::pow(lam, -p);
      ++r.terms;
    }

  if (p <= 1.0) {
    // The corner region alone diverges for p <= 1 in two dimensions.
    r.tail_bound = std::numeric_limits<double>::infinity();
    r.converged = false;
    return r;
  }

  // Strips k > K (l <= K) and l > K (k <= K): each row is dominated by
  // int_K^inf (a x^2 + c)^(-p) dx <= (a K^2 + c)^(1-p) / (sqrt(a) K (2p-2)).
  const double Kd = static_cast<double>(K);
  double strip_x = 0.0, strip_y = 0.0;
  for (long long l = 0; l <= K; ++l) {
    const double ld = static_cast<double>(l);
    strip_x += std::pow(a * Kd * Kd + b * ld * ld, 1.0 - p);
    strip_y += std::pow(b * Kd * Kd + a * ld * ld, 1.0 - p);
  }
  strip_x /= std::sqrt(a) * Kd * (2.0 * p - 2.0);
  strip_y /= std::sqrt(b) * Kd * (2.0 * p - 2.0);
  // Corner k,l > K via a x^2 + b y^2 >= 2 sqrt(ab) x y.
  const double corner = std::pow(2.0 * std::sqrt(a * b), -p) *
                        std::pow(std::pow(Kd, 1.0 - p) / (p - 1.0), 2.0);
  r.tail_bound = strip_x + strip_y + corner;
  r.converged = std::isfinite(r.tail_bound) && r.tail_bound < tolerance * r.partial_sum;
  return r;
}

namespace {

double heat_kernel_fit(const SpectralBasis& basis) {
  const int J = basis.size();
  const int M = J / 2;  // 1-based start index of the audited tail
  const Eigen::MatrixXd& phi = basis.grid_values();
  Eigen::VectorXd lam = basis.lambdas();
  double best = 0.0;
  const int nt = 80;
  const double lo = std::log(1e-3), hi = std::log(10.0);
  for (int it = 0; it < nt; ++it) {
    const double t = std::exp(lo + (hi - lo) * it / (nt - 1));
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(phi.rows());
    for (int j = M - 1; j < J; ++j)
      acc += std::exp(-lam(j) * t) * phi.col(j).array().square().matrix();
    best = std::max(best, t * acc.maxCoeff());
  }
  return best;
}

void eigen_bound_fits(const SpectralBasis& basis, double& c_inf, double& c_tr) {
  c_inf = 0.0;
  c_tr = 0.0;
  for (int j = 1; j < basis.size(); ++j) {
    const double lam = basis.lambda(j);
    const double sup = basis.grid_values().col(j).cwiseAbs().maxCoeff();
    c_inf = std::max(c_inf, sup / std::pow(lam, 0.25));
    c_tr = std::max(c_tr, basis.full_boundary_norm(j) / std::pow(lam, 1.0 / 6.0));
  }
}

} // namespace

EigenBoundsReport audit_eigen_bounds(const SpectralBasis& basis) {
  if (basis.size() < 20) throw ConfigError("eigen-bound audit needs J >= 20");
  EigenBoundsReport r;
  eigen_bound_fits(basis, r.c_infty_fit, r.c_trace_fit);
  r.c_heatkernel_fit = heat_kernel_fit(basis);

  RectDomain d2 = basis.domain();
  d2.grid_nx *= 2;
  d2.grid_ny *= 2;
  const SpectralBasis refined = SpectralBasis::build(d2, 2 * basis.size());
  eigen_bound_fits(refined, r.c_infty_refined, r.c_trace_refined);
  r.c_heatkernel_refined = heat_kernel_fit(refined);

  auto close = [](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) &&
           std::abs(x - y) <= 0.10 * std::max(std::abs(x), std::abs(y));
  };
  r.stable = close(r.c_infty_fit, r.c_infty_refined) &&
             close(r.c_trace_fit, r.c_trace_refined) &&
             close(r.c_heatkernel_fit, r.c_heatkernel_refined);
  return r;
}

} // namespace heatctl

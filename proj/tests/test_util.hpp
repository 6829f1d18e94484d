#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "heatctl/basis.hpp"
#include "heatctl/stabilizer.hpp"

namespace testutil {

inline constexpr double kPi = std::numbers::pi;

/// Unit square [0,pi]^2 with the full grid resolution needed for J modes.
inline heatctl::RectDomain square_domain(int nx = 32, int ny = 32) {
  heatctl::RectDomain d;
  d.Lx = kPi;
  d.Ly = kPi;
  d.grid_nx = nx;
  d.grid_ny = ny;
  d.gamma1_edges = {heatctl::Edge::Bottom};
  return d;
}

/// Aspect-sqrt(2) rectangle: eigenvalues kx^2 + 2 ky^2, no collision below 9.
inline heatctl::RectDomain aspect_domain(int nx = 32, int ny = 24,
                                         std::vector<heatctl::Edge> edges = {
                                             heatctl::Edge::Bottom,
                                             heatctl::Edge::Top,
                                             heatctl::Edge::Left}) {
  heatctl::RectDomain d;
  d.Lx = kPi;
  d.Ly = kPi / std::sqrt(2.0);
  d.grid_nx = nx;
  d.grid_ny = ny;
  d.gamma1_edges = std::move(edges);
  return d;
}

/// Reference design used across the kernel and closed-loop tests:
/// c = 5, rho = 2 gives N = 6 on the aspect-sqrt(2) rectangle.
inline heatctl::StabilizerDesign reference_design(const heatctl::SpectralBasis& basis,
                                                  double alpha = 0.1) {
  return heatctl::assemble_design(basis, 5.0, 2.0, alpha,
                                  {3.0, 4.0, 5.0, 6.0, 7.0, 8.0});
}

/// Brute-force lattice oracle: first J Neumann eigenvalues on a rectangle,
/// enumerated over a wide window and sorted (ties by (kx,ky)).
inline std::vector<double> lattice_eigenvalues(double Lx, double Ly, int J,
                                               int window = 64) {
  std::vector<std::tuple<double, int, int>> lam;
  for (int kx = 0; kx <= window; ++kx)
    for (int ky = 0; ky <= window; ++ky) {
      const double ax = kx * kPi / Lx, ay = ky * kPi / Ly;
      lam.emplace_back(ax * ax + ay * ay, kx, ky);
    }
  std::sort(lam.begin(), lam.end());
  std::vector<double> out;
  for (int j = 0; j < J; ++j) out.push_back(std::get<0>(lam[static_cast<size_t>(j)]));
  return out;
}

} // namespace testutil

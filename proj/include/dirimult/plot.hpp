#pragma once

// SVG figures for a fitted model: grouped bars of the posterior means and
// per-class panels of the marginal Beta densities. Output is plain text and
// byte-identical for identical input.

#include <cstddef>
#include <string>
#include <vector>

#include "dirimult/classifier.hpp"

namespace dirimult {

inline constexpr std::size_t kDensityGridPoints = 512;

/// Be(a, b) evaluated on a grid that is uniform in u and warped by
/// x = u^p / (u^p + (1-u)^p), p = max(1, 2 / min(a, b)). The warp packs
/// points against 0 and 1 so the boundary spikes of shapes below 1 are
/// resolved. `integrand` is density(x(u)) * dx/du, which vanishes at both ends.
struct DensityCurve {
  std::vector<double> x;
  std::vector<double> density;
  std::vector<double> integrand;
};

DensityCurve beta_density_curve(double a, double b, std::size_t points = kDensityGridPoints);

/// Trapezoid rule over u of the curve's integrand; close to 1 for any curve.
double trapezoid_mass(const DensityCurve& curve);

std::string render_mean_bars_svg(const FittedModel& model);
std::string render_marginals_svg(const FittedModel& model);

}  // namespace dirimult

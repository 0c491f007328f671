#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pfode/oracle.hpp"
#include "pfode/parameterization.hpp"

namespace pfode {

enum class TransportMethod { Quantile1D, Assignment };

struct TransportReport {
  double w2 = 0.0;
  int n = 0;
  TransportMethod method = TransportMethod::Quantile1D;
  double ci_halfwidth = 0.0;  // 95% bootstrap half-width; 0 when not requested
};

// Exact W2 between equal-size empirical measures on the line (sorted pairing).
TransportReport w2_1d(std::span<const double> a, std::span<const double> b, int bootstrap = 0,
                      std::uint64_t seed = 0);

constexpr int kAssignmentCap = 4096;

// Exact W2 between equal-size point clouds (columns) by minimum-cost perfect
// matching on squared Euclidean distances.
TransportReport w2_assignment(const Samples& a, const Samples& b, int cap = kAssignmentCap);

// Quantile route for 1-D data, assignment otherwise.
TransportReport w2(const Samples& a, const Samples& b);

// Minimum-cost perfect matching for a square cost matrix (shortest
// augmenting paths with potentials, O(n^3)). Returns the total cost;
// `assignment[i]` is the column matched to row i.
double solve_assignment(const Matrix& cost, std::vector<int>* assignment = nullptr);

// Least-squares slope of log(err) against log(dt).
double order_of_convergence(std::span<const std::pair<double, double>> dt_err);

double spearman(std::span<const double> x, std::span<const double> y);

struct CurvatureBin {
  double sigma = 0.0;
  double kappa_mean = 0.0;
  double kappa_std = 0.0;
};

// Runs PureEuler trajectories over the decreasing grid `sigma_grid` and
// aggregates the cached relative curvature estimate at every interior grid
// point (sigma > 0). Trajectories start from the exact marginal.
std::vector<CurvatureBin> curvature_sweep(const GaussianMixture& gm, const Parameterization& p,
                                          std::span<const double> sigma_grid, int n_samples,
                                          std::uint64_t seed);
// Same, starting from prior draws; works with any denoiser.
std::vector<CurvatureBin> curvature_sweep(const Denoiser& den, const Parameterization& p,
                                          std::span<const double> sigma_grid, int n_samples,
                                          std::uint64_t seed);
std::vector<CurvatureBin> curvature_sweep_from(const Denoiser& den, const Parameterization& p,
                                               std::span<const double> sigma_grid, Samples x0);

}  // namespace pfode

#include "pfode/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "pfode/dynamics.hpp"
#include "pfode/rng.hpp"

namespace pfode {

namespace {

double sorted_w2(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(a.size()));
}

}  // namespace

TransportReport w2_1d(std::span<const double> a, std::span<const double> b, int bootstrap,
                      std::uint64_t seed) {
  if (a.size() != b.size()) throw DomainError("w2_1d: sample sizes differ");
  if (a.empty()) throw DomainError("w2_1d: empty samples");
  for (double v : a)
    if (!std::isfinite(v)) throw NumericalError("w2_1d: non-finite sample");
  for (double v : b)
    if (!std::isfinite(v)) throw NumericalError("w2_1d: non-finite sample");

  TransportReport rep;
  rep.n = static_cast<int>(a.size());
  rep.method = TransportMethod::Quantile1D;
  rep.w2 = sorted_w2({a.begin(), a.end()}, {b.begin(), b.end()});

  if (bootstrap > 0) {
    Philox rng(seed, derive_stream(seed, "w2-bootstrap"));
    const std::size_t n = a.size();
    std::vector<double> ra(n), rb(n), vals;
    vals.reserve(bootstrap);
    for (int rep_i = 0; rep_i < bootstrap; ++rep_i) {
      for (std::size_t i = 0; i < n; ++i) {
        ra[i] = a[std::min<std::size_t>(n - 1, static_cast<std::size_t>(rng.uniform() * n))];
        rb[i] = b[std::min<std::size_t>(n - 1, static_cast<std::size_t>(rng.uniform() * n))];
      }
      vals.push_back(sorted_w2(ra, rb));
    }
    const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= std::max<std::size_t>(1, vals.size() - 1);
    rep.ci_halfwidth = 1.96 * std::sqrt(var);
  }
  return rep;
}

double solve_assignment(const Matrix& cost, std::vector<int>* assignment) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw DomainError("solve_assignment: cost matrix must be square");
  if (n == 0) {
    if (assignment) assignment->clear();
    return 0.0;
  }
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based arrays; index 0 is the virtual source column.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      if (j1 == 0) throw NumericalError("solve_assignment: non-finite cost");
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n);
  for (int j = 1; j <= n; ++j) row_to_col[match[j] - 1] = j - 1;
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += cost(i, row_to_col[i]);
  if (assignment) *assignment = std::move(row_to_col);
  return total;
}

TransportReport w2_assignment(const Samples& a, const Samples& b, int cap) {
  if (a.rows() != b.rows()) throw DomainError("w2_assignment: dimensions differ");
  if (a.cols() != b.cols()) throw DomainError("w2_assignment: sample sizes differ");
  if (a.cols() == 0) throw DomainError("w2_assignment: empty samples");
  if (a.cols() > cap)
    throw DomainError("w2_assignment: " + std::to_string(a.cols()) + " points exceeds the cap of " +
                      std::to_string(cap));
  if (!a.allFinite() || !b.allFinite()) throw NumericalError("w2_assignment: non-finite sample");
  const Eigen::Index n = a.cols();
  Matrix cost(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) cost(i, j) = (a.col(i) - b.col(j)).squaredNorm();
  TransportReport rep;
  rep.n = static_cast<int>(n);
  rep.method = TransportMethod::Assignment;
  rep.w2 = std::sqrt(std::max(0.0, solve_assignment(cost) / static_cast<double>(n)));
  return rep;
}

TransportReport w2(const Samples& a, const Samples& b) {
  if (a.rows() == 1 && b.rows() == 1) {
    return w2_1d(std::span<const double>(a.data(), a.cols()), std::span<const double>(b.data(), b.cols()));
  }
  return w2_assignment(a, b);
}

double order_of_convergence(std::span<const std::pair<double, double>> dt_err) {
  if (dt_err.size() < 4) throw DomainError("order_of_convergence: need at least four points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [dt, err] : dt_err) {
    if (!(dt > 0.0) || !(err > 0.0)) throw DomainError("order_of_convergence: values must be positive");
    const double x = std::log(dt), y = std::log(err);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(dt_err.size());
  const double den = n * sxx - sx * sx;
  if (!(std::abs(den) > 0.0)) throw DomainError("order_of_convergence: step sizes must differ");
  return (n * sxy - sx * sy) / den;
}

namespace {

std::vector<double> ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("spearman: need two equal sequences of length >= 2");
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::vector<CurvatureBin> curvature_sweep_from(const Denoiser& den, const Parameterization& p,
                                               std::span<const double> sigma_grid, Samples x) {
  if (sigma_grid.size() < 3) throw DomainError("curvature_sweep: need at least three grid points");
  for (std::size_t i = 1; i < sigma_grid.size(); ++i)
    if (!(sigma_grid[i] < sigma_grid[i - 1])) throw DomainError("curvature_sweep: grid must decrease");
  if (sigma_grid.back() < 0.0) throw DomainError("curvature_sweep: negative sigma");

  std::vector<double> t(sigma_grid.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = p.time_of_sigma(sigma_grid[i]);

  std::vector<CurvatureBin> out;
  Samples v_prev;
  const std::size_t last = sigma_grid.back() == 0.0 ? sigma_grid.size() - 1 : sigma_grid.size();
  for (std::size_t i = 0; i < last; ++i) {
    const VelocityBatch vb = velocity_batch(den, p, x, t[i]);
    if (i > 0) {
      const double dt = t[i - 1] - t[i];
      const Eigen::Index n = x.cols();
      std::vector<double> k;
      k.reserve(n);
      for (Eigen::Index j = 0; j < n; ++j) {
        const double base = v_prev.col(j).norm();
        const double diff = (vb.v.col(j) - v_prev.col(j)).norm();
        if (base > 0.0) k.push_back(diff / (dt * base));
      }
      CurvatureBin bin;
      bin.sigma = sigma_grid[i];
      if (!k.empty()) {
        bin.kappa_mean = std::accumulate(k.begin(), k.end(), 0.0) / k.size();
        double var = 0.0;
        for (double v : k) var += (v - bin.kappa_mean) * (v - bin.kappa_mean);
        bin.kappa_std = std::sqrt(var / std::max<std::size_t>(1, k.size() - 1));
      }
      out.push_back(bin);
    }
    if (i + 1 < sigma_grid.size()) x -= (t[i] - t[i + 1]) * vb.v;
    v_prev = vb.v;
  }
  return out;
}

std::vector<CurvatureBin> curvature_sweep(const GaussianMixture& gm, const Parameterization& p,
                                          std::span<const double> sigma_grid, int n_samples,
                                          std::uint64_t seed) {
  if (sigma_grid.empty()) throw DomainError("curvature_sweep: empty grid");
  const double t0 = p.time_of_sigma(sigma_grid.front());
  return curvature_sweep_from(gm, p, sigma_grid,
                              sample_marginal(gm, p, t0, n_samples, seed, derive_stream(seed, "sweep")));
}

std::vector<CurvatureBin> curvature_sweep(const Denoiser& den, const Parameterization& p,
                                          std::span<const double> sigma_grid, int n_samples,
                                          std::uint64_t seed) {
  if (sigma_grid.empty()) throw DomainError("curvature_sweep: empty grid");
  const double t0 = p.time_of_sigma(sigma_grid.front());
  return curvature_sweep_from(den, p, sigma_grid,
                              sample_prior(den.dim(), p, t0, n_samples, seed, derive_stream(seed, "sweep")));
}

}  // namespace pfode

#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pfode/parameterization.hpp"
#include "pfode/types.hpp"

namespace pfode {

struct DenoiseRequest {
  bool jacobian = false;
  bool sigma_deriv = false;
};

// Batched denoiser output; column j belongs to input column j.
struct DenoiseBatch {
  Samples denoised;
  std::vector<Matrix> jacobians;  // dD/dx per sample, when requested
  Samples sigma_deriv;            // dD/dsigma, when requested
};

struct OracleEval {
  Vector denoised;
  std::optional<Matrix> jacobian;
  std::optional<Vector> sigma_deriv;
  Vector score;  // (denoised - x) / sigma^2
};

// Stand-in for the trained network D(x; sigma). One call to denoise_batch()
// is one function evaluation (NFE) regardless of the batch width.
class Denoiser {
 public:
  virtual ~Denoiser() = default;

  virtual int dim() const = 0;
  virtual void denoise_batch(const Samples& x, double sigma, DenoiseRequest request,
                             DenoiseBatch& out) const = 0;

  OracleEval denoise(const Vector& x, double sigma, bool want_jacobian = false,
                     bool want_sigma_deriv = false) const;

 protected:
  void check_input(const Samples& x, double sigma) const;
};

struct GaussianComponent {
  double weight = 1.0;
  Vector mean;
  Matrix cov;
};

// Finite mixture of Gaussians; the denoiser is the exact posterior mean
// E[x0 | x0 + sigma * n = x].
class GaussianMixture final : public Denoiser {
 public:
  static constexpr double kJitter = 1e-10;

  explicit GaussianMixture(std::vector<GaussianComponent> components);

  static GaussianMixture isotropic(int dim, double stddev, Vector mean = {});

  int dim() const override { return dim_; }
  const std::vector<GaussianComponent>& components() const noexcept { return components_; }

  void denoise_batch(const Samples& x, double sigma, DenoiseRequest request,
                     DenoiseBatch& out) const override;

  // Posterior component responsibilities at each column of x (K x n).
  Matrix responsibilities(const Samples& x, double sigma) const;

  // n i.i.d. draws of x0 ~ mixture (dim x n).
  Samples sample(int n, std::uint64_t seed, std::uint64_t stream = 0) const;

 private:
  int dim_ = 0;
  std::vector<GaussianComponent> components_;
};

// Field whose EDM velocity (x - D) / sigma is the constant `velocity`.
// Used as a zero-curvature control.
class ConstantVelocityField final : public Denoiser {
 public:
  explicit ConstantVelocityField(Vector velocity) : velocity_(std::move(velocity)) {}
  int dim() const override { return static_cast<int>(velocity_.size()); }
  void denoise_batch(const Samples& x, double sigma, DenoiseRequest request,
                     DenoiseBatch& out) const override;
  const Vector& velocity() const noexcept { return velocity_; }

 private:
  Vector velocity_;
};

// Decorator that counts denoise_batch() calls. Tests compare the count with
// the solvers' NFE ledgers.
class CountingDenoiser final : public Denoiser {
 public:
  explicit CountingDenoiser(const Denoiser& inner) : inner_(inner) {}
  int dim() const override { return inner_.dim(); }
  void denoise_batch(const Samples& x, double sigma, DenoiseRequest request,
                     DenoiseBatch& out) const override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    inner_.denoise_batch(x, sigma, request, out);
  }
  long calls() const { return calls_.load(); }
  void reset() { calls_.store(0); }

 private:
  const Denoiser& inner_;
  mutable std::atomic<long> calls_{0};
};

// Exact marginal draws x = s(t) (x0 + sigma(t) eps), x0 ~ gm, eps ~ N(0, I).
Samples sample_marginal(const GaussianMixture& gm, const Parameterization& p, double t, int n,
                        std::uint64_t seed, std::uint64_t stream = 0);

// Prior draws s(t) sigma(t) eps used when no data distribution is available.
Samples sample_prior(int dim, const Parameterization& p, double t, int n, std::uint64_t seed,
                     std::uint64_t stream = 0);

// Named presets. All are small (1-2 dims) so exact transport is cheap.
std::vector<std::string> preset_names();
GaussianMixture make_preset(const std::string& name);

}  // namespace pfode

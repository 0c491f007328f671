#include "pfode/oracle.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "pfode/rng.hpp"

namespace pfode {

void Denoiser::check_input(const Samples& x, double sigma) const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw DomainError("denoiser requires finite sigma > 0, got " + std::to_string(sigma));
  }
  if (x.rows() != dim()) {
    throw DomainError("state dimension " + std::to_string(x.rows()) + " does not match denoiser dim " +
                      std::to_string(dim()));
  }
}

OracleEval Denoiser::denoise(const Vector& x, double sigma, bool want_jacobian,
                             bool want_sigma_deriv) const {
  DenoiseBatch batch;
  denoise_batch(x, sigma, {want_jacobian, want_sigma_deriv}, batch);
  OracleEval out;
  out.denoised = batch.denoised.col(0);
  if (want_jacobian) out.jacobian = batch.jacobians.front();
  if (want_sigma_deriv) out.sigma_deriv = batch.sigma_deriv.col(0);
  out.score = (out.denoised - x) / (sigma * sigma);
  return out;
}

GaussianMixture::GaussianMixture(std::vector<GaussianComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw DomainError("mixture needs at least one component");
  dim_ = static_cast<int>(components_.front().mean.size());
  if (dim_ < 1) throw DomainError("mixture dimension must be positive");
  double total = 0.0;
  for (const auto& c : components_) {
    if (c.mean.size() != dim_ || c.cov.rows() != dim_ || c.cov.cols() != dim_) {
      throw DomainError("mixture component shapes disagree with dim " + std::to_string(dim_));
    }
    if (!(c.weight > 0.0 && c.weight <= 1.0)) throw DomainError("component weight must lie in (0, 1]");
    if ((c.cov - c.cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, c.cov.cwiseAbs().maxCoeff())) {
      throw DomainError("component covariance must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(c.cov);
    if (eig.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, eig.eigenvalues().maxCoeff())) {
      throw DomainError("component covariance must be positive semi-definite");
    }
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("mixture weights must sum to 1");
}

GaussianMixture GaussianMixture::isotropic(int dim, double stddev, Vector mean) {
  if (mean.size() == 0) mean = Vector::Zero(dim);
  return GaussianMixture({{1.0, std::move(mean), Matrix::Identity(dim, dim) * (stddev * stddev)}});
}

namespace {

struct ComponentFactor {
  Matrix s_inv;       // (C + sigma^2 I)^-1
  Matrix gain;        // C (C + sigma^2 I)^-1
  double log_norm;    // log w - logdet(S) / 2
  double trace_s_inv;
};

std::vector<ComponentFactor> factorize(const std::vector<GaussianComponent>& comps, int dim,
                                       double sigma) {
  std::vector<ComponentFactor> out;
  out.reserve(comps.size());
  const Matrix eye = Matrix::Identity(dim, dim);
  for (const auto& c : comps) {
    Matrix s = c.cov + eye * (sigma * sigma);
    Eigen::LLT<Matrix> llt(s);
    if (llt.info() != Eigen::Success) {
      s += eye * GaussianMixture::kJitter;
      llt.compute(s);
      if (llt.info() != Eigen::Success) throw NumericalError("singular posterior covariance");
    }
    ComponentFactor f;
    f.s_inv = llt.solve(eye);
    f.gain = c.cov * f.s_inv;
    double logdet = 0.0;
    const Matrix& l = llt.matrixLLT();
    for (int i = 0; i < dim; ++i) logdet += 2.0 * std::log(l(i, i));
    f.log_norm = std::log(c.weight) - 0.5 * logdet;
    f.trace_s_inv = f.s_inv.trace();
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace

void GaussianMixture::denoise_batch(const Samples& x, double sigma, DenoiseRequest request,
                                    DenoiseBatch& out) const {
  check_input(x, sigma);
  const auto factors = factorize(components_, dim_, sigma);
  const int n = static_cast<int>(x.cols());
  const int k_count = static_cast<int>(components_.size());

  out.denoised.resize(dim_, n);
  if (request.jacobian) out.jacobians.assign(n, Matrix(dim_, dim_));
  else out.jacobians.clear();
  if (request.sigma_deriv) out.sigma_deriv.resize(dim_, n);
  else out.sigma_deriv.resize(0, 0);

  // Component-wise work is done over the whole batch at once.
  std::vector<Matrix> a(k_count);      // S_k^-1 (x - mu_k)
  std::vector<Matrix> means(k_count);  // posterior means m_k
  Matrix logp(k_count, n);
  for (int k = 0; k < k_count; ++k) {
    const auto& comp = components_[k];
    const auto& f = factors[k];
    const Matrix r = x.colwise() - comp.mean;
    a[k].noalias() = f.s_inv * r;
    logp.row(k) = (f.log_norm - 0.5 * (r.array() * a[k].array()).colwise().sum()).matrix();
    means[k] = comp.cov * a[k];
    means[k].colwise() += comp.mean;
  }
  const Eigen::RowVectorXd top = logp.colwise().maxCoeff();
  Matrix resp = (logp.rowwise() - top).array().exp().matrix();
  const Eigen::RowVectorXd total = resp.colwise().sum();
  resp.array().rowwise() /= total.array();

  out.denoised.setZero();
  for (int k = 0; k < k_count; ++k) out.denoised.noalias() += (means[k].array().rowwise() * resp.row(k).array()).matrix();

  if (!request.jacobian && !request.sigma_deriv) return;
  Vector d(dim_);
  for (int j = 0; j < n; ++j) {
    d = out.denoised.col(j);
    if (request.jacobian) {
      Matrix& jac = out.jacobians[j];
      jac.setZero();
      for (int k = 0; k < k_count; ++k) {
        jac.noalias() += resp(k, j) * (factors[k].gain - (means[k].col(j) - d) * a[k].col(j).transpose());
      }
    }
    if (request.sigma_deriv) {
      auto ds = out.sigma_deriv.col(j);
      ds.setZero();
      for (int k = 0; k < k_count; ++k) {
        const double h = sigma * (a[k].col(j).squaredNorm() - factors[k].trace_s_inv);
        ds.noalias() += resp(k, j) * (-2.0 * sigma * (factors[k].gain * a[k].col(j)) + h * (means[k].col(j) - d));
      }
    }
  }
}

Matrix GaussianMixture::responsibilities(const Samples& x, double sigma) const {
  check_input(x, sigma);
  const auto factors = factorize(components_, dim_, sigma);
  const int k_count = static_cast<int>(components_.size());
  Matrix out(k_count, x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    Vector logp(k_count);
    for (int k = 0; k < k_count; ++k) {
      const Vector r = x.col(j) - components_[k].mean;
      logp[k] = factors[k].log_norm - 0.5 * r.dot(factors[k].s_inv * r);
    }
    const Vector w = (logp.array() - logp.maxCoeff()).exp();
    out.col(j) = w / w.sum();
  }
  return out;
}

namespace {

std::vector<Matrix> sampling_factors(const std::vector<GaussianComponent>& comps) {
  std::vector<Matrix> out;
  for (const auto& c : comps) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(c.cov);
    const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    out.push_back(eig.eigenvectors() * root.asDiagonal());
  }
  return out;
}

int pick_component(const std::vector<GaussianComponent>& comps, double u) {
  double acc = 0.0;
  for (std::size_t k = 0; k < comps.size(); ++k) {
    acc += comps[k].weight;
    if (u < acc) return static_cast<int>(k);
  }
  return static_cast<int>(comps.size()) - 1;
}

}  // namespace

Samples GaussianMixture::sample(int n, std::uint64_t seed, std::uint64_t stream) const {
  if (n < 0) throw DomainError("sample count must be non-negative");
  const auto roots = sampling_factors(components_);
  Philox rng(seed, stream);
  Samples out(dim_, n);
  Vector z(dim_);
  for (int j = 0; j < n; ++j) {
    const int k = pick_component(components_, rng.uniform());
    for (int i = 0; i < dim_; ++i) z[i] = rng.normal();
    out.col(j) = components_[k].mean + roots[k] * z;
  }
  return out;
}

void ConstantVelocityField::denoise_batch(const Samples& x, double sigma, DenoiseRequest request,
                                          DenoiseBatch& out) const {
  check_input(x, sigma);
  const int n = static_cast<int>(x.cols());
  out.denoised = x;
  out.denoised.colwise() -= sigma * velocity_;
  if (request.jacobian) out.jacobians.assign(n, Matrix::Identity(dim(), dim()));
  else out.jacobians.clear();
  if (request.sigma_deriv) out.sigma_deriv = (-velocity_).replicate(1, n);
  else out.sigma_deriv.resize(0, 0);
}

Samples sample_marginal(const GaussianMixture& gm, const Parameterization& p, double t, int n,
                        std::uint64_t seed, std::uint64_t stream) {
  if (n < 0) throw DomainError("sample_marginal requires n >= 0");
  const double sigma = p.sigma(t);
  const double scale = p.scale(t);
  const auto roots = sampling_factors(gm.components());
  const int dim = gm.dim();
  Philox rng(seed, stream);
  Samples out(dim, n);
  Vector z(dim);
  Vector eps(dim);
  for (int j = 0; j < n; ++j) {
    const int k = pick_component(gm.components(), rng.uniform());
    for (int i = 0; i < dim; ++i) z[i] = rng.normal();
    for (int i = 0; i < dim; ++i) eps[i] = rng.normal();
    out.col(j) = scale * (gm.components()[k].mean + roots[k] * z + sigma * eps);
  }
  return out;
}

Samples sample_prior(int dim, const Parameterization& p, double t, int n, std::uint64_t seed,
                     std::uint64_t stream) {
  if (n < 0) throw DomainError("sample_prior requires n >= 0");
  const double amp = p.scale(t) * p.sigma(t);
  Philox rng(seed, stream);
  Samples out(dim, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < dim; ++i) out(i, j) = amp * rng.normal();
  return out;
}

std::vector<std::string> preset_names() {
  return {"bimodal-1d", "trimodal-1d", "two-moons-gmm-8", "anisotropic-2d"};
}

GaussianMixture make_preset(const std::string& name) {
  auto scalar = [](double w, double m, double sd) {
    return GaussianComponent{w, Vector::Constant(1, m), Matrix::Constant(1, 1, sd * sd)};
  };
  if (name == "bimodal-1d") {
    return GaussianMixture({scalar(0.5, -1.0, 0.2), scalar(0.5, 1.0, 0.2)});
  }
  if (name == "trimodal-1d") {
    return GaussianMixture({scalar(0.25, -2.0, 0.3), scalar(0.45, 0.0, 0.15), scalar(0.30, 1.5, 0.08)});
  }
  if (name == "two-moons-gmm-8") {
    std::vector<GaussianComponent> comps;
    const Matrix cov = Matrix::Identity(2, 2) * 0.01;
    for (int i = 0; i < 4; ++i) {
      const double theta = std::numbers::pi * i / 3.0;
      comps.push_back({0.125, Eigen::Vector2d(std::cos(theta), std::sin(theta)), cov});
      comps.push_back({0.125, Eigen::Vector2d(1.0 - std::cos(theta), 0.5 - std::sin(theta)), cov});
    }
    return GaussianMixture(std::move(comps));
  }
  if (name == "anisotropic-2d") {
    Matrix c1(2, 2), c2(2, 2);
    c1 << 0.5, 0.3, 0.3, 0.25;
    c2 << 0.05, -0.02, -0.02, 0.3;
    return GaussianMixture({{0.6, Eigen::Vector2d(-1.0, 0.5), c1}, {0.4, Eigen::Vector2d(1.5, -1.0), c2}});
  }
  throw DomainError("unknown preset '" + name + "'");
}

}  // namespace pfode

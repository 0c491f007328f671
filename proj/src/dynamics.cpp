#include "pfode/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace pfode {
namespace {

struct Coefficients {
  double sigma;
  SigmaDerivatives sd;
  ScaleDerivatives sc;
};

Coefficients coefficients(const Parameterization& p, double t) {
  Coefficients c{p.sigma(t), {}, {}};
  if (!(c.sigma >= Parameterization::kSigmaFloor)) {
    throw SingularityError("PF-ODE is singular at sigma = " + std::to_string(c.sigma));
  }
  c.sd = p.sigma_derivatives(t);
  c.sc = p.scale_derivatives(t);
  return c;
}

// D(x/s; sigma) and its fixed-x partials, for a batch.
void effective_batch(const Denoiser& den, const Coefficients& c, const Samples& x, DenoiseRequest req,
                     DenoiseBatch& out) {
  const double s = c.sc.value;
  const bool scaled = s != 1.0 || c.sc.first != 0.0;
  DenoiseRequest inner = req;
  if (scaled && req.sigma_deriv) inner.jacobian = true;
  const Samples y = x / s;
  den.denoise_batch(y, c.sigma, inner, out);
  if (!scaled) return;
  // d/dsigma [x / s(sigma)] = -(s'/(s sigma')) * y  with s' = ds/dt.
  const double dy_dsigma = -c.sc.first / (s * c.sd.first);
  if (req.sigma_deriv) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      out.sigma_deriv.col(j).noalias() += dy_dsigma * (out.jacobians[j] * y.col(j));
    }
  }
  if (req.jacobian) {
    for (auto& jac : out.jacobians) jac /= s;
  } else {
    out.jacobians.clear();
  }
}

CurvatureEval singular_curvature(int dim) {
  CurvatureEval out;
  const double inf = std::numeric_limits<double>::infinity();
  out.xddot = Vector::Constant(dim, inf);
  out.eps_dot = Vector::Constant(dim, inf);
  out.norm = inf;
  out.singular = true;
  return out;
}

bool below_floor(const Parameterization& p, double t) {
  return !(p.sigma(t) >= Parameterization::kSigmaFloor);
}

struct CurvatureInputs {
  Coefficients c;
  Vector x;
  Vector d;      // D_eff
  Matrix jac;    // J_D
  Vector d_sig;  // D_sigma
  Vector eps;
};

CurvatureInputs curvature_inputs(const Denoiser& den, const Parameterization& p, const Vector& x, double t) {
  CurvatureInputs in{coefficients(p, t), x, {}, {}, {}, {}};
  DenoiseBatch batch;
  effective_batch(den, in.c, x, {true, true}, batch);
  in.d = batch.denoised.col(0);
  in.jac = batch.jacobians.front();
  in.d_sig = batch.sigma_deriv.col(0);
  in.eps = (x - in.c.sc.value * in.d) / in.c.sigma;
  return in;
}

void check_kind(const Parameterization& p, Kind expected) {
  if (p.kind() != expected) {
    throw DomainError("curvature_" + std::string(to_string(expected)) + " called with a " +
                      std::string(to_string(p.kind())) + " parameterization");
  }
}

CurvatureEval finish(Vector xddot, Vector eps_dot) {
  CurvatureEval out;
  out.norm = xddot.norm();
  out.xddot = std::move(xddot);
  out.eps_dot = std::move(eps_dot);
  return out;
}

// Shared by the general form and curvature_norms.
void general_terms(const Coefficients& c, const Vector& x, const Vector& d, const Matrix& jac,
                   const Vector& d_sig, Vector& xddot, Vector& eps_dot) {
  const double sigma = c.sigma;
  const double s = c.sc.value, s1 = c.sc.first, s2 = c.sc.second;
  const double g1 = c.sd.first, g2 = c.sd.second;
  const Vector eps = (x - s * d) / sigma;
  const Vector j_eps = jac * eps;
  const Vector j_d = jac * d;
  eps_dot = (s1 / s) * eps - (s1 + g1 * s / sigma) * j_eps - (s1 * s / sigma) * j_d - (g1 * s / sigma) * d_sig;
  xddot = (s2 / s) * x + (g2 + 2.0 * g1 * s1 / s) * eps - g1 * (s1 + g1 * s / sigma) * j_eps -
          g1 * (s1 * s / sigma) * j_d - g1 * (g1 * s / sigma) * d_sig;
}

}  // namespace

EffectiveDenoise effective_denoise(const Denoiser& den, const Parameterization& p, const Vector& x,
                                   double t) {
  const auto c = coefficients(p, t);
  DenoiseBatch batch;
  effective_batch(den, c, x, {true, true}, batch);
  return {batch.denoised.col(0), batch.jacobians.front(), batch.sigma_deriv.col(0)};
}

VelocityBatch velocity_batch(const Denoiser& den, const Parameterization& p, const Samples& x, double t) {
  const auto c = coefficients(p, t);
  DenoiseBatch batch;
  effective_batch(den, c, x, {}, batch);
  VelocityBatch out;
  out.eps = (x - c.sc.value * batch.denoised) / c.sigma;
  out.v = (c.sc.first / c.sc.value) * x + c.sd.first * out.eps;
  return out;
}

VelocityEval velocity(const Denoiser& den, const Parameterization& p, const Vector& x, double t) {
  auto batch = velocity_batch(den, p, x, t);
  return {batch.v.col(0), batch.eps.col(0), 1};
}

Matrix velocity_jacobian(const Denoiser& den, const Parameterization& p, const Vector& x, double t) {
  const auto c = coefficients(p, t);
  DenoiseBatch batch;
  effective_batch(den, c, x, {true, false}, batch);
  const int dim = static_cast<int>(x.size());
  return (c.sc.first / c.sc.value + c.sd.first / c.sigma) * Matrix::Identity(dim, dim) -
         (c.sd.first * c.sc.value / c.sigma) * batch.jacobians.front();
}

Vector velocity_jacobian_norms(const Denoiser& den, const Parameterization& p, const Samples& x, double t) {
  const auto c = coefficients(p, t);
  DenoiseBatch batch;
  effective_batch(den, c, x, {true, false}, batch);
  const int dim = static_cast<int>(x.rows());
  const double diag = c.sc.first / c.sc.value + c.sd.first / c.sigma;
  const double scale = c.sd.first * c.sc.value / c.sigma;
  Vector out(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const Matrix a = diag * Matrix::Identity(dim, dim) - scale * batch.jacobians[j];
    if (dim == 1) {
      out(j) = std::abs(a(0, 0));
    } else {
      Eigen::SelfAdjointEigenSolver<Matrix> es(a.transpose() * a, Eigen::EigenvaluesOnly);
      out(j) = std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
    }
  }
  return out;
}

CurvatureEval curvature_general(const Denoiser& den, const Parameterization& p, const Vector& x, double t) {
  if (below_floor(p, t)) return singular_curvature(static_cast<int>(x.size()));
  const auto in = curvature_inputs(den, p, x, t);
  Vector xddot, eps_dot;
  general_terms(in.c, x, in.d, in.jac, in.d_sig, xddot, eps_dot);
  return finish(std::move(xddot), std::move(eps_dot));
}

CurvatureEval curvature_edm(const Denoiser& den, const Parameterization& p, const Vector& x, double t) {
  check_kind(p, Kind::EDM);
  if (below_floor(p, t)) return singular_curvature(static_cast<int>(x.size()));
  const auto in = curvature_inputs(den, p, x, t);
  const double sigma = in.c.sigma;
  Vector xddot = -(in.jac * (x - in.d)) / (sigma * sigma) - in.d_sig / sigma;
  Vector eps_dot = xddot;  // sigma' = 1, s = 1
  return finish(std::move(xddot), std::move(eps_dot));
}

CurvatureEval curvature_ve(const Denoiser& den, const Parameterization& p, const Vector& x, double t) {
  check_kind(p, Kind::VE);
  if (below_floor(p, t)) return singular_curvature(static_cast<int>(x.size()));
  const auto in = curvature_inputs(den, p, x, t);
  const double sigma = in.c.sigma;
  const double s3 = sigma * sigma * sigma;
  const Vector resid = x - in.d;
  const Vector j_resid = in.jac * resid;
  Vector xddot = -(resid + j_resid) / (4.0 * s3 * sigma) - in.d_sig / (4.0 * s3);
  Vector eps_dot = -(j_resid / sigma + in.d_sig) / (2.0 * sigma * sigma);
  return finish(std::move(xddot), std::move(eps_dot));
}

CurvatureEval curvature_vp(const Denoiser& den, const Parameterization& p, const Vector& x, double t) {
  check_kind(p, Kind::VP);
  if (below_floor(p, t)) return singular_curvature(static_cast<int>(x.size()));
  const auto in = curvature_inputs(den, p, x, t);
  const double sigma = in.c.sigma;
  const double s = in.c.sc.value;
  const double b = p.vp_rate(t);
  const double g1 = in.c.sd.first, g2 = in.c.sd.second;
  const double accel = 0.25 * b * b - 0.5 * p.beta_d();  // s''/s
  const Vector resid = x - s * in.d;                     // sigma * eps
  const Vector j_resid = in.jac * resid;
  const Vector j_d = in.jac * in.d;
  // s' + sigma' s / sigma = B s / (2 sigma^2) and s' s / sigma = -B s^2 / (2 sigma).
  Vector xddot = accel * x + (g2 / sigma - b * g1 / sigma) * resid -
                 g1 * (0.5 * b * s / (sigma * sigma * sigma)) * j_resid +
                 g1 * (0.5 * b * s * s / sigma) * j_d - g1 * (g1 * s / sigma) * in.d_sig;
  Vector eps_dot = -0.5 * b * resid / sigma - (0.5 * b * s / (sigma * sigma * sigma)) * j_resid +
                   (0.5 * b * s * s / sigma) * j_d - (g1 * s / sigma) * in.d_sig;
  return finish(std::move(xddot), std::move(eps_dot));
}

CurvatureEval curvature(const Denoiser& den, const Parameterization& p, const Vector& x, double t) {
  switch (p.kind()) {
    case Kind::EDM: return curvature_edm(den, p, x, t);
    case Kind::VP: return curvature_vp(den, p, x, t);
    case Kind::VE: return curvature_ve(den, p, x, t);
  }
  return curvature_general(den, p, x, t);
}

Vector curvature_norms(const Denoiser& den, const Parameterization& p, const Samples& x, double t) {
  if (below_floor(p, t)) return Vector::Constant(x.cols(), std::numeric_limits<double>::infinity());
  const auto c = coefficients(p, t);
  DenoiseBatch batch;
  effective_batch(den, c, x, {true, true}, batch);
  Vector out(x.cols());
  Vector xddot, eps_dot;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    general_terms(c, x.col(j), batch.denoised.col(j), batch.jacobians[j], batch.sigma_deriv.col(j), xddot,
                  eps_dot);
    out[j] = xddot.norm();
  }
  return out;
}

namespace {

// dx/dlambda with lambda = log sigma.
Samples log_sigma_rate(const Denoiser& den, const Parameterization& p, const Samples& x, double lambda) {
  const double sigma = std::exp(lambda);
  const double t = p.time_of_sigma(sigma);
  const double dt_dlambda = sigma / p.sigma_derivatives(t).first;
  return velocity_batch(den, p, x, t).v * dt_dlambda;
}

}  // namespace

Samples reference_flow(const Denoiser& den, const Parameterization& p, const Samples& x0, double t_from,
                       double t_to, int substeps) {
  if (substeps < 1) throw DomainError("reference_flow requires substeps >= 1");
  if (!(t_from >= 0.0) || !(t_to >= 0.0)) throw DomainError("reference_flow requires non-negative times");
  if (t_from == t_to) return x0;
  const double sigma_from = p.sigma(t_from);
  if (!(sigma_from >= kFlowSigmaEnd)) throw SingularityError("reference_flow cannot start at sigma = 0");
  const double sigma_to = std::max(p.sigma(t_to), kFlowSigmaEnd);
  const double l0 = std::log(sigma_from);
  const double l1 = std::log(sigma_to);
  const double h = (l1 - l0) / substeps;
  Samples x = x0;
  for (int k = 0; k < substeps; ++k) {
    const double l = l0 + k * h;
    const double l_end = k + 1 == substeps ? l1 : l0 + (k + 1) * h;
    const double l_mid = 0.5 * (l + l_end);
    const Samples k1 = log_sigma_rate(den, p, x, l);
    const Samples k2 = log_sigma_rate(den, p, x + (0.5 * h) * k1, l_mid);
    const Samples k3 = log_sigma_rate(den, p, x + (0.5 * h) * k2, l_mid);
    const Samples k4 = log_sigma_rate(den, p, x + h * k3, l_end);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (!x.allFinite()) throw NumericalError("reference_flow produced a non-finite state");
  return x;
}

Vector reference_flow(const Denoiser& den, const Parameterization& p, const Vector& x0, double t_from,
                      double t_to, int substeps) {
  const Samples batch = x0;
  return reference_flow(den, p, batch, t_from, t_to, substeps).col(0);
}

FlowCheck reference_flow_checked(const Denoiser& den, const Parameterization& p, const Samples& x0,
                                 double t_from, double t_to, int substeps, double tol) {
  const Samples coarse = reference_flow(den, p, x0, t_from, t_to, substeps);
  FlowCheck out;
  out.state = reference_flow(den, p, x0, t_from, t_to, 2 * substeps);
  out.change = out.state.size() == 0 ? 0.0 : (out.state - coarse).cwiseAbs().maxCoeff();
  out.converged = out.change <= tol;
  return out;
}

}  // namespace pfode

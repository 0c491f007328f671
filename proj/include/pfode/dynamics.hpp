#pragma once

#include "pfode/oracle.hpp"
#include "pfode/parameterization.hpp"

namespace pfode {

// PF-ODE drift dx/dt = (s'/s) x + sigma' eps with the noise residual
// eps = (x - s D(x/s; sigma)) / sigma.
struct VelocityEval {
  Vector v;
  Vector eps;
  int nfe_cost = 1;
};

struct VelocityBatch {
  Samples v;
  Samples eps;
};

struct CurvatureEval {
  Vector xddot;
  Vector eps_dot;
  double norm = 0.0;
  // Set when sigma(t) is below the derivative floor; norm is +inf then.
  bool singular = false;
};

// Denoiser seen by the ODE: D_eff(x; sigma) = D(x / s; sigma), with s
// expressed through sigma. jacobian and sigma_deriv are its partial
// derivatives at fixed x, which is what the curvature formulas consume.
struct EffectiveDenoise {
  Vector denoised;
  Matrix jacobian;
  Vector sigma_deriv;
};

EffectiveDenoise effective_denoise(const Denoiser& den, const Parameterization& p, const Vector& x,
                                   double t);

VelocityEval velocity(const Denoiser& den, const Parameterization& p, const Vector& x, double t);
VelocityBatch velocity_batch(const Denoiser& den, const Parameterization& p, const Samples& x, double t);

// dv/dx = (s'/s + sigma'/sigma) I - (sigma' s / sigma) J_D.
Matrix velocity_jacobian(const Denoiser& den, const Parameterization& p, const Vector& x, double t);

// Spectral norm of dv/dx for every column; one batched oracle call.
Vector velocity_jacobian_norms(const Denoiser& den, const Parameterization& p, const Samples& x, double t);

// Second time derivative of the trajectory through (x, t):
//   x'' = (s''/s) x + (sigma'' + 2 sigma' s'/s) eps - sigma' (s' + sigma' s/sigma) J eps
//         - sigma' (s' s / sigma) J D - sigma' (sigma' s / sigma) D_sigma
CurvatureEval curvature_general(const Denoiser& den, const Parameterization& p, const Vector& x, double t);

// Closed forms specialised to one parameterization. Throw DomainError when
// p.kind() does not match.
CurvatureEval curvature_edm(const Denoiser& den, const Parameterization& p, const Vector& x, double t);
CurvatureEval curvature_vp(const Denoiser& den, const Parameterization& p, const Vector& x, double t);
CurvatureEval curvature_ve(const Denoiser& den, const Parameterization& p, const Vector& x, double t);

// Dispatches to the specialised form for p.kind().
CurvatureEval curvature(const Denoiser& den, const Parameterization& p, const Vector& x, double t);

// Norms of x'' for every column; one batched oracle call.
Vector curvature_norms(const Denoiser& den, const Parameterization& p, const Samples& x, double t);

// High-accuracy PF-ODE transport from t_from to t_to with classical RK4 on
// `substeps` intervals uniform in log sigma. Either direction is accepted.
// t_to = 0 is reached by integrating down to sigma = kFlowSigmaEnd, below
// which the remaining displacement is O(sigma^2).
constexpr double kFlowSigmaEnd = 2e-8;

Samples reference_flow(const Denoiser& den, const Parameterization& p, const Samples& x0, double t_from,
                       double t_to, int substeps);
Vector reference_flow(const Denoiser& den, const Parameterization& p, const Vector& x0, double t_from,
                      double t_to, int substeps);

struct FlowCheck {
  Samples state;      // result at 2 * substeps
  double change = 0;  // max abs difference between the substeps and 2 * substeps runs
  bool converged = false;
};

// Runs reference_flow at substeps and 2 * substeps; converged iff the two
// agree to `tol` (max abs).
FlowCheck reference_flow_checked(const Denoiser& den, const Parameterization& p, const Samples& x0,
                                 double t_from, double t_to, int substeps, double tol);

}  // namespace pfode

#include "pfode/parameterization.hpp"

#include <cmath>
#include <limits>

#include "pfode/schedule.hpp"

namespace pfode {

std::string_view to_string(Kind kind) {
  switch (kind) {
    case Kind::EDM: return "edm";
    case Kind::VP: return "vp";
    case Kind::VE: return "ve";
  }
  return "?";
}

Kind kind_from_string(std::string_view name) {
  if (name == "edm" || name == "EDM") return Kind::EDM;
  if (name == "vp" || name == "VP") return Kind::VP;
  if (name == "ve" || name == "VE") return Kind::VE;
  throw DomainError("unknown parameterization kind '" + std::string(name) + "'");
}

Parameterization::Parameterization(Kind kind, double sigma_min, double sigma_max, double beta_d,
                                   double beta_min)
    : kind_(kind), sigma_min_(sigma_min), sigma_max_(sigma_max), beta_d_(beta_d), beta_min_(beta_min) {
  if (!(std::isfinite(sigma_min) && std::isfinite(sigma_max) && sigma_min > 0.0 &&
        sigma_max > sigma_min)) {
    throw DomainError("require 0 < sigma_min < sigma_max < inf");
  }
  if (kind == Kind::VP) {
    if (!(std::isfinite(beta_d) && std::isfinite(beta_min) && beta_d >= 0.0 && beta_min >= 0.0 &&
          beta_d + beta_min > 0.0)) {
      throw DomainError("VP requires beta_d >= 0, beta_min >= 0, not both zero");
    }
  }
}

void Parameterization::check_time(double t) const {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw DomainError("time must be finite and non-negative, got " + std::to_string(t));
  }
}

double Parameterization::vp_u(double t) const {
  return kind_ == Kind::VP ? 0.5 * beta_d_ * t * t + beta_min_ * t : 0.0;
}

double Parameterization::vp_rate(double t) const {
  return kind_ == Kind::VP ? beta_min_ + beta_d_ * t : 0.0;
}

double Parameterization::sigma(double t) const {
  check_time(t);
  switch (kind_) {
    case Kind::EDM: return t;
    case Kind::VE: return std::sqrt(t);
    case Kind::VP: return std::sqrt(std::expm1(vp_u(t)));
  }
  return 0.0;
}

double Parameterization::time_of_sigma(double sigma) const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw DomainError("sigma must be finite and non-negative");
  }
  switch (kind_) {
    case Kind::EDM: return sigma;
    case Kind::VE: return sigma * sigma;
    case Kind::VP: {
      // Positive root of beta_d t^2 / 2 + beta_min t - u = 0 in the
      // cancellation-free form 2u / (beta_min + sqrt(beta_min^2 + 2 beta_d u)).
      const double u = std::log1p(sigma * sigma);
      if (u == 0.0) return 0.0;
      return 2.0 * u / (beta_min_ + std::sqrt(beta_min_ * beta_min_ + 2.0 * beta_d_ * u));
    }
  }
  return 0.0;
}

SigmaDerivatives Parameterization::sigma_derivatives(double t) const {
  check_time(t);
  if (kind_ == Kind::EDM) return {1.0, 0.0};
  const double s = sigma(t);
  if (!(s >= kSigmaFloor)) {
    throw SingularityError("sigma(t) = " + std::to_string(s) + " below derivative floor");
  }
  if (kind_ == Kind::VE) {
    return {0.5 / s, -0.25 / (s * s * s)};
  }
  const double b = vp_rate(t);
  const double inv = 1.0 / s;
  const double first = 0.5 * b * (s + inv);
  const double second = 0.5 * beta_d_ * (s + inv) + 0.25 * b * b * (s - inv * inv * inv);
  return {first, second};
}

ScaleDerivatives Parameterization::scale_derivatives(double t) const {
  check_time(t);
  if (kind_ != Kind::VP) return {1.0, 0.0, 0.0};
  const double b = vp_rate(t);
  const double s = std::exp(-0.5 * vp_u(t));
  return {s, -0.5 * b * s, (0.25 * b * b - 0.5 * beta_d_) * s};
}

TimestepSchedule edm_reference_grid(const Parameterization& p, int steps, double rho) {
  if (steps < 2) throw DomainError("edm_reference_grid requires N >= 2");
  if (!(rho > 0.0) || !std::isfinite(rho)) throw DomainError("edm_reference_grid requires rho > 0");
  const double hi = std::pow(p.sigma_max(), 1.0 / rho);
  const double lo = std::pow(p.sigma_min(), 1.0 / rho);
  std::vector<double> sigmas(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i < steps; ++i) {
    const double frac = static_cast<double>(i) / static_cast<double>(steps - 1);
    sigmas[i] = std::pow(hi + frac * (lo - hi), rho);
  }
  // Pin the endpoints; pow(pow(x, 1/rho), rho) is not exact.
  sigmas.front() = p.sigma_max();
  sigmas[steps - 1] = p.sigma_min();
  sigmas.back() = 0.0;
  return TimestepSchedule::from_sigmas(p, std::move(sigmas));
}

void TimestepSchedule::validate() const {
  if (times.size() < 2) throw DomainError("schedule needs at least two time points");
  if (sigmas.size() != times.size()) throw DomainError("schedule times/sigmas length mismatch");
  if (!per_step.empty() && per_step.size() != times.size() - 1) {
    throw DomainError("schedule per_step length must equal the number of steps");
  }
  if (times.back() != 0.0 || sigmas.back() != 0.0) {
    throw DomainError("schedule must end at exactly t = 0");
  }
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    if (!(times[i] > times[i + 1]) || !std::isfinite(times[i])) {
      throw DomainError("schedule times must be finite and strictly decreasing");
    }
  }
}

TimestepSchedule TimestepSchedule::from_times(const Parameterization& p, std::vector<double> times) {
  TimestepSchedule s;
  s.sigmas.reserve(times.size());
  for (double t : times) s.sigmas.push_back(p.sigma(t));
  s.times = std::move(times);
  return s;
}

TimestepSchedule TimestepSchedule::from_sigmas(const Parameterization& p, std::vector<double> sigmas) {
  TimestepSchedule s;
  s.times.reserve(sigmas.size());
  for (double sg : sigmas) s.times.push_back(p.time_of_sigma(sg));
  s.sigmas = std::move(sigmas);
  return s;
}

void EtaSchedule::validate() const {
  if (!(eta_min > 0.0) || !(eta_max >= eta_min) || !(p >= 0.0) || !std::isfinite(eta_max) ||
      !std::isfinite(p)) {
    throw DomainError("eta schedule requires 0 < eta_min <= eta_max and p >= 0");
  }
}

double EtaSchedule::operator()(double sigma, double sigma_max) const {
  if (sigma >= sigma_max) return eta_max;
  if (sigma <= 0.0) return p > 0.0 ? eta_min : eta_max;
  return (eta_max - eta_min) * std::pow(sigma / sigma_max, p) + eta_min;
}

}  // namespace pfode

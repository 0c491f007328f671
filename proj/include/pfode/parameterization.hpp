#pragma once

#include <string>
#include <string_view>

#include "pfode/types.hpp"

namespace pfode {

struct TimestepSchedule;

enum class Kind { EDM, VP, VE };

std::string_view to_string(Kind kind);
Kind kind_from_string(std::string_view name);

struct SigmaDerivatives {
  double first = 0.0;   // dsigma/dt
  double second = 0.0;  // d2sigma/dt2
};

struct ScaleDerivatives {
  double value = 1.0;   // s(t)
  double first = 0.0;   // ds/dt
  double second = 0.0;  // d2s/dt2
};

// Noise schedule sigma(t) and scale s(t) of the probability-flow ODE.
//
//   EDM: sigma = t,                 s = 1
//   VE:  sigma = sqrt(t),           s = 1
//   VP:  sigma = sqrt(e^u - 1),     s = e^{-u/2},  u = beta_d t^2 / 2 + beta_min t
//
// The sampling interval is [0, t_max()] with sigma(t_max()) = sigma_max.
class Parameterization {
 public:
  static constexpr double kDefaultSigmaMin = 0.002;
  static constexpr double kDefaultSigmaMax = 80.0;
  static constexpr double kDefaultBetaD = 19.9;
  static constexpr double kDefaultBetaMin = 0.1;
  // Below this sigma the derivative formulas (sigma^-3 terms) are refused.
  static constexpr double kSigmaFloor = 1e-8;

  Parameterization() = default;
  explicit Parameterization(Kind kind, double sigma_min = kDefaultSigmaMin,
                            double sigma_max = kDefaultSigmaMax,
                            double beta_d = kDefaultBetaD,
                            double beta_min = kDefaultBetaMin);

  static Parameterization edm() { return Parameterization(Kind::EDM); }
  static Parameterization vp() { return Parameterization(Kind::VP); }
  static Parameterization ve() { return Parameterization(Kind::VE); }

  Kind kind() const noexcept { return kind_; }
  double sigma_min() const noexcept { return sigma_min_; }
  double sigma_max() const noexcept { return sigma_max_; }
  double beta_d() const noexcept { return beta_d_; }
  double beta_min() const noexcept { return beta_min_; }

  double sigma(double t) const;
  // Inverse of sigma(); exact closed forms for all three kinds.
  double time_of_sigma(double sigma) const;
  SigmaDerivatives sigma_derivatives(double t) const;
  ScaleDerivatives scale_derivatives(double t) const;
  double scale(double t) const { return scale_derivatives(t).value; }

  // VP exponent u(t) and its rate B(t) = du/dt. Zero for the other kinds.
  double vp_u(double t) const;
  double vp_rate(double t) const;

  double t_max() const { return time_of_sigma(sigma_max_); }
  double t_min() const { return time_of_sigma(sigma_min_); }

  bool operator==(const Parameterization&) const = default;

 private:
  void check_time(double t) const;

  Kind kind_ = Kind::EDM;
  double sigma_min_ = kDefaultSigmaMin;
  double sigma_max_ = kDefaultSigmaMax;
  double beta_d_ = kDefaultBetaD;
  double beta_min_ = kDefaultBetaMin;
};

// Karras et al. rho-schedule: N noise levels from sigma_max down to sigma_min
// followed by an exact zero, mapped to times with time_of_sigma().
TimestepSchedule edm_reference_grid(const Parameterization& p, int steps, double rho = 7.0);

}  // namespace pfode

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pfode/dynamics.hpp"
#include "pfode/metrics.hpp"
#include "pfode/oracle.hpp"
#include "pfode/parameterization.hpp"
#include "pfode/schedule.hpp"
#include "pfode/solvers.hpp"
#include "pfode/wscheduler.hpp"

namespace py = pybind11;
using namespace pfode;

namespace {

std::vector<double> as_row(const Samples& s) {
  if (s.rows() != 1) throw DomainError("expected one-dimensional samples");
  return {s.data(), s.data() + s.cols()};
}

py::dict run_to_dict(const RunReport& r) {
  py::list solvers, kappa, nfe;
  for (const auto& st : r.steps) {
    solvers.append(std::string(to_string(st.solver)));
    kappa.append(st.kappa_hat ? py::cast(*st.kappa_hat) : py::none());
    nfe.append(st.nfe);
  }
  Samples traj(r.trajectory.front().size(), r.trajectory.size());
  for (std::size_t i = 0; i < r.trajectory.size(); ++i) traj.col(i) = r.trajectory[i];
  py::dict d;
  d["final"] = r.final_state();
  d["trajectory"] = traj;
  d["solver"] = solvers;
  d["kappa_hat"] = kappa;
  d["nfe"] = nfe;
  d["total_nfe"] = r.total_nfe;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Probability-flow ODE sampling lab on analytic Gaussian-mixture denoisers";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<SingularityError>(m, "SingularityError", PyExc_ArithmeticError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::enum_<Kind>(m, "Kind").value("EDM", Kind::EDM).value("VP", Kind::VP).value("VE", Kind::VE);

  py::class_<Parameterization>(m, "Parameterization")
      .def(py::init<Kind, double, double, double, double>(), py::arg("kind"),
           py::arg("sigma_min") = Parameterization::kDefaultSigmaMin,
           py::arg("sigma_max") = Parameterization::kDefaultSigmaMax,
           py::arg("beta_d") = Parameterization::kDefaultBetaD, py::arg("beta_min") = Parameterization::kDefaultBetaMin)
      .def_static("edm", &Parameterization::edm)
      .def_static("vp", &Parameterization::vp)
      .def_static("ve", &Parameterization::ve)
      .def_property_readonly("kind", &Parameterization::kind)
      .def_property_readonly("sigma_min", &Parameterization::sigma_min)
      .def_property_readonly("sigma_max", &Parameterization::sigma_max)
      .def_property_readonly("t_max", &Parameterization::t_max)
      .def_property_readonly("t_min", &Parameterization::t_min)
      .def("sigma", &Parameterization::sigma)
      .def("time_of_sigma", &Parameterization::time_of_sigma)
      .def("scale", &Parameterization::scale)
      .def("sigma_derivatives",
           [](const Parameterization& p, double t) {
             const auto d = p.sigma_derivatives(t);
             return py::make_tuple(d.first, d.second);
           })
      .def("scale_derivatives",
           [](const Parameterization& p, double t) {
             const auto d = p.scale_derivatives(t);
             return py::make_tuple(d.value, d.first, d.second);
           })
      .def("__repr__", [](const Parameterization& p) {
        return "Parameterization('" + std::string(to_string(p.kind())) + "')";
      });

  py::class_<StepMeta>(m, "StepMeta")
      .def_readonly("eta_used", &StepMeta::eta_used)
      .def_readonly("s_hat", &StepMeta::s_hat)
      .def_readonly("linesearch_iters", &StepMeta::linesearch_iters);

  py::class_<TimestepSchedule>(m, "TimestepSchedule")
      .def_static("from_times", &TimestepSchedule::from_times)
      .def_readonly("times", &TimestepSchedule::times)
      .def_readonly("sigmas", &TimestepSchedule::sigmas)
      .def_readonly("per_step", &TimestepSchedule::per_step)
      .def_readonly("total_nfe", &TimestepSchedule::total_nfe)
      .def_property_readonly("steps", &TimestepSchedule::steps)
      .def("validate", &TimestepSchedule::validate)
      .def("__len__", &TimestepSchedule::steps);

  m.def("edm_reference_grid", &edm_reference_grid, py::arg("p"), py::arg("steps"), py::arg("rho") = 7.0);

  py::class_<EtaSchedule>(m, "EtaSchedule")
      .def(py::init([](double lo, double hi, double p) { return EtaSchedule{lo, hi, p}; }), py::arg("eta_min") = 0.02,
           py::arg("eta_max") = 0.20, py::arg("p") = 1.0)
      .def_static("constant", &EtaSchedule::constant)
      .def_readwrite("eta_min", &EtaSchedule::eta_min)
      .def_readwrite("eta_max", &EtaSchedule::eta_max)
      .def_readwrite("p", &EtaSchedule::p)
      .def("__call__", &EtaSchedule::operator(), py::arg("sigma"), py::arg("sigma_max"));

  py::class_<Denoiser>(m, "Denoiser")
      .def_property_readonly("dim", &Denoiser::dim)
      .def(
          "denoise",
          [](const Denoiser& d, const Vector& x, double sigma, bool jac) {
            const OracleEval e = d.denoise(x, sigma, jac, false);
            if (!jac) return py::cast(e.denoised);
            return py::object(py::make_tuple(e.denoised, *e.jacobian));
          },
          py::arg("x"), py::arg("sigma"), py::arg("jacobian") = false)
      .def(
          "denoise_batch",
          [](const Denoiser& d, const Samples& x, double sigma) {
            DenoiseBatch b;
            d.denoise_batch(x, sigma, {}, b);
            return b.denoised;
          },
          py::arg("x"), py::arg("sigma"));

  py::class_<GaussianMixture, Denoiser>(m, "GaussianMixture")
      .def(py::init([](const std::vector<double>& w, const std::vector<Vector>& means, const std::vector<Matrix>& covs) {
             if (w.size() != means.size() || w.size() != covs.size())
               throw DomainError("weights, means and covs must have equal length");
             std::vector<GaussianComponent> c;
             for (std::size_t k = 0; k < w.size(); ++k) c.push_back({w[k], means[k], covs[k]});
             return GaussianMixture(std::move(c));
           }),
           py::arg("weights"), py::arg("means"), py::arg("covs"))
      .def_static("isotropic", &GaussianMixture::isotropic, py::arg("dim"), py::arg("stddev"),
                  py::arg("mean") = Vector())
      .def_static("preset", &make_preset)
      .def("sample", &GaussianMixture::sample, py::arg("n"), py::arg("seed"), py::arg("stream") = 0)
      .def("sample_marginal",
           [](const GaussianMixture& gm, const Parameterization& p, double t, int n, std::uint64_t seed) {
             return sample_marginal(gm, p, t, n, seed);
           },
           py::arg("p"), py::arg("t"), py::arg("n"), py::arg("seed"));

  py::class_<ConstantVelocityField, Denoiser>(m, "ConstantVelocityField").def(py::init<Vector>());

  m.def("preset_names", &preset_names);

  m.def(
      "velocity", [](const Denoiser& d, const Parameterization& p, const Vector& x, double t) {
        return velocity(d, p, x, t).v;
      },
      py::arg("den"), py::arg("p"), py::arg("x"), py::arg("t"));
  m.def(
      "curvature",
      [](const Denoiser& d, const Parameterization& p, const Vector& x, double t, bool general) {
        return (general ? curvature_general(d, p, x, t) : curvature(d, p, x, t)).xddot;
      },
      py::arg("den"), py::arg("p"), py::arg("x"), py::arg("t"), py::arg("general") = false);
  m.def(
      "reference_flow",
      [](const Denoiser& d, const Parameterization& p, const Samples& x0, double t_from, double t_to, int substeps) {
        return reference_flow(d, p, x0, t_from, t_to, substeps);
      },
      py::arg("den"), py::arg("p"), py::arg("x0"), py::arg("t_from"), py::arg("t_to"), py::arg("substeps") = 400);

  m.def(
      "mixed_sample",
      [](const Denoiser& d, const Parameterization& p, const TimestepSchedule& s, const std::string& policy,
         double tau_k, std::optional<Vector> x0, std::uint64_t seed, bool lookahead) {
        SolverPolicy pol;
        pol.lambda = lambda_kind_from_string(policy);
        pol.tau_k = tau_k;
        pol.curvature_source = lookahead ? CurvatureSource::Lookahead : CurvatureSource::Cached;
        return run_to_dict(mixed_sample(d, p, s, pol, std::move(x0), seed));
      },
      py::arg("den"), py::arg("p"), py::arg("schedule"), py::arg("policy") = "heun", py::arg("tau_k") = 0.0,
      py::arg("x0") = py::none(), py::arg("seed") = 0, py::arg("lookahead") = false);

  m.def("max_step", &max_step, py::arg("eta"), py::arg("s_hat"), py::arg("dt_max"));
  m.def(
      "build_schedule",
      [](const Denoiser& d, const Parameterization& p, const EtaSchedule& eta, int n, std::uint64_t seed) {
        return build_schedule(d, p, eta, n, seed).schedule;
      },
      py::arg("den"), py::arg("p"), py::arg("eta") = EtaSchedule{}, py::arg("n_samples") = 256, py::arg("seed") = 0);
  m.def(
      "resample_n_steps",
      [](const Parameterization& p, const TimestepSchedule& base, double q, int n, bool realized) {
        return resample_n_steps(p, base, ResampleWeights{q}, n, realized ? EtaProxy::Realized : EtaProxy::Budget);
      },
      py::arg("p"), py::arg("base"), py::arg("q") = 0.25, py::arg("n") = 18, py::arg("realized") = false);
  m.def(
      "eta_profile",
      [](const TimestepSchedule& s, const GaussianMixture& gm, const Parameterization& p, int n, std::uint64_t seed) {
        std::vector<double> out;
        for (const auto& r : eta_profile(s, gm, p, n, seed)) out.push_back(r.eta_t);
        return out;
      },
      py::arg("schedule"), py::arg("gm"), py::arg("p"), py::arg("n_samples") = 1024, py::arg("seed") = 0);
  m.def(
      "total_bound_check",
      [](const TimestepSchedule& s, const GaussianMixture& gm, const Parameterization& p, int n, std::uint64_t seed) {
        const BoundReport r = total_bound_check(s, gm, p, n, seed);
        py::dict d;
        d["lhs"] = r.lhs;
        d["rhs"] = r.rhs;
        d["log_rhs"] = r.log_rhs;
        d["lipschitz"] = r.lipschitz;
        d["holds"] = r.holds;
        return d;
      },
      py::arg("schedule"), py::arg("gm"), py::arg("p"), py::arg("n_samples") = 256, py::arg("seed") = 0);

  m.def(
      "w2", [](const Samples& a, const Samples& b) { return w2(a, b).w2; }, py::arg("a"), py::arg("b"));
  m.def(
      "w2_1d",
      [](const Samples& a, const Samples& b, int bootstrap, std::uint64_t seed) {
        const auto r = w2_1d(as_row(a), as_row(b), bootstrap, seed);
        return py::make_tuple(r.w2, r.ci_halfwidth);
      },
      py::arg("a"), py::arg("b"), py::arg("bootstrap") = 0, py::arg("seed") = 0);
  m.def("order_of_convergence", [](const std::vector<std::pair<double, double>>& pts) {
    return order_of_convergence(pts);
  });
  m.def("spearman", [](const std::vector<double>& x, const std::vector<double>& y) { return spearman(x, y); });
}

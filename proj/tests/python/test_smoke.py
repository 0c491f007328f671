import math

import numpy as np
import pytest

import pfode


def test_parameterization_closed_forms():
    edm = pfode.Parameterization.edm()
    assert edm.sigma(80.0) == 80.0
    assert edm.sigma_derivatives(3.0) == (1.0, 0.0)
    ve = pfode.Parameterization.ve()
    assert ve.sigma_derivatives(1.0) == pytest.approx((0.5, -0.25))
    vp = pfode.Parameterization.vp()
    assert vp.sigma(1.0) == pytest.approx(math.sqrt(math.expm1(0.5 * 19.9 + 0.1)), rel=1e-14)
    s, ds, _ = vp.scale_derivatives(0.0)
    assert (s, ds) == (1.0, pytest.approx(-0.05))
    for p in (edm, vp, ve):
        assert p.sigma(p.time_of_sigma(0.37)) == pytest.approx(0.37, rel=1e-12)
    with pytest.raises(ValueError):
        vp.sigma(-1.0)


def test_reference_grid():
    g = pfode.edm_reference_grid(pfode.Parameterization.edm(), 18)
    assert len(g.times) == 19 and g.steps == 18
    assert g.sigmas[0] == 80.0 and g.sigmas[-2] == 0.002 and g.sigmas[-1] == 0.0


def test_single_gaussian_denoiser_and_flow():
    c = 0.5
    gm = pfode.GaussianMixture.isotropic(1, c)
    p = pfode.Parameterization.edm()
    x = np.array([1.3])
    d, jac = gm.denoise(x, 2.0, jacobian=True)
    gain = c * c / (c * c + 4.0)
    assert d[0] == pytest.approx(gain * 1.3, rel=1e-13)
    assert jac[0, 0] == pytest.approx(gain, rel=1e-13)
    assert pfode.velocity(gm, p, x, 2.0)[0] == pytest.approx(1.3 * 2.0 / (c * c + 4.0), rel=1e-13)
    x0 = np.array([[20.0, -4.0]])
    x1 = pfode.reference_flow(gm, p, x0, 80.0, 1.0, 800)
    expect = x0 * math.sqrt((c * c + 1.0) / (c * c + 6400.0))
    np.testing.assert_allclose(x1, expect, rtol=1e-8)


def test_custom_mixture_and_presets():
    gm = pfode.GaussianMixture([0.3, 0.7], [np.array([-1.0]), np.array([1.0])],
                               [np.array([[0.04]]), np.array([[0.09]])])
    assert gm.dim == 1
    assert "bimodal-1d" in pfode.preset_names()
    two = pfode.GaussianMixture.preset("two-moons-gmm-8")
    assert two.sample(5, 1).shape == (2, 5)
    with pytest.raises(ValueError):
        pfode.GaussianMixture([0.5], [np.array([0.0])], [np.array([[1.0]])])


def test_nfe_ledger():
    gm = pfode.GaussianMixture.preset("trimodal-1d")
    p = pfode.Parameterization.edm()
    g = pfode.edm_reference_grid(p, 18)
    heun = pfode.mixed_sample(gm, p, g, "heun", seed=3)
    euler = pfode.mixed_sample(gm, p, g, "euler", seed=3)
    step = pfode.mixed_sample(gm, p, g, "step", tau_k=1e9, seed=3)
    assert heun["total_nfe"] == 35
    assert euler["total_nfe"] == 18
    assert 18 <= step["total_nfe"] < 35
    assert step["solver"][0] == "heun"
    assert heun["trajectory"].shape == (1, 19)


def test_schedule_build_and_resample():
    gm = pfode.GaussianMixture.preset("bimodal-1d")
    p = pfode.Parameterization.edm()
    eta = pfode.EtaSchedule()
    assert eta(80.0, 80.0) == 0.20 and eta(0.0, 80.0) == 0.02
    a = pfode.build_schedule(gm, p, eta, 64, 5)
    b = pfode.build_schedule(gm, p, eta, 64, 5)
    assert a.times == b.times
    assert a.times[0] == p.t_max and a.times[-1] == 0.0
    assert all(m.eta_used > 0 for m in a.per_step)
    n = min(8, a.steps)
    r = pfode.resample_n_steps(p, a, 0.25, n)
    assert len(r.times) == n + 1
    assert r.times[0] == a.times[0] and r.times[-1] == 0.0
    assert all(x > y for x, y in zip(r.times, r.times[1:]))
    assert pfode.max_step(0.02, 4.0, 10.0) == pytest.approx(0.1)


def test_profile_and_bound():
    gm = pfode.GaussianMixture.isotropic(1, 0.5)
    p = pfode.Parameterization.edm()
    g = pfode.edm_reference_grid(p, 24)
    prof = pfode.eta_profile(g, gm, p, 256, 1)
    assert len(prof) == 24 and all(v >= 0 for v in prof)
    rep = pfode.total_bound_check(g, gm, p, 256, 1)
    assert rep["holds"] and rep["lhs"] <= rep["rhs"]


def test_metrics():
    a = np.array([[0.0, 1.0], [0.0, 0.0]])
    b = np.array([[0.0, 1.0], [1.0, 1.0]])
    assert pfode.w2(a, b) == pytest.approx(1.0)
    rng = np.random.default_rng(0)
    u = rng.normal(size=(1, 200))
    v = rng.normal(size=(1, 200)) + 0.5
    w, hw = pfode.w2_1d(u, v, bootstrap=50, seed=1)
    assert w == pytest.approx(pfode.w2(u, v), rel=1e-12)
    assert hw > 0
    pts = [(dt, dt ** 2) for dt in (0.1, 0.05, 0.025, 0.0125)]
    assert pfode.order_of_convergence(pts) == pytest.approx(2.0)
    assert pfode.spearman([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)

import math

import numpy as np
import pytest

from catsize import fitting as fitmod
from catsize import states
from catsize.datasets import MeasurementRecord, ParityFringe, WignerCut, simulate_record, uniform_grid
from catsize.errors import ValidationError
from catsize.fitting import FitProblem, fit, initial_guess, model_and_jacobian, model_jacobian_public
from catsize.states import FringeModel, WignerCatModel

TRUE = {"A": 0.57, "S": 139.24, "phi": 0.3}


def _record(theta, values, sigma, kind="wigner_cut", **meta):
    theta = np.asarray(theta, float)
    return MeasurementRecord(kind, theta, np.asarray(values, float),
                             np.broadcast_to(sigma, theta.shape).astype(float), meta)


class LooseRecord:
    """Record-like container without the ordering rule."""

    def __init__(self, settings, values, sigmas, meta=None):
        self.settings, self.values, self.sigmas = settings, values, sigmas
        self.meta = meta or {}

    def __len__(self):
        return len(self.settings)


def test_noiseless_recovery():
    th = np.linspace(-0.5, 0.5, 60)
    m = WignerCatModel(**TRUE)
    rep = fit(FitProblem(_record(th, m(th), 0.01)))
    assert rep.converged
    for k, v in TRUE.items():
        assert rep.params[k] == pytest.approx(v, abs=1e-6)
    assert rep.chi2 < 1e-12
    assert rep.dof == 57


def test_noiseless_fringe_recovery():
    th = np.linspace(-0.4, 0.4, 30)
    m = FringeModel(0.8, 8, -1.1)
    rep = fit(FitProblem(_record(th, m(th), 0.01, "parity_fringe", n=8), "fringe"))
    assert rep.params["A"] == pytest.approx(0.8, abs=1e-9)
    assert rep.params["phi"] == pytest.approx(-1.1, abs=1e-9)
    assert isinstance(rep.model(), FringeModel)


def test_zero_data_fringe_flags_phase():
    rec = _record(np.linspace(-1, 1, 20), np.zeros(20), 0.01, "parity_fringe", n=8)
    with pytest.warns(UserWarning, match="unidentifiable"):
        rep = fit(FitProblem(rec, "fringe"))
    assert rep.params["A"] == pytest.approx(0.0, abs=1e-12)
    assert np.all(np.isfinite(rep.covariance))
    assert rep.unidentifiable == ("phi",)


def test_chi2_calibration():
    rho = states.cat(5.9, damping=0.57, phi=0.3)
    good = 0
    for seed in range(40):
        rec = simulate_record(rho, WignerCut(uniform_grid()), shots=1000, seed=seed)
        rep = fit(FitProblem(rec))
        good += 0.5 <= rep.reduced_chi2 <= 1.6
    assert good >= 0.95 * 40


def test_noisy_recovery_within_three_sigma():
    rho = states.cat(5.9, damping=0.57, phi=0.3)
    hits = 0
    for seed in range(40):
        rec = simulate_record(rho, WignerCut(uniform_grid()), shots=1000, seed=100 + seed)
        rep = fit(FitProblem(rec))
        err = rep.stderr
        hits += all(abs(rep.params[k] - v) <= 3 * err[k] for k, v in TRUE.items())
    assert hits >= 0.9 * 40


def test_initial_guess_frequency():
    th = np.linspace(-0.8, 0.8, 81)
    rec = _record(th, WignerCatModel(1.0, 16.0)(th), 0.01)
    a0, s0, phi0 = initial_guess(rec)
    assert a0 == pytest.approx(1.0, abs=1e-9)
    assert s0 == pytest.approx(16.0, rel=0.2)


def test_initial_guess_zero_record():
    rec = _record(np.linspace(-1, 1, 10), np.zeros(10), 0.1)
    guess = initial_guess(rec)
    assert guess[0] == 0.0
    assert all(math.isfinite(g) for g in guess)


def test_initial_guess_needs_points():
    with pytest.raises(ValidationError):
        initial_guess(_record(np.linspace(0, 1, 5), np.zeros(5), 0.1))


def test_two_tone_record_is_flagged_not_fatal():
    th = np.linspace(-1, 1, 61)
    y = 0.5 * np.cos(4 * th) + 0.5 * np.cos(23 * th + 1.0)
    rep = fit(FitProblem(_record(th, y, 0.01)))
    assert all(math.isfinite(v) for v in rep.params.values())
    assert rep.reduced_chi2 > 10


def test_problem_validation():
    with pytest.raises(ValidationError):
        FitProblem(_record([0, 1, 2], [0, 0, 0], 0.1))
    with pytest.raises(ValidationError):
        FitProblem(_record(np.linspace(0, 1, 10), np.zeros(10), 0.0))
    with pytest.raises(ValidationError):
        FitProblem(_record(np.linspace(0, 1, 10), np.zeros(10), 0.1), "fringe")
    with pytest.raises(ValidationError):
        FitProblem(_record(np.linspace(0, 1, 10), np.zeros(10), 0.1), "gaussian")


@pytest.mark.parametrize("kind", ["wigner_cat", "fringe"])
def test_jacobian_matches_finite_differences(kind):
    rng = np.random.default_rng(11)
    th = np.linspace(-0.7, 0.7, 23)
    for _ in range(20):
        if kind == "wigner_cat":
            p = np.array([rng.uniform(0.1, 1), rng.uniform(1, 140), rng.uniform(-3, 3)])
        else:
            p = np.array([rng.uniform(0.1, 1), rng.uniform(-3, 3)])
        _, jac = model_jacobian_public(kind, p, th, n=6)
        for k in range(p.size):
            h = 1e-6 * max(1.0, abs(p[k]))
            up, dn = p.copy(), p.copy()
            up[k] += h
            dn[k] -= h
            fd = (model_jacobian_public(kind, up, th, n=6)[0]
                  - model_jacobian_public(kind, dn, th, n=6)[0]) / (2 * h)
            assert np.max(np.abs(fd - jac[:, k])) <= 1e-6


def test_reordering_invariance():
    rho = states.cat(3.0, damping=0.8, phi=0.2)
    rec = simulate_record(rho, WignerCut(uniform_grid(0.02, 61)), shots=2000, seed=3)
    base = fit(FitProblem(rec))
    perm = np.random.default_rng(0).permutation(len(rec))
    loose = LooseRecord(rec.settings[perm], rec.values[perm], rec.sigmas[perm])
    other = fit(FitProblem(loose))
    for k in base.params:
        assert other.params[k] == pytest.approx(base.params[k], rel=1e-8, abs=1e-10)
    np.testing.assert_allclose(other.covariance, base.covariance, rtol=1e-6, atol=1e-14)


def test_covariance_scales_with_sigma():
    rho = states.cat(3.0, damping=0.8)
    rec = simulate_record(rho, WignerCut(uniform_grid(0.02, 61)), shots=2000, seed=8)
    a = fit(FitProblem(rec))
    doubled = MeasurementRecord(rec.kind, rec.settings, rec.values, 2 * rec.sigmas, rec.meta)
    b = fit(FitProblem(doubled))
    np.testing.assert_allclose(b.covariance, 4 * a.covariance, rtol=1e-6, atol=1e-14)
    assert b.chi2 == pytest.approx(a.chi2 / 4, rel=1e-8)


def test_covariance_is_symmetric_psd():
    rho = states.cat(3.0, damping=0.8)
    rec = simulate_record(rho, WignerCut(uniform_grid(0.02, 61)), shots=2000, seed=8)
    cov = fit(FitProblem(rec)).covariance
    np.testing.assert_allclose(cov, cov.T)
    assert np.linalg.eigvalsh(cov).min() >= 0


def test_negative_amplitude_is_folded():
    th = np.linspace(-0.5, 0.5, 40)
    y = WignerCatModel(0.6, 30.0, 0.5)(th)
    rep = fit(FitProblem(_record(th, y, 0.01), initial=(-0.6, 30.0, 0.5 + math.pi)))
    assert rep.params["A"] == pytest.approx(0.6, abs=1e-8)
    assert rep.params["phi"] == pytest.approx(0.5, abs=1e-8)
    assert -math.pi < rep.params["phi"] <= math.pi


def test_amplitude_box_applies_to_report_only():
    th = np.linspace(-0.5, 0.5, 40)
    y = 1.2 * np.exp(-2 * th ** 2) * np.cos(2 * 4.0 * th)
    with pytest.warns(UserWarning, match="clipped"):
        rep = fit(FitProblem(_record(th, y, 0.01)))
    assert rep.params["A"] == 1.05
    assert rep.raw_params["A"] == pytest.approx(1.2, abs=1e-8)


def test_non_convergence_is_reported(monkeypatch):
    monkeypatch.setattr(fitmod, "MAX_ITER", 1)
    rho = states.cat(3.0, damping=0.8)
    rec = simulate_record(rho, WignerCut(uniform_grid(0.02, 61)), shots=200, seed=1)
    rep = fit(FitProblem(rec, initial=(0.3, 5.0, 1.0)))
    assert not rep.converged
    assert rep.iterations == 1


def test_ghz_fringe_amplitude():
    a = math.sqrt(5 / 8)
    rho = states.ghz(8, damping=a, phi=math.pi / 2)
    rec = simulate_record(rho, ParityFringe(uniform_grid(math.pi / 80, 41)), shots=2000, seed=2)
    rep = fit(FitProblem(rec, "fringe"))
    assert rep.params["A"] == pytest.approx(a, abs=4 * rep.stderr["A"])


def test_internal_jacobian_shapes():
    f, j = model_and_jacobian("wigner_cat", (0.5, 3.0, 0.1), np.zeros(4))
    assert f.shape == (4,) and j.shape == (4, 3)

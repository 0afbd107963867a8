import math
import warnings

import numpy as np
import pytest

from catsize import bounds, states
from catsize.bounds import (
    ProbabilityPair,
    VarianceRecord,
    bhattacharyya_bound,
    fitted_bound,
    histogram_bound,
    mc_interval,
    optimal_pair,
    pair_bound,
    pairwise_scan,
    shortcut_a2s,
    static_bound,
    two_outcome_bound,
)
from catsize.datasets import (
    FockHistogramPair,
    MeasurementRecord,
    WignerCut,
    simulate_record,
    uniform_grid,
)
from catsize.errors import ValidationError
from catsize.qfi import qfi_exact
from catsize.space import fock_operators
from catsize.states import FringeModel, WignerCatModel, exact_displaced_parity

import sweep


# uncertainty-relation bound ---------------------------------------------------

def test_static_vacuum_saturates():
    r = static_bound(VarianceRecord(variance=1.0, z_mean=-2.0))
    assert r.qfi_lower == pytest.approx(1.0)
    assert r.neff_lower == pytest.approx(1.0)


@pytest.mark.parametrize("db,expected", [(10.0, 10.0), (15.0, 31.62)])
def test_static_decibels(db, expected):
    r = static_bound(VarianceRecord(squeezing_db=db))
    assert r.neff_lower == pytest.approx(expected, abs=0.005)


def test_static_spin_inverse_parameter():
    r = static_bound(VarianceRecord.from_inverse_parameter(70.8, system="spin", size=500_000))
    assert r.neff_lower == pytest.approx(70.8)


def test_static_decibel_interval_is_asymmetric():
    r = static_bound(VarianceRecord(squeezing_db=18.5, db_sigma=0.3, system="spin"))
    lo, hi = r.neff_interval
    assert r.neff_lower - lo == pytest.approx(4.7, abs=0.05)
    assert hi - r.neff_lower == pytest.approx(5.1, abs=0.05)


def test_static_negative_db_sign():
    r = static_bound(VarianceRecord(squeezing_db=3.0, db_sign=-1))
    assert r.neff_lower == pytest.approx(10 ** -0.3)


@pytest.mark.parametrize("r", [0.2, 0.6, 1.15])
def test_static_tight_for_squeezed_vacuum(r):
    rho = states.squeezed(r)
    ops = fock_operators(rho.space)
    x = ops.quadrature(0.0)
    y = ops.quadrature(-math.pi / 2)
    z = 1j * (x.dense() @ y.dense() - y.dense() @ x.dense())
    z_mean = float(np.trace(rho.matrix @ z).real)
    b = static_bound(VarianceRecord(variance=rho.variance(y), z_mean=z_mean))
    assert b.qfi_lower == pytest.approx(qfi_exact(rho, x).value, abs=1e-6)


def test_static_delta_method():
    r = static_bound(VarianceRecord(variance=0.5, variance_sigma=0.01, z_mean=2.0, z_sigma=0.02))
    # b = z^2 / (4 v); db/dv = -z^2/(4 v^2) = -4, db/dz = z/(2v) = 2
    assert r.details["sigma"] == pytest.approx(math.hypot(4 * 0.01, 2 * 0.02))


def test_static_validation():
    with pytest.raises(ValidationError):
        VarianceRecord(variance=0.0, z_mean=1.0)
    with pytest.raises(ValidationError):
        VarianceRecord(variance=1.0, z_mean=1.0, squeezing_db=3.0)
    with pytest.raises(ValidationError):
        VarianceRecord(variance=1.0)
    with pytest.raises(ValidationError):
        VarianceRecord()


# overlap bound ----------------------------------------------------------------

def test_equal_distributions_give_zero():
    r = bhattacharyya_bound(ProbabilityPair([0.3, 0.7], [0.3, 0.7], 0.1))
    assert r.qfi_lower == 0.0
    assert not r.significant


def test_orthogonal_distributions():
    r = bhattacharyya_bound(ProbabilityPair([1.0, 0.0], [0.0, 1.0], math.pi / 2))
    assert r.qfi_lower == pytest.approx(1.0)


def test_small_step_accuracy():
    # local Fisher limit: (dW/dtheta)^2 / (4 (1 - W^2)); arccos(1 - h) would lose it
    w1, w2, dt = 0.3, 0.3 + 1e-9, 1e-8
    fisher = 1.0 / (1 - w1 * w1) * (1e-9 / dt) ** 2 / 4
    assert float(two_outcome_bound(w1, w2, dt)) == pytest.approx(fisher, rel=1e-5)


def test_pair_validation():
    with pytest.raises(ValidationError):
        ProbabilityPair([0.5, 0.5], [0.5, 0.5], 0.0)
    with pytest.raises(ValidationError):
        ProbabilityPair([0.6, 0.6], [0.5, 0.5], 0.1)
    with pytest.raises(ValidationError):
        ProbabilityPair([0.5, 0.5], [1.0], 0.1)


@pytest.mark.parametrize("alpha", [2.0, 2.8, 5.9])
def test_cat_tightness(alpha):
    rho = states.cat(alpha)
    w0 = exact_displaced_parity(rho, 0.0, 0.0)
    w1 = exact_displaced_parity(rho, 0.0, 1e-3)
    p = [(1 + w0) / 2, (1 - w0) / 2]
    q = [(1 + w1) / 2, (1 - w1) / 2]
    b = bhattacharyya_bound(ProbabilityPair(p, q, 1e-3)).qfi_lower
    assert b == pytest.approx(4 * alpha ** 2 + 1, rel=1e-3)


def test_bhattacharyya_mc_is_deterministic():
    pair = ProbabilityPair([0.6, 0.4], [0.4, 0.6], 0.1, [0.01, 0.01], [0.01, 0.01])
    a = bhattacharyya_bound(pair, seed=3)
    b = bhattacharyya_bound(pair, seed=3)
    assert a.to_dict() == b.to_dict()
    assert a.interval[0] < a.qfi_lower < a.interval[1]


def test_mc_interval_recentres():
    lo, hi = mc_interval(10.0, np.array([1.0, 2.0, 3.0, 4.0, 5.0] * 20))
    assert lo < 10.0 < hi


# pairwise scan -----------------------------------------------------------------

def _record(thetas, values, sigmas=None, **meta):
    values = np.asarray(values, float)
    sigmas = np.zeros_like(values) if sigmas is None else np.asarray(sigmas, float)
    return MeasurementRecord("wigner_cut", np.asarray(thetas, float), values, sigmas, meta)


def test_scan_constant_values_give_zero():
    scan = pairwise_scan(_record([0.0, 0.1], [0.9, 0.9]), max_gap=1)
    assert len(scan) == 1
    assert scan.results[0].qfi_lower == 0.0
    assert scan.best is None


def test_scan_noiseless_cat_limit():
    m = WignerCatModel(1.0, 16.0)
    th = np.array([0.0, 1e-3])
    scan = pairwise_scan(_record(th, m(th)), max_gap=1)
    assert scan.results[0].qfi_lower == pytest.approx(17.0, rel=1e-3)


def test_scan_pair_count_and_gaps():
    th = uniform_grid(0.02, 11)
    scan = pairwise_scan(_record(th, WignerCatModel(0.5, 30.0)(np.array(th))), max_gap=3)
    assert len(scan) == 10 + 9 + 8
    assert {r.details["gap"] for r in scan} == {1, 2, 3}
    assert len(scan.by_gap(2)) == 9


def test_scan_validation():
    with pytest.raises(ValidationError):
        pairwise_scan(_record([0.0], [0.5]))
    with pytest.raises(ValidationError):
        pairwise_scan(_record([0.0, 0.1], [0.5, 0.4]), max_gap=0)
    with pytest.raises(ValidationError):
        pairwise_scan(_record([0.0, 0.1, 0.2], [0.5, 0.4, 0.3], [0.01, 0.0, 0.01]))


def test_scan_clips_and_flags():
    rec = _record([0.0, 0.1], [1.02, 0.5], [0.01, 0.01])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        scan = pairwise_scan(rec, max_gap=1, mc_samples=200)
    assert scan.results[0].details["clipped"]


def test_scan_is_deterministic_and_seed_dependent():
    rho = states.cat(3.0, damping=0.7)
    rec = simulate_record(rho, WignerCut(uniform_grid(0.02, 21)), shots=500, seed=4)
    a = pairwise_scan(rec, mc_samples=300, seed=9)
    b = pairwise_scan(rec, mc_samples=300, seed=9)
    c = pairwise_scan(rec, mc_samples=300, seed=10)
    assert [r.interval for r in a] == [r.interval for r in b]
    assert [r.interval for r in a] != [r.interval for r in c]
    assert [r.inputs_digest for r in a] == [r.inputs_digest for r in b]


def test_scan_matches_direct_overlap_bound_on_exact_records():
    rho = states.cat(2.5, damping=0.8)
    rec = simulate_record(rho, WignerCut(uniform_grid(0.05, 9)))
    scan = pairwise_scan(rec, max_gap=2)
    for r in scan:
        i, j = r.details["i"], r.details["j"]
        w = rec.values
        p = [(1 + w[i]) / 2, (1 - w[i]) / 2]
        q = [(1 + w[j]) / 2, (1 - w[j]) / 2]
        direct = bhattacharyya_bound(ProbabilityPair(p, q, rec.settings[j] - rec.settings[i]))
        assert r.qfi_lower == pytest.approx(direct.qfi_lower, abs=1e-12)


def test_kienzler_like_ordering():
    # sigma ~ 0.05 per point: nearest neighbours near the centre win
    rho = states.cat(5.9, damping=0.57)
    rec = simulate_record(rho, WignerCut(uniform_grid()), shots=400, seed=1)
    scan = pairwise_scan(rec, max_gap=3, mc_samples=500, seed=1)
    best = {g: max(r.qfi_lower for r in scan.by_gap(g)) for g in (1, 2, 3)}
    assert best[1] > best[3]
    centre = [r.qfi_lower for r in scan.by_gap(1) if abs(r.details["center"]) < 0.1]
    tail = [r.qfi_lower for r in scan.by_gap(1) if abs(r.details["center"]) > 0.5]
    assert np.median(centre) > np.median(tail)


def test_delta_and_mc_agree_in_regime():
    rng = np.random.default_rng(5)
    checked = 0
    for _ in range(40):
        w1 = rng.uniform(-0.9, 0.9)
        w2 = w1 + rng.choice([-1, 1]) * rng.uniform(0.15, 0.4)
        if abs(w2) > 0.95:
            continue
        sig = 0.05 * min(abs(w1), abs(w2))
        if sig < 5e-3:
            continue
        rec = _record([0.0, 0.05], [w1, w2], [sig, sig])
        r = pairwise_scan(rec, max_gap=1, mc_samples=4000, seed=checked).results[0]
        assert r.details["mc_half_width"] == pytest.approx(r.details["delta_sigma"], rel=0.2)
        checked += 1
    assert checked >= 10


# model-based bounds -------------------------------------------------------------

def test_fitted_ideal_limit():
    assert fitted_bound(WignerCatModel(1.0, 16.0, 0.0)).qfi_lower == pytest.approx(17.0,
                                                                                   abs=1e-3)


def test_fitted_kienzler_phase_half_pi():
    m = WignerCatModel(0.57, 139.24, math.pi / 2)
    f = fitted_bound(m).qfi_lower
    s = shortcut_a2s(m).qfi_lower
    assert f >= 0.57 ** 2 * 139.24 - 1e-3
    assert s <= f + 1e-6


def test_fitted_ghz_five():
    a = math.sqrt(5.0 / 8.0)
    r = fitted_bound(FringeModel(a, 8, math.pi / 2))
    assert r.neff_lower == pytest.approx(5.0, abs=1e-3)


def test_fitted_pinned_limit_richardson():
    m = WignerCatModel(0.57, 139.24, math.pi / 2)
    target = 0.57 ** 2 * 139.24
    e1 = fitted_bound(m, pinned=(0.0, 1e-2)).qfi_lower - target
    e2 = fitted_bound(m, pinned=(0.0, 1e-3)).qfi_lower - target
    assert abs(e2) < abs(e1)
    # O(theta^2): a tenfold smaller step shrinks the error about a hundredfold
    assert abs(e2) < abs(e1) / 50
    assert abs((100 * (target + e2) - (target + e1)) / 99 - target) < 1e-3 * target


def test_fitted_rejects_degenerate_pin():
    with pytest.raises(ValidationError):
        fitted_bound(WignerCatModel(0.5, 16.0), pinned=(0.1, 0.1))


def test_fitted_uncertainty_from_covariance():
    cov = np.diag([1e-4, 1.0, 1e-3])
    r = fitted_bound(WignerCatModel(0.57, 139.24, math.pi / 2, cov))
    g = r.details["gradient"]
    assert r.details["sigma"] == pytest.approx(math.sqrt(g @ cov @ g))
    assert r.significant


def test_fitted_invalid_covariance_warns():
    cov = np.diag([-1.0, 1.0, 1.0])
    with pytest.warns(UserWarning):
        r = fitted_bound(WignerCatModel(0.5, 16.0, 0.0, cov))
    assert r.interval is None
    assert not r.significant


@pytest.mark.parametrize("s", [16.0, 60.0])
def test_monotone_in_damping(s):
    amps = np.linspace(0.1, 1.0, 7)
    f = [fitted_bound(WignerCatModel(a, s, 0.4)).qfi_lower for a in amps]
    c = [shortcut_a2s(WignerCatModel(a, s, 0.4)).qfi_lower for a in amps]
    assert np.all(np.diff(f) >= -1e-9)
    assert np.all(np.diff(c) >= 0)


def test_optimal_pair_beats_dense_grid():
    # oracle: exhaustive pair grid on the model
    m = WignerCatModel(0.6, 40.0, 0.7)
    t1, t2, b = optimal_pair(m)
    ts = np.linspace(-0.6, 0.6, 241)
    grid = max(pair_bound(m, ts[i], ts[j]) for i in range(len(ts))
               for j in range(i + 1, min(i + 4, len(ts))))
    assert b >= grid - 1e-9


def test_shortcut_values():
    assert shortcut_a2s(WignerCatModel(0.44, 11.8)).neff_lower == pytest.approx(2.2845, abs=1e-4)
    assert round(shortcut_a2s(WignerCatModel(0.44, 11.8)).neff_lower, 1) == 2.3
    assert shortcut_a2s(WignerCatModel(1.0, 25.0)).qfi_lower == pytest.approx(25.0)
    assert shortcut_a2s(WignerCatModel(0.0, 25.0)).qfi_lower == 0.0
    r = shortcut_a2s(FringeModel(math.sqrt(5 / 8), 8))
    assert r.neff_lower == pytest.approx(5.0)
    assert r.details["approximate"]


def test_damped_cat_qfi_is_one_above_shortcut():
    for alpha, a, phi in [(2.6, 0.3, 0.2), (3.2, 0.8, -1.0)]:
        rho = states.cat(alpha, phi=phi, damping=a)
        q = qfi_exact(rho, fock_operators(rho.space).quadrature(0.0)).value
        m = WignerCatModel.from_alpha(alpha, a, phi)
        assert shortcut_a2s(m).qfi_lower == pytest.approx(q - 1, abs=1e-4)
        assert fitted_bound(m).qfi_lower <= q


# Fock histograms -----------------------------------------------------------------

def test_histogram_identical_not_significant():
    f = np.array([0.2, 0.5, 0.3])
    r = histogram_bound(f, f, 0.1, 0.01 * np.ones(3), 0.01 * np.ones(3))
    assert r.qfi_lower == 0.0
    assert not r.significant


def test_histogram_bin_mismatch():
    with pytest.raises(ValidationError):
        histogram_bound([0.5, 0.5], [1.0], 0.1)


def test_histogram_at_least_parity_bound():
    rho = states.cat(2.0)
    rec = simulate_record(rho, FockHistogramPair(1e-3))
    h = histogram_bound(rec.values, rec.values_q, 1e-3).qfi_lower
    w0 = exact_displaced_parity(rho, 0.0, 0.0)
    w1 = exact_displaced_parity(rho, 0.0, 1e-3)
    par = float(two_outcome_bound(w0, w1, 1e-3))
    assert h >= par - 1e-6


def test_noisy_histograms_mostly_not_significant():
    rho = states.cat(2.0)
    flags = []
    for seed in range(10):
        rec = simulate_record(rho, FockHistogramPair(1e-3), shots=1000, seed=seed)
        r = histogram_bound(rec.values, rec.values_q, 1e-3, rec.sigmas, rec.sigmas_q,
                            mc_samples=500, seed=seed)
        flags.append(r.significant)
    assert sum(flags) <= 3


# soundness ------------------------------------------------------------------------

def test_soundness_sweep_subset():
    checks, violations = sweep.run(seed=7, count=20)
    assert len(checks) == 20 * len(sweep.OPERATIONS)
    assert violations == []


def test_bound_result_invariants():
    r = bounds.BoundResult(2.0, 1.0, (2.5, 3.0), "static", normalization=2.0)
    assert r.interval[0] <= r.qfi_lower <= r.interval[1]
    d = r.to_dict()
    assert d["neff_interval"] == [1.0, 1.5]
    assert len(r.inputs_digest) == 16

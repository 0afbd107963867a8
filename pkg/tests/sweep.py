"""Soundness sweep shared by the unit and acceptance suites.

Every bound computed from data generated exactly by a state must stay below
the exact QFI of the generator that produced the data.
"""

import math

import numpy as np
import scipy.linalg as sla

from catsize import bounds, states
from catsize.datasets import MeasurementRecord, ParityFringe, simulate_record
from catsize.fitting import FitProblem, fit
from catsize.qfi import optimize_generator, qfi_exact
from catsize.space import fock_operators, spin_operators

from conftest import random_hermitian, random_state

TOL = 1e-7
OPERATIONS = ("static", "bhattacharyya", "pairwise", "histogram", "fitted", "shortcut")


def _family_generator(rng, rho):
    if rho.space.kind == "fock":
        return fock_operators(rho.space).quadrature(rng.uniform(-math.pi, math.pi)).dense()
    axis = rng.normal(size=3)
    return spin_operators(rho.space).collective(axis / np.linalg.norm(axis)).dense()


def _evolve(rho_m, x, theta):
    u = sla.expm(-1j * theta * x)
    return u @ rho_m @ u.conj().T


def _diag_in(basis, m):
    p = np.einsum("ik,ij,jk->k", basis.conj(), m, basis).real
    p = np.clip(p, 0, None)
    return p / p.sum()


def _random_unitary(rng, d):
    return sla.expm(-1j * random_hermitian(rng, d))


def check_state(rng, rho):
    """Bounds from data generated by ``rho``; returns ``[(op, bound, qfi)]``."""
    x = _family_generator(rng, rho)
    m = rho.matrix
    d = m.shape[0]
    q = qfi_exact(rho, x).value
    q_opt = optimize_generator(rho)[1].value
    assert q <= q_opt + 1e-9
    out = []

    y = random_hermitian(rng, d)
    z = 1j * (x @ y - y @ x)
    var_y = rho.variance(y)
    z_mean = float(np.trace(m @ z).real)
    rec = bounds.VarianceRecord(variance=var_y, z_mean=z_mean)
    out.append(("static", bounds.static_bound(rec).qfi_lower, q))

    delta = 10 ** rng.uniform(-3, 0)
    basis = _random_unitary(rng, d)
    p = _diag_in(basis, m)
    pq = _diag_in(basis, _evolve(m, x, delta))
    pair = bounds.ProbabilityPair(p, pq, delta)
    out.append(("bhattacharyya", bounds.bhattacharyya_bound(pair).qfi_lower, q))

    signs = rng.choice([-1.0, 1.0], size=d)
    u = _random_unitary(rng, d)
    parity = (u * signs) @ u.conj().T
    thetas = np.sort(rng.uniform(-1.5, 1.5, size=12))
    w = np.array([np.trace(parity @ _evolve(m, x, t)).real for t in thetas])
    rec = MeasurementRecord("wigner_cut", thetas, np.clip(w, -1, 1), np.zeros_like(w),
                            {"generator_scale": 1.0})
    scan = bounds.pairwise_scan(rec, max_gap=3, mc_samples=0)
    out.append(("pairwise", max(r.qfi_lower for r in scan), q))

    eig = np.linalg.eigh(x if rho.space.kind == "spin" else np.diag(np.arange(d)) + 0j)[1]
    t1 = rng.uniform(-1, 1)
    f = _diag_in(eig, _evolve(m, x, t1))
    g = _diag_in(eig, _evolve(m, x, t1 + delta))
    out.append(("histogram", bounds.histogram_bound(f, g, delta).qfi_lower, q))
    return out


def check_ghz(rng):
    """Fitted and shortcut bounds for a random damped GHZ fringe."""
    n = int(rng.integers(2, 9))
    a = rng.uniform(0.05, 1.0)
    phi = rng.uniform(-math.pi, math.pi)
    rho = states.ghz(n, damping=a, phi=phi)
    q = qfi_exact(rho, spin_operators(rho.space).collective([0, 0, 1])).value
    thetas = np.linspace(-math.pi / n, math.pi / n, 21)
    exact = simulate_record(rho, ParityFringe(thetas))
    rec = MeasurementRecord("parity_fringe", exact.settings, exact.values,
                            np.full(len(exact), 1e-3), exact.meta)
    model = fit(FitProblem(rec, "fringe")).model()
    return [("fitted", bounds.fitted_bound(model).qfi_lower, q),
            ("shortcut", bounds.shortcut_a2s(model).qfi_lower, q)]


def run(seed=2026, count=100):
    """Run the sweep; returns ``(checks, violations)``."""
    rng = np.random.default_rng(seed)
    checks, violations = [], []
    for i in range(count):
        rho = random_state(rng, "fock" if i % 2 == 0 else "spin")
        for op, b, q in check_state(rng, rho) + check_ghz(rng):
            checks.append((i, op, b, q))
            if b > q + TOL:
                violations.append((i, op, b, q))
    return checks, violations

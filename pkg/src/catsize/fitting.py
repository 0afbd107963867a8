"""Weighted nonlinear least squares for parity fringes.

Models
------
``wigner_cat``: ``A exp(-2 theta^2) cos(2 sqrt(S) theta + phi)``, fitted in the
internal coordinates ``(A, sqrt(S), phi)`` and reported as ``(A, S, phi)``.

``fringe``: ``A cos(N theta + phi)`` with ``N`` fixed.

The minimizer is a Levenberg-Marquardt iteration with Marquardt diagonal
scaling.  Parameter covariance is the inverse of the weighted normal matrix
``J^T W J`` at the optimum (not rescaled by chi^2/dof).
"""

from dataclasses import dataclass, field
import math
import warnings

import numpy as np

from .errors import FitError, ValidationError
from .states import FringeModel, WignerCatModel

MAX_ITER = 500
TOL = 1e-10
A_BOX = (0.0, 1.05)


@dataclass
class FitProblem:
    record: object
    model: str = "wigner_cat"
    n: int = None
    initial: tuple = None

    def __post_init__(self):
        if self.model not in ("wigner_cat", "fringe"):
            raise ValidationError(f"unknown model {self.model!r}")
        if self.model == "fringe":
            if self.n is None:
                n = self.record.meta.get("n")
                if n is None:
                    raise ValidationError("fringe model needs the particle number N")
                self.n = int(n)
        npar = 3 if self.model == "wigner_cat" else 2
        if len(self.record) < npar + 1:
            raise ValidationError(f"need at least {npar + 1} points for {npar} parameters")
        if np.any(self.record.sigmas <= 0):
            raise ValidationError("every sigma must be positive for a weighted fit")

    @property
    def param_names(self):
        return ("A", "S", "phi") if self.model == "wigner_cat" else ("A", "phi")


@dataclass
class FitReport:
    model_kind: str
    params: dict
    covariance: np.ndarray
    chi2: float
    dof: int
    converged: bool
    iterations: int
    n: int = None
    raw_params: dict = field(default_factory=dict)
    unidentifiable: tuple = ()
    warnings: list = field(default_factory=list)

    @property
    def stderr(self):
        return dict(zip(self.params, np.sqrt(np.clip(np.diag(self.covariance), 0, None))))

    @property
    def reduced_chi2(self):
        return self.chi2 / self.dof if self.dof > 0 else math.nan

    def model(self):
        p = self.params
        if self.model_kind == "wigner_cat":
            return WignerCatModel(p["A"], p["S"], p["phi"], self.covariance)
        return FringeModel(p["A"], self.n, p["phi"], self.covariance)

    def to_dict(self):
        return {
            "model": self.model_kind,
            "params": self.params,
            "stderr": self.stderr,
            "covariance": self.covariance.tolist(),
            "chi2": self.chi2,
            "dof": self.dof,
            "reduced_chi2": self.reduced_chi2,
            "converged": self.converged,
            "iterations": self.iterations,
            "unidentifiable": list(self.unidentifiable),
            "warnings": list(self.warnings),
        }


# ---------------------------------------------------------------------------
# models in internal coordinates
# ---------------------------------------------------------------------------

def model_and_jacobian(kind, p, theta, n=None):
    """Model values and analytic Jacobian in internal coordinates."""
    theta = np.asarray(theta, dtype=float)
    if kind == "wigner_cat":
        a, s, ph = p
        env = np.exp(-2 * theta ** 2)
        arg = 2 * s * theta + ph
        c, sn = np.cos(arg), np.sin(arg)
        f = a * env * c
        jac = np.column_stack([env * c, -a * env * sn * 2 * theta, -a * env * sn])
        return f, jac
    a, ph = p
    arg = n * theta + ph
    c, sn = np.cos(arg), np.sin(arg)
    return a * c, np.column_stack([c, -a * sn])


def model_jacobian_public(kind, params, theta, n=None):
    """Jacobian with respect to the reported parameters ``(A, S, phi)`` / ``(A, phi)``."""
    if kind == "wigner_cat":
        a, big_s, ph = params
        s = math.sqrt(big_s)
        f, jac = model_and_jacobian(kind, (a, s, ph), theta)
        jac = jac.copy()
        jac[:, 1] /= 2 * s
        return f, jac
    return model_and_jacobian(kind, params, theta, n)


# ---------------------------------------------------------------------------
# initial guess
# ---------------------------------------------------------------------------

def _fourier_peak(theta, y, weights):
    span = theta[-1] - theta[0]
    step = np.min(np.diff(theta))
    omegas = np.linspace(0.0, math.pi / step, 4096)
    comp = (weights * y) @ np.exp(-1j * np.outer(theta, omegas))
    k = int(np.argmax(np.abs(comp)))
    omega = omegas[k]
    # sharpen the peak with a projection scan over one resolution width
    width = 2 * math.pi / span if span > 0 else omegas[1]
    best = (math.inf, omega)
    env = np.exp(-2 * theta ** 2)
    for w in np.linspace(max(omega - width, 0.0), omega + width, 201):
        basis = np.column_stack([env * np.cos(w * theta), env * np.sin(w * theta)])
        coef, *_ = np.linalg.lstsq(basis * np.sqrt(weights)[:, None], y * np.sqrt(weights),
                                   rcond=None)
        resid = float(np.sum(weights * (y - basis @ coef) ** 2))
        if resid < best[0]:
            best = (resid, w)
    return best[1]


def initial_guess(record, kind="wigner_cat", n=None):
    """Starting parameters ``(A, S, phi)`` or ``(A, phi)`` from the data.

    ``A`` is the largest absolute value; the fringe frequency comes from the
    peak of the discrete Fourier transform (sharpened by a projection scan);
    ``phi`` is the phase of the Fourier component at that frequency.
    """
    if len(record) < 8:
        raise ValidationError("initial guess needs at least 8 points")
    order = np.argsort(record.settings, kind="stable")
    theta, y = record.settings[order], record.values[order]
    sig = record.sigmas[order]
    weights = np.where(sig > 0, 1.0 / np.where(sig > 0, sig, 1.0) ** 2, 1.0)
    weights = weights / weights.max()
    a0 = float(np.max(np.abs(y)))
    if kind == "fringe":
        if n is None:
            n = int(record.meta["n"])
        comp = np.sum(weights * y * np.exp(-1j * n * theta))
        phi0 = float(np.angle(comp)) if abs(comp) > 0 else 0.0
        return (a0, phi0)
    if a0 == 0:
        return (0.0, 1.0, 0.0)
    omega = _fourier_peak(theta, y, weights)
    env = np.exp(-2 * theta ** 2)
    comp = np.sum(weights * env * y * np.exp(-1j * omega * theta))
    phi0 = float(np.angle(comp)) if abs(comp) > 0 else 0.0
    s0 = max((omega / 2) ** 2, 1e-6)
    return (a0, s0, phi0)


# ---------------------------------------------------------------------------
# Levenberg-Marquardt
# ---------------------------------------------------------------------------

def _wrap(phi):
    w = math.remainder(phi, 2 * math.pi)
    return math.pi if math.isclose(w, -math.pi) else w


def levenberg_marquardt(resid_jac, p0, max_iter=MAX_ITER, tol=TOL):
    """Minimize ``sum r^2``; ``resid_jac(p)`` returns ``(r, dr/dp)``.

    Returns ``(p, chi2, jac, converged, iterations)``.
    """
    p = np.asarray(p0, dtype=float).copy()
    r, jac = resid_jac(p)
    chi2 = float(r @ r)
    lam = 1e-3
    for it in range(1, max_iter + 1):
        h = jac.T @ jac
        g = jac.T @ r
        d = np.diag(h).copy()
        d[d <= 0] = max(float(d.max()), 1.0) * 1e-12 if d.size and d.max() > 0 else 1.0
        while True:
            try:
                step = np.linalg.solve(h + lam * np.diag(d), -g)
            except np.linalg.LinAlgError:
                lam *= 10
                if lam > 1e20:
                    return p, chi2, jac, False, it
                continue
            break
        p_new = p + step
        r_new, jac_new = resid_jac(p_new)
        chi2_new = float(r_new @ r_new)
        small_step = np.linalg.norm(step) < tol * (1 + np.linalg.norm(p))
        if np.isfinite(chi2_new) and chi2_new <= chi2:
            rel = (chi2 - chi2_new) / max(chi2, 1e-300)
            p, r, jac, chi2 = p_new, r_new, jac_new, chi2_new
            lam = max(lam / 10, 1e-12)
            if rel < tol or small_step or chi2 == 0.0:
                return p, chi2, jac, True, it
        else:
            lam *= 10
            if small_step or lam > 1e20:
                return p, chi2, jac, True, it
    return p, chi2, jac, False, max_iter


def fit(problem):
    """Weighted least-squares fit of a parity record.  See module docstring."""
    rec = problem.record
    theta, y, sig = rec.settings, rec.values, rec.sigmas
    kind, n = problem.model, problem.n
    notes = []
    if problem.initial is not None:
        start = tuple(problem.initial)
    else:
        start = initial_guess(rec, kind, n)
    if kind == "wigner_cat":
        p0 = np.array([start[0], math.sqrt(max(start[1], 0.0)), start[2]])
    else:
        p0 = np.array(start, dtype=float)

    def resid_jac(p):
        f, j = model_and_jacobian(kind, p, theta, n)
        return (f - y) / sig, j / sig[:, None]

    p, chi2, jac, converged, iters = levenberg_marquardt(resid_jac, p0, max_iter=MAX_ITER)
    if not np.all(np.isfinite(p)):
        raise FitError("fit diverged to non-finite parameters")

    # sign convention: A >= 0, phi wrapped to (-pi, pi]
    flip = np.ones_like(p)
    if p[0] < 0:
        p[0] = -p[0]
        p[-1] += math.pi
        flip[0] = -1.0
    p[-1] = _wrap(p[-1])
    jac = jac * flip[None, :]

    h = jac.T @ jac
    evals, evecs = np.linalg.eigh(h)
    names = problem.param_names
    unident = ()
    if evals[-1] <= 0 or evals[0] <= 1e-12 * evals[-1]:
        null = evecs[:, evals <= 1e-12 * max(evals[-1], 1e-300)]
        unident = tuple(names[k] for k in range(len(names)) if np.any(np.abs(null[k]) > 0.5))
        notes.append(f"normal matrix is singular; unidentifiable: {', '.join(unident)}")
        warnings.warn(notes[-1])
        cov_int = np.linalg.pinv(h)
    else:
        cov_int = np.linalg.inv(h)
    cov_int = 0.5 * (cov_int + cov_int.T)

    if kind == "wigner_cat":
        a, s, ph = p
        t = np.diag([1.0, 2 * s, 1.0])
        cov = t @ cov_int @ t.T
        raw = {"A": float(a), "S": float(s * s), "phi": float(ph)}
    else:
        cov = cov_int
        raw = {"A": float(p[0]), "phi": float(p[1])}
    params = dict(raw)
    if not A_BOX[0] <= raw["A"] <= A_BOX[1]:
        params["A"] = float(min(max(raw["A"], A_BOX[0]), A_BOX[1]))
        notes.append(f"fitted A = {raw['A']:.6g} outside {A_BOX}; reported value clipped")
        warnings.warn(notes[-1])
    if not converged:
        notes.append(f"no convergence after {iters} iterations")
    dof = len(rec) - len(names)
    return FitReport(kind, params, cov, float(chi2), dof, bool(converged), iters, n, raw,
                     unident, notes)

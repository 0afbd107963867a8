"""Reference states, closed-form effective sizes and fringe models.

Phase-space states live on a truncated Fock space whose cutoff follows
:func:`catsize.space.default_cutoff` unless given.  The amplitude tail beyond
``cutoff - 5`` must stay below ``1e-10`` or a :class:`TruncationError` is
raised.

Two measurement models are provided:

* the Wigner cut of a damped cat, ``W(theta) = A exp(-2 theta^2) cos(2 sqrt(S) theta + phi)``,
  where ``theta`` is the parameter of ``exp(-i theta x)``;
* the spin parity fringe ``P(theta) = A cos(N theta + phi)``, where ``theta`` is
  the physical rotation angle of ``exp(-i theta J_z)``.  In units of the
  collective generator ``X_z = 2 J_z`` the parameter is ``theta / 2``; see
  ``generator_scale``.
"""

from dataclasses import dataclass, field, replace
import math
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln

from .errors import TruncationError, ValidationError
from .space import (
    MAX_CUTOFF,
    TAIL_LEVELS,
    TAIL_TOL,
    DensityMatrix,
    SpaceSpec,
    check_truncation,
    default_cutoff,
    eig_hermitian,
    fock_operators,
    spin_operators,
)


# ---------------------------------------------------------------------------
# kets
# ---------------------------------------------------------------------------

def _check_amplitude_tail(amps, what):
    """``amps`` are exact amplitudes of a unit vector truncated at the cutoff."""
    kept = float(np.sum(np.abs(amps[: len(amps) - TAIL_LEVELS]) ** 2))
    tail = 1.0 - kept
    if tail >= TAIL_TOL:
        raise TruncationError(
            f"{what}: amplitude tail {tail:.3g} above {TAIL_TOL:g} at cutoff "
            f"{len(amps)}; raise the cutoff"
        )


def coherent_ket(alpha, cutoff):
    alpha = complex(alpha)
    n = np.arange(cutoff)
    if alpha == 0:
        amps = np.zeros(cutoff, dtype=complex)
        amps[0] = 1.0
        return amps
    r = abs(alpha)
    logmag = -0.5 * r * r + n * math.log(r) - 0.5 * gammaln(n + 1)
    amps = np.exp(logmag) * np.exp(1j * n * np.angle(alpha))
    _check_amplitude_tail(amps, f"coherent state alpha={alpha:.4g}")
    return amps


def squeezed_vacuum_ket(r, cutoff):
    """Squeezed vacuum with the ``x`` quadrature anti-squeezed (Var x = e^{2r})."""
    amps = np.zeros(cutoff, dtype=complex)
    if r == 0:
        amps[0] = 1.0
        return amps
    t = math.tanh(abs(r))
    m = np.arange((cutoff + 1) // 2)
    logc = (m * math.log(t) + 0.5 * gammaln(2 * m + 1) - m * math.log(2)
            - gammaln(m + 1) - 0.5 * math.log(math.cosh(r)))
    sign = 1.0 if r > 0 else -1.0
    amps[2 * m] = np.exp(logc) * sign ** m
    _check_amplitude_tail(amps, f"squeezed vacuum r={r:.4g}")
    return amps


def _auto_cutoff(builder, what, start=20):
    for d in range(start, MAX_CUTOFF + 1):
        try:
            return builder(d), d
        except TruncationError:
            continue
    raise TruncationError(f"{what}: no cutoff <= {MAX_CUTOFF} meets the tail rule")


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def coherent(alpha, cutoff=None):
    d = cutoff or min(default_cutoff(alpha), MAX_CUTOFF)
    space = SpaceSpec.fock(d)
    return DensityMatrix.pure(space, coherent_ket(alpha, d))


def fock(n, cutoff=None):
    if n < 0 or int(n) != n:
        raise ValidationError(f"Fock number must be a non-negative integer, got {n}")
    n = int(n)
    d = cutoff or min(default_cutoff(math.sqrt(n)), MAX_CUTOFF)
    if n >= d - TAIL_LEVELS:
        raise TruncationError(f"fock({n}) needs cutoff > {n + TAIL_LEVELS}")
    ket = np.zeros(d, dtype=complex)
    ket[n] = 1.0
    return DensityMatrix.pure(SpaceSpec.fock(d), ket)


def squeezed(r, modes=1, cutoff=None):
    """Squeezed vacuum on one mode, or the two-mode squeezed vacuum."""
    if modes == 1:
        if cutoff:
            ket, d = squeezed_vacuum_ket(r, cutoff), cutoff
        else:
            ket, d = _auto_cutoff(lambda c: squeezed_vacuum_ket(r, c), f"squeezed r={r}")
        return DensityMatrix.pure(SpaceSpec.fock(d), ket)
    if modes != 2:
        raise ValidationError("squeezed states support 1 or 2 modes")

    def build(c):
        t = math.tanh(abs(r))
        n = np.arange(c)
        amps = (np.sign(r) * t) ** n / math.cosh(r) if r else (n == 0).astype(float)
        _check_amplitude_tail(amps.astype(complex), f"two-mode squeezed r={r}")
        ket = np.zeros((c, c), dtype=complex)
        ket[n, n] = amps
        return ket.ravel()

    if cutoff:
        ket, d = build(cutoff), cutoff
    else:
        ket, d = _auto_cutoff(build, f"two-mode squeezed r={r}", start=10)
    return DensityMatrix.pure(SpaceSpec.fock(d, 2), ket)


def _branch_coeffs(damping, phi):
    # rho ∝ |u><u| + |w><w| + A e^{i phi}|w><u| + h.c. in the basis (u, w)
    if not 0.0 <= damping <= 1.0:
        raise ValidationError(f"damping A must lie in [0, 1], got {damping}")
    c = damping * np.exp(1j * phi)
    return np.array([[1.0, np.conj(c)], [c, 1.0]], dtype=complex)


def cat(alpha, phi=0.0, damping=1.0, cutoff=None):
    """Damped cat ``|alpha> + e^{i phi}|-alpha>`` with coherence factor ``damping``."""
    d = cutoff or min(default_cutoff(alpha), MAX_CUTOFF)
    u = coherent_ket(alpha, d)
    w = coherent_ket(-alpha, d)
    return DensityMatrix(SpaceSpec.fock(d), vectors=np.column_stack([u, w]),
                         coeffs=_branch_coeffs(damping, phi))


def two_mode_cat(alpha, beta, damping=1.0, phi=0.0, cutoff=None):
    """``|alpha, beta> + e^{i phi}|-alpha, -beta>`` with coherence factor ``damping``."""
    d = cutoff or min(default_cutoff(max(abs(alpha), abs(beta))), MAX_CUTOFF)
    u = np.kron(coherent_ket(alpha, d), coherent_ket(beta, d))
    w = np.kron(coherent_ket(-alpha, d), coherent_ket(-beta, d))
    return DensityMatrix(SpaceSpec.fock(d, 2), vectors=np.column_stack([u, w]),
                         coeffs=_branch_coeffs(damping, phi))


def ghz(n, damping=1.0, phi=0.0):
    """Damped ``|0...0> + e^{i phi}|1...1>`` on the symmetric subspace."""
    space = SpaceSpec.spin(n)
    v = np.zeros((n + 1, 2), dtype=complex)
    v[0, 0] = 1.0
    v[n, 1] = 1.0
    return DensityMatrix(space, vectors=v, coeffs=_branch_coeffs(damping, phi))


def dicke(n, k):
    if not 0 <= k <= n:
        raise ValidationError(f"Dicke excitation number must be in [0, {n}], got {k}")
    ket = np.zeros(n + 1, dtype=complex)
    ket[k] = 1.0
    return DensityMatrix.pure(SpaceSpec.spin(n), ket)


def spin_coherent_ket(n, axis):
    axis = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(axis)
    if axis.shape != (3,) or abs(norm - 1.0) > 1e-9:
        raise ValidationError(f"axis must be a unit 3-vector, got {axis}")
    polar = math.acos(max(-1.0, min(1.0, axis[2])))
    azim = math.atan2(axis[1], axis[0])
    k = np.arange(n + 1)
    logbin = 0.5 * (gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))
    c, s = math.cos(polar / 2), math.sin(polar / 2)
    with np.errstate(divide="ignore"):
        mag = np.exp(logbin) * np.power(c, n - k) * np.power(s, k)
    return mag * np.exp(1j * k * azim)


def spin_coherent(n, axis=(0.0, 0.0, 1.0)):
    return DensityMatrix.pure(SpaceSpec.spin(n), spin_coherent_ket(n, axis))


def one_axis_twisted(n, chi_t):
    """``exp(-i chi_t J_z^2)`` applied to the x-polarized spin coherent state."""
    m = n / 2.0 - np.arange(n + 1)
    ket = np.exp(-1j * chi_t * m * m) * spin_coherent_ket(n, (1.0, 0.0, 0.0))
    return DensityMatrix.pure(SpaceSpec.spin(n), ket)


_CONSTRUCTORS = {
    "coherent": coherent,
    "fock": fock,
    "squeezed": squeezed,
    "cat": cat,
    "two_mode_cat": two_mode_cat,
    "ghz": ghz,
    "dicke": dicke,
    "spin_coherent": spin_coherent,
    "one_axis_twisted": one_axis_twisted,
}


def make_state(kind, **params):
    """Build a reference state by name, e.g. ``make_state("cat", alpha=2)``."""
    try:
        ctor = _CONSTRUCTORS[kind]
    except KeyError:
        raise ValidationError(
            f"unknown state {kind!r}; choose from {sorted(_CONSTRUCTORS)}"
        ) from None
    return ctor(**params)


# ---------------------------------------------------------------------------
# closed-form effective sizes
# ---------------------------------------------------------------------------

class TableValue(NamedTuple):
    value: float
    formula: str
    source: str = "table formula"


def analytic_neff(kind, **p):
    """Printed closed-form effective size of a reference state.

    These are the tabulated formulas, not numerically exact values; for Dicke
    states the tabulated ``2k(N-k)/(N-1) + 1`` differs from the collective
    optimum (see :func:`dicke_collective_neff`).
    """
    if kind in ("coherent", "spin_coherent"):
        return TableValue(1.0, "1")
    if kind == "squeezed":
        return TableValue(math.exp(2 * p["r"]), "exp(2r)")
    if kind == "fock":
        return TableValue(2.0 * p["n"] + 1, "2n+1")
    if kind == "cat":
        return TableValue(4 * abs(p["alpha"]) ** 2 + 1, "4|alpha|^2+1 (|alpha| >~ 1)")
    if kind == "ghz":
        return TableValue(float(p["n"]), "N")
    if kind == "dicke":
        n, k = p["n"], p["k"]
        if n < 2:
            raise ValidationError("tabulated Dicke formula needs N >= 2")
        return TableValue(2.0 * k * (n - k) / (n - 1) + 1, "2k(N-k)/(N-1)+1")
    raise ValidationError(f"no closed-form effective size for {kind!r}")


def dicke_collective_neff(n, k):
    """Exact optimum over collective generators: ``2k(N-k)/N + 1``."""
    return 2.0 * k * (n - k) / n + 1


# ---------------------------------------------------------------------------
# fringe models
# ---------------------------------------------------------------------------

def _check_cov(cov, size):
    cov = np.zeros((size, size)) if cov is None else np.asarray(cov, dtype=float)
    if cov.shape != (size, size):
        raise ValidationError(f"covariance must be {size}x{size}")
    return cov


@dataclass(frozen=True)
class WignerCatModel:
    """Parameters ``(A, S, phi)`` of the Gaussian-enveloped Wigner fringe."""

    A: float
    S: float
    phi: float = 0.0
    covariance: np.ndarray = field(default=None, compare=False)

    generator_scale = 1.0
    param_names = ("A", "S", "phi")

    def __post_init__(self):
        object.__setattr__(self, "covariance", _check_cov(self.covariance, 3))
        if not self.S > 0:
            raise ValidationError(f"S must be positive, got {self.S}")
        if not -1e-12 <= self.A <= 1.05:
            raise ValidationError(f"A must lie in [0, 1.05], got {self.A}")

    @classmethod
    def from_alpha(cls, alpha, damping=1.0, phi=0.0):
        return cls(damping, 4 * abs(alpha) ** 2, phi)

    @property
    def params(self):
        return np.array([self.A, self.S, self.phi])

    def with_params(self, vec):
        a, s, ph = vec
        return replace(self, A=float(a), S=float(s), phi=float(ph))

    @property
    def period(self):
        return math.pi / math.sqrt(self.S)

    @property
    def normalization(self):
        return 1

    @property
    def separation(self):
        return self.S

    def __call__(self, theta):
        return wigner_cut_model(self, theta)


@dataclass(frozen=True)
class FringeModel:
    """Parity fringe ``A cos(N theta + phi)`` of an ``N``-particle spin state."""

    A: float
    N: int
    phi: float = 0.0
    covariance: np.ndarray = field(default=None, compare=False)

    generator_scale = 0.5
    param_names = ("A", "phi")

    def __post_init__(self):
        object.__setattr__(self, "covariance", _check_cov(self.covariance, 2))
        if self.N < 1:
            raise ValidationError("N must be >= 1")
        if not -1e-12 <= self.A <= 1.05:
            raise ValidationError(f"A must lie in [0, 1.05], got {self.A}")

    @property
    def params(self):
        return np.array([self.A, self.phi])

    def with_params(self, vec):
        a, ph = vec
        return replace(self, A=float(a), phi=float(ph))

    @property
    def period(self):
        return 2 * math.pi / self.N

    @property
    def normalization(self):
        return self.N

    @property
    def separation(self):
        # plays the role of S: the shortcut gives A^2 * N^2 for the QFI
        return float(self.N) ** 2

    def __call__(self, theta):
        return fringe_model(self, theta)


def wigner_cut_model(m, theta):
    theta = np.asarray(theta, dtype=float)
    return m.A * np.exp(-2 * theta ** 2) * np.cos(2 * math.sqrt(m.S) * theta + m.phi)


def fringe_model(m, theta):
    theta = np.asarray(theta, dtype=float)
    return m.A * np.cos(m.N * theta + m.phi)


# ---------------------------------------------------------------------------
# exact parities
# ---------------------------------------------------------------------------

def _mode_unitaries(theta, eigs):
    return [(e.vectors * np.exp(-1j * theta * e.values)) @ e.vectors.conj().T for e in eigs]


def displaced_parity_curve(rho, quadrature_angle, thetas, check=True):
    """``Tr[Pi U rho U^dagger]`` with ``U = exp(-i theta X)`` for each theta.

    ``quadrature_angle`` is one angle per mode; ``X`` is the collective
    quadrature.  Each displaced state is truncation-checked.
    """
    space = rho.space
    if space.kind != "fock":
        raise ValidationError("displaced parity needs a Fock space")
    ops = fock_operators(SpaceSpec.fock(space.cutoff))
    angles = np.broadcast_to(np.atleast_1d(quadrature_angle), (space.modes,))
    eigs = [eig_hermitian(ops.quadrature(t).matrix) for t in angles]
    d = space.cutoff
    parity1 = (-1.0) ** np.arange(d)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    out = np.empty(thetas.shape)
    vals, vecs = rho.spectrum
    keep = vals > 1e-14
    vals, vecs = vals[keep], vecs[:, keep]
    r = vecs.shape[1]
    for i, th in enumerate(thetas.flat):
        us = _mode_unitaries(th, eigs)
        if space.modes == 1:
            w = us[0] @ vecs
            pops = np.abs(w) ** 2 @ vals
            par = parity1
        else:
            t = vecs.reshape(d, d, r)
            w = np.einsum("ab,cd,bdr->acr", us[0], us[1], t, optimize=True).reshape(d * d, r)
            pops = np.abs(w) ** 2 @ vals
            par = np.kron(parity1, parity1)
        if check:
            grid = pops.reshape((d,) * space.modes)
            kept = float(np.sum(grid[(slice(0, d - TAIL_LEVELS),) * space.modes]))
            tail = float(np.sum(pops)) - kept
            if tail >= TAIL_TOL:
                raise TruncationError(
                    f"displaced state at theta={th:.4g}: tail mass {tail:.3g}; raise the cutoff"
                )
        out.flat[i] = float(par @ pops)
    return out


def exact_displaced_parity(rho, quadrature_angle, theta):
    return float(displaced_parity_curve(rho, quadrature_angle, [theta])[0])


def displaced_fock_distribution(rho, quadrature_angle, theta, check=True):
    """Fock-number distribution of ``U rho U^dagger`` (single mode)."""
    space = rho.space
    if space.kind != "fock" or space.modes != 1:
        raise ValidationError("Fock histograms are implemented for one mode")
    ops = fock_operators(space)
    e = eig_hermitian(ops.quadrature(quadrature_angle).matrix)
    u = (e.vectors * np.exp(-1j * theta * e.values)) @ e.vectors.conj().T
    vals, vecs = rho.spectrum
    pops = np.abs(u @ vecs) ** 2 @ vals
    if check:
        tail = float(np.sum(pops[space.cutoff - TAIL_LEVELS:]))
        if tail >= TAIL_TOL:
            raise TruncationError(f"displaced state tail mass {tail:.3g}; raise the cutoff")
    pops = np.clip(pops, 0.0, None)
    return pops / pops.sum()


def fringe_parity_curve(rho, thetas):
    """``Tr[P U rho U^dagger]`` with ``U = exp(-i theta J_z)`` and ``P`` the
    product of sigma_x over all particles.

    On a Fock space the rotation is the phase shift ``exp(-i theta n)`` and
    ``P`` the photon-number parity; the two commute, so the curve is flat.
    """
    space = rho.space
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    if space.kind == "fock":
        par = fock_operators(space).parity().diagonal().real
        return np.full(thetas.shape, float(par @ rho.diagonal()))
    n = space.particles
    m = n / 2.0 - np.arange(n + 1)
    vals, vecs = rho.spectrum
    out = np.empty(thetas.shape)
    for i, th in enumerate(thetas.flat):
        w = np.exp(-1j * th * m)[:, None] * vecs
        # P w: reverse index order
        out.flat[i] = float(np.real(np.einsum("i,ni,ni->", vals, w.conj(), w[::-1])))
    return out


def exact_fringe_parity(rho, theta):
    return float(fringe_parity_curve(rho, [theta])[0])

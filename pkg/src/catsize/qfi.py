"""Exact QFI, QFI matrices, generator optimization and effective sizes.

The QFI here is the convex roof of the variance, i.e. one quarter of the
usual metrological quantum Fisher information.  For a pure state it equals
the variance of the generator.  With ``rho = sum_i l_i |i><i|``::

    I(X) = 1/2 sum_{i,j: l_i + l_j > eps} (l_i - l_j)^2 / (l_i + l_j) |<i|X|j>|^2
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.optimize import minimize

from . import _kernels
from .errors import ValidationError
from .space import ObservableMatrix, fock_operators, spin_operators

EIG_FLOOR = 1e-12
CONVENTION = "QFI = convex roof of variance (quarter of the metrological QFI)"


@dataclass(frozen=True)
class QfiValue:
    value: float
    generator: str
    parameters: tuple = ()
    convention_note: str = CONVENTION

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class QfiMatrix:
    generators: list
    entries: np.ndarray

    def quadratic(self, c):
        c = np.asarray(c, dtype=float)
        return float(c @ self.entries @ c)


@dataclass(frozen=True)
class EffectiveSize:
    value: float
    normalization: float
    kind: str
    qfi: QfiValue = field(repr=False, default=None)


def _check_dims(rho, X):
    if X.shape[0] != rho.dimension:
        raise ValidationError(
            f"generator dimension {X.shape[0]} does not match state dimension {rho.dimension}"
        )


def _projections(rho, mats):
    vals, vecs = rho.spectrum
    applied = [m @ vecs for m in mats]
    reduced = [vecs.conj().T @ a for a in applied]
    return vals, applied, reduced


def qfi_exact(rho, X):
    """QFI of ``rho`` for the Hermitian generator ``X`` (see module docstring)."""
    m = X.matrix if isinstance(X, ObservableMatrix) else X
    _check_dims(rho, m)
    vals, (xv,), (xr,) = _projections(rho, [m])
    absx2 = np.abs(xr) ** 2
    inner = _kernels.qfi_pair_sum(vals, np.ascontiguousarray(absx2), EIG_FLOOR)
    # terms coupling the listed eigenvectors to the unlisted null space
    outer = vals * (np.sum(np.abs(xv) ** 2, axis=0) - np.sum(absx2, axis=1))
    value = inner + float(np.sum(np.clip(outer, 0.0, None)))
    label = X.label if isinstance(X, ObservableMatrix) else "X"
    return QfiValue(max(value, 0.0), label)


def qfi_matrix(rho, generators):
    """Real symmetric matrix ``M`` with ``qfi_exact(rho, sum c_k G_k) = c^T M c``."""
    mats = [g.matrix if isinstance(g, ObservableMatrix) else g for g in generators]
    for m in mats:
        _check_dims(rho, m)
    vals, applied, reduced = _projections(rho, mats)
    w = _kernels.pair_weights(vals, EIG_FLOOR)
    k = len(mats)
    out = np.zeros((k, k))
    for a in range(k):
        for b in range(a, k):
            prod = reduced[a] * reduced[b].T
            inner = 0.5 * np.sum(w * prod.real)
            full = np.einsum("ni,ni->i", applied[a].conj(), applied[b]).real
            within = np.einsum("ij,ji->i", reduced[a], reduced[b]).real
            out[a, b] = out[b, a] = inner + float(np.sum(vals * (full - within)))
    return QfiMatrix(list(generators), out)


def _wrap_half(t):
    """Wrap an angle into (-pi/2, pi/2]."""
    t = (t + math.pi / 2) % math.pi - math.pi / 2
    return math.pi / 2 if math.isclose(t, -math.pi / 2) else t


def _family_for(rho, family):
    if family is None:
        return "phase_space" if rho.space.kind == "fock" else "collective_spin"
    if family == "phase_space" and rho.space.kind == "fock":
        return family
    if family == "collective_spin" and rho.space.kind == "spin":
        return family
    raise ValidationError(f"family {family!r} does not fit a {rho.space.kind} space")


def _angle_vector(angles):
    out = []
    for t in angles:
        out += [math.cos(t), -math.sin(t)]
    return np.array(out)


def optimize_generator(rho, family=None, grid=64):
    """Maximize the QFI over a generator family.

    ``phase_space``: generators ``sum_i X^i_{t_i}`` with one angle per mode.
    ``collective_spin``: ``2 n.J`` over unit axes ``n``.
    Returns ``(generator, QfiValue)``; the QfiValue carries the angles / axis.
    """
    family = _family_for(rho, family)
    if family == "collective_spin":
        ops = spin_operators(rho.space)
        qm = qfi_matrix(rho, ops.basis())
        vals, vecs = np.linalg.eigh(qm.entries)
        axis = vecs[:, -1]
        axis = axis * np.sign(axis[np.argmax(np.abs(axis))])
        axis = axis / np.linalg.norm(axis)
        gen = ops.collective(axis)
        q = qfi_exact(rho, gen)
        return gen, QfiValue(q.value, gen.label, tuple(float(x) for x in axis))

    ops = fock_operators(rho.space)
    qm = qfi_matrix(rho, ops.phase_space_basis())
    m = qm.entries
    if rho.space.modes == 1:
        vals, vecs = np.linalg.eigh(m)
        c = vecs[:, -1]
        angles = [_wrap_half(math.atan2(-c[1], c[0]))]
    else:
        ts = -math.pi + 2 * math.pi * np.arange(grid) / grid
        c, s = np.cos(ts), -np.sin(ts)
        # c^T M c for c = (cos t1, -sin t1, cos t2, -sin t2) on the grid
        u = np.stack([c, s])  # 2 x grid
        m11, m12, m22 = m[:2, :2], m[:2, 2:], m[2:, 2:]
        f = (np.einsum("ig,ij,jg->g", u, m11, u)[:, None]
             + np.einsum("ig,ij,jg->g", u, m22, u)[None, :]
             + 2 * np.einsum("ig,ij,jh->gh", u, m12, u))
        i, j = np.unravel_index(np.argmax(f), f.shape)
        res = minimize(lambda t: -float(_angle_vector(t) @ m @ _angle_vector(t)),
                       x0=[ts[i], ts[j]], method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 4000})
        t1, t2 = res.x
        # X and -X share the QFI: put the first angle into (-pi/2, pi/2]
        w1 = _wrap_half(t1)
        if not math.isclose(math.cos(w1 - t1), 1.0, abs_tol=1e-9):
            t2 += math.pi
        angles = [w1, (t2 + math.pi) % (2 * math.pi) - math.pi]
    gen = ops.collective_quadrature(angles)
    q = qfi_exact(rho, gen)
    return gen, QfiValue(q.value, gen.label, tuple(float(a) for a in angles))


def effective_size(rho, family=None):
    """Optimized QFI divided by the mode count (phase space) or particle count (spin)."""
    family = _family_for(rho, family)
    _, q = optimize_generator(rho, family)
    norm = rho.space.size
    return EffectiveSize(q.value / norm, float(norm), family, q)


def coherence_length(q, scale=None):
    """Square root of the QFI, optionally converted to physical length units."""
    v = float(q)
    if v < 0:
        raise ValidationError("QFI must be non-negative")
    out = math.sqrt(v)
    return out * scale if scale is not None else out

"""Hot numeric kernels with a numba path and a pure-numpy path.

Both implementations of every kernel live side by side in :data:`numba_impl`
and :data:`numpy_impl`.  The module-level names dispatch to numba unless the
environment variable ``CATSIZE_DISABLE_JIT`` is set to a non-empty value other
than ``0`` (or numba is not importable).

All kernels take float64 arrays and return float64 arrays/scalars.
"""

import math
import os
from types import SimpleNamespace

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

_flag = os.environ.get("CATSIZE_DISABLE_JIT", "")
JIT_ENABLED = HAVE_NUMBA and _flag in ("", "0")


# ---------------------------------------------------------------------------
# pure numpy
# ---------------------------------------------------------------------------

def _pair_weights_np(lam, eps):
    li = lam[:, None]
    lj = lam[None, :]
    s = li + lj
    out = np.zeros_like(s)
    mask = s > eps
    out[mask] = (li - lj)[mask] ** 2 / s[mask]
    return out


def _qfi_pair_sum_np(lam, absx2, eps):
    return 0.5 * float(np.sum(_pair_weights_np(lam, eps) * absx2))


def _hellinger_angle_np(p, q):
    # arccos(sum sqrt(p q)) along the last axis, via 1 - B = H^2
    sp = np.sqrt(np.clip(p, 0.0, None))
    sq = np.sqrt(np.clip(q, 0.0, None))
    den = sp + sq
    diff = np.divide(p - q, den, out=np.zeros_like(den), where=den > 0)
    h2 = 0.5 * np.sum(diff * diff, axis=-1)
    h2 = np.clip(h2, 0.0, 1.0)
    return 2.0 * np.arcsin(np.sqrt(0.5 * h2))


def _two_outcome_bound_np(w1, w2, dtheta):
    w1 = np.clip(w1, -1.0, 1.0)
    w2 = np.clip(w2, -1.0, 1.0)
    p = np.stack([0.5 * (1 + w1), 0.5 * (1 - w1)], axis=-1)
    q = np.stack([0.5 * (1 + w2), 0.5 * (1 - w2)], axis=-1)
    ang = _hellinger_angle_np(p, q)
    return ang * ang / (dtheta * dtheta)


def _distribution_bound_np(p, q, dtheta):
    ang = _hellinger_angle_np(p, q)
    return ang * ang / (dtheta * dtheta)


def _pair_matrix_np(w, theta):
    n = w.shape[0]
    d = theta[None, :] - theta[:, None]
    safe = np.where(d == 0, 1.0, d)
    out = _two_outcome_bound_np(
        np.broadcast_to(w[:, None], (n, n)), np.broadcast_to(w[None, :], (n, n)), safe
    )
    out[d == 0] = 0.0
    return out


numpy_impl = SimpleNamespace(
    pair_weights=_pair_weights_np,
    qfi_pair_sum=_qfi_pair_sum_np,
    two_outcome_bound=_two_outcome_bound_np,
    distribution_bound=_distribution_bound_np,
    pair_matrix=_pair_matrix_np,
)


# ---------------------------------------------------------------------------
# numba
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _pair_weights_nb(lam, eps):
        n = lam.shape[0]
        out = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                s = lam[i] + lam[j]
                if s > eps:
                    d = lam[i] - lam[j]
                    out[i, j] = d * d / s
        return out

    @njit(cache=True)
    def _qfi_pair_sum_nb(lam, absx2, eps):
        n = lam.shape[0]
        acc = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                s = lam[i] + lam[j]
                if s > eps:
                    d = lam[i] - lam[j]
                    acc += d * d / s * 0.5 * (absx2[i, j] + absx2[j, i])
        return acc

    @njit(cache=True)
    def _angle_nb(p0, p1, q0, q1):
        h2 = 0.0
        sp = math.sqrt(max(p0, 0.0))
        sq = math.sqrt(max(q0, 0.0))
        if sp + sq > 0.0:
            t = (p0 - q0) / (sp + sq)
            h2 += t * t
        sp = math.sqrt(max(p1, 0.0))
        sq = math.sqrt(max(q1, 0.0))
        if sp + sq > 0.0:
            t = (p1 - q1) / (sp + sq)
            h2 += t * t
        h2 = min(max(0.5 * h2, 0.0), 1.0)
        return 2.0 * math.asin(math.sqrt(0.5 * h2))

    @njit(cache=True)
    def _two_outcome_scalar_nb(a, b, dtheta):
        a = min(max(a, -1.0), 1.0)
        b = min(max(b, -1.0), 1.0)
        ang = _angle_nb(0.5 * (1 + a), 0.5 * (1 - a), 0.5 * (1 + b), 0.5 * (1 - b))
        return ang * ang / (dtheta * dtheta)

    @njit(cache=True)
    def _two_outcome_flat_nb(w1, w2, dtheta):
        n = w1.shape[0]
        out = np.empty(n)
        for i in range(n):
            out[i] = _two_outcome_scalar_nb(w1[i], w2[i], dtheta[i])
        return out

    def _two_outcome_bound_nb(w1, w2, dtheta):
        w1, w2, dtheta = np.broadcast_arrays(
            np.asarray(w1, dtype=np.float64),
            np.asarray(w2, dtype=np.float64),
            np.asarray(dtheta, dtype=np.float64),
        )
        shape = w1.shape
        out = _two_outcome_flat_nb(
            np.ascontiguousarray(w1).ravel(),
            np.ascontiguousarray(w2).ravel(),
            np.ascontiguousarray(dtheta).ravel(),
        )
        return out.reshape(shape)

    @njit(cache=True)
    def _distribution_rows_nb(p, q, dtheta):
        m, k = p.shape
        out = np.empty(m)
        for r in range(m):
            h2 = 0.0
            for i in range(k):
                sp = math.sqrt(max(p[r, i], 0.0))
                sq = math.sqrt(max(q[r, i], 0.0))
                if sp + sq > 0.0:
                    t = (p[r, i] - q[r, i]) / (sp + sq)
                    h2 += t * t
            h2 = min(max(0.5 * h2, 0.0), 1.0)
            ang = 2.0 * math.asin(math.sqrt(0.5 * h2))
            out[r] = ang * ang / (dtheta * dtheta)
        return out

    def _distribution_bound_nb(p, q, dtheta):
        p = np.asarray(p, dtype=np.float64)
        q = np.asarray(q, dtype=np.float64)
        p, q = np.broadcast_arrays(p, q)
        shape = p.shape[:-1]
        k = p.shape[-1]
        out = _distribution_rows_nb(
            np.ascontiguousarray(p).reshape(-1, k),
            np.ascontiguousarray(q).reshape(-1, k),
            float(dtheta),
        )
        if shape == ():
            return out[0]
        return out.reshape(shape)

    @njit(cache=True)
    def _pair_matrix_nb(w, theta):
        n = w.shape[0]
        out = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                d = theta[j] - theta[i]
                if d != 0.0:
                    out[i, j] = _two_outcome_scalar_nb(w[i], w[j], d)
        return out

    numba_impl = SimpleNamespace(
        pair_weights=_pair_weights_nb,
        qfi_pair_sum=_qfi_pair_sum_nb,
        two_outcome_bound=_two_outcome_bound_nb,
        distribution_bound=_distribution_bound_nb,
        pair_matrix=_pair_matrix_nb,
    )
else:  # pragma: no cover
    numba_impl = numpy_impl


active = numba_impl if JIT_ENABLED else numpy_impl

pair_weights = active.pair_weights
qfi_pair_sum = active.qfi_pair_sum
two_outcome_bound = active.two_outcome_bound
distribution_bound = active.distribution_bound
pair_matrix = active.pair_matrix

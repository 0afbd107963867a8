"""Finite-dimensional Hilbert spaces: truncated Fock modes and symmetric spins.

Quadrature convention used everywhere in the package::

    X_theta = exp(i theta) a + exp(-i theta) a^dagger

so ``x = X_0``, ``p = X_{-pi/2} = i(a^dagger - a)`` and ``[x, p] = 2i``.  A
coherent state has unit quadrature variance in every direction.

Spin operators act on the symmetric (Dicke) subspace of ``N`` two-level
systems.  Basis index ``k`` counts excitations, so ``k = 0`` is ``|0...0>``
with ``J_z = +N/2``.  Collective generators are ``X_n = 2 n.J`` so that every
single-particle term has unit operator norm and ``||X_n|| = N``.
"""

from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np
import scipy.sparse as sp

from .errors import TruncationError, ValidationError

HERMITIAN_TOL = 1e-10
TAIL_TOL = 1e-10
TAIL_LEVELS = 5
MAX_CUTOFF = 300


@dataclass(frozen=True)
class SpaceSpec:
    """Either ``fock`` (cutoff per mode, 1 or 2 modes) or ``spin`` (N particles)."""

    kind: str
    cutoff: int = 0
    modes: int = 1
    particles: int = 0

    def __post_init__(self):
        if self.kind == "fock":
            if self.cutoff < 2:
                raise ValidationError(f"Fock cutoff must be >= 2, got {self.cutoff}")
            if self.modes not in (1, 2):
                raise ValidationError(f"only 1 or 2 modes supported, got {self.modes}")
        elif self.kind == "spin":
            if self.particles < 1:
                raise ValidationError(f"particle count must be >= 1, got {self.particles}")
        else:
            raise ValidationError(f"unknown space kind {self.kind!r}")

    @classmethod
    def fock(cls, cutoff, modes=1):
        return cls("fock", cutoff=int(cutoff), modes=int(modes))

    @classmethod
    def spin(cls, particles):
        return cls("spin", particles=int(particles))

    @property
    def dimension(self):
        if self.kind == "fock":
            return self.cutoff ** self.modes
        return self.particles + 1

    @property
    def size(self):
        """Normalization of the effective size: mode count or particle count."""
        return self.modes if self.kind == "fock" else self.particles


def default_cutoff(alpha):
    """Cutoff rule for states of coherent amplitude ``alpha``."""
    a = abs(alpha)
    return int(math.ceil(a * a + 8 * a + 20))


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------

def _as_dense(m):
    return m.toarray() if sp.issparse(m) else np.asarray(m)


def _max_abs(m):
    if sp.issparse(m):
        return float(abs(m).max()) if m.nnz else 0.0
    return float(np.max(np.abs(m))) if m.size else 0.0


def hermiticity_error(m):
    d = m - m.conj().T
    return _max_abs(d)


@dataclass(frozen=True)
class ObservableMatrix:
    """Hermitian generator on a space; ``matrix`` may be dense or sparse."""

    space: SpaceSpec
    matrix: object
    label: str = ""

    def __post_init__(self):
        n = self.space.dimension
        if self.matrix.shape != (n, n):
            raise ValidationError(
                f"operator shape {self.matrix.shape} does not match dimension {n}"
            )
        scale = max(1.0, _max_abs(self.matrix))
        if hermiticity_error(self.matrix) > HERMITIAN_TOL * scale:
            raise ValidationError(f"operator {self.label!r} is not Hermitian")

    def dense(self):
        return _as_dense(self.matrix).astype(complex)

    def __matmul__(self, other):
        return self.matrix @ other

    def __add__(self, other):
        return ObservableMatrix(self.space, self.matrix + other.matrix,
                                f"{self.label}+{other.label}")

    def scaled(self, c, label=None):
        return ObservableMatrix(self.space, c * self.matrix, label or f"{c}*{self.label}")


@dataclass(frozen=True)
class EigenDecomposition:
    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self):
        v = self.vectors
        return (v * self.values) @ v.conj().T


def eig_hermitian(m):
    """Eigendecomposition of a Hermitian matrix with a deterministic gauge.

    Eigenvalues ascend; every eigenvector is rotated so that its
    largest-magnitude component is real and positive.
    """
    m = _as_dense(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] == 0:
        raise ValidationError("cannot diagonalize a 0x0 matrix")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(m))))
    if hermiticity_error(m) > HERMITIAN_TOL * scale:
        raise ValidationError("matrix is not Hermitian")
    herm = 0.5 * (m + m.conj().T)
    vals, vecs = np.linalg.eigh(herm)
    idx = np.argmax(np.abs(vecs), axis=0)
    pivots = vecs[idx, np.arange(vecs.shape[1])]
    phases = np.where(np.abs(pivots) > 0, pivots / np.abs(pivots), 1.0)
    vecs = vecs * phases.conj()[None, :]
    return EigenDecomposition(vals, vecs)


def unitary_from_generator(X, theta):
    """``exp(-i theta X)`` as a dense matrix, through the spectrum of ``X``."""
    eig = X if isinstance(X, EigenDecomposition) else eig_hermitian(
        X.matrix if isinstance(X, ObservableMatrix) else X
    )
    v = eig.vectors
    return (v * np.exp(-1j * theta * eig.values)) @ v.conj().T


# ---------------------------------------------------------------------------
# operator sets
# ---------------------------------------------------------------------------

class FockOperators:
    """Ladder, number, parity and quadrature operators on a Fock space."""

    def __init__(self, space):
        if space.kind != "fock":
            raise ValidationError("fock_operators needs a Fock space")
        self.space = space
        d = space.cutoff
        n = np.arange(d)
        self._a1 = sp.diags(np.sqrt(n[1:]).astype(complex), 1, format="csr")
        self._n1 = sp.diags(n.astype(complex), 0, format="csr")
        self._par1 = sp.diags(((-1.0) ** n).astype(complex), 0, format="csr")

    def _embed(self, op, mode):
        if self.space.modes == 1:
            return op.tocsr()
        eye = sp.identity(self.space.cutoff, dtype=complex, format="csr")
        if mode == 0:
            return sp.kron(op, eye, format="csr")
        return sp.kron(eye, op, format="csr")

    def a(self, mode=0):
        return self._embed(self._a1, mode)

    def adag(self, mode=0):
        return self._embed(self._a1.conj().T, mode)

    def number(self, mode=None):
        if mode is None:
            return sum(self._embed(self._n1, m) for m in range(self.space.modes))
        return self._embed(self._n1, mode)

    def parity(self):
        out = self._par1
        for _ in range(self.space.modes - 1):
            out = sp.kron(out, self._par1, format="csr")
        return out.tocsr()

    def quadrature(self, theta, mode=0):
        a = self.a(mode)
        m = np.exp(1j * theta) * a + np.exp(-1j * theta) * a.conj().T
        return ObservableMatrix(self.space, m.tocsr(), f"x[{mode}]({theta:.6g})")

    def collective_quadrature(self, angles):
        """Sum over modes of ``X_{angles[i]}`` acting on mode ``i``."""
        angles = np.atleast_1d(angles)
        if angles.size != self.space.modes:
            raise ValidationError("need one quadrature angle per mode")
        m = sum(self.quadrature(t, i).matrix for i, t in enumerate(angles))
        label = "+".join(f"x[{i}]({t:.6g})" for i, t in enumerate(angles))
        return ObservableMatrix(self.space, m.tocsr(), label)

    def phase_space_basis(self):
        """Generators ``x^(i), p^(i)`` per mode, in that order."""
        out = []
        for i in range(self.space.modes):
            out.append(self.quadrature(0.0, i))
            out.append(self.quadrature(-np.pi / 2, i))
        return out


def fock_operators(space):
    return FockOperators(space)


class SpinOperators:
    """Angular momentum ``j = N/2`` on the Dicke basis (index = excitations)."""

    def __init__(self, space):
        if space.kind != "spin":
            raise ValidationError("spin_operators needs a spin space")
        self.space = space
        n = space.particles
        j = n / 2.0
        m = j - np.arange(n + 1)
        # <m+1|J+|m> = sqrt(j(j+1) - m(m+1)); index k-1 has m+1
        jp = np.zeros((n + 1, n + 1))
        for k in range(1, n + 1):
            jp[k - 1, k] = math.sqrt(j * (j + 1) - m[k] * (m[k] + 1))
        self.jz = np.diag(m).astype(complex)
        self.jx = (0.5 * (jp + jp.T)).astype(complex)
        self.jy = (-0.5j * (jp - jp.T)).astype(complex)

    def collective(self, axis):
        axis = np.asarray(axis, dtype=float)
        if axis.shape != (3,) or abs(np.linalg.norm(axis) - 1.0) > 1e-9:
            raise ValidationError(f"axis must be a unit 3-vector, got {axis}")
        m = 2 * (axis[0] * self.jx + axis[1] * self.jy + axis[2] * self.jz)
        return ObservableMatrix(self.space, m,
                                "2n.J(%.6g,%.6g,%.6g)" % tuple(axis))

    def basis(self):
        return [self.collective(e) for e in np.eye(3)]

    def parity(self):
        """Product of sigma_x over all particles: maps ``|k>`` to ``|N-k>``."""
        return np.fliplr(np.eye(self.space.particles + 1)).astype(complex)


def spin_operators(space):
    return SpinOperators(space)


# ---------------------------------------------------------------------------
# density matrices
# ---------------------------------------------------------------------------

class DensityMatrix:
    """A state ``rho`` on a :class:`SpaceSpec`.

    Either built from an explicit matrix, or in factored form
    ``rho = V C V^dagger`` (``V``: d x r column vectors, ``C``: r x r), which
    keeps large two-mode states cheap.  The factored form is normalized on
    construction.
    """

    def __init__(self, space, matrix=None, *, vectors=None, coeffs=None, validate=True):
        self.space = space
        d = space.dimension
        if (matrix is None) == (vectors is None):
            raise ValidationError("give exactly one of matrix or vectors")
        if matrix is not None:
            matrix = np.asarray(_as_dense(matrix), dtype=complex)
            if matrix.shape != (d, d):
                raise ValidationError(f"matrix shape {matrix.shape} != ({d}, {d})")
            if validate:
                self._validate(matrix)
            self._matrix = matrix
            self._factor = None
        else:
            v = np.asarray(vectors, dtype=complex)
            if v.ndim == 1:
                v = v[:, None]
            if v.shape[0] != d:
                raise ValidationError(f"vectors have length {v.shape[0]}, expected {d}")
            c = np.eye(v.shape[1]) if coeffs is None else np.asarray(coeffs, dtype=complex)
            q, r = np.linalg.qr(v)
            small = r @ c @ r.conj().T
            tr = np.trace(small).real
            if not tr > 0:
                raise ValidationError("state has zero trace")
            small = small / tr
            if validate and hermiticity_error(small) > HERMITIAN_TOL:
                raise ValidationError("coefficient matrix is not Hermitian")
            self._factor = (q, 0.5 * (small + small.conj().T))
            self._matrix = None

    @classmethod
    def pure(cls, space, ket):
        return cls(space, vectors=np.asarray(ket)[:, None])

    @staticmethod
    def _validate(m):
        if not np.all(np.isfinite(m)):
            raise ValidationError("density matrix has non-finite entries")
        if hermiticity_error(m) > HERMITIAN_TOL:
            raise ValidationError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > HERMITIAN_TOL:
            raise ValidationError(f"density matrix trace {np.trace(m).real} != 1")
        if np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0] < -HERMITIAN_TOL:
            raise ValidationError("density matrix has a negative eigenvalue")

    @property
    def dimension(self):
        return self.space.dimension

    @cached_property
    def spectrum(self):
        """``(eigenvalues, eigenvectors)``; the factored form returns its support only."""
        if self._factor is not None:
            q, small = self._factor
            vals, u = np.linalg.eigh(small)
            return np.clip(vals, 0.0, None), q @ u
        eig = eig_hermitian(self._matrix)
        return eig.values, eig.vectors

    @property
    def matrix(self):
        if self._matrix is None:
            q, small = self._factor
            self._matrix = q @ small @ q.conj().T
        return self._matrix

    @property
    def is_factored(self):
        return self._factor is not None

    def diagonal(self):
        if self._factor is not None:
            q, small = self._factor
            return np.einsum("ni,ij,nj->n", q, small, q.conj()).real
        return np.diag(self._matrix).real.copy()

    def purity(self):
        vals, _ = self.spectrum
        if self._factor is not None:
            return float(np.sum(vals ** 2))
        return float(np.real(np.sum(np.abs(self._matrix) ** 2)))

    def expect(self, op):
        m = op.matrix if isinstance(op, ObservableMatrix) else op
        vals, vecs = self.spectrum
        mv = m @ vecs
        return complex(np.einsum("i,ni,ni->", vals, vecs.conj(), mv))

    def variance(self, op):
        m = op.matrix if isinstance(op, ObservableMatrix) else op
        vals, vecs = self.spectrum
        mv = m @ vecs
        mean = np.einsum("i,ni,ni->", vals, vecs.conj(), mv).real
        sq = np.einsum("i,ni,ni->", vals, mv.conj(), mv).real
        return float(sq - mean ** 2)

    def transformed(self, u):
        """``U rho U^dagger`` as a new state (factored form is preserved)."""
        if self._factor is not None:
            q, small = self._factor
            return DensityMatrix(self.space, vectors=u @ q, coeffs=small, validate=False)
        return DensityMatrix(self.space, u @ self._matrix @ u.conj().T, validate=False)

    def mixed_with(self, other, p):
        """``p rho + (1 - p) other`` as an explicit matrix."""
        return DensityMatrix(self.space, p * self.matrix + (1 - p) * other.matrix,
                             validate=False)


def fock_tail_mass(rho, levels=TAIL_LEVELS):
    """Probability that any mode sits in the top ``levels`` Fock levels."""
    if rho.space.kind != "fock":
        raise ValidationError("tail mass is defined for Fock spaces only")
    d = rho.space.cutoff
    diag = rho.diagonal().reshape((d,) * rho.space.modes)
    total = float(np.sum(diag))
    keep = diag[(slice(0, d - levels),) * rho.space.modes]
    return max(0.0, total - float(np.sum(keep)))


def check_truncation(rho, what="state"):
    tail = fock_tail_mass(rho)
    if tail >= TAIL_TOL:
        raise TruncationError(
            f"{what}: Fock tail mass {tail:.3g} above {TAIL_TOL:g} at cutoff "
            f"{rho.space.cutoff}; raise the cutoff"
        )
    return tail

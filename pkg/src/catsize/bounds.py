"""Lower bounds on the QFI from measured data.

Two estimators underlie everything here:

* the uncertainty-relation bound ``I(X) >= <Z>^2 / (4 Var Y)`` with ``Z = i[X, Y]``;
* the overlap bound ``I(X) >= arccos^2(B) / dtheta^2`` where
  ``B = sum_i sqrt(p_i q_i)`` compares outcome distributions before and after
  ``exp(-i dtheta X)``.

``B`` is never formed directly: ``arccos(1 - H^2) = 2 arcsin(H / sqrt 2)`` with
the squared Hellinger distance ``H^2 = 1/2 sum (sqrt p - sqrt q)^2`` keeps the
bound accurate for steps down to ~1e-8.

Uncertainty intervals are 1-sigma equivalent.  Monte-Carlo intervals are
built around the point estimate from the 16/50/84 percentiles of the
resampled bound: ``(b - (med - p16), b + (p84 - med))``.  A result is
significant when the low end of its interval is above zero.
"""

from dataclasses import dataclass, field
import hashlib
import json
import math
import warnings

import numpy as np
from scipy.optimize import minimize

from . import _kernels
from .errors import ValidationError
from .states import FringeModel, WignerCatModel

DEFAULT_MC = 2000


@dataclass
class BoundResult:
    qfi_lower: float
    neff_lower: float
    interval: tuple
    method: str
    normalization: float = 1.0
    significant: bool = False
    provenance: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.interval is not None:
            low, high = self.interval
            self.interval = (min(float(low), self.qfi_lower), max(float(high), self.qfi_lower))

    @property
    def neff_interval(self):
        if self.interval is None:
            return None
        return tuple(x / self.normalization for x in self.interval)

    @property
    def inputs_digest(self):
        blob = json.dumps(self.provenance, sort_keys=True, default=_jsonable)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def to_dict(self):
        return {
            "method": self.method,
            "qfi_lower": self.qfi_lower,
            "neff_lower": self.neff_lower,
            "interval": list(self.interval) if self.interval is not None else None,
            "neff_interval": list(self.neff_interval) if self.interval is not None else None,
            "normalization": self.normalization,
            "significant": self.significant,
            "inputs_digest": self.inputs_digest,
            "provenance": json.loads(json.dumps(self.provenance, default=_jsonable)),
            "details": json.loads(json.dumps(self.details, default=_jsonable)),
        }


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    return str(x)


def _result(qfi, norm, interval, method, provenance, details=None, significant=None):
    if significant is None:
        significant = interval is not None and interval[0] > 0
    return BoundResult(float(qfi), float(qfi) / norm, interval, method, float(norm),
                       bool(significant), provenance, details or {})


def mc_interval(point, samples):
    """Percentile interval of MC samples, re-centred on the point estimate."""
    p16, med, p84 = np.percentile(samples, [16, 50, 84])
    return (point - (med - p16), point + (p84 - med))


def _streams(seed, n):
    ss = np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in ss.spawn(n)]


# ---------------------------------------------------------------------------
# uncertainty-relation bound
# ---------------------------------------------------------------------------

SYSTEMS = {"photonic-mode": "phase_space", "photonic-modes": "phase_space",
           "phase_space": "phase_space", "spin": "spin"}


@dataclass(frozen=True)
class VarianceRecord:
    """Moments for the uncertainty-relation bound, raw or in decibels.

    ``squeezing_db`` is positive for noise below the classical reference
    (vacuum or coherent spin state) unless ``db_sign = -1``.  For spins the dB
    value is the inverse squeezing parameter ``1/xi^2`` on a log scale.
    """

    variance: float = None
    variance_sigma: float = 0.0
    z_mean: float = None
    z_sigma: float = 0.0
    squeezing_db: float = None
    db_sigma: float = 0.0
    db_sign: int = 1
    system: str = "photonic-mode"
    size: int = 1

    def __post_init__(self):
        raw = self.variance is not None or self.z_mean is not None
        db = self.squeezing_db is not None
        if raw == db:
            raise ValidationError("give either raw moments or squeezing_db, not both")
        if raw:
            if self.variance is None or self.z_mean is None:
                raise ValidationError("raw mode needs both variance and z_mean")
            if not self.variance > 0:
                raise ValidationError(f"variance must be positive, got {self.variance}")
        if self.system not in SYSTEMS:
            raise ValidationError(f"unknown system {self.system!r}; use {sorted(SYSTEMS)}")
        if self.size < 1:
            raise ValidationError("size must be >= 1")
        if self.db_sign not in (1, -1):
            raise ValidationError("db_sign must be +1 or -1")

    @classmethod
    def from_inverse_parameter(cls, value, sigma=0.0, system="spin", size=1):
        """Wrap a linear inverse squeezing parameter ``1/xi^2``."""
        db = 10 * math.log10(value)
        db_sigma = 10 / math.log(10) * sigma / value if sigma else 0.0
        return cls(squeezing_db=db, db_sigma=db_sigma, system=system, size=size)


def static_bound(rec):
    """``<Z>^2 / (4 Var Y)``; in dB mode the effective size is ``10^(dB/10)``."""
    prov = {k: getattr(rec, k) for k in rec.__dataclass_fields__}
    if rec.squeezing_db is not None:
        db = rec.db_sign * rec.squeezing_db
        neff = 10 ** (db / 10)
        qfi = neff * rec.size
        if rec.db_sigma:
            lo = 10 ** ((db - rec.db_sigma) / 10) * rec.size
            hi = 10 ** ((db + rec.db_sigma) / 10) * rec.size
            interval = (lo, hi)
        else:
            interval = (qfi, qfi)
        return _result(qfi, rec.size, interval, "static", prov,
                       {"mode": "decibel", "db": db}, significant=qfi > 0)
    v, z = rec.variance, rec.z_mean
    qfi = z * z / (4 * v)
    dv = -z * z / (4 * v * v)
    dz = z / (2 * v)
    sigma = math.sqrt((dv * rec.variance_sigma) ** 2 + (dz * rec.z_sigma) ** 2)
    return _result(qfi, rec.size, (qfi - sigma, qfi + sigma), "static", prov,
                   {"mode": "moments", "sigma": sigma},
                   significant=qfi - sigma > 0)


# ---------------------------------------------------------------------------
# overlap bound
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProbabilityPair:
    p: np.ndarray
    q: np.ndarray
    dtheta: float
    sigma_p: np.ndarray = None
    sigma_q: np.ndarray = None

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        q = np.asarray(self.q, dtype=float)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        if p.shape != q.shape or p.ndim != 1:
            raise ValidationError("p and q must be 1-d arrays over the same outcomes")
        for name, d in (("p", p), ("q", q)):
            if np.any(d < -1e-12) or np.any(d > 1 + 1e-12):
                raise ValidationError(f"{name} has entries outside [0, 1]")
            if abs(d.sum() - 1) > 1e-9:
                raise ValidationError(f"{name} sums to {d.sum()}, not 1")
        if self.dtheta == 0 or not math.isfinite(self.dtheta):
            raise ValidationError("dtheta must be finite and non-zero")


def overlap_bound(p, q, dtheta):
    """``arccos^2(sum sqrt(p q)) / dtheta^2`` for arrays over the last axis."""
    return _kernels.distribution_bound(np.asarray(p, float), np.asarray(q, float), float(dtheta))


def _resample_distribution(rng, d, sigma, n):
    draws = rng.normal(d, sigma, size=(n, d.size))
    draws = np.clip(draws, 0.0, None)
    tot = draws.sum(axis=1, keepdims=True)
    return np.divide(draws, tot, out=np.full_like(draws, 1.0 / d.size), where=tot > 0)


def bhattacharyya_bound(pair, normalization=1.0, mc_samples=DEFAULT_MC, seed=0):
    b = float(overlap_bound(pair.p, pair.q, pair.dtheta))
    prov = {"p": pair.p, "q": pair.q, "dtheta": pair.dtheta, "seed": seed}
    if pair.sigma_p is None and pair.sigma_q is None:
        return _result(b, normalization, (b, b), "bhattacharyya_pairwise", prov,
                       significant=b > 0)
    sp_ = np.zeros_like(pair.p) if pair.sigma_p is None else np.asarray(pair.sigma_p, float)
    sq_ = np.zeros_like(pair.q) if pair.sigma_q is None else np.asarray(pair.sigma_q, float)
    rp, rq = _streams(seed, 2)
    ps = _resample_distribution(rp, pair.p, sp_, mc_samples)
    qs = _resample_distribution(rq, pair.q, sq_, mc_samples)
    samples = overlap_bound(ps, qs, pair.dtheta)
    interval = mc_interval(b, samples)
    return _result(b, normalization, interval, "bhattacharyya_pairwise", prov,
                   {"mc_samples": mc_samples})


# ---------------------------------------------------------------------------
# pairwise scan of a parity record
# ---------------------------------------------------------------------------

def two_outcome_bound(w1, w2, dtheta):
    """Overlap bound for parity values ``w1, w2`` measured ``dtheta`` apart."""
    return _kernels.two_outcome_bound(np.asarray(w1, float), np.asarray(w2, float),
                                      np.asarray(dtheta, float))


def _two_outcome_gradient(w1, w2, dtheta, h=1e-7):
    def f(a, b):
        return float(two_outcome_bound(a, b, dtheta))

    def partial(a, b, which):
        x = a if which == 0 else b
        lo, hi = max(x - h, -1.0), min(x + h, 1.0)
        if hi <= lo:
            return 0.0
        if which == 0:
            return (f(hi, b) - f(lo, b)) / (hi - lo)
        return (f(a, hi) - f(a, lo)) / (hi - lo)

    return partial(w1, w2, 0), partial(w1, w2, 1)


@dataclass
class PairScan:
    results: list
    best: BoundResult = None

    def __iter__(self):
        return iter(self.results)

    def __len__(self):
        return len(self.results)

    def by_gap(self, gap):
        return [r for r in self.results if r.details["gap"] == gap]


def pairwise_scan(record, max_gap=3, mc_samples=DEFAULT_MC, seed=0,
                  generator_scale=None, normalization=None):
    """Apply the overlap bound to every pair of parity samples ``gap <= max_gap`` apart.

    Each data point is resampled from its own random stream (spawned from
    ``seed``) so results do not depend on pair ordering.  The best result is
    the significant pair with the largest lower interval end.
    """
    if record.kind not in ("wigner_cut", "parity_fringe"):
        raise ValidationError(f"pairwise scan needs a parity record, got {record.kind}")
    n = len(record)
    if n < 2:
        raise ValidationError("pairwise scan needs at least two samples")
    if max_gap < 1:
        raise ValidationError("max_gap must be >= 1")
    sig = record.sigmas
    if mc_samples and np.any(sig <= 0) and not np.all(sig == 0):
        raise ValidationError("sigma must be positive for every sample (or all zero)")
    scale = record.generator_scale if generator_scale is None else generator_scale
    norm = record.normalization if normalization is None else normalization
    raw = record.values
    w = np.clip(raw, -1.0, 1.0)
    clipped = np.abs(raw) > 1.0
    if np.any(clipped & (np.abs(raw) - 1.0 > 3 * np.where(sig > 0, sig, np.inf))):
        warnings.warn("parity values beyond 1 by more than 3 sigma were clipped")
    theta = record.settings

    noisy = mc_samples and np.any(sig > 0)
    if noisy:
        draws = np.empty((mc_samples, n))
        for k, rng in enumerate(_streams(seed, n)):
            draws[:, k] = rng.normal(raw[k], sig[k], size=mc_samples)
        draws = np.clip(draws, -1.0, 1.0)

    results = []
    for gap in range(1, max_gap + 1):
        for i in range(n - gap):
            j = i + gap
            dth = (theta[j] - theta[i]) * scale
            b = float(two_outcome_bound(w[i], w[j], dth))
            g1, g2 = _two_outcome_gradient(w[i], w[j], dth)
            sd_delta = math.hypot(g1 * sig[i], g2 * sig[j])
            details = {"i": i, "j": j, "gap": gap,
                       "center": 0.5 * (theta[i] + theta[j]),
                       "theta": (float(theta[i]), float(theta[j])),
                       "delta_sigma": sd_delta,
                       "clipped": bool(clipped[i] or clipped[j])}
            if noisy:
                samples = two_outcome_bound(draws[:, i], draws[:, j], dth)
                interval = mc_interval(b, samples)
                details["mc_half_width"] = 0.5 * float(
                    np.subtract(*np.percentile(samples, [84, 16])))
            else:
                interval = (b, b)
            prov = {"record_meta": dict(record.meta), "pair": (i, j), "seed": seed,
                    "values": (float(raw[i]), float(raw[j])),
                    "sigmas": (float(sig[i]), float(sig[j]))}
            results.append(_result(b, norm, interval, "bhattacharyya_pairwise", prov, details,
                                   significant=interval[0] > 0))
    sig_results = [r for r in results if r.significant]
    best = max(sig_results, key=lambda r: (r.interval[0], r.qfi_lower), default=None)
    return PairScan(results, best)


# ---------------------------------------------------------------------------
# model-based bounds
# ---------------------------------------------------------------------------

def _curve(model, params, theta):
    theta = np.asarray(theta, dtype=float)
    if isinstance(model, WignerCatModel):
        a, s, ph = params
        return a * np.exp(-2 * theta ** 2) * np.cos(2 * math.sqrt(max(s, 0.0)) * theta + ph)
    if isinstance(model, FringeModel):
        a, ph = params
        return a * np.cos(model.N * theta + ph)
    raise ValidationError(f"unsupported model {type(model).__name__}")


def pair_bound(model, theta1, theta2, params=None):
    """Overlap bound from the model's parity at two settings."""
    params = model.params if params is None else params
    w = _curve(model, params, [theta1, theta2])
    return float(two_outcome_bound(w[0], w[1], (theta2 - theta1) * model.generator_scale))


def _model_norm(model, normalization):
    return model.normalization if normalization is None else normalization


def _covariance_ok(cov):
    if not np.all(np.isfinite(cov)):
        return False
    if not np.allclose(cov, cov.T, atol=1e-12):
        return False
    return np.linalg.eigvalsh(0.5 * (cov + cov.T))[0] >= -1e-10 * max(1.0, np.abs(cov).max())


def _delta_sigma(func, params, cov):
    params = np.asarray(params, dtype=float)
    grad = np.zeros_like(params)
    for k in range(params.size):
        h = 1e-6 * max(1.0, abs(params[k]))
        up, dn = params.copy(), params.copy()
        up[k] += h
        dn[k] -= h
        grad[k] = (func(up) - func(dn)) / (2 * h)
    return math.sqrt(max(float(grad @ cov @ grad), 0.0)), grad


def optimal_pair(model, grid=41, min_separation=1e-7):
    """Maximize the model overlap bound over real setting pairs.

    Coarse grid over +-1.2 fringe periods, then Nelder-Mead on
    ``(centre, separation)`` with the separation kept above
    ``min_separation`` periods so the pair never degenerates.
    """
    period = model.period
    half = 1.2 * period
    ts = np.linspace(-half, half, grid)
    w = _curve(model, model.params, ts)
    mat = _kernels.pair_matrix(np.ascontiguousarray(w), ts * model.generator_scale)
    mat = np.triu(mat, 1)
    i, j = np.unravel_index(np.argmax(mat), mat.shape)
    dmin = min_separation * period

    def unpack(x):
        c, u = x
        d = dmin + abs(u)
        return c - d / 2, c + d / 2

    def neg(x):
        return -pair_bound(model, *unpack(x))

    best = None
    for x0 in ([0.5 * (ts[i] + ts[j]), ts[j] - ts[i]], [0.5 * (ts[i] + ts[j]), 0.0]):
        res = minimize(neg, x0=x0, method="Nelder-Mead",
                       options={"xatol": 1e-8 * period, "fatol": 1e-12,
                                "maxiter": 5000, "initial_simplex": [
                                    x0, [x0[0] + 0.05 * period, x0[1]],
                                    [x0[0], x0[1] + 0.05 * period]]})
        if best is None or res.fun < best.fun:
            best = res
    t1, t2 = unpack(best.x)
    return float(t1), float(t2), float(-best.fun)


def fitted_bound(model, normalization=None, pinned=None):
    """Overlap bound of a fitted fringe model at its optimal setting pair.

    ``pinned=(theta1, theta2)`` evaluates a fixed pair instead of optimizing.
    The uncertainty propagates the model covariance through the bound at the
    chosen pair (delta method).
    """
    norm = _model_norm(model, normalization)
    if pinned is not None:
        t1, t2 = map(float, pinned)
        if t1 == t2:
            raise ValidationError("pinned settings must differ")
        b = pair_bound(model, t1, t2)
    else:
        t1, t2, b = optimal_pair(model)
    prov = {"model": type(model).__name__, "params": dict(zip(model.param_names, model.params)),
            "covariance": model.covariance, "pinned": pinned}
    details = {"theta": (t1, t2)}
    cov = model.covariance
    if not _covariance_ok(cov):
        warnings.warn("model covariance is not a valid covariance; no interval reported")
        return _result(b, norm, None, "bhattacharyya_fitted", prov, details, significant=False)
    sigma, grad = _delta_sigma(lambda p: pair_bound(model, t1, t2, p), model.params, cov)
    details.update(sigma=sigma, gradient=grad)
    return _result(b, norm, (b - sigma, b + sigma), "bhattacharyya_fitted", prov, details)


def shortcut_a2s(model, normalization=None):
    """Quick estimate ``A^2 S`` (cat) or ``A^2 N^2`` (spin fringe, i.e. ``N_eff = A^2 N``).

    Exact in the limit of adjacent settings at the fringe centre for
    ``phi = pi/2``; otherwise an approximation.
    """
    norm = _model_norm(model, normalization)
    a, s = model.A, model.separation
    qfi = a * a * s
    if isinstance(model, WignerCatModel):
        grad = np.array([2 * a * s, a * a, 0.0])
    else:
        grad = np.array([2 * a * s, 0.0])
    cov = model.covariance
    sigma = math.sqrt(max(float(grad @ cov @ grad), 0.0)) if _covariance_ok(cov) else 0.0
    prov = {"model": type(model).__name__, "params": dict(zip(model.param_names, model.params))}
    return _result(qfi, norm, (qfi - sigma, qfi + sigma), "shortcut_A2S", prov,
                   {"approximate": True, "sigma": sigma}, significant=qfi - sigma > 0)


# ---------------------------------------------------------------------------
# Fock histograms
# ---------------------------------------------------------------------------

def histogram_bound(f, g, dtheta, sigma_f=None, sigma_g=None, normalization=1.0,
                    mc_samples=DEFAULT_MC, seed=0):
    """Overlap bound on two Fock-number histograms.

    Noisy histograms easily give a propagated error larger than the bound;
    such results come back with ``significant = False``.
    """
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape:
        raise ValidationError(f"histogram bins differ: {f.shape} vs {g.shape}")
    if dtheta == 0:
        raise ValidationError("dtheta must be non-zero")
    fn, gn = f / f.sum(), g / g.sum()
    b = float(overlap_bound(fn, gn, dtheta))
    prov = {"bins": f.size, "dtheta": dtheta, "seed": seed}
    noisy = (sigma_f is not None and np.any(np.asarray(sigma_f) > 0)) or \
            (sigma_g is not None and np.any(np.asarray(sigma_g) > 0))
    if not noisy or not mc_samples:
        return _result(b, normalization, (b, b), "histogram", prov, significant=b > 0)
    sf = np.zeros_like(f) if sigma_f is None else np.asarray(sigma_f, float)
    sg = np.zeros_like(g) if sigma_g is None else np.asarray(sigma_g, float)
    rf, rg = _streams(seed, 2)
    fs = _resample_distribution(rf, fn, sf, mc_samples)
    gs = _resample_distribution(rg, gn, sg, mc_samples)
    samples = overlap_bound(fs, gs, dtheta)
    interval = mc_interval(b, samples)
    return _result(b, normalization, interval, "histogram", prov, {"mc_samples": mc_samples})

"""Measurement records: CSV format, experiment registry and a data simulator.

File format (one record per file)::

    # kind = wigner_cut
    # theta0 = 0.02
    # seed = 7
    setting,value,sigma
    -0.8,0.0012,0.049
    ...

Header lines are ``# key = value``; values that parse as int or float are
read back as numbers, everything else as strings.  Fock-histogram pairs use
the columns ``setting,value_p,sigma_p,value_q,sigma_q`` with the bin index as
setting and ``dtheta`` in the header.  Numbers are written with 17
significant digits so a write/read cycle is exact.
"""

import csv
from dataclasses import dataclass, field
import io
import math
from pathlib import Path

import numpy as np

from .errors import RecordFormatError, ValidationError

KINDS = ("wigner_cut", "parity_fringe", "fock_histogram_pair", "variance_record")
REQUIRED_META = {
    "wigner_cut": (),
    "parity_fringe": ("n",),
    "fock_histogram_pair": ("dtheta",),
    "variance_record": ("system", "size"),
}
COLUMNS = ("setting", "value", "sigma")
HIST_COLUMNS = ("setting", "value_p", "sigma_p", "value_q", "sigma_q")


@dataclass
class MeasurementRecord:
    """Samples ``(setting, value, sigma)`` of one measured curve.

    For ``fock_histogram_pair`` records ``value``/``sigma`` hold the first
    histogram and ``value_q``/``sigma_q`` the second.  For ``variance_record``
    the settings index the moments: 0 is the variance of Y and 1 the mean of
    ``Z = i[X, Y]``, or a single row 0 holding the squeezing in dB when the
    header says ``mode = decibel``.
    """

    kind: str
    settings: np.ndarray
    values: np.ndarray
    sigmas: np.ndarray
    meta: dict = field(default_factory=dict)
    values_q: np.ndarray = None
    sigmas_q: np.ndarray = None

    def __post_init__(self):
        self.settings = np.asarray(self.settings, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.sigmas = np.asarray(self.sigmas, dtype=float)
        if self.values_q is not None:
            self.values_q = np.asarray(self.values_q, dtype=float)
            self.sigmas_q = np.asarray(self.sigmas_q, dtype=float)
        self.validate()

    def validate(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown record kind {self.kind!r}")
        n = self.settings.shape[0]
        arrays = [self.values, self.sigmas]
        if self.kind == "fock_histogram_pair":
            if self.values_q is None or self.sigmas_q is None:
                raise ValidationError("histogram pair needs value_q and sigma_q")
            arrays += [self.values_q, self.sigmas_q]
        for a in arrays:
            if a.shape != (n,):
                raise ValidationError("settings, values and sigmas must have equal length")
        for a in [self.settings] + arrays:
            if not np.all(np.isfinite(a)):
                raise ValidationError("record contains non-finite numbers")
        if np.any(self.sigmas < 0) or (self.sigmas_q is not None and np.any(self.sigmas_q < 0)):
            raise ValidationError("sigma must be >= 0")
        if n > 1 and np.any(np.diff(self.settings) <= 0):
            raise ValidationError("settings must be strictly increasing")
        missing = [k for k in REQUIRED_META[self.kind] if k not in self.meta]
        if missing:
            raise ValidationError(f"{self.kind} record is missing meta {missing}")
        if "theta0" in self.meta and n > 1:
            t0 = float(self.meta["theta0"])
            steps = np.diff(self.settings)
            if not np.allclose(steps, t0, rtol=1e-9, atol=1e-12):
                raise ValidationError(
                    f"meta theta0 = {t0} disagrees with grid spacing "
                    f"{steps.min():.17g}..{steps.max():.17g}"
                )

    def __len__(self):
        return self.settings.shape[0]

    def __eq__(self, other):
        if not isinstance(other, MeasurementRecord):
            return NotImplemented
        same = (self.kind == other.kind and self.meta == other.meta
                and np.array_equal(self.settings, other.settings)
                and np.array_equal(self.values, other.values)
                and np.array_equal(self.sigmas, other.sigmas))
        if self.values_q is not None or other.values_q is not None:
            same = same and (self.values_q is not None and other.values_q is not None
                             and np.array_equal(self.values_q, other.values_q)
                             and np.array_equal(self.sigmas_q, other.sigmas_q))
        return bool(same)

    @property
    def generator_scale(self):
        """Conversion from settings to the generator parameter."""
        if "generator_scale" in self.meta:
            return float(self.meta["generator_scale"])
        return 0.5 if self.kind == "parity_fringe" else 1.0

    @property
    def normalization(self):
        if "normalization" in self.meta:
            return float(self.meta["normalization"])
        if self.kind == "parity_fringe":
            return float(self.meta["n"])
        return float(self.meta.get("modes", 1))


# ---------------------------------------------------------------------------
# text IO
# ---------------------------------------------------------------------------

def _fmt(x):
    if isinstance(x, bool):
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        text = format(float(x), ".17g")
        # keep floats distinguishable from ints on the way back
        if not any(c in text for c in ".eni"):
            text += ".0"
        return text
    return str(x)


def _parse_meta_value(text):
    for conv in (int, float):
        try:
            v = conv(text)
        except ValueError:
            continue
        if conv is float and not math.isfinite(v):
            return text
        return v
    return text


def format_record(record):
    buf = io.StringIO()
    buf.write(f"# kind = {record.kind}\n")
    for k, v in record.meta.items():
        if "\n" in str(k) or "\n" in str(v) or "=" in str(k):
            raise ValidationError(f"meta entry {k!r} cannot be serialized")
        buf.write(f"# {k} = {_fmt(v)}\n")
    if record.kind == "fock_histogram_pair":
        buf.write(",".join(HIST_COLUMNS) + "\n")
        rows = zip(record.settings, record.values, record.sigmas,
                   record.values_q, record.sigmas_q)
    else:
        buf.write(",".join(COLUMNS) + "\n")
        rows = zip(record.settings, record.values, record.sigmas)
    for row in rows:
        buf.write(",".join(_fmt(float(x)) for x in row) + "\n")
    return buf.getvalue()


def write_record(record, path):
    Path(path).write_text(format_record(record))


def parse_record(text, source="<string>"):
    lines = text.splitlines()
    meta = {}
    kind = None
    i = 0
    while i < len(lines) and (lines[i].startswith("#") or not lines[i].strip()):
        line = lines[i]
        i += 1
        if not line.strip():
            continue
        body = line[1:]
        if "=" not in body:
            raise RecordFormatError("header line must read '# key = value'", i, 1)
        key, _, val = body.partition("=")
        key, val = key.strip(), val.strip()
        if not key:
            raise RecordFormatError("empty header key", i, 1)
        if key == "kind":
            kind = val
        else:
            meta[key] = _parse_meta_value(val)
    if kind is None:
        raise RecordFormatError("missing '# kind = ...' header", 1, 1)
    if kind not in KINDS:
        raise RecordFormatError(f"unknown record kind {kind!r}", 1, 1)
    if i >= len(lines):
        raise RecordFormatError("missing column header", i + 1, 1)
    header = [h.strip() for h in lines[i].split(",")]
    header_line = i + 1
    expected = HIST_COLUMNS if kind == "fock_histogram_pair" else COLUMNS
    if tuple(header) != expected:
        missing = [c for c in expected if c not in header]
        what = f"missing column(s) {missing}" if missing else f"unexpected columns {header}"
        raise RecordFormatError(
            f"{what}; expected header '{','.join(expected)}'", header_line, 1
        )
    cols = [[] for _ in expected]
    reader = csv.reader(lines[i + 1:])
    for offset, row in enumerate(reader):
        lineno = header_line + 1 + offset
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(expected):
            raise RecordFormatError(
                f"expected {len(expected)} cells, found {len(row)}", lineno, len(row) + 1
            )
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise RecordFormatError(f"non-numeric cell {cell.strip()!r}", lineno, j + 1) from None
            if not math.isfinite(v):
                raise RecordFormatError(f"non-finite cell {cell.strip()!r}", lineno, j + 1)
            cols[j].append(v)
    try:
        if kind == "fock_histogram_pair":
            return MeasurementRecord(kind, cols[0], cols[1], cols[2], meta, cols[3], cols[4])
        return MeasurementRecord(kind, cols[0], cols[1], cols[2], meta)
    except ValidationError as exc:
        raise RecordFormatError(f"{source}: {exc}") from None


def read_record(path):
    path = Path(path)
    return parse_record(path.read_text(), str(path))


# ---------------------------------------------------------------------------
# simulator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WignerCut:
    """Displaced-parity samples ``Tr[Pi U(theta) rho U(theta)^dagger]``."""

    thetas: tuple
    quadrature_angle: float = 0.0


@dataclass(frozen=True)
class ParityFringe:
    """Spin parity after a collective z rotation by each angle."""

    thetas: tuple


@dataclass(frozen=True)
class FockHistogramPair:
    """Fock-number histograms at ``theta`` and ``theta + dtheta``."""

    dtheta: float
    quadrature_angle: float = 0.0
    theta: float = 0.0


def uniform_grid(theta0=0.02, points=81):
    """Symmetric grid ``n * theta0`` with ``points`` samples centred on zero."""
    n = np.arange(points) - (points - 1) / 2
    return tuple(float(x) for x in n * theta0)


def _parity_draw(rng, expected, shots):
    p = np.clip(0.5 * (1 + expected), 0.0, 1.0)
    k = rng.binomial(shots, p)
    value = 2.0 * k / shots - 1.0
    pt = (k + 1.0) / (shots + 2.0)
    return value, 2.0 * math.sqrt(pt * (1 - pt) / shots)


def simulate_record(rho, protocol, shots=math.inf, seed=0, meta=None):
    """Finite-shot (or exact, ``shots = inf``) measurement record of a state.

    Every setting draws from its own stream spawned from ``seed``.
    """
    from .states import displaced_fock_distribution, displaced_parity_curve, fringe_parity_curve

    if not (shots == math.inf or (int(shots) == shots and shots >= 1)):
        raise ValidationError(f"shots must be a positive integer or inf, got {shots}")
    if not isinstance(protocol, (WignerCut, ParityFringe, FockHistogramPair)):
        raise ValidationError(f"unknown protocol {protocol!r}")
    exact = shots == math.inf
    extra = {"source": "simulated", "seed": int(seed),
             "shots": "inf" if exact else int(shots)}
    if isinstance(protocol, FockHistogramPair):
        f = displaced_fock_distribution(rho, protocol.quadrature_angle, protocol.theta)
        g = displaced_fock_distribution(rho, protocol.quadrature_angle,
                                        protocol.theta + protocol.dtheta)
        bins = np.arange(f.size, dtype=float)
        extra["dtheta"] = float(protocol.dtheta)
        extra.update(meta or {})
        if exact:
            z = np.zeros_like(f)
            return MeasurementRecord("fock_histogram_pair", bins, f, z, extra, g, z.copy())
        rf, rg = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2)]
        out = []
        for rng, dist in ((rf, f), (rg, g)):
            k = rng.multinomial(int(shots), dist / dist.sum())
            pt = (k + 1.0) / (shots + 2.0)
            out.append((k / shots, np.sqrt(pt * (1 - pt) / shots)))
        return MeasurementRecord("fock_histogram_pair", bins, out[0][0], out[0][1], extra,
                                 out[1][0], out[1][1])

    thetas = np.asarray(protocol.thetas, dtype=float)
    if isinstance(protocol, WignerCut):
        expected = displaced_parity_curve(rho, protocol.quadrature_angle, thetas)
        kind = "wigner_cut"
        extra["modes"] = rho.space.modes
    elif isinstance(protocol, ParityFringe):
        expected = fringe_parity_curve(rho, thetas)
        kind = "parity_fringe"
        extra["n"] = rho.space.size
    else:
        raise ValidationError(f"unknown protocol {protocol!r}")
    steps = np.diff(thetas)
    if steps.size and np.allclose(steps, steps[0], rtol=1e-12, atol=0):
        extra["theta0"] = float(steps[0])
    extra.update(meta or {})
    if exact:
        return MeasurementRecord(kind, thetas, expected, np.zeros_like(expected), extra)
    values = np.empty_like(expected)
    sigmas = np.empty_like(expected)
    for i, ss in enumerate(np.random.SeedSequence(seed).spawn(thetas.size)):
        values[i], sigmas[i] = _parity_draw(np.random.default_rng(ss), expected[i], int(shots))
    return MeasurementRecord(kind, thetas, values, sigmas, extra)


# ---------------------------------------------------------------------------
# published experiments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentEntry:
    """One published lower bound on the effective size.

    ``inputs`` holds parameters printed alongside the result; ``stand_in``
    holds parameters inferred from the published bound itself, used only to
    drive the simulator because the raw records are not public.
    """

    id: str
    description: str
    system: str
    value: float
    plus: float
    minus: float
    method: str
    inputs: dict = field(default_factory=dict)
    stand_in: dict = field(default_factory=dict)


UNCERTAINTY_RELATION = "uncertainty relation"
OVERLAP_FIT = "overlap bound, with fitting"
OVERLAP_NOFIT = "overlap bound, without fitting"
SHORTCUT = "shortcut A^2 S"

_REGISTRY = (
    ExperimentEntry("vahlbruch2016", "Squeezed state, single photonic mode", "photonic-mode",
                    31.6, 0.0, 0.0, UNCERTAINTY_RELATION,
                    stand_in={"squeezing_db": 15.0}),
    ExperimentEntry("eberle2013", "Squeezed state, two photonic modes", "photonic-modes",
                    11.1, 0.3, 0.3, UNCERTAINTY_RELATION,
                    stand_in={"squeezing_db": 10.45, "db_sigma": 0.12}),
    ExperimentEntry("hosten2016", "Spin-squeezed state, cold atomic ensemble", "spin",
                    70.8, 5.1, 4.7, UNCERTAINTY_RELATION,
                    stand_in={"squeezing_db": 18.50, "db_sigma": 0.30}),
    ExperimentEntry("monz2011", "GHZ state N = 8, ion trap", "spin",
                    5.0, 0.1, 0.1, OVERLAP_FIT,
                    inputs={"N": 8}, stand_in={"A": math.sqrt(5.0 / 8.0)}),
    ExperimentEntry("vlastakis2013", "One-mode photonic cat state, alpha = 2.8", "photonic-mode",
                    10.2, 0.2, 0.2, OVERLAP_FIT,
                    inputs={"alpha": 2.8}, stand_in={"A": math.sqrt(10.2 / 31.36),
                                                     "phi": math.pi / 2}),
    ExperimentEntry("kienzler2016_nofit", "Single ion; cat state in spatial mode, alpha = 5.9",
                    "motional-mode", 49.4, 11.6, 11.6, OVERLAP_NOFIT,
                    inputs={"alpha": 5.9, "A": 0.57}),
    ExperimentEntry("kienzler2016_fit", "Single ion; cat state in spatial mode, alpha = 5.9",
                    "motional-mode", 43.4, 4.3, 4.3, OVERLAP_FIT,
                    inputs={"alpha": 5.9, "A": 0.57}),
    ExperimentEntry("wang2016_nofit", "Two-mode photonic cat state, alpha = 2.7, beta = 3.1",
                    "photonic-modes", 20.0, 2.5, 2.5, OVERLAP_NOFIT,
                    inputs={"alpha": 2.7, "beta": 3.1}),
    ExperimentEntry("wang2016_fit", "Two-mode photonic cat state, alpha = 2.7, beta = 3.1",
                    "photonic-modes", 21.5, 2.6, 2.6, OVERLAP_FIT,
                    inputs={"alpha": 2.7, "beta": 3.1}),
    ExperimentEntry("deleglise2008", "Photonic cat state, reported S and A", "photonic-mode",
                    2.3, 0.0, 0.0, SHORTCUT,
                    inputs={"S": 11.8, "A": 0.44}),
)


def registry():
    return list(_REGISTRY)


def registry_entry(entry_id):
    for e in _REGISTRY:
        if e.id == entry_id:
            return e
    raise KeyError(entry_id)


def registry_checksum():
    """Digest of the published numbers, guarding against accidental edits."""
    import hashlib
    import json

    blob = json.dumps([(e.id, e.value, e.plus, e.minus, e.method, sorted(e.inputs.items()))
                       for e in _REGISTRY])
    return hashlib.sha256(blob.encode()).hexdigest()

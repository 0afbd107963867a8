"""Command-line front end.

Exit codes: 0 success, 2 bad input (flags, files, unknown ids),
3 numerical failure (truncation, non-convergent fit), 4 no significant
result when ``--require-significant`` is given.
"""

import argparse
import json
import math
from pathlib import Path
import sys
import warnings

import numpy as np

from . import bounds, datasets, qfi, report, states
from .errors import CatsizeError, FitError, RecordFormatError, TruncationError, ValidationError
from .fitting import FitProblem, fit

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_NOT_SIGNIFICANT = 0, 2, 3, 4

CONVENTIONS = """\
Conventions
  Quadratures   X_t = exp(i t) a + exp(-i t) a^dagger, so x = X_0, p = X_{-pi/2},
                [x, p] = 2i and the vacuum variance of every quadrature is 1.
  QFI           convex roof of the variance = one quarter of the metrological
                quantum Fisher information; equals Var(X) for pure states.
  Effective     N_eff = QFI / (number of modes) in phase space,
  size          N_eff = QFI / (number of particles) for spins; coherent and
                product states give exactly 1.
  Spin          generators 2 n.J (sum of Pauli operators); J_z = N/2 - k for
                k excitations.  Parity fringes A cos(N theta + phi) use the
                physical rotation angle theta of exp(-i theta J_z).
  Wigner cut    parity of exp(-i theta x) rho exp(i theta x); for a damped cat
                A exp(-2 theta^2) cos(2 sqrt(S) theta + phi), S = 4|alpha|^2.
  Decibels      positive dB = noise below the vacuum (or coherent spin state)
                reference; N_eff = 10^(dB/10).  For spins the dB value is the
                inverse squeezing parameter 1/xi^2 on a log scale.
  Intervals     1-sigma equivalent; Monte-Carlo intervals are 16/84 percentile
                widths re-centred on the point estimate.  A bound is
                significant when the low end of its interval is above zero.
"""


class _ConventionsAction(argparse.Action):
    def __init__(self, option_strings, dest, **kw):
        super().__init__(option_strings, dest, nargs=0, default=argparse.SUPPRESS, **kw)

    def __call__(self, parser, namespace, values, option_string=None):
        print(CONVENTIONS, end="")
        parser.exit(0)


def _shots(text):
    if text.lower() in ("inf", "infinity"):
        return math.inf
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"shots must be an integer or 'inf', got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("shots must be >= 1")
    return v


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _state_flags(p, required=True):
    p.add_argument("--state", required=required,
                   choices=sorted(states._CONSTRUCTORS), help="reference state family")
    p.add_argument("--n", type=int, help="photon number (fock) or particle number (spin)")
    p.add_argument("--k", type=int, help="Dicke excitation number")
    p.add_argument("--alpha", type=float, help="cat / coherent amplitude (real)")
    p.add_argument("--beta", type=float, help="second-mode amplitude of a two-mode cat")
    p.add_argument("--r", type=float, help="squeezing parameter")
    p.add_argument("--modes", type=int, default=1, help="1 or 2 for squeezed states")
    p.add_argument("--damping", type=float, default=1.0, help="coherence amplitude A")
    p.add_argument("--phi", type=float, default=0.0, help="relative phase")
    p.add_argument("--chi-t", type=float, help="twisting strength of one_axis_twisted")
    p.add_argument("--cutoff", type=int, help="Fock cutoff per mode")


def _common(p):
    p.add_argument("--json", action="store_true", help="print a JSON mirror of the report")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="catsize",
        description="Quantum Fisher information and effective-size bounds from parity data.")
    parser.add_argument("--explain-conventions", action=_ConventionsAction,
                        help="print the physical conventions and exit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exact", help="exact QFI and effective size of a reference state")
    _state_flags(p)
    _common(p)

    p = sub.add_parser("bound", help="lower bounds from data or model parameters")
    bsub = p.add_subparsers(dest="method", required=True)

    b = bsub.add_parser("static", help="uncertainty-relation bound from moments or dB")
    b.add_argument("--input", type=Path, help="variance_record file")
    b.add_argument("--db", type=float, help="squeezing in dB (positive = squeezed)")
    b.add_argument("--db-sigma", type=float, default=0.0)
    b.add_argument("--variance", type=float, help="variance of Y")
    b.add_argument("--variance-sigma", type=float, default=0.0)
    b.add_argument("--z", type=float, help="expectation of Z = i[X, Y]")
    b.add_argument("--z-sigma", type=float, default=0.0)
    b.add_argument("--system", default="photonic-mode", choices=sorted(bounds.SYSTEMS))
    b.add_argument("--size", type=int, default=1, help="modes or particles")

    b = bsub.add_parser("pairwise", help="overlap bound on every pair of parity samples")
    b.add_argument("--input", required=True, type=Path)
    b.add_argument("--max-gap", type=int, default=3)
    b.add_argument("--mc-samples", type=int, default=bounds.DEFAULT_MC)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--plot-data", type=Path, help="per-pair CSV output")
    b.add_argument("--svg", type=Path, help="scatter plot of the per-pair bounds")

    for name, text in (("fitted", "overlap bound of a fitted model at its best pair"),
                       ("shortcut", "A^2 S (cat) or A^2 N^2 (spin) estimate")):
        b = bsub.add_parser(name, help=text)
        b.add_argument("--input", type=Path, help="record to fit first")
        b.add_argument("--model", choices=("wigner_cat", "fringe"))
        b.add_argument("--A", type=float, help="coherence amplitude")
        b.add_argument("--S", type=float, help="cat separation 4|alpha|^2")
        b.add_argument("--N", type=int, help="particle number (fringe model)")
        b.add_argument("--phi", type=float, default=0.0)

    b = bsub.add_parser("histogram", help="overlap bound on two Fock histograms")
    b.add_argument("--input", required=True, type=Path)
    b.add_argument("--mc-samples", type=int, default=bounds.DEFAULT_MC)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--normalization", type=float, default=1.0)

    for b in bsub.choices.values():
        b.add_argument("--require-significant", action="store_true",
                       help="exit 4 unless the bound is significant")
        _common(b)

    p = sub.add_parser("fit", help="fit a parity record")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--model", choices=("wigner_cat", "fringe"))
    p.add_argument("--n", type=int, help="particle number for the fringe model")
    p.add_argument("--curve", type=Path, help="write the fitted curve as CSV")
    _common(p)

    p = sub.add_parser("simulate", help="simulate a measurement record")
    _state_flags(p)
    p.add_argument("--protocol", choices=("wigner_cut", "parity_fringe", "fock_histogram_pair"))
    p.add_argument("--theta0", type=float, default=0.02, help="grid spacing")
    p.add_argument("--points", type=int, default=81)
    p.add_argument("--quadrature-angle", type=float, default=0.0)
    p.add_argument("--dtheta", type=float, default=0.05, help="histogram step")
    p.add_argument("--shots", type=_shots, default=math.inf)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", type=Path, help="record file (stdout when omitted)")
    _common(p)

    p = sub.add_parser("report", help="registry table: computed vs published")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--dataset")
    g.add_argument("--all", action="store_true")
    p.add_argument("--seed", type=int, default=report.STAND_IN_SEED)
    p.add_argument("--shots", type=_shots, default=report.STAND_IN_SHOTS)
    _common(p)
    return parser


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _state_from(args):
    kind = args.state
    given = {"n": args.n, "k": args.k, "alpha": args.alpha, "beta": args.beta, "r": args.r,
             "chi_t": args.chi_t}
    need = {"coherent": ["alpha"], "fock": ["n"], "squeezed": ["r"], "cat": ["alpha"],
            "two_mode_cat": ["alpha", "beta"], "ghz": ["n"], "dicke": ["n", "k"],
            "spin_coherent": ["n"], "one_axis_twisted": ["n", "chi_t"]}[kind]
    missing = [f"--{k.replace('_', '-')}" for k in need if given[k] is None]
    if missing:
        raise ValidationError(f"state {kind} needs {', '.join(missing)}")
    kw = {k: given[k] for k in need}
    if kind in ("cat", "two_mode_cat", "ghz"):
        kw.update(damping=args.damping, phi=args.phi)
    if kind == "squeezed":
        kw["modes"] = args.modes
    if kind in ("coherent", "fock", "squeezed", "cat", "two_mode_cat"):
        kw["cutoff"] = args.cutoff
    return states.make_state(kind, **kw)


def _emit(args, payload, lines):
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True, default=bounds._jsonable))
    else:
        for line in lines:
            print(line)


def _fmt_interval(iv):
    return "n/a" if iv is None else f"[{iv[0]:.4f}, {iv[1]:.4f}]"


def _bound_lines(r):
    return [f"method        {r.method}",
            f"QFI >=        {r.qfi_lower:.4f}",
            f"N_eff >=      {r.neff_lower:.4f}   (normalization {r.normalization:g})",
            f"interval      {_fmt_interval(r.neff_interval)}",
            f"significant   {'yes' if r.significant else 'no'}",
            f"digest        {r.inputs_digest}"]


def cmd_exact(args):
    rho = _state_from(args)
    gen, q = qfi.optimize_generator(rho)
    norm = rho.space.size
    neff = q.value / norm
    payload = {"state": args.state, "qfi": q.value, "generator": gen.label,
               "parameters": list(q.parameters), "normalization": norm, "neff": neff,
               "convention": q.convention_note}
    lines = [f"state         {args.state}",
             f"QFI           {q.value:.6f}",
             f"generator     {gen.label}",
             f"normalization {norm}",
             f"N_eff = {neff:.3f}"]
    _emit(args, payload, lines)
    return EXIT_OK


def _model_from(args):
    if args.input is not None:
        rec = datasets.read_record(args.input)
        kind = args.model or ("fringe" if rec.kind == "parity_fringe" else "wigner_cat")
        rep = fit(FitProblem(rec, kind, n=args.N))
        if not rep.converged:
            raise FitError("fit did not converge; " + "; ".join(rep.warnings))
        return rep.model()
    if args.A is None:
        raise ValidationError("give --input or the model parameters (--A with --S or --N)")
    if args.S is not None:
        return states.WignerCatModel(args.A, args.S, args.phi)
    if args.N is not None:
        return states.FringeModel(args.A, args.N, args.phi)
    raise ValidationError("model needs --S (cat) or --N (spin fringe)")


def _write_plot_data(path, scan):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("center,gap,bound,low,high\n")
        for r in scan:
            lo, hi = r.neff_interval
            fh.write(f"{r.details['center']:.10g},{r.details['gap']},{r.neff_lower:.10g},"
                     f"{lo:.10g},{hi:.10g}\n")


def _write_svg(path, scan, width=640, height=400, pad=48):
    colors = {1: "#1f77b4", 2: "#ff7f0e", 3: "#2ca02c"}
    xs = [r.details["center"] for r in scan]
    lo = [r.neff_interval[0] for r in scan]
    hi = [r.neff_interval[1] for r in scan]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(0.0, min(lo)), max(hi)
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1

    def sx(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           f'<line x1="{pad}" y1="{sy(0):.1f}" x2="{width - pad}" y2="{sy(0):.1f}" '
           'stroke="#999"/>',
           f'<text x="{width / 2}" y="{height - 8}" text-anchor="middle">pair centre</text>',
           f'<text x="12" y="{height / 2}" transform="rotate(-90 12 {height / 2})" '
           'text-anchor="middle">N_eff lower bound</text>']
    for r, x, a, b in zip(scan, xs, lo, hi):
        c = colors.get(r.details["gap"], "#555")
        out.append(f'<line x1="{sx(x):.1f}" y1="{sy(a):.1f}" x2="{sx(x):.1f}" '
                   f'y2="{sy(b):.1f}" stroke="{c}" stroke-opacity="0.5"/>')
        out.append(f'<circle cx="{sx(x):.1f}" cy="{sy(r.neff_lower):.1f}" r="2" fill="{c}"/>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def _variance_from_record(rec):
    if rec.kind != "variance_record":
        raise ValidationError(f"static bound needs a variance_record, got {rec.kind}")
    system, size = rec.meta["system"], int(rec.meta["size"])
    rows = dict(zip(rec.settings, zip(rec.values, rec.sigmas)))
    if rec.meta.get("mode") == "decibel":
        db, db_sigma = rows[0.0]
        return bounds.VarianceRecord(squeezing_db=db, db_sigma=db_sigma, system=system,
                                     size=size)
    if 0.0 not in rows or 1.0 not in rows:
        raise ValidationError("variance_record needs rows 0 (variance) and 1 (mean of Z)")
    (v, sv), (z, sz) = rows[0.0], rows[1.0]
    return bounds.VarianceRecord(variance=v, variance_sigma=sv, z_mean=z, z_sigma=sz,
                                 system=system, size=size)


def cmd_bound(args):
    if args.method == "static":
        if args.input is not None:
            rec = _variance_from_record(datasets.read_record(args.input))
        elif args.db is not None:
            rec = bounds.VarianceRecord(squeezing_db=args.db, db_sigma=args.db_sigma,
                                        system=args.system, size=args.size)
        else:
            if args.variance is None or args.z is None:
                raise ValidationError("static bound needs --db or both --variance and --z")
            rec = bounds.VarianceRecord(variance=args.variance,
                                        variance_sigma=args.variance_sigma, z_mean=args.z,
                                        z_sigma=args.z_sigma, system=args.system,
                                        size=args.size)
        result = bounds.static_bound(rec)
        payload, lines = result.to_dict(), _bound_lines(result)
    elif args.method == "pairwise":
        rec = datasets.read_record(args.input)
        scan = bounds.pairwise_scan(rec, max_gap=args.max_gap, mc_samples=args.mc_samples,
                                    seed=args.seed)
        if args.plot_data:
            _write_plot_data(args.plot_data, scan)
        if args.svg:
            _write_svg(args.svg, scan)
        result = scan.best
        per_gap = {}
        for g in range(1, args.max_gap + 1):
            rs = [r for r in scan.by_gap(g) if r.significant]
            per_gap[g] = max((r.neff_lower for r in rs), default=None)
        payload = {"pairs": len(scan), "significant": sum(r.significant for r in scan),
                   "best_per_gap": per_gap,
                   "best": None if result is None else result.to_dict()}
        lines = [f"pairs         {len(scan)} ({payload['significant']} significant)"]
        lines += [f"best gap {g}    " + ("none" if v is None else f"{v:.4f}")
                  for g, v in per_gap.items()]
        if result is None:
            lines.append("no significant pair")
        else:
            lines += [f"best pair     theta = ({result.details['theta'][0]:.6g}, "
                      f"{result.details['theta'][1]:.6g})"] + _bound_lines(result)
    elif args.method == "histogram":
        rec = datasets.read_record(args.input)
        if rec.kind != "fock_histogram_pair":
            raise ValidationError(f"histogram bound needs a fock_histogram_pair record, "
                                  f"got {rec.kind}")
        result = bounds.histogram_bound(rec.values, rec.values_q, rec.meta["dtheta"],
                                        rec.sigmas, rec.sigmas_q, args.normalization,
                                        args.mc_samples, args.seed)
        payload, lines = result.to_dict(), _bound_lines(result)
    else:
        model = _model_from(args)
        if args.method == "fitted":
            result = bounds.fitted_bound(model)
        else:
            result = bounds.shortcut_a2s(model)
        payload, lines = result.to_dict(), _bound_lines(result)
        if args.method == "shortcut":
            lines[2] = f"N_eff >=      {result.neff_lower:.4f}   (~ {result.neff_lower:.2g})"
    _emit(args, payload, lines)
    if args.require_significant and (result is None or not result.significant):
        return EXIT_NOT_SIGNIFICANT
    return EXIT_OK


def cmd_fit(args):
    rec = datasets.read_record(args.input)
    kind = args.model or ("fringe" if rec.kind == "parity_fringe" else "wigner_cat")
    rep = fit(FitProblem(rec, kind, n=args.n))
    if args.curve:
        m = rep.model()
        th = np.linspace(rec.settings[0], rec.settings[-1], 401)
        ys = states.wigner_cut_model(m, th) if kind == "wigner_cat" else states.fringe_model(m, th)
        with open(args.curve, "w", encoding="utf-8") as fh:
            fh.write("setting,model\n")
            for t, y in zip(th, ys):
                fh.write(f"{t:.10g},{y:.10g}\n")
    err = rep.stderr
    lines = [f"model         {kind}"]
    lines += [f"{k:<13} {v:.8g} +- {err[k]:.3g}" for k, v in rep.params.items()]
    lines += [f"chi2/dof      {rep.chi2:.4f} / {rep.dof}",
              f"converged     {'yes' if rep.converged else 'no'} ({rep.iterations} iterations)"]
    lines += [f"warning       {w}" for w in rep.warnings]
    _emit(args, rep.to_dict(), lines)
    return EXIT_OK if rep.converged else EXIT_NUMERIC


def cmd_simulate(args):
    rho = _state_from(args)
    proto_name = args.protocol or ("parity_fringe" if rho.space.kind == "spin" else "wigner_cut")
    if proto_name == "fock_histogram_pair":
        proto = datasets.FockHistogramPair(args.dtheta, args.quadrature_angle)
    else:
        grid = datasets.uniform_grid(args.theta0, args.points)
        if proto_name == "wigner_cut":
            proto = datasets.WignerCut(grid, args.quadrature_angle)
        else:
            proto = datasets.ParityFringe(grid)
    rec = datasets.simulate_record(rho, proto, shots=args.shots, seed=args.seed,
                                   meta={"state": args.state})
    text = datasets.format_record(rec)
    if args.output:
        args.output.write_text(text, encoding="utf-8")
    if args.json:
        print(json.dumps({"kind": rec.kind, "points": len(rec), "meta": rec.meta,
                          "output": str(args.output) if args.output else None},
                         indent=2, sort_keys=True, default=bounds._jsonable))
    elif args.output:
        print(f"wrote {len(rec)} {rec.kind} samples to {args.output}")
    else:
        print(text, end="")
    return EXIT_OK


def cmd_report(args):
    ids = None if args.all else [args.dataset]
    try:
        rows = report.report(ids, shots=args.shots, seed=args.seed)
    except KeyError:
        raise ValidationError(f"unknown dataset {args.dataset!r}; known: "
                              f"{', '.join(e.id for e in datasets.registry())}") from None
    header = f"{'id':<20} {'method':<32} {'published':>16} {'computed':>10} " \
             f"{'interval':>20} {'ratio':>6}  source"
    lines = [header, "-" * len(header)]
    for r in rows:
        v, plus, minus = r.published
        pub = f"{v:.1f}" if plus == minus == 0 else (
            f"{v:.1f} +- {plus:g}" if plus == minus else f"{v:.1f} +{plus:g}/-{minus:g}")
        if r.result is None:
            comp, iv, ratio = "-", "-", "-"
        else:
            comp = f"{r.neff_lower:.2f}"
            lo, hi = r.neff_interval
            iv = f"[{lo:.2f}, {hi:.2f}]"
            ratio = f"{r.ratio:.3f}"
        lines.append(f"{r.id:<20} {r.method:<32} {pub:>16} {comp:>10} {iv:>20} {ratio:>6}  "
                     f"{r.source}")
    _emit(args, {"rows": [r.to_dict() for r in rows]}, lines)
    return EXIT_OK


COMMANDS = {"exact": cmd_exact, "bound": cmd_bound, "fit": cmd_fit,
            "simulate": cmd_simulate, "report": cmd_report}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore" if getattr(args, "json", False) else "default")
            return COMMANDS[args.command](args)
    except (TruncationError, FitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValidationError, RecordFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (CatsizeError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

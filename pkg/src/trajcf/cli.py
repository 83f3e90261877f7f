"""Command-line front end.

Subcommands: fit, score, update, downdate, synth, baseline, info.  Exit
codes: 0 success, 2 input error, 3 numerical error, 4 model/probe
mismatch.  Every run prints a header line with the effective settings
(including defaulted ones) so results are auditable; no timestamps or
other run-varying text is ever emitted, which makes all artifacts
byte-reproducible.

Three CSV layouts are auto-detected by the first header cell:

* ``t``    — trajectory layout: first column sample times, one curve per
             subsequent column, header carries the ids;
* ``coef`` — coefficient layout: row k holds coefficient k of every curve,
             one curve per column;
* ``id``   — wide coefficient layout: one curve per row, ``id,c1,...,cn``.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys

import numpy as np

from . import model as _model
from . import scoring as _scoring
from . import synth as _synth
from .errors import InputError, MismatchError, NumericalError
from .model import TrajectoryDataset
from .projection import (
    CoefficientVector,
    SampledTrajectory,
    default_quad_points,
    project,
    reconstruct,
    resample_to_nodes,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_MISMATCH = 4

_FALLBACK_MULTIPLE = 10.0


# ---------------------------------------------------------------------------
# CSV plumbing
# ---------------------------------------------------------------------------

def _read_rows(path: str) -> list[list[str]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh) if any(cell.strip() for cell in row)]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: file is empty")
    return rows


def _cell_float(cell: str, path: str, row: int, col: int) -> float:
    try:
        return float(cell)
    except ValueError as exc:
        raise InputError(
            f"{path}: row {row + 1}, column {col + 1}: not a number: {cell!r}"
        ) from exc


def _read_input(path: str):
    """Parse any accepted layout.

    Returns ``("traj", ids, times, values)`` with values shaped (M, K), or
    ``("coef", ids, coeffs)`` with coeffs shaped (K, n).
    """
    rows = _read_rows(path)
    head = rows[0][0].strip().lower()
    if head == "t":
        ids = [c.strip() for c in rows[0][1:]]
        width = len(rows[0])
        times, values = [], []
        for r, row in enumerate(rows[1:], start=1):
            if len(row) != width:
                raise InputError(
                    f"{path}: row {r + 1} has {len(row)} cells, expected {width}"
                )
            times.append(_cell_float(row[0], path, r, 0))
            values.append([_cell_float(c, path, r, j + 1) for j, c in enumerate(row[1:])])
        if times and len(times) < 2:
            raise InputError(f"{path}: trajectories need at least 2 sample rows")
        return "traj", ids, np.asarray(times), np.asarray(values)
    if head == "coef":
        ids = [c.strip() for c in rows[0][1:]]
        width = len(rows[0])
        coeff_rows = []
        for r, row in enumerate(rows[1:], start=1):
            if len(row) != width:
                raise InputError(
                    f"{path}: row {r + 1} has {len(row)} cells, expected {width}"
                )
            k = _cell_float(row[0], path, r, 0)
            if k != r:
                raise InputError(
                    f"{path}: row {r + 1} says coefficient {k:g}, expected {r}"
                )
            coeff_rows.append([_cell_float(c, path, r, j + 1) for j, c in enumerate(row[1:])])
        coeffs = np.asarray(coeff_rows, dtype=float).T if coeff_rows else np.empty((len(ids), 0))
        return "coef", ids, coeffs
    if head == "id":
        ids, vec_rows = [], []
        width = len(rows[0])
        for r, row in enumerate(rows[1:], start=1):
            if len(row) != width:
                raise InputError(
                    f"{path}: row {r + 1} has {len(row)} cells, expected {width}"
                )
            ids.append(row[0].strip())
            vec_rows.append([_cell_float(c, path, r, j + 1) for j, c in enumerate(row[1:])])
        coeffs = np.asarray(vec_rows, dtype=float) if vec_rows else np.empty((0, width - 1))
        return "coef", ids, coeffs
    raise InputError(
        f"{path}: unrecognized header cell {rows[0][0]!r} "
        "(expected 't', 'coef', or 'id')"
    )


def _check_times_in_domain(times: np.ndarray, domain, path: str, exc_cls) -> None:
    lo, hi = domain
    span = hi - lo
    if times.size and (times[0] < lo - 1e-12 * span or times[-1] > hi + 1e-12 * span):
        raise exc_cls(
            f"{path}: sample times [{times[0]:g}, {times[-1]:g}] leave the "
            f"domain [{lo:g}, {hi:g}]"
        )


def _probes_from_input(parsed, domain, n: int, quad_points, path: str, mismatch_exc):
    """Uniform probe view: list of (id, CoefficientVector, curve-or-None)."""
    if parsed[0] == "traj":
        _, ids, times, values = parsed
        _check_times_in_domain(times, domain, path, mismatch_exc)
        probes = []
        for j, pid in enumerate(ids):
            traj = SampledTrajectory(times=times, values=values[:, j], id=pid, domain=domain)
            probes.append((pid, project(traj, n, quad_points), traj))
        return probes
    _, ids, coeffs = parsed
    return [
        (pid, CoefficientVector(coeffs=coeffs[j], id=pid), None)
        for j, pid in enumerate(ids)
    ]


def _dataset_from_input(parsed, domain, n: int, quad_points, path: str) -> TrajectoryDataset:
    if parsed[0] == "traj":
        _, ids, times, values = parsed
        if not ids or times.size == 0:
            raise InputError(f"{path}: no trajectories to fit")
        _check_times_in_domain(times, domain, path, InputError)
        trajectories = [
            SampledTrajectory(times=times, values=values[:, j], id=pid, domain=domain)
            for j, pid in enumerate(ids)
        ]
        return TrajectoryDataset.from_trajectories(trajectories, n, quad_points)
    _, ids, coeffs = parsed
    if coeffs.shape[0] == 0 or coeffs.shape[1] == 0:
        raise InputError(f"{path}: no coefficient data to fit")
    return TrajectoryDataset.from_coefficients(coeffs, domain=domain, ids=ids)


def _write_wide_csv(path: str, vectors, n: int) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id"] + [f"c{k}" for k in range(1, n + 1)])
        for vec in vectors:
            writer.writerow([vec.id or ""] + [repr(float(x)) for x in vec.coeffs[:n]])


def _write_trajectory_csv(path: str, ids, times, value_columns) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + list(ids))
        for i, t in enumerate(times):
            writer.writerow([repr(float(t))] + [repr(float(col[i])) for col in value_columns])


def _write_histogram(path: str, cds) -> None:
    cds = np.asarray(cds, dtype=float)
    if cds.size == 0:
        edges = np.array([0.0, 1.0])
        counts = np.array([0])
    else:
        lo, hi = float(cds.min()), float(cds.max())
        if hi <= lo:
            hi = lo + 1.0
        edges = np.linspace(lo, hi, 51)
        counts, _ = np.histogram(cds, bins=edges)
    with open(path, "w", encoding="utf-8") as fh:
        for i, cnt in enumerate(counts):
            fh.write(f"{float(edges[i])!r} {float(edges[i + 1])!r} {int(cnt)}\n")


def _write_overlay(path: str, probes, domain) -> None:
    """Plot-ready curves: 201 uniformly spaced points across the domain."""
    lo, hi = domain
    t = np.linspace(lo, hi, 201)
    unit = np.linspace(-1.0, 1.0, 201)
    cols, ids = [], []
    for pid, cv, traj in probes:
        ids.append(pid)
        cols.append(resample_to_nodes(traj, unit) if traj is not None
                    else reconstruct(cv, unit))
    _write_trajectory_csv(path, ids, t, cols)


# ---------------------------------------------------------------------------
# shared option plumbing
# ---------------------------------------------------------------------------

def _domain_arg(text: str):
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"domain must look like lo:hi, got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"domain must be numeric lo:hi, got {text!r}")
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
        raise argparse.ArgumentTypeError(f"domain needs lo < hi, got {text!r}")
    return (lo, hi)


def _header(command: str, pairs) -> None:
    rendered = " ".join(f"{k}={v}" for k, v in pairs)
    print(f"# trajcf {command} | {rendered}")


def _resolve_threshold(model, args, calibration: TrajectoryDataset | None):
    if args.threshold_multiple is not None and args.threshold_quantile is not None:
        raise InputError("choose one of --threshold-quantile / --threshold-multiple")
    if args.threshold_multiple is not None:
        return _scoring.calibrate(model, None, method="multiple",
                                  param=args.threshold_multiple), ""
    if calibration is not None:
        q = _scoring.DEFAULT_QUANTILE if args.threshold_quantile is None else args.threshold_quantile
        return _scoring.calibrate(model, calibration, method="quantile", param=q), ""
    if args.threshold_quantile is not None:
        raise InputError("--threshold-quantile needs --calibration data to take a quantile of")
    thr = _scoring.calibrate(model, None, method="multiple", param=_FALLBACK_MULTIPLE)
    return thr, f"no calibration data given; defaulting to multiple({_FALLBACK_MULTIPLE:g})"


def _load_calibration(args, model):
    if getattr(args, "calibration", None) is None:
        return None
    parsed = _read_input(args.calibration)
    return _dataset_from_input(parsed, model.domain, model.n,
                               getattr(args, "quad_points", None), args.calibration)


def _emit_report(lines: list[str], output: str | None) -> None:
    if output is None:
        for ln in lines:
            print(ln)
    else:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + ("\n" if lines else ""))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_fit(args) -> int:
    eps_text = "auto(1e-8*trace/m)" if args.epsilon is None else repr(args.epsilon)
    quad = args.quad_points or default_quad_points(args.degree_n)
    _header("fit", [
        ("input", args.input), ("output", args.output),
        ("d", args.degree_d), ("n", args.degree_n),
        ("epsilon", eps_text), ("quad_points", quad),
        ("domain", f"{args.domain[0]:g}:{args.domain[1]:g}"),
        ("deterministic", args.deterministic),
    ])
    parsed = _read_input(args.input)
    dataset = _dataset_from_input(parsed, args.domain, args.degree_n, quad, args.input)
    model = _model.fit(dataset, args.degree_d, args.degree_n, epsilon=args.epsilon)
    _model.save(model, args.output)
    print(f"# fitted: m={model.size} N={model.sample_count} "
          f"epsilon={model.epsilon!r} "
          f"smallest_eigenvalue={float(model.eigenvalues[0])!r} "
          f"largest_eigenvalue={float(model.eigenvalues[-1])!r}")
    print(f"# wrote {args.output}")
    return EXIT_OK


def cmd_score(args) -> int:
    model = _model.load(args.model)
    if args.domain is not None and tuple(args.domain) != model.domain:
        raise MismatchError(
            f"probe domain {args.domain} does not match the model domain {model.domain}"
        )
    calibration = _load_calibration(args, model)
    threshold, note = _resolve_threshold(model, args, calibration)
    _header("score", [
        ("model", args.model), ("input", args.input),
        ("epsilon", repr(model.epsilon)),
        ("quad_points", args.quad_points or default_quad_points(model.n)),
        ("threshold", threshold.method), ("tau", repr(threshold.value)),
        ("deterministic", args.deterministic),
    ])
    if note:
        print(f"# note: {note}")
    parsed = _read_input(args.input)
    probes = _probes_from_input(parsed, model.domain, model.n,
                                args.quad_points, args.input, MismatchError)
    lines = [_scoring.report_header()]
    cds = []
    n_out = 0
    for pid, cv, _traj in probes:
        rep = _scoring.classify(model, threshold, cv)
        cds.append(rep.cd)
        n_out += rep.verdict == "Outlier"
        lines.append(_scoring.report_line(rep))
    _emit_report(lines, args.output)
    if args.histogram_out:
        _write_histogram(args.histogram_out, cds)
        print(f"# wrote histogram {args.histogram_out}")
    if args.overlay_out:
        _write_overlay(args.overlay_out, probes, model.domain)
        print(f"# wrote overlay {args.overlay_out}")
    mean = float(np.mean(cds)) if cds else float("nan")
    print(f"# summary: probes={len(probes)} outliers={n_out} "
          f"inliers={len(probes) - n_out} mean_cd={mean!r}")
    return EXIT_OK


def _absorb(args, op, command: str) -> int:
    model = _model.load(args.model)
    _header(command, [
        ("model", args.model), ("input", args.input), ("output", args.output),
        ("deterministic", args.deterministic),
    ])
    parsed = _read_input(args.input)
    probes = _probes_from_input(parsed, model.domain, model.n,
                                args.quad_points, args.input, InputError)
    for _pid, cv, _traj in probes:
        model = op(model, cv)
    _model.save(model, args.output)
    print(f"# absorbed={len(probes)} N={model.sample_count}")
    print(f"# wrote {args.output}")
    return EXIT_OK


def cmd_update(args) -> int:
    return _absorb(args, _model.update, "update")


def cmd_downdate(args) -> int:
    return _absorb(args, _model.downdate, "downdate")


def cmd_synth(args) -> int:
    _header("synth", [
        ("example", args.example), ("count", args.count), ("seed", args.seed),
        ("radius", repr(args.radius)), ("output", args.output),
        ("deterministic", args.deterministic),
    ])
    if args.example == "example1":
        exp = _synth.generate_example1(args.count, args.seed, radius=args.radius)
    else:
        exp = _synth.generate_example2(args.count, args.seed, radius=args.radius)
    n = len(exp.nominal.coeffs)
    prefix = args.output
    data_path = f"{prefix}_data.csv"
    curves_path = f"{prefix}_curves.csv"
    outlier_path = f"{prefix}_outlier.csv"
    nominal_path = f"{prefix}_nominal.csv"
    _write_wide_csv(data_path, exp.dataset.coefficient_vectors, n)
    curves = [tr for tr, _ in exp.dataset.entries]
    _write_trajectory_csv(curves_path, [tr.id for tr in curves],
                          curves[0].times, [tr.values for tr in curves])
    _write_wide_csv(outlier_path, [exp.outlier], n)
    _write_wide_csv(nominal_path, [exp.nominal], n)
    for p in (data_path, curves_path, outlier_path, nominal_path):
        print(f"# wrote {p}")
    return EXIT_OK


def cmd_baseline(args) -> int:
    model = _model.load(args.model)
    calibration = _load_calibration(args, model)
    if calibration is None:
        raise InputError("baseline scoring needs --calibration (the reference database)")
    threshold, note = _resolve_threshold(model, args, calibration)
    quad = args.quad_points or 129
    cloud = _scoring.PointwiseChristoffel.fit(calibration, args.baseline_degree, quad)
    delta = cloud.cloud_floor if args.delta is None else args.delta
    _header("baseline", [
        ("model", args.model), ("input", args.input), ("calibration", args.calibration),
        ("threshold", threshold.method), ("tau", repr(threshold.value)),
        ("baseline_degree", args.baseline_degree), ("quad_points", quad),
        ("delta", repr(delta)),
        ("delta_source", "in-cloud-floor" if args.delta is None else "flag"),
        ("deterministic", args.deterministic),
    ])
    if note:
        print(f"# note: {note}")
    parsed = _read_input(args.input)
    probes = _probes_from_input(parsed, model.domain, model.n,
                                args.quad_points, args.input, MismatchError)
    lines = [_scoring.report_header() + ",naive_fraction"]
    for pid, cv, traj in probes:
        subject = traj if traj is not None else cv
        l2 = _scoring.nearest_trajectory_score(calibration, subject)
        rep = _scoring.classify(model, threshold, cv, baseline_l2=l2)
        frac = cloud.fraction_below(subject, delta)
        lines.append(_scoring.report_line(rep) + f",{frac!r}")
    _emit_report(lines, args.output)
    print(f"# summary: probes={len(probes)}")
    return EXIT_OK


def cmd_info(args) -> int:
    model = _model.load(args.model)
    _header("info", [("model", args.model)])
    print(f"d {model.d}")
    print(f"n {model.n}")
    print(f"m {model.size}")
    print(f"epsilon {model.epsilon!r}")
    print(f"N {model.sample_count}")
    print(f"domain {model.domain[0]:g}:{model.domain[1]:g}")
    print(f"smallest_eigenvalue {float(model.eigenvalues[0])!r}")
    print(f"largest_eigenvalue {float(model.eigenvalues[-1])!r}")
    print(f"provenance {model.provenance}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(sp, *, model=False, input_=False, output=False, quad=True):
    if model:
        sp.add_argument("--model", required=True, help="model file path")
    if input_:
        sp.add_argument("--input", required=True, help="input CSV path")
    if output:
        sp.add_argument("--output", help="output path (default: stdout for reports)")
    if quad:
        sp.add_argument("--quad-points", type=int, default=None,
                        help="quadrature point count (default: max(256, 8n); 129 for the pointwise baseline)")
    sp.add_argument("--deterministic", action="store_true",
                    help="assert byte-reproducible outputs (all runs are; this records the intent)")


def _add_threshold_flags(sp):
    sp.add_argument("--threshold-quantile", type=float, default=None,
                    help="nearest-rank quantile over --calibration data (default 0.999)")
    sp.add_argument("--threshold-multiple", type=float, default=None,
                    help="threshold = multiple * basis dimension")
    sp.add_argument("--calibration", default=None,
                    help="CSV of reference data for quantile calibration / baselines")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trajcf",
        description="Detect abnormal trajectories against a reference database "
                    "via Christoffel-Darboux scores on orthonormal coefficient embeddings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a model from a trajectory/coefficient CSV")
    _add_common(p_fit, input_=True)
    p_fit.add_argument("--output", required=True, help="model file to write")
    p_fit.add_argument("--degree-d", type=int, default=4, help="algebraic degree bound (default 4)")
    p_fit.add_argument("--degree-n", type=int, default=4, help="harmonic degree bound (default 4)")
    p_fit.add_argument("--epsilon", type=float, default=None,
                       help="diagonal shift; default auto = 1e-8 * trace(S/N)/m; 0 demands nonsingularity")
    p_fit.add_argument("--domain", type=_domain_arg, default=(-1.0, 1.0),
                       help="time domain lo:hi of the input curves (default -1:1)")
    p_fit.set_defaults(func=cmd_fit)

    p_score = sub.add_parser("score", help="score probe trajectories against a model")
    _add_common(p_score, model=True, input_=True, output=True)
    _add_threshold_flags(p_score)
    p_score.add_argument("--domain", type=_domain_arg, default=None,
                         help="expected probe domain lo:hi; must match the model")
    p_score.add_argument("--histogram-out", default=None,
                         help="write 'lo hi count' histogram bins of the probe CD values")
    p_score.add_argument("--overlay-out", default=None,
                         help="write probe curves sampled at 201 uniform points (trajectory CSV)")
    p_score.set_defaults(func=cmd_score)

    p_update = sub.add_parser("update", help="absorb new trajectories into a model")
    _add_common(p_update, model=True, input_=True)
    p_update.add_argument("--output", required=True, help="model file to write")
    p_update.set_defaults(func=cmd_update)

    p_down = sub.add_parser("downdate", help="remove absorbed trajectories from a model")
    _add_common(p_down, model=True, input_=True)
    p_down.add_argument("--output", required=True, help="model file to write")
    p_down.set_defaults(func=cmd_downdate)

    p_synth = sub.add_parser("synth", help="generate the bundled synthetic experiments")
    p_synth.add_argument("example", choices=("example1", "example2"),
                         help="which synthetic family to generate")
    p_synth.add_argument("--count", type=int, default=1000, help="number of reference curves")
    p_synth.add_argument("--seed", type=int, default=0, help="generator seed")
    p_synth.add_argument("--radius", type=float, default=_synth.DEFAULT_RADIUS,
                         help="inlier perturbation radius (default 0.1)")
    p_synth.add_argument("--output", required=True,
                         help="path prefix; writes <prefix>_{data,curves,outlier,nominal}.csv")
    p_synth.add_argument("--deterministic", action="store_true",
                         help="assert byte-reproducible outputs")
    p_synth.set_defaults(func=cmd_synth)

    p_base = sub.add_parser("baseline", help="score probes with the CD model and both baselines")
    _add_common(p_base, model=True, input_=True, output=True)
    _add_threshold_flags(p_base)
    p_base.add_argument("--baseline-degree", type=int, default=4,
                        help="total degree of the bivariate pointwise model (default 4)")
    p_base.add_argument("--delta", type=float, default=None,
                        help="pointwise cutoff; default: smallest in-cloud pointwise value")
    p_base.set_defaults(func=cmd_baseline)

    p_info = sub.add_parser("info", help="print a model file's metadata")
    p_info.add_argument("--model", required=True, help="model file path")
    p_info.set_defaults(func=cmd_info)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"trajcf: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"trajcf: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except MismatchError as exc:
        print(f"trajcf: model/probe mismatch: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except OSError as exc:
        print(f"trajcf: i/o error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()

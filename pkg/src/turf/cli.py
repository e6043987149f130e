"""Command-line entry point.

Exit codes: 0 on success, 1 on bad input, 2 on a numeric failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from turf import __version__
from turf.numerics import QuadratureError, ZeroPolynomialError

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _common(p, fit=False):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None, help="worker processes (TURF_THREADS overrides)")
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    if fit:
        p.add_argument("--d", type=int, default=1, help="polynomial degree")
        p.add_argument("--t", type=int, default=1, help="piece budget when not cross-validating")
        p.add_argument("--c1", type=float, default=1.0)
        p.add_argument("--alpha", type=float, default=0.5)
        p.add_argument("--gamma", type=float, default=0.5)
        p.add_argument("--delta", type=float, default=0.1)
        p.add_argument("--beta", type=float, default=None, help="merge overshoot factor")
        p.add_argument("--beta-cv", type=float, default=0.5)
        p.add_argument("--cv", action="store_true", help="choose t by cross-validation")
        p.add_argument("--normalize", action="store_true", help="clip and renormalize the output")
        p.add_argument("--partitioner", choices=("merge", "stitch"), default="merge")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="turf", description="Piecewise-polynomial density estimation.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit a samples file (one number per line)")
    p.add_argument("samples")
    _common(p, fit=True)

    p = sub.add_parser("eval", help="l1 distance between an estimate and a model")
    p.add_argument("estimate", help="estimate JSON written by `fit`")
    p.add_argument("model", help="model JSON file, or one of beta|gamma|gauss")
    p.add_argument("--noisy", action="store_true", help="perturb a named model")
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--normalize", action="store_true")
    _common(p)

    p = sub.add_parser("experiment", help="run an experiment spec to CSV and SVG")
    p.add_argument("spec")
    p.add_argument("--svg", default=None)
    p.add_argument("--timings", action="store_true", help="record wall times (CSV no longer reproducible)")
    _common(p)

    p = sub.add_parser("verify", help="Monte-Carlo checks of the bounds")
    p.add_argument("--quick", action="store_true")
    _common(p)

    p = sub.add_parser("nodes", help="print or recompute the node table")
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--recompute", action="store_true")
    _common(p)
    return parser


def _write(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _read_samples(path):
    try:
        with open(path, encoding="utf-8") as fh:
            vals = [float(line) for line in fh if line.strip()]
    except ValueError as exc:
        raise InputError(f"{path}: not one number per line ({exc})") from None
    if not vals:
        raise InputError(f"{path}: no samples")
    xs = np.asarray(vals)
    if not np.all(np.isfinite(xs)):
        raise InputError(f"{path}: samples must be finite")
    return xs


def cmd_fit(a) -> int:
    from turf.estimator import EstimatorConfig, estimate_to_json, turf
    from turf.measures import EmpiricalMeasure
    from turf.modelsel import cv_turf

    e = EmpiricalMeasure(_read_samples(a.samples))
    try:
        cfg = EstimatorConfig(t=a.t, d=a.d, alpha=a.alpha, gamma=a.gamma, c1=a.c1,
                              partitioner=a.partitioner, normalize_output=a.normalize,
                              **({} if a.beta is None else {"beta": a.beta}))
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if a.cv:
        t, g = cv_turf(e, a.d, a.alpha, a.beta_cv, a.delta, cfg)
    else:
        t, g = a.t, turf(e, a.t, a.d, a.alpha, cfg)
    _write(estimate_to_json(g, cfg, t=t, n=e.n) + "\n", a.out)
    return EXIT_OK


def _load_model(spec, noisy, seed):
    from turf.synth import MIXTURES, model_from_dict, named_model

    if spec in MIXTURES:
        return named_model(spec, noisy, seed)
    with open(spec, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


def cmd_eval(a) -> int:
    from turf.estimator import estimate_from_json
    from turf.numerics import l1_vs_model, normalize

    with open(a.estimate, encoding="utf-8") as fh:
        g, _ = estimate_from_json(fh.read())
    model = _load_model(a.model, a.noisy, a.seed)
    if a.normalize:
        g = normalize(g)
    _write(f"{l1_vs_model(g, model, tol=a.tol)!r}\n", a.out)
    return EXIT_OK


def cmd_experiment(a) -> int:
    from turf.bench import ExperimentSpec, rows_csv, run, summarize, summary_csv, write_svg

    with open(a.spec, encoding="utf-8") as fh:
        doc = json.load(fh)
    doc.setdefault("seed", a.seed)
    if a.timings:
        doc["timings"] = True
    out = a.out or doc.get("csv")
    svg = a.svg or doc.get("svg")
    # outputs are written here, so the experiment document carries no paths
    spec = ExperimentSpec.from_dict({**doc, "csv": None, "svg": None})
    rows = run(spec, a.threads)
    _write(rows_csv(rows), out)
    summary = summarize(rows)
    if svg:
        write_svg(summary, svg)
    sys.stderr.write(summary_csv(summary))
    return EXIT_OK if all(not r.error for r in rows) else EXIT_NUMERIC


def cmd_verify(a) -> int:
    from turf.verify import run_all

    reports = run_all(a.seed, quick=a.quick)
    if a.out:
        os.makedirs(a.out, exist_ok=True)
    for r in reports:
        if a.out:
            r.to_csv(os.path.join(a.out, f"{r.name}.csv"))
        print(f"{r.name}: {'PASS' if r.ok else 'FAIL'} ({len(r.rows)} rows, {r.violations} violations)")
    return EXIT_OK if all(r.ok for r in reports) else EXIT_NUMERIC


def cmd_nodes(a) -> int:
    from turf.polyfit import build_table, node_table, optimize_nodes, table_json

    if a.d is not None and not 0 <= a.d <= 8:
        raise InputError("d must be in 0..8")
    if a.recompute:
        specs = [optimize_nodes(a.d)] if a.d is not None else build_table()
    else:
        specs = [s for s in node_table() if a.d is None or s.d == a.d]
    if a.out:
        _write(table_json(specs), a.out)
        return EXIT_OK
    for s in specs:
        nodes = ", ".join(f"{v:.6g}" for v in s.nodes)
        print(f"d={s.d} nodes=({nodes}) ratio={s.ratio:.6f} source={s.source}")
    return EXIT_OK


COMMANDS = {"fit": cmd_fit, "eval": cmd_eval, "experiment": cmd_experiment,
            "verify": cmd_verify, "nodes": cmd_nodes}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (QuadratureError, ZeroPolynomialError, np.linalg.LinAlgError, FloatingPointError,
            ArithmeticError) as exc:
        print(f"turf: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, ValueError, KeyError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"turf: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

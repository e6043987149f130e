"""Error-versus-sample-size experiments with CSV and SVG output."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from xml.sax.saxutils import escape

import numpy as np

from turf.estimator import EstimatorConfig, merge_only, turf
from turf.measures import EmpiricalMeasure
from turf.modelsel import cv_turf
from turf.numerics import QuadratureError, l1_vs_model, normalize
from turf.synth import model_from_dict

ESTIMATORS = ("turf", "merge_only", "stitch_only")


@dataclass(frozen=True)
class EstimatorSpec:
    name: str
    config: dict = field(default_factory=dict)
    label: str | None = None

    def __post_init__(self):
        if self.name not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}")
        EstimatorConfig(**self.config)

    @property
    def key(self) -> str:
        return self.label or self.name


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: every model x estimator x n x seed cell.

    ``models`` holds model documents as accepted by
    :func:`turf.synth.model_from_dict`, each with an optional ``label``.
    """

    models: tuple
    estimators: tuple
    n: tuple = (1000, 4000, 16000)
    d: int = 1
    seeds: int = 10
    cv: bool = True
    alpha: float = 0.5
    beta_cv: float = 0.5
    delta: float = 0.1
    cprime: float = 1.0
    cdprime: float = 1.0
    eval_tol: float = 1e-3
    normalize: bool = True
    seed: int = 0
    timings: bool = False
    csv: str | None = None
    svg: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "models", tuple(self.models))
        ests = tuple(e if isinstance(e, EstimatorSpec) else EstimatorSpec(**e) for e in self.estimators)
        object.__setattr__(self, "estimators", ests)
        object.__setattr__(self, "n", tuple(int(v) for v in self.n))
        if not self.models or not self.estimators:
            raise ValueError("need at least one model and one estimator")
        if not self.n or list(self.n) != sorted(set(self.n)):
            raise ValueError("the n grid must be strictly ascending")
        if self.seeds < 1:
            raise ValueError("seeds must be at least 1")
        labels = [model_label(m) for m in self.models]
        if len(set(labels)) != len(labels):
            raise ValueError("model labels must be unique")
        keys = [e.key for e in self.estimators]
        if len(set(keys)) != len(keys):
            raise ValueError("estimator labels must be unique")
        for m in self.models:
            model_from_dict(m)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentSpec":
        doc = dict(doc)
        if "model" in doc and "models" not in doc:
            m = {"model": doc.pop("model")}
            if "perturbation" in doc:
                m["perturbation"] = doc.pop("perturbation")
            doc["models"] = [m]
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown spec keys: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentSpec":
        return cls.from_dict(json.loads(text))


def model_label(doc: dict) -> str:
    if "label" in doc:
        return str(doc["label"])
    base = doc.get("model", "custom")
    return f"{base}+noise" if doc.get("perturbation") is not None else base


@dataclass
class ResultRow:
    model: str
    estimator: str
    d: int
    n: int
    seed: int
    l1_error: float | None
    pieces_out: int | None
    t_selected: int | None
    wall_time: float | None
    error: str = ""


@dataclass
class SummaryRow:
    model: str
    estimator: str
    n: int
    count: int
    mean_l1: float
    stderr_l1: float
    errors: int


def _fit(spec: ExperimentSpec, est: EstimatorSpec, e: EmpiricalMeasure):
    cfg = EstimatorConfig(**{"d": spec.d, "alpha": spec.alpha, **est.config})
    if est.name == "stitch_only":
        return merge_only(e, 1, cfg.d, cfg.with_(partitioner="stitch")), None
    if spec.cv:
        which = "turf" if est.name == "turf" else "merge"
        return cv_turf(e, cfg.d, cfg.alpha, spec.beta_cv, spec.delta, cfg,
                       spec.cprime, spec.cdprime, estimator=which)[::-1]
    if est.name == "turf":
        return turf(e, cfg.t, cfg.d, cfg.alpha, cfg), cfg.t
    return merge_only(e, cfg.t, cfg.d, cfg), cfg.t


def run_cell(spec: ExperimentSpec, mi: int, ei: int, n: int, seed: int) -> ResultRow:
    """Sample, fit and score one cell; failures become an error row."""
    mdoc = spec.models[mi]
    label = model_label(mdoc)
    est = spec.estimators[ei]
    row = ResultRow(label, est.key, spec.d, n, seed, None, None, None, None)
    try:
        model = model_from_dict(mdoc)
        # the sample depends only on (model, n, seed), so estimators see the same data
        e = EmpiricalMeasure(model.draw(spec.seed, n, "sample", label, n, seed))
        t0 = time.perf_counter()
        g, t_sel = _fit(spec, est, e)
        elapsed = time.perf_counter() - t0
        scored = normalize(g) if spec.normalize else g
        row.l1_error = l1_vs_model(scored, model, tol=spec.eval_tol)
        row.pieces_out = g.n_pieces
        row.t_selected = t_sel
        row.wall_time = elapsed if spec.timings else None
    except (ValueError, ArithmeticError, QuadratureError, np.linalg.LinAlgError) as exc:
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def _cell_args(spec):
    return [(spec, mi, ei, n, s)
            for mi in range(len(spec.models))
            for ei in range(len(spec.estimators))
            for n in spec.n
            for s in range(spec.seeds)]


def _run_star(args):
    return run_cell(*args)


def thread_count(threads: int | None = None) -> int:
    env = os.environ.get("TURF_THREADS")
    if env:
        threads = int(env)
    return max(1, int(threads or 1))


def run(spec: ExperimentSpec, threads: int | None = None) -> list[ResultRow]:
    """Every cell, in model/estimator/n/seed order, whatever the pool does."""
    cells = _cell_args(spec)
    workers = thread_count(threads)
    if workers == 1:
        rows = [run_cell(*c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_star, cells, chunksize=1))
    if spec.csv:
        write_csv(rows, spec.csv)
    if spec.svg:
        write_svg(summarize(rows), spec.svg)
    return rows


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def rows_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    names = [f.name for f in fields(ResultRow)]
    w.writerow(names)
    for r in rows:
        d = asdict(r)
        w.writerow([_cell(d[k]) for k in names])
    return buf.getvalue()


def write_csv(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(rows_csv(rows))


def read_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


def summarize(rows) -> list[SummaryRow]:
    """Mean and standard error of the l1 error per (model, estimator, n); error rows are counted apart."""
    groups: dict[tuple, list] = {}
    for r in rows:
        groups.setdefault((r.model, r.estimator, r.n), []).append(r)
    out = []
    for (m, est, n), rs in groups.items():
        vals = np.array([r.l1_error for r in rs if not r.error], dtype=float)
        errs = sum(1 for r in rs if r.error)
        mean = float(vals.mean()) if vals.size else math.nan
        se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
        out.append(SummaryRow(m, est, n, int(vals.size), mean, se, errs))
    return out


def summary_csv(summary) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    names = [f.name for f in fields(SummaryRow)]
    w.writerow(names)
    for s in summary:
        d = asdict(s)
        w.writerow([_cell(d[k]) for k in names])
    return buf.getvalue()


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def render_svg(summary, width: int = 640, panel_height: int = 300) -> str:
    """One panel per model: log-x ``n``, linear-y mean l1, a polyline per estimator with
    +-1 standard-error bars."""
    models = list(dict.fromkeys(s.model for s in summary))
    ests = list(dict.fromkeys(s.estimator for s in summary))
    left, right, top, bottom = 70, 150, 30, 45
    H = panel_height * max(len(models), 1)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{H}" '
             f'viewBox="0 0 {width} {H}" font-family="sans-serif" font-size="11">',
             f'<rect width="{width}" height="{H}" fill="white"/>']
    for pi, model in enumerate(models):
        rows = [s for s in summary if s.model == model and math.isfinite(s.mean_l1)]
        y0 = pi * panel_height
        pw, ph = width - left - right, panel_height - top - bottom
        parts.append(f'<text x="{left}" y="{y0 + 18}" font-size="13">{escape(model)}</text>')
        parts.append(f'<rect x="{left}" y="{y0 + top}" width="{pw}" height="{ph}" '
                     f'fill="none" stroke="#444"/>')
        if not rows:
            continue
        ns = sorted({s.n for s in rows})
        lx = [math.log10(v) for v in ns]
        xlo, xhi = min(lx), max(lx)
        if xhi == xlo:
            xlo, xhi = xlo - 0.5, xhi + 0.5
        yhi = max(s.mean_l1 + s.stderr_l1 for s in rows) * 1.1 or 1.0
        ylo = 0.0

        def X(n):
            return left + (math.log10(n) - xlo) / (xhi - xlo) * pw

        def Y(v):
            return y0 + top + ph - (v - ylo) / (yhi - ylo) * ph

        for n in ns:
            parts.append(f'<text x="{X(n):.2f}" y="{y0 + top + ph + 16}" text-anchor="middle">{n}</text>')
        for i in range(5):
            v = ylo + (yhi - ylo) * i / 4
            parts.append(f'<text x="{left - 6}" y="{Y(v) + 4:.2f}" text-anchor="end">{v:.3g}</text>')
        parts.append(f'<text x="{left + pw / 2}" y="{y0 + panel_height - 8}" text-anchor="middle">'
                     f'n (log scale)</text>')
        parts.append(f'<text x="16" y="{y0 + top + ph / 2}" transform="rotate(-90 16 {y0 + top + ph / 2})" '
                     f'text-anchor="middle">mean l1 error</text>')
        for ei, est in enumerate(ests):
            pts = sorted((s.n, s.mean_l1, s.stderr_l1) for s in rows if s.estimator == est)
            if not pts:
                continue
            color = _COLORS[ei % len(_COLORS)]
            path = " ".join(f"{X(n):.2f},{Y(v):.2f}" for n, v, _ in pts)
            parts.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"/>')
            for n, v, se in pts:
                parts.append(f'<line x1="{X(n):.2f}" y1="{Y(v - se):.2f}" x2="{X(n):.2f}" '
                             f'y2="{Y(v + se):.2f}" stroke="{color}"/>')
                parts.append(f'<circle cx="{X(n):.2f}" cy="{Y(v):.2f}" r="3" fill="{color}"/>')
            ly = y0 + top + 14 + 16 * ei
            parts.append(f'<line x1="{left + pw + 10}" y1="{ly - 4}" x2="{left + pw + 30}" y2="{ly - 4}" '
                         f'stroke="{color}" stroke-width="2"/>')
            parts.append(f'<text x="{left + pw + 36}" y="{ly}">{escape(est)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg(summary, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_svg(summary))

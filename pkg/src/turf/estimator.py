"""Top-level estimators: single-piece and multi-piece adjusted fits."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from turf import __version__
from turf.geomsplit import adjust_many, adjust_single, min_budget
from turf.measures import EmpiricalMeasure
from turf.numerics import Interval, PiecewisePolynomial, normalize
from turf.partitioner import (FittedPartition, MergeCache, dyadic_atoms, greedy_merge,
                              stitch_atoms)
from turf.polyfit import fit_eq, node_spec

THEORY_C1 = 3764.0
PARTITIONERS = ("merge", "stitch")
PRACTICAL_BETA = 2.0


@dataclass(frozen=True)
class EstimatorConfig:
    """Estimator settings.

    ``k`` overrides the derived adjust budget when set. ``c1`` scales that
    budget. ``beta`` is the merge overshoot factor; ``None`` derives it from
    the budget, which is what :meth:`theory` does together with the
    worst-case ``c1``.
    """

    t: int = 1
    d: int = 1
    alpha: float = 0.5
    gamma: float = 0.5
    c1: float = 1.0
    partitioner: str = "merge"
    normalize_output: bool = False
    beta: float | None = PRACTICAL_BETA
    k: int | None = None
    stitch_alpha: float = 2.5
    stitch_eps: float | None = None
    max_pieces: int = 2_000_000

    def __post_init__(self):
        if self.t < 1:
            raise ValueError("t must be at least 1")
        if not 0 <= self.d <= 8:
            raise ValueError("d must be in 0..8")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if self.c1 <= 0:
            raise ValueError("c1 must be positive")
        if self.partitioner not in PARTITIONERS:
            raise ValueError(f"partitioner must be one of {PARTITIONERS}")
        if self.beta is not None and self.beta <= 1:
            raise ValueError("beta must exceed 1")
        if self.k is not None and self.k < min_budget(self.d):
            raise ValueError(f"k must be at least {min_budget(self.d)} for degree {self.d}")

    @classmethod
    def theory(cls, **kw) -> "EstimatorConfig":
        return cls(**{"c1": THEORY_C1, "beta": None, **kw})

    def budget(self, level: float) -> int:
        """Adjust budget ``ceil(8 c1 (d+1) / level)``, floored at the geometric minimum."""
        if self.k is not None:
            return self.k
        return max(min_budget(self.d), math.ceil(8 * self.c1 * (self.d + 1) / level))

    @property
    def k_alpha(self) -> int:
        return self.budget(self.alpha)

    @property
    def k_gamma(self) -> int:
        return self.budget(self.gamma)

    @property
    def beta_value(self) -> float:
        if self.beta is not None:
            return self.beta
        return 1.0 + 4.0 * self.k_alpha / (self.alpha * (self.d + 1))

    def eta(self, n: int) -> float:
        return math.sqrt((self.d + 1) / n)

    def with_(self, **kw) -> "EstimatorConfig":
        return replace(self, **kw)


def _support(e: EmpiricalMeasure) -> Interval:
    if e.n < 1:
        raise ValueError("no samples")
    lo, hi = float(e.xs[0]), float(e.xs[-1])
    if hi <= lo:
        raise ValueError("all samples are equal; the support has zero width")
    return Interval(lo, hi, closed=True)


def _finish(g: PiecewisePolynomial, cfg: EstimatorConfig) -> PiecewisePolynomial:
    return normalize(g) if cfg.normalize_output else g


def estimate_single(e: EmpiricalMeasure, d: int, gamma: float,
                    cfg: EstimatorConfig | None = None) -> PiecewisePolynomial:
    """One node fit over the sample range, adjusted on its geometric partition."""
    cfg = (cfg or EstimatorConfig(d=d, gamma=gamma)).with_(d=d, gamma=gamma)
    if e.n < 2 * (d + 1):
        raise ValueError(f"need at least {2 * (d + 1)} samples")
    I = _support(e)
    fpoly = fit_eq(e, I, node_spec(d))
    return _finish(adjust_single(fpoly, e, d, cfg.k_gamma, I), cfg)


def partition(e: EmpiricalMeasure, t: int, cfg: EstimatorConfig,
              cache: MergeCache | None = None) -> FittedPartition:
    """Run the configured partitioner."""
    _support(e)
    if cfg.partitioner == "merge":
        return greedy_merge(e, t, cfg.d, cfg.beta_value, cfg.eta(e.n), cache=cache)
    atoms = dyadic_atoms(e.xs, cfg.d)
    if atoms.size < 3:
        raise ValueError("too few samples for the stitch partitioner")
    return stitch_atoms(e, atoms, cfg.d, cfg.stitch_alpha, cfg.stitch_eps)


def adjust_partition_fits(e: EmpiricalMeasure, fp: FittedPartition, d: int, k: int) -> PiecewisePolynomial:
    edges = fp.partition.edges
    closed = np.zeros(len(fp), dtype=bool)
    closed[-1] = fp.partition.closed
    return adjust_many(e, d, k, edges[:-1], edges[1:], closed, fp.fits)


def turf(e: EmpiricalMeasure, t: int, d: int, alpha: float,
         cfg: EstimatorConfig | None = None, cache: MergeCache | None = None) -> PiecewisePolynomial:
    """Partition, fit each interval, then adjust every fit on its geometric partition."""
    cfg = (cfg or EstimatorConfig()).with_(t=t, d=d, alpha=alpha)
    fp = partition(e, t, cfg, cache)
    k = cfg.k_alpha
    out = adjust_partition_fits(e, fp, d, k)
    if out.n_pieces > cfg.max_pieces:
        raise ValueError(f"estimate has {out.n_pieces} pieces, above the cap {cfg.max_pieces}")
    return _finish(out, cfg)


def merge_only(e: EmpiricalMeasure, t: int, d: int, cfg: EstimatorConfig | None = None,
               cache: MergeCache | None = None) -> PiecewisePolynomial:
    """The partitioner's own piecewise fit, without the adjust step."""
    cfg = (cfg or EstimatorConfig()).with_(t=t, d=d)
    return _finish(partition(e, t, cfg, cache).as_piecewise(), cfg)


def estimate_to_dict(g: PiecewisePolynomial, cfg: EstimatorConfig | None = None, **extra) -> dict:
    doc = {"version": __version__, **g.to_dict()}
    if cfg is not None:
        doc["config"] = asdict(cfg)
    doc.update(extra)
    return doc


def estimate_to_json(g: PiecewisePolynomial, cfg: EstimatorConfig | None = None, **extra) -> str:
    return json.dumps(estimate_to_dict(g, cfg, **extra), indent=1)


def estimate_from_json(text: str) -> tuple[PiecewisePolynomial, EstimatorConfig | None]:
    doc = json.loads(text)
    g = PiecewisePolynomial.from_dict(doc)
    cfg = EstimatorConfig(**doc["config"]) if "config" in doc else None
    return g, cfg

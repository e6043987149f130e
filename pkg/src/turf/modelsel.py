"""Choosing the number of pieces from a dyadic ladder of estimates."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from turf.estimator import EstimatorConfig, merge_only, turf
from turf.measures import EmpiricalMeasure
from turf.numerics import PiecewisePolynomial, l1_pp
from turf.partitioner import MergeCache, atomic_cuts


@dataclass(frozen=True)
class LadderEntry:
    t: int
    estimate: PiecewisePolynomial
    c_t: float


def variance_proxy(t: int, d: int, n: int, delta: float = 0.1,
                   cprime: float = 1.0, cdprime: float = 1.0) -> float:
    """``sqrt(c' t (d+1) + c'' ln(1/delta)) / sqrt(n)``."""
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    if n < 1 or t < 1:
        raise ValueError("t and n must be positive")
    return math.sqrt(cprime * t * (d + 1) + cdprime * math.log(1.0 / delta)) / math.sqrt(n)


def ladder_ts(n: int) -> list[int]:
    """``1, 2, 4, ...`` up to the largest power of two not above ``n``."""
    if n < 1:
        raise ValueError("n must be positive")
    return [2 ** i for i in range(int(math.floor(math.log2(n))) + 1)]


def select_index(dist: Callable[[int, int], float], c, gamma: float) -> int:
    """Smallest ``i`` with ``dist(i, j) <= gamma * c[j]`` for every ``j > i``."""
    c = list(c)
    if not c:
        raise ValueError("empty ladder")
    for i in range(len(c)):
        if all(dist(i, j) <= gamma * c[j] for j in range(i + 1, len(c))):
            return i
    return len(c) - 1  # pragma: no cover - the last index always qualifies


def tv(g1: PiecewisePolynomial, g2: PiecewisePolynomial) -> float:
    return 0.5 * l1_pp(g1, g2)


def select_t(ladder: list[LadderEntry], gamma: float) -> int:
    """``t`` of the first ladder entry within ``gamma * c_j`` (in TV) of every later one."""
    if not ladder:
        raise ValueError("empty ladder")
    if gamma <= 2:
        raise ValueError("gamma must exceed 2")
    ts = [entry.t for entry in ladder]
    if ts != sorted(ts):
        raise ValueError("ladder must be sorted by t")
    memo: dict[tuple[int, int], float] = {}

    def dist(i, j):
        if (i, j) not in memo:
            memo[(i, j)] = tv(ladder[i].estimate, ladder[j].estimate)
        return memo[(i, j)]

    return ladder[select_index(dist, [e.c_t for e in ladder], gamma)].t


def build_ladder(e: EmpiricalMeasure, d: int, alpha: float, cfg: EstimatorConfig,
                 delta: float = 0.1, cprime: float = 1.0, cdprime: float = 1.0,
                 estimator: str = "turf") -> list[LadderEntry]:
    """Estimates for ``t = 1, 2, 4, ...``; stops once the partition can no longer change."""
    if estimator not in ("turf", "merge"):
        raise ValueError("estimator must be 'turf' or 'merge'")
    cfg = cfg.with_(d=d, alpha=alpha)
    cache = MergeCache()
    atoms = atomic_cuts(e.xs, d + 1).size - 1
    out = []
    for t in ladder_ts(e.n):
        if estimator == "turf":
            g = turf(e, t, d, alpha, cfg, cache=cache)
        else:
            g = merge_only(e, t, d, cfg, cache=cache)
        out.append(LadderEntry(t, g, variance_proxy(t, d, e.n, delta, cprime, cdprime)))
        # later entries would repeat this estimate, and repeats never change the choice
        if cfg.partitioner == "stitch" or 2 * math.ceil(cfg.beta_value * t) >= atoms:
            break
    return out


def cv_turf(e: EmpiricalMeasure, d: int, alpha: float, beta_cv: float = 0.5, delta: float = 0.1,
            cfg: EstimatorConfig | None = None, cprime: float = 1.0, cdprime: float = 1.0,
            estimator: str = "turf") -> tuple[int, PiecewisePolynomial]:
    """Build the ladder and return the selected ``(t, estimate)``; ``gamma = 2 + 2/beta_cv``."""
    if not 0 < beta_cv < 1:
        raise ValueError("beta_cv must lie in (0, 1)")
    cfg = cfg or EstimatorConfig()
    ladder = build_ladder(e, d, alpha, cfg, delta, cprime, cdprime, estimator)
    t_hat = select_t(ladder, 2.0 + 2.0 / beta_cv)
    chosen = next(entry for entry in ladder if entry.t == t_hat)
    return t_hat, chosen.estimate


def guarantee_bound(b, c, gamma: float) -> float:
    """``min_j (1 + 2/(gamma-2)) b_j + (gamma+1) c_j``."""
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    return float(np.min((1.0 + 2.0 / (gamma - 2.0)) * b + (gamma + 1.0) * c))

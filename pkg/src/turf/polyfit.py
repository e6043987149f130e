"""Node-interpolation polynomial fits and their approximation ratios.

A node list ``0 = n_0 < n_1 < ... < n_{d+1} = 1`` cuts an interval into
``d + 1`` sub-intervals; the fit is the unique degree-``d`` polynomial whose
integral over each sub-interval equals the empirical mass there. The ratio
``r_d`` of a node list bounds how much this fit can amplify errors.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np
import scipy.linalg
from scipy.optimize import minimize, minimize_scalar

from turf import kernels
from turf.measures import EmpiricalMeasure
from turf.numerics import Interval, Polynomial

TABLE_FILE = "nodes_table.json"


@dataclass(frozen=True)
class NodeSpec:
    d: int
    nodes: tuple
    ratio: float = field(default=float("nan"), compare=False)
    source: str = field(default="computed", compare=False)

    def __post_init__(self):
        nodes = tuple(float(v) for v in self.nodes)
        object.__setattr__(self, "nodes", nodes)
        if not 0 <= self.d <= 8:
            raise ValueError("degree must be in 0..8")
        if len(nodes) != self.d + 2:
            raise ValueError(f"degree {self.d} needs {self.d + 2} nodes")
        if nodes[0] != 0.0 or nodes[-1] != 1.0 or np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must increase strictly from 0 to 1")

    def to_dict(self) -> dict:
        return {"d": self.d, "nodes": list(self.nodes), "ratio": self.ratio, "source": self.source}

    @classmethod
    def from_dict(cls, data: dict) -> "NodeSpec":
        return cls(int(data["d"]), tuple(data["nodes"]), float(data["ratio"]), data.get("source", "computed"))


def _mass_matrix(nodes, d):
    """``M[i, j] = int u**j`` over node sub-interval ``i`` in ``u`` on ``[-1, 1]``."""
    v = 2.0 * np.asarray(nodes, dtype=float) - 1.0
    j = np.arange(d + 1)
    P = v[:, None] ** (j + 1) / (j + 1)
    return P[1:] - P[:-1]


@lru_cache(maxsize=64)
def _solver(nodes: tuple, d: int):
    M = _mass_matrix(nodes, d)
    if np.linalg.cond(M) > 1e12:
        raise np.linalg.LinAlgError("node mass matrix is singular")
    return scipy.linalg.lu_factor(M)


def fit_eq_batch(e: EmpiricalMeasure, lo, hi, closed, spec: NodeSpec) -> np.ndarray:
    """Reference-basis coefficients of the node-interpolation fit on each ``[lo[i], hi[i])``."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    closed = np.broadcast_to(np.asarray(closed, dtype=bool), lo.shape)
    nodes = np.asarray(spec.nodes)
    w = hi - lo
    edges = lo[:, None] + nodes[None, :] * w[:, None]
    edges[:, -1] = hi
    counts = e.count_below(edges)
    counts[:, -1] = np.where(closed, e.count_below(hi, inclusive=True), counts[:, -1])
    mass = np.diff(counts, axis=1) / max(e.n, 1)
    rhs = (2.0 / w)[None, :] * mass.T
    return scipy.linalg.lu_solve(_solver(spec.nodes, spec.d), rhs).T


def fit_eq(e: EmpiricalMeasure, I: Interval, spec: NodeSpec) -> Polynomial:
    """Degree-``d`` polynomial on ``I`` whose node sub-interval integrals equal the empirical masses."""
    if I.width <= 0:
        raise ValueError("cannot fit on a zero-width interval")
    c = fit_eq_batch(e, [I.lo], [I.hi], [I.closed], spec)[0]
    return Polynomial(c, Interval(I.lo, I.hi))


def fit_masses(masses, I: Interval, spec: NodeSpec) -> Polynomial:
    """Same fit, driven by given sub-interval masses instead of samples."""
    masses = np.asarray(masses, dtype=float)
    c = scipy.linalg.lu_solve(_solver(spec.nodes, spec.d), 2.0 * masses / I.width)
    return Polynomial(c, Interval(I.lo, I.hi))


def corner_polynomials(nodes, d: int) -> list[np.ndarray]:
    """For each ``i``, the polynomial with zero mass on every node sub-interval except ``i``.

    Coefficients are in the ``[-1, 1]`` reference basis, scaled so the leading
    coefficient is one.
    """
    M = _mass_matrix(nodes, d)
    out = []
    for i in range(d + 1):
        if d == 0:
            out.append(np.ones(1))
            continue
        N = scipy.linalg.null_space(np.delete(M, i, axis=0))
        if N.shape[1] != 1:
            raise ValueError("degenerate node list: nullspace dimension is not one")
        h = N[:, 0]
        out.append(h / h[-1])
    return out


def compute_ratio(nodes, d: int) -> float:
    """``r_d`` of a node list: worst ``int|h| / sum_J |int_J h|`` over the corner polynomials."""
    nodes = tuple(float(v) for v in nodes)
    NodeSpec(d, nodes)
    M = _mass_matrix(nodes, d)
    best = 0.0
    for i, h in enumerate(corner_polynomials(nodes, d)):
        denom = np.sum(np.abs(M @ h))
        best = max(best, kernels.abs_integral(h, -1.0, 1.0) / denom)
    return float(best)


def symmetric_nodes(params, d: int) -> tuple:
    """Node list symmetric about 1/2 from the ``floor(d/2)`` nodes below 1/2."""
    p = np.sort(np.asarray(params, dtype=float))
    mid = [0.5] if d % 2 else []
    return tuple([0.0, *p, *mid, *(1.0 - p[::-1]), 1.0])


def _sym_ratio(params, d):
    p = np.asarray(params)
    if np.any(p <= 1e-6) or np.any(p >= 0.5 - 1e-6) or np.any(np.diff(np.sort(p)) < 1e-6):
        return np.inf
    return compute_ratio(symmetric_nodes(p, d), d)


def optimize_nodes(d: int, grid_resolution: float = 1e-3, starts: int = 8, seed: int = 0) -> NodeSpec:
    """Minimise ``compute_ratio`` over node lists symmetric about 1/2.

    Degree 1 searches the single interior node freely; degrees 2 and 3 have
    one free parameter, found by a grid scan refined with a bounded scalar
    search; higher degrees use multi-start Nelder-Mead.
    """
    if grid_resolution <= 0:
        raise ValueError("grid_resolution must be positive")
    if d == 0:
        return NodeSpec(0, (0.0, 1.0), 1.0, "computed")
    if d == 1:
        f, lo, hi = (lambda m: compute_ratio((0.0, m, 1.0), 1)), 0.0, 1.0
    elif d <= 3:
        f, lo, hi = (lambda m: _sym_ratio([m], d)), 0.0, 0.5
    else:
        return _optimize_many(d, starts, seed)
    grid = np.arange(lo + grid_resolution, hi, grid_resolution)
    vals = [f(m) for m in grid]
    m0 = grid[int(np.argmin(vals))]
    res = minimize_scalar(f, bounds=(max(lo + 1e-9, m0 - grid_resolution), min(hi - 1e-9, m0 + grid_resolution)),
                          method="bounded", options={"xatol": 1e-9})
    nodes = (0.0, res.x, 1.0) if d == 1 else symmetric_nodes([res.x], d)
    return NodeSpec(d, nodes, float(res.fun), "computed")


def _optimize_many(d, starts, seed):
    q = d // 2
    rng = np.random.default_rng(seed)
    # Chebyshev-like start, then random ones
    cheb = 0.5 * (1.0 - np.cos(np.pi * np.arange(1, q + 1) / (d + 1)))
    inits = [cheb] + [np.sort(rng.uniform(0.02, 0.48, q)) for _ in range(starts - 1)]
    best = None
    for x0 in inits:
        res = minimize(_sym_ratio, x0, args=(d,), method="Nelder-Mead",
                       options={"xatol": 1e-7, "fatol": 1e-10, "maxiter": 4000})
        if best is None or res.fun < best.fun:
            best = res
    return NodeSpec(d, symmetric_nodes(best.x, d), float(best.fun), "computed")


@lru_cache(maxsize=1)
def _load_table() -> dict:
    text = resources.files("turf").joinpath(TABLE_FILE).read_text()
    return {int(row["d"]): NodeSpec.from_dict(row) for row in json.loads(text)["specs"]}


def node_spec(d: int) -> NodeSpec:
    """Tabulated node list for degree ``d``."""
    table = _load_table()
    if d not in table:
        raise ValueError(f"no node table entry for degree {d}")
    return table[d]


def node_table() -> list[NodeSpec]:
    return [node_spec(d) for d in sorted(_load_table())]


def build_table(max_degree: int = 8) -> list[NodeSpec]:
    """Recompute the whole table; degrees 0..3 are labelled ``reference``."""
    out = []
    for d in range(max_degree + 1):
        spec = optimize_nodes(d)
        if d <= 3:
            spec = NodeSpec(d, spec.nodes, spec.ratio, "reference")
        out.append(spec)
    return out


def table_json(specs) -> str:
    return json.dumps({"specs": [s.to_dict() for s in specs]}, indent=2) + "\n"


def ratio_bound(d: int) -> float:
    r = node_spec(d).ratio
    return r if math.isfinite(r) else compute_ratio(node_spec(d).nodes, d)

"""Geometric sub-partitions and the mass-matching adjust transform."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from turf.measures import EmpiricalMeasure
from turf.numerics import Interval, PiecewisePolynomial, Polynomial, compose_affine

_Q = 2.0 ** 0.25 - 1.0


class Partition:
    """Contiguous intervals given by strictly increasing ``edges``.

    Every interval is half-open except the last, which is closed when
    ``closed`` is set.
    """

    __slots__ = ("edges", "closed")

    def __init__(self, edges, closed: bool = True):
        e = np.array(edges, dtype=float).ravel()
        if e.size < 2:
            raise ValueError("a partition needs at least one interval")
        if np.any(np.diff(e) <= 0):
            raise ValueError("partition edges must be strictly increasing")
        e.setflags(write=False)
        self.edges = e
        self.closed = closed

    def __len__(self):
        return self.edges.size - 1

    @property
    def intervals(self) -> list[Interval]:
        last = len(self) - 1
        return [Interval(self.edges[i], self.edges[i + 1], self.closed and i == last)
                for i in range(len(self))]

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def root(self) -> Interval:
        return Interval(self.edges[0], self.edges[-1], self.closed)


@dataclass(frozen=True)
class GeomPartition:
    d: int
    k: int
    ell: float
    m: int
    partition: Partition

    @property
    def intervals(self) -> list[Interval]:
        return self.partition.intervals

    def __len__(self):
        return len(self.partition)


def min_budget(d: int) -> int:
    """Smallest ``k`` the geometric construction accepts for degree ``d``."""
    return math.ceil(4 * (d + 1) / _Q)


def geom_ell(d: int, k: int) -> float:
    return k * _Q / (4 * (d + 1))


def geom_levels(d: int, k: int) -> int:
    return max(1, math.ceil(math.log2(geom_ell(d, k) * (d + 1) ** 2)))


@lru_cache(maxsize=256)
def _relative_edges(d: int, k: int) -> np.ndarray:
    ell = geom_ell(d, k)
    m = geom_levels(d, k)
    half = [0.0]
    for i in range(1, m + 1):
        a, b = 1.0 - 2.0 ** -(i - 1), 1.0 - 2.0 ** -i
        parts = math.ceil(ell * (d + 1) / 2.0 ** (i / 4))
        half.extend(a + (b - a) * np.arange(1, parts + 1) / parts)
    half[-1] = 1.0 - 2.0 ** -m
    half.append(1.0)
    half = np.asarray(half)
    full = np.concatenate([-half[::-1], half[1:]])
    rel = 0.5 * (full + 1.0)
    rel[0], rel[-1] = 0.0, 1.0
    rel.setflags(write=False)
    return rel


def relative_edges(d: int, k: int) -> np.ndarray:
    """Edges of the geometric partition of ``[0, 1]``."""
    _check(d, k)
    return _relative_edges(int(d), int(k))


def _check(d, k):
    if not 0 <= d <= 8:
        raise ValueError("degree must be in 0..8")
    if k < min_budget(d):
        raise ValueError(f"k={k} is below the minimum {min_budget(d)} for degree {d}")


def build_geom_partition(d: int, k: int, I: Interval) -> GeomPartition:
    _check(d, k)
    if I.width <= 0:
        raise ValueError("cannot partition a zero-width interval")
    rel = _relative_edges(int(d), int(k))
    edges = I.lo + rel * I.width
    edges[-1] = I.hi
    return GeomPartition(d, k, geom_ell(d, k), geom_levels(d, k), Partition(edges, I.closed))


def histogram(g, P: Partition) -> PiecewisePolynomial:
    """Piecewise-constant signed average of ``g`` (a function or a measure) over ``P``."""
    if isinstance(P, GeomPartition):
        P = P.partition
    if isinstance(g, EmpiricalMeasure):
        mass = g.masses(P.edges, closed_last=P.closed)
    else:
        mass = np.diff(g.cumulative(P.edges))
    return PiecewisePolynomial(P.edges, (mass / P.widths)[:, None])


def adjust_many(e: EmpiricalMeasure, d: int, k: int, lo, hi, closed, coeffs) -> PiecewisePolynomial:
    """Adjust every polynomial ``coeffs[i]`` on ``[lo[i], hi[i])`` against ``e``.

    Intervals must be contiguous and listed left to right. Each is split into
    its geometric partition and every sub-piece is shifted by a constant so
    that its integral equals the empirical mass it covers.
    """
    return _adjust(e, lo, hi, closed, coeffs, relative_edges(d, k))


def _adjust(e, lo, hi, closed, coeffs, rel):
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    closed = np.broadcast_to(np.asarray(closed, dtype=bool), lo.shape)
    C = np.atleast_2d(np.asarray(coeffs, dtype=float))
    r = rel.size - 1
    width = hi - lo
    sub = lo[:, None] + rel[None, :] * width[:, None]
    sub[:, -1] = hi
    a = sub[:, :-1].ravel()
    b = sub[:, 1:].ravel()
    # rebase each parent polynomial onto its sub-pieces
    owner = np.repeat(np.arange(lo.size), r)
    s = np.tile(np.diff(rel), lo.size)
    t = np.tile(rel[:-1] + rel[1:] - 1.0, lo.size)
    R = compose_affine(C[owner], s, t)

    counts = np.empty((lo.size, r + 1), dtype=np.int64)
    counts[:, :-1] = e.count_below(sub[:, :-1])
    counts[:, -1] = np.where(closed, e.count_below(hi, inclusive=True), e.count_below(hi))
    mass = (np.diff(counts, axis=1) / max(e.n, 1)).ravel()

    w = b - a
    j = np.arange(R.shape[1])
    mean = R[:, ::2] @ (1.0 / (j[::2] + 1))
    R[:, 0] += mass / w - mean
    bp = np.concatenate([a, b[-1:]])
    return PiecewisePolynomial(bp, R)


def adjust_single(fpoly: Polynomial, e: EmpiricalMeasure, d: int, k: int, I: Interval) -> PiecewisePolynomial:
    """``fpoly`` plus the per-sub-interval constants that match empirical masses on ``I``."""
    _check(d, k)
    if I.width <= 0:
        raise ValueError("cannot adjust on a zero-width interval")
    same = fpoly.domain.lo == I.lo and fpoly.domain.hi == I.hi
    f = fpoly if same else fpoly.restrict(I.lo, I.hi)
    return adjust_many(e, d, k, [I.lo], [I.hi], [I.closed], [f.coeffs])


def adjust_partition(fpoly: Polynomial, e: EmpiricalMeasure, P: Partition) -> PiecewisePolynomial:
    """Mass-matching shift of ``fpoly`` over an arbitrary partition ``P``."""
    root = P.root
    same = fpoly.domain.lo == root.lo and fpoly.domain.hi == root.hi
    f = fpoly if same else fpoly.restrict(root.lo, root.hi)
    rel = (P.edges - root.lo) / root.width
    rel[-1] = 1.0
    return _adjust(e, [root.lo], [root.hi], [P.closed], [f.coeffs], rel)

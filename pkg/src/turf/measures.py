"""Empirical measures and the A_k distance to a piecewise polynomial."""
from __future__ import annotations

import itertools

import numpy as np

from turf import kernels
from turf.numerics import Interval, PiecewisePolynomial, compose_affine

BRUTE_GRID_MAX = 40


class SampleSet:
    """Sorted, finite sample values."""

    __slots__ = ("xs",)

    def __init__(self, xs):
        arr = np.sort(np.asarray(xs, dtype=float).ravel())
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples must be finite")
        arr.setflags(write=False)
        self.xs = arr

    @property
    def n(self) -> int:
        return self.xs.size

    def __len__(self):
        return self.xs.size


class EmpiricalMeasure:
    """Mass ``1/n`` at every sample."""

    __slots__ = ("samples", "_ranks")

    def __init__(self, samples):
        self.samples = samples if isinstance(samples, SampleSet) else SampleSet(samples)
        self._ranks = None

    def ranks(self) -> tuple[np.ndarray, np.ndarray]:
        """``count_below(xs[i])`` and ``count_below(xs[i], inclusive=True)`` for every sample."""
        if self._ranks is None:
            xs = self.xs
            new = np.ones(xs.size, dtype=bool)
            new[1:] = xs[1:] != xs[:-1]
            starts = np.flatnonzero(new)
            ends = np.append(starts[1:], xs.size)
            group = np.cumsum(new) - 1
            self._ranks = (starts[group], ends[group])
        return self._ranks

    @property
    def xs(self) -> np.ndarray:
        return self.samples.xs

    @property
    def n(self) -> int:
        return self.samples.n

    def count_below(self, x, inclusive=False):
        side = "right" if inclusive else "left"
        return np.searchsorted(self.xs, x, side=side)

    def count(self, J: Interval) -> int:
        return int(self.count_below(J.hi, J.closed) - self.count_below(J.lo))

    def mass(self, J: Interval) -> float:
        return self.count(J) / self.n if self.n else 0.0

    def masses(self, edges, closed_last=True) -> np.ndarray:
        """Masses of the consecutive intervals ``[edges[i], edges[i+1])``."""
        edges = np.asarray(edges, dtype=float)
        c = self.count_below(edges)
        if closed_last:
            c[-1] = self.count_below(edges[-1], inclusive=True)
        return np.diff(c) / self.n if self.n else np.zeros(edges.size - 1)


def emp_mass(e: EmpiricalMeasure, J: Interval) -> float:
    return e.mass(J)


def _check_k(k):
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")


def _roots_in(g: PiecewisePolynomial, lo, hi):
    if not g.n_pieces:
        return np.zeros(0)
    flat, counts = kernels.roots_batch(g.coeffs, -1.0, 1.0)
    owner = np.repeat(np.arange(g.n_pieces), counts)
    a, b = g.breakpoints[owner], g.breakpoints[owner + 1]
    x = a + 0.5 * (flat + 1.0) * (b - a)
    return x[(x > lo) & (x < hi)]


def discrepancy_sequence(e: EmpiricalMeasure, g: PiecewisePolynomial, I: Interval) -> np.ndarray:
    """Values of ``emp([I.lo, x)) - int_{I.lo}^x g`` at the points where it can turn.

    Every sample contributes its left and right limit, so a degenerate interval
    around an atom is representable.
    """
    lo, hi = I.lo, I.hi
    bp = g.breakpoints[(g.breakpoints > lo) & (g.breakpoints < hi)]
    i0 = int(e.count_below(lo))
    i1 = int(e.count_below(hi, inclusive=I.closed))
    atoms = e.xs[i0:i1]
    plain = np.concatenate([[lo, hi], bp, _roots_in(g, lo, hi)])
    pts = np.concatenate([plain, atoms, atoms])
    # order key: position, then left limit before right limit
    side = np.concatenate([np.zeros(plain.size), np.zeros(atoms.size), np.ones(atoms.size)])
    order = np.lexsort((side, pts))
    pts, side = pts[order], side[order]
    n = max(e.n, 1)
    below = e.count_below(pts) - i0
    below = below + side * (e.count_below(pts, inclusive=True) - e.count_below(pts))
    base = g.cumulative(lo)
    return below / n - (g.cumulative(pts) - base)


def ak_distance(e: EmpiricalMeasure, g: PiecewisePolynomial, k: int, I: Interval) -> float:
    """``sup |emp(S) - int_S g|`` over unions ``S`` of at most ``k`` intervals in ``I``."""
    _check_k(k)
    D = discrepancy_sequence(e, g, I)
    return float(kernels.segmented_ak(D, np.array([0, D.size]), int(k))[0])


def ak_single_batch(e: EmpiricalMeasure, lo, hi, closed, coeffs, k: int) -> np.ndarray:
    """A_k distance on many intervals, each against one polynomial.

    ``coeffs[i]`` is a reference-basis polynomial on ``[lo[i], hi[i])``
    (closed at ``hi[i]`` where ``closed[i]``). Equivalent to calling
    :func:`ak_distance` per row.
    """
    _check_k(k)
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    closed = np.broadcast_to(np.asarray(closed, dtype=bool), lo.shape)
    C = np.atleast_2d(np.asarray(coeffs, dtype=float))
    m = lo.size
    i0 = e.count_below(lo)
    i1 = np.where(closed, e.count_below(hi, inclusive=True), e.count_below(hi))
    natoms = i1 - i0

    rflat, rcount = kernels.roots_batch(C, -1.0, 1.0)
    rowner = np.repeat(np.arange(m), rcount)
    inner = (rflat > -1.0) & (rflat < 1.0)
    # roots come back ascending within each row
    rflat, rowner = rflat[inner], rowner[inner]

    rcount = np.bincount(rowner, minlength=m)
    roff = np.concatenate([[0], np.cumsum(rcount)])
    scale = 2.0 / (hi - lo)
    xr = lo[rowner] + (rflat + 1.0) / scale[rowner]
    rbelow = np.clip(e.count_below(xr) - i0[rowner], 0, natoms[rowner])

    aowner = np.repeat(np.arange(m), natoms)
    aoff = np.concatenate([[0], np.cumsum(natoms)])
    aidx = np.arange(aowner.size) - aoff[:-1][aowner] + i0[aowner]
    xa = e.xs[aidx]
    ua = (xa - lo[aowner]) * scale[aowner] - 1.0
    rank_lo, rank_hi = e.ranks()
    right = rank_hi[aidx] - i0[aowner]
    # repeated sample values: only the first copy carries the left limit
    first = np.ones(xa.size, dtype=bool)
    first[1:] = (xa[1:] != xa[:-1]) | (aowner[1:] != aowner[:-1])
    left = np.where(first, rank_lo[aidx] - i0[aowner], right)
    return kernels.ak_rows(ua, left.astype(float), right.astype(float), aoff, rflat, rbelow, roff,
                           C, 0.5 * (hi - lo), natoms, 1.0 / max(e.n, 1), int(k))


def _piece_antiderivatives(g: PiecewisePolynomial):
    """Antiderivative of every piece as an ordinary polynomial in ``x``."""
    out = []
    for i in range(g.n_pieces):
        lo, hi = g.breakpoints[i], g.breakpoints[i + 1]
        # u = (2x - lo - hi)/(hi - lo) expressed as a polynomial in x
        cx = compose_affine(g.coeffs[i], 2.0 / (hi - lo), -(lo + hi) / (hi - lo))[0]
        out.append((lo, hi, np.polynomial.Polynomial(cx).integ()))
    return out


def _integral_direct(pieces, a, b):
    total = 0.0
    for lo, hi, P in pieces:
        l, r = max(lo, a), min(hi, b)
        if r > l:
            total += P(r) - P(l)
    return total


def ak_distance_bruteforce(e: EmpiricalMeasure, g: PiecewisePolynomial, k: int, I: Interval,
                           grid) -> float:
    """Exhaustive A_k search with interval endpoints on ``grid``.

    Each grid point offers two cuts, just left and just right of it, so
    intervals may include or exclude an atom sitting on an endpoint.
    """
    _check_k(k)
    grid = np.unique(np.clip(np.asarray(grid, dtype=float), I.lo, I.hi))
    if grid.size > BRUTE_GRID_MAX:
        raise ValueError(f"grid larger than {BRUTE_GRID_MAX} points")
    cuts = [(x, s) for x in grid for s in (0, 1)]
    if not I.closed:
        cuts = [c for c in cuts if not (c[0] == I.hi and c[1] == 1)]
    xs = e.xs
    n = e.n
    pieces = _piece_antiderivatives(g)
    C = len(cuts)
    gain = np.zeros((C, C))
    for p, q in itertools.combinations(range(C), 2):
        (a, sa), (b, sb) = cuts[p], cuts[q]
        lo_ok = xs > a if sa else xs >= a
        hi_ok = xs <= b if sb else xs < b
        inside = lo_ok & hi_ok & (xs >= I.lo)
        inside &= (xs <= I.hi) if I.closed else (xs < I.hi)
        emp = inside.sum() / n if n else 0.0
        gain[p, q] = emp - _integral_direct(pieces, a, b)
    best = 0.0
    for sign in (1.0, -1.0):
        G = sign * gain
        # f[j][c]: best total of j disjoint intervals ending at or before cut c
        f = np.zeros((k + 1, C))
        for j in range(1, k + 1):
            for q in range(C):
                v = max(f[j][q - 1] if q else 0.0, f[j - 1][q])
                for p in range(q):
                    v = max(v, f[j - 1][p] + G[p, q])
                f[j][q] = v
        best = max(best, f[k][C - 1])
    return float(best)

"""Interval partitioners that feed the adjust step.

Both partitioners work on cuts between sorted samples. A cut at sample index
``i`` (``0 < i < n``) sits at the midpoint of ``xs[i-1]`` and ``xs[i]``; cut 0
is the smallest sample and cut ``n`` the largest, where the last interval is
closed.

``greedy_merge`` repeatedly merges adjacent pairs of intervals, keeping the
pairs whose merged fit is worst apart. ``stitch`` walks a dyadic hierarchy of
sample blocks and merges a block when no coarsening of its current
sub-partition beats the single fit by more than a mass-dependent threshold.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from turf import kernels
from turf.geomsplit import Partition
from turf.measures import EmpiricalMeasure, ak_single_batch
from turf.numerics import Interval, PiecewisePolynomial, Polynomial, compose_affine, l1_pp
from turf.polyfit import NodeSpec, fit_eq_batch, node_spec


@dataclass(frozen=True)
class FittedPartition:
    """Intervals with one polynomial fit each.

    ``cuts`` holds the sample-index boundaries of the intervals; ``fits`` are
    reference-basis coefficients on each interval. ``probs`` is set by
    ``stitch`` and holds dyadic masses.
    """

    partition: Partition
    fits: np.ndarray
    errors: np.ndarray
    cuts: np.ndarray
    probs: np.ndarray | None = None
    history: list = field(default_factory=list, compare=False, repr=False)

    def __len__(self):
        return len(self.partition)

    @property
    def d(self) -> int:
        return self.fits.shape[1] - 1

    @property
    def polynomials(self) -> list[Polynomial]:
        e = self.partition.edges
        return [Polynomial(c, Interval(e[i], e[i + 1])) for i, c in enumerate(self.fits)]

    def as_piecewise(self) -> PiecewisePolynomial:
        return PiecewisePolynomial(self.partition.edges, self.fits)


def cut_positions(xs: np.ndarray, idx) -> np.ndarray:
    """Real positions of sample-index cuts."""
    idx = np.asarray(idx, dtype=np.int64)
    n = xs.size
    inner = np.clip(idx, 1, n - 1)
    pos = 0.5 * (xs[inner - 1] + xs[inner])
    pos = np.where(idx <= 0, xs[0], pos)
    return np.where(idx >= n, xs[-1], pos)


def _dedupe_cuts(xs, cuts):
    """Drop cuts that would create zero-width intervals."""
    pos = cut_positions(xs, cuts)
    keep = np.concatenate([[True], np.diff(pos) > 0])
    keep[-1] = True
    cuts, pos = cuts[keep], pos[keep]
    if cuts.size > 2 and pos[-1] <= pos[-2]:
        cuts = np.delete(cuts, -2)
    return cuts


def atomic_cuts(xs: np.ndarray, size: int) -> np.ndarray:
    """Cuts into consecutive buckets of ``size`` samples."""
    n = xs.size
    cuts = np.unique(np.concatenate([np.arange(0, n, size), [n]]))
    return _dedupe_cuts(xs, cuts)


def _spec(d, spec):
    return spec if spec is not None else node_spec(d)


def _fits_and_errors(e, cuts_lo, cuts_hi, d, spec, k_err):
    xs = e.xs
    lo = cut_positions(xs, cuts_lo)
    hi = cut_positions(xs, cuts_hi)
    closed = cuts_hi >= e.n
    C = fit_eq_batch(e, lo, hi, closed, spec)
    err = ak_single_batch(e, lo, hi, closed, C, k_err) if k_err else np.zeros(lo.size)
    return C, err


def _cached_errors(e, a, b, d, spec, cache):
    err = np.empty(a.size)
    missing = []
    for i, key in enumerate(zip(a.tolist(), b.tolist())):
        v = cache.errors.get(key)
        if v is None:
            missing.append(i)
        else:
            err[i] = v
    if missing:
        idx = np.asarray(missing)
        _, new = _fits_and_errors(e, a[idx], b[idx], d, spec, d + 1)
        err[idx] = new
        cache.errors.update(zip(zip(a[idx].tolist(), b[idx].tolist()), new.tolist()))
    return err


class MergeCache:
    """Memo of merged-interval errors keyed by sample range, shared across runs
    on the same samples and degree."""

    def __init__(self):
        self.errors: dict[tuple[int, int], float] = {}


def greedy_merge(e: EmpiricalMeasure, t: int, d: int, beta: float, eta: float,
                 spec: NodeSpec | None = None, cache: MergeCache | None = None,
                 trace: bool = False) -> FittedPartition:
    """Pairwise greedy merging down to at most ``2*ceil(beta*t)`` intervals.

    Each round pairs neighbouring intervals and scores every pair by the
    A_{d+1} distance between the samples and the node fit on the merged
    interval (floored at ``eta``). The ``ceil(beta*t)`` worst pairs stay
    split; ties go to the leftmost pair.
    """
    if t < 1:
        raise ValueError("t must be at least 1")
    if beta <= 1:
        raise ValueError("beta must exceed 1")
    spec = _spec(d, spec)
    budget = math.ceil(beta * t)
    if e.n < max(2, d + 1):
        raise ValueError("not enough samples for a degree-d fit")
    xs = e.xs
    cuts = atomic_cuts(xs, d + 1)
    history = []
    while cuts.size - 1 > 2 * budget:
        m = cuts.size - 1
        pairs = m // 2
        a = cuts[0:2 * pairs:2]
        b = cuts[2:2 * pairs + 1:2]
        if cache is None:
            _, err = _fits_and_errors(e, a, b, d, spec, d + 1)
        else:
            err = _cached_errors(e, a, b, d, spec, cache)
        err = np.maximum(err, eta)
        keep_n = min(budget, pairs - 1)
        # stable sort on -err keeps the leftmost of equal errors first
        order = np.argsort(-err, kind="stable")
        keep = np.zeros(pairs, dtype=bool)
        keep[order[:keep_n]] = True
        if trace:
            history.append({"errors": err.copy(), "kept": keep.copy()})
        drop = 2 * np.flatnonzero(~keep) + 1
        cuts = np.delete(cuts, drop)
    C, err = _fits_and_errors(e, cuts[:-1], cuts[1:], d, spec, d + 1)
    err = np.maximum(err, eta)
    edges = cut_positions(xs, cuts)
    return FittedPartition(Partition(edges, True), C, err, cuts, None, history)


def default_eps(n: int) -> float:
    return math.sqrt(math.log(n * (n + 1)) / (n - 1))


def _lambda(fit_node, fhat_rows, node_lo, node_hi, blk_lo, blk_hi):
    """``int_node |fit_node - fhat|`` with ``fhat`` given on the enclosing block."""
    bw = blk_hi - blk_lo
    s = (node_hi - node_lo) / bw
    t = (node_lo + node_hi - blk_lo - blk_hi) / bw
    diff = fit_node - compose_affine(fhat_rows, s, t)
    return 0.5 * (node_hi - node_lo) * kernels.abs_integrals(diff, -1.0, 1.0)


def _block_geometry(e, atom_cuts, level):
    step = 2 ** level
    c = atom_cuts[::step]
    lo = cut_positions(e.xs, c[:-1])
    hi = cut_positions(e.xs, c[1:])
    return c, lo, hi


def comp(fhat: Polynomial, e: EmpiricalMeasure, cuts, d: int, gamma: float,
         spec: NodeSpec | None = None) -> float:
    """Best ``Lambda - lambda`` over dyadic coarsenings of a block's sub-partition.

    ``cuts`` are the sample-index boundaries of the current sub-partition; the
    block's sample count must be a power of two and every sub-interval a
    dyadic piece of it. ``Lambda`` is the l1 distance between the node fits
    and ``fhat``; ``lambda`` charges ``gamma * sqrt(p)`` per interval of
    relative mass ``p``.
    """
    spec = _spec(d, spec)
    cuts = [int(c) for c in cuts]
    a, b = cuts[0], cuts[-1]
    size = b - a
    if size < 1 or size & (size - 1):
        raise ValueError("block sample count must be a power of two")
    leaves = set(zip(cuts[:-1], cuts[1:]))
    xs = e.xs

    def lam(lo_i, hi_i):
        lo, hi = cut_positions(xs, [lo_i, hi_i])
        C = fit_eq_batch(e, [lo], [hi], [hi_i >= e.n], spec)
        return float(_lambda(C, fhat.coeffs[None, :], lo, hi, fhat.domain.lo, fhat.domain.hi)[0])

    def rec(lo_i, hi_i, g):
        mu = lam(lo_i, hi_i) - g
        if (lo_i, hi_i) in leaves:
            return mu
        mid = (lo_i + hi_i) // 2
        if mid == lo_i:
            raise ValueError("sub-partition is not dyadic within the block")
        return max(mu, rec(lo_i, mid, g / math.sqrt(2)) + rec(mid, hi_i, g / math.sqrt(2)))

    return rec(a, b, gamma)


def comp_bruteforce(fhat: Polynomial, e: EmpiricalMeasure, cuts, d: int, gamma: float,
                    spec: NodeSpec | None = None) -> float:
    """``comp`` by listing every dyadic coarsening explicitly."""
    spec = _spec(d, spec)
    cuts = [int(c) for c in cuts]
    leaves = set(zip(cuts[:-1], cuts[1:]))
    a, b = cuts[0], cuts[-1]
    fhat_pp = PiecewisePolynomial.from_pieces([fhat])

    def coarsenings(lo_i, hi_i):
        yield [(lo_i, hi_i)]
        if (lo_i, hi_i) in leaves:
            return
        mid = (lo_i + hi_i) // 2
        for left, right in itertools.product(list(coarsenings(lo_i, mid)), list(coarsenings(mid, hi_i))):
            yield left + right

    best = -math.inf
    for part in coarsenings(a, b):
        idx = [part[0][0]] + [p[1] for p in part]
        pos = cut_positions(e.xs, idx)
        C = fit_eq_batch(e, pos[:-1], pos[1:], np.asarray(idx[1:]) >= e.n, spec)
        fits = PiecewisePolynomial(pos, C)
        total = l1_pp(fits, fhat_pp)
        penalty = sum(gamma * math.sqrt((hi - lo) / (b - a)) for lo, hi in part)
        best = max(best, total - penalty)
    return best


def _stitch_atoms(e: EmpiricalMeasure, atom_cuts: np.ndarray, d: int, gamma: float,
                  spec: NodeSpec) -> FittedPartition:
    """Dyadic stitching over ``2**D`` atoms given by ``atom_cuts``."""
    natoms = atom_cuts.size - 1
    D = int(round(math.log2(natoms)))
    xs = e.xs
    geo = [_block_geometry(e, atom_cuts, lv) for lv in range(D + 1)]
    fits = [fit_eq_batch(e, lo, hi, c[1:] >= e.n, spec) for c, lo, hi in geo]
    merged = [np.ones(natoms, dtype=bool)] + [np.zeros(natoms >> lv, dtype=bool) for lv in range(1, D + 1)]
    for i in range(1, D + 1):
        # a node below level i is active unless some ancestor below i is merged
        covered = [None] * i
        covered[i - 1] = np.zeros(natoms >> (i - 1), dtype=bool)
        for lv in range(i - 2, -1, -1):
            up = covered[lv + 1] | merged[lv + 1]
            covered[lv] = np.repeat(up, 2)
        _, blo, bhi = geo[i]
        value = None
        for lv in range(0, i):
            _, lo, hi = geo[lv]
            active = ~covered[lv]
            nodes = np.flatnonzero(active)
            blk = nodes >> (i - lv)
            q_node = 2.0 ** (lv - D)
            base = np.full(natoms >> lv, -np.inf)
            if nodes.size:
                lam = _lambda(fits[lv][nodes], fits[i][blk], lo[nodes], hi[nodes], blo[blk], bhi[blk])
                base[nodes] = lam - gamma * math.sqrt(q_node)
            if value is None:
                value = base
            else:
                below = value[0::2] + value[1::2]
                is_leaf = merged[lv] & active
                value = np.where(is_leaf, base, np.maximum(base, below))
                value[~active] = -np.inf
        top = np.maximum(-gamma * math.sqrt(2.0 ** (i - D)), value[0::2] + value[1::2])
        merged[i] = top <= 0
    leaves = []
    covered_above = np.zeros(1, dtype=bool)
    for lv in range(D, -1, -1):
        here = merged[lv] & ~covered_above
        for j in np.flatnonzero(here):
            leaves.append((j << lv, lv))
        covered_above = np.repeat(covered_above | merged[lv], 2) if lv else covered_above
    leaves.sort()
    idx = [atom_cuts[a] for a, _ in leaves] + [atom_cuts[-1]]
    C = np.vstack([fits[lv][a >> lv] for a, lv in leaves])
    probs = np.array([2.0 ** (lv - D) for _, lv in leaves])
    cuts = np.asarray(idx, dtype=np.int64)
    edges = cut_positions(xs, cuts)
    _, err = _fits_and_errors(e, cuts[:-1], cuts[1:], d, spec, d + 1)
    return FittedPartition(Partition(edges, True), C, err, cuts, probs)


def stitch(e: EmpiricalMeasure, d: int, alpha: float, eps: float | None = None,
           spec: NodeSpec | None = None) -> FittedPartition:
    """Dyadic bottom-up merging over single-sample atoms; ``e.n`` must be a power of two."""
    n = e.n
    if n < 8 or n & (n - 1):
        raise ValueError("stitch needs a power-of-two sample count of at least 8")
    return stitch_atoms(e, np.arange(n + 1), d, alpha, eps, spec)


def stitch_atoms(e: EmpiricalMeasure, atom_cuts, d: int, alpha: float, eps: float | None = None,
                 spec: NodeSpec | None = None) -> FittedPartition:
    """``stitch`` over arbitrary atoms (power-of-two count) given as sample cuts."""
    atom_cuts = np.asarray(atom_cuts, dtype=np.int64)
    natoms = atom_cuts.size - 1
    if natoms < 2 or natoms & (natoms - 1):
        raise ValueError("atom count must be a power of two")
    if np.any(np.diff(cut_positions(e.xs, atom_cuts)) <= 0):
        raise ValueError("atoms must have positive width")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    spec = _spec(d, spec)
    eps = default_eps(e.n) if eps is None else eps
    gamma = alpha * spec.ratio * eps * math.sqrt(d + 1)
    return _stitch_atoms(e, atom_cuts, d, gamma, spec)


def dyadic_atoms(xs: np.ndarray, d: int) -> np.ndarray:
    """Power-of-two count of near-equal sample buckets, each holding at least ``d+1`` samples."""
    n = xs.size
    count = 2 ** int(math.floor(math.log2(max(n // (d + 1), 1))))
    while count > 1:
        cuts = np.round(np.linspace(0, n, count + 1)).astype(np.int64)
        if np.all(np.diff(cut_positions(xs, cuts)) > 0):
            return cuts
        count //= 2
    return np.array([0, n], dtype=np.int64)

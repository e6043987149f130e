"""Polynomial and piecewise-polynomial arithmetic.

Every polynomial piece stores monomial coefficients in a reference variable
``u`` in ``[-1, 1]`` that is the affine image of the piece's domain. This keeps
low-degree fits on very narrow intervals well conditioned.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from turf import kernels

MAX_DEGREE = 9


class ZeroPolynomialError(ValueError):
    """Raised when root isolation is asked about an identically zero polynomial."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to converge; ``estimate`` holds the best value."""

    def __init__(self, message, estimate):
        super().__init__(message)
        self.estimate = estimate


@dataclass(frozen=True)
class Interval:
    """``[lo, hi)``, or ``[lo, hi]`` when ``closed`` is set."""

    lo: float
    hi: float
    closed: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError("interval endpoints must be finite")
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi})")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x):
        x = np.asarray(x)
        right = x <= self.hi if self.closed else x < self.hi
        return (x >= self.lo) & right

    def subset_of(self, other: "Interval", slack: float = 0.0) -> bool:
        return self.lo >= other.lo - slack and self.hi <= other.hi + slack


def _ref_scale(lo, hi):
    return 2.0 / (hi - lo), -(lo + hi) / (hi - lo)


def compose_affine(C, s, t):
    """Coefficients of ``P(s*v + t)`` in ``v`` for each row ``P`` of ``C``."""
    C = np.atleast_2d(np.asarray(C, dtype=float))
    m, ncol = C.shape
    s = np.broadcast_to(np.asarray(s, dtype=float), (m,))[:, None]
    t = np.broadcast_to(np.asarray(t, dtype=float), (m,))[:, None]
    out = np.zeros_like(C)
    for j in range(ncol - 1, -1, -1):
        shifted = np.zeros_like(out)
        shifted[:, 1:] = out[:, :-1]
        out = t * out + s * shifted
        out[:, 0] += C[:, j]
    return out


def _horner_rows(C, u):
    v = np.zeros_like(u)
    for j in range(C.shape[1] - 1, -1, -1):
        v = v * u + C[:, j]
    return v


def _primitive_rows(C, u):
    """Row-wise ``int_0^u P_i`` in reference coordinates."""
    v = np.zeros_like(u)
    for j in range(C.shape[1] - 1, -1, -1):
        v = v * u + C[:, j] / (j + 1)
    return v * u


class Polynomial:
    """Degree-``d`` polynomial on a finite ``Interval``."""

    __slots__ = ("coeffs", "domain")

    def __init__(self, coeffs: Sequence[float], domain: Interval):
        c = np.array(coeffs, dtype=float).ravel()
        if c.size == 0 or c.size > MAX_DEGREE + 1:
            raise ValueError(f"need 1..{MAX_DEGREE + 1} coefficients, got {c.size}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        if domain.width <= 0:
            raise ValueError("polynomial domain must have positive width")
        c.setflags(write=False)
        self.coeffs = c
        self.domain = domain

    @classmethod
    def from_monomial(cls, coeffs_x, domain: Interval) -> "Polynomial":
        """Build from ordinary ascending coefficients in ``x``."""
        half = 0.5 * domain.width
        mid = 0.5 * (domain.lo + domain.hi)
        return cls(compose_affine(coeffs_x, half, mid)[0], domain)

    @classmethod
    def constant(cls, value: float, domain: Interval, degree: int = 0) -> "Polynomial":
        c = np.zeros(degree + 1)
        c[0] = value
        return cls(c, domain)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def to_ref(self, x):
        a, b = _ref_scale(self.domain.lo, self.domain.hi)
        return a * np.asarray(x, dtype=float) + b

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(self.to_ref(x), self.coeffs)

    def primitive(self, x):
        """``int_{domain.lo}^x p``."""
        u = self.to_ref(x)
        anti = np.polynomial.polynomial.polyint(self.coeffs)
        half = 0.5 * self.domain.width
        return half * (np.polynomial.polynomial.polyval(u, anti)
                       - np.polynomial.polynomial.polyval(-1.0, anti))

    def integral(self, a: float, b: float) -> float:
        return float(self.primitive(b) - self.primitive(a))

    def abs_integral(self, a: float | None = None, b: float | None = None) -> float:
        a = self.domain.lo if a is None else a
        b = self.domain.hi if b is None else b
        ua, ub = self.to_ref([a, b])
        return 0.5 * self.domain.width * kernels.abs_integral(self.coeffs, ua, ub)

    def restrict(self, lo: float, hi: float) -> "Polynomial":
        """The same function re-expressed on ``[lo, hi)``."""
        dlo, dhi = self.domain.lo, self.domain.hi
        s = (hi - lo) / (dhi - dlo)
        t = (lo + hi - dlo - dhi) / (dhi - dlo)
        return Polynomial(compose_affine(self.coeffs, s, t)[0], Interval(lo, hi))

    def shifted(self, value: float) -> "Polynomial":
        c = self.coeffs.copy()
        c[0] += value
        return Polynomial(c, self.domain)

    def scaled(self, factor: float) -> "Polynomial":
        return Polynomial(self.coeffs * factor, self.domain)

    def _check_same(self, other):
        if self.domain != other.domain:
            raise ValueError("polynomial domains differ")

    def __add__(self, other: "Polynomial") -> "Polynomial":
        self._check_same(other)
        return Polynomial(np.polynomial.polynomial.polyadd(self.coeffs, other.coeffs), self.domain)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        self._check_same(other)
        return Polynomial(np.polynomial.polynomial.polysub(self.coeffs, other.coeffs), self.domain)

    def __neg__(self) -> "Polynomial":
        return self.scaled(-1.0)

    def __repr__(self):
        return f"Polynomial({self.coeffs.tolist()}, [{self.domain.lo}, {self.domain.hi}))"


def evaluate(p: Polynomial, x: float) -> float:
    if not math.isfinite(x):
        raise ValueError("x must be finite")
    return float(p(x))


def integrate(p: Polynomial, J: Interval) -> float:
    if not J.subset_of(p.domain, slack=1e-12 * max(1.0, p.domain.width)):
        raise ValueError(f"[{J.lo}, {J.hi}) is not inside the polynomial domain")
    return p.integral(J.lo, J.hi)


def isolate_roots(p: Polynomial, J: Interval | None = None, tol: float = 1e-12) -> list[float]:
    """Real sign-changing roots of ``p`` inside ``J``, sorted.

    Tangential roots may be missed; they do not affect ``|p|`` integrals.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    J = p.domain if J is None else J
    a, b = p.to_ref([J.lo, J.hi])
    scale = 0.5 * p.domain.width
    roots = kernels.poly_roots(p.coeffs, a, b, tol / scale)
    if roots is None:
        raise ZeroPolynomialError("polynomial is identically zero")
    lo, half = p.domain.lo + scale, scale
    return [lo + half * r for r in roots]


class PiecewisePolynomial:
    """Contiguous polynomial pieces; identically zero outside the breakpoints.

    ``coeffs[i]`` holds reference-basis coefficients of piece ``i`` on
    ``[breakpoints[i], breakpoints[i+1])``; the last piece is closed on the
    right.
    """

    __slots__ = ("breakpoints", "coeffs")

    def __init__(self, breakpoints, coeffs):
        bp = np.array(breakpoints, dtype=float).ravel()
        C = np.atleast_2d(np.array(coeffs, dtype=float))
        if bp.size == 0 and C.size == 0:
            C = np.zeros((0, 1))
        elif bp.size < 2 or C.shape[0] != bp.size - 1:
            raise ValueError("need len(breakpoints) == len(pieces) + 1 >= 2")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if not (np.all(np.isfinite(bp)) and np.all(np.isfinite(C))):
            raise ValueError("non-finite breakpoints or coefficients")
        bp.setflags(write=False)
        C.setflags(write=False)
        self.breakpoints = bp
        self.coeffs = C

    @classmethod
    def empty(cls) -> "PiecewisePolynomial":
        return cls([], [])

    @classmethod
    def from_pieces(cls, pieces: Sequence[Polynomial]) -> "PiecewisePolynomial":
        if not pieces:
            return cls.empty()
        for a, b in zip(pieces, pieces[1:]):
            if a.domain.hi != b.domain.lo:
                raise ValueError("pieces are not contiguous")
        ncol = max(p.coeffs.size for p in pieces)
        C = np.zeros((len(pieces), ncol))
        for i, p in enumerate(pieces):
            C[i, :p.coeffs.size] = p.coeffs
        bp = [p.domain.lo for p in pieces] + [pieces[-1].domain.hi]
        return cls(bp, C)

    @classmethod
    def concatenate(cls, parts: Sequence["PiecewisePolynomial"]) -> "PiecewisePolynomial":
        parts = [p for p in parts if p.n_pieces]
        if not parts:
            return cls.empty()
        ncol = max(p.coeffs.shape[1] for p in parts)
        bps = [parts[0].breakpoints[:1]]
        blocks = []
        for prev, p in zip([None] + parts[:-1], parts):
            if prev is not None and prev.breakpoints[-1] != p.breakpoints[0]:
                raise ValueError("parts are not contiguous")
            bps.append(p.breakpoints[1:])
            block = np.zeros((p.n_pieces, ncol))
            block[:, :p.coeffs.shape[1]] = p.coeffs
            blocks.append(block)
        return cls(np.concatenate(bps), np.vstack(blocks))

    @property
    def n_pieces(self) -> int:
        return self.coeffs.shape[0]

    @property
    def degree(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def support(self) -> Interval | None:
        if not self.n_pieces:
            return None
        return Interval(self.breakpoints[0], self.breakpoints[-1], closed=True)

    def piece(self, i: int) -> Polynomial:
        lo, hi = self.breakpoints[i], self.breakpoints[i + 1]
        return Polynomial(self.coeffs[i], Interval(lo, hi, closed=(i == self.n_pieces - 1)))

    @property
    def pieces(self) -> list[Polynomial]:
        return [self.piece(i) for i in range(self.n_pieces)]

    def _locate(self, x):
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        last = self.n_pieces - 1
        idx = np.where(x == self.breakpoints[-1], last, idx)
        inside = (idx >= 0) & (idx <= last)
        return np.clip(idx, 0, last), inside

    def _ref(self, x, idx):
        lo = self.breakpoints[idx]
        hi = self.breakpoints[idx + 1]
        return (2.0 * x - lo - hi) / (hi - lo)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if not self.n_pieces:
            return np.zeros_like(x)
        flat = x.ravel()
        idx, inside = self._locate(flat)
        v = _horner_rows(self.coeffs[idx], self._ref(flat, idx))
        return np.where(inside, v, 0.0).reshape(x.shape)

    def evaluate_near(self, x, ref):
        """Evaluate at ``x`` using the piece that contains ``ref`` (a one-sided limit at breakpoints)."""
        x = np.asarray(x, dtype=float)
        if not self.n_pieces:
            return np.zeros_like(x)
        idx, inside = self._locate(np.asarray(ref, dtype=float))
        v = _horner_rows(self.coeffs[idx], self._ref(x, idx))
        return np.where(inside, v, 0.0)

    def piece_masses(self) -> np.ndarray:
        if not self.n_pieces:
            return np.zeros(0)
        ones = np.ones(self.n_pieces)
        half = 0.5 * np.diff(self.breakpoints)
        return half * (_primitive_rows(self.coeffs, ones) - _primitive_rows(self.coeffs, -ones))

    def mass(self) -> float:
        return float(self.piece_masses().sum())

    def cumulative(self, x):
        """``int_{-inf}^x g`` for each ``x``."""
        x = np.asarray(x, dtype=float)
        if not self.n_pieces:
            return np.zeros_like(x)
        flat = x.ravel()
        masses = self.piece_masses()
        before = np.concatenate([[0.0], np.cumsum(masses)])
        idx, inside = self._locate(flat)
        u = np.clip(self._ref(flat, idx), -1.0, 1.0)
        rows = self.coeffs[idx]
        half = 0.5 * (self.breakpoints[idx + 1] - self.breakpoints[idx])
        partial = half * (_primitive_rows(rows, u) - _primitive_rows(rows, -np.ones_like(u)))
        out = np.where(inside, before[idx] + partial, 0.0)
        out = np.where(flat > self.breakpoints[-1], before[-1], out)
        return out.reshape(x.shape)

    def integral(self, a: float, b: float) -> float:
        ca, cb = self.cumulative([a, b])
        return float(cb - ca)

    def abs_integral(self, a: float | None = None, b: float | None = None) -> float:
        """``int_a^b |g|``, over the whole support by default."""
        if not self.n_pieces:
            return 0.0
        a = self.breakpoints[0] if a is None else max(a, self.breakpoints[0])
        b = self.breakpoints[-1] if b is None else min(b, self.breakpoints[-1])
        if b <= a:
            return 0.0
        inner = self.breakpoints[(self.breakpoints > a) & (self.breakpoints < b)]
        bp = np.concatenate([[a], inner, [b]])
        C = self.restricted_coeffs(bp[:-1], bp[1:])
        return float(np.sum(0.5 * np.diff(bp) * kernels.abs_integrals(C, -1.0, 1.0)))

    def restricted_coeffs(self, seg_lo, seg_hi):
        """Coefficients of the function on each ``[seg_lo[i], seg_hi[i])`` in its own
        reference frame; segments must lie inside one piece or outside the support
        (zero rows)."""
        seg_lo = np.asarray(seg_lo, dtype=float)
        seg_hi = np.asarray(seg_hi, dtype=float)
        if not self.n_pieces:
            return np.zeros((seg_lo.size, 1))
        mid = 0.5 * (seg_lo + seg_hi)
        idx, inside = self._locate(mid)
        lo = self.breakpoints[idx]
        hi = self.breakpoints[idx + 1]
        s = (seg_hi - seg_lo) / (hi - lo)
        t = (seg_lo + seg_hi - lo - hi) / (hi - lo)
        out = compose_affine(self.coeffs[idx], s, t)
        out[~inside] = 0.0
        return out

    def to_dict(self) -> dict:
        return {"breakpoints": self.breakpoints.tolist(), "coeffs": self.coeffs.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "PiecewisePolynomial":
        return cls(data["breakpoints"], data["coeffs"])

    def __eq__(self, other):
        if not isinstance(other, PiecewisePolynomial):
            return NotImplemented
        return (np.array_equal(self.breakpoints, other.breakpoints)
                and self.coeffs.shape == other.coeffs.shape
                and np.array_equal(self.coeffs, other.coeffs))

    def __repr__(self):
        sup = self.support
        where = f"[{sup.lo:.6g}, {sup.hi:.6g}]" if sup else "empty"
        return f"PiecewisePolynomial({self.n_pieces} pieces, degree {self.degree}, {where})"


def _pad(C, ncol):
    if C.shape[1] == ncol:
        return C
    out = np.zeros((C.shape[0], ncol))
    out[:, :C.shape[1]] = C
    return out


def l1_pp(g1: PiecewisePolynomial, g2: PiecewisePolynomial) -> float:
    """Exact ``int |g1 - g2|`` via merged breakpoints and per-segment root isolation."""
    bp = np.union1d(g1.breakpoints, g2.breakpoints)
    if bp.size < 2:
        return 0.0
    lo, hi = bp[:-1], bp[1:]
    C1 = g1.restricted_coeffs(lo, hi)
    C2 = g2.restricted_coeffs(lo, hi)
    ncol = max(C1.shape[1], C2.shape[1])
    diff = _pad(C1, ncol) - _pad(C2, ncol)
    per = kernels.abs_integrals(diff, -1.0, 1.0)
    return float(np.sum(0.5 * (hi - lo) * per))


def normalize(g: PiecewisePolynomial) -> PiecewisePolynomial:
    """``max(g, 0) / int max(g, 0)``, split at the roots of every piece."""
    if not g.n_pieces:
        raise ValueError("cannot normalize an empty function")
    flat, counts = kernels.roots_batch(g.coeffs, -1.0, 1.0)
    owner = np.repeat(np.arange(g.n_pieces), counts)
    lo, hi = g.breakpoints[owner], g.breakpoints[owner + 1]
    xr = lo + 0.5 * (flat + 1.0) * (hi - lo)
    bp = np.union1d(g.breakpoints, xr)
    seg_lo, seg_hi = bp[:-1], bp[1:]
    keep = seg_hi > seg_lo
    seg_lo, seg_hi = seg_lo[keep], seg_hi[keep]
    C = g.restricted_coeffs(seg_lo, seg_hi)
    ones = np.ones(C.shape[0])
    # no sign change inside a segment, so its mean value carries the sign
    mean = 0.5 * (_primitive_rows(C, ones) - _primitive_rows(C, -ones))
    positive = mean > 0
    C[~positive] = 0.0
    mass = float(np.sum((seg_hi - seg_lo) * np.where(positive, mean, 0.0)))
    if not mass > 0:
        raise ValueError("function has no positive mass to normalize")
    bpn = np.concatenate([seg_lo, seg_hi[-1:]])
    return PiecewisePolynomial(bpn, C / mass)


def _simpson(a, b, fa, fm, fb):
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def adaptive_simpson(f, points, tol: float = 1e-4, max_depth: int = 40, presplit: int = 4) -> float:
    """Vectorised adaptive Simpson over consecutive ``points`` with absolute tolerance.

    ``f(x, mid)`` receives, with every abscissa, the midpoint of the panel it
    belongs to. Panels never straddle a point of ``points``, so ``mid`` tells a
    discontinuous integrand which side of a jump to use.
    """
    pts = np.unique(np.asarray(points, dtype=float))
    if pts.size < 2:
        return 0.0
    total_width = pts[-1] - pts[0]
    a = np.concatenate([np.linspace(l, r, presplit + 1)[:-1] for l, r in zip(pts[:-1], pts[1:])])
    b = np.concatenate([a[1:], pts[-1:]])
    m = 0.5 * (a + b)
    fa, fm, fb = f(a, m), f(m, m), f(b, m)
    total = 0.0
    for depth in range(max_depth + 1):
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm, lm), f(rm, rm)
        whole = _simpson(a, b, fa, fm, fb)
        halves = _simpson(a, m, fa, flm, fm) + _simpson(m, b, fm, frm, fb)
        ok = np.abs(halves - whole) <= 15.0 * tol * (b - a) / total_width
        total += float(np.sum(halves[ok] + (halves[ok] - whole[ok]) / 15.0))
        if ok.all():
            return total
        if depth == max_depth:
            rest = float(np.sum(halves[~ok]))
            raise QuadratureError("adaptive Simpson did not converge", total + rest)
        sel = ~ok
        a, m, b = a[sel], m[sel], b[sel]
        fa, flm, fm, frm, fb = fa[sel], flm[sel], fm[sel], frm[sel], fb[sel]
        lm, rm = lm[sel], rm[sel]
        a, b, m = np.concatenate([a, m]), np.concatenate([m, b]), np.concatenate([lm, rm])
        fa, fm, fb = np.concatenate([fa, fm]), np.concatenate([flm, frm]), np.concatenate([fm, fb])
    return total  # pragma: no cover


def _carve(f, s, lo, hi, budget):
    """Half-width around a singular point ``s`` holding at most ``budget`` of f's mass."""
    delta = hi - lo
    while delta > 1e-300:
        if float(f.cdf(min(s + delta, hi)) - f.cdf(max(s - delta, lo))) <= budget:
            return delta
        delta *= 0.5
    return 0.0


def l1_vs_model(g: PiecewisePolynomial, f, tol: float = 1e-4) -> float:
    """``int |g - f|`` for a distribution model ``f``.

    ``f`` needs ``pdf`` and ``cdf``; optional ``features()`` lists points of fine
    structure and ``singular_points()`` lists where the pdf is unbounded.
    Outside the support of ``g`` the integrand is ``f`` itself, so that part is
    the exact cdf mass. Tiny windows around singular points are charged the
    upper bound ``int f + int |g|``, whose excess is below ``tol / 10``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not g.n_pieces:
        return float(f.cdf(np.inf) - f.cdf(-np.inf))
    lo, hi = float(g.breakpoints[0]), float(g.breakpoints[-1])
    total = float(f.cdf(lo)) + float(1.0 - f.cdf(hi))
    sing = [p for p in getattr(f, "singular_points", lambda: [])() if lo <= p <= hi]
    ranges = [(lo, hi)]
    ladders = []
    for p in sing:
        delta = _carve(f, p, lo, hi, tol / 20)
        a, b = max(lo, p - delta), min(hi, p + delta)
        # geometric split points keep the refinement depth small near the singularity
        steps = delta * 2.0 ** np.arange(0, max(1, math.ceil(math.log2((hi - lo) / max(delta, 1e-300)))) + 1)
        ladders.append(np.concatenate([p - steps, p + steps]))
        total += float(f.cdf(b) - f.cdf(a)) + g.abs_integral(a, b)
        ranges = [piece for r in ranges for piece in ((r[0], min(r[1], a)), (max(r[0], b), r[1]))
                  if piece[1] > piece[0]]
    feats = getattr(f, "features", None)
    extra = np.asarray(feats(), dtype=float) if feats is not None else np.zeros(0)
    extra = np.concatenate([extra, *ladders])
    width = sum(b - a for a, b in ranges)

    def integrand(x, mid):
        return np.abs(g.evaluate_near(x, mid) - f.pdf(x))

    for a, b in ranges:
        inner = np.concatenate([g.breakpoints, extra])
        pts = np.concatenate([[a, b], inner[(inner > a) & (inner < b)]])
        total += adaptive_simpson(integrand, pts, tol=0.5 * tol * (b - a) / width)
    return total

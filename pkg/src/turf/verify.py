"""Monte-Carlo checks of the polynomial inequalities and concentration bounds.

Random polynomials are drawn with iid standard normal coefficients in the
``[-1, 1]`` reference basis. Every report row carries ``observed``,
``bound`` and ``margin = bound - observed``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from turf import kernels
from turf.geomsplit import Partition, build_geom_partition, geom_ell, histogram, min_budget
from turf.numerics import Interval, PiecewisePolynomial, l1_pp

HIST_CONSTANT = 3764.0
POLY_CONSTANT = 28.0
KS_LEVEL = 1e-3


@dataclass
class Report:
    name: str
    rows: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r["ok"] for r in self.rows)

    @property
    def violations(self) -> int:
        return sum(int(r.get("violations", 0)) for r in self.rows)

    def to_csv(self, path=None) -> str:
        cols = list(dict.fromkeys(k for r in self.rows for k in r))
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\r\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: _fmt(r.get(k, "")) for k in cols})
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="", encoding="utf-8") as fh:
                fh.write(text)
        return text


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def _derivative_rows(C):
    j = np.arange(1, C.shape[1])
    return C[:, 1:] * j if C.shape[1] > 1 else np.zeros((C.shape[0], 1))


def _ranges(C, a):
    """``max - min`` of every row of ``C`` over ``[-a, a]``."""
    m = C.shape[0]
    if a == 0 or C.shape[1] == 1:
        return np.zeros(m)
    D = _derivative_rows(C)
    flat, cnt = kernels.roots_batch(D, -a, a)
    owner = np.repeat(np.arange(m), cnt)
    u = np.concatenate([np.full(m, -a), np.full(m, a), flat])
    own = np.concatenate([np.arange(m), np.arange(m), owner])
    vals = np.zeros(u.size)
    for j in range(C.shape[1] - 1, -1, -1):
        vals = vals * u + C[own, j]
    hi = np.full(m, -np.inf)
    lo = np.full(m, np.inf)
    np.maximum.at(hi, own, vals)
    np.minimum.at(lo, own, vals)
    return hi - lo


def poly_inequality_bound(d: int, a: float) -> float:
    return POLY_CONSTANT * (d + 1) / math.sqrt(1.0 - a * a)


def check_poly_inequality(d: int, a_values, trials: int, rng=0) -> Report:
    """Range over ``[-a, a]`` against the ``l1`` norm on ``[-1, 1]``.

    Each row checks ``range <= int_{-a}^{a} |q'|`` and
    ``int_{-a}^{a} |q'| <= 28 (d+1) / sqrt(1-a^2) * int |q|`` over ``trials``
    random polynomials and reports the largest normalized range.
    """
    if not 0 <= d <= 8:
        raise ValueError("degree must be in 0..8")
    rng = _rng(rng)
    rep = Report("poly_inequality")
    for a in a_values:
        if not 0 <= a < 1:
            raise ValueError("a must lie in [0, 1)")
        C = rng.standard_normal((trials, d + 1))
        norm = kernels.abs_integrals(C, -1.0, 1.0)
        rng_ = _ranges(C, a)
        var = kernels.abs_integrals(_derivative_rows(C), -a, a) if d > 0 else np.zeros(trials)
        bound = poly_inequality_bound(d, a)
        ratio = rng_ / norm
        var_ratio = var / norm
        bad = int(np.sum((rng_ > var * (1 + 1e-9) + 1e-12) | (var_ratio > bound)))
        rep.rows.append({"d": d, "a": a, "trials": trials, "observed": float(ratio.max()),
                         "variation": float(var_ratio.max()), "bound": bound,
                         "margin": bound - float(var_ratio.max()), "violations": bad, "ok": bad == 0})
    return rep


def check_hist_approximation(d: int, k_values, trials: int, rng=0) -> Report:
    """``l1(p, histogram(p, P))`` against ``3764 (d+1) int|p| / k``.

    ``P`` is the geometric partition, or ``k`` equal pieces when ``k`` is below
    the construction's minimum budget; the ``partition`` column says which.
    """
    rng = _rng(rng)
    rep = Report("hist_approximation")
    I = Interval(-1.0, 1.0, closed=True)
    for k in k_values:
        if k < 1:
            raise ValueError("k must be positive")
        if k >= min_budget(d):
            P, kind = build_geom_partition(d, k, I).partition, "geometric"
        else:
            P, kind = Partition(np.linspace(-1.0, 1.0, k + 1)), "uniform"
        worst = 0.0
        bad = 0
        for _ in range(trials):
            c = rng.standard_normal(d + 1)
            p = PiecewisePolynomial([-1.0, 1.0], c[None, :])
            err = l1_pp(p, histogram(p, P))
            const = err * k / ((d + 1) * p.abs_integral())
            worst = max(worst, const)
            bad += const > HIST_CONSTANT
        rep.rows.append({"d": d, "k": k, "partition": kind, "pieces": len(P), "trials": trials,
                         "observed": worst, "bound": HIST_CONSTANT, "margin": HIST_CONSTANT - worst,
                         "violations": bad, "ok": bad == 0})
    return rep


def concentration_bound(n: int, q: float, eps: float) -> float:
    """Two-sided tail bound on ``|P - q| >= eps sqrt(q)`` for a block of relative size ``q``."""
    lower = math.exp(-(n - 1) * eps ** 2 / 2)
    upper = math.exp(-(n - 1) * eps ** 2 * q / (2 * (q + eps * math.sqrt(q))))
    return lower + upper


def default_pairs(n: int) -> list[tuple[int, int]]:
    widths = sorted({1, 2, 4, 16, n // 8, n // 4, n // 2, n - 1, n})
    out = []
    for w in widths:
        if 1 <= w <= n:
            out.append((0, w))
            if w < n:
                out.append(((n - w) // 2, (n - w) // 2 + w))
    return sorted(set(out))


def _spacing_draws(n, pairs, trials, rng, chunk=20000):
    """Block probabilities ``P_{a,b}`` from ``n - 1`` sorted uniforms, per pair and trial."""
    out = np.empty((len(pairs), trials))
    a = np.array([p[0] for p in pairs])
    b = np.array([p[1] for p in pairs])
    for s in range(0, trials, chunk):
        m = min(chunk, trials - s)
        g = rng.standard_exponential((m, n))
        cum = np.concatenate([np.zeros((m, 1)), np.cumsum(g, axis=1)], axis=1)
        cum /= cum[:, -1:]
        out[:, s:s + m] = (cum[:, b] - cum[:, a]).T
    return out


def check_beta_concentration(n: int, eps_values, trials: int, rng=0, pairs=None) -> Report:
    """Deviation frequencies of block probabilities against the tail bound, plus a KS test of
    ``P_{a,b}`` against ``Beta(b-a, n-(b-a))``."""
    if n < 128:
        raise ValueError("n must be at least 128")
    rng = _rng(rng)
    pairs = default_pairs(n) if pairs is None else [tuple(map(int, p)) for p in pairs]
    for a, b in pairs:
        if not 0 <= a < b <= n:
            raise ValueError(f"invalid block ({a}, {b})")
    draws = _spacing_draws(n, pairs, trials, rng)
    rep = Report("beta_concentration")
    for (a, b), P in zip(pairs, draws):
        w = b - a
        q = w / n
        if w < n:
            ks_p = float(stats.kstest(P, stats.beta(w, n - w).cdf).pvalue)
        else:
            ks_p = 1.0 if np.allclose(P, 1.0) else 0.0
        for eps in eps_values:
            freq = float(np.mean(np.abs(P - q) >= eps * math.sqrt(q)))
            se = math.sqrt(max(freq * (1 - freq), 1.0 / trials) / trials)
            bound = concentration_bound(n, q, eps)
            ok = freq <= bound + 3 * se and ks_p >= KS_LEVEL
            rep.rows.append({"n": n, "a": a, "b": b, "eps": eps, "trials": trials, "observed": freq,
                             "bound": bound, "se": se, "margin": bound + 3 * se - freq,
                             "ks_pvalue": ks_p, "violations": int(not ok), "ok": ok})
    return rep


def check_partition_count(d_values, k_values) -> Report:
    """Interval count of the geometric partition against the budget ``k``."""
    rep = Report("partition_count")
    I = Interval(-1.0, 1.0, closed=True)
    for d in d_values:
        for k in k_values:
            if k < min_budget(d):
                continue
            count = len(build_geom_partition(d, k, I))
            bound = 4 * geom_ell(d, k) * (d + 1) / (2 ** 0.25 - 1)
            rep.rows.append({"d": d, "k": k, "observed": count, "bound": bound,
                             "margin": bound - count, "violations": int(count > k),
                             "ok": count <= k})
    return rep


def run_all(seed: int = 0, quick: bool = False) -> list[Report]:
    """Every suite at default settings; ``quick`` shrinks the trial counts."""
    rng = np.random.default_rng(seed)
    poly_trials, hist_trials, beta_trials = (100, 20, 2000) if quick else (1000, 200, 100000)
    reports = []
    poly = Report("poly_inequality")
    for d in range(9):
        poly.rows += check_poly_inequality(d, [0.0, 0.5, 0.9, 0.99], poly_trials, rng).rows
    reports.append(poly)
    hist = Report("hist_approximation")
    for d in range(4):
        hist.rows += check_hist_approximation(d, [32, 128, 512], hist_trials, rng).rows
    reports.append(hist)
    reports.append(check_beta_concentration(256, [0.1, 0.2, 0.4], beta_trials, rng))
    reports.append(check_partition_count(range(9), [22, 32, 44, 64, 128, 256, 512, 1024]))
    return reports

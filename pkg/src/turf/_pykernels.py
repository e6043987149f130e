"""Pure numpy/Python implementations of the hot kernels.

These mirror ``_kernels.pyx`` call for call. They are used when the compiled
extension is unavailable or when ``TURF_PURE_PYTHON=1`` is set.
"""
import numpy as np

ROOT_TOL = 1e-12


def _trim(c):
    deg = len(c) - 1
    while deg >= 0 and c[deg] == 0.0:
        deg -= 1
    return deg


def _horner(c, deg, x):
    v = c[deg]
    for j in range(deg - 1, -1, -1):
        v = v * x + c[j]
    return v


def _bisect(c, deg, lo, hi, flo, tol):
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = _horner(c, deg, mid)
        if fm == 0.0:
            return mid
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _roots(c, deg, a, b, tol):
    if deg <= 0:
        return []
    if deg == 1:
        r = -c[0] / c[1]
        return [r] if a <= r <= b else []
    dc = [j * c[j] for j in range(1, deg + 1)]
    crit = _roots(dc, deg - 1, a, b, tol)
    pts = [a] + crit + [b]
    out = []
    fl = _horner(c, deg, pts[0])
    for i in range(len(pts) - 1):
        l, r = pts[i], pts[i + 1]
        fr = _horner(c, deg, r)
        if fl == 0.0:
            out.append(l)
        elif fl * fr < 0.0:
            out.append(_bisect(c, deg, l, r, fl, tol))
        fl = fr
    if fl == 0.0:
        out.append(pts[-1])
    merged = []
    for r in out:
        if not merged or r - merged[-1] > tol:
            merged.append(r)
    return merged


def poly_roots(c, a, b, tol=ROOT_TOL):
    """Sign-changing real roots of ``sum c[j] u**j`` inside ``[a, b]``.

    Returns ``None`` for the identically zero polynomial.
    """
    c = [float(v) for v in c]
    deg = _trim(c)
    if deg < 0:
        return None
    return _roots(c, deg, float(a), float(b), tol)


def _antideriv(c, deg, x):
    v = 0.0
    for j in range(deg, -1, -1):
        v = v * x + c[j] / (j + 1)
    return v * x


def abs_integral(c, a, b, tol=ROOT_TOL):
    c = [float(v) for v in c]
    deg = _trim(c)
    if deg < 0 or b <= a:
        return 0.0
    pts = [a] + _roots(c, deg, a, b, tol) + [b]
    total = 0.0
    prev = _antideriv(c, deg, pts[0])
    for x in pts[1:]:
        cur = _antideriv(c, deg, x)
        total += abs(cur - prev)
        prev = cur
    return total


def abs_integrals(C, a, b, tol=ROOT_TOL):
    """Row-wise ``int_a^b |P_i(u)| du`` for a coefficient matrix ``C``."""
    C = np.asarray(C, dtype=float)
    m = C.shape[0]
    a = np.broadcast_to(np.asarray(a, dtype=float), (m,))
    b = np.broadcast_to(np.asarray(b, dtype=float), (m,))
    out = np.empty(m)
    # degree <= 1 rows are common and have a closed form
    lin = np.all(C[:, 2:] == 0.0, axis=1) if C.shape[1] > 2 else np.ones(m, bool)
    if lin.any():
        c0 = C[lin, 0]
        c1 = C[lin, 1] if C.shape[1] > 1 else np.zeros(lin.sum())
        la, lb = a[lin], b[lin]
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(c1 != 0.0, -c0 / np.where(c1 != 0.0, c1, 1.0), np.inf)
        inside = (r > la) & (r < lb)
        fa, fb = c0 + c1 * la, c0 + c1 * lb
        whole = np.abs(0.5 * (fa + fb) * (lb - la))
        r = np.where(inside, r, la)
        split = 0.5 * (np.abs(fa) * (r - la) + np.abs(fb) * (lb - r))
        out[lin] = np.where(inside, split, whole)
    for i in np.flatnonzero(~lin):
        out[i] = abs_integral(C[i], a[i], b[i], tol)
    return out


def roots_batch(C, a, b, tol=ROOT_TOL):
    """Roots of every row of ``C`` inside ``[a_i, b_i]``.

    Returns ``(flat, counts)``; zero rows report no roots.
    """
    C = np.asarray(C, dtype=float)
    m = C.shape[0]
    a = np.broadcast_to(np.asarray(a, dtype=float), (m,))
    b = np.broadcast_to(np.asarray(b, dtype=float), (m,))
    flat = []
    counts = np.zeros(m, dtype=np.int64)
    for i in range(m):
        r = poly_roots(C[i], a[i], b[i], tol) or []
        counts[i] = len(r)
        flat.extend(r)
    return np.asarray(flat, dtype=float), counts


def max_k_profit(seq, k):
    """Best total gain of at most ``k`` buy-then-sell pairs along ``seq``."""
    p = np.asarray(seq, dtype=float)
    if p.size == 0:
        return 0.0
    sell = np.zeros_like(p)
    for _ in range(int(k)):
        buy = np.maximum.accumulate(sell - p)
        new_sell = np.maximum.accumulate(buy + p)
        if np.array_equal(new_sell, sell):
            break
        sell = new_sell
    return float(sell[-1])


def segmented_ak(seq, offsets, k):
    """``max(profit(D), profit(-D))`` for each slice ``seq[offsets[i]:offsets[i+1]]``."""
    seq = np.asarray(seq, dtype=float)
    offsets = np.asarray(offsets, dtype=np.int64)
    out = np.empty(len(offsets) - 1)
    for i in range(len(out)):
        s = seq[offsets[i]:offsets[i + 1]]
        out[i] = max(max_k_profit(s, k), max_k_profit(-s, k))
    return out



def ak_rows(ua, blo, bhi, aoff, ru, rbelow, roff, C, half, natoms, inv_n, k):
    """A_k distance of every row from its atoms and roots; see the compiled twin."""
    ua, blo, bhi, ru = (np.asarray(v, dtype=float) for v in (ua, blo, bhi, ru))
    aoff, rbelow, roff, natoms = (np.asarray(v, dtype=np.int64) for v in (aoff, rbelow, roff, natoms))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    half = np.asarray(half, dtype=float)
    m = C.shape[0]
    if m == 0:
        return np.zeros(0)
    nat = np.diff(aoff)
    nr = np.diff(roff)
    rows = np.arange(m)
    aowner = np.repeat(rows, nat)
    rowner = np.repeat(rows, nr)
    alocal = np.arange(ua.size) - aoff[:-1][aowner]
    rlocal = np.arange(ru.size) - roff[:-1][rowner]
    # roots at or below local atom index a come before it
    roots_le = np.searchsorted(aoff[:-1][rowner] + rbelow, aoff[:-1][aowner] + alocal, side="right") - roff[:-1][aowner]
    sizes = 2 + 2 * nat + nr
    off = np.concatenate([[0], np.cumsum(sizes)])
    u = np.empty(off[-1])
    cnt = np.empty(off[-1])
    u[off[:-1]], cnt[off[:-1]] = -1.0, 0.0
    u[off[1:] - 1], cnt[off[1:] - 1] = 1.0, natoms
    pa = off[:-1][aowner] + 1 + 2 * alocal + roots_le
    u[pa], u[pa + 1] = ua, ua
    cnt[pa], cnt[pa + 1] = blo, bhi
    pr = off[:-1][rowner] + 1 + 2 * rbelow + rlocal
    u[pr], cnt[pr] = ru, rbelow
    owner = np.repeat(rows, sizes)
    prim = np.zeros(u.size)
    start = np.zeros(m)
    for j in range(C.shape[1] - 1, -1, -1):
        prim = prim * u + C[owner, j] / (j + 1)
        start = -start + C[:, j] / (j + 1)
    prim = prim * u + start[owner]
    D = cnt * inv_n - half[owner] * prim
    return segmented_ak(D, off, k)

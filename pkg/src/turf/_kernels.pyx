# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: real-root isolation, |poly| integrals, k-transaction DP.

Call-compatible with ``turf._pykernels``.
"""
import numpy as np

from libc.math cimport fabs
from libc.stdlib cimport malloc, free

cdef enum:
    MAXC = 24

ROOT_TOL = 1e-12


cdef inline double _horner(const double* c, int deg, double x) noexcept nogil:
    cdef double v = c[deg]
    cdef int j
    for j in range(deg - 1, -1, -1):
        v = v * x + c[j]
    return v


cdef inline double _antideriv(const double* c, int deg, double x) noexcept nogil:
    cdef double v = 0.0
    cdef int j
    for j in range(deg, -1, -1):
        v = v * x + c[j] / (j + 1)
    return v * x


cdef double _bisect(const double* c, int deg, double lo, double hi, double flo,
                    double tol) noexcept nogil:
    cdef double mid, fm
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = _horner(c, deg, mid)
        if fm == 0.0:
            return mid
        if (fm < 0.0) == (flo < 0.0):
            lo = mid
            flo = fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


cdef int _roots(const double* c, int deg, double a, double b, double tol,
                double* out) noexcept nogil:
    cdef double dc[MAXC]
    cdef double pts[MAXC + 2]
    cdef double raw[MAXC + 2]
    cdef int ncrit, npts, nraw = 0, nout = 0, j, i
    cdef double r, fl, fr
    if deg <= 0:
        return 0
    if deg == 1:
        r = -c[0] / c[1]
        if a <= r and r <= b:
            out[0] = r
            return 1
        return 0
    for j in range(1, deg + 1):
        dc[j - 1] = j * c[j]
    pts[0] = a
    ncrit = _roots(dc, deg - 1, a, b, tol, &pts[1])
    npts = ncrit + 2
    pts[npts - 1] = b
    fl = _horner(c, deg, pts[0])
    for i in range(npts - 1):
        fr = _horner(c, deg, pts[i + 1])
        if fl == 0.0:
            raw[nraw] = pts[i]
            nraw += 1
        elif fl * fr < 0.0:
            raw[nraw] = _bisect(c, deg, pts[i], pts[i + 1], fl, tol)
            nraw += 1
        fl = fr
    if fl == 0.0:
        raw[nraw] = pts[npts - 1]
        nraw += 1
    for i in range(nraw):
        if nout == 0 or raw[i] - out[nout - 1] > tol:
            out[nout] = raw[i]
            nout += 1
    return nout


cdef inline int _trim(const double* c, int n) noexcept nogil:
    cdef int deg = n - 1
    while deg >= 0 and c[deg] == 0.0:
        deg -= 1
    return deg


cdef double _abs_integral(const double* c, int deg, double a, double b,
                          double tol) noexcept nogil:
    cdef double rts[MAXC]
    cdef int nr, i
    cdef double total = 0.0, prev, cur
    if deg < 0 or b <= a:
        return 0.0
    nr = _roots(c, deg, a, b, tol, rts)
    prev = _antideriv(c, deg, a)
    for i in range(nr):
        cur = _antideriv(c, deg, rts[i])
        total += fabs(cur - prev)
        prev = cur
    cur = _antideriv(c, deg, b)
    total += fabs(cur - prev)
    return total


def _as_row(c):
    arr = np.ascontiguousarray(c, dtype=float)
    if arr.shape[0] > MAXC:
        raise ValueError("polynomial degree too large for kernel")
    return arr


def poly_roots(c, double a, double b, double tol=ROOT_TOL):
    """Sign-changing real roots of ``sum c[j] u**j`` inside ``[a, b]``.

    Returns ``None`` for the identically zero polynomial.
    """
    cdef const double[::1] cv = _as_row(c)
    cdef double rts[MAXC]
    cdef int deg = _trim(&cv[0], cv.shape[0]) if cv.shape[0] else -1
    if deg < 0:
        return None
    cdef int nr = _roots(&cv[0], deg, a, b, tol, rts)
    return [rts[i] for i in range(nr)]


def abs_integral(c, double a, double b, double tol=ROOT_TOL):
    cdef const double[::1] cv = _as_row(c)
    if cv.shape[0] == 0:
        return 0.0
    return _abs_integral(&cv[0], _trim(&cv[0], cv.shape[0]), a, b, tol)


def abs_integrals(C, a, b, double tol=ROOT_TOL):
    """Row-wise ``int_a^b |P_i(u)| du`` for a coefficient matrix ``C``."""
    cdef const double[:, ::1] Cv = np.ascontiguousarray(C, dtype=float)
    cdef Py_ssize_t m = Cv.shape[0], ncol = Cv.shape[1], i
    if ncol > MAXC:
        raise ValueError("polynomial degree too large for kernel")
    cdef const double[::1] av = np.ascontiguousarray(np.broadcast_to(np.asarray(a, dtype=float), (m,)))
    cdef const double[::1] bv = np.ascontiguousarray(np.broadcast_to(np.asarray(b, dtype=float), (m,)))
    out = np.empty(m)
    cdef double[::1] ov = out
    with nogil:
        for i in range(m):
            ov[i] = _abs_integral(&Cv[i, 0], _trim(&Cv[i, 0], ncol), av[i], bv[i], tol)
    return out


def roots_batch(C, a, b, double tol=ROOT_TOL):
    """Roots of every row of ``C`` inside ``[a_i, b_i]``.

    Returns ``(flat, counts)``; zero rows report no roots.
    """
    cdef const double[:, ::1] Cv = np.ascontiguousarray(C, dtype=float)
    cdef Py_ssize_t m = Cv.shape[0], ncol = Cv.shape[1], i
    if ncol > MAXC:
        raise ValueError("polynomial degree too large for kernel")
    cdef const double[::1] av = np.ascontiguousarray(np.broadcast_to(np.asarray(a, dtype=float), (m,)))
    cdef const double[::1] bv = np.ascontiguousarray(np.broadcast_to(np.asarray(b, dtype=float), (m,)))
    flat = np.empty(m * ncol)
    counts = np.zeros(m, dtype=np.int64)
    cdef double[::1] fv = flat
    cdef long long[::1] cnt = counts
    cdef Py_ssize_t pos = 0
    cdef int deg, nr
    with nogil:
        for i in range(m):
            deg = _trim(&Cv[i, 0], ncol)
            if deg <= 0:
                continue
            nr = _roots(&Cv[i, 0], deg, av[i], bv[i], tol, &fv[pos])
            cnt[i] = nr
            pos += nr
    return flat[:pos].copy(), counts


cdef double _profit(const double* p, Py_ssize_t n, int k, double sign,
                    double* buy, double* sell) noexcept nogil:
    # buy[j]/sell[j]: best value holding / flat after j opened transactions
    cdef Py_ssize_t i
    cdef int j
    cdef double x
    for j in range(k + 1):
        buy[j] = -1e300
        sell[j] = 0.0
    for i in range(n):
        x = sign * p[i]
        for j in range(1, k + 1):
            if sell[j - 1] - x > buy[j]:
                buy[j] = sell[j - 1] - x
            if buy[j] + x > sell[j]:
                sell[j] = buy[j] + x
    return sell[k]


def max_k_profit(seq, int k):
    """Best total gain of at most ``k`` buy-then-sell pairs along ``seq``."""
    cdef const double[::1] p = np.ascontiguousarray(seq, dtype=float)
    cdef Py_ssize_t n = p.shape[0]
    if n == 0 or k <= 0:
        return 0.0
    cdef double* buf = <double*> malloc(2 * (k + 1) * sizeof(double))
    cdef double res
    try:
        res = _profit(&p[0], n, k, 1.0, buf, buf + k + 1)
    finally:
        free(buf)
    return res


def segmented_ak(seq, offsets, int k):
    """``max(profit(D), profit(-D))`` for each slice ``seq[offsets[i]:offsets[i+1]]``."""
    cdef const double[::1] p = np.ascontiguousarray(seq, dtype=float)
    cdef const long long[::1] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef Py_ssize_t m = off.shape[0] - 1, i, n
    out = np.zeros(max(m, 0))
    cdef double[::1] ov = out
    if m <= 0 or k <= 0:
        return out
    cdef double* buf = <double*> malloc(2 * (k + 1) * sizeof(double))
    cdef double up, down
    try:
        with nogil:
            for i in range(m):
                n = off[i + 1] - off[i]
                if n <= 0:
                    continue
                up = _profit(&p[off[i]], n, k, 1.0, buf, buf + k + 1)
                down = _profit(&p[off[i]], n, k, -1.0, buf, buf + k + 1)
                ov[i] = up if up > down else down
    finally:
        free(buf)
    return out


cdef inline void _step(double x, int k, double* buy, double* sell) noexcept nogil:
    cdef int j
    for j in range(1, k + 1):
        if sell[j - 1] - x > buy[j]:
            buy[j] = sell[j - 1] - x
        if buy[j] + x > sell[j]:
            sell[j] = buy[j] + x


def ak_rows(ua, blo, bhi, aoff, ru, rbelow, roff, C, half, natoms, double inv_n, int k):
    """A_k distance of every row, building its discrepancy sequence on the fly.

    Row ``i`` owns atoms ``aoff[i]:aoff[i+1]`` (reference positions ``ua`` with
    left/right counts ``blo``/``bhi``) and sorted roots ``roff[i]:roff[i+1]``
    (positions ``ru``, ``rbelow`` atoms below). A root precedes local atom
    ``a`` iff ``rbelow <= a``. The sequence runs from ``u = -1`` to ``u = 1``
    with value ``count / n - half * int_{-1}^u P``.
    """
    cdef const double[::1] uav = np.ascontiguousarray(ua, dtype=float)
    cdef const double[::1] blv = np.ascontiguousarray(blo, dtype=float)
    cdef const double[::1] bhv = np.ascontiguousarray(bhi, dtype=float)
    cdef const long long[::1] ao = np.ascontiguousarray(aoff, dtype=np.int64)
    cdef const double[::1] ruv = np.ascontiguousarray(ru, dtype=float)
    cdef const long long[::1] rb = np.ascontiguousarray(rbelow, dtype=np.int64)
    cdef const long long[::1] ro = np.ascontiguousarray(roff, dtype=np.int64)
    cdef const double[:, ::1] Cv = np.ascontiguousarray(C, dtype=float)
    cdef const double[::1] hv = np.ascontiguousarray(half, dtype=float)
    cdef const long long[::1] na = np.ascontiguousarray(natoms, dtype=np.int64)
    cdef Py_ssize_t m = Cv.shape[0], i, a, r, a0, a1, r1
    cdef int deg = Cv.shape[1] - 1, j
    out = np.zeros(m)
    cdef double[::1] ov = out
    if m == 0 or k <= 0:
        return out
    if deg + 1 > MAXC:
        raise ValueError("polynomial degree too large for kernel")
    cdef double* buf = <double*> malloc(4 * (k + 1) * sizeof(double))
    cdef double* ub = buf
    cdef double* us = buf + (k + 1)
    cdef double* db = buf + 2 * (k + 1)
    cdef double* ds = buf + 3 * (k + 1)
    cdef double base, h, x, up, down
    cdef const double* c
    try:
        with nogil:
            for i in range(m):
                for j in range(k + 1):
                    ub[j] = -1e300
                    db[j] = -1e300
                    us[j] = 0.0
                    ds[j] = 0.0
                c = &Cv[i, 0]
                h = hv[i]
                base = _antideriv(c, deg, -1.0)
                # the first point (u = -1, count 0) is exactly zero
                _step(0.0, k, ub, us)
                _step(-0.0, k, db, ds)
                a0 = ao[i]
                a1 = ao[i + 1]
                r = ro[i]
                r1 = ro[i + 1]
                for a in range(a0, a1):
                    while r < r1 and rb[r] <= a - a0:
                        x = rb[r] * inv_n - h * (_antideriv(c, deg, ruv[r]) - base)
                        _step(x, k, ub, us)
                        _step(-x, k, db, ds)
                        r += 1
                    x = uav[a]
                    x = _antideriv(c, deg, x) - base
                    _step(blv[a] * inv_n - h * x, k, ub, us)
                    _step(-(blv[a] * inv_n - h * x), k, db, ds)
                    _step(bhv[a] * inv_n - h * x, k, ub, us)
                    _step(-(bhv[a] * inv_n - h * x), k, db, ds)
                while r < r1:
                    x = rb[r] * inv_n - h * (_antideriv(c, deg, ruv[r]) - base)
                    _step(x, k, ub, us)
                    _step(-x, k, db, ds)
                    r += 1
                x = na[i] * inv_n - h * (_antideriv(c, deg, 1.0) - base)
                _step(x, k, ub, us)
                _step(-x, k, db, ds)
                up = us[k]
                down = ds[k]
                ov[i] = up if up > down else down
    finally:
        free(buf)
    return out

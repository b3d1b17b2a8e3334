# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Monte Carlo hot kernels (twin of ``_kernels_py``).

Same contracts as the NumPy fallback; the arithmetic is kept in the same
order so results are bit-identical across backends.
"""

import numpy as np

from libc.math cimport exp, expm1, fabs, log, log1p

BACKEND_NAME = "compiled"


def ks_statistics(e):
    """Kolmogorov statistics of uniform samples, one per row.

    Each row holds n+1 standard-exponential variates whose normalized
    partial sums are the order statistics of n uniforms.
    """
    e = np.ascontiguousarray(e, dtype=np.float64)
    if e.ndim != 2 or e.shape[1] < 2:
        raise ValueError("expected a 2-d array with n+1 >= 2 columns")
    cdef double[:, ::1] ev = e
    cdef Py_ssize_t m = ev.shape[0]
    cdef Py_ssize_t n = ev.shape[1] - 1
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t r, i
    cdef double dn, d, dplus, dminus, total, acc, u
    dn = <double> n
    with nogil:
        for r in range(m):
            total = 0.0
            for i in range(n + 1):
                total += ev[r, i]
            acc = 0.0
            d = 0.0
            for i in range(n):
                acc += ev[r, i]
                u = acc / total
                dplus = (<double> (i + 1)) / dn - u
                dminus = u - (<double> i) / dn
                if dplus > d:
                    d = dplus
                if dminus > d:
                    d = dminus
            ov[r] = d
    return out


cdef inline double _ztp_root(double target, double lam) nogil:
    # solve lam / (1 - e^-lam) = target via Newton; targets <= 1 clamp
    cdef double em1, f, d, step
    cdef int it
    if target <= 1.0 + 1e-12:
        return 1e-10
    if lam < 1e-12:
        lam = 1e-12
    for it in range(100):
        em1 = -expm1(-lam)
        f = lam / em1 - target
        d = (em1 - lam * exp(-lam)) / (em1 * em1)
        step = f / d
        lam -= step
        if lam < 1e-12:
            lam = 1e-12
        if fabs(step) <= 1e-15 * (1.0 if lam < 1.0 else lam):
            break
    return lam


def em_refit(xs, nx, lgx, atoms, weights, Py_ssize_t max_sweeps,
             double param_tol, double prune_eps, double merge_rel):
    """EM sweeps for a zero-truncated Poisson mixture (refit hot loop).

    Same algorithm as the NumPy twin; scalar arithmetic, so results agree
    across backends to floating-point noise rather than bit-for-bit.
    """
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    nx = np.ascontiguousarray(nx, dtype=np.float64)
    lgx = np.ascontiguousarray(lgx, dtype=np.float64)
    a_arr = np.array(atoms, dtype=np.float64)
    w_arr = np.array(weights, dtype=np.float64)

    cdef double[::1] xv = xs
    cdef double[::1] nv = nx
    cdef double[::1] gv = lgx
    cdef Py_ssize_t nxs = xv.shape[0]
    cdef Py_ssize_t j_cap = a_arr.shape[0]
    cdef double[::1] av = a_arr
    cdef double[::1] wv = w_arr

    cdef double n = 0.0
    cdef Py_ssize_t i, j, k, nj, sweeps
    for i in range(nxs):
        n += nv[i]

    buf = np.empty((8, j_cap), dtype=np.float64)
    pmat = np.empty((nxs, j_cap), dtype=np.float64)
    cdef double[:, ::1] bv = buf
    cdef double[:, ::1] pv = pmat
    # buffer rows: 0 log-atom, 1 log-norm, 2 mass, 3 xbar, 4 new atoms,
    # 5 new weights, 6/7 merge scratch
    cdef double fq, r, t, change, c, tot, wsum
    cdef bint stationary = False

    nj = j_cap
    sweeps = 0
    with nogil:
        while sweeps < max_sweeps:
            for j in range(nj):
                bv[0, j] = log(av[j])
                if av[j] > 1e-6:
                    bv[1, j] = av[j] + log1p(-exp(-av[j]))
                else:
                    bv[1, j] = log(expm1(av[j]))
                bv[2, j] = 0.0
                bv[3, j] = 0.0
            for i in range(nxs):
                fq = 0.0
                for j in range(nj):
                    t = exp(xv[i] * bv[0, j] - gv[i] - bv[1, j])
                    pv[i, j] = t
                    fq += t * wv[j]
                r = nv[i] / fq
                for j in range(nj):
                    t = r * pv[i, j] * wv[j]
                    bv[2, j] += t
                    bv[3, j] += xv[i] * t
            change = 0.0
            for j in range(nj):
                bv[4, j] = _ztp_root(bv[3, j] / bv[2, j], av[j])
                bv[5, j] = bv[2, j] / n
                c = fabs(bv[4, j] - av[j])
                if c > change:
                    change = c
                c = fabs(bv[5, j] - wv[j])
                if c > change:
                    change = c
            sweeps += 1
            # prune
            k = 0
            for j in range(nj):
                if bv[5, j] > prune_eps:
                    bv[6, k] = bv[4, j]
                    bv[7, k] = bv[5, j]
                    k += 1
            if k == 0:
                # keep the heaviest atom
                k = 0
                for j in range(1, nj):
                    if bv[5, j] > bv[5, k]:
                        k = j
                bv[6, 0] = bv[4, k]
                bv[7, 0] = bv[5, k]
                k = 1
            # insertion sort by atom
            for i in range(1, k):
                t = bv[6, i]
                r = bv[7, i]
                j = i - 1
                while j >= 0 and bv[6, j] > t:
                    bv[6, j + 1] = bv[6, j]
                    bv[7, j + 1] = bv[7, j]
                    j -= 1
                bv[6, j + 1] = t
                bv[7, j + 1] = r
            # merge adjacent atoms closer than merge_rel (relative)
            nj = 0
            av[0] = bv[6, 0]
            wv[0] = bv[7, 0]
            for j in range(1, k):
                if bv[6, j] - av[nj] <= merge_rel * bv[6, j]:
                    tot = wv[nj] + bv[7, j]
                    av[nj] = (av[nj] * wv[nj] + bv[6, j] * bv[7, j]) / tot
                    wv[nj] = tot
                else:
                    nj += 1
                    av[nj] = bv[6, j]
                    wv[nj] = bv[7, j]
            nj += 1
            if change < param_tol:
                stationary = True
                break
        wsum = 0.0
        for j in range(nj):
            wsum += wv[j]
        for j in range(nj):
            wv[j] /= wsum
    return a_arr[:nj].copy(), w_arr[:nj].copy(), int(sweeps), bool(stationary)


cdef inline Py_ssize_t _upper_bound(const double* a, Py_ssize_t lo,
                                    Py_ssize_t hi, double x) nogil:
    # first index in [lo, hi) with a[index] > x
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) // 2
        if a[mid] > x:
            hi = mid
        else:
            lo = mid + 1
    return lo


def zt_mixture_counts(u_atom, u_count, weight_cdf, count_cdf, offsets):
    """Inverse-cdf draws from a finite mixture of count distributions."""
    u_atom = np.ascontiguousarray(u_atom, dtype=np.float64)
    u_count = np.ascontiguousarray(u_count, dtype=np.float64)
    weight_cdf = np.ascontiguousarray(weight_cdf, dtype=np.float64)
    count_cdf = np.ascontiguousarray(count_cdf, dtype=np.float64)
    offsets = np.ascontiguousarray(offsets, dtype=np.int64)

    cdef double[::1] ua = u_atom
    cdef double[::1] uc = u_count
    cdef double[::1] wc = weight_cdf
    cdef double[::1] cc = count_cdf
    cdef long long[::1] off = offsets
    cdef Py_ssize_t m = ua.shape[0]
    cdef Py_ssize_t nj = wc.shape[0]
    out = np.empty(m, dtype=np.int64)
    cdef long long[::1] ov = out
    cdef Py_ssize_t b, j, lo, hi, idx
    with nogil:
        for b in range(m):
            j = _upper_bound(&wc[0], 0, nj, ua[b])
            if j > nj - 1:
                j = nj - 1
            lo = <Py_ssize_t> off[j]
            hi = <Py_ssize_t> off[j + 1]
            idx = _upper_bound(&cc[0], lo, hi, uc[b]) - lo
            if idx > hi - lo - 1:
                idx = hi - lo - 1
            ov[b] = idx + 1
    return out

# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: block matching and bilateral filtering.

The pure-numpy twins live in ``_fallback``; both must produce identical
output bit for bit (integer costs, same float expressions, same scan
order), so any change here needs the matching change there.
"""

import numpy as np

cimport cython
from libc.math cimport llrint, rint
from libc.string cimport memset

DEF NOT_EVAL = -1


@cython.boundscheck(False)
@cython.wraparound(False)
cdef inline long long _zsad(const int[:, ::1] al, const int[:, ::1] ar,
                            long long beta, int u, int v, int d, int r) nogil:
    cdef long long acc = 0
    cdef long long diff
    cdef int i, j
    for j in range(v - r, v + r + 1):
        for i in range(u - r, u + r + 1):
            diff = al[j, i] - ar[j, i - d] - beta
            acc += diff if diff >= 0 else -diff
    return acc


def match_kernel(const int[:, ::1] al, const int[:, ::1] ar,
                 const int[:, ::1] sl, const int[:, ::1] sr,
                 const int[::1] lo, const int[::1] hi,
                 int d_max, int radius, double uniqueness, bint propagate):
    """Scaled zero-mean SAD matcher over per-row candidate ranges.

    ``al``/``ar`` hold intensity times the block area, ``sl``/``sr`` plain
    block sums, so every cost is an exact integer (block-area times the
    real zero-mean SAD). Rows are processed bottom-up; ``propagate``
    widens each pixel's candidates with +-1 around the rounded winners at
    columns u-1, u, u+1 of the row below.

    Returns ``(disparity float64 map with NaN for invalid, evaluations)``.
    """
    cdef int h = al.shape[0]
    cdef int w = al.shape[1]
    cdef int r = radius
    cdef double nan = float("nan")

    disp_arr = np.full((h, w), np.nan, dtype=np.float64)
    cdef double[:, ::1] disp = disp_arr
    prev_arr = np.full(w, -1, dtype=np.int32)
    cur_arr = np.full(w, -1, dtype=np.int32)
    cdef int[::1] prev_d = prev_arr
    cdef int[::1] cur_d = cur_arr

    flag_arr = np.zeros(d_max + 1, dtype=np.uint8)
    cost_arr = np.zeros(d_max + 1, dtype=np.int64)
    cdef unsigned char[::1] flag = flag_arr
    cdef long long[::1] cost = cost_arr

    cdef long long n_evals = 0
    cdef int v, u, d, du, dd, su, pd, dlo, dhi, best_d
    cdef long long beta, c, best, second, cm, c0, cp, denom
    cdef double delta, value

    with nogil:
        for v in range(h - 1 - r, r - 1, -1):
            dlo = lo[v]
            dhi = hi[v]
            for u in range(r, w - r):
                memset(&flag[0], 0, (d_max + 1) * sizeof(unsigned char))
                for d in range(dlo, dhi + 1):
                    if d <= u - r:
                        flag[d] = 1
                if propagate:
                    for du in range(-1, 2):
                        su = u + du
                        if su < r or su >= w - r:
                            continue
                        pd = prev_d[su]
                        if pd < 0:
                            continue
                        for dd in range(pd - 1, pd + 2):
                            if 0 <= dd <= d_max and dd <= u - r:
                                flag[dd] = 1

                best = -1
                best_d = -1
                for d in range(0, d_max + 1):
                    if not flag[d]:
                        continue
                    beta = sl[v, u] - sr[v, u - d]
                    c = _zsad(al, ar, beta, u, v, d, r)
                    cost[d] = c
                    n_evals += 1
                    if best < 0 or c < best:
                        best = c
                        best_d = d
                if best_d < 0:
                    cur_d[u] = -1
                    continue

                second = -1
                for d in range(0, d_max + 1):
                    if not flag[d]:
                        continue
                    if d >= best_d - 1 and d <= best_d + 1:
                        continue
                    if second < 0 or cost[d] < second:
                        second = cost[d]

                if second >= 0 and not ((<double>best) < uniqueness * (<double>second)):
                    cur_d[u] = -1
                    continue

                value = <double>best_d
                if best_d - 1 >= 0 and best_d + 1 <= d_max and flag[best_d - 1] and flag[best_d + 1]:
                    cm = cost[best_d - 1]
                    c0 = cost[best_d]
                    cp = cost[best_d + 1]
                    denom = cm - 2 * c0 + cp
                    if denom > 0:
                        delta = (<double>(cm - cp)) / (<double>(2 * denom))
                        value = best_d + delta
                disp[v, u] = value
                cur_d[u] = <int>llrint(value)
            prev_d[:] = cur_d
            cur_d[:] = -1

    return disp_arr, int(n_evals)


def bilateral_kernel(const unsigned char[:, ::1] img,
                     const double[:, ::1] spatial,
                     const double[::1] range_lut):
    """Truncated-window bilateral filter with precomputed weight tables."""
    cdef int h = img.shape[0]
    cdef int w = img.shape[1]
    cdef int k = spatial.shape[0]
    cdef int r = (k - 1) // 2

    out_arr = np.zeros((h, w), dtype=np.uint8)
    cdef unsigned char[:, ::1] out = out_arr

    cdef int v, u, dy, dx, y, x, c, q
    cdef double num, den, wgt

    with nogil:
        for v in range(h):
            for u in range(w):
                c = img[v, u]
                num = 0.0
                den = 0.0
                for dy in range(-r, r + 1):
                    y = v + dy
                    if y < 0 or y >= h:
                        continue
                    for dx in range(-r, r + 1):
                        x = u + dx
                        if x < 0 or x >= w:
                            continue
                        q = img[y, x] - c
                        if q < 0:
                            q = -q
                        wgt = spatial[dy + r, dx + r] * range_lut[q]
                        num += wgt * img[y, x]
                        den += wgt
                out[v, u] = <unsigned char>rint(num / den)

    return out_arr

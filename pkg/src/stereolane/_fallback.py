"""Pure-numpy twins of the compiled kernels.

Every routine here must match ``_kernels`` bit for bit: costs are exact
integers, float expressions are written identically, and per-pixel
accumulation order mirrors the compiled loops. The compiled module is
preferred at import time (see ``backend``); this one keeps the package
usable without a C toolchain and anchors the backend benchmark.
"""

from __future__ import annotations

import numpy as np

_BIG = np.int64(np.iinfo(np.int32).max)


def _zsad_row(al, ar, sl, sr, v, d, r, w):
    """Exact block-area-scaled ZSAD costs for one row and candidate d.

    Returns a full-width int64 vector; entries outside the valid span
    [r+d, w-r) are _BIG.
    """
    out = np.full(w, _BIG, dtype=np.int64)
    u0, u1 = r + d, w - r
    if u0 >= u1:
        return out
    slab_l = al[v - r : v + r + 1, :]
    slab_r = ar[v - r : v + r + 1, :]
    diff = slab_l[:, d:].astype(np.int64) - slab_r[:, : w - d]
    beta = sl[v, u0:u1].astype(np.int64) - sr[v, u0 - d : u1 - d]
    acc = np.zeros(u1 - u0, dtype=np.int64)
    for i in range(-r, r + 1):
        block = diff[:, u0 + i - d : u1 + i - d]
        acc += np.abs(block - beta[None, :]).sum(axis=0)
    out[u0:u1] = acc
    return out


def _finish_row(cost, uniqueness, d_max):
    """Winner selection, uniqueness test and subpixel fit for one row.

    ``cost`` is (d_max+1, w) int64 with _BIG marking unevaluated slots.
    Returns (value float64 vector with NaN for invalid,).
    """
    w = cost.shape[1]
    best_d = np.argmin(cost, axis=0)
    best = np.take_along_axis(cost, best_d[None, :], axis=0)[0]
    has_best = best < _BIG

    masked = cost.copy()
    for dd in (-1, 0, 1):
        idx = np.clip(best_d + dd, 0, d_max)
        np.put_along_axis(masked, idx[None, :], _BIG, axis=0)
    second = masked.min(axis=0)
    has_second = second < _BIG
    uniq_ok = ~has_second | (best.astype(np.float64) < uniqueness * second.astype(np.float64))

    valid = has_best & uniq_ok

    value = best_d.astype(np.float64)
    lo_idx = np.clip(best_d - 1, 0, d_max)
    hi_idx = np.clip(best_d + 1, 0, d_max)
    cm = np.take_along_axis(cost, lo_idx[None, :], axis=0)[0]
    cp = np.take_along_axis(cost, hi_idx[None, :], axis=0)[0]
    refinable = (
        valid
        & (best_d - 1 >= 0)
        & (best_d + 1 <= d_max)
        & (cm < _BIG)
        & (cp < _BIG)
    )
    denom = cm - 2 * best + cp
    refinable &= denom > 0
    if np.any(refinable):
        delta = np.zeros(w, dtype=np.float64)
        safe = np.where(refinable, denom, 1)
        delta[refinable] = ((cm - cp)[refinable]) / ((2 * safe)[refinable])
        value = value + np.where(refinable, delta, 0.0)

    value = np.where(valid, value, np.nan)
    return value


def match_kernel(al, ar, sl, sr, lo, hi, d_max, radius, uniqueness, propagate):
    """numpy twin of the compiled matcher; same contract, same bits."""
    h, w = al.shape
    r = radius
    full_range = (
        not propagate
        and h > 2 * r
        and np.all(lo[r : h - r] == 0)
        and np.all(hi[r : h - r] == d_max)
    )
    if full_range:
        return _match_full(al, ar, sl, sr, d_max, r, uniqueness)
    return _match_rows(al, ar, sl, sr, lo, hi, d_max, r, uniqueness, propagate)


def _match_rows(al, ar, sl, sr, lo, hi, d_max, r, uniqueness, propagate):
    h, w = al.shape
    disp = np.full((h, w), np.nan, dtype=np.float64)
    n_evals = 0
    prev_d = np.full(w, -1, dtype=np.int64)

    us = np.arange(w)
    col_ok = (us >= r) & (us < w - r)
    inb = (us[None, :] - r >= np.arange(d_max + 1)[:, None]) & col_ok[None, :]

    for v in range(h - 1 - r, r - 1, -1):
        flags = np.zeros((d_max + 1, w), dtype=bool)
        if lo[v] <= hi[v]:
            flags[lo[v] : hi[v] + 1, :] = True
        if propagate:
            cols = np.nonzero(prev_d >= 0)[0]
            if cols.size:
                pd = prev_d[cols]
                for du in (-1, 0, 1):
                    tc = cols - du
                    ok = (tc >= 0) & (tc < w)
                    for dd in (-1, 0, 1):
                        dv = pd + dd
                        sel = ok & (dv >= 0) & (dv <= d_max)
                        flags[dv[sel], tc[sel]] = True
        flags &= inb
        n_evals += int(flags.sum())

        cost = np.full((d_max + 1, w), _BIG, dtype=np.int64)
        for d in np.nonzero(flags.any(axis=1))[0]:
            row_cost = _zsad_row(al, ar, sl, sr, v, int(d), r, w)
            sel = flags[d]
            cost[d, sel] = row_cost[sel]

        value = _finish_row(cost, uniqueness, d_max)
        disp[v, :] = value
        prev_d = np.where(np.isnan(value), -1, np.rint(np.nan_to_num(value))).astype(np.int64)

    return disp, n_evals


def _match_full(al, ar, sl, sr, d_max, r, uniqueness):
    h, w = al.shape
    nrows = h - 2 * r
    vol = np.full((d_max + 1, nrows, w), _BIG, dtype=np.int64)
    n_evals = 0
    vs = slice(r, h - r)
    for d in range(d_max + 1):
        u0, u1 = r + d, w - r
        if u0 >= u1:
            break
        n_evals += nrows * (u1 - u0)
        diff = al[:, d:].astype(np.int64) - ar[:, : w - d]
        beta = sl[vs, u0:u1].astype(np.int64) - sr[vs, u0 - d : u1 - d]
        acc = np.zeros((nrows, u1 - u0), dtype=np.int64)
        for j in range(-r, r + 1):
            rows = slice(r + j, h - r + j)
            for i in range(-r, r + 1):
                acc += np.abs(diff[rows, u0 + i - d : u1 + i - d] - beta)
        vol[d, :, u0:u1] = acc

    disp = np.full((h, w), np.nan, dtype=np.float64)
    for k in range(nrows):
        disp[r + k, :] = _finish_row(vol[:, k, :], uniqueness, d_max)
    return disp, n_evals


def bilateral_kernel(img, spatial, range_lut):
    """numpy twin of the compiled bilateral filter."""
    h, w = img.shape
    k = spatial.shape[0]
    r = (k - 1) // 2
    num = np.zeros((h, w), dtype=np.float64)
    den = np.zeros((h, w), dtype=np.float64)
    src_i = img.astype(np.int32)
    for dy in range(-r, r + 1):
        y0, y1 = max(0, -dy), min(h, h - dy)
        if y0 >= y1:
            continue
        for dx in range(-r, r + 1):
            x0, x1 = max(0, -dx), min(w, w - dx)
            if x0 >= x1:
                continue
            nb = img[y0 + dy : y1 + dy, x0 + dx : x1 + dx]
            q = np.abs(src_i[y0 + dy : y1 + dy, x0 + dx : x1 + dx] - src_i[y0:y1, x0:x1])
            wgt = spatial[dy + r, dx + r] * range_lut[q]
            num[y0:y1, x0:x1] += wgt * nb
            den[y0:y1, x0:x1] += wgt
    return np.rint(num / den).astype(np.uint8)

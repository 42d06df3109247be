"""Sparse keypoints: FAST-style corner detection, a binary sampling
descriptor, and left-right epipolar matching for the frame-0 bootstrap.

Stereo-rectified pairs share scale and orientation, so the detector is
single-scale and the descriptor skips orientation normalisation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .imagery import GrayImage

# radius-3 Bresenham circle, 16 samples, clockwise from 12 o'clock
CIRCLE = np.array(
    [(0, -3), (1, -3), (2, -2), (3, -1), (3, 0), (3, 1), (2, 2), (1, 3),
     (0, 3), (-1, 3), (-2, 2), (-3, 1), (-3, 0), (-3, -1), (-2, -2), (-1, -3)],
    dtype=np.int64,
)
ARC_MIN = 9

# concentric sampling pattern: 60 points on rings of radius 0/4/8/12
_RINGS = ((0.0, 1), (4.0, 8), (8.0, 19), (12.0, 32))
PATTERN_RADIUS = 12
DESC_MARGIN = PATTERN_RADIUS + 3  # pattern extent + smoothing support
DESC_BITS = 512


def _build_pattern():
    pts = []
    for radius, count in _RINGS:
        for k in range(count):
            ang = 2.0 * math.pi * k / count
            pts.append((int(round(radius * math.cos(ang))), int(round(radius * math.sin(ang)))))
    pts = np.array(pts, dtype=np.int64)
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
    i, j = np.triu_indices(len(pts), k=1)
    order = np.lexsort((j, i, d2[i, j]))
    sel = order[:DESC_BITS]
    return pts, i[sel], j[sel]

PATTERN, PAIR_A, PAIR_B = _build_pattern()

_POPCNT = np.array([bin(x).count("1") for x in range(256)], dtype=np.int64)

_GAUSS5 = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


@dataclass
class Keypoint:
    u: int
    v: int
    descriptor: np.ndarray = field(repr=False)


@dataclass
class Correspondence:
    left: Keypoint
    right: Keypoint
    disparity: float


@dataclass
class SparseVDPoint:
    v: int
    d: float


def _smooth(pixels: np.ndarray) -> np.ndarray:
    """Separable 5-tap binomial smoothing with edge replication."""
    p = np.pad(pixels.astype(np.float64), 2, mode="edge")
    tmp = sum(w * p[:, k : k + pixels.shape[1]] for k, w in enumerate(_GAUSS5))
    return sum(w * tmp[k : k + pixels.shape[0], :] for k, w in enumerate(_GAUSS5))


def _arc_score(diffs: np.ndarray, qual: np.ndarray) -> float:
    """Sum of |centre - sample| over the longest qualifying circular run."""
    if qual.all():
        return float(diffs.sum())
    ext = np.concatenate([qual, qual])
    dd = np.concatenate([diffs, diffs])
    best = 0.0
    run = 0.0
    length = 0
    best_len = 0
    for k in range(32):
        if ext[k]:
            run += dd[k]
            length += 1
            if length > best_len and length <= 16:
                best_len = length
                best = run
        else:
            run = 0.0
            length = 0
    return best if best_len >= ARC_MIN else 0.0


def detect_keypoints(img: GrayImage, threshold: int = 25, max_count: int = 2000) -> list[Keypoint]:
    """Corner-like keypoints: >= 9 contiguous circle samples all brighter
    than centre+threshold or all darker than centre-threshold.

    The strongest ``max_count`` by arc score are kept, described with the
    fixed 512-comparison sampling pattern, and returned sorted by (v, u).
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    h, w = img.height, img.width
    m = DESC_MARGIN
    if h <= 2 * m or w <= 2 * m:
        return []
    p = img.pixels.astype(np.int32)
    centre = p[m:h - m, m:w - m]
    bright = np.empty((16,) + centre.shape, dtype=bool)
    dark = np.empty_like(bright)
    for k, (du, dv) in enumerate(CIRCLE):
        s = p[m + dv : h - m + dv, m + du : w - m + du]
        bright[k] = s > centre + threshold
        dark[k] = s < centre - threshold

    def has_run(mask):
        hit = np.zeros(centre.shape, dtype=bool)
        for k in range(16):
            seg = mask[k]
            for j in range(1, ARC_MIN):
                seg = seg & mask[(k + j) % 16]
                if not seg.any():
                    break
            else:
                hit |= seg
        return hit

    cand = has_run(bright) | has_run(dark)
    vs, us = np.nonzero(cand)
    if vs.size == 0:
        return []
    vs = vs + m
    us = us + m

    scores = np.empty(vs.size, dtype=np.float64)
    for n in range(vs.size):
        v, u = vs[n], us[n]
        samples = p[v + CIRCLE[:, 1], u + CIRCLE[:, 0]]
        diffs = np.abs(int(p[v, u]) - samples).astype(np.float64)
        qb = samples > p[v, u] + threshold
        qd = samples < p[v, u] - threshold
        scores[n] = max(_arc_score(diffs, qb), _arc_score(diffs, qd))

    order = np.lexsort((us, vs, -scores))[:max_count]
    vs, us = vs[order], us[order]

    smoothed = _smooth(img.pixels)
    sv = vs[:, None] + PATTERN[None, :, 1]
    su = us[:, None] + PATTERN[None, :, 0]
    samples = smoothed[sv, su]
    bits = samples[:, PAIR_A] < samples[:, PAIR_B]
    descs = np.packbits(bits, axis=1)

    kps = [Keypoint(int(u), int(v), descs[n]) for n, (u, v) in enumerate(zip(us, vs))]
    kps.sort(key=lambda k: (k.v, k.u))
    return kps


def _hamming(one: np.ndarray, many: np.ndarray) -> np.ndarray:
    return _POPCNT[np.bitwise_xor(one[None, :], many)].sum(axis=1)


def match_keypoints(left_kps: list[Keypoint], right_kps: list[Keypoint],
                    max_hamming: int = 100, d_max: int = 64,
                    ratio: float = 0.8) -> list[Correspondence]:
    """Nearest-Hamming matching under the rectified epipolar constraint.

    Candidates satisfy |dv| <= 1 and 0 <= uL - uR <= d_max; a match needs
    distance <= max_hamming and a nearest/second-nearest ratio <= ratio.
    Right keypoints matched twice keep only the lower-distance pairing.
    """
    if not left_kps or not right_kps:
        return []
    r_desc = np.stack([k.descriptor for k in right_kps])
    r_u = np.array([k.u for k in right_kps])
    r_v = np.array([k.v for k in right_kps])

    by_row: dict[int, list[int]] = {}
    for idx, v in enumerate(r_v):
        by_row.setdefault(int(v), []).append(idx)

    accepted = []
    for li, lk in enumerate(left_kps):
        cand = []
        for dv in (-1, 0, 1):
            cand.extend(by_row.get(lk.v + dv, []))
        if not cand:
            continue
        cand = np.array(cand)
        disp = lk.u - r_u[cand]
        cand = cand[(disp >= 0) & (disp <= d_max)]
        if cand.size == 0:
            continue
        dists = _hamming(lk.descriptor, r_desc[cand])
        order = np.argsort(dists, kind="stable")
        best = int(dists[order[0]])
        if best > max_hamming:
            continue
        if order.size > 1:
            second = int(dists[order[1]])
            if second > 0 and best / second > ratio:
                continue
        accepted.append((best, lk.v, lk.u, li, int(cand[order[0]])))

    accepted.sort()
    used_right: set[int] = set()
    out = []
    for dist, _, _, li, ri in accepted:
        if ri in used_right:
            continue
        used_right.add(ri)
        lk, rk = left_kps[li], right_kps[ri]
        out.append(Correspondence(left=lk, right=rk, disparity=float(lk.u - rk.u)))
    out.sort(key=lambda c: (c.left.v, c.left.u))
    return out


def sparse_v_disparity(matches: list[Correspondence]) -> list[SparseVDPoint]:
    """One (row, disparity) point per correspondence, duplicates kept."""
    return [SparseVDPoint(v=c.left.v, d=c.disparity) for c in matches]


def vd_points_array(points: list[SparseVDPoint]) -> np.ndarray:
    """(N, 2) array of (v, d) rows for the fitting routines."""
    return np.array([[p.v, p.d] for p in points], dtype=np.float64).reshape(-1, 2)

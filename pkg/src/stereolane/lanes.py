"""Road-area masking, vanishing-point-aligned edge likelihood, plus-minus
peak-pair lane selection, and overlay rendering."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoHorizon
from .imagery import GradientField, GrayImage
from .roadmodel import RoadProfileModel, eval_profile, horizon_row
from .stereo import DisparityMap
from .vprofile import VanishingPointTrajectory

HIST_MARGIN = 200


@dataclass
class Lane:
    """One lane marking: centreline offset at the bottom row, the +/- peak
    pair flanking it, and the projected per-row polyline."""

    offset: float
    pair: tuple[float, float]
    strength: float
    samples: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    def to_dict(self) -> dict:
        return {
            "offset": self.offset,
            "pair": [self.pair[0], self.pair[1]],
            "samples": [[float(u), float(v)] for u, v in self.samples],
        }


def road_mask(disp: DisparityMap, model: RoadProfileModel, mu: float = 3.0) -> np.ndarray:
    """True where the measured disparity sits inside the fitted road band
    [max(0, f(v) - mu), f(v) + mu]; rows above the horizon are false."""
    vals = disp.values
    h = vals.shape[0]
    f = eval_profile(model, np.arange(h, dtype=np.float64))
    lo = np.maximum(0.0, f - mu)
    hi = f + mu
    mask = (~np.isnan(vals)) & (vals >= lo[:, None]) & (vals <= hi[:, None])
    try:
        v_h = horizon_row(model, h)
    except NoHorizon:
        return mask
    mask[: int(math.ceil(v_h)), :] = False
    return mask


def edge_likelihood(grad: GradientField, mask: np.ndarray,
                    traj: VanishingPointTrajectory) -> np.ndarray:
    """Signed likelihood V = |grad| * cos(theta_edge - theta_vp) per masked
    pixel, zero elsewhere.

    theta_vp is the direction from the pixel to (g(v), v_h); the edge
    tangent is the stored gradient orientation rotated by -pi/2, which
    makes a bright marking's left edge positive and right edge negative.
    """
    out = np.zeros(mask.shape, dtype=np.float64)
    ve, ue = np.nonzero(mask)
    if ve.size == 0:
        return out
    g = traj.eval(ve.astype(np.float64))
    th_vp = np.arctan2(traj.v_h - ve, g - ue)
    th_e = grad.orientation[ve, ue] - np.pi / 2.0
    out[ve, ue] = grad.magnitude[ve, ue] * np.cos(th_e - th_vp)
    return out


def lane_offset_histogram(lik: np.ndarray, traj: VanishingPointTrajectory,
                          bottom_row: int) -> np.ndarray:
    """Project each pixel's likelihood along its vanishing-point ray to the
    bottom row and accumulate a signed histogram over bottom-row columns.

    Bin b holds offset b - HIST_MARGIN; the histogram spans the image
    width plus HIST_MARGIN bins on each side.
    """
    h, w = lik.shape
    hist = np.zeros(w + 2 * HIST_MARGIN, dtype=np.float64)
    ve, ue = np.nonzero(lik)
    if ve.size == 0:
        return hist
    below = ve > traj.v_h
    ve, ue = ve[below], ue[below]
    g = traj.eval(ve.astype(np.float64))
    offset = ue + (bottom_row - ve) * (ue - g) / (ve - traj.v_h)
    bins = np.rint(offset).astype(np.int64) + HIST_MARGIN
    ok = (bins >= 0) & (bins < hist.size)
    np.add.at(hist, bins[ok], lik[ve[ok], ue[ok]])
    return hist


def _local_maxima(s: np.ndarray, min_peak: float, min_sep: int) -> np.ndarray:
    """Local maxima above min_peak, non-max suppressed within min_sep bins
    (noise can split one physical edge into twin maxima)."""
    idx = np.nonzero((s[1:-1] > s[:-2]) & (s[1:-1] > s[2:]) & (s[1:-1] > min_peak))[0] + 1
    kept: list[int] = []
    for b in sorted(idx, key=lambda b: (-s[b], b)):
        if all(abs(b - k) > min_sep for k in kept):
            kept.append(int(b))
    return np.array(sorted(kept), dtype=np.int64)


def lane_polyline(traj: VanishingPointTrajectory, offset: float, bottom_row: int) -> np.ndarray:
    """(u, v) samples of the lane centreline from the horizon to the bottom.

    The curve is the exact inverse of the histogram projection: points on
    it project back to ``offset`` at the bottom row. For a constant g it
    degenerates to the straight line through the vanishing point.
    """
    v0 = int(math.ceil(traj.v_h))
    vs = np.arange(v0, bottom_row + 1, dtype=np.float64)
    g = traj.eval(vs)
    us = (offset * (vs - traj.v_h) + g * (bottom_row - vs)) / (bottom_row - traj.v_h)
    return np.stack([us, vs], axis=1)


def select_peak_pairs(hist: np.ndarray, min_width: int = 4, max_width: int = 40,
                      min_peak: float = 0.0, max_lanes: int = 6,
                      traj: VanishingPointTrajectory | None = None,
                      bottom_row: int | None = None) -> list[Lane]:
    """Pair positive peaks with the nearest negative peak to their right.

    Peaks come from the 5-bin box-smoothed histogram; each peak is used at
    most once, pair separation must sit in [min_width, max_width], and the
    surviving pairs are ranked by combined magnitude.
    """
    if min_width >= max_width:
        raise ValueError("min_width must be < max_width")
    s = np.convolve(hist, np.ones(5) / 5.0, mode="same")
    pos = _local_maxima(s, min_peak, min_width)
    neg = _local_maxima(-s, min_peak, min_width)
    if pos.size == 0 or neg.size == 0:
        return []

    pos_order = sorted(pos, key=lambda b: (-s[b], b))
    used_neg: set[int] = set()
    pairs = []
    for pb in pos_order:
        best = None
        for nb in neg:
            if nb in used_neg or nb <= pb:
                continue
            dist = nb - pb
            if dist > max_width:
                break
            if dist >= min_width:
                best = int(nb)
                break
        if best is not None:
            used_neg.add(best)
            pairs.append((float(s[pb] - s[best]), int(pb), best))

    pairs.sort(key=lambda t: (-t[0], t[1]))
    lanes = []
    for combined, pb, nb in pairs[:max_lanes]:
        p_off = float(pb - HIST_MARGIN)
        n_off = float(nb - HIST_MARGIN)
        lane = Lane(offset=0.5 * (p_off + n_off), pair=(p_off, n_off), strength=combined)
        if traj is not None and bottom_row is not None:
            lane.samples = lane_polyline(traj, lane.offset, bottom_row)
        lanes.append(lane)
    return lanes


def render_lanes(img: GrayImage, lanes: list[Lane], traj: VanishingPointTrajectory,
                 model: RoadProfileModel, mask: np.ndarray | None = None) -> np.ndarray:
    """RGB overlay: road mask tinted green (50% blend), lanes drawn red
    (3 px) along their projected polylines from the horizon to the bottom."""
    h, w = img.height, img.width
    out = np.repeat(img.pixels[:, :, None].astype(np.float64), 3, axis=2)
    if mask is None:
        mask = np.zeros((h, w), dtype=bool)
        try:
            v_h = horizon_row(model, h)
            mask[int(math.ceil(v_h)) :, :] = True
        except NoHorizon:
            pass
    out[mask, 0] *= 0.5
    out[mask, 2] *= 0.5
    out[mask, 1] = 0.5 * out[mask, 1] + 127.5
    rgb = np.rint(out).astype(np.uint8)

    bottom = h - 1
    for lane in lanes:
        for u, v in lane_polyline(traj, lane.offset, bottom):
            vi = int(round(v))
            ui = int(round(u))
            if 0 <= vi < h:
                for du in (-1, 0, 1):
                    if 0 <= ui + du < w:
                        rgb[vi, ui + du] = (255, 0, 0)
    return rgb


def lanes_to_json(lanes: list[Lane]) -> str:
    return json.dumps({"lanes": [lane.to_dict() for lane in lanes]})

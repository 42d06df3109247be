"""Quadratic road disparity profile: fitting, RANSAC, horizon, search ranges."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, InvalidParameter, NoHorizon


@dataclass
class RoadProfileModel:
    """Coefficients of f(v) = alpha0 + alpha1*v + alpha2*v^2.

    The all-zero model is the declared uninitialised state (frame t0
    before any fit); consumers treat it as "search everywhere".
    """

    alpha0: float = 0.0
    alpha1: float = 0.0
    alpha2: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha0, self.alpha1, self.alpha2], dtype=np.float64)

    @property
    def is_zero(self) -> bool:
        return self.alpha0 == 0.0 and self.alpha1 == 0.0 and self.alpha2 == 0.0

    def to_json(self) -> str:
        return json.dumps({"alpha": [self.alpha0, self.alpha1, self.alpha2]})

    @classmethod
    def from_json(cls, text: str) -> "RoadProfileModel":
        a = json.loads(text)["alpha"]
        return cls(float(a[0]), float(a[1]), float(a[2]))


@dataclass
class RansacResult:
    model: RoadProfileModel
    inlier_ratio: float
    inlier_count: int


def eval_profile(model: RoadProfileModel, v) -> float | np.ndarray:
    """f(v) for a scalar row or an array of rows."""
    return model.alpha0 + model.alpha1 * np.asarray(v, dtype=np.float64) + model.alpha2 * np.square(np.asarray(v, dtype=np.float64))


def _as_points(points):
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        pts = pts.reshape(-1, 2)
    return pts[:, 0], pts[:, 1]


def fit_parabola_lsf(points, weights=None) -> RoadProfileModel:
    """Weighted least-squares parabola d = f(v) via 3x3 normal equations.

    Rows are centred and scaled to [-1, 1] before solving, then the
    coefficients are mapped back to the raw-v basis.
    """
    v, d = _as_points(points)
    if weights is None:
        w = np.ones_like(v)
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != v.shape:
            raise InvalidParameter("weights length must match points")
        if np.any(w < 0):
            raise InvalidParameter("weights must be non-negative")
    keep = w > 0
    if np.unique(v[keep]).size < 3:
        raise DegenerateInput("need at least 3 distinct rows with positive weight")

    vmin, vmax = v[keep].min(), v[keep].max()
    c = 0.5 * (vmin + vmax)
    hscale = 0.5 * (vmax - vmin)
    s = (v - c) / hscale
    basis = np.stack([np.ones_like(s), s, s * s], axis=1)
    bw = basis * w[:, None]
    ata = bw.T @ basis
    atb = bw.T @ d
    try:
        b = np.linalg.solve(ata, atb)
    except np.linalg.LinAlgError as exc:
        raise DegenerateInput("normal matrix is singular") from exc

    a2 = b[2] / (hscale * hscale)
    a1 = b[1] / hscale - 2.0 * b[2] * c / (hscale * hscale)
    a0 = b[0] - b[1] * c / hscale + b[2] * c * c / (hscale * hscale)
    return RoadProfileModel(float(a0), float(a1), float(a2))


def _fit_exact3(v3, d3) -> RoadProfileModel | None:
    vm = np.stack([np.ones(3), v3, v3 * v3], axis=1)
    try:
        a = np.linalg.solve(vm, d3)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(a)):
        return None
    return RoadProfileModel(float(a[0]), float(a[1]), float(a[2]))


def fit_parabola_ransac(points, iterations: int = 200, inlier_tol: float = 1.0,
                        seed: int = 0) -> RansacResult:
    """RANSAC parabola fit: best inlier count, refit on the winning set.

    Hypotheses are exact fits through 3 distinct-row samples; ties on
    inlier count fall to the lower absolute-residual sum. Deterministic
    for a given seed.
    """
    if iterations < 1:
        raise InvalidParameter("iterations must be >= 1")
    if inlier_tol <= 0:
        raise InvalidParameter("inlier_tol must be positive")
    v, d = _as_points(points)
    n = v.size
    if np.unique(v).size < 3:
        raise DegenerateInput("need at least 3 distinct rows")

    rng = np.random.default_rng(seed)
    best_mask = None
    best_count = -1
    best_res = math.inf
    for _ in range(iterations):
        idx = None
        for _attempt in range(20):
            cand = rng.choice(n, size=3, replace=False)
            if np.unique(v[cand]).size == 3:
                idx = cand
                break
        if idx is None:
            continue
        model = _fit_exact3(v[idx], d[idx])
        if model is None:
            continue
        resid = np.abs(d - eval_profile(model, v))
        mask = resid <= inlier_tol
        count = int(mask.sum())
        res_sum = float(resid[mask].sum())
        if count > best_count or (count == best_count and res_sum < best_res):
            best_count = count
            best_res = res_sum
            best_mask = mask
    if best_mask is None or np.unique(v[best_mask]).size < 3:
        # pathological sampling; fall back to a plain fit on everything
        model = fit_parabola_lsf(points)
        resid = np.abs(d - eval_profile(model, v))
        best_mask = resid <= inlier_tol
    model = fit_parabola_lsf(np.stack([v[best_mask], d[best_mask]], axis=1))
    count = int(best_mask.sum())
    return RansacResult(model=model, inlier_ratio=count / n, inlier_count=count)


def horizon_row(model: RoadProfileModel, image_height: int) -> float:
    """Root of f(v) = 0 with f'(v) > 0, clamped to [0, image_height - 1].

    This is the road/sky boundary: disparity crosses zero going down into
    the road, so only the root with positive slope is physical.
    """
    if model.is_zero:
        raise NoHorizon("uninitialised road model")
    a0, a1, a2 = model.alpha0, model.alpha1, model.alpha2
    if a2 == 0.0:
        if a1 <= 0.0:
            raise NoHorizon("profile has no root with positive slope")
        root = -a0 / a1
    else:
        disc = a1 * a1 - 4.0 * a2 * a0
        if disc < 0.0:
            raise NoHorizon("profile has no real root")
        sq = math.sqrt(disc)
        roots = [(-a1 - sq) / (2.0 * a2), (-a1 + sq) / (2.0 * a2)]
        root = None
        for rt in roots:
            if a1 + 2.0 * a2 * rt > 0.0:
                root = rt
                break
        if root is None:
            raise NoHorizon("no root has positive slope")
    return float(min(max(root, 0.0), image_height - 1.0))


def row_search_range(model: RoadProfileModel, v: int, tau: int, d_max: int):
    """Per-row disparity candidate range [f(v)-tau, f(v)+tau], clamped.

    A zero model means "uninitialised": the full [0, d_max] range is
    returned. The result may be empty (hi < lo) for rows above the
    horizon, where f(v) + tau < 0.
    """
    if tau < 0:
        raise InvalidParameter("tau must be >= 0")
    if d_max < 1:
        raise InvalidParameter("d_max must be >= 1")
    if model.is_zero:
        return 0, d_max
    centre = int(np.rint(eval_profile(model, v)))
    return max(0, centre - tau), min(d_max, centre + tau)

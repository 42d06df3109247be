"""Dense v-disparity construction and the two dynamic-programming path
optimisations (road profile over disparity levels, vanishing-point column
over rows), plus the polynomial fits derived from the optimal paths.

Both recurrences are normalised to data = -votes and transition =
+lambda * |step|, so the minimum-energy path is the vote-richest smooth
path. The road-profile recurrence steps from disparity d+1 at row v-tau
to disparity d at row v (tau in [0, 6]); on a real v-disparity map the
road ridge runs the other way, so the pipeline adapter flips the row axis
before running the DP and unflips the path afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, EmptyInput, InvalidParameter
from .roadmodel import RoadProfileModel, fit_parabola_lsf

ROAD_TAU_MAX = 6
UVP_TAU = 5
# tie priority for the column DP: smaller |tau| first, negative before positive
UVP_STEPS = [0, -1, 1, -2, 2, -3, 3, -4, 4, -5, 5]


@dataclass
class VDisparityMap:
    """Vote matrix m(d, v): count of valid pixels of row v at disparity d."""

    votes: np.ndarray  # (d_max + 1, height) int64

    @property
    def d_max(self) -> int:
        return self.votes.shape[0] - 1

    @property
    def height(self) -> int:
        return self.votes.shape[1]


@dataclass
class UvpAccumulator:
    """Vote matrix m(u, v) over candidate vanishing-point columns.

    Row k of ``votes`` is image row ``v0 + k``.
    """

    votes: np.ndarray  # (n_rows, width) float64
    v0: int


@dataclass
class VanishingPointTrajectory:
    """Quartic g(v) = sum beta_k v^k giving the vanishing-point column per
    row, plus the horizon row it hinges on."""

    beta: np.ndarray  # (5,)
    v_h: float

    def eval(self, v) -> np.ndarray:
        return np.polynomial.polynomial.polyval(np.asarray(v, dtype=np.float64), self.beta)


@dataclass
class DpPath:
    """Optimal path: (index, value) per step plus the accumulated energy."""

    nodes: np.ndarray       # (n, 2) int64
    total_energy: float
    cumulative: np.ndarray  # (n,) float64


def build_v_disparity(disp, d_max: int) -> VDisparityMap:
    """Histogram valid disparities (rounded) per image row."""
    vals = disp.values
    valid = ~np.isnan(vals)
    h = vals.shape[0]
    votes = np.zeros((d_max + 1, h), dtype=np.int64)
    if valid.any():
        rows, _ = np.nonzero(valid)
        ds = np.clip(np.rint(vals[valid]).astype(np.int64), 0, d_max)
        flat = np.bincount(rows * (d_max + 1) + ds, minlength=h * (d_max + 1))
        votes = flat.reshape(h, d_max + 1).T.astype(np.int64)
    return VDisparityMap(votes)


def dp_road_profile(vd: VDisparityMap, lambda_v: float = 2.0) -> DpPath:
    """Minimum-energy row-per-disparity path through the vote matrix.

    Transition from (d+1, v - tau) to (d, v), tau in [0, 6]; energy is
    -votes plus lambda_v * tau per step. Ties break toward smaller tau,
    and toward the smaller final row.
    """
    if lambda_v < 0:
        raise InvalidParameter("lambda_v must be >= 0")
    votes = vd.votes
    if votes.size == 0:
        raise EmptyInput("empty v-disparity map")
    d_levels, h = votes.shape

    energy = -votes[d_levels - 1].astype(np.float64)
    choice = np.zeros((d_levels, h), dtype=np.int8)
    for d in range(d_levels - 2, -1, -1):
        cand = np.full((ROAD_TAU_MAX + 1, h), np.inf)
        for t in range(ROAD_TAU_MAX + 1):
            if t == 0:
                cand[0] = energy
            elif t < h:
                cand[t, t:] = energy[:-t] + lambda_v * t
        idx = np.argmin(cand, axis=0)
        choice[d] = idx
        energy = -votes[d] + np.take_along_axis(cand, idx[None, :], axis=0)[0]

    v = int(np.argmin(energy))
    total = float(energy[v])
    rows = [v]
    for d in range(0, d_levels - 1):
        v = v - int(choice[d, v])
        rows.append(v)
    nodes = np.array([[d, rows[d]] for d in range(d_levels)], dtype=np.int64)

    cumulative = np.empty(d_levels, dtype=np.float64)
    acc = 0.0
    for d in range(d_levels):
        acc += -float(votes[d, rows[d]])
        if d > 0:
            acc += lambda_v * (rows[d - 1] - rows[d])
        cumulative[d] = acc
    return DpPath(nodes=nodes, total_energy=total, cumulative=cumulative)


def fit_profile_from_path(path: DpPath, weights=None) -> RoadProfileModel:
    """Quadratic fit d = f(v) over the path's (v, d) nodes."""
    pts = np.stack([path.nodes[:, 1], path.nodes[:, 0]], axis=1).astype(np.float64)
    return fit_parabola_lsf(pts, weights=weights)


def road_profile_from_vdisparity(vd: VDisparityMap, lambda_v: float = 2.0):
    """Pipeline adapter: flip rows so the road ridge is DP-admissible, run
    the DP, unflip the path, and fit f(v) weighted by per-node votes.

    Returns (model, path-with-image-rows).
    """
    h = vd.height
    flipped = VDisparityMap(np.ascontiguousarray(vd.votes[:, ::-1]))
    path = dp_road_profile(flipped, lambda_v)
    nodes = path.nodes.copy()
    nodes[:, 1] = h - 1 - nodes[:, 1]
    unflipped = DpPath(nodes=nodes, total_energy=path.total_energy,
                       cumulative=path.cumulative)
    w = vd.votes[nodes[:, 0], nodes[:, 1]].astype(np.float64)
    model = fit_profile_from_path(unflipped, weights=w)
    return model, unflipped


def build_uvp_accumulator(grad, road_mask: np.ndarray, v_h: float, width: int,
                          mag_threshold: float = 80.0) -> UvpAccumulator:
    """Vote for the column where each masked edge tangent meets the horizon.

    The stored gradient orientation is rotated by +pi/2 to get the edge
    tangent; near-horizontal tangents (|sin| < 0.05) are skipped. Each
    vote carries the edge magnitude.
    """
    h = road_mask.shape[0]
    v0 = int(np.floor(v_h)) + 1
    v0 = max(0, min(v0, h - 1))
    votes = np.zeros((h - v0, width), dtype=np.float64)

    sel = road_mask & (grad.magnitude >= mag_threshold)
    sel[:v0, :] = False
    ve, ue = np.nonzero(sel)
    if ve.size == 0:
        return UvpAccumulator(votes=votes, v0=v0)
    phi = grad.orientation[ve, ue] + np.pi / 2.0
    s = np.sin(phi)
    keep = np.abs(s) >= 0.05
    ve, ue, phi, s = ve[keep], ue[keep], phi[keep], s[keep]
    uc = ue + (v_h - ve) * (np.cos(phi) / s)
    idx = np.rint(uc).astype(np.int64)
    ok = (uc >= 0.0) & (uc < width) & (idx >= 0) & (idx < width)
    np.add.at(votes, (ve[ok] - v0, idx[ok]), grad.magnitude[ve[ok], ue[ok]])
    return UvpAccumulator(votes=votes, v0=v0)


def dp_uvp(acc: UvpAccumulator, lambda_u: float = 2.0) -> DpPath:
    """Minimum-energy column-per-row path through the u_vp accumulator.

    Transition between consecutive rows is bounded by |tau| <= 5 with
    penalty lambda_u * |tau|; ties break toward smaller |tau| (negative
    step first), and toward the smaller top-row column.
    """
    if lambda_u < 0:
        raise InvalidParameter("lambda_u must be >= 0")
    votes = acc.votes
    if votes.size == 0:
        raise EmptyInput("empty u_vp accumulator")
    n_rows, w = votes.shape

    energy = -votes[n_rows - 1].astype(np.float64)
    choice = np.zeros((n_rows, w), dtype=np.int8)
    for k in range(n_rows - 2, -1, -1):
        cand = np.full((len(UVP_STEPS), w), np.inf)
        for t_i, t in enumerate(UVP_STEPS):
            lo = max(0, -t)
            hi = w - max(0, t)
            if lo < hi:
                cand[t_i, lo:hi] = energy[lo + t : hi + t] + lambda_u * abs(t)
        idx = np.argmin(cand, axis=0)
        choice[k] = idx
        energy = -votes[k] + np.take_along_axis(cand, idx[None, :], axis=0)[0]

    u = int(np.argmin(energy))
    total = float(energy[u])
    cols = [u]
    for k in range(0, n_rows - 1):
        u = u + UVP_STEPS[choice[k, u]]
        cols.append(u)
    nodes = np.array([[acc.v0 + k, cols[k]] for k in range(n_rows)], dtype=np.int64)

    cumulative = np.empty(n_rows, dtype=np.float64)
    accum = 0.0
    for k in range(n_rows):
        accum += -float(votes[k, cols[k]])
        if k > 0:
            accum += lambda_u * abs(cols[k] - cols[k - 1])
        cumulative[k] = accum
    return DpPath(nodes=nodes, total_energy=total, cumulative=cumulative)


def fit_uvp_quartic(path: DpPath, v_h: float, weights=None) -> VanishingPointTrajectory:
    """Weighted degree-4 fit u = g(v) over path nodes (rows scaled to
    [-1, 1] for conditioning)."""
    v = path.nodes[:, 0].astype(np.float64)
    u = path.nodes[:, 1].astype(np.float64)
    if weights is None:
        w = np.ones_like(v)
    else:
        w = np.asarray(weights, dtype=np.float64)
    keep = w > 0
    if np.unique(v[keep]).size < 5:
        raise DegenerateInput("need at least 5 distinct rows with positive weight")
    vmin, vmax = v[keep].min(), v[keep].max()
    c = 0.5 * (vmin + vmax)
    hs = 0.5 * (vmax - vmin)
    s = (v - c) / hs
    basis = np.stack([s**k for k in range(5)], axis=1)
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(basis * sw[:, None], u * sw, rcond=None)
    poly = np.polynomial.Polynomial(coef, domain=[vmin, vmax], window=[-1.0, 1.0])
    raw = poly.convert().coef
    beta = np.zeros(5, dtype=np.float64)
    beta[: raw.size] = raw
    return VanishingPointTrajectory(beta=beta, v_h=float(v_h))


def export_path_csv(path: DpPath, file) -> None:
    """Write (index, value, cumulative energy) rows."""
    with open(file, "w") as fh:
        fh.write("index,value,cumulative_energy\n")
        for (idx, val), cum in zip(path.nodes, path.cumulative):
            fh.write(f"{idx},{val},{cum!r}\n")

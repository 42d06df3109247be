"""Synthetic rectified stereo scenes with exact ground truth for every
pipeline stage: road profile, disparity, lanes, vanishing-point trajectory
and road mask. Stands in for real-dataset ground truth in all tests."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import InvalidConfig, NoHorizon
from .imagery import GrayImage, save_gray
from .lanes import Lane, lane_polyline
from .roadmodel import RoadProfileModel, eval_profile, horizon_row
from .stereo import DisparityMap, save_disparity_png
from .vprofile import VanishingPointTrajectory

STRIPE_BOOST = 80.0
SKY_LEVEL = 200.0
STEREO_BLIND_MARGIN = 8  # columns beyond f(v) without a usable right-view block


@dataclass
class SceneConfig:
    width: int
    height: int
    road_alpha: tuple[float, float, float]
    lane_offsets: tuple[float, ...] = ()
    lane_width: float = 14.0
    uvp_column: float = 0.0
    uvp_beta: tuple[float, ...] | None = None
    texture_seed: int = 0
    noise_sigma: float = 2.0
    obstacle_specs: tuple[tuple[int, int, int, int, float], ...] = ()
    d_max: int = 64


@dataclass
class SceneTruth:
    left: GrayImage
    right: GrayImage
    gt_disparity: DisparityMap
    gt_model: RoadProfileModel
    gt_lanes: list[Lane]
    gt_traj: VanishingPointTrajectory
    road_mask_truth: np.ndarray
    config: SceneConfig = field(repr=False, default=None)


def _box_blur(a: np.ndarray, radius: int) -> np.ndarray:
    k = 2 * radius + 1
    p = np.pad(a, radius, mode="edge")
    ii = np.zeros((p.shape[0] + 1, p.shape[1] + 1), dtype=np.float64)
    ii[1:, 1:] = np.cumsum(np.cumsum(p, axis=0), axis=1)
    return (ii[k:, k:] - ii[:-k, k:] - ii[k:, :-k] + ii[:-k, :-k]) / (k * k)


def _horizon(cfg: SceneConfig) -> float | None:
    model = RoadProfileModel(*cfg.road_alpha)
    try:
        vh = horizon_row(model, cfg.height)
    except NoHorizon:
        return None
    # clamped-at-top roots mean the whole image is road
    return vh


def _traj(cfg: SceneConfig, v_h: float) -> VanishingPointTrajectory:
    if cfg.uvp_beta is not None:
        beta = np.zeros(5)
        beta[: len(cfg.uvp_beta)] = cfg.uvp_beta
    else:
        beta = np.array([cfg.uvp_column, 0.0, 0.0, 0.0, 0.0])
    return VanishingPointTrajectory(beta=beta, v_h=float(v_h))


def validate_config(cfg: SceneConfig) -> None:
    if cfg.width < 32 or cfg.height < 32:
        raise InvalidConfig("scene must be at least 32x32")
    if cfg.noise_sigma < 0:
        raise InvalidConfig("noise_sigma must be >= 0")
    v_h = _horizon(cfg)
    v0 = 0 if v_h is None else int(math.ceil(v_h))
    rows = np.arange(v0, cfg.height, dtype=np.float64)
    model = RoadProfileModel(*cfg.road_alpha)
    f = eval_profile(model, rows)
    if np.any(f < -0.5) or np.any(f > cfg.d_max):
        raise InvalidConfig("road profile leaves [0, d_max] on road rows")
    if cfg.lane_offsets:
        if v_h is None:
            raise InvalidConfig("lane markings need a horizon inside the image")
        for o in cfg.lane_offsets:
            if not (0 <= o - cfg.lane_width / 2 and o + cfg.lane_width / 2 < cfg.width):
                raise InvalidConfig(f"lane at {o} leaves the image at the bottom row")
    for u0, u1, vv0, vv1, d in cfg.obstacle_specs:
        if not (0 <= u0 < u1 <= cfg.width and 0 <= vv0 < vv1 <= cfg.height):
            raise InvalidConfig("obstacle rectangle leaves the image")
        if not (0 <= d <= cfg.d_max):
            raise InvalidConfig("obstacle disparity outside [0, d_max]")


def generate_scene(cfg: SceneConfig) -> SceneTruth:
    """Build left/right images plus exact ground truth, deterministically
    from the texture seed.

    The left image is band-limited noise texture with bright convergent
    lane stripes and a uniform sky; the right image is the left warped
    horizontally by the ground-truth disparity (bilinear, subpixel)."""
    validate_config(cfg)
    w, h = cfg.width, cfg.height
    rng = np.random.default_rng(cfg.texture_seed)
    model = RoadProfileModel(*cfg.road_alpha)
    v_h = _horizon(cfg)
    v0 = 0 if v_h is None else int(math.ceil(v_h))
    bottom = h - 1

    tex = _box_blur(rng.integers(0, 256, (h, w)).astype(np.float64), 2)
    left = (tex - tex.mean()) * 1.2 + 120.0

    if v_h is not None:
        left[:v0, :] = SKY_LEVEL

    traj = _traj(cfg, v_h if v_h is not None else 0.0)
    lanes = []
    if cfg.lane_offsets:
        vs = np.arange(v0, h, dtype=np.float64)
        g = traj.eval(vs)
        g_bot = float(traj.eval(float(bottom)))
        scale = (vs - v_h) / (bottom - v_h)
        uu = np.arange(w, dtype=np.float64)
        for o in cfg.lane_offsets:
            centre = g + (o - g_bot) * scale
            half = 0.5 * cfg.lane_width * scale
            stripe = np.abs(uu[None, :] - centre[:, None]) <= half[:, None]
            left[v0:, :][stripe] += STRIPE_BOOST
            lanes.append(Lane(offset=float(o),
                              pair=(o - cfg.lane_width / 2, o + cfg.lane_width / 2),
                              strength=0.0,
                              samples=lane_polyline(traj, float(o), bottom)))

    rows = np.arange(h, dtype=np.float64)
    f = eval_profile(model, rows)
    gt = np.repeat(np.maximum(f, 0.0)[:, None], w, axis=1)
    if v_h is not None:
        gt[:v0, :] = 0.0

    # truth road mask covers only stereo-visible road: the left band whose
    # correspondence (u - d) lacks a full matching block in the right view
    # can never be estimated and is excluded
    mask_truth = np.zeros((h, w), dtype=bool)
    mask_truth[v0:, :] = np.arange(w)[None, :] >= (f[v0:, None] + STEREO_BLIND_MARGIN)

    # obstacles: distinct texture on the left image, constant disparity
    obstacles = sorted(cfg.obstacle_specs, key=lambda t: t[4])
    orng = np.random.default_rng(cfg.texture_seed + 7919)
    for u0, u1, vv0, vv1, d in obstacles:
        patch = _box_blur(orng.integers(0, 256, (vv1 - vv0, u1 - u0)).astype(np.float64), 1)
        left[vv0:vv1, u0:u1] = (patch - patch.mean()) * 2.0 + 90.0
        gt[vv0:vv1, u0:u1] = d
        mask_truth[vv0:vv1, u0:u1] = False

    # disparity in right-image coordinates: road bands shift as a whole,
    # obstacle rectangles shift left by their own disparity
    d_right = np.repeat(np.maximum(f, 0.0)[:, None], w, axis=1)
    if v_h is not None:
        d_right[:v0, :] = 0.0
    for u0, u1, vv0, vv1, d in obstacles:
        r0 = max(0, int(math.floor(u0 - d)))
        r1 = max(0, int(math.ceil(u1 - d)))
        d_right[vv0:vv1, r0:r1] = d

    x = np.arange(w, dtype=np.float64)[None, :] + d_right
    x = np.clip(x, 0.0, w - 1.0)
    x0 = np.floor(x).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    frac = x - x0
    rows_idx = np.arange(h)[:, None]
    right = left[rows_idx, x0] * (1.0 - frac) + left[rows_idx, x1] * frac

    if cfg.noise_sigma > 0:
        left = left + rng.normal(0.0, cfg.noise_sigma, (h, w))
        right = right + rng.normal(0.0, cfg.noise_sigma, (h, w))

    to_img = lambda a: GrayImage(np.clip(np.rint(a), 0, 255).astype(np.uint8))
    return SceneTruth(
        left=to_img(left),
        right=to_img(right),
        gt_disparity=DisparityMap(gt),
        gt_model=model,
        gt_lanes=lanes,
        gt_traj=traj,
        road_mask_truth=mask_truth,
        config=cfg,
    )


def next_frame(cfg: SceneConfig, d_alpha=(0.0, 0.0, 0.0), d_offsets=0.0,
               d_uvp=0.0) -> SceneConfig:
    """Drift the geometry and advance the texture phase for frame t+1."""
    alpha = tuple(a + da for a, da in zip(cfg.road_alpha, d_alpha))
    offsets = tuple(o + d_offsets for o in cfg.lane_offsets)
    beta = cfg.uvp_beta
    if beta is not None:
        beta = (beta[0] + d_uvp,) + tuple(beta[1:])
    out = replace(cfg, road_alpha=alpha, lane_offsets=offsets,
                  uvp_column=cfg.uvp_column + d_uvp, uvp_beta=beta,
                  texture_seed=cfg.texture_seed + 1)
    validate_config(out)
    return out


def _config_dict(cfg: SceneConfig) -> dict:
    return {
        "width": cfg.width, "height": cfg.height,
        "road_alpha": list(cfg.road_alpha),
        "lane_offsets": list(cfg.lane_offsets),
        "lane_width": cfg.lane_width,
        "uvp_column": cfg.uvp_column,
        "uvp_beta": list(cfg.uvp_beta) if cfg.uvp_beta is not None else None,
        "texture_seed": cfg.texture_seed,
        "noise_sigma": cfg.noise_sigma,
        "obstacle_specs": [list(o) for o in cfg.obstacle_specs],
        "d_max": cfg.d_max,
    }


def truth_dict(truth: SceneTruth) -> dict:
    return {
        "model": {"alpha": list(truth.gt_model.as_array())},
        "lanes": [lane.to_dict() for lane in truth.gt_lanes],
        "traj": {"beta": list(truth.gt_traj.beta), "v_h": truth.gt_traj.v_h},
        "config": _config_dict(truth.config),
    }


def write_scene(truth: SceneTruth, out_dir) -> None:
    """Scene bundle: left.png, right.png, gt_disp.png (x256), truth.json."""
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    save_gray(truth.left, d / "left.png")
    save_gray(truth.right, d / "right.png")
    save_disparity_png(truth.gt_disparity, d / "gt_disp.png")
    (d / "truth.json").write_text(json.dumps(truth_dict(truth), indent=1))


def write_sequence(cfgs: list[SceneConfig], seq_dir, truth_dir=None) -> list[SceneTruth]:
    """Write frame pairs (NNNNNN_left.png / NNNNNN_right.png) plus optional
    per-frame truth JSONs; returns the generated truths."""
    seq = Path(seq_dir)
    seq.mkdir(parents=True, exist_ok=True)
    tdir = Path(truth_dir) if truth_dir is not None else None
    if tdir is not None:
        tdir.mkdir(parents=True, exist_ok=True)
    truths = []
    for n, cfg in enumerate(cfgs):
        truth = generate_scene(cfg)
        save_gray(truth.left, seq / f"{n:06d}_left.png")
        save_gray(truth.right, seq / f"{n:06d}_right.png")
        if tdir is not None:
            (tdir / f"{n:06d}_truth.json").write_text(json.dumps(truth_dict(truth)))
        truths.append(truth)
    return truths


def drifting_configs(base: SceneConfig, n_frames: int, d_alpha=(0.0, 0.0, 0.0),
                     d_offsets=0.0, d_uvp=0.0) -> list[SceneConfig]:
    cfgs = [base]
    for _ in range(n_frames - 1):
        cfgs.append(next_frame(cfgs[-1], d_alpha=d_alpha, d_offsets=d_offsets, d_uvp=d_uvp))
    return cfgs

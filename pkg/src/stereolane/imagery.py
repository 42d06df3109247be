"""Image containers, PNG/PGM I/O, bilateral filtering and Sobel gradients."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from . import backend
from .errors import ImageTooSmall, InvalidParameter, UnsupportedFormat

RGB_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass
class GrayImage:
    """8-bit single-channel raster, row-major (height, width)."""

    pixels: np.ndarray

    def __post_init__(self):
        self.pixels = np.ascontiguousarray(self.pixels, dtype=np.uint8)
        if self.pixels.ndim != 2 or self.pixels.shape[0] < 1 or self.pixels.shape[1] < 1:
            raise InvalidParameter("GrayImage needs a 2-D array with positive dimensions")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass
class GradientField:
    """Signed Sobel responses plus magnitude and orientation rasters.

    Orientation is atan2(gy, gx) in (-pi, pi]; the outermost pixel ring is
    zeroed so border responses never feed downstream voting.
    """

    gx: np.ndarray
    gy: np.ndarray
    magnitude: np.ndarray
    orientation: np.ndarray


def load_gray(path) -> GrayImage:
    """Read an 8-bit grayscale or RGB PNG, or a binary P5 PGM."""
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(str(p))
    with open(p, "rb") as fh:
        magic = fh.read(2)
    if magic == b"P5":
        return _load_pgm(p)
    img = Image.open(p)
    if img.mode == "P":
        img = img.convert("RGB")
    if img.mode == "L":
        return GrayImage(np.asarray(img, dtype=np.uint8))
    if img.mode == "RGB":
        rgb = np.asarray(img, dtype=np.float64)
        gray = RGB_WEIGHTS[0] * rgb[..., 0] + RGB_WEIGHTS[1] * rgb[..., 1] + RGB_WEIGHTS[2] * rgb[..., 2]
        return GrayImage(np.rint(gray).astype(np.uint8))
    raise UnsupportedFormat(f"unsupported PNG mode {img.mode!r} (need 8-bit gray or RGB)")


def _load_pgm(path: Path) -> GrayImage:
    data = path.read_bytes()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    if fields[0] != b"P5":
        raise UnsupportedFormat("only binary (P5) PGM is supported")
    width, height, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval > 255:
        raise UnsupportedFormat(f"PGM maxval {maxval} exceeds 8 bits")
    pos += 1
    raw = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
    return GrayImage(raw.reshape(height, width).copy())


def save_gray(img: GrayImage, path) -> None:
    """Write as PNG or binary PGM depending on the file extension."""
    p = Path(path)
    if p.suffix.lower() == ".pgm":
        header = f"P5\n{img.width} {img.height}\n255\n".encode()
        p.write_bytes(header + img.pixels.tobytes())
    else:
        Image.fromarray(img.pixels, mode="L").save(p)


def bilateral_filter(img: GrayImage, sigma_s: float = 3.0, sigma_r: float = 30.0,
                     radius: int = 5) -> GrayImage:
    """Edge-preserving smoothing with truncated windows at the borders.

    Each output pixel is the weight-normalised window sum with weights
    exp(-dist^2/(2*sigma_s^2)) * exp(-dI^2/(2*sigma_r^2)), rounded to the
    nearest intensity.
    """
    if sigma_s <= 0 or sigma_r <= 0:
        raise InvalidParameter("sigma_s and sigma_r must be positive")
    if radius < 1:
        raise InvalidParameter("radius must be >= 1")
    offs = np.arange(-radius, radius + 1, dtype=np.float64)
    spatial = np.exp(-(offs[:, None] ** 2 + offs[None, :] ** 2) / (2.0 * sigma_s * sigma_s))
    lut = np.exp(-(np.arange(256, dtype=np.float64) ** 2) / (2.0 * sigma_r * sigma_r))
    out = backend.bilateral_kernel(img.pixels, spatial, lut)
    return GrayImage(out)


SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.int32)


def sobel_gradients(img: GrayImage) -> GradientField:
    """3x3 Sobel responses; gx kernel is SOBEL_X, gy its transpose."""
    if img.width < 3 or img.height < 3:
        raise ImageTooSmall("Sobel needs at least a 3x3 image")
    p = img.pixels.astype(np.int32)
    gx = np.zeros_like(p)
    gy = np.zeros_like(p)
    gx[1:-1, 1:-1] = (
        (p[:-2, 2:] + 2 * p[1:-1, 2:] + p[2:, 2:])
        - (p[:-2, :-2] + 2 * p[1:-1, :-2] + p[2:, :-2])
    )
    gy[1:-1, 1:-1] = (
        (p[2:, :-2] + 2 * p[2:, 1:-1] + p[2:, 2:])
        - (p[:-2, :-2] + 2 * p[:-2, 1:-1] + p[:-2, 2:])
    )
    magnitude = np.hypot(gx.astype(np.float64), gy.astype(np.float64))
    orientation = np.arctan2(gy, gx)
    return GradientField(gx=gx, gy=gy, magnitude=magnitude, orientation=orientation)


def save_heatmap(votes: np.ndarray, path) -> None:
    """Log-scaled 8-bit PNG rendering of a vote matrix (debug aid)."""
    v = np.asarray(votes, dtype=np.float64)
    top = math.log1p(v.max()) if v.size and v.max() > 0 else 1.0
    img = np.rint(255.0 * np.log1p(np.maximum(v, 0.0)) / top).astype(np.uint8)
    Image.fromarray(img, mode="L").save(Path(path))


def save_rgb(rgb: np.ndarray, path) -> None:
    """Write an (H, W, 3) uint8 array as RGB PNG."""
    Image.fromarray(np.ascontiguousarray(rgb, dtype=np.uint8), mode="RGB").save(Path(path))

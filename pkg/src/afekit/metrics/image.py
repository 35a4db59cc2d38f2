"""Pixel and patch-feature image metrics: PSNR, SSIM, LPIPS-style distance."""

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .. import tensorio
from ..errors import ContractError, FormatError, ShapeError

LUMA_601 = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class ImageFrame:
    """``pixels`` is (H, W, channels) with channels 1 or 3, float64 internally."""

    pixels: np.ndarray
    max_value: float = 255.0

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim == 2:
            px = px[:, :, None]
        if px.ndim != 3 or px.shape[2] not in (1, 3):
            raise ShapeError(f"image must be (H, W) or (H, W, 1|3), got {np.shape(self.pixels)}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ShapeError("image must have at least one pixel")
        px = px.astype(np.float64)
        if not np.all(np.isfinite(px)):
            raise ContractError("image has non-finite pixels")
        if px.max() > self.max_value:
            raise ContractError(f"pixel value {px.max()} exceeds max_value {self.max_value}")
        object.__setattr__(self, "pixels", px)
        object.__setattr__(self, "max_value", float(self.max_value))

    @classmethod
    def from_uint8(cls, array):
        return cls(np.asarray(array, dtype=np.uint8), 255.0)

    @property
    def shape(self):
        return self.pixels.shape

    def gray(self):
        """(H, W) luma plane; ITU-R 601 weights for RGB."""
        if self.pixels.shape[2] == 1:
            return self.pixels[:, :, 0]
        return self.pixels @ LUMA_601


def load_image(path):
    """Read a binary PGM/PPM (8- or 16-bit) or a ``kind: img`` tensor file."""
    path = str(path)
    if path.endswith(".f32"):
        arr, header = tensorio.read_tensor(path, kind="img")
        return ImageFrame(arr, float(header.get("max_value", 255.0)))
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            arr = np.asarray(im)
    except OSError as exc:
        if isinstance(exc, FileNotFoundError):
            raise
        raise FormatError(f"cannot decode image {path}: {exc}") from None
    if mode in ("L", "RGB"):
        return ImageFrame(arr, 255.0)
    if mode.startswith("I;16") or mode == "I":
        return ImageFrame(arr, 65535.0)
    raise FormatError(f"unsupported image mode {mode} in {path}")


def save_image(path, frame):
    """Write 8-bit frames as PGM/PPM (by channel count) or anything as a tensor."""
    path = str(path)
    if path.endswith(".f32"):
        tensorio.write_tensor(path, frame.pixels, "img", max_value=frame.max_value)
        return
    if frame.max_value != 255.0:
        raise ContractError("PGM/PPM export supports 8-bit frames only; use .f32")
    px = np.round(frame.pixels).astype(np.uint8)
    img = Image.fromarray(px[:, :, 0] if px.shape[2] == 1 else px)
    img.save(path)


def _check_pair(a, b):
    if a.shape != b.shape:
        raise ShapeError(f"image shapes differ: {a.shape} vs {b.shape}")
    if a.max_value != b.max_value:
        raise ContractError(f"max_value differs: {a.max_value} vs {b.max_value}")


def mse(a, b):
    _check_pair(a, b)
    diff = a.pixels - b.pixels
    return float(np.mean(diff * diff))


def psnr(a, b):
    """``10 log10(MAX^2 / MSE)`` over all channels; ``inf`` for identical frames."""
    err = mse(a, b)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(a.max_value**2 / err)


@dataclass(frozen=True)
class SSIMConfig:
    window: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03


def gaussian_window(size, sigma):
    x = np.arange(size) - (size - 1) / 2
    g = np.exp(-(x**2) / (2 * sigma**2))
    g /= g.sum()
    return np.outer(g, g)


def ssim_map(a, b, cfg=None):
    """Local SSIM over every fully-contained window position ('valid' mode)."""
    cfg = cfg or SSIMConfig()
    _check_pair(a, b)
    x, y = a.gray(), b.gray()
    if min(x.shape) < cfg.window:
        raise ContractError(f"image {x.shape} smaller than the {cfg.window}x{cfg.window} window")
    win = gaussian_window(cfg.window, cfg.sigma)
    c1 = (cfg.k1 * a.max_value) ** 2
    c2 = (cfg.k2 * a.max_value) ** 2

    def local(img):
        view = np.lib.stride_tricks.sliding_window_view(img, win.shape)
        return np.einsum("ijkl,kl->ij", view, win)

    mu_x, mu_y = local(x), local(y)
    var_x = local(x * x) - mu_x * mu_x
    var_y = local(y * y) - mu_y * mu_y
    cov = local(x * y) - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return num / den


def ssim(a, b, cfg=None):
    return float(np.mean(ssim_map(a, b, cfg)))


class PatchStatsEmbedder:
    """Stand-in for a learned patch embedder.

    Splits the luma plane (scaled to [0, 1]) into a ``grid x grid`` layout and
    describes each patch by (mean, std, mean |dx|, mean |dy|). Any callable
    mapping an ImageFrame to an ``(N, d)`` array can replace it; features
    computed offline by a real network go straight to :func:`patch_distance`.
    """

    def __init__(self, grid=8):
        self.grid = grid

    def __call__(self, frame):
        g = frame.gray() / frame.max_value
        h, w = g.shape
        if h < self.grid or w < self.grid:
            raise ContractError(f"image {g.shape} smaller than the {self.grid}x{self.grid} grid")
        feats = []
        for rows in np.array_split(np.arange(h), self.grid):
            for cols in np.array_split(np.arange(w), self.grid):
                patch = g[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1]
                dx = np.abs(np.diff(patch, axis=1)).mean() if patch.shape[1] > 1 else 0.0
                dy = np.abs(np.diff(patch, axis=0)).mean() if patch.shape[0] > 1 else 0.0
                feats.append((patch.mean(), patch.std(), dx, dy))
        return np.asarray(feats, dtype=np.float64)


def patch_distance(feats_a, feats_b):
    """Mean L2 distance between matching rows of two ``(N, d)`` feature arrays."""
    fa = np.atleast_2d(np.asarray(feats_a, dtype=np.float64))
    fb = np.atleast_2d(np.asarray(feats_b, dtype=np.float64))
    if fa.shape != fb.shape:
        raise ShapeError(f"patch features differ in shape: {fa.shape} vs {fb.shape}")
    return float(np.mean(np.linalg.norm(fa - fb, axis=1)))


def lpips(a, b, embedder=None):
    embedder = embedder or PatchStatsEmbedder()
    return patch_distance(embedder(a), embedder(b))

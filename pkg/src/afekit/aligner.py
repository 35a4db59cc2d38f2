"""Sliding-window alignment of encoder frames to video frames.

Video frame ``i`` sees encoder rows ``[i*s - p, i*s - p + w)``; rows outside
the sequence are zeros. With the defaults (w=16, s=2, p=7) a 50 Hz encoder
stream becomes exactly 25 windows per second.
"""

import logging
from dataclasses import dataclass

import numpy as np

from . import tensorio
from .errors import AlignmentError, ContractError, FormatError, ShapeError

log = logging.getLogger(__name__)

RATE_TOL = 1e-6


@dataclass(frozen=True)
class AlignConfig:
    w: int = 16
    s: int = 2
    p: int = 7
    video_fps: float = 25.0

    def __post_init__(self):
        if self.w < 1 or self.s < 1 or self.p < 0:
            raise ContractError(f"need w>=1, s>=1, p>=0; got w={self.w} s={self.s} p={self.p}")
        if self.video_fps <= 0:
            raise ContractError("video_fps must be positive")


@dataclass(frozen=True)
class AlignedFeatureTensor:
    data: np.ndarray
    video_fps: float = 25.0
    source_provenance: str = "reference"

    @property
    def shape(self):
        return self.data.shape

    @property
    def n_frames(self):
        return self.data.shape[0]


def window_count(t_enc, cfg=None):
    cfg = cfg or AlignConfig()
    if t_enc < 1:
        raise ContractError(f"need at least one encoder frame, got {t_enc}")
    span = t_enc + 2 * cfg.p - cfg.w
    if span < 0:
        raise ContractError(
            f"window w={cfg.w} longer than padded sequence {t_enc} + 2*{cfg.p}"
        )
    return span // cfg.s + 1


def check_rate(enc_rate_hz, cfg):
    expected = cfg.s * cfg.video_fps
    if abs(enc_rate_hz - expected) > RATE_TOL * max(1.0, expected):
        raise AlignmentError(enc_rate_hz, expected)


def stride_for_rate(enc_rate_hz, video_fps):
    """Stride that best maps ``enc_rate_hz`` onto ``video_fps``."""
    s = round(enc_rate_hz / video_fps)
    if s < 1:
        raise ContractError(f"encoder rate {enc_rate_hz} Hz is below the video rate {video_fps}")
    return s


def align(emb, cfg=None, recompute_stride=False):
    """Gather ``(n_frames, w, C)`` windows from an :class:`EmbeddingMatrix`.

    Args:
        emb: Reference or imported embeddings.
        cfg: Window geometry; defaults to w=16, s=2, p=7, 25 fps.
        recompute_stride: On a rate mismatch, replace ``cfg.s`` with
            ``round(rate / fps)`` instead of raising.

    Raises:
        AlignmentError: ``emb.enc_frame_rate_hz != cfg.s * cfg.video_fps``.
    """
    cfg = cfg or AlignConfig()
    try:
        check_rate(emb.enc_frame_rate_hz, cfg)
    except AlignmentError:
        if not recompute_stride:
            raise
        s = stride_for_rate(emb.enc_frame_rate_hz, cfg.video_fps)
        log.warning(
            "encoder rate %g Hz vs %g fps: stride %d -> %d",
            emb.enc_frame_rate_hz, cfg.video_fps, cfg.s, s,
        )
        cfg = AlignConfig(cfg.w, s, cfg.p, cfg.video_fps)
    rows = emb.rows
    n = window_count(rows.shape[0], cfg)
    padded = np.pad(rows, ((cfg.p, cfg.p), (0, 0)))
    view = np.lib.stride_tricks.sliding_window_view(padded, cfg.w, axis=0)
    # view is (positions, C, w); take every s-th start and move w before C
    windows = view[: (n - 1) * cfg.s + 1 : cfg.s].transpose(0, 2, 1)
    return AlignedFeatureTensor(
        np.ascontiguousarray(windows, dtype=np.float32),
        video_fps=cfg.video_fps,
        source_provenance=emb.provenance,
    )


def frame_center(i, cfg=None, t_enc=None):
    """Centre of window ``i`` in unpadded encoder-frame coordinates.

    Fractional for even ``w``. ``t_enc`` bounds-checks ``i`` when given.
    """
    cfg = cfg or AlignConfig()
    if i < 0:
        raise ContractError(f"frame index must be >= 0, got {i}")
    if t_enc is not None and i >= window_count(t_enc, cfg):
        raise ContractError(f"frame index {i} out of range for {window_count(t_enc, cfg)} frames")
    return i * cfg.s + (cfg.w - 1) / 2 - cfg.p


def export_aligned(aligned, path):
    tensorio.write_tensor(path, aligned.data, "aligned", fps=float(aligned.video_fps))


def import_aligned(path):
    data, header = tensorio.read_tensor(path, kind="aligned")
    if len(header["shape"]) != 3:
        raise ShapeError(f"aligned tensor must be 3-D, header shape {header['shape']}")
    if "fps" not in header:
        raise FormatError("aligned header missing field 'fps'")
    return AlignedFeatureTensor(data, video_fps=float(header["fps"]), source_provenance="imported")

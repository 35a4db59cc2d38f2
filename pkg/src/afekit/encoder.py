"""Encoder embeddings with Whisper-tiny geometry.

The reference encoder is a shape-faithful stand-in for the real network:
adjacent mel frames ``(2t, 2t+1)`` are concatenated, multiplied by a fixed
Gaussian projection ``(2*n_mels, C)`` and passed through exact GELU. That
keeps the 2x temporal downsample (100 Hz mel -> 50 Hz) and ``C = 384``.
Real features computed elsewhere enter through :func:`import_embeddings`.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import erf

from . import tensorio
from .errors import ContractError, FormatError, ShapeError

EMBED_DIM = 384
DEFAULT_SEED = 0
DOWNSAMPLE = 2

PROVENANCE = ("reference", "imported")


@dataclass(frozen=True)
class EmbeddingMatrix:
    rows: np.ndarray
    enc_frame_rate_hz: float = 50.0
    provenance: str = "reference"

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float32)
        if rows.ndim != 2:
            raise ShapeError(f"embeddings must be 2-D, got shape {rows.shape}")
        if not np.all(np.isfinite(rows)):
            raise ContractError("embeddings contain non-finite values")
        if self.provenance not in PROVENANCE:
            raise ContractError(f"unknown provenance {self.provenance!r}")
        object.__setattr__(self, "rows", rows)

    @property
    def t_enc(self):
        return self.rows.shape[0]

    @property
    def dim(self):
        return self.rows.shape[1]

    @property
    def shape(self):
        return self.rows.shape


@dataclass(frozen=True)
class ReferenceEncoderParams:
    """Projection weights drawn from numpy's PCG64 generator seeded with ``seed``.

    Entries are standard normal scaled by ``1/sqrt(2*n_mels)`` so outputs stay
    O(1) for normalised mel input.
    """

    seed: int = DEFAULT_SEED
    n_mels: int = 80
    dim: int = EMBED_DIM
    gelu_enabled: bool = True

    @cached_property
    def proj(self):
        rng = np.random.Generator(np.random.PCG64(self.seed))
        fan_in = DOWNSAMPLE * self.n_mels
        return rng.standard_normal((fan_in, self.dim)) / np.sqrt(fan_in)


def gelu(x):
    """Exact GELU, ``x * Phi(x)``."""
    return 0.5 * x * (1.0 + erf(x / np.sqrt(2.0)))


def pair_frames(frames):
    """Stack frames ``2t`` and ``2t+1`` side by side; odd tails pair with zeros."""
    t_mel, n_mels = frames.shape
    if t_mel % 2:
        frames = np.vstack([frames, np.zeros((1, n_mels), dtype=frames.dtype)])
    return frames.reshape(-1, DOWNSAMPLE * n_mels)


def encode_reference(mel, params=None):
    """Project a normalised spectrogram to ``(ceil(T_mel/2), C)`` embeddings."""
    params = params or ReferenceEncoderParams(n_mels=mel.frames.shape[1])
    frames = np.asarray(mel.frames, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[0] < 1:
        raise ShapeError(f"need a (T_mel>=1, n_mels) spectrogram, got {frames.shape}")
    if frames.shape[1] != params.n_mels:
        raise ShapeError(
            f"spectrogram has {frames.shape[1]} mel bins, encoder expects {params.n_mels}"
        )
    if not getattr(mel, "normalized", True):
        raise ContractError("encode_reference expects a normalised spectrogram")
    out = pair_frames(frames) @ params.proj
    if params.gelu_enabled:
        out = gelu(out)
    return EmbeddingMatrix(
        out.astype(np.float32),
        enc_frame_rate_hz=mel.frame_rate_hz / DOWNSAMPLE,
        provenance="reference",
    )


def export_embeddings(emb, path):
    tensorio.write_tensor(
        path, emb.rows, "emb", rate_hz=float(emb.enc_frame_rate_hz), dim=int(emb.dim)
    )


def import_embeddings(path):
    rows, header = tensorio.read_tensor(path, kind="emb")
    if len(header["shape"]) != 2:
        raise ShapeError(f"embedding file must be 2-D, header shape {header['shape']}")
    if "rate_hz" not in header:
        raise FormatError("embedding header missing field 'rate_hz'")
    if "dim" in header and header["dim"] != header["shape"][1]:
        raise ShapeError(f"header dim {header['dim']} disagrees with shape {header['shape']}")
    return EmbeddingMatrix(rows, enc_frame_rate_hz=float(header["rate_hz"]), provenance="imported")

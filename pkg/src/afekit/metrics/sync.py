"""Audio-visual sync confidence as the mean floored cosine similarity."""

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError, ShapeError

EPS = 1e-8


@dataclass(frozen=True)
class EmbeddingPairSeries:
    video: np.ndarray
    audio: np.ndarray
    eps: float = EPS

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.video, dtype=np.float64))
        s = np.atleast_2d(np.asarray(self.audio, dtype=np.float64))
        if v.shape != s.shape or v.ndim != 2:
            raise ShapeError(f"video {v.shape} and audio {s.shape} embeddings must match")
        if v.shape[0] < 1:
            raise ContractError("need at least one embedding pair")
        object.__setattr__(self, "video", v)
        object.__setattr__(self, "audio", s)

    def __len__(self):
        return self.video.shape[0]


def sync_scores(series):
    """Per-pair ``v.s / max(|v||s|, eps)``."""
    dots = np.einsum("ij,ij->i", series.video, series.audio)
    norms = np.linalg.norm(series.video, axis=1) * np.linalg.norm(series.audio, axis=1)
    return dots / np.maximum(norms, series.eps)


def sync_conf(series):
    return float(np.mean(sync_scores(series)))

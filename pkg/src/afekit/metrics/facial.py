"""Landmark distance and lower-face action-unit error, plus their CSV readers."""

import csv
import re
from dataclasses import dataclass

import numpy as np

from ..errors import ContractError, FormatError, ShapeError

LOWER_FACE_AUS = ("AU10", "AU12", "AU14", "AU15", "AU17", "AU20", "AU23", "AU25", "AU26")


@dataclass(frozen=True)
class LandmarkSet:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
            raise ShapeError(f"landmarks must be (N>=1, 2), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ContractError("landmark coordinates must be finite")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]


def lmd(a, b):
    """Mean Euclidean distance between corresponding landmarks."""
    if len(a) != len(b):
        raise ShapeError(f"landmark counts differ: {len(a)} vs {len(b)}")
    return float(np.mean(np.hypot(*(a.points - b.points).T)))


def au_key(raw):
    """Canonical AU id: ``12``, ``"12"``, ``"au12"`` and ``"AU12"`` all become ``"AU12"``."""
    m = re.fullmatch(r"(?i)\s*(?:au)?\s*0*(\d+)\s*", str(raw))
    if not m:
        raise FormatError(f"unrecognised action unit id {raw!r}")
    return f"AU{int(m.group(1))}"


@dataclass(frozen=True)
class AUVector:
    intensities: dict
    subset: tuple = LOWER_FACE_AUS

    def __post_init__(self):
        vals = {au_key(k): float(v) for k, v in self.intensities.items()}
        if any(v < 0 or not np.isfinite(v) for v in vals.values()):
            raise ContractError("AU intensities must be finite and non-negative")
        subset = tuple(au_key(k) for k in self.subset)
        if not subset:
            raise ContractError("AU subset must not be empty")
        object.__setattr__(self, "intensities", vals)
        object.__setattr__(self, "subset", subset)

    def values(self, subset=None):
        subset = self.subset if subset is None else tuple(au_key(k) for k in subset)
        missing = [k for k in subset if k not in self.intensities]
        if missing:
            raise ContractError(f"missing action units {missing}")
        return np.array([self.intensities[k] for k in subset])


def aue_lower(a, b, subset=None):
    """Mean squared intensity difference over the lower-face AU subset."""
    subset = a.subset if subset is None else subset
    diff = a.values(subset) - b.values(subset)
    return float(np.mean(diff * diff))


def _rows(path, columns):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != list(columns):
            raise FormatError(f"{path}: expected header {','.join(columns)}")
        for lineno, row in enumerate(reader, start=2):
            yield lineno, {k.strip(): (v or "").strip() for k, v in row.items()}


def read_landmarks_csv(path):
    """``frame_index,point_index,x,y`` -> {frame_index: LandmarkSet}."""
    frames = {}
    for lineno, row in _rows(path, ("frame_index", "point_index", "x", "y")):
        try:
            key = (int(row["frame_index"]), int(row["point_index"]))
            xy = (float(row["x"]), float(row["y"]))
        except ValueError:
            raise FormatError(f"{path}:{lineno}: bad landmark row {row}") from None
        frames.setdefault(key[0], {})[key[1]] = xy
    return {
        f: LandmarkSet(np.array([pts[i] for i in sorted(pts)]))
        for f, pts in sorted(frames.items())
    }


def read_aus_csv(path, subset=LOWER_FACE_AUS):
    """``frame_index,au_id,intensity`` -> {frame_index: AUVector}."""
    frames = {}
    for lineno, row in _rows(path, ("frame_index", "au_id", "intensity")):
        try:
            frame = int(row["frame_index"])
            value = float(row["intensity"])
        except ValueError:
            raise FormatError(f"{path}:{lineno}: bad AU row {row}") from None
        frames.setdefault(frame, {})[au_key(row["au_id"])] = value
    return {f: AUVector(v, tuple(subset)) for f, v in sorted(frames.items())}

"""Directory-level evaluation producing a Table-1 style quality report.

A manifest (dict or JSON file) names optional side data, resolved relative
to each of the prediction and ground-truth directories::

    {
      "frames": "*.pgm",                  # glob, default: every frame file
      "landmarks": "landmarks.csv",       # frame_index,point_index,x,y
      "aus": "aus.csv",                   # frame_index,au_id,intensity
      "au_subset": ["AU12", "AU25"],      # default: 9 lower-face AUs
      "lpips_features": "lpips.f32",      # (n_frames, N, d) per-patch features
      "fid_features": "fid.f32",          # (n_frames, d) per-frame features
      "sync": {"video": "v.f32", "audio": "a.f32"}   # read from pred_dir only
    }

Without ``fid_features`` the FID uses flattened patch statistics of each
frame as the feature vector.
"""

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import tensorio
from ..errors import AfeError, ManifestError
from .facial import LOWER_FACE_AUS, aue_lower, lmd, read_aus_csv, read_landmarks_csv
from .fid import FeatureSet, fid
from .image import PatchStatsEmbedder, load_image, patch_distance, psnr, ssim
from .sync import EmbeddingPairSeries, sync_scores

METRICS = ("psnr", "ssim", "lpips", "lmd", "fid", "aue", "sync")
FRAME_SUFFIXES = (".pgm", ".ppm", ".pnm", ".f32")


@dataclass
class QualityReport:
    means: dict
    per_frame: dict = field(default_factory=dict)
    n_frames: int = 0

    def to_dict(self, per_frame=False):
        out = {"n_frames": self.n_frames, "metrics": {k: _jsonable(v) for k, v in self.means.items()}}
        if per_frame:
            out["per_frame"] = {k: [_jsonable(x) for x in v] for k, v in self.per_frame.items()}
        return out

    def to_json(self, per_frame=False):
        return json.dumps(self.to_dict(per_frame), indent=2)

    def to_csv(self):
        """One row per frame; set-level FID appears only in the trailing ``mean`` row."""
        cols = [m for m in METRICS if m in self.means]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["frame"] + cols)
        n_rows = max((len(v) for v in self.per_frame.values()), default=0)
        for i in range(n_rows):
            row = [i]
            for m in cols:
                series = self.per_frame.get(m)
                row.append(_fmt(series[i]) if series is not None and i < len(series) else "")
            writer.writerow(row)
        writer.writerow(["mean"] + [_fmt(self.means[m]) for m in cols])
        return buf.getvalue()


def _jsonable(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _fmt(v):
    return "inf" if isinstance(v, float) and math.isinf(v) else repr(float(v))


def load_manifest(manifest):
    if manifest is None:
        return {}
    if isinstance(manifest, dict):
        return dict(manifest)
    try:
        with open(manifest) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ManifestError(f"manifest not found: {manifest}") from None
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {manifest} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ManifestError("manifest must be a JSON object")
    return data


def list_frames(directory, pattern=None):
    directory = Path(directory)
    if not directory.is_dir():
        raise ManifestError(f"frame directory not found: {directory}")
    paths = sorted(directory.glob(pattern or "*"))
    frames = []
    for p in paths:
        if p.suffix.lower() not in FRAME_SUFFIXES or not p.is_file():
            continue
        if p.suffix == ".f32":
            with open(p, "rb") as fh:
                head = fh.readline()
            if b'"kind":"img"' not in head.replace(b" ", b""):
                continue
        frames.append(p)
    return frames


def _side_file(directory, name, what):
    path = Path(directory) / name
    if not path.is_file():
        raise ManifestError(f"{what} file missing: {path}")
    return path


def _keyed_series(pred, truth, metric_fn, what):
    if set(pred) != set(truth):
        raise ManifestError(
            f"{what}: frame indices differ between prediction ({len(pred)}) and truth ({len(truth)})"
        )
    try:
        return [metric_fn(pred[k], truth[k]) for k in sorted(pred)]
    except AfeError as exc:
        raise ManifestError(f"{what}: {exc}") from None


def available_metrics(manifest):
    avail = ["psnr", "ssim", "lpips", "fid"]
    if "landmarks" in manifest:
        avail.append("lmd")
    if "aus" in manifest:
        avail.append("aue")
    if "sync" in manifest:
        avail.append("sync")
    return [m for m in METRICS if m in avail]


def evaluate_suite(pred_dir, truth_dir, manifest=None, metrics=None, workers=1):
    """Compute the selected metrics over matched frames and side data.

    Args:
        pred_dir: Directory of generated frames (and prediction side files).
        truth_dir: Directory of ground-truth frames (and truth side files).
        manifest: Dict, path to a JSON manifest, or None for frames only.
        metrics: Iterable of metric names; default is everything the
            manifest provides data for.
        workers: Threads used for per-frame image metrics.

    Raises:
        ManifestError: Missing files, frame-count mismatch, or a requested
            metric without the side data it needs.
    """
    manifest = load_manifest(manifest)
    avail = available_metrics(manifest)
    if metrics is None:
        selected = avail
    else:
        selected = [m.strip().lower() for m in metrics]
        unknown = [m for m in selected if m not in METRICS]
        if unknown:
            raise ManifestError(f"unknown metrics {unknown}; choose from {', '.join(METRICS)}")
        lacking = [m for m in selected if m not in avail]
        if lacking:
            raise ManifestError(f"manifest provides no data for {lacking}")
        selected = [m for m in METRICS if m in selected]

    pred_paths = list_frames(pred_dir, manifest.get("frames"))
    truth_paths = list_frames(truth_dir, manifest.get("frames"))
    if len(pred_paths) != len(truth_paths):
        raise ManifestError(
            f"frame counts differ: {len(pred_paths)} predicted vs {len(truth_paths)} ground truth"
        )
    n = len(pred_paths)
    per_frame = {}
    means = {}

    needs_images = {"psnr", "ssim", "lpips", "fid"} & set(selected)
    if needs_images and n == 0:
        raise ManifestError(f"no frames found in {pred_dir}")
    if needs_images:
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            preds = list(pool.map(load_image, pred_paths))
            truths = list(pool.map(load_image, truth_paths))
        try:
            if "psnr" in selected:
                per_frame["psnr"] = [psnr(p, t) for p, t in zip(preds, truths)]
            if "ssim" in selected:
                with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
                    per_frame["ssim"] = list(pool.map(ssim, preds, truths))
        except AfeError as exc:
            raise ManifestError(f"frame metrics: {exc}") from exc
        embedder = PatchStatsEmbedder()
        if "lpips" in selected:
            if "lpips_features" in manifest:
                fp = _load_stack(pred_dir, manifest["lpips_features"], n, 3, "lpips_features")
                ft = _load_stack(truth_dir, manifest["lpips_features"], n, 3, "lpips_features")
                per_frame["lpips"] = [patch_distance(a, b) for a, b in zip(fp, ft)]
            else:
                per_frame["lpips"] = [
                    patch_distance(embedder(p), embedder(t)) for p, t in zip(preds, truths)
                ]
        if "fid" in selected:
            if "fid_features" in manifest:
                gen = _load_stack(pred_dir, manifest["fid_features"], None, 2, "fid_features")
                real = _load_stack(truth_dir, manifest["fid_features"], None, 2, "fid_features")
            else:
                gen = np.stack([embedder(p).ravel() for p in preds])
                real = np.stack([embedder(t).ravel() for t in truths])
            try:
                means["fid"] = fid(FeatureSet.from_vectors(real), FeatureSet.from_vectors(gen))
            except AfeError as exc:
                raise ManifestError(f"fid: {exc}") from exc

    if "lmd" in selected:
        name = manifest["landmarks"]
        per_frame["lmd"] = _keyed_series(
            read_landmarks_csv(_side_file(pred_dir, name, "landmarks")),
            read_landmarks_csv(_side_file(truth_dir, name, "landmarks")),
            lmd, "landmarks",
        )
    if "aue" in selected:
        name = manifest["aus"]
        subset = tuple(manifest.get("au_subset", LOWER_FACE_AUS))
        per_frame["aue"] = _keyed_series(
            read_aus_csv(_side_file(pred_dir, name, "aus"), subset),
            read_aus_csv(_side_file(truth_dir, name, "aus"), subset),
            aue_lower, "aus",
        )
    if "sync" in selected:
        spec = manifest["sync"]
        try:
            video, _ = tensorio.read_tensor(_side_file(pred_dir, spec["video"], "sync video"))
            audio, _ = tensorio.read_tensor(_side_file(pred_dir, spec["audio"], "sync audio"))
            per_frame["sync"] = sync_scores(EmbeddingPairSeries(video, audio)).tolist()
        except (KeyError, TypeError):
            raise ManifestError("manifest 'sync' needs {'video': ..., 'audio': ...}") from None
        except AfeError as exc:
            raise ManifestError(f"sync: {exc}") from exc

    for m in selected:
        if m in per_frame:
            means[m] = float(np.mean(per_frame[m])) if per_frame[m] else math.nan
    ordered = {m: means[m] for m in METRICS if m in means}
    return QualityReport(ordered, per_frame, n)


def _load_stack(directory, name, n_frames, ndim, what):
    try:
        arr, _ = tensorio.read_tensor(_side_file(directory, name, what))
    except AfeError as exc:
        raise ManifestError(f"{what}: {exc}") from exc
    if arr.ndim != ndim or (n_frames is not None and arr.shape[0] != n_frames):
        raise ManifestError(
            f"{what} in {directory} has shape {arr.shape}; expected {ndim}-D"
            + (f" with {n_frames} frames" if n_frames is not None else "")
        )
    return arr.astype(np.float64)

"""Stage-graph timing, Table-3 style latency reports, AFE benchmarks, dataset split.

Stages run strictly in sequence and each body is timed with a monotonic
clock (``time.perf_counter`` unless a clock is injected). Percentages are
always recomputed from the durations; rounding to 2 decimals happens only
when a report is serialised.
"""

import csv
import hashlib
import io
import json
import math
import statistics
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .aligner import AlignConfig, align
from .audio import AudioBuffer, MelConfig, extract_features, load_wav, write_wav
from .encoder import ReferenceEncoderParams, encode_reference
from .errors import AfeError, ContractError, FormatError, StageError

STAGE_NAMES = ("Listening", "STT", "Language", "TTS", "AFE", "FrameRendering", "AudioOverlay")
STAGE_KINDS = ("real", "mock-fixed", "mock-distribution", "replay")
TRAIN_FRACTION = 0.91


@dataclass
class Stage:
    name: str
    executor: object
    kind: str = "real"

    def __post_init__(self):
        if self.kind not in STAGE_KINDS:
            raise ContractError(f"unknown stage kind {self.kind!r}")


@dataclass(frozen=True)
class StageTiming:
    stage_name: str
    wall_seconds: float
    percent_of_total: float


@dataclass
class PipelineReport:
    timings: list
    answer_tokens: int = 0
    answer_duration_s: float = 0.0
    output: object = field(default=None, repr=False, compare=False)

    @property
    def total_seconds(self):
        return math.fsum(t.wall_seconds for t in self.timings)

    def percent(self, stage_name):
        for t in self.timings:
            if t.stage_name == stage_name:
                return t.percent_of_total
        raise KeyError(stage_name)

    def to_dict(self):
        return {
            "stages": [
                {"name": t.stage_name, "seconds": t.wall_seconds, "percent": round(t.percent_of_total, 2)}
                for t in self.timings
            ],
            "total_seconds": self.total_seconds,
            "answer_tokens": self.answer_tokens,
            "answer_duration_s": self.answer_duration_s,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["stage", "seconds", "percent"])
        for t in self.timings:
            writer.writerow([t.stage_name, repr(t.wall_seconds), f"{t.percent_of_total:.2f}"])
        return buf.getvalue()


def _report(durations, answer_tokens=0, answer_duration_s=0.0, strict=True):
    names = [n for n, _ in durations]
    if len(set(names)) != len(names):
        raise ContractError(f"stage names must be unique, got {names}")
    secs = [float(s) for _, s in durations]
    if any(s < 0 or not math.isfinite(s) for s in secs):
        raise ContractError("stage durations must be finite and >= 0")
    total = math.fsum(secs)
    if total <= 0 and strict:
        raise ContractError("at least one stage duration must be positive")
    timings = [
        StageTiming(n, s, 100.0 * s / total if total > 0 else 0.0) for n, s in zip(names, secs)
    ]
    return PipelineReport(timings, answer_tokens, answer_duration_s)


def replay_report(durations, answer_tokens=0, answer_duration_s=0.0):
    """Build a report from recorded ``(stage, seconds)`` pairs without running anything."""
    durations = list(durations)
    if not durations:
        raise ContractError("replay needs at least one stage")
    return _report(durations, answer_tokens, answer_duration_s)


def read_replay_csv(path):
    """``stage,seconds`` rows -> list of (name, seconds)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != ["stage", "seconds"]:
            raise FormatError(f"{path}: expected header stage,seconds")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append((row["stage"].strip(), float(row["seconds"])))
            except (ValueError, AttributeError):
                raise FormatError(f"{path}:{lineno}: bad row {row}") from None
    return rows


def run_pipeline(stages, payload=None, include_listening=False, clock=time.perf_counter,
                 answer_tokens=0, answer_duration_s=0.0):
    """Thread ``payload`` through ``stages`` in order, timing each executor.

    The Listening stage is skipped unless ``include_listening`` is set, as
    its latency is the user's speaking time. The final payload is available
    as ``report.output``.

    Raises:
        StageError: A stage raised; ``.report`` covers the stages that
            completed before it.
    """
    stages = [s for s in stages if include_listening or s.name != "Listening"]
    if not stages:
        raise ContractError("pipeline needs at least one stage")
    names = [s.name for s in stages]
    if len(set(names)) != len(names):
        raise ContractError(f"stage names must be unique, got {names}")
    done = []
    for stage in stages:
        start = clock()
        try:
            payload = stage.executor(payload)
        except Exception as exc:
            partial = _report(done, answer_tokens, answer_duration_s, strict=False)
            raise StageError(stage.name, partial, exc) from exc
        done.append((stage.name, max(0.0, clock() - start)))
    report = _report(done, answer_tokens, answer_duration_s, strict=False)
    report.output = payload
    return report


class VirtualClock:
    """Deterministic clock whose ``sleep`` advances time instantly."""

    def __init__(self, start=0.0):
        self.t = start

    def __call__(self):
        return self.t

    def sleep(self, seconds):
        self.t += seconds


def mock_fixed(name, seconds, sleep=time.sleep, kind="mock-fixed"):
    def run(payload):
        sleep(seconds)
        return payload

    return Stage(name, run, kind)


def mock_lognormal(name, median_s, sigma=0.25, seed=0, sleep=time.sleep):
    """Latency drawn from ``median_s * exp(sigma * N(0, 1))``, seeded."""
    rng = np.random.default_rng(seed)

    def run(payload):
        sleep(float(median_s * np.exp(sigma * rng.standard_normal())))
        return payload

    return Stage(name, run, "mock-distribution")


@dataclass(frozen=True)
class Table3Row:
    answer_tokens: int
    answer_duration_s: float
    seconds: tuple  # (STT, Language, TTS, AFE, FrameRendering, AudioOverlay)


TABLE3_STAGES = ("STT", "Language", "TTS", "AFE", "FrameRendering", "AudioOverlay")
TABLE3_ROWS = (
    Table3Row(1, 0.41, (0.06, 0.80, 0.22, 0.29, 4.05, 0.14)),
    Table3Row(8, 1.69, (0.07, 0.96, 0.33, 0.28, 4.75, 0.16)),
    Table3Row(14, 3.63, (0.07, 2.45, 0.44, 0.28, 5.45, 0.14)),
    Table3Row(21, 5.08, (0.1, 2.27, 0.44, 0.28, 5.88, 0.17)),
    Table3Row(30, 6.55, (0.06, 2.76, 0.49, 0.27, 6.58, 0.15)),
    Table3Row(39, 9.55, (0.09, 1.95, 0.78, 0.28, 7.52, 0.18)),
    Table3Row(50, 12.16, (0.07, 2.08, 0.55, 0.28, 8.65, 0.18)),
)


def table3_durations(row):
    return list(zip(TABLE3_STAGES, row.seconds))


def replay_table3(row):
    return replay_report(table3_durations(row), row.answer_tokens, row.answer_duration_s)


def table3_stages(row, latency="fixed", time_scale=1.0, sigma=0.25, seed=0, sleep=time.sleep):
    """Mock stages sized by a Table-3 row, optionally scaled for quick runs."""
    if latency == "fixed":
        return [mock_fixed(n, s * time_scale, sleep) for n, s in table3_durations(row)]
    if latency == "lognormal":
        return [
            mock_lognormal(n, s * time_scale, sigma, seed + i, sleep)
            for i, (n, s) in enumerate(table3_durations(row))
        ]
    raise ContractError(f"latency must be 'fixed' or 'lognormal', got {latency!r}")


def synth_audio(duration_s, seed=0, sample_rate=16000, level=0.1):
    """Seeded Gaussian noise, clipped to [-1, 1]."""
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * sample_rate))
    return AudioBuffer(np.clip(level * rng.standard_normal(n), -1.0, 1.0), sample_rate)


def wav_bytes(audio):
    buf = io.BytesIO()
    write_wav(buf, audio)
    return buf.getvalue()


class ReferenceBackend:
    """WAV bytes -> aligned windows via the reference encoder (load, mel, encode, align)."""

    name = "reference"

    def __init__(self, mel_cfg=None, params=None, align_cfg=None):
        self.mel_cfg = mel_cfg or MelConfig()
        self.params = params or ReferenceEncoderParams(n_mels=self.mel_cfg.n_mels)
        self.align_cfg = align_cfg or AlignConfig()
        self.params.proj  # materialise weights outside the timed region

    def __call__(self, data):
        audio = load_wav(io.BytesIO(data))
        mel = extract_features(audio, self.mel_cfg)
        return align(encode_reference(mel, self.params), self.align_cfg)


@dataclass(frozen=True)
class BenchPoint:
    duration_s: float
    mean_s: float
    std_s: float
    repeats: int
    median_s: float
    samples: tuple
    out_shape: tuple
    input_sha256: str


@dataclass
class BenchCurve:
    points: list
    backend: str = "reference"

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["duration_s", "mean_s", "std_s", "repeats"])
        for p in self.points:
            writer.writerow([f"{p.duration_s:g}", repr(p.mean_s), repr(p.std_s), p.repeats])
        return buf.getvalue()

    def to_dict(self):
        return {
            "backend": self.backend,
            "points": [
                {
                    "duration_s": p.duration_s,
                    "mean_s": p.mean_s,
                    "std_s": p.std_s,
                    "median_s": p.median_s,
                    "repeats": p.repeats,
                    "out_shape": list(p.out_shape),
                }
                for p in self.points
            ],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def bench_afe(backend=None, durations=(1, 2, 4, 8, 16, 30), repeats=5, seed=0,
              sample_rate=16000, clock=time.perf_counter, warmup=1):
    """Time ``backend`` end to end on seeded synthetic audio of each duration.

    One warm-up call per duration is discarded. The same seed gives the same
    input bytes regardless of ``repeats`` (see ``BenchPoint.input_sha256``).
    """
    backend = backend or ReferenceBackend()
    durations = [float(d) for d in durations]
    if not durations:
        raise ContractError("durations must not be empty")
    if any(b <= a for a, b in zip(durations, durations[1:])) or durations[0] <= 0:
        raise ContractError(f"durations must be positive and strictly increasing: {durations}")
    if repeats < 1:
        raise ContractError("repeats must be >= 1")
    points = []
    for d in durations:
        data = wav_bytes(synth_audio(d, seed, sample_rate))
        try:
            for _ in range(warmup):
                backend(data)
            times = []
            for _ in range(repeats):
                start = clock()
                out = backend(data)
                times.append(clock() - start)
        except AfeError:
            raise
        except Exception as exc:
            raise AfeError(f"AFE backend failed at {d:g} s: {exc}") from exc
        points.append(BenchPoint(
            duration_s=d,
            mean_s=statistics.fmean(times),
            std_s=statistics.stdev(times) if len(times) > 1 else 0.0,
            repeats=repeats,
            median_s=statistics.median(times),
            samples=tuple(times),
            out_shape=tuple(getattr(out, "shape", ())),
            input_sha256=hashlib.sha256(data).hexdigest(),
        ))
    return BenchCurve(points, getattr(backend, "name", type(backend).__name__))


def split_dataset(n_frames, train_fraction=TRAIN_FRACTION):
    """Contiguous train prefix ``[0, floor(f*n))`` and eval suffix ``[floor(f*n), n)``.

    ``f`` is read through its decimal repr so 0.91 * 6700 floors to 6097,
    not to a value perturbed by binary rounding.
    """
    if not isinstance(n_frames, (int, np.integer)) or n_frames < 2:
        raise ContractError(f"need at least 2 frames to split, got {n_frames}")
    if not 0 < train_fraction < 1:
        raise ContractError(f"train_fraction must be in (0, 1), got {train_fraction}")
    cut = math.floor(Fraction(repr(float(train_fraction))) * int(n_frames))
    if cut == 0 or cut == n_frames:
        raise ContractError(f"fraction {train_fraction} leaves an empty split for n={n_frames}")
    return range(0, cut), range(cut, int(n_frames))

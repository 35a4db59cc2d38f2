"""Audio ingest and Whisper-convention log-Mel spectrograms.

Front end: 16 kHz mono, 25 ms Hann window (400 samples), 10 ms hop
(160 samples), reflection-padded centred frames, power spectrum, 80
triangular filters on the Slaney mel scale, ``log10`` with a 1e-10 floor.
:func:`normalize_log_mel` then applies Whisper's clamp-and-scale.
"""

import functools
import math
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.io.wavfile
import scipy.signal

from . import tensorio
from .errors import ContractError, FormatError, ShapeError, UnsupportedError

SAMPLE_RATE = 16000
WINDOW_MS = 25.0
HOP_MS = 10.0
N_MELS = 80
LOG_FLOOR = 1e-10
DYNAMIC_RANGE = 8.0  # log10 units kept below the per-utterance max


@dataclass(frozen=True)
class AudioBuffer:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float32)
        if samples.ndim != 1:
            raise ContractError(f"AudioBuffer needs 1-D samples, got shape {samples.shape}")
        if self.sample_rate <= 0:
            raise ContractError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(samples)):
            raise ContractError("AudioBuffer samples must be finite")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def duration_s(self):
        return len(self.samples) / self.sample_rate

    def __len__(self):
        return len(self.samples)


@dataclass(frozen=True)
class MelConfig:
    sample_rate: int = SAMPLE_RATE
    window_ms: float = WINDOW_MS
    hop_ms: float = HOP_MS
    n_mels: int = N_MELS
    fmin: float = 0.0
    fmax: float = 8000.0

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ContractError("sample_rate must be positive")
        if self.n_mels < 1:
            raise ContractError("n_mels must be >= 1")
        if not 0 <= self.fmin < self.fmax <= self.sample_rate / 2:
            raise ContractError(
                f"need 0 <= fmin < fmax <= sample_rate/2, got fmin={self.fmin} "
                f"fmax={self.fmax} sr={self.sample_rate}"
            )
        if self.n_fft < 2 or self.hop < 1:
            raise ContractError(f"window/hop too short: n_fft={self.n_fft} hop={self.hop}")

    @property
    def n_fft(self):
        return round(self.window_ms / 1000.0 * self.sample_rate)

    @property
    def hop(self):
        return round(self.hop_ms / 1000.0 * self.sample_rate)


@dataclass(frozen=True)
class MelSpectrogram:
    """Time-major matrix of shape ``(T_mel, n_mels)``."""

    frames: np.ndarray
    config: MelConfig = field(default_factory=MelConfig)
    normalized: bool = False

    @property
    def frame_rate_hz(self):
        return self.config.sample_rate / self.config.hop

    @property
    def shape(self):
        return self.frames.shape


def load_wav(path):
    """Read a PCM16 or float32 RIFF/WAVE file and downmix it to mono.

    Args:
        path: Filesystem path or binary file-like object.

    Returns:
        AudioBuffer with samples scaled to [-1, 1] (int16 divided by 32768).

    Raises:
        FormatError: The RIFF structure is broken.
        UnsupportedError: A codec or sample width other than PCM16/float32.
    """
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.io.wavfile.WavFileWarning)
            rate, data = scipy.io.wavfile.read(path)
    except ValueError as exc:
        msg = str(exc)
        if "Unknown wave file format" in msg or "Unsupported" in msg:
            raise UnsupportedError(msg) from None
        raise FormatError(f"malformed WAV: {msg}") from None
    except (EOFError, struct.error) as exc:
        raise FormatError(f"truncated WAV: {exc}") from None

    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise UnsupportedError(f"unsupported sample type {data.dtype}; need PCM16 or float32")
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    return AudioBuffer(samples, int(rate))


def write_wav(path, audio, pcm16=True):
    """Write ``audio`` as a mono WAV, PCM16 by default, else float32."""
    if pcm16:
        data = np.clip(np.round(audio.samples.astype(np.float64) * 32768.0), -32768, 32767)
        data = data.astype(np.int16)
    else:
        data = audio.samples.astype(np.float32)
    scipy.io.wavfile.write(path, audio.sample_rate, data)


def resample(audio, target_rate):
    """Polyphase (Kaiser-windowed FIR) resampling to ``target_rate`` Hz."""
    if target_rate <= 0:
        raise ContractError(f"target_rate must be positive, got {target_rate}")
    target_rate = int(target_rate)
    if target_rate == audio.sample_rate:
        return audio
    g = math.gcd(target_rate, audio.sample_rate)
    up, down = target_rate // g, audio.sample_rate // g
    out = scipy.signal.resample_poly(audio.samples.astype(np.float64), up, down)
    return AudioBuffer(out, target_rate)


def hz_to_mel(freq):
    """Slaney mel scale: linear below 1 kHz, logarithmic above."""
    freq = np.asarray(freq, dtype=np.float64)
    f_sp = 200.0 / 3
    min_log_hz = 1000.0
    min_log_mel = min_log_hz / f_sp
    logstep = math.log(6.4) / 27.0
    linear = freq / f_sp
    with np.errstate(divide="ignore"):
        log_part = min_log_mel + np.log(np.maximum(freq, 1e-300) / min_log_hz) / logstep
    return np.where(freq >= min_log_hz, log_part, linear)


def mel_to_hz(mels):
    mels = np.asarray(mels, dtype=np.float64)
    f_sp = 200.0 / 3
    min_log_hz = 1000.0
    min_log_mel = min_log_hz / f_sp
    logstep = math.log(6.4) / 27.0
    return np.where(
        mels >= min_log_mel,
        min_log_hz * np.exp(logstep * (mels - min_log_mel)),
        f_sp * mels,
    )


def mel_center_frequencies(cfg):
    """Centre frequency (Hz) of every filter, length ``n_mels``."""
    edges = mel_to_hz(np.linspace(hz_to_mel(cfg.fmin), hz_to_mel(cfg.fmax), cfg.n_mels + 2))
    return edges[1:-1]


@functools.lru_cache(maxsize=16)
def mel_filterbank(cfg):
    """Triangular filters, shape ``(n_mels, n_fft//2 + 1)``, each with peak 1."""
    edges = mel_to_hz(np.linspace(hz_to_mel(cfg.fmin), hz_to_mel(cfg.fmax), cfg.n_mels + 2))
    fft_freqs = np.arange(cfg.n_fft // 2 + 1) * cfg.sample_rate / cfg.n_fft
    left, center, right = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (fft_freqs[None, :] - left) / (center - left)
    falling = (right - fft_freqs[None, :]) / (right - center)
    weights = np.maximum(0.0, np.minimum(rising, falling))
    peaks = weights.max(axis=1)
    if np.any(peaks <= 0):
        empty = np.flatnonzero(peaks <= 0).tolist()
        raise ContractError(f"mel filters {empty} cover no FFT bin; lower n_mels or raise n_fft")
    return weights / peaks[:, None]


def _frames(samples, n_fft, hop):
    n = len(samples)
    n_frames = -(-n // hop)
    pad = n_fft // 2
    padded = np.pad(samples, (pad, pad), mode="reflect" if n > 1 else "edge")
    view = np.lib.stride_tricks.sliding_window_view(padded, n_fft)
    return view[: n_frames * hop : hop][:n_frames]


def power_spectrogram(samples, cfg):
    """``|STFT|^2`` of centred Hann frames, shape ``(T_mel, n_fft//2 + 1)``."""
    window = scipy.signal.get_window("hann", cfg.n_fft, fftbins=True)
    frames = _frames(np.asarray(samples, dtype=np.float64), cfg.n_fft, cfg.hop)
    spec = np.fft.rfft(frames * window, n=cfg.n_fft, axis=-1)
    return spec.real**2 + spec.imag**2


def log_mel_spectrogram(audio, cfg=None):
    """Raw ``log10`` mel energies of ``audio``; ``T_mel == ceil(len/hop)``."""
    cfg = cfg or MelConfig()
    if audio.sample_rate != cfg.sample_rate:
        raise ContractError(
            f"audio is {audio.sample_rate} Hz but MelConfig expects {cfg.sample_rate} Hz; "
            "resample first"
        )
    if len(audio) < 1:
        raise ContractError("cannot analyse an empty AudioBuffer")
    mel = power_spectrogram(audio.samples, cfg) @ mel_filterbank(cfg).T
    log_mel = np.log10(np.maximum(mel, LOG_FLOOR))
    return MelSpectrogram(log_mel.astype(np.float32), cfg, normalized=False)


def normalize_log_mel(mel):
    """Whisper clamp-and-scale: floor at ``max - 8``, then ``(x + 4) / 4``."""
    x = mel.frames.astype(np.float64)
    x = np.maximum(x, x.max() - DYNAMIC_RANGE)
    x = (x + 4.0) / 4.0
    return MelSpectrogram(x.astype(np.float32), mel.config, normalized=True)


def extract_features(audio, cfg=None):
    """Resample to ``cfg.sample_rate`` if needed, then normalised log-mel."""
    cfg = cfg or MelConfig()
    if audio.sample_rate != cfg.sample_rate:
        audio = resample(audio, cfg.sample_rate)
    return normalize_log_mel(log_mel_spectrogram(audio, cfg))


def export_mel(mel, path):
    tensorio.write_tensor(
        path, mel.frames, "mel", rate_hz=float(mel.frame_rate_hz), normalized=mel.normalized
    )


def import_mel(path, cfg=None):
    """Read a ``kind: mel`` tensor; ``cfg`` is attached as-is (not stored in the file)."""
    frames, header = tensorio.read_tensor(path, kind="mel")
    if len(header["shape"]) != 2:
        raise ShapeError(f"mel tensor must be 2-D, header shape {header['shape']}")
    cfg = cfg or MelConfig()
    if frames.shape[1] != cfg.n_mels:
        raise ShapeError(f"file has {frames.shape[1]} mel bins, config says {cfg.n_mels}")
    return MelSpectrogram(frames, cfg, normalized=bool(header.get("normalized", True)))

"""Whisper-style audio features, audio-to-video alignment, talking-head
quality metrics and pipeline latency analysis."""

from .aligner import AlignConfig, AlignedFeatureTensor, align, frame_center, window_count
from .audio import (
    AudioBuffer,
    MelConfig,
    MelSpectrogram,
    extract_features,
    load_wav,
    log_mel_spectrogram,
    normalize_log_mel,
    resample,
)
from .encoder import (
    EmbeddingMatrix,
    ReferenceEncoderParams,
    encode_reference,
    export_embeddings,
    import_embeddings,
)
from .harness import bench_afe, replay_report, run_pipeline, split_dataset

__version__ = "0.1.0"

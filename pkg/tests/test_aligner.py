import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afekit.aligner import (
    AlignConfig,
    align,
    export_aligned,
    frame_center,
    import_aligned,
    window_count,
)
from afekit.audio import AudioBuffer, extract_features
from afekit.encoder import EmbeddingMatrix, encode_reference
from afekit.errors import AlignmentError, ContractError


def brute_count(t_enc, w, s, p):
    length = t_enc + 2 * p
    count, start = 0, 0
    while start + w <= length:
        count += 1
        start += s
    return count


def brute_gather(rows, w, s, p):
    t_enc, c = rows.shape
    padded = [[0.0] * c for _ in range(p)] + rows.tolist() + [[0.0] * c for _ in range(p)]
    n = brute_count(t_enc, w, s, p)
    return np.array([[padded[i * s + j] for j in range(w)] for i in range(n)])


def test_paper_count():
    assert window_count(1500) == 750


def test_exact_fit():
    assert window_count(16, AlignConfig(16, 1, 0)) == 1


def test_short_sequence_count():
    assert window_count(10) == 5 == brute_count(10, 16, 2, 7)


def test_window_too_long():
    with pytest.raises(ContractError):
        window_count(1, AlignConfig(16, 2, 7))


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 200), st.integers(1, 24), st.integers(1, 4), st.integers(0, 8))
def test_count_law(t_enc, w, s, p):
    if w > t_enc + 2 * p:
        return
    assert window_count(t_enc, AlignConfig(w, s, p)) == brute_count(t_enc, w, s, p)


def test_identity_window():
    emb = EmbeddingMatrix(np.arange(5, dtype=float)[None, :], enc_frame_rate_hz=25.0)
    out = align(emb, AlignConfig(1, 1, 0, 25.0))
    assert out.shape == (1, 1, 5)
    assert np.array_equal(out.data[0, 0], emb.rows[0])


def test_gather_matches_brute_force():
    rows = np.random.default_rng(0).standard_normal((40, 8))
    out = align(EmbeddingMatrix(rows, 50.0))
    expect = brute_gather(np.asarray(rows, np.float32).astype(np.float64), 16, 2, 7)
    assert out.shape == expect.shape == (20, 16, 8)
    assert np.array_equal(out.data, expect.astype(np.float32))


def test_thirty_seconds_end_to_end():
    audio = AudioBuffer(np.random.default_rng(1).normal(0, 0.1, 480000), 16000)
    assert align(encode_reference(extract_features(audio))).shape == (750, 16, 384)


@pytest.mark.parametrize("seconds", [1, 2, 3, 7])
def test_duration_chain(seconds):
    audio = AudioBuffer(np.random.default_rng(seconds).normal(0, 0.1, 16000 * seconds), 16000)
    assert align(encode_reference(extract_features(audio))).n_frames == 25 * seconds


def test_rate_mismatch():
    emb = EmbeddingMatrix(np.zeros((100, 4)), enc_frame_rate_hz=100.0)
    with pytest.raises(AlignmentError) as info:
        align(emb)
    assert info.value.enc_rate_hz == 100.0 and info.value.expected_rate_hz == 50.0


def test_rate_mismatch_override():
    emb = EmbeddingMatrix(np.zeros((100, 4)), enc_frame_rate_hz=100.0)
    out = align(emb, recompute_stride=True)
    assert out.shape == (window_count(100, AlignConfig(16, 4, 7)), 16, 4)


def test_padding_neutrality():
    rows = np.random.default_rng(2).uniform(1, 2, (60, 3))
    cfg = AlignConfig()
    out = align(EmbeddingMatrix(rows, 50.0), cfg).data
    for i in range(out.shape[0]):
        start = i * cfg.s - cfg.p
        if start >= 0 and start + cfg.w <= 60:
            assert np.all(out[i] != 0)


def test_permutation_is_pure_gather():
    rows = np.random.default_rng(3).standard_normal((30, 2)).astype(np.float32)
    a, b = 4, 17
    swapped = rows.copy()
    swapped[[a, b]] = swapped[[b, a]]
    out = align(EmbeddingMatrix(rows, 50.0)).data
    out_s = align(EmbeddingMatrix(swapped, 50.0)).data
    cfg = AlignConfig()
    for i in range(out.shape[0]):
        for j in range(cfg.w):
            src = i * cfg.s + j - cfg.p
            expect = {a: rows[b], b: rows[a]}.get(src, out[i, j])
            assert np.array_equal(out_s[i, j], expect)


def test_frame_center():
    assert frame_center(0) == 0.5
    assert frame_center(0, AlignConfig(1, 1, 0)) == 0
    c = frame_center(749, t_enc=1500)
    assert c == 1498.5 and 0 <= c <= 1499
    with pytest.raises(ContractError):
        frame_center(750, t_enc=1500)


def test_aligned_roundtrip(tmp_path):
    out = align(EmbeddingMatrix(np.random.default_rng(4).standard_normal((20, 6)), 50.0))
    export_aligned(out, tmp_path / "a.f32")
    back = import_aligned(tmp_path / "a.f32")
    assert back.data.tobytes() == out.data.tobytes()
    assert back.video_fps == 25.0

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from afekit.errors import ContractError, NumericalError, ShapeError
from afekit.metrics import (
    AUVector,
    EmbeddingPairSeries,
    FeatureSet,
    ImageFrame,
    LandmarkSet,
    aue_lower,
    covariance_product_root,
    fid,
    lmd,
    lpips,
    patch_distance,
    psnr,
    sqrtm_psd,
    ssim,
    sync_conf,
)
from afekit.metrics.facial import LOWER_FACE_AUS, au_key


def _img(rng, h=8, w=8, c=3):
    return ImageFrame(rng.integers(0, 256, (h, w, c)).astype(np.uint8), 255)


# PSNR

def test_psnr_identical_is_inf(rng):
    a = _img(rng)
    assert psnr(a, a) == math.inf


def test_psnr_ten_db():
    a = ImageFrame(np.zeros((1, 10, 1)), 255)
    px = np.zeros((1, 10, 1))
    px[0, 0, 0] = 255.0  # MSE = 255^2 / 10 = 6502.5
    assert psnr(a, ImageFrame(px, 255)) == pytest.approx(10.0, abs=1e-12)


def test_psnr_matches_naive(rng):
    a, b = _img(rng), _img(rng)
    assert psnr(a, b) == pytest.approx(oracles.psnr(a.pixels.tolist(), b.pixels.tolist(), 255), abs=1e-9)


def test_psnr_shift_invariance(rng):
    a = ImageFrame(rng.uniform(0, 100, (6, 6, 3)), 255)
    b = ImageFrame(rng.uniform(0, 100, (6, 6, 3)), 255)
    shifted = psnr(ImageFrame(a.pixels + 50, 255), ImageFrame(b.pixels + 50, 255))
    assert shifted == pytest.approx(psnr(a, b), abs=1e-9)


def test_psnr_shape_mismatch(rng):
    with pytest.raises(ShapeError):
        psnr(_img(rng, 8, 8), _img(rng, 8, 9))


# SSIM

def test_ssim_identical(rng):
    a = _img(rng, 16, 16)
    assert ssim(a, a) == pytest.approx(1.0, abs=1e-12)


def test_ssim_constant_frames():
    a = ImageFrame(np.full((12, 12, 1), 77.0), 255)
    assert ssim(a, ImageFrame(np.full((12, 12, 1), 77.0), 255)) == pytest.approx(1.0, abs=1e-12)


def test_ssim_matches_window_oracle(rng):
    a, b = _img(rng, 16, 16), _img(rng, 16, 16)
    assert ssim(a, b) == pytest.approx(oracles.ssim(a.pixels.tolist(), b.pixels.tolist(), 255), abs=1e-6)


def test_ssim_symmetric_and_bounded(rng):
    a, b = _img(rng, 20, 24, 1), _img(rng, 20, 24, 1)
    assert abs(ssim(a, b) - ssim(b, a)) <= 1e-12
    assert ssim(a, b) <= 1.0


def test_ssim_too_small(rng):
    with pytest.raises(ContractError):
        ssim(_img(rng, 10, 40), _img(rng, 10, 40))


# LPIPS-style patch distance

def test_lpips_identical(rng):
    a = _img(rng, 32, 32)
    assert lpips(a, a) == 0.0
    assert lpips(a, a, embedder=lambda f: f.pixels.reshape(-1, 3)) == 0.0


def test_lpips_single_patch_345():
    zero = ImageFrame(np.zeros((1, 1)), 1)
    one = ImageFrame(np.ones((1, 1)), 1)
    emb = lambda f: np.array([[0.0, 0.0]]) if f.pixels[0, 0, 0] == 0 else np.array([[3.0, 4.0]])
    assert lpips(zero, one, emb) == 5.0


def test_lpips_matches_patch_oracle(rng):
    a, b = _img(rng, 32, 32), _img(rng, 32, 32)
    assert lpips(a, b) == pytest.approx(oracles.lpips(a.pixels.tolist(), b.pixels.tolist(), 255), abs=1e-9)


def test_lpips_uneven_grid(rng):
    a, b = _img(rng, 19, 27, 1), _img(rng, 19, 27, 1)
    assert lpips(a, b) == pytest.approx(oracles.lpips(a.pixels.tolist(), b.pixels.tolist(), 255), abs=1e-12)


def test_patch_count_mismatch():
    with pytest.raises(ShapeError):
        patch_distance(np.zeros((4, 2)), np.zeros((5, 2)))


# LMD

def test_lmd_cases(rng):
    pts = rng.uniform(0, 512, (68, 2))
    assert lmd(LandmarkSet(pts), LandmarkSet(pts)) == 0.0
    assert lmd(LandmarkSet([[1, 1]]), LandmarkSet([[4, 5]])) == 5.0
    other = rng.uniform(0, 512, (68, 2))
    assert lmd(LandmarkSet(pts), LandmarkSet(other)) == pytest.approx(
        oracles.lmd(pts.tolist(), other.tolist()), abs=1e-12
    )
    with pytest.raises(ShapeError):
        lmd(LandmarkSet(pts), LandmarkSet(pts[:10]))


# AUE

def test_au_key_forms():
    assert au_key(12) == au_key("12") == au_key("au12") == au_key("AU012") == "AU12"


def test_aue_cases(rng):
    base = {k: 1.0 for k in LOWER_FACE_AUS}
    assert aue_lower(AUVector(base), AUVector(base)) == 0.0
    bumped = dict(base, AU25=2.0, AU1=4.0)  # AU1 is upper face, ignored
    assert aue_lower(AUVector(base), AUVector(bumped)) == pytest.approx(1 / 9, abs=1e-15)
    ra = {k: float(v) for k, v in zip(LOWER_FACE_AUS, rng.uniform(0, 5, 9))}
    rb = {k: float(v) for k, v in zip(LOWER_FACE_AUS, rng.uniform(0, 5, 9))}
    assert aue_lower(AUVector(ra), AUVector(rb)) == pytest.approx(oracles.aue(ra, rb, LOWER_FACE_AUS), abs=1e-12)


def test_aue_missing_au():
    with pytest.raises(ContractError):
        aue_lower(AUVector({"AU12": 1.0}), AUVector({"AU12": 1.0}))


def test_aue_custom_subset():
    a = AUVector({"AU12": 1.0, "AU25": 0.0}, subset=("AU12", "AU25"))
    b = AUVector({"AU12": 3.0, "AU25": 0.0}, subset=("AU12", "AU25"))
    assert aue_lower(a, b) == 2.0


# FID

def test_fid_identical_distribution(rng):
    x = rng.standard_normal((50, 6))
    fs = FeatureSet.from_vectors(x)
    assert fid(fs, FeatureSet.from_vectors(x.copy())) == pytest.approx(0.0, abs=1e-6)


def test_fid_one_dim():
    assert fid(FeatureSet([0.0], [[1.0]]), FeatureSet([1.0], [[1.0]])) == pytest.approx(1.0, abs=1e-9)


def test_fid_diagonal_closed_form(rng):
    mu_r, mu_g = rng.standard_normal(3), rng.standard_normal(3)
    var_r, var_g = rng.uniform(0.1, 4, 3), rng.uniform(0.1, 4, 3)
    got = fid(FeatureSet(mu_r, np.diag(var_r)), FeatureSet(mu_g, np.diag(var_g)))
    expect = oracles.fid_diagonal(mu_r.tolist(), var_r.tolist(), mu_g.tolist(), var_g.tolist())
    assert got == pytest.approx(expect, abs=1e-8)


def test_fid_symmetric(rng):
    a = FeatureSet.from_vectors(rng.standard_normal((40, 5)))
    b = FeatureSet.from_vectors(rng.standard_normal((40, 5)) * 2 + 1)
    assert abs(fid(a, b) - fid(b, a)) <= 1e-8


def test_fid_errors(rng):
    with pytest.raises(ShapeError):
        fid(FeatureSet.from_vectors(rng.standard_normal((5, 2))), FeatureSet.from_vectors(rng.standard_normal((5, 3))))
    with pytest.raises(ContractError):
        FeatureSet.from_vectors(rng.standard_normal((1, 3)))
    with pytest.raises(ContractError):
        FeatureSet([0, 0], [[1, 0], [0, -1]])


def test_sqrtm_rejects_indefinite():
    with pytest.raises(NumericalError):
        sqrtm_psd(np.diag([1.0, -0.5]))


def test_sqrtm_clamps_roundoff():
    x = sqrtm_psd(np.diag([4.0, -1e-14]))
    assert np.allclose(x, np.diag([2.0, 0.0]))


def test_covariance_product_root(rng):
    a = rng.standard_normal((6, 6))
    b = rng.standard_normal((6, 6))
    sr, sg = a @ a.T + 0.1 * np.eye(6), b @ b.T + 0.1 * np.eye(6)
    x, m = covariance_product_root(sr, sg)
    assert np.linalg.norm(x @ x - m) <= 1e-6 * np.linalg.norm(m)
    # trace of the root equals sum of sqrt eigenvalues of the raw product
    eig = np.linalg.eigvals(sr @ sg).real
    assert np.trace(x) == pytest.approx(np.sqrt(eig).sum(), rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 30), st.integers(1, 8), st.integers(0, 2**31))
def test_fid_self_zero(n, d, seed):
    x = np.random.default_rng(seed).standard_normal((n, d))
    fs = FeatureSet.from_vectors(x)
    assert fid(fs, fs) == pytest.approx(0.0, abs=1e-6)


# Sync

def test_sync_cases():
    v = np.eye(3)
    assert sync_conf(EmbeddingPairSeries(v, v)) == pytest.approx(1.0, abs=1e-15)
    assert sync_conf(EmbeddingPairSeries(np.eye(2), np.eye(2)[::-1])) == 0.0
    assert sync_conf(EmbeddingPairSeries([[1, 0]], [[1, 1]])) == pytest.approx(1 / math.sqrt(2), abs=1e-12)


def test_sync_eps_floor():
    assert sync_conf(EmbeddingPairSeries([[0.0, 0.0]], [[1.0, 0.0]])) == 0.0
    tiny = EmbeddingPairSeries([[1e-5, 0.0]], [[1e-5, 0.0]])
    assert sync_conf(tiny) == pytest.approx(1e-10 / 1e-8)


def test_sync_shape_mismatch():
    with pytest.raises(ShapeError):
        EmbeddingPairSeries(np.ones((3, 2)), np.ones((3, 4)))


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (6, 4), elements=st.floats(-10, 10)),
       arrays(np.float64, (6, 4), elements=st.floats(-10, 10)))
def test_sync_bounds(v, s):
    val = sync_conf(EmbeddingPairSeries(v, s))
    assert -1 - 1e-12 <= val <= 1 + 1e-12


@pytest.mark.parametrize("scale", [0.5, 2.0, 10.0])
def test_sync_rescaling(rng, scale):
    v, s = rng.standard_normal((20, 8)), rng.standard_normal((20, 8))
    base = sync_conf(EmbeddingPairSeries(v, s))
    v2 = v.copy()
    v2[3] *= scale
    s2 = s * scale
    assert sync_conf(EmbeddingPairSeries(v2, s2)) == pytest.approx(base, abs=1e-9)


# pseudometric properties

@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_pseudometrics(seed):
    rng = np.random.default_rng(seed)
    a, b = _img(rng, 16, 16), _img(rng, 16, 16)
    assert lpips(a, b) >= 0 and lpips(a, b) == lpips(b, a) and lpips(a, a) == 0
    pa, pb = LandmarkSet(rng.uniform(0, 99, (5, 2))), LandmarkSet(rng.uniform(0, 99, (5, 2)))
    assert lmd(pa, pb) >= 0 and lmd(pa, pb) == lmd(pb, pa) and lmd(pa, pa) == 0
    ua = AUVector(dict(zip(LOWER_FACE_AUS, rng.uniform(0, 5, 9))))
    ub = AUVector(dict(zip(LOWER_FACE_AUS, rng.uniform(0, 5, 9))))
    assert aue_lower(ua, ub) >= 0 and aue_lower(ua, ub) == aue_lower(ub, ua) and aue_lower(ua, ua) == 0

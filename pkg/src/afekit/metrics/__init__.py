from .facial import LOWER_FACE_AUS, AUVector, LandmarkSet, aue_lower, lmd, read_aus_csv, read_landmarks_csv
from .fid import FeatureSet, covariance_product_root, fid, sqrtm_psd
from .image import (
    ImageFrame,
    PatchStatsEmbedder,
    SSIMConfig,
    load_image,
    lpips,
    patch_distance,
    psnr,
    save_image,
    ssim,
    ssim_map,
)
from .suite import METRICS, QualityReport, evaluate_suite
from .sync import EmbeddingPairSeries, sync_conf, sync_scores

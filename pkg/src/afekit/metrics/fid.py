"""Frechet distance between Gaussian fits of two feature sets."""

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError, NumericalError, ShapeError

NEG_EIG_TOL = 1e-8


@dataclass(frozen=True)
class FeatureSet:
    """Mean and covariance of a feature cloud; ``n_samples`` is None for given moments."""

    mu: np.ndarray
    sigma: np.ndarray
    n_samples: int = None

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=np.float64))
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=np.float64))
        d = mu.shape[0]
        if mu.ndim != 1 or sigma.shape != (d, d):
            raise ShapeError(f"mu {mu.shape} and sigma {sigma.shape} are inconsistent")
        scale = max(np.abs(sigma).max(), 1e-300)
        if np.abs(sigma - sigma.T).max() > 1e-8 * scale:
            raise ContractError("covariance is not symmetric")
        sigma = (sigma + sigma.T) / 2
        if d and np.linalg.eigvalsh(sigma).min() < -NEG_EIG_TOL * np.linalg.norm(sigma, 2):
            raise ContractError("covariance is not positive semidefinite")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def from_vectors(cls, vectors):
        x = np.asarray(vectors, dtype=np.float64)
        if x.ndim != 2:
            raise ShapeError(f"feature vectors must be (n, d), got {x.shape}")
        if x.shape[0] < 2:
            raise ContractError(f"need at least 2 samples for a covariance, got {x.shape[0]}")
        return cls(x.mean(axis=0), np.atleast_2d(np.cov(x, rowvar=False)), x.shape[0])

    @property
    def dim(self):
        return self.mu.shape[0]


def sqrtm_psd(m):
    """Square root of a symmetric PSD matrix by eigendecomposition.

    Eigenvalues below ``-1e-8 * ||m||_2`` raise NumericalError; smaller
    negative round-off is clamped to zero.
    """
    m = np.asarray(m, dtype=np.float64)
    m = (m + m.T) / 2
    evals, evecs = np.linalg.eigh(m)
    norm = np.abs(evals).max() if evals.size else 0.0
    if evals.size and evals.min() < -NEG_EIG_TOL * norm:
        raise NumericalError(f"matrix has eigenvalue {evals.min():.3e}, not PSD")
    root = np.sqrt(np.clip(evals, 0.0, None))
    return (evecs * root) @ evecs.T


def covariance_product_root(sigma_r, sigma_g):
    """Return ``(X, M)`` with ``M = S_g Sigma_r S_g`` (``S_g = Sigma_g^1/2``) and ``X = M^1/2``.

    ``Tr X`` equals ``Tr sqrt(Sigma_r Sigma_g)``; ``M`` is symmetric PSD, unlike
    the raw product.
    """
    s_g = sqrtm_psd(sigma_g)
    m = s_g @ sigma_r @ s_g
    m = (m + m.T) / 2
    return sqrtm_psd(m), m


def fid(real, gen):
    """``||mu_r - mu_g||^2 + Tr(Sigma_r + Sigma_g - 2 sqrt(Sigma_r Sigma_g))``, clamped at 0."""
    if real.dim != gen.dim:
        raise ShapeError(f"feature dims differ: {real.dim} vs {gen.dim}")
    for fs, side in ((real, "real"), (gen, "gen")):
        if fs.n_samples is not None and fs.n_samples < 2:
            raise ContractError(f"{side} set has fewer than 2 samples")
    root, _ = covariance_product_root(real.sigma, gen.sigma)
    diff = real.mu - gen.mu
    value = diff @ diff + np.trace(real.sigma) + np.trace(gen.sigma) - 2 * np.trace(root)
    return float(max(value, 0.0))

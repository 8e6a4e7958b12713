"""
Shared fixtures: seeded generators and a random cross-section factory.

Random matrices are assembled from orthonormal frames and singular values
drawn from [0.5, 2], so ranks are exact and conditioning stays bounded.
Degenerate draws widen the covariance spectrum to [1e-2, 1e2] and add
noise-level directions with singular value 1e-12 on top of a nonzero signal.
"""

from typing import NamedTuple

import numpy as np
import pytest

from linfac.core.model import Characteristics, CrossSectionMoments, FactorWeights
from linfac.factors.builders import build_general_form, build_gls, build_gls_type_generative, build_ols
from linfac.factors.generative import implied_moments, random_spec


class Instance(NamedTuple):
    moments: CrossSectionMoments
    phi: Characteristics
    w: FactorWeights
    kind: str


WEIGHT_KINDS = ("ols", "gls", "general_form", "random", "generative")
MEAN_KINDS = ("in_image", "spanned", "generic", "zero")
NOISE = 1e-12


def frame(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    """Random n x k matrix with orthonormal columns."""
    if k == 0:
        return np.zeros((n, 0))
    q, r = np.linalg.qr(rng.standard_normal((n, k)))
    return q * np.sign(np.diag(r))


def matrix_of_rank(rng: np.random.Generator, rows: int, cols: int, rank: int, noise: int = 0) -> np.ndarray:
    """
    rows x cols matrix of the given rank with nonzero singular values in [0.5, 2].

    noise extra directions with singular value NOISE are added when rank > 0.
    """
    noise = min(noise, min(rows, cols) - rank) if rank else 0
    s = np.concatenate([rng.uniform(0.5, 2.0, size=rank), np.full(noise, NOISE)])
    return (frame(rng, rows, rank + noise) * s) @ frame(rng, cols, rank + noise).T


def psd_of_rank(rng: np.random.Generator, n: int, rank: int, wide: bool = False, noise: int = 0) -> np.ndarray:
    """
    n x n PSD matrix of the given rank with eigenvalues in [0.5, 2].

    wide draws the eigenvalues log-uniformly from [1e-2, 1e2] instead; noise
    adds eigenvalues NOISE as in matrix_of_rank.
    """
    noise = min(noise, n - rank) if rank else 0
    v = frame(rng, n, rank + noise)
    s = 10.0 ** rng.uniform(-2.0, 2.0, size=rank) if wide else rng.uniform(0.5, 2.0, size=rank)
    sigma = (v * np.concatenate([s, np.full(noise, NOISE)])) @ v.T
    return (sigma + sigma.T) / 2


def random_instance(
    rng: np.random.Generator,
    weight_kind: str | None = None,
    mean_kind: str | None = None,
    n: int | None = None,
    m: int | None = None,
    degenerate: bool = False,
) -> Instance:
    """
    Draw one (moments, phi, w) cross-section.

    Covers singular Sigma, rank-deficient Phi, m > n and every weight
    construction; generative instances take their moments from the spec.
    With degenerate, Sigma gets a wide spectrum and Sigma, Phi and random
    weights get noise-level directions.
    """
    noise = 2 if degenerate else 0
    n = int(rng.integers(1, 7)) if n is None else n
    m = int(rng.integers(1, 5)) if m is None else m
    weight_kind = weight_kind or WEIGHT_KINDS[int(rng.integers(len(WEIGHT_KINDS)))]
    mean_kind = mean_kind or MEAN_KINDS[int(rng.integers(len(MEAN_KINDS)))]

    if weight_kind == "generative":
        spec = random_spec(rng, n, m, duplicate_column=bool(rng.integers(2)))
        weights, _ = build_gls_type_generative(spec)
        return Instance(implied_moments(spec, "generative"), spec.phi, weights, weight_kind)

    phi = Characteristics(matrix_of_rank(rng, n, m, int(rng.integers(0, min(n, m) + 1)), noise))
    if weight_kind == "ols":
        w = build_ols(phi)
    elif weight_kind == "gls":
        w = build_gls(phi, psd_of_rank(rng, n, int(rng.integers(0, n + 1))))
    elif weight_kind == "general_form":
        r = matrix_of_rank(rng, m, m, int(rng.integers(0, m + 1)))
        s = matrix_of_rank(rng, n, n, n)
        w = build_general_form(phi, r, s)
    else:
        w = FactorWeights(matrix_of_rank(rng, n, m, int(rng.integers(0, min(n, m) + 1)), noise))

    sigma = psd_of_rank(rng, n, int(rng.integers(0, n + 1)), wide=degenerate, noise=noise)
    if mean_kind == "in_image":
        mu = sigma @ rng.standard_normal(n)
    elif mean_kind == "spanned":
        mu = sigma @ w.w @ rng.standard_normal(m)
    elif mean_kind == "generic":
        mu = rng.standard_normal(n)
    else:
        mu = np.zeros(n)
    return Instance(CrossSectionMoments(mu, sigma, f"{weight_kind}/{mean_kind}"), phi, w, weight_kind)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)


@pytest.fixture
def make_instance():
    """The random_instance factory."""
    return random_instance

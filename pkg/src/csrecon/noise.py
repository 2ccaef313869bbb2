"""Shot noise and AWGN simulation plus per-channel noise variance estimation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy import signal

from .spectral import MultiCube

# Separable [1, -2, 1] (x) [1, -2, 1]; annihilates constants and affine ramps.
LAPLACIAN_DIFFERENCE = np.array([[1.0, -2.0, 1.0], [-2.0, 4.0, -2.0], [1.0, -2.0, 1.0]])


@dataclass(frozen=True, eq=False)
class NoiseCovariance:
    """Diagonal channel noise covariance, stored as its diagonal."""

    variances: NDArray[np.float64]

    def __post_init__(self) -> None:
        v = np.array(self.variances, dtype=float, copy=True).reshape(-1)
        if v.size < 1:
            raise ValueError("need at least one channel variance")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("noise variances must be finite and >= 0")
        v.setflags(write=False)
        object.__setattr__(self, "variances", v)

    @classmethod
    def zeros(cls, n_channels: int) -> NoiseCovariance:
        return cls(np.zeros(n_channels))

    @property
    def n_channels(self) -> int:
        return self.variances.size

    @property
    def matrix(self) -> NDArray[np.float64]:
        return np.diag(self.variances)


@dataclass(frozen=True)
class IntensityLevel:
    """Photon scale ``l`` of the Poisson model; low ``l`` means strong noise."""

    l: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.l) and self.l > 0):
            raise ValueError(f"intensity level must be > 0, got {self.l}")


def channel_rng(seed: int, channel: int) -> np.random.Generator:
    """Independent counter-based stream for one channel of one seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, channel])))


def poisson_corrupt(clean: MultiCube, level: IntensityLevel | float, seed: int) -> MultiCube:
    """Draw ``Poisson(l * value) / l`` independently for every sample."""
    if not isinstance(level, IntensityLevel):
        level = IntensityLevel(level)
    data = clean.data
    if np.any(data < 0):
        raise ValueError("Poisson corruption requires nonnegative input values")
    out = np.empty_like(data)
    for ch in range(data.shape[2]):
        rng = channel_rng(seed, ch)
        out[:, :, ch] = rng.poisson(level.l * data[:, :, ch]) / level.l
    return MultiCube(out)


def awgn_corrupt(clean: MultiCube, variances: NoiseCovariance, seed: int) -> MultiCube:
    """Add zero-mean Gaussian noise with a per-channel variance."""
    data = clean.data
    if variances.n_channels != data.shape[2]:
        raise ValueError(
            f"got {variances.n_channels} variances for {data.shape[2]} channels"
        )
    out = np.array(data, copy=True)
    for ch, var in enumerate(variances.variances):
        if var == 0:
            continue
        rng = channel_rng(seed, ch)
        out[:, :, ch] += rng.normal(0.0, np.sqrt(var), size=data.shape[:2])
    return MultiCube(out)


def estimate_noise_variances(noisy: MultiCube) -> NoiseCovariance:
    """Fast per-channel noise variance estimate.

    Each channel is filtered with the 3x3 Laplacian-difference kernel and
    ``sigma = sqrt(pi / 2) * sum|response| / (6 (W - 2) (H - 2))``.
    """
    h, w, m = noisy.data.shape
    if h < 3 or w < 3:
        raise ValueError(f"noise estimation needs an image of at least 3x3, got {h}x{w}")
    norm = np.sqrt(np.pi / 2) / (6.0 * (w - 2) * (h - 2))
    variances = np.empty(m)
    for ch in range(m):
        response = signal.convolve2d(noisy.data[:, :, ch], LAPLACIAN_DIFFERENCE, mode="valid")
        sigma = norm * np.abs(response).sum()
        variances[ch] = sigma**2
    return NoiseCovariance(variances)


def mean_variance(cov: NoiseCovariance) -> float:
    return float(np.mean(cov.variances))

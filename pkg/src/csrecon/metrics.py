"""Spectral angle and PSNR for reconstructed hyperspectral cubes."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .spectral import HyperCube, Spectrum

# Spectra with an L2 norm below this count as all-zero.
ZERO_NORM = 1e-12


@dataclass(frozen=True)
class EvaluationReport:
    mean_theta: float
    theta_std: float
    psnr: float
    n_evaluated: int
    n_zero_reference: int

    def as_dict(self) -> dict:
        """Flat record with radians, degrees and ``"inf"`` for infinite PSNR."""
        d = asdict(self)
        return {
            "mean_theta_rad": d["mean_theta"],
            "mean_theta_deg": math.degrees(d["mean_theta"]),
            "theta_std_rad": d["theta_std"],
            "psnr_db": "inf" if math.isinf(self.psnr) else self.psnr,
            "n_evaluated": self.n_evaluated,
            "n_zero_reference": self.n_zero_reference,
        }

    def to_text(self) -> str:
        lines = [f"{key}={value}" for key, value in self.as_dict().items()]
        return "\n".join(lines) + "\n"


def _angles(ref: np.ndarray, est: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-row spectral angles and a mask of rows with a nonzero reference."""
    nr = np.linalg.norm(ref, axis=-1)
    ne = np.linalg.norm(est, axis=-1)
    valid = nr >= ZERO_NORM
    theta = np.full(nr.shape, np.pi)
    ok = valid & (ne >= ZERO_NORM)
    # Half-angle form of arccos(u . v): exact for parallel vectors, where
    # arccos of a rounded cosine would leave an error of about 1e-8.
    u = ref[ok] / nr[ok, None]
    v = est[ok] / ne[ok, None]
    theta[ok] = 2.0 * np.arctan2(
        np.linalg.norm(u - v, axis=-1), np.linalg.norm(u + v, axis=-1)
    )
    return theta, valid


def spectral_angle(s, s_hat) -> float:
    """Angle in radians between two spectra.

    A zero estimate of a nonzero spectrum scores the worst value, pi.
    """
    a = s.values if isinstance(s, Spectrum) else np.asarray(s, dtype=float)
    b = s_hat.values if isinstance(s_hat, Spectrum) else np.asarray(s_hat, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"spectra must be 1-D with equal length, got {a.shape} and {b.shape}")
    if np.linalg.norm(a) < ZERO_NORM:
        raise ValueError("spectral angle is undefined for an all-zero reference spectrum")
    theta, _ = _angles(a[None], b[None])
    return float(theta[0])


def _check_pair(reference: HyperCube, estimate: HyperCube) -> None:
    if reference.data.shape != estimate.data.shape:
        raise ValueError(
            f"cube shapes differ: {reference.data.shape} vs {estimate.data.shape}"
        )


def mean_spectral_angle(reference: HyperCube, estimate: HyperCube) -> tuple[float, float]:
    """Mean and standard deviation of the per-pixel spectral angle.

    Pixels whose reference spectrum is all-zero are skipped.
    """
    _check_pair(reference, estimate)
    n = reference.n_bands
    theta, valid = _angles(reference.data.reshape(-1, n), estimate.data.reshape(-1, n))
    if not valid.any():
        raise ValueError("no evaluable pixels: every reference spectrum is all-zero")
    theta = theta[valid]
    return float(theta.mean()), float(theta.std())


def psnr(reference: HyperCube, estimate: HyperCube) -> float:
    """PSNR in dB for cubes with unit peak; identical cubes give ``inf``."""
    _check_pair(reference, estimate)
    mse = float(np.mean((reference.data - estimate.data) ** 2))
    if mse == 0:
        return math.inf
    return -10.0 * math.log10(mse)


def evaluate(reference: HyperCube, estimate: HyperCube) -> EvaluationReport:
    _check_pair(reference, estimate)
    mean, std = mean_spectral_angle(reference, estimate)
    n_zero = int(np.sum(np.linalg.norm(reference.data, axis=-1) < ZERO_NORM))
    return EvaluationReport(
        mean_theta=mean,
        theta_std=std,
        psnr=psnr(reference, estimate),
        n_evaluated=reference.height * reference.width - n_zero,
        n_zero_reference=n_zero,
    )

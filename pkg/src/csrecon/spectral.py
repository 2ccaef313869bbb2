"""Wavelength grids, filter banks, the smoothness prior and the camera model.

The forward model of a multispectral camera is the underdetermined linear
system ``c = F s`` where ``s`` is a spectrum sampled on ``N`` bands and
``F`` is the ``M x N`` filter matrix.  Spectra are assumed smooth, which is
expressed through second-order differences and turned into the spectral
covariance ``K_s = (D2^T D2 + alpha I)^-1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy import linalg

DEFAULT_ALPHA = 1e-6


def _frozen(a, dtype=float) -> NDArray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SpectralGrid:
    """Uniformly sampled wavelength axis ``lambda_min .. lambda_max`` (nm)."""

    lambda_min: float
    lambda_max: float
    n_bands: int

    def __post_init__(self) -> None:
        if not np.isfinite(self.lambda_min) or not np.isfinite(self.lambda_max):
            raise ValueError("wavelength limits must be finite")
        if not self.lambda_min < self.lambda_max:
            raise ValueError(
                f"lambda_min ({self.lambda_min}) must be < lambda_max ({self.lambda_max})"
            )
        if int(self.n_bands) != self.n_bands or self.n_bands < 3:
            raise ValueError(f"n_bands must be an integer >= 3, got {self.n_bands}")
        object.__setattr__(self, "n_bands", int(self.n_bands))
        object.__setattr__(self, "lambda_min", float(self.lambda_min))
        object.__setattr__(self, "lambda_max", float(self.lambda_max))

    @property
    def step(self) -> float:
        return (self.lambda_max - self.lambda_min) / (self.n_bands - 1)

    @property
    def wavelengths(self) -> NDArray[np.float64]:
        k = np.arange(self.n_bands)
        return self.lambda_min + k * self.step


@dataclass(frozen=True, eq=False)
class FilterBank:
    """Sampled filter transmittances, one row per camera channel."""

    grid: SpectralGrid
    responses: NDArray[np.float64]

    def __post_init__(self) -> None:
        r = _frozen(self.responses)
        if r.ndim != 2:
            raise ValueError("responses must be a 2-D (M x N) matrix")
        m, n = r.shape
        if n != self.grid.n_bands:
            raise ValueError(f"responses have {n} columns, grid has {self.grid.n_bands} bands")
        if m < 1 or m >= n:
            raise ValueError(f"need 1 <= M < N for an underdetermined system, got M={m}, N={n}")
        if not np.all(np.isfinite(r)) or np.any(r < 0):
            raise ValueError("filter responses must be finite and nonnegative")
        dead = np.flatnonzero(~np.any(r > 0, axis=1))
        if dead.size:
            raise ValueError(f"filter row(s) {dead.tolist()} are all zero")
        object.__setattr__(self, "responses", r)

    @property
    def n_channels(self) -> int:
        return self.responses.shape[0]

    @property
    def n_bands(self) -> int:
        return self.responses.shape[1]

    def scaled(self, factor: float) -> FilterBank:
        """Return the bank with every response multiplied by ``factor``."""
        if not factor > 0:
            raise ValueError("scale factor must be positive")
        return FilterBank(self.grid, self.responses * factor)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FilterBank):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.responses, other.responses)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class Spectrum:
    grid: SpectralGrid
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        v = _frozen(self.values)
        if v.shape != (self.grid.n_bands,):
            raise ValueError(f"spectrum length {v.shape} does not match grid ({self.grid.n_bands})")
        if not np.all(np.isfinite(v)):
            raise ValueError("spectrum values must be finite")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True, eq=False)
class HyperCube:
    """``H x W x N`` hyperspectral image on a wavelength grid."""

    grid: SpectralGrid
    data: NDArray[np.float64]

    def __post_init__(self) -> None:
        d = _frozen(self.data)
        if d.ndim != 3 or d.shape[2] != self.grid.n_bands:
            raise ValueError(
                f"hypercube data must be H x W x {self.grid.n_bands}, got {d.shape}"
            )
        if d.shape[0] < 1 or d.shape[1] < 1:
            raise ValueError("hypercube must not be empty")
        if not np.all(np.isfinite(d)):
            raise ValueError("hypercube contains non-finite values")
        if np.any(d < 0):
            raise ValueError("hypercube values must be nonnegative")
        object.__setattr__(self, "data", d)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def n_bands(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True, eq=False)
class MultiCube:
    """``H x W x M`` multispectral image.  Negative values only arise from AWGN."""

    data: NDArray[np.float64]

    def __post_init__(self) -> None:
        d = _frozen(self.data)
        if d.ndim != 3:
            raise ValueError(f"multispectral data must be H x W x M, got shape {d.shape}")
        if min(d.shape) < 1:
            raise ValueError("multispectral cube must not be empty")
        if not np.all(np.isfinite(d)):
            raise ValueError("multispectral cube contains non-finite values")
        object.__setattr__(self, "data", d)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def n_channels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True, eq=False)
class SmoothnessPrior:
    """Spectral covariance derived from small second-order differences.

    ``smoothing_matrix`` is ``D2^T D2 + alpha I`` and ``k_s`` its inverse.
    """

    n_bands: int
    alpha: float
    k_s: NDArray[np.float64]
    smoothing_matrix: NDArray[np.float64] = field(repr=False)


class SingularSystemError(np.linalg.LinAlgError):
    """Raised when a symmetric factorization meets a non-positive pivot."""

    def __init__(self, message: str, pivot: int | None = None):
        super().__init__(message)
        self.pivot = pivot


def build_first_difference(rows: int, cols: int) -> NDArray[np.float64]:
    """First-order difference matrix: 1 on the diagonal, -1 on the superdiagonal."""
    if rows < 1 or cols != rows + 1:
        raise ValueError(f"first difference needs cols == rows + 1 >= 2, got {rows}x{cols}")
    d = np.zeros((rows, cols))
    i = np.arange(rows)
    d[i, i] = 1.0
    d[i, i + 1] = -1.0
    return d


def build_second_difference(n_bands: int) -> NDArray[np.float64]:
    """``(N-2) x N`` second-difference matrix, the product of two first differences."""
    if n_bands < 3:
        raise ValueError(f"second differences need n_bands >= 3, got {n_bands}")
    return build_first_difference(n_bands - 2, n_bands - 1) @ build_first_difference(
        n_bands - 1, n_bands
    )


def spd_factor(a: NDArray, what: str = "matrix"):
    """Cholesky factor of a symmetric positive definite matrix.

    Raises :class:`SingularSystemError` naming the first non-positive pivot
    instead of scipy's generic error.
    """
    a = np.asarray(a, dtype=float)
    c, info = linalg.lapack.dpotrf(a, lower=True, clean=True)
    if info > 0:
        raise SingularSystemError(
            f"{what} is not positive definite: non-positive pivot at index {info - 1}",
            pivot=info - 1,
        )
    if info < 0:  # pragma: no cover - lapack argument error
        raise ValueError(f"illegal argument {-info} to dpotrf")
    return c, True


def spd_solve(a: NDArray, b: NDArray, what: str = "matrix") -> NDArray:
    return linalg.cho_solve(spd_factor(a, what), b)


def build_smoothness_prior(n_bands: int, alpha: float = DEFAULT_ALPHA) -> SmoothnessPrior:
    """Spectral covariance ``k_s = (D2^T D2 + alpha I)^-1``."""
    if not (np.isfinite(alpha) and alpha > 0):
        raise ValueError(f"alpha must be > 0, got {alpha}")
    d2 = build_second_difference(n_bands)
    smoothing = d2.T @ d2 + alpha * np.eye(n_bands)
    k_s = spd_solve(smoothing, np.eye(n_bands), "smoothing matrix")
    k_s = 0.5 * (k_s + k_s.T)
    return SmoothnessPrior(
        n_bands=n_bands, alpha=float(alpha), k_s=_frozen(k_s), smoothing_matrix=_frozen(smoothing)
    )


def kron_identity_extend(base: NDArray, t: int) -> NDArray[np.float64]:
    """Block-diagonal ``I_t (x) base``."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    return np.kron(np.eye(t), np.asarray(base, dtype=float))


def kron_ones_extend(base: NDArray, t: int) -> NDArray[np.float64]:
    """``t x t`` tiling of a square matrix, i.e. ``1_{t x t} (x) base``."""
    base = np.asarray(base, dtype=float)
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    if base.ndim != 2 or base.shape[0] != base.shape[1]:
        raise ValueError(f"base must be square, got shape {base.shape}")
    return np.tile(base, (t, t))


def generate_flat_top_bank(
    grid: SpectralGrid,
    n_channels: int = 9,
    sharpness: float = 3.0,
    crossover: float = 0.5,
) -> FilterBank:
    """Evenly spaced super-Gaussian filters ``exp(-((lam - mu) / w) ** (2 p))``.

    Centers are snapped to grid bands so each filter peaks at exactly 1.0.
    The width makes neighbouring filters cross at ``crossover`` of the peak
    (at least; snapping can only shrink gaps below the widest one).
    """
    if n_channels < 2:
        raise ValueError("need at least two channels")
    if n_channels >= grid.n_bands:
        raise ValueError(
            f"n_channels ({n_channels}) must be < n_bands ({grid.n_bands}) "
            "for an underdetermined system"
        )
    if not sharpness > 0:
        raise ValueError("sharpness must be positive")
    if not 0.3 <= crossover < 1:
        raise ValueError("crossover must lie in [0.3, 1)")
    lam = grid.wavelengths
    nominal = np.linspace(grid.lambda_min, grid.lambda_max, n_channels)
    idx = np.rint((nominal - grid.lambda_min) / grid.step).astype(int)
    centers = lam[idx]
    half_gap = np.max(np.diff(centers)) / 2
    width = half_gap / (-np.log(crossover)) ** (1 / (2 * sharpness))
    responses = np.exp(-(np.abs(lam[None, :] - centers[:, None]) / width) ** (2 * sharpness))
    responses[np.arange(n_channels), idx] = 1.0
    return FilterBank(grid, responses)


def forward_capture(scene: HyperCube, bank: FilterBank) -> MultiCube:
    """Noiseless capture ``c = F s`` at every pixel."""
    if scene.grid != bank.grid:
        raise ValueError(f"scene grid {scene.grid} differs from filter grid {bank.grid}")
    return MultiCube(scene.data @ bank.responses.T)


def normalize_peak(cube: MultiCube) -> tuple[MultiCube, float]:
    """Scale a capture so its maximum is 1; returns the cube and the factor used."""
    peak = float(cube.data.max())
    if not peak > 0:
        raise ValueError("cannot normalize a cube whose maximum is not positive")
    return MultiCube(cube.data / peak), 1.0 / peak

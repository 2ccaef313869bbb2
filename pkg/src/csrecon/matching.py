"""Non-local cube matching on multispectral images.

A reference block of ``B x B x M`` samples is compared against every block
whose footprint lies inside a search window centred on it.  Candidates
closer than ``tau`` are kept, sorted by distance and capped at ``mu_c``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from numpy.typing import NDArray

from .noise import NoiseCovariance, mean_variance
from .spectral import DEFAULT_ALPHA, MultiCube

DISTANCE_NORMS = ("mean", "sum")


@dataclass(frozen=True)
class CsrParams:
    """Hyperparameters of collaborative spectral reconstruction.

    ``distance_norm`` selects whether the block distance is the plain sum
    of squared differences or that sum divided by ``block_size**2 * M``.
    ``tau_c`` is calibrated for the mean form.
    """

    block_size: int = 8
    window: int = 33
    step: int = 3
    tau_c: float = 6.0
    mu_c: int = 25
    alpha: float = DEFAULT_ALPHA
    distance_norm: str = "mean"

    def __post_init__(self) -> None:
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        if self.window % 2 != 1 or self.window < self.block_size:
            raise ValueError(f"window must be odd and >= block_size, got {self.window}")
        if self.step < 1:
            raise ValueError("step must be >= 1")
        if not self.tau_c > 0:
            raise ValueError("tau_c must be > 0")
        if self.mu_c < 1:
            raise ValueError("mu_c must be >= 1")
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if self.distance_norm not in DISTANCE_NORMS:
            raise ValueError(f"distance_norm must be one of {DISTANCE_NORMS}")


@dataclass(frozen=True, eq=False)
class MatchSet:
    """A reference block and the ``T`` blocks matched to it.

    ``positions`` is ``T x 2`` (row, col) of block top-left corners; the
    reference is always row 0 with distance 0.
    """

    reference: tuple[int, int]
    positions: NDArray[np.int64]
    distances: NDArray[np.float64]

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def entries(self) -> list[tuple[int, int, float]]:
        return [(int(r), int(c), float(d)) for (r, c), d in zip(self.positions, self.distances)]


def _check_block(image: MultiCube, pos, block: int) -> None:
    r, c = pos
    if block < 1 or r < 0 or c < 0 or r + block > image.height or c + block > image.width:
        raise ValueError(
            f"block of size {block} at {tuple(pos)} exceeds image {image.height}x{image.width}"
        )


def cube_distance(image: MultiCube, a, b, block: int, mean: bool = False) -> float:
    """Sum of squared differences between two ``block x block x M`` cubes.

    With ``mean=True`` the sum is divided by the number of samples.
    """
    _check_block(image, a, block)
    _check_block(image, b, block)
    ca = image.data[a[0] : a[0] + block, a[1] : a[1] + block]
    cb = image.data[b[0] : b[0] + block, b[1] : b[1] + block]
    d = float(np.sum((ca - cb) ** 2))
    return d / ca.size if mean else d


def search_range(ref: int, extent: int, params: CsrParams) -> tuple[int, int]:
    """Inclusive range of candidate top-left coordinates along one axis."""
    lo = params.block_size // 2 - params.window // 2
    hi = lo + params.window - params.block_size
    return max(0, ref + lo), min(extent - params.block_size, ref + hi)


def window_distances(
    image: MultiCube, reference: tuple[int, int], params: CsrParams
) -> tuple[NDArray[np.float64], int, int]:
    """Distances from the reference to every candidate in its search window.

    Returns the ``rows x cols`` distance table and the coordinates of its
    top-left candidate.
    """
    b = params.block_size
    r, c = reference
    r0, r1 = search_range(r, image.height, params)
    c0, c1 = search_range(c, image.width, params)
    region = image.data[r0 : r1 + b, c0 : c1 + b]
    ref = image.data[r : r + b, c : c + b]
    if b == 1:
        d = np.sum((region - ref) ** 2, axis=2)
    else:
        views = sliding_window_view(region, (b, b), axis=(0, 1))
        diff = views - np.moveaxis(ref, 2, 0)
        d = np.einsum("ijkab,ijkab->ij", diff, diff)
    if params.distance_norm == "mean":
        d = d / (b * b * image.n_channels)
    return d, r0, c0


def match_cubes(
    image: MultiCube, reference: tuple[int, int], params: CsrParams, tau: float
) -> MatchSet:
    """Find up to ``mu_c`` blocks within ``tau`` of the reference block."""
    _check_block(image, reference, params.block_size)
    if tau < 0:
        raise ValueError("tau must be >= 0")
    r, c = int(reference[0]), int(reference[1])
    d, r0, c0 = window_distances(image, (r, c), params)
    rows, cols = np.nonzero(d <= tau)
    dist = d[rows, cols]
    rows = rows + r0
    cols = cols + c0
    keep = ~((rows == r) & (cols == c))
    rows, cols, dist = rows[keep], cols[keep], dist[keep]
    order = np.lexsort((cols, rows, dist))[: params.mu_c - 1]
    positions = np.empty((order.size + 1, 2), dtype=np.int64)
    positions[0] = (r, c)
    positions[1:, 0] = rows[order]
    positions[1:, 1] = cols[order]
    distances = np.concatenate([[0.0], dist[order]])
    return MatchSet((r, c), positions, distances)


def compute_tau(cov: NoiseCovariance, params: CsrParams) -> float:
    return params.tau_c * mean_variance(cov)


def _axis_positions(extent: int, block: int, step: int) -> list[int]:
    last = extent - block
    pos = list(range(0, last + 1, step))
    if pos[-1] != last:
        pos.append(last)
    return pos


def reference_positions(height: int, width: int, params: CsrParams) -> list[tuple[int, int]]:
    """Strided grid of reference top-left corners covering every pixel.

    The stride is capped at the block size, otherwise strips between
    blocks would never be reconstructed.
    """
    b = params.block_size
    if height < b or width < b:
        raise ValueError(f"image {height}x{width} is smaller than the {b}x{b} block")
    stride = min(params.step, b)
    rows = _axis_positions(height, b, stride)
    cols = _axis_positions(width, b, stride)
    return [(r, c) for r in rows for c in cols]

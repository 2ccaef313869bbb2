"""Wiener and collaborative (non-local) spectral reconstruction."""

from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy import linalg

from .matching import CsrParams, MatchSet, compute_tau, match_cubes, reference_positions
from .noise import NoiseCovariance
from .spectral import (
    FilterBank,
    HyperCube,
    MultiCube,
    SingularSystemError,
    SmoothnessPrior,
    SpectralGrid,
    Spectrum,
    build_smoothness_prior,
    kron_identity_extend,
    kron_ones_extend,
    spd_factor,
)

# Relative pivot size below which the stacked system counts as singular.
PIVOT_RTOL = 1e-13


@dataclass(frozen=True, eq=False)
class CollaborativeFilter:
    """Linear map from ``t`` stacked multispectral pixels to ``t`` spectra.

    ``weights`` is ``(t N) x (t M)``; input vectors stack the ``M`` channels of
    each matched pixel one after the other.
    """

    t: int
    grid: SpectralGrid
    n_channels: int
    weights: NDArray[np.float64]

    @property
    def n_bands(self) -> int:
        return self.grid.n_bands


def _stacked_weights(f, k_s, variances, t):
    f_hat = kron_identity_extend(f, t)
    k_csr = kron_ones_extend(k_s, t)
    n_hat = kron_identity_extend(np.diag(variances), t)
    k_sc = k_csr @ f_hat.T
    k_c = f_hat @ k_sc + n_hat
    k_c = 0.5 * (k_c + k_c.T)
    factor = spd_factor(k_c, "stacked channel covariance")
    pivots = np.diag(factor[0]) ** 2
    if pivots.min() < PIVOT_RTOL * np.max(np.diag(k_c)):
        i = int(np.argmin(pivots))
        raise SingularSystemError(
            f"stacked channel covariance is numerically singular at pivot {i}", pivot=i
        )
    return linalg.cho_solve(factor, k_sc.T).T


def _reduced_weights(f, k_s, variances, t):
    # Since (1^T (x) I) K_c = (t A + N)(1^T (x) I) with A = F K_s F^T, the
    # stacked filter equals 1_{t x t} (x) K_s F^T (t A + N)^-1.
    k_sf = k_s @ f.T
    a = t * (f @ k_sf) + np.diag(variances)
    factor = spd_factor(0.5 * (a + a.T), "channel covariance")
    block = linalg.cho_solve(factor, k_sf.T).T
    return np.tile(block, (t, t))


FILTER_METHODS = ("reduced", "stacked")


def build_collaborative_filter(
    bank: FilterBank,
    prior: SmoothnessPrior,
    cov: NoiseCovariance,
    t: int,
    method: str = "reduced",
) -> CollaborativeFilter:
    """Collaborative Wiener filter ``W = K_CSR F^T (F K_CSR F^T + N)^-1``.

    Here ``F``, ``K_CSR`` and ``N`` are the stacked operators ``I (x) F``,
    ``1 (x) K_s`` and ``I (x) N``.  ``method="stacked"`` factorizes the
    ``(t M) x (t M)`` stacked covariance as written.  The default
    ``"reduced"`` uses the equivalent ``M x M`` system ``t F K_s F^T + N``,
    which is far better conditioned and stays regular at zero noise, where
    the stacked matrix is exactly singular for ``t > 1``.
    """
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    if method not in FILTER_METHODS:
        raise ValueError(f"method must be one of {FILTER_METHODS}")
    f = bank.responses
    m, n = f.shape
    if prior.n_bands != n:
        raise ValueError(f"prior has {prior.n_bands} bands, filter bank has {n}")
    if cov.n_channels != m:
        raise ValueError(f"noise covariance has {cov.n_channels} channels, filter bank has {m}")
    if method == "reduced":
        w = _reduced_weights(f, prior.k_s, cov.variances, t)
    else:
        w = _stacked_weights(f, prior.k_s, cov.variances, t)
    if not np.all(np.isfinite(w)):
        raise SingularSystemError("collaborative filter has non-finite weights")
    w.setflags(write=False)
    return CollaborativeFilter(t=t, grid=bank.grid, n_channels=m, weights=w)


class FilterCache:
    """Filters keyed by stack depth; they do not depend on which blocks matched."""

    def __init__(self, bank: FilterBank, prior: SmoothnessPrior, cov: NoiseCovariance):
        self.bank = bank
        self.prior = prior
        self.cov = cov
        self._filters: dict[int, CollaborativeFilter] = {}
        self._lock = threading.Lock()

    def get(self, t: int) -> CollaborativeFilter:
        filt = self._filters.get(t)
        if filt is None:
            with self._lock:
                filt = self._filters.get(t)
                if filt is None:
                    filt = build_collaborative_filter(self.bank, self.prior, self.cov, t)
                    self._filters[t] = filt
        return filt

    def __contains__(self, t: int) -> bool:
        return t in self._filters


def reconstruct_pixel_wiener(pixel, filt: CollaborativeFilter) -> Spectrum:
    if filt.t != 1:
        raise ValueError(f"per-pixel reconstruction needs a t=1 filter, got t={filt.t}")
    c = np.asarray(pixel, dtype=float).reshape(-1)
    if c.size != filt.n_channels:
        raise ValueError(f"pixel has {c.size} channels, filter expects {filt.n_channels}")
    return Spectrum(filt.grid, filt.weights @ c)


def reconstruct_matchset(
    image: MultiCube, ms: MatchSet, filters: FilterCache, params: CsrParams
) -> list[tuple[tuple[int, int], NDArray[np.float64]]]:
    """Collaboratively reconstruct all ``T`` blocks of one match set.

    Pixels at the same in-block offset across the matched blocks are stacked
    into one vector of length ``T M`` and filtered jointly.
    """
    b = params.block_size
    t = len(ms)
    filt = filters.get(t)
    if filt.t != t:
        raise RuntimeError(f"filter cache returned t={filt.t} for a stack of depth {t}")
    stack = np.stack([image.data[r : r + b, c : c + b] for r, c in ms.positions])
    m = stack.shape[-1]
    vecs = stack.transpose(1, 2, 0, 3).reshape(b * b, t * m)
    spectra = vecs @ filt.weights.T
    blocks = spectra.reshape(b, b, t, filt.n_bands).transpose(2, 0, 1, 3)
    return [((int(r), int(c)), blocks[i]) for i, (r, c) in enumerate(ms.positions)]


class Accumulator:
    """Running per-pixel sum of spectral estimates and their count."""

    def __init__(self, height: int, width: int, n_bands: int):
        self.sums = np.zeros((height, width, n_bands))
        self.counts = np.zeros((height, width), dtype=np.int64)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.sums.shape

    def add(self, position: tuple[int, int], block: NDArray) -> None:
        r, c = position
        bh, bw = block.shape[:2]
        h, w, n = self.sums.shape
        if r < 0 or c < 0 or r + bh > h or c + bw > w or block.shape[2] != n:
            raise ValueError(f"block {block.shape} at {position} does not fit in {self.sums.shape}")
        self.sums[r : r + bh, c : c + bw] += block
        self.counts[r : r + bh, c : c + bw] += 1

    def merge(self, other: Accumulator) -> None:
        self.sums += other.sums
        self.counts += other.counts

    def result(self) -> NDArray[np.float64]:
        if np.any(self.counts == 0):
            raise RuntimeError("some pixels were never covered by a reconstructed block")
        return self.sums / self.counts[:, :, None]


def aggregate(acc: Accumulator, blocks) -> Accumulator:
    for position, block in blocks:
        acc.add(position, block)
    return acc


def _check_inputs(noisy: MultiCube, bank: FilterBank, cov: NoiseCovariance) -> None:
    if noisy.n_channels != bank.n_channels:
        raise ValueError(
            f"image has {noisy.n_channels} channels, filter bank has {bank.n_channels}"
        )
    if cov.n_channels != bank.n_channels:
        raise ValueError(
            f"noise covariance has {cov.n_channels} channels, filter bank has {bank.n_channels}"
        )


def wiener_estimate(
    noisy: MultiCube,
    bank: FilterBank,
    cov: NoiseCovariance,
    alpha: float = CsrParams.alpha,
) -> NDArray[np.float64]:
    """Raw per-pixel Wiener estimate ``K_s F^T (F K_s F^T + N)^-1 c``.

    Linear in the input; may contain negative values.
    """
    _check_inputs(noisy, bank, cov)
    prior = build_smoothness_prior(bank.n_bands, alpha)
    filt = build_collaborative_filter(bank, prior, cov, 1)
    return noisy.data @ filt.weights.T


def reconstruct_wiener_image(
    noisy: MultiCube,
    bank: FilterBank,
    cov: NoiseCovariance,
    alpha: float = CsrParams.alpha,
) -> HyperCube:
    """Per-pixel Wiener reconstruction with negative radiance clamped to 0."""
    return HyperCube(bank.grid, np.maximum(wiener_estimate(noisy, bank, cov, alpha), 0.0))


def _process_references(image, refs, tau, params, filters):
    acc = Accumulator(image.height, image.width, filters.bank.n_bands)
    for ref in refs:
        ms = match_cubes(image, ref, params, tau)
        aggregate(acc, reconstruct_matchset(image, ms, filters, params))
    return acc


def accumulate_csr(
    padded: MultiCube,
    bank: FilterBank,
    cov: NoiseCovariance,
    params: CsrParams = CsrParams(),
    threads: int = 1,
) -> Accumulator:
    """Match, reconstruct and accumulate every reference block of an image.

    No padding or cropping happens here.  ``threads > 1`` splits the
    reference list into contiguous chunks whose partial accumulators are
    merged in chunk order.
    """
    _check_inputs(padded, bank, cov)
    if threads < 1:
        raise ValueError("threads must be >= 1")
    tau = compute_tau(cov, params)
    prior = build_smoothness_prior(bank.n_bands, params.alpha)
    filters = FilterCache(bank, prior, cov)
    refs = reference_positions(padded.height, padded.width, params)
    if threads == 1:
        return _process_references(padded, refs, tau, params, filters)

    chunks = [c.tolist() for c in np.array_split(np.asarray(refs), threads) if len(c)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        partial = list(
            pool.map(lambda ch: _process_references(padded, ch, tau, params, filters), chunks)
        )
    acc = partial[0]
    for other in partial[1:]:
        acc.merge(other)
    return acc


def pad_width(params: CsrParams) -> int:
    return math.ceil(params.window / 2)


def csr_estimate(
    noisy: MultiCube,
    bank: FilterBank,
    cov: NoiseCovariance,
    params: CsrParams = CsrParams(),
    threads: int = 1,
) -> NDArray[np.float64]:
    """Unclamped collaborative spectral reconstruction of a whole image.

    The image is mirror-padded by half the search window, every reference
    block is matched and reconstructed with its stack, overlapping
    estimates are averaged and the padding is cropped again.
    """
    pad = pad_width(params)
    padded = MultiCube(np.pad(noisy.data, ((pad, pad), (pad, pad), (0, 0)), mode="symmetric"))
    acc = accumulate_csr(padded, bank, cov, params, threads)
    return acc.result()[pad:-pad, pad:-pad]


def reconstruct_csr(
    noisy: MultiCube,
    bank: FilterBank,
    cov: NoiseCovariance,
    params: CsrParams = CsrParams(),
    threads: int = 1,
) -> HyperCube:
    """Collaborative spectral reconstruction, negative radiance clamped to 0."""
    data = csr_estimate(noisy, bank, cov, params, threads)
    return HyperCube(bank.grid, np.maximum(data, 0.0))

"""Hyperspectral reconstruction from noisy multispectral images.

Per-pixel Wiener reconstruction and collaborative spectral reconstruction
(CSR), which matches similar multispectral blocks across the image and
reconstructs each stack jointly, plus the simulation and evaluation tools
around them.
"""

from .matching import CsrParams, MatchSet, compute_tau, cube_distance, match_cubes, reference_positions
from .metrics import EvaluationReport, evaluate, mean_spectral_angle, psnr, spectral_angle
from .noise import (
    IntensityLevel,
    NoiseCovariance,
    awgn_corrupt,
    estimate_noise_variances,
    mean_variance,
    poisson_corrupt,
)
from .reconstruction import (
    Accumulator,
    CollaborativeFilter,
    FilterCache,
    aggregate,
    build_collaborative_filter,
    accumulate_csr,
    csr_estimate,
    reconstruct_csr,
    reconstruct_matchset,
    reconstruct_pixel_wiener,
    reconstruct_wiener_image,
    wiener_estimate,
)
from .scenes import DEFAULT_GRID, synthetic_scene
from .spectral import (
    DEFAULT_ALPHA,
    FilterBank,
    HyperCube,
    MultiCube,
    SingularSystemError,
    SmoothnessPrior,
    SpectralGrid,
    Spectrum,
    build_first_difference,
    build_second_difference,
    build_smoothness_prior,
    forward_capture,
    generate_flat_top_bank,
    kron_identity_extend,
    kron_ones_extend,
    normalize_peak,
)

__version__ = "0.1.0"

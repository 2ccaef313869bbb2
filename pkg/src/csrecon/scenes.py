"""Synthetic piecewise-smooth hyperspectral scenes.

The image plane is split into Voronoi cells.  Each cell gets a smooth
spectrum built from a few Gaussian bumps on a small baseline, and a gentle
global illumination ramp keeps the cells from being exactly constant.
"""

from __future__ import annotations

import numpy as np

from .spectral import HyperCube, SpectralGrid

DEFAULT_GRID = SpectralGrid(440.0, 920.0, 49)


def random_smooth_spectrum(grid: SpectralGrid, rng: np.random.Generator) -> np.ndarray:
    lam = grid.wavelengths
    span = grid.lambda_max - grid.lambda_min
    spectrum = np.full(grid.n_bands, rng.uniform(0.02, 0.15))
    for _ in range(rng.integers(2, 5)):
        center = rng.uniform(grid.lambda_min, grid.lambda_max)
        width = rng.uniform(0.06, 0.25) * span
        spectrum += rng.uniform(0.2, 1.0) * np.exp(-0.5 * ((lam - center) / width) ** 2)
    return spectrum


def voronoi_labels(height: int, width: int, n_regions: int, rng: np.random.Generator) -> np.ndarray:
    seeds = rng.uniform((0, 0), (height, width), size=(n_regions, 2))
    yy, xx = np.mgrid[0:height, 0:width]
    d2 = (yy[..., None] - seeds[:, 0]) ** 2 + (xx[..., None] - seeds[:, 1]) ** 2
    return np.argmin(d2, axis=-1)


def synthetic_scene(
    height: int = 64,
    width: int = 64,
    n_regions: int = 8,
    grid: SpectralGrid = DEFAULT_GRID,
    seed: int = 0,
    shading: float = 0.15,
) -> HyperCube:
    """Voronoi scene of smooth spectra, normalized so the peak value is 1.

    ``shading`` is the depth of a linear illumination ramp across the image;
    0 gives exactly piecewise-constant spectra.
    """
    if height < 1 or width < 1 or n_regions < 1:
        raise ValueError("height, width and n_regions must be positive")
    if not 0 <= shading < 1:
        raise ValueError("shading must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    labels = voronoi_labels(height, width, n_regions, rng)
    spectra = np.stack([random_smooth_spectrum(grid, rng) for _ in range(n_regions)])
    cube = spectra[labels]
    if shading > 0:
        angle = rng.uniform(0, 2 * np.pi)
        yy, xx = np.mgrid[0:height, 0:width]
        ramp = np.cos(angle) * yy / max(height - 1, 1) + np.sin(angle) * xx / max(width - 1, 1)
        ramp = (ramp - ramp.min()) / max(np.ptp(ramp), 1e-12)
        cube = cube * (1.0 - shading * ramp)[..., None]
    return HyperCube(grid, cube / cube.max())


def parse_scene_spec(spec: str) -> dict:
    """Parse ``synthetic:height=64,width=64,regions=8,seed=0,shading=0.15``.

    Every key is optional; ``synthetic`` alone uses the defaults.
    """
    kind, _, rest = spec.partition(":")
    if kind != "synthetic":
        raise ValueError(f"unknown scene kind {kind!r}; expected 'synthetic'")
    keys = {"height": int, "width": int, "regions": int, "seed": int, "shading": float}
    out: dict = {}
    for item in filter(None, rest.split(",")):
        key, eq, value = item.partition("=")
        key = key.strip()
        if not eq or key not in keys:
            raise ValueError(f"bad scene option {item!r}; known keys: {sorted(keys)}")
        out[key] = keys[key](value)
    if "regions" in out:
        out["n_regions"] = out.pop("regions")
    return out

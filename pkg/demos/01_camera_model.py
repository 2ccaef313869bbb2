# A nine-channel camera looking at 49-band spectra, and what a single
# pixel Wiener estimate recovers from it.
import numpy as np

from csrecon import (
    DEFAULT_GRID,
    NoiseCovariance,
    build_collaborative_filter,
    build_smoothness_prior,
    generate_flat_top_bank,
    reconstruct_pixel_wiener,
    spectral_angle,
)

grid = DEFAULT_GRID
print("bands:", grid.n_bands, "step (nm):", grid.step)
print("first wavelengths:", grid.wavelengths[:4])

bank = generate_flat_top_bank(grid, n_channels=9, sharpness=3.0)
F = bank.responses
print("filter matrix:", F.shape)
print("filter peaks (nm):", grid.wavelengths[F.argmax(axis=1)])

# neighbouring filters cross at half their peak
mid = (F.argmax(axis=1)[0] + F.argmax(axis=1)[1]) // 2
print("crossover of channels 0 and 1:", F[0, mid], F[1, mid])

prior = build_smoothness_prior(grid.n_bands, alpha=1e-6)
print("K_s diagonal (edges are least constrained):", prior.k_s.diagonal()[[0, 24, 48]])

# a smooth test spectrum: one broad bump on a slope
lam = grid.wavelengths
s = 0.3 + 0.4 * (lam - lam[0]) / (lam[-1] - lam[0]) + 0.5 * np.exp(-((lam - 610) / 60) ** 2)
c = F @ s

# Measurements scaled to a unit peak, then corrupted with Gaussian noise.
# With alpha = 1e-6 the prior variance (K_s entries ~1e4) dwarfs any
# plausible channel noise, so knowing the variance barely changes the
# single-pixel estimate: noise passes straight through.  Averaging over a
# stack of similar pixels is what removes it (see 04_csr_vs_wiener.py).
c = c / c.max()
s = s / (F @ s).max()
rng = np.random.default_rng(0)
blind = build_collaborative_filter(bank, prior, NoiseCovariance.zeros(9), t=1)
for var in (1e-4, 1e-3, 1e-2):
    c_noisy = c + rng.normal(scale=np.sqrt(var), size=c.shape)
    aware = build_collaborative_filter(bank, prior, NoiseCovariance(np.full(9, var)), t=1)
    a = spectral_angle(s, reconstruct_pixel_wiener(c_noisy, blind).values)
    b = spectral_angle(s, reconstruct_pixel_wiener(c_noisy, aware).values)
    print(f"noise var {var:g}: angle ignoring noise {a:.5f} rad, with noise model {b:.5f} rad")

exact = reconstruct_pixel_wiener(c, blind).values
print("noiseless: angle", round(spectral_angle(s, exact), 4),
      "max |F s_hat - c| =", np.abs(F @ exact - c).max())

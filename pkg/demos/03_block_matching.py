# Block matching on a noisy capture: which blocks get stacked with a
# reference, and how the threshold tau scales with the noise.
import numpy as np

from csrecon import (
    CsrParams,
    estimate_noise_variances,
    forward_capture,
    generate_flat_top_bank,
    match_cubes,
    normalize_peak,
    poisson_corrupt,
    synthetic_scene,
)
from csrecon.matching import compute_tau, reference_positions

scene = synthetic_scene(64, 64, n_regions=8, seed=0)
bank = generate_flat_top_bank(scene.grid)
clean, _ = normalize_peak(forward_capture(scene, bank))
noisy = poisson_corrupt(clean, 10, seed=0)

params = CsrParams()
cov = estimate_noise_variances(noisy)
tau = compute_tau(cov, params)
print("estimated variances:", np.round(cov.variances, 4))
print("tau = tau_c * mean variance =", round(tau, 4))

ms = match_cubes(noisy, (20, 20), params, tau)
print(f"{len(ms)} blocks matched to (20, 20); the first few:")
for r, c, d in ms.entries[:6]:
    print(f"  ({r:2d}, {c:2d})  distance {d:.4f}")

# tighter threshold, fewer matches
for tau_c in (1.0, 3.0, 6.0, 12.0):
    p = CsrParams(tau_c=tau_c)
    print(f"tau_c={tau_c:>4}: {len(match_cubes(noisy, (20, 20), p, compute_tau(cov, p)))} matches")

print("reference positions on a 64x64 image:", len(reference_positions(64, 64, params)))

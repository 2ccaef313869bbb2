# Poisson shot noise at several intensity levels, and how well the
# residual-based estimator recovers the per-channel variance.
import numpy as np

from csrecon import MultiCube, estimate_noise_variances, poisson_corrupt
from csrecon.noise import awgn_corrupt, NoiseCovariance

flat = MultiCube(np.full((256, 256, 1), 0.5))
for level in (10, 30, 100):
    x = poisson_corrupt(flat, level, seed=0).data
    # variance of Poisson(l v) / l is v / l
    print(f"l={level:>3}: mean {x.mean():.4f}  var {x.var():.5f}  expected {0.5 / level:.5f}")

# the same seed gives the same draw; a different seed does not
a = poisson_corrupt(flat, 10, seed=1).data
b = poisson_corrupt(flat, 10, seed=1).data
print("reproducible:", np.array_equal(a, b))

# estimator on a ramp, where a plain variance would be dominated by signal
yy, xx = np.mgrid[0:256, 0:256]
ramp = MultiCube(((yy + xx) / 510.0)[:, :, None])
for var in (0.0025, 0.01):
    est = [estimate_noise_variances(awgn_corrupt(ramp, NoiseCovariance([var]), seed)).variances[0]
           for seed in range(5)]
    print(f"true {var}: estimates {np.round(est, 5)}")

# Poisson variance depends on the signal, so the estimate is an average over the image
noisy = poisson_corrupt(ramp, 10, seed=2)
print("Poisson on ramp, estimated:", estimate_noise_variances(noisy).variances,
      "mean signal / l:", ramp.data.mean() / 10)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from csrecon import HyperCube, SpectralGrid, Spectrum, evaluate, mean_spectral_angle, psnr, spectral_angle

G5 = SpectralGrid(400, 800, 5)


def cube(data):
    data = np.asarray(data, dtype=float)
    return HyperCube(SpectralGrid(400, 800, data.shape[-1]), data)


class TestSpectralAngle:
    def test_identical(self):
        s = np.array([0.1, 0.5, 0.3])
        assert spectral_angle(s, s) == 0.0

    def test_orthogonal(self):
        assert spectral_angle([1, 0, 0], [0, 1, 0]) == pytest.approx(np.pi / 2, abs=1e-15)

    def test_zero_estimate_is_pi(self):
        assert spectral_angle([0.2, 0.4, 0.1], [0, 0, 0]) == np.pi

    def test_diagonal(self):
        assert spectral_angle([1, 0], [1, 1]) == pytest.approx(np.pi / 4, abs=1e-15)

    def test_accepts_spectrum(self):
        a = Spectrum(G5, [1, 2, 3, 4, 5])
        assert spectral_angle(a, a) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            spectral_angle([1, 2], [1, 2, 3])

    @settings(max_examples=60)
    @given(
        s=arrays(float, 6, elements=st.floats(0.01, 1)),
        t=arrays(float, 6, elements=st.floats(0.01, 1)),
        a=st.floats(1e-3, 1e3),
        b=st.floats(1e-3, 1e3),
    )
    def test_scale_invariant_and_symmetric(self, s, t, a, b):
        base = spectral_angle(s, t)
        assert spectral_angle(a * s, b * t) == pytest.approx(base, abs=1e-12)
        assert spectral_angle(t, s) == pytest.approx(base, abs=1e-12)
        assert 0 <= base <= np.pi


class TestMeanSpectralAngle:
    def test_identical(self, rng):
        c = cube(rng.uniform(0.1, 1, size=(4, 4, 5)))
        mean, std = mean_spectral_angle(c, c)
        assert mean == 0.0 and std == 0.0

    def test_all_zero_reference(self):
        z = cube(np.zeros((2, 2, 3)))
        with pytest.raises(ValueError, match="no evaluable"):
            mean_spectral_angle(z, z)

    def test_two_pixels(self):
        ref = cube([[[1, 0, 0], [1, 0, 0]]])
        est = cube([[[1, 0, 0], [0, 1, 0]]])
        mean, std = mean_spectral_angle(ref, est)
        assert mean == pytest.approx(np.pi / 4, abs=1e-15)
        assert std == pytest.approx(np.pi / 4, abs=1e-15)

    def test_zero_reference_excluded_zero_estimate_is_pi(self):
        ref = cube([[[0, 0, 0], [1, 1, 0], [0, 1, 0]]])
        est = cube([[[1, 2, 3], [0, 0, 0], [0, 1, 0]]])
        mean, _ = mean_spectral_angle(ref, est)
        assert mean == pytest.approx(np.pi / 2, abs=1e-15)
        report = evaluate(ref, est)
        assert (report.n_evaluated, report.n_zero_reference) == (2, 1)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            mean_spectral_angle(cube(np.ones((2, 2, 3))), cube(np.ones((2, 3, 3))))

    @settings(max_examples=30, deadline=None)
    @given(
        a=arrays(float, (3, 3, 4), elements=st.floats(0, 1)),
        b=arrays(float, (3, 3, 4), elements=st.floats(0, 1)),
    )
    def test_range(self, a, b):
        a[0, 0] = 0.5  # at least one evaluable pixel
        mean, std = mean_spectral_angle(cube(a), cube(b))
        assert 0 <= mean <= np.pi and std >= 0


class TestPsnr:
    def test_identical_is_inf(self, rng):
        c = cube(rng.uniform(size=(3, 3, 4)))
        assert psnr(c, c) == math.inf

    @pytest.mark.parametrize("err,expected", [(0.1, 20.0), (0.01, 40.0)])
    def test_uniform_error(self, err, expected):
        ref = cube(np.full((4, 5, 6), 0.5))
        est = cube(np.full((4, 5, 6), 0.5 + err))
        assert psnr(ref, est) == pytest.approx(expected, abs=1e-12)

    def test_monotone_in_error(self):
        ref = cube(np.full((4, 4, 3), 0.5))
        values = [psnr(ref, cube(np.full((4, 4, 3), 0.5 + e))) for e in (0.001, 0.01, 0.05, 0.1, 0.3)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            psnr(cube(np.ones((2, 2, 3))), cube(np.ones((2, 2, 4))))


class TestReport:
    def test_identical_cubes_text(self, rng):
        c = cube(rng.uniform(0.1, 1, size=(3, 3, 4)))
        report = evaluate(c, c)
        lines = dict(line.split("=") for line in report.to_text().splitlines())
        assert list(lines) == [
            "mean_theta_rad", "mean_theta_deg", "theta_std_rad", "psnr_db", "n_evaluated", "n_zero_reference",
        ]
        assert lines["psnr_db"] == "inf"
        assert float(lines["mean_theta_rad"]) == pytest.approx(0, abs=1e-7)
        assert int(lines["n_evaluated"]) == 9

    def test_degrees(self):
        ref = cube([[[1, 0, 0]]])
        est = cube([[[0, 1, 0]]])
        d = evaluate(ref, est).as_dict()
        assert d["mean_theta_deg"] == pytest.approx(90.0, abs=1e-12)
        assert d["psnr_db"] == pytest.approx(-10 * math.log10(2 / 3))

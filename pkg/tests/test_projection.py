import numpy as np
import pytest

from polysart import (
    DenseSystemMatrix,
    ParallelBeamGeometry,
    ParallelBeamProjector,
    Sinogram,
    backproject,
    forward,
    poly_project,
    post_log,
)

# Frozen against the bundled fixtures: post-log exponents of the
# polyenergetic projection at the (0.1, 0.16) two-pixel object.
EXPONENTS_016 = (0.318510902809508, 0.256364563800278)


class TestForwardBackproject:
    def test_two_pixel_forward(self, two_pixel):
        a, t = two_pixel
        b = forward(a, t)
        assert b.kind == "line_integral"
        assert np.allclose(b.values, [0.260, 0.2088], rtol=0, atol=1e-15)

    def test_zero_map(self, two_pixel):
        a, _ = two_pixel
        assert np.all(forward(a, np.zeros(2)).values == 0.0)

    def test_transpose_of_first_basis_vector(self, two_pixel):
        a, _ = two_pixel
        assert np.allclose(backproject(a, np.array([1.0, 0.0])), [1.0, 1.0])

    def test_transpose_of_ones_is_column_sums(self, two_pixel):
        a, _ = two_pixel
        assert np.allclose(backproject(a, np.ones(2)), a.col_sums())

    def test_adjoint_identity_dense(self, two_pixel, rng):
        a, _ = two_pixel
        for _ in range(20):
            x = rng.standard_normal(2)
            y = rng.standard_normal(2)
            lhs = forward(a, x).values @ y
            rhs = x @ backproject(a, y)
            assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_dimension_mismatch(self, two_pixel):
        a, _ = two_pixel
        with pytest.raises(ValueError, match="entries"):
            forward(a, np.zeros(3))
        with pytest.raises(ValueError, match="entries"):
            backproject(a, np.zeros(5))

    def test_row_and_col_sums(self, two_pixel):
        a, _ = two_pixel
        assert np.allclose(a.row_sums(), [2.0, 1.41], atol=1e-15)
        assert np.allclose(a.col_sums(), [1.28, 2.13], atol=1e-15)

    def test_negative_entries_rejected(self):
        with pytest.raises(ValueError, match="nonnegative"):
            DenseSystemMatrix([[1.0, -0.1], [0.0, 1.0]])


class TestParallelBeam:
    def test_hand_computed_two_by_two(self):
        # 2x2 unit grid, views at 0 and 90 degrees, detector offsets +-0.5:
        # each ray crosses one full row or column of pixels.
        geometry = ParallelBeamGeometry(image_size=2, n_views=2, pixel_pitch_cm=1.0)
        a = ParallelBeamProjector(geometry).to_dense()
        expected = np.array([
            [1.0, 0.0, 1.0, 0.0],   # vertical ray through column 0
            [0.0, 1.0, 0.0, 1.0],   # vertical ray through column 1
            [0.0, 0.0, 1.0, 1.0],   # horizontal ray through bottom row
            [1.0, 1.0, 0.0, 0.0],   # horizontal ray through top row
        ])
        assert np.allclose(a, expected, atol=1e-12)

    def test_diagonal_ray_length(self):
        # single pixel, 45-degree view through the center: length sqrt(2)
        geometry = ParallelBeamGeometry(image_size=1, n_views=4, pixel_pitch_cm=1.0)
        a = ParallelBeamProjector(geometry).to_dense()
        assert a[1, 0] == pytest.approx(np.sqrt(2.0), rel=1e-12)

    def test_lengths_against_dense_sampling(self, rng):
        # brute-force oracle: sample points along each ray and accumulate
        # the in-pixel path length
        geometry = ParallelBeamGeometry(image_size=5, n_views=7, pixel_pitch_cm=0.7)
        proj = ParallelBeamProjector(geometry)
        dense = proj.to_dense()
        n, pitch = geometry.image_size, geometry.pixel_pitch_cm
        half = 0.5 * n * pitch
        offsets = (np.arange(geometry.n_detectors) - 0.5 * (geometry.n_detectors - 1))
        offsets = offsets * geometry.detector_pitch_cm
        samples = 200_001
        for ray in rng.integers(0, geometry.n_rays, size=6):
            view, det = divmod(int(ray), geometry.n_detectors)
            theta = np.deg2rad(geometry.angles_deg[view])
            ex, ey = np.cos(theta), np.sin(theta)
            dx, dy = -np.sin(theta), np.cos(theta)
            span = 2.0 * np.sqrt(2.0) * half
            s = np.linspace(-span / 2, span / 2, samples)
            x = offsets[det] * ex + s * dx
            y = offsets[det] * ey + s * dy
            ds = span / (samples - 1)
            inside = (np.abs(x) < half) & (np.abs(y) < half)
            cols = np.clip(((x + half) / pitch).astype(int), 0, n - 1)
            rows = np.clip(((half - y) / pitch).astype(int), 0, n - 1)
            approx = np.zeros(n * n)
            np.add.at(approx, (rows * n + cols)[inside], ds)
            assert np.max(np.abs(approx - dense[ray])) < 5e-4

    def test_adjoint_identity(self, projector16, rng):
        m, n = projector16.shape
        for _ in range(5):
            x = rng.standard_normal(n)
            y = rng.standard_normal(m)
            lhs = projector16.apply(x) @ y
            rhs = x @ projector16.apply_transpose(y)
            assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_row_sums_equal_support_intersection(self, projector16):
        # gamma_i is the intersection length of ray i with the image square
        ones = np.ones(projector16.shape[1])
        assert np.allclose(projector16.row_sums(), projector16.apply(ones), atol=1e-10)

    def test_entries_nonnegative(self, projector16):
        assert projector16.as_csr().data.min() >= 0.0
        assert projector16.row_sums().min() >= 0.0
        assert projector16.col_sums().min() >= 0.0

    def test_accepts_square_image(self, projector16):
        img = np.ones((16, 16))
        assert np.allclose(projector16.apply(img), projector16.apply(img.ravel()))


class TestPolyProject:
    def test_mono_reduces_to_beer_lambert(self, two_pixel, model, mono70):
        a, t = two_pixel
        p = poly_project(a, model, mono70, t)
        assert p.kind == "intensity"
        expected = np.exp(-(a.array @ t))
        assert np.allclose(p.values, expected, rtol=1e-12, atol=0)

    def test_air_gives_unit_intensity(self, two_pixel, model, spectrum):
        a, _ = two_pixel
        p = poly_project(a, model, spectrum, np.zeros(2))
        assert np.allclose(p.values, 1.0, rtol=0, atol=1e-12)

    def test_two_pixel_exponents_frozen(self, two_pixel, model, spectrum):
        a, t = two_pixel
        exps = -np.log(poly_project(a, model, spectrum, t).values)
        assert exps[0] == pytest.approx(EXPONENTS_016[0], abs=1e-12)
        assert exps[1] == pytest.approx(EXPONENTS_016[1], abs=1e-12)
        # reference values from the harder-beam experiment
        assert exps[0] == pytest.approx(0.314, abs=0.02)
        assert exps[1] == pytest.approx(0.253, abs=0.02)

    def test_values_in_unit_interval(self, two_pixel, model, spectrum, rng):
        a, _ = two_pixel
        for _ in range(25):
            t = rng.uniform(0.0, 0.49, size=2)
            p = poly_project(a, model, spectrum, t).values
            assert np.all(p > 0.0)
            assert np.all(p <= 1.0 + 1e-12)

    def test_monotone_in_each_pixel(self, model, spectrum, rng):
        for _ in range(10):
            a = DenseSystemMatrix(rng.uniform(0.1, 1.5, size=(3, 2)))
            t = rng.uniform(0.02, 0.4, size=2)
            base = poly_project(a, model, spectrum, t).values
            for j in range(2):
                bumped = t.copy()
                bumped[j] += 0.01
                assert np.all(poly_project(a, model, spectrum, bumped).values < base)

    def test_unnormalized_spectrum_rejected(self, two_pixel, model, spectrum):
        from polysart import Spectrum
        a, t = two_pixel
        raw = Spectrum(spectrum.energies_kev, spectrum.weights * 2.0)
        with pytest.raises(ValueError, match="normalized"):
            poly_project(a, model, raw, t)

    def test_energy_range_guard(self, two_pixel, model):
        from polysart import monoenergetic
        a, t = two_pixel
        with pytest.raises(ValueError, match="range"):
            poly_project(a, model, monoenergetic(5.0), t)

    def test_dimension_mismatch(self, two_pixel, model, spectrum):
        a, _ = two_pixel
        with pytest.raises(ValueError, match="entries"):
            poly_project(a, model, spectrum, np.zeros(3))


class TestPostLog:
    def test_scalar_example(self):
        b = post_log(Sinogram.intensity([np.exp(-0.260)]))
        assert b.values[0] == pytest.approx(0.260, abs=1e-15)

    def test_blank_scan_is_zero(self, spectrum):
        p = Sinogram.intensity([spectrum.total_weight])
        assert post_log(p, spectrum).values[0] == pytest.approx(0.0, abs=1e-15)

    def test_unnormalized_total_weight(self):
        from polysart import Spectrum
        s = Spectrum([60.0, 80.0], [1.0, 3.0])
        p = Sinogram.intensity([4.0])
        assert post_log(p, s).values[0] == pytest.approx(0.0, abs=1e-15)

    def test_round_trip_with_mono_model(self, two_pixel, model, mono70):
        a, t = two_pixel
        p = poly_project(a, model, mono70, t)
        b = post_log(p, mono70)
        assert np.allclose(b.values, a.array @ t, rtol=1e-12, atol=1e-15)

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            post_log(np.array([1.0, 0.0]))

    def test_kind_checked(self):
        with pytest.raises(ValueError, match="intensity"):
            post_log(Sinogram.line_integral([0.5]))


class TestSinogram:
    def test_intensity_must_be_positive(self):
        with pytest.raises(ValueError, match="positive"):
            Sinogram.intensity([1.0, -0.5])

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="kind"):
            Sinogram([1.0], "other")

    def test_values_immutable(self):
        s = Sinogram.intensity([1.0])
        with pytest.raises(ValueError):
            s.values[0] = 2.0

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polysart import LacModel, MaterialCurve, load_lac_model, load_material_csv

# Frozen against the bundled fixture curves (fat segment at 40 keV).
MU_016_AT_40KEV = 0.202112895173962

FAT = 0.1782
TISSUE = 0.2033
BONE = 0.4948


@pytest.fixture(scope="module")
def names(model):
    return [m.name for m in model.materials]


class TestEvalCurve:
    def test_exact_sample_is_exact(self, model):
        bone = model.materials[3]
        assert bone.evaluate(70.0) == BONE

    def test_anchors_at_reference_energy(self, model):
        assert np.array_equal(model.reference_lacs, [0.0, FAT, TISSUE, BONE])

    def test_flat_segment_stays_flat(self):
        curve = MaterialCurve("flat", [10.0, 100.0], [0.3, 0.3])
        assert curve.evaluate(np.sqrt(10.0 * 100.0)) == pytest.approx(0.3, abs=1e-15)

    def test_loglog_between_samples(self):
        curve = MaterialCurve("c", [10.0, 40.0], [8.0, 0.5])
        # log-log linear: value at the geometric midpoint is the geometric mean
        assert curve.evaluate(20.0) == pytest.approx(2.0, rel=1e-12)

    def test_out_of_range_rejected(self, model):
        with pytest.raises(ValueError, match="outside"):
            model.materials[1].evaluate(5.0)
        with pytest.raises(ValueError, match="outside"):
            model.materials[1].evaluate(200.0)

    def test_air_curve_is_zero(self, model):
        air = model.materials[0]
        assert np.all(air.evaluate(np.array([15.0, 33.3, 70.0, 145.0])) == 0.0)


class TestBracket:
    def test_between_air_and_fat(self, model):
        assert model.bracket(0.16) == (0, 1)

    def test_between_tissue_and_bone(self, model):
        assert model.bracket(0.24) == (2, 3)

    def test_exact_boundary_uses_upper_segment(self, model):
        assert model.bracket(TISSUE) == (2, 3)

    def test_below_and_above_range_extrapolation_brackets(self, model):
        assert model.bracket(-0.3) == (0, 1)
        assert model.bracket(0.9) == (2, 3)

    def test_vector_form(self, model):
        k, k1 = model.bracket(np.array([0.05, 0.19, 0.3]))
        assert list(k) == [0, 1, 2]
        assert list(k1) == [1, 2, 3]


class TestInterpolateLac:
    @settings(max_examples=200)
    @given(st.floats(min_value=-0.2, max_value=0.7))
    def test_identity_at_reference_energy(self, model, t):
        assert model.mu(t, 70.0) == pytest.approx(t, abs=1e-12)

    def test_material_value_reproduces_curve(self, model):
        fat = model.materials[1]
        for e in (20.0, 45.0, 70.0, 120.0):
            assert model.mu(FAT, e) == pytest.approx(fat.evaluate(e), abs=1e-15)

    def test_frozen_golden_fat_segment(self, model):
        assert model.mu(0.16, 40.0) == pytest.approx(MU_016_AT_40KEV, abs=1e-12)
        # with an identically-zero air curve the interpolation reduces to
        # proportional scaling of the fat curve
        fat = model.materials[1]
        assert model.mu(0.16, 40.0) == pytest.approx(0.16 * fat.evaluate(40.0) / FAT, rel=1e-12)

    def test_continuous_across_bracket_boundaries(self, model):
        for b in (FAT, TISSUE):
            for e in (25.0, 40.0, 70.0, 110.0):
                below = model.mu(b - 1e-12, e)
                at = model.mu(b, e)
                assert at == pytest.approx(below, abs=1e-11)

    def test_extrapolation_is_linear_not_clamped(self, model):
        e = 40.0
        lo = model.mu(-0.05, e)
        assert lo < 0.0
        d = model.dmu_dt(-0.05, e)
        assert lo == pytest.approx(-0.05 * d, rel=1e-12)
        hi = model.mu(0.6, e)
        bone = model.materials[3]
        assert hi > bone.evaluate(e)

    def test_vectorized_matches_scalar(self, model):
        ts = np.array([0.02, 0.16, 0.21, 0.4])
        vec = model.mu(ts, 50.0)
        assert np.allclose(vec, [model.mu(float(t), 50.0) for t in ts], rtol=0, atol=1e-15)


class TestLacDerivative:
    def test_one_at_reference_energy(self, model):
        for t in (-0.1, 0.05, 0.16, 0.19, 0.21, 0.3, 0.6):
            assert model.dmu_dt(t, 70.0) == pytest.approx(1.0, abs=1e-12)

    def test_piecewise_constant_within_bracket(self, model):
        assert model.dmu_dt(0.15, 40.0) == model.dmu_dt(0.17, 40.0)

    def test_jump_across_tissue_anchor(self, model):
        assert model.dmu_dt(0.203, 40.0) != model.dmu_dt(0.204, 40.0)
        assert model.dmu_dt(0.204, 40.0) > model.dmu_dt(0.203, 40.0)

    def test_finite_difference_consistency(self, model, rng):
        delta = 1e-6
        for _ in range(50):
            t = float(rng.uniform(0.01, 0.45))
            if min(abs(t - FAT), abs(t - TISSUE)) < 10 * delta:
                continue
            for e in (25.0, 55.0, 90.0):
                fd = (model.mu(t + delta, e) - model.mu(t - delta, e)) / (2 * delta)
                assert fd == pytest.approx(model.dmu_dt(t, e), rel=1e-8)


class TestLoaders:
    def test_material_csv_roundtrip(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("# note\nenergy_kev,lac_per_cm\n10,2.0\n70,0.5\n150,0.2\n")
        curve = load_material_csv(path)
        assert curve.name == "m"
        assert curve.evaluate(70.0) == 0.5

    def test_bad_header(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("energy,lac\n10,2\n")
        with pytest.raises(ValueError, match="header"):
            load_material_csv(path)

    def test_negative_lac_rejected(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("energy_kev,lac_per_cm\n10,-2\n70,0.5\n")
        with pytest.raises(ValueError, match="nonnegative"):
            load_material_csv(path)

    def test_manifest_order_enforced(self, tmp_path):
        (tmp_path / "hi.csv").write_text("energy_kev,lac_per_cm\n10,3\n70,0.5\n150,0.2\n")
        (tmp_path / "lo.csv").write_text("energy_kev,lac_per_cm\n10,1\n70,0.1\n150,0.05\n")
        (tmp_path / "model.json").write_text(
            '{"reference_energy_kev": 70.0, "materials": ["hi.csv", "lo.csv"]}'
        )
        with pytest.raises(ValueError, match="increasing"):
            load_lac_model(tmp_path / "model.json")

    def test_model_needs_two_materials(self, model):
        with pytest.raises(ValueError, match="two materials"):
            LacModel((model.materials[0],), 70.0)

import numpy as np
import pytest

from yawbench import (
    GeneratorSpec,
    Ramp,
    Standardizer,
    WindDataError,
    WindSample,
    WindSeries,
    constant_preset,
    fit_standardizer,
    generate_synthetic,
    load_series,
    save_series,
    split_train_test,
    steady_preset,
    variable_preset,
)


def make_series(n=20, phi=34.1, v=8.0):
    return WindSeries(np.arange(n), np.full(n, phi), np.full(n, v))


class TestLoadSeries:
    def test_basic_row_mapping(self, tmp_path):
        p = tmp_path / "w.csv"
        p.write_text("t,phi_deg,v_ms\n0,34.1,7.2\n1,35.0,7.0\n")
        s = load_series(p)
        assert s[0] == WindSample(0, 34.1, 7.2)
        assert len(s) == 2

    def test_negative_direction_normalized(self, tmp_path):
        p = tmp_path / "w.csv"
        p.write_text("t,phi_deg,v_ms\n0,1.0,6.0\n1,-10.0,6.0\n")
        s = load_series(p)
        assert s.phi[1] == pytest.approx(350.0, abs=1e-12)

    def test_non_uniform_spacing(self, tmp_path):
        p = tmp_path / "w.csv"
        p.write_text("t,phi_deg,v_ms\n0,1.0,6.0\n1,1.0,6.0\n3,1.0,6.0\n")
        with pytest.raises(WindDataError, match="non-uniform spacing at t=3"):
            load_series(p)

    def test_malformed_row_reports_line(self, tmp_path):
        p = tmp_path / "w.csv"
        p.write_text("t,phi_deg,v_ms\n0,1.0,6.0\n1,abc,6.0\n")
        with pytest.raises(WindDataError, match="line 3"):
            load_series(p)

    def test_negative_speed_reports_line(self, tmp_path):
        p = tmp_path / "w.csv"
        p.write_text("t,phi_deg,v_ms\n0,1.0,6.0\n1,1.0,-2.0\n")
        with pytest.raises(WindDataError, match="line 3.*negative wind speed"):
            load_series(p)

    def test_bad_header_rejected(self, tmp_path):
        p = tmp_path / "w.csv"
        p.write_text("time,dir,speed\n0,1.0,6.0\n")
        with pytest.raises(WindDataError, match="header"):
            load_series(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_series(tmp_path / "nope.csv")

    def test_roundtrip_is_lossless(self, tmp_path):
        s = generate_synthetic(steady_preset(length_s=50), seed=4)
        p = tmp_path / "r.csv"
        save_series(s, p)
        back = load_series(p)
        assert back.equals(s)


class TestSplit:
    def test_halves_of_21000(self):
        s = generate_synthetic(steady_preset(), seed=1)
        train, test = split_train_test(s)
        assert len(train) == 10500 and len(test) == 10500

    def test_floor_split_odd(self):
        s = WindSeries(np.arange(3), np.array([1.0, 2.0, 3.0]), np.full(3, 5.0))
        train, test = split_train_test(s)
        assert len(train) == 1 and len(test) == 2

    def test_partition_identity(self):
        s = generate_synthetic(steady_preset(length_s=101), seed=2)
        train, test = split_train_test(s)
        assert np.array_equal(np.concatenate([train.t, test.t]), s.t)
        assert np.array_equal(np.concatenate([train.phi, test.phi]), s.phi)
        assert np.array_equal(np.concatenate([train.v, test.v]), s.v)

    def test_too_short(self):
        one = WindSeries(np.array([0]), np.array([1.0]), np.array([5.0]))
        with pytest.raises(WindDataError):
            split_train_test(one)


class TestStandardizer:
    def test_mean_maps_to_one(self):
        s = fit_standardizer(make_series(v=8.0))
        assert s.scale == 8.0
        assert s.standardize(8.0) == 1.0

    def test_linearity(self):
        s = Standardizer(8.0)
        assert s.standardize(16.0) == 2.0

    def test_zero_preserved(self):
        assert Standardizer(8.0).standardize(0.0) == 0.0

    def test_roundtrip_property(self):
        rng = np.random.default_rng(3)
        s = Standardizer(scale=float(rng.uniform(1, 20)))
        x = rng.uniform(0, 30, size=100)
        assert np.allclose(s.standardize(s.scale * x), x, rtol=1e-12)

    def test_all_zero_speeds_degenerate(self):
        with pytest.raises(WindDataError, match="degenerate"):
            fit_standardizer(make_series(v=0.0))

    def test_fit_ignores_test_split(self):
        n = 100
        v = np.concatenate([np.full(n // 2, 8.0), np.full(n // 2, 20.0)])
        s = WindSeries(np.arange(n), np.full(n, 10.0), v)
        train, _ = split_train_test(s)
        assert fit_standardizer(train).scale == 8.0

    def test_positive_scale_required(self):
        with pytest.raises(WindDataError):
            Standardizer(0.0)


class TestGenerator:
    def test_steady_statistics_match_exactly(self):
        s = generate_synthetic(steady_preset(), seed=1)
        assert len(s) == 21000
        assert s.phi.mean() == pytest.approx(34.1, abs=1e-6)
        assert s.phi.std() == pytest.approx(9.7, abs=1e-6)
        assert s.v.mean() == pytest.approx(8.2, abs=1e-6)

    def test_steady_statistics_hold_for_any_seed(self):
        for seed in range(5):
            s = generate_synthetic(steady_preset(length_s=5000), seed=seed)
            assert abs(s.phi.mean() - 34.1) < 1e-6
            assert abs(s.phi.std() - 9.7) < 1e-6

    def test_variable_ramps_inside_windows(self):
        spec = variable_preset()
        for r in spec.ramps:
            assert (10000 <= r.start_s and r.end_s <= 12500) or (
                15000 <= r.start_s and r.end_s <= 20000
            )
        s = generate_synthetic(spec, seed=2)
        for lo, hi in ((10000, 12500), (15000, 20000)):
            swing = s.phi[lo:hi].max() - s.phi[lo:hi].min()
            assert swing >= 20.0
        assert s.phi.mean() == pytest.approx(41.4, abs=1e-6)
        assert s.phi.std() == pytest.approx(11.6, abs=1e-6)

    def test_constant_degenerate(self):
        s = generate_synthetic(constant_preset(length_s=100), seed=0)
        assert np.all(s.phi == s.phi[0])
        assert np.all(s.v == s.v[0])

    def test_determinism_bit_for_bit(self):
        a = generate_synthetic(steady_preset(length_s=3000), seed=7)
        b = generate_synthetic(steady_preset(length_s=3000), seed=7)
        assert a.equals(b)
        c = generate_synthetic(steady_preset(length_s=3000), seed=8)
        assert not a.equals(c)

    def test_normalization_invariants(self):
        s = generate_synthetic(variable_preset(), seed=5)
        assert np.all(s.phi >= 0.0) and np.all(s.phi < 360.0)
        assert np.all(s.v >= 0.0)

    def test_invalid_specs_rejected(self):
        with pytest.raises(WindDataError):
            GeneratorSpec(length_s=0, dir_mean_deg=0.0, dir_std_deg=1.0)
        with pytest.raises(WindDataError):
            GeneratorSpec(length_s=100, dir_mean_deg=0.0, dir_std_deg=-1.0)
        with pytest.raises(WindDataError):
            GeneratorSpec(length_s=100, dir_mean_deg=0.0, dir_std_deg=1.0, reversion_rate=0.0)
        with pytest.raises(WindDataError):
            GeneratorSpec(
                length_s=100, dir_mean_deg=0.0, dir_std_deg=1.0, ramps=(Ramp(50.0, 40.0, 5.0),)
            )

    def test_ramps_exceeding_std_rejected(self):
        spec = GeneratorSpec(
            length_s=1000, dir_mean_deg=180.0, dir_std_deg=0.5, ramps=(Ramp(100.0, 500.0, 40.0),)
        )
        with pytest.raises(WindDataError, match="variance"):
            generate_synthetic(spec, seed=0)

    def test_spec_dict_roundtrip(self):
        spec = variable_preset()
        assert GeneratorSpec.from_dict(spec.to_dict()) == spec

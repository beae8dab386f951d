import numpy as np
import pytest

from vhetsim.errors import CdrParseError, NormalizationError
from vhetsim.ingest import (
    SynthParams,
    aggregate_records,
    build_daily_profile,
    cdr_line,
    grid_centroid,
    merge_aggregates,
    normalize_profiles,
    parse_cdr_line,
    synth_traffic,
)


class TestParseCdrLine:
    def test_full_line(self):
        rec = parse_cdr_line("42\t1383260400000\t39\t0.1\t0.2\t\t0.3\t1.5")
        assert rec.square_id == 42
        assert rec.time_interval == 1383260400000
        assert rec.country_code == 39
        assert (rec.sms_in, rec.sms_out, rec.call_in, rec.call_out, rec.internet) == (
            0.1, 0.2, 0.0, 0.3, 1.5)

    def test_absent_activities_are_zero(self):
        rec = parse_cdr_line("1\t1383260400000\t39")
        assert rec.activity == 0.0

    def test_bad_square_id(self):
        with pytest.raises(CdrParseError):
            parse_cdr_line("x\t1383260400000\t39\t1")

    def test_line_number_in_error(self):
        with pytest.raises(CdrParseError) as err:
            parse_cdr_line("1\tnope\t39", line_number=17)
        assert err.value.line_number == 17

    def test_too_few_fields(self):
        with pytest.raises(CdrParseError):
            parse_cdr_line("1\t1383260400000")

    def test_roundtrip_preserves_activity_mass(self):
        line = "42\t1383260400000\t39\t0.1\t0.2\t\t0.3\t1.5"
        rec = parse_cdr_line(line)
        again = parse_cdr_line(cdr_line(rec))
        assert again.activity == pytest.approx(rec.activity, abs=0)


class TestAggregate:
    def test_same_key_sums(self):
        recs = [parse_cdr_line("5\t1383260400000\t39\t1.0"),
                parse_cdr_line("5\t1383260400000\t40\t2.0")]
        assert aggregate_records(recs) == {(5, recs[0].slot_of_day): 3.0}

    def test_zero_activity_entry(self):
        recs = [parse_cdr_line("5\t1383260400000\t39")]
        assert list(aggregate_records(recs).values()) == [0.0]

    def test_two_days_same_clock_slot(self):
        # same slot of day, one day apart
        recs = [parse_cdr_line("5\t0\t39\t2.0"),
                parse_cdr_line(f"5\t{86_400_000}\t39\t4.0")]
        agg = aggregate_records(recs)
        assert agg == {(5, 0): 6.0}

    def test_empty_stream(self):
        assert aggregate_records([]) == {}

    def test_merge_matches_single_pass(self):
        recs = [parse_cdr_line(f"{sq}\t{slot * 600000}\t39\t1.5")
                for sq in (1, 2) for slot in (0, 1, 2)]
        whole = aggregate_records(recs)
        merged = merge_aggregates(aggregate_records(recs[:3]), aggregate_records(recs[3:]))
        assert merged == whole


class TestDailyProfile:
    def test_division(self):
        prof = build_daily_profile({(5, 0): 6.0}, day_count=60)
        assert prof[5][0] == pytest.approx(0.1)

    def test_hand_division(self):
        prof = build_daily_profile({(5, 0): 3.0, (5, 1): 6.0}, day_count=3)
        assert prof[5][0] == 1.0 and prof[5][1] == 2.0
        assert not prof[5][2:].any()

    def test_square_with_no_records(self):
        prof = build_daily_profile({(5, 0): 3.0}, day_count=3, squares=[5, 6])
        assert not prof[6].any()

    def test_zero_days_rejected(self):
        with pytest.raises(ValueError):
            build_daily_profile({}, day_count=0)

    def test_linear_in_activity(self):
        agg = {(1, 0): 2.0, (1, 5): 7.0, (2, 3): 1.0}
        doubled = {k: 2 * v for k, v in agg.items()}
        a = build_daily_profile(agg, 4)
        b = build_daily_profile(doubled, 4)
        for sq in a:
            assert np.allclose(2 * a[sq], b[sq])


class TestNormalize:
    def test_ratio(self):
        raw = {1: np.full(144, 25.0), 2: np.full(144, 50.0)}
        profiles = normalize_profiles(raw, grid_side=2)
        assert profiles[0].slots[0] == pytest.approx(0.5)

    def test_peak_is_one(self):
        raw = {1: np.zeros(144)}
        raw[1][7] = 50.0
        profiles = normalize_profiles(raw, grid_side=2)
        assert profiles[0].slots[7] == 1.0

    def test_hand_normalization(self):
        raw = {1: np.zeros(144), 2: np.zeros(144)}
        raw[1][:2] = [2, 4]
        raw[2][:2] = [8, 0]
        profiles = {p.cell_id: p for p in normalize_profiles(raw, grid_side=2)}
        assert profiles[1].slots[:2] == (0.25, 0.5)
        assert profiles[2].slots[:2] == (1.0, 0.0)

    def test_all_zero_rejected(self):
        with pytest.raises(NormalizationError):
            normalize_profiles({1: np.zeros(144)}, grid_side=2)

    def test_argmax_scale_invariant(self):
        rng = np.random.default_rng(0)
        raw = {sq: rng.random(144) for sq in range(1, 5)}
        scaled = {sq: 7.3 * v for sq, v in raw.items()}
        a = normalize_profiles(raw, grid_side=2)
        b = normalize_profiles(scaled, grid_side=2)
        flat_a = np.array([p.slots for p in a])
        flat_b = np.array([p.slots for p in b])
        assert flat_a.argmax() == flat_b.argmax()


class TestGridCentroid:
    def test_corner_cell(self):
        assert grid_centroid(1, 100, 235) == (117.5, 117.5)

    def test_second_row(self):
        assert grid_centroid(101, 100, 235) == (117.5, 352.5)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            grid_centroid(0, 100)
        with pytest.raises(ValueError):
            grid_centroid(10001, 100)


class TestSynthTraffic:
    def test_zero_noise_equals_profile(self):
        params = SynthParams(grid_side=4, spatial_correlation_length=235.0,
                             noise_std=0.0, seed=1)
        for profile in synth_traffic(params):
            assert profile.slots == params.temporal_profile

    def test_deterministic(self):
        params = SynthParams(grid_side=5, spatial_correlation_length=470.0,
                             noise_std=0.2, seed=99)
        assert synth_traffic(params) == synth_traffic(params)

    def test_adjacent_more_correlated_than_far(self):
        params = SynthParams(grid_side=20, spatial_correlation_length=2 * 235.0,
                             noise_std=0.25, seed=7)
        profiles = synth_traffic(params)
        series = {p.cell_id: np.array(p.slots) for p in profiles}
        side = params.grid_side

        def corr(a, b):
            return float(np.corrcoef(series[a], series[b])[0, 1])

        rng = np.random.default_rng(0)
        adjacent, far = [], []
        while len(adjacent) < 120:
            cid = int(rng.integers(1, side * side))
            if cid % side != 0:
                adjacent.append(corr(cid, cid + 1))
        while len(far) < 120:
            a = int(rng.integers(1, side * side + 1))
            b = int(rng.integers(1, side * side + 1))
            (ar, ac), (br, bc) = divmod(a - 1, side), divmod(b - 1, side)
            if np.hypot(ar - br, ac - bc) >= 10:  # >= 5 correlation lengths
                far.append(corr(a, b))
        diff = np.mean(adjacent) - np.mean(far)
        stderr = np.sqrt(np.var(adjacent) / len(adjacent) + np.var(far) / len(far))
        # one-sided test at far better than the 0.01 level
        assert diff > 3 * stderr

import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import small_config, sweeps_for
from rfids.errors import ConfigError
from rfids.spectrum import iter_waterfalls
from rfids.sweep_csv import format_timestamp, parse_sweep_csv, parse_timestamp, write_sweep_csv

RECORD = "2024-01-01, 10:00:00.500000, 400000000, 401000000, 200000.00, 8192, -70.1, -69.8, -71.0, -70.5, -70.2"


def test_single_record():
    cfg = small_config(((400, 401),), n=1)
    sweeps = list(parse_sweep_csv([RECORD], cfg))
    assert len(sweeps) == 1
    assert sweeps[0].powers[0].tolist() == [-70.1, -69.8, -71.0, -70.5, -70.2]
    assert sweeps[0].timestamp == parse_timestamp("2024-01-01", "10:00:00.500000")
    assert cfg.bin_frequencies().tolist() == [400000, 400200, 400400, 400600, 400800]


def test_empty_input():
    assert list(parse_sweep_csv([], small_config())) == []


def test_bin_width_mismatch_is_fatal():
    bad = RECORD.replace("200000.00", "100000.0")
    with pytest.raises(ConfigError):
        list(parse_sweep_csv([bad], small_config()))


def test_timestamps_are_utc():
    assert parse_timestamp("2024-01-01", "00:00:00") == 1704067200.0
    assert format_timestamp(1704067200.25) == ("2024-01-01", "00:00:00.250000")


def test_malformed_and_regressed_records_are_skipped():
    cfg = small_config(n=1)
    lines = [
        RECORD.replace("10:00:00.500000", "10:00:01"),
        "garbage line",
        RECORD,  # earlier than the first record
        RECORD.replace("10:00:00.500000", "10:00:02"),
    ]
    reader = parse_sweep_csv(lines, cfg)
    sweeps = list(reader)
    assert len(sweeps) == 2
    assert reader.skipped["timestamp regressed"] == 1
    assert sum(v for k, v in reader.skipped.items() if k.startswith("malformed")) == 1


def test_records_with_one_timestamp_merge_and_extra_bins_drop():
    cfg = small_config(((400, 401), (800, 801)), n=1)
    a = "2024-01-01, 10:00:00, 400000000, 401000000, 200000.00, 8192, 1, 2, 3, 4, 5"
    b = "2024-01-01, 10:00:00, 800000000, 801400000, 200000.00, 8192, 6, 7, 8, 9, 10, 11, 12"
    sweeps = list(parse_sweep_csv([b, a], cfg))
    assert len(sweeps) == 1
    assert sweeps[0].row().tolist() == [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]


def test_incomplete_sweep_dropped():
    cfg = small_config(((400, 401), (800, 801)), n=1)
    reader = parse_sweep_csv([RECORD], cfg)
    assert list(reader) == []
    assert reader.skipped["incomplete sweep"] == 1


@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.sampled_from([200.0, 1000.0, 600.0]))
def test_property_round_trip_exact(seed, n_waterfalls, segment):
    cfg = small_config(((400, 402), (868, 869)), n=3)
    rng = np.random.default_rng(seed)
    m = rng.normal(-80, 15, size=(3 * n_waterfalls, cfg.total_bins))
    sweeps = sweeps_for(cfg, m, t0=1704067200.0 + rng.integers(0, 10**6))
    buf = io.StringIO()
    write_sweep_csv(sweeps, cfg, buf, segment_khz=segment)
    buf.seek(0)
    back = list(parse_sweep_csv(buf, cfg))
    assert len(back) == len(sweeps)
    for a, b in zip(sweeps, back):
        assert np.array_equal(a.row(), b.row())
        assert b.timestamp == pytest.approx(a.timestamp, abs=1e-6)
    buf.seek(0)
    assert len(list(iter_waterfalls(parse_sweep_csv(buf, cfg), cfg))) == n_waterfalls

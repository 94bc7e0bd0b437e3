import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import small_config
from rfids import features as F
from rfids.errors import FormatError
from rfids.spectrum import FrequencyRange, Waterfall, slice_waterfall


def test_slice_stats_examples():
    s = F.slice_stats(np.array([[-50.0, -60.0], [-70.0, -40.0]]))
    assert (s.max, s.min, s.mean, s.median, s.sum) == (-40, -70, -55, -55, -220)
    assert s.std == pytest.approx(11.180339887, abs=1e-9)
    c = F.slice_stats(np.full((3, 4), -80.0))
    assert (c.max, c.min, c.mean, c.median, c.std, c.sum) == (-80, -80, -80, -80, 0, -960)


def test_slice_stats_of_waterfall_slice(rng):
    cfg = small_config(((400, 402),), n=3)
    w = Waterfall(0.0, cfg, rng.normal(size=(3, 10)))
    sl = slice_waterfall(w, FrequencyRange(400400, 401000))
    assert F.slice_stats(sl).max == w.matrix[:, 2:5].max()
    with pytest.raises(ValueError):
        F.slice_stats(np.zeros((0, 3)))


@pytest.mark.parametrize("hms,expected", [((0, 0, 0), (0, 1)), ((6, 0, 0), (1, 0)), ((18, 0, 0), (-1, 0)),
                                          ((12, 0, 0), (0, -1))])
def test_encode_time(hms, expected):
    h, m, s = hms
    e = F.encode_time(1704067200 + 3600 * h + 60 * m + s)
    assert (e.sin_component, e.cos_component) == pytest.approx(expected, abs=1e-12)


def test_encode_time_offset():
    e = F.encode_time(1704067200, utc_offset_s=6 * 3600)
    assert (e.sin_component, e.cos_component) == pytest.approx((1, 0), abs=1e-12)


@given(st.floats(0, 4e9, allow_nan=False))
def test_property_encode_time_periodic(t):
    a, b = F.encode_time(t), F.encode_time(t + 86400.0)
    assert abs(a.sin_component - b.sin_component) < 1e-9 and abs(a.cos_component - b.cos_component) < 1e-9
    assert math.hypot(a.sin_component, a.cos_component) == pytest.approx(1.0)


def _group(k):
    return F.SliceStats(*(float(k + i) for i in range(6))), F.TimeEncoding(0.5, -0.5)


def test_identical_groups_repeat():
    s, e = _group(0)
    v = F.window_features([(float(t), s, e) for t in range(10)], "b")
    assert np.array_equal(v.values, np.tile(F.group_values(s, e), 10))
    assert v.window_end_time == 9.0


def test_warm_up_and_overlap():
    win = F.SlidingWindow("b")
    out = [win.push(float(t), *_group(t)) for t in range(11)]
    assert all(v is None for v in out[:9])
    a, b = out[9], out[10]
    assert np.array_equal(a.values[8:], b.values[:72])
    assert not np.array_equal(a.values[:8], b.values[:8])
    with pytest.raises(ValueError):
        win.push(5.0, *_group(0))


def test_window_errors():
    s, e = _group(0)
    with pytest.raises(ValueError):
        F.window_features([(float(t), s, e) for t in range(11)], "b")
    with pytest.raises(ValueError):
        F.window_features([(0.0, s, e)] * 10, "b")
    with pytest.raises(ValueError):
        F.FeatureVector(np.zeros(79), 0.0, "b")


def _waterfalls(cfg, count, rng, t0=1704067200.0):
    return [Waterfall(t0 + j * cfg.waterfall_duration_s, cfg, rng.normal(-80, 5, size=(cfg.sweeps_per_waterfall, cfg.total_bins)))
            for j in range(count)]


def test_extract_features_matches_sliding_window(rng):
    cfg = small_config(((400, 402), (868, 869)), n=4)
    ws = _waterfalls(cfg, 14, rng)
    slices = [F.SliceSpec.of(400, 402), F.SliceSpec(("868x"), FrequencyRange(868000, 868600))]
    tabs = F.extract_features(ws, slices)
    for spec in slices:
        win = F.SlidingWindow(spec.slice_id)
        ref = []
        for w in ws:
            st_ = F.slice_stats(slice_waterfall(w, spec.band))
            v = win.push(w.start_time, st_, F.encode_time(w.start_time))
            if v is not None:
                ref.append(v)
        tab = tabs[spec.slice_id]
        assert len(tab) == len(ref) == 5  # first vector at the 10th waterfall, then one per waterfall
        assert tab.times[0] == ws[9].start_time
        for v, row in zip(ref, tab.values):
            np.testing.assert_allclose(row, v.values, rtol=1e-13)


def test_extract_features_rejects_time_regression(rng):
    cfg = small_config(n=2)
    ws = _waterfalls(cfg, 3, rng)
    with pytest.raises(ValueError):
        F.extract_features([ws[1], ws[0]], [F.SliceSpec.of(400, 401)])


def test_scaler_examples():
    lo, hi = np.full(3, -90.0), np.array([-30.0, -30.0, -90.0])
    sc = F.FeatureScaler(lo, hi)
    out = sc.transform(np.array([[-60.0, -95.0, -20.0]]))
    assert out.tolist() == [[0.5, 0.0, 0.5]]
    assert sc.transform(np.array([-10.0, 0.0, -90.0])).tolist() == [1.0, 1.0, 0.5]


def test_fit_scaler_and_persist(tmp_path, rng):
    x = rng.normal(size=(20, 80))
    sc = F.fit_scaler(x)
    z = sc.transform(x)
    assert z.min() == 0.0 and z.max() == 1.0
    p = tmp_path / "scaler.json"
    sc.save(p)
    back = F.FeatureScaler.load(p)
    assert np.array_equal(back.min, sc.min) and np.array_equal(back.max, sc.max)
    p.write_text('{"format": "rfids-scaler"')
    with pytest.raises(FormatError):
        F.FeatureScaler.load(p)
    with pytest.raises(ValueError):
        F.fit_scaler(x[:1])
    v = F.FeatureVector(x[0], 1.0, "b")
    nv = F.apply_scaler(sc, v)
    assert nv.normalized and np.array_equal(nv.values, z[0])


@given(st.integers(0, 2**32 - 1))
def test_property_scaler_bounds(seed):
    rng = np.random.default_rng(seed)
    train = rng.normal(size=(5, 80))
    train[:, 3] = 1.0
    sc = F.fit_scaler(train)
    z = sc.transform(rng.normal(scale=3, size=(10, 80)))
    assert np.all((z >= 0) & (z <= 1)) and np.all(z[:, 3] == 0.5)


def test_feature_table_split_and_csv(rng):
    tab = F.FeatureTable("400-500", np.arange(10.0), rng.normal(size=(10, 80)))
    a, b = tab.split(0.7)
    assert len(a) == 7 and len(b) == 3 and a.times[-1] < b.times[0]
    buf = io.StringIO()
    tab.write_csv(buf)
    buf.seek(0)
    back = F.FeatureTable.read_csv(buf)
    assert back.slice_id == "400-500" and np.array_equal(back.values, tab.values)
    assert np.array_equal(back.times, tab.times)
    assert [v.window_end_time for v in tab.vectors()] == list(tab.times)
    with pytest.raises(FormatError):
        F.FeatureTable.read_csv(io.StringIO("a,b\n"))

import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import ratio
from rfids import evaluate as E
from rfids.detector import Alarm, DetectorProfile, ErrorStats
from rfids import autoencoder as ae
from rfids.features import FeatureScaler
from rfids.sim import TruthEntry

BAND = (860_000.0, 870_000.0)
T0 = 1_704_067_200.0

# (tp, fp, fn, tn): hand-built fixtures, including the table spot values
FIXTURES = [
    (26, 0, 0, 0), (25, 0, 1, 0), (0, 4, 0, 996), (0, 0, 0, 0), (1, 1, 1, 1), (3, 7, 2, 11),
    (100, 1, 0, 500), (0, 0, 5, 0), (0, 5, 0, 0), (594, 1, 1, 3000), (1, 0, 0, 12), (7, 3, 9, 0),
    (2, 0, 1, 97), (13, 13, 13, 13), (50, 2, 50, 2), (0, 1, 1, 0), (999, 0, 1, 1), (1, 999, 0, 1),
    (41, 17, 3, 301), (5, 0, 0, 0),
]


@pytest.mark.parametrize("tp,fp,fn,tn", FIXTURES)
def test_metric_fixtures(tp, fp, fn, tn):
    c = E.ConfusionCounts(tp, fp, fn, tn)
    for got, want in ((E.precision(c), ratio(tp, tp + fp)), (E.recall(c), ratio(tp, tp + fn)),
                      (E.tnr(c), ratio(tn, tn + fp))):
        if want is None:
            assert got is None
        else:
            assert got == float(want)  # correctly rounded value of the exact ratio


def test_table_spot_values():
    assert E.precision(E.ConfusionCounts(tp=26)) == 1.0
    assert E.recall(E.ConfusionCounts(tp=25, fn=1)) == pytest.approx(0.9615, abs=5e-5)
    assert f"{100 * E.recall(E.ConfusionCounts(tp=25, fn=1)):.2f}%" == "96.15%"
    assert E.tnr(E.ConfusionCounts(fp=4, tn=996)) == 0.996
    assert E.precision(E.ConfusionCounts()) is None


def test_counts_validation_and_sum():
    with pytest.raises(ValueError):
        E.ConfusionCounts(tp=-1)
    with pytest.raises(ValueError):
        E.ConfusionCounts(tp=1.5)
    assert E.ConfusionCounts(1, 2, 3, 4) + E.ConfusionCounts(1, 1, 1, 1) == E.ConfusionCounts(2, 3, 4, 5)


def entry(start, dur, band=BAND, aid=7):
    return TruthEntry(aid, T0 + start, T0 + start + dur, band)


def alarm(t):
    return Alarm(T0 + t, "860-870", 0.9, 0)


def test_match_examples():
    c = E.match([alarm(1060)], [entry(1000, 60)], band=BAND)
    assert (c.tp, c.fn) == (1, 0)
    c = E.match([alarm(100)], [], band=BAND, span=(T0, T0 + 3600))
    assert c.fp == 1 and c.tn == 11
    c = E.match([], [], band=BAND, span=(T0, T0 + 3600))
    assert (c.tn, c.fp) == (12, 0)


def test_match_window_edges_and_band():
    e = entry(1000, 60)
    assert E.match([alarm(1000 - 300)], [e], band=BAND).tp == 1
    assert E.match([alarm(1060 + 300)], [e], band=BAND).tp == 1
    c = E.match([alarm(1060 + 301)], [e], band=BAND)
    assert (c.tp, c.fn, c.fp) == (0, 1, 1)
    other = entry(1000, 60, band=(433_000.0, 434_000.0))
    c = E.match([alarm(1030)], [other], band=BAND)
    assert (c.tp, c.fn, c.fp) == (0, 0, 1)
    with pytest.raises(ValueError):
        E.match([alarm(5), alarm(1)], [])
    with pytest.raises(ValueError):
        E.match([], [], window_s=0)


def test_tn_excludes_extended_attack_time():
    # 2 h span, one attack of 600 s: free time = 7200 - (600 + 2 * 300) = 6000 s -> 20 segments
    c = E.match([], [entry(3000, 600)], band=BAND, span=(T0, T0 + 7200))
    assert c.tn == 20 and c.fn == 1


timelines = st.tuples(
    st.lists(st.tuples(st.integers(0, 40), st.integers(1, 10)), max_size=5),
    st.lists(st.integers(0, 500), max_size=30),
)


def _build(spec, scale=60.0):
    attacks, alarm_ts = spec
    truth, cursor = [], 0.0
    for gap, dur in attacks:
        cursor += gap * scale
        truth.append(entry(cursor, dur * scale))
        cursor += dur * scale
    alarms = [alarm(t * scale * 0.5) for t in sorted(alarm_ts)]
    return truth, alarms, (T0, T0 + max(cursor, 250 * scale) + 600)


@given(timelines)
def test_property_conservation(spec):
    truth, alarms, span = _build(spec)
    r = E.match_detail(alarms, truth, 300, BAND, span)
    assert r.counts.tp + r.counts.fn == len(truth)
    assert len(r.alarm_labels) == len(alarms)
    assert r.counts.fp == r.alarm_labels.count("fp")


@given(timelines)
def test_property_duplicated_timeline_is_scale_free(spec):
    truth, alarms, span = _build(spec)
    c1 = E.match(alarms, truth, 300, BAND, span)
    shift = span[1] - span[0]
    truth2 = truth + [TruthEntry(e.attack_id, e.start_time + shift, e.end_time + shift, e.band) for e in truth]
    alarms2 = alarms + [Alarm(a.time + shift, a.slice_id, a.score, a.argmax_feature) for a in alarms]
    c2 = E.match(alarms2, truth2, 300, BAND, (span[0], span[1] + shift))
    for f in (E.precision, E.recall):
        assert f(c1) == f(c2)
    assert (c2.tp, c2.fp, c2.fn) == (2 * c1.tp, 2 * c1.fp, 2 * c1.fn)


@given(timelines, st.floats(10, 900), st.floats(10, 900))
def test_property_smaller_window_never_more_tp(spec, w1, w2):
    truth, alarms, span = _build(spec)
    lo, hi = sorted((w1, w2))
    assert E.match(alarms, truth, lo, BAND, span).tp <= E.match(alarms, truth, hi, BAND, span).tp


def test_report_outputs():
    rows = [E.MetricsRow("400-500", (8,), 0.2, 1.0, 1.0, 0.9983, 0.99, E.ConfusionCounts(594, 0, 1, 99)),
            E.MetricsRow("2400-2500", (), 0.6, 0.9701, None, None)]
    rep = E.MetricsReport(rows)
    text = rep.to_text()
    assert text.splitlines()[0].split("  ")[0] == "Bandwidth (MHz)"
    assert "99.83%" in text and "97.01%" in text and "-" in text.splitlines()[3]
    lines = rep.to_csv().splitlines()
    assert lines[1].startswith("400-500,8,0.2,1.0,1.0,0.9983,0.99,594,0,1,99")
    assert lines[2].startswith("2400-2500,,0.6,0.9701,,,")


def _curve_profile():
    model = ae.init_params(ae.Architecture(), 0)
    return DetectorProfile("s", ErrorStats(np.zeros(80), np.ones(80)), 0.5, model,
                           FeatureScaler(np.zeros(80), np.ones(80)))


def test_error_curve_markers(rng):
    p = _curve_profile()
    times = T0 + 3.75 * np.arange(400)
    values = rng.uniform(size=(400, 80))
    assert not any(r[3] for r in E.error_curve(p, times, values))
    truth = [entry(100 + 200 * k, 60) for k in range(6)]
    rows = E.error_curve(p, times, values, truth, BAND)
    assert len(rows) == 400 and sum(r[3] for r in rows) == 6
    buf = io.StringIO()
    E.write_error_curve(rows, buf)
    assert buf.getvalue().splitlines()[0] == "unix_time,score,max_abs_error,attack_start"
    assert E.error_curve(p, np.array([]), np.zeros((0, 80))) == []

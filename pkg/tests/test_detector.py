import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rfids import autoencoder as ae
from rfids import detector as D
from rfids.errors import FormatError
from rfids.features import FeatureScaler, FeatureVector, fit_scaler


def test_fit_error_stats_examples():
    s = D.fit_error_stats(np.tile(np.arange(80.0), (5, 1)))
    assert np.array_equal(s.mu, np.arange(80.0)) and np.all(s.sigma == D.SIGMA_FLOOR)
    # {0, 2}: mean 1; the n - 1 sample std is sqrt(2) (the population std would be 1)
    s = D.fit_error_stats(np.array([[0.0], [2.0]]))
    assert s.mu.tolist() == [1.0] and s.sigma[0] == pytest.approx(math.sqrt(2), rel=1e-15)
    with pytest.raises(ValueError):
        D.fit_error_stats(np.zeros((1, 80)))


def test_score_examples():
    stats = D.ErrorStats(np.full(80, 0.1), np.full(80, 0.2))
    assert D.score(stats, stats.mu) == (0.0, 0)
    e = stats.mu.copy()
    e[17] += 0.2
    s, i = D.score(stats, e)
    assert s == pytest.approx(1 - math.exp(-0.5), abs=1e-15) and i == 17
    assert D.score(stats, e, "mean")[0] == pytest.approx((1 - math.exp(-0.5)) / 80, abs=1e-15)
    with pytest.raises(ValueError):
        D.score(stats, e, "median")
    with pytest.raises(ValueError):
        D.score(stats, e[:79])


@given(st.integers(0, 2**32 - 1), st.sampled_from(["max", "mean"]))
def test_property_score_monotone_and_bounded(seed, agg):
    rng = np.random.default_rng(seed)
    stats = D.ErrorStats(rng.normal(size=80), rng.uniform(0.01, 2, size=80))
    e = stats.mu + rng.normal(size=80) * stats.sigma * 2
    s0, _ = D.score(stats, e, agg)
    assert 0 <= s0 < 1 or s0 == pytest.approx(1.0)
    k = rng.integers(80)
    farther = e.copy()
    farther[k] += np.sign(e[k] - stats.mu[k] or 1.0) * rng.uniform(0, 3)
    assert D.score(stats, farther, agg)[0] >= s0
    assert D.score(stats, stats.mu, agg)[0] == 0.0


def test_score_batch_matches_single(rng):
    stats = D.ErrorStats(np.zeros(80), np.ones(80))
    e = rng.normal(size=(6, 80))
    s, idx = D.score_batch(stats, e)
    for row, si, ii in zip(e, s, idx):
        assert D.score(stats, row) == (si, ii)


def test_calibrate_threshold_examples():
    assert D.calibrate_threshold([0.1, 0.3, 0.55]) == 0.6
    assert D.calibrate_threshold([0.0] * 10) == 0.1
    assert D.calibrate_threshold([0.55, 0.65], target=1) == 0.6
    assert D.calibrate_threshold([0.95]) == 0.9  # saturated
    with pytest.raises(ValueError):
        D.calibrate_threshold([])
    with pytest.raises(ValueError):
        D.calibrate_threshold([0.2], grid=[])


def _profile(rng, aggregation="max"):
    model = ae.init_params(ae.Architecture(), 2)
    train = rng.uniform(size=(50, 80))
    scaler = fit_scaler(train)
    test = rng.uniform(size=(40, 80))
    err = ae.reconstruction_error(model, scaler.transform(test))
    stats = D.fit_error_stats(err)
    scores, _ = D.score_batch(stats, err, aggregation)
    thr = D.calibrate_threshold(scores)
    return D.DetectorProfile("400-500", stats, thr, model, scaler, aggregation), test, scores


def test_replay_of_calibration_split_is_silent(rng):
    p, test, scores = _profile(rng, "mean")
    assert scores.max() <= p.threshold
    assert D.detect_table(p, np.arange(40.0), test) == []


def test_injected_deviation_alarms_on_that_feature(rng):
    model = ae.init_params(ae.Architecture(), 2)
    scaler = FeatureScaler(np.zeros(80), np.ones(80))
    x = np.full(80, 0.5)
    base = ae.reconstruction_error(model, x)
    # shift the input of feature 5 until its error moves by 10 sigma
    probe = x.copy()
    probe[5] += 0.1
    d = ae.reconstruction_error(model, probe) - base
    # sigma of feature 5 set so its error sits 10 sigma out; other features get a wide sigma
    stats = D.ErrorStats(base, np.where(np.arange(80) == 5, abs(d[5]) / 10, 1.0))
    p = D.DetectorProfile("s", stats, 0.9, model, scaler, "max")
    (alarm,) = list(D.detect(p, [FeatureVector(probe, 42.0, "s")]))
    assert alarm.argmax_feature == 5 and alarm.time == 42.0
    assert alarm.score == pytest.approx(1 - math.exp(-50), abs=1e-12)


def test_empty_stream_and_shape_errors(rng):
    p, _, _ = _profile(rng)
    assert list(D.detect(p, [])) == []
    assert D.detect_table(p, np.array([]), np.zeros((0, 80))) == []
    with pytest.raises(ValueError):
        list(D.detect(p, [np.zeros(79)]))


@given(st.integers(0, 2**32 - 1))
def test_property_threshold_monotone(seed):
    rng = np.random.default_rng(seed)
    p, _, _ = _profile(rng)
    stream = rng.uniform(-0.5, 1.5, size=(30, 80))
    counts = []
    for thr in D.DEFAULT_GRID:
        p.threshold = thr
        counts.append(len(D.detect_table(p, np.arange(30.0), stream)))
    assert counts == sorted(counts, reverse=True)


def test_detect_and_detect_table_agree(rng):
    p, _, _ = _profile(rng)
    stream = rng.uniform(-0.5, 1.5, size=(30, 80))
    times = np.arange(30.0)
    a = D.detect_table(p, times, stream)
    b = list(D.detect(p, [FeatureVector(v, t, "x") for t, v in zip(times, stream)]))
    assert [(x.time, x.argmax_feature) for x in a] == [(x.time, x.argmax_feature) for x in b]
    np.testing.assert_allclose([x.score for x in a], [x.score for x in b], rtol=1e-12)


def test_profile_validation(rng):
    p, _, _ = _profile(rng)
    with pytest.raises(ValueError):
        D.DetectorProfile("s", p.stats, 1.0, p.model, p.scaler)
    with pytest.raises(ValueError):
        D.DetectorProfile("s", p.stats, 0.5, p.model, p.scaler, "median")
    with pytest.raises(ValueError):
        D.ErrorStats(np.zeros(3), np.zeros(3))


def test_profile_round_trip(tmp_path, rng):
    p, test, _ = _profile(rng, "mean")
    path = tmp_path / "profile.json"
    p.save(path)
    assert (tmp_path / "model.json").exists() and (tmp_path / "scaler.json").exists()
    q = D.DetectorProfile.load(path)
    assert q.threshold == p.threshold and q.aggregation == "mean"
    assert np.array_equal(q.scores(test)[0], p.scores(test)[0])
    path.write_text('{"format": "other", "version": 1}')
    with pytest.raises(FormatError):
        D.DetectorProfile.load(path)
    path.write_text("{")
    with pytest.raises(FormatError):
        D.DetectorProfile.load(path)


def test_alarm_csv_round_trip():
    alarms = [D.Alarm(1704067200.5, "860-870", 0.734, 12), D.Alarm(1704067300.0, "860-870", 0.9, 0)]
    buf = io.StringIO()
    D.write_alarms(alarms, buf)
    assert buf.getvalue().splitlines()[0] == "unix_time,slice_id,score,argmax_feature"
    buf.seek(0)
    assert D.read_alarms(buf) == alarms

"""Gaussian error model, anomaly score, threshold calibration and alarm stream."""
from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import autoencoder as ae
from .errors import FormatError
from .features import FeatureScaler, FeatureVector

log = logging.getLogger(__name__)

SIGMA_FLOOR = 1e-6
DEFAULT_GRID = tuple(round(0.1 * k, 1) for k in range(1, 10))
AGGREGATIONS = ("max", "mean")


@dataclass(frozen=True)
class ErrorStats:
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.array(self.mu, dtype=np.float64)
        sigma = np.array(self.sigma, dtype=np.float64)
        if mu.shape != sigma.shape or mu.ndim != 1:
            raise ValueError("mu and sigma must be equal-length vectors")
        if np.any(sigma <= 0):
            raise ValueError("sigma must be positive")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)


def fit_error_stats(test_errors, sigma_floor: float = SIGMA_FLOOR) -> ErrorStats:
    """Per-component sample mean and sample std (n - 1), std floored at ``sigma_floor``."""
    e = np.atleast_2d(np.asarray(test_errors, dtype=np.float64))
    if e.shape[0] < 2:
        raise ValueError("need at least two error vectors")
    return ErrorStats(e.mean(axis=0), np.maximum(e.std(axis=0, ddof=1), sigma_floor))


def feature_scores(stats: ErrorStats, e) -> np.ndarray:
    """``1 - exp(-z^2 / 2)`` per component, z the Gaussian z-score of the error."""
    e = np.asarray(e, dtype=np.float64)
    if e.shape[-1] != stats.mu.shape[0]:
        raise ValueError(f"error vector has {e.shape[-1]} components, stats have {stats.mu.shape[0]}")
    z = (e - stats.mu) / stats.sigma
    return -np.expm1(-0.5 * z * z)


def score(stats: ErrorStats, e, aggregation: str = "max") -> tuple[float, int]:
    """Vector score in [0, 1) and the index of the most deviant component."""
    p = feature_scores(stats, e)
    if p.ndim != 1:
        raise ValueError("score takes one error vector; use score_batch for many")
    i = int(np.argmax(p))
    return float(_aggregate(p, aggregation)), i


def score_batch(stats: ErrorStats, errors, aggregation: str = "max") -> tuple[np.ndarray, np.ndarray]:
    p = np.atleast_2d(feature_scores(stats, errors))
    return _aggregate(p, aggregation), np.argmax(p, axis=-1)


def _aggregate(p: np.ndarray, aggregation: str):
    if aggregation == "max":
        return p.max(axis=-1)
    if aggregation == "mean":
        return p.mean(axis=-1)
    raise ValueError(f"unknown aggregation {aggregation!r}")


def calibrate_threshold(test_scores: Sequence[float], grid: Sequence[float] = DEFAULT_GRID, target: int = 0) -> float:
    """Smallest grid value leaving at most ``target`` scores strictly above it."""
    if len(grid) == 0:
        raise ValueError("calibration grid is empty")
    s = np.asarray(test_scores, dtype=np.float64)
    if s.size == 0:
        raise ValueError("no calibration scores")
    g = sorted(float(t) for t in grid)
    for t in g:
        if int(np.count_nonzero(s > t)) <= target:
            return t
    log.warning("threshold saturated at %.3g: %d calibration scores still above it",
                g[-1], int(np.count_nonzero(s > g[-1])))
    return g[-1]


@dataclass(frozen=True)
class Alarm:
    time: float
    slice_id: str
    score: float
    argmax_feature: int


@dataclass
class DetectorProfile:
    slice_id: str
    stats: ErrorStats
    threshold: float
    model: ae.ModelParams
    scaler: FeatureScaler
    aggregation: str = "max"
    model_path: str | None = None
    scaler_path: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 < self.threshold < 1:
            raise ValueError("threshold must lie strictly between 0 and 1")
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"unknown aggregation {self.aggregation!r}")

    def errors(self, values: np.ndarray) -> np.ndarray:
        x = self.scaler.transform(np.atleast_2d(values))
        return ae.reconstruction_error(self.model, x)

    def scores(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return score_batch(self.stats, self.errors(values), self.aggregation)

    def to_dict(self) -> dict:
        return {
            "format": "rfids-profile",
            "version": 1,
            "slice_id": self.slice_id,
            "mu": self.stats.mu.tolist(),
            "sigma": self.stats.sigma.tolist(),
            "threshold": self.threshold,
            "aggregation": self.aggregation,
            "model": self.model_path,
            "scaler": self.scaler_path,
            **({"extra": self.extra} if self.extra else {}),
        }

    def save(self, path) -> None:
        """Write the profile JSON; model and scaler are written next to it when paths are unset."""
        base = os.path.dirname(os.path.abspath(path))
        if self.model_path is None:
            self.model_path = "model.json"
        if self.scaler_path is None:
            self.scaler_path = "scaler.json"
        ae.save_model(self.model, os.path.join(base, self.model_path))
        self.scaler.save(os.path.join(base, self.scaler_path))
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "DetectorProfile":
        with open(path) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise FormatError(f"profile is not valid JSON: {exc}") from exc
        if d.get("format") != "rfids-profile" or d.get("version") != 1:
            raise FormatError("not a version-1 detector profile")
        base = os.path.dirname(os.path.abspath(path))
        model = ae.load_model(os.path.join(base, d["model"]))
        scaler = FeatureScaler.load(os.path.join(base, d["scaler"]))
        return cls(d["slice_id"], ErrorStats(np.array(d["mu"]), np.array(d["sigma"])), float(d["threshold"]),
                   model, scaler, d.get("aggregation", "max"), d["model"], d["scaler"], d.get("extra", {}))


def detect(profile: DetectorProfile, stream: Iterable[FeatureVector]) -> Iterator[Alarm]:
    """Score each vector in order; yield an alarm when the score exceeds the threshold."""
    n = profile.model.arch.n_inputs
    for v in stream:
        values = v.values if isinstance(v, FeatureVector) else np.asarray(v)
        if values.shape != (n,):
            raise ValueError(f"feature vector of shape {values.shape}, profile expects ({n},)")
        s, i = score(profile.stats, profile.errors(values)[0], profile.aggregation)
        if s > profile.threshold:
            yield Alarm(v.window_end_time, profile.slice_id, s, i)


def detect_table(profile: DetectorProfile, times: np.ndarray, values: np.ndarray) -> list[Alarm]:
    """Batch form of :func:`detect` over a feature matrix."""
    if len(times) == 0:
        return []
    s, idx = profile.scores(values)
    hits = np.nonzero(s > profile.threshold)[0]
    return [Alarm(float(times[k]), profile.slice_id, float(s[k]), int(idx[k])) for k in hits]


def write_alarms(alarms: Iterable[Alarm], sink) -> None:
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(["unix_time", "slice_id", "score", "argmax_feature"])
    for a in alarms:
        w.writerow([repr(a.time), a.slice_id, repr(a.score), a.argmax_feature])


def read_alarms(source) -> list[Alarm]:
    return [Alarm(float(r["unix_time"]), r["slice_id"], float(r["score"]), int(r["argmax_feature"]))
            for r in csv.DictReader(source)]

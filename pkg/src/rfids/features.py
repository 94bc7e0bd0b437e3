"""Per-slice statistics, time-of-day encoding and the 80-value sliding window."""
from __future__ import annotations

import csv
import json
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import kernels
from .errors import FormatError
from .spectrum import FrequencyRange, Waterfall, WaterfallSlice

WINDOW = 10
STATS = ("max", "min", "mean", "median", "std", "sum")
GROUP = len(STATS) + 2
N_FEATURES = WINDOW * GROUP  # 80


@dataclass(frozen=True)
class SliceStats:
    max: float
    min: float
    mean: float
    median: float
    std: float
    sum: float

    def as_array(self) -> np.ndarray:
        return np.array([self.max, self.min, self.mean, self.median, self.std, self.sum])


@dataclass(frozen=True)
class TimeEncoding:
    sin_component: float
    cos_component: float


def slice_stats(w: WaterfallSlice | np.ndarray) -> SliceStats:
    m = w.matrix if isinstance(w, WaterfallSlice) else np.asarray(w, dtype=np.float64)
    if m.ndim != 2 or m.size == 0:
        raise ValueError("slice_stats needs a non-empty 2-D slice")
    return SliceStats(*kernels.window_stats(m, [0], [m.shape[1]])[0].tolist())


def encode_time(t: float, utc_offset_s: float = 0.0) -> TimeEncoding:
    """Daily cycle: seconds since midnight mapped onto the unit circle."""
    s = math.fmod(t + utc_offset_s, 86400.0)
    if s < 0:
        s += 86400.0
    a = 2.0 * math.pi * s / 86400.0
    return TimeEncoding(math.sin(a), math.cos(a))


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    window_end_time: float
    band: str
    normalized: bool = False

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.shape != (N_FEATURES,):
            raise ValueError(f"feature vector must have {N_FEATURES} values, got {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def group_values(stats: SliceStats, enc: TimeEncoding) -> np.ndarray:
    return np.array([*stats.as_array(), enc.sin_component, enc.cos_component])


def window_features(history: Sequence[tuple[float, SliceStats, TimeEncoding]], band: str) -> FeatureVector | None:
    """Concatenate ten ``(time, stats, encoding)`` groups, oldest first.

    Returns ``None`` (warm-up) with fewer than ten groups.
    """
    if len(history) < WINDOW:
        return None
    if len(history) > WINDOW:
        raise ValueError(f"window takes exactly {WINDOW} groups")
    times = [h[0] for h in history]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("window groups must have strictly increasing timestamps")
    values = np.concatenate([group_values(s, e) for _, s, e in history])
    return FeatureVector(values, times[-1], band)


class SlidingWindow:
    """Stateful per-slice window; ``push`` returns a vector once ten groups are held."""

    def __init__(self, band: str):
        self.band = band
        self._buf: deque = deque(maxlen=WINDOW)

    def push(self, t: float, stats: SliceStats, enc: TimeEncoding) -> FeatureVector | None:
        if self._buf and t <= self._buf[-1][0]:
            raise ValueError("waterfall timestamps must strictly increase")
        self._buf.append((t, stats, enc))
        return window_features(list(self._buf), self.band)


@dataclass(frozen=True)
class SliceSpec:
    """Named frequency slice a model is built for."""

    slice_id: str
    band: FrequencyRange

    @classmethod
    def of(cls, lo_mhz: float, hi_mhz: float) -> "SliceSpec":
        r = FrequencyRange.from_mhz(lo_mhz, hi_mhz)
        return cls(r.label(), r)


@dataclass
class FeatureTable:
    """Feature vectors of one slice as a dense matrix (row = vector, oldest first)."""

    slice_id: str
    times: np.ndarray
    values: np.ndarray

    def __len__(self):
        return len(self.times)

    def vectors(self) -> Iterator[FeatureVector]:
        for t, v in zip(self.times, self.values):
            yield FeatureVector(v, float(t), self.slice_id)

    def select(self, mask) -> "FeatureTable":
        return FeatureTable(self.slice_id, self.times[mask], self.values[mask])

    def split(self, fraction: float) -> tuple["FeatureTable", "FeatureTable"]:
        """Chronological split: the first ``fraction`` of vectors, then the rest."""
        k = int(round(fraction * len(self)))
        return (FeatureTable(self.slice_id, self.times[:k], self.values[:k]),
                FeatureTable(self.slice_id, self.times[k:], self.values[k:]))

    def write_csv(self, sink) -> None:
        w = csv.writer(sink, lineterminator="\n")
        w.writerow(["band", "window_end_unix"] + [f"f{i}" for i in range(N_FEATURES)])
        for t, v in zip(self.times, self.values):
            w.writerow([self.slice_id, repr(float(t))] + [repr(float(x)) for x in v])

    @classmethod
    def read_csv(cls, source) -> "FeatureTable":
        r = csv.reader(source)
        header = next(r, None)
        if header is None or len(header) != N_FEATURES + 2:
            raise FormatError("feature CSV header malformed")
        sid, times, rows = None, [], []
        for row in r:
            if len(row) != N_FEATURES + 2:
                raise FormatError("feature CSV row has wrong arity")
            sid = row[0]
            times.append(float(row[1]))
            rows.append([float(x) for x in row[2:]])
        return cls(sid or "", np.array(times), np.array(rows).reshape(-1, N_FEATURES))


def extract_features(waterfalls: Iterable[Waterfall], slices: Sequence[SliceSpec],
                     utc_offset_s: float = 0.0) -> dict[str, FeatureTable]:
    """Run every slice's sliding window over a waterfall stream.

    All slices of one waterfall go through a single kernel call.
    """
    starts = ends = None
    windows = {s.slice_id: deque(maxlen=WINDOW) for s in slices}
    out_t = {s.slice_id: [] for s in slices}
    out_v = {s.slice_id: [] for s in slices}
    last_t = None
    for w in waterfalls:
        if starts is None:
            cols = [w.config.columns(s.band) for s in slices]
            starts = np.array([c[0] for c in cols], dtype=np.intp)
            ends = np.array([c[1] for c in cols], dtype=np.intp)
        if last_t is not None and w.start_time <= last_t:
            raise ValueError("waterfall timestamps must strictly increase")
        last_t = w.start_time
        stats = kernels.window_stats(w.matrix, starts, ends)
        enc = encode_time(w.start_time, utc_offset_s)
        group_time = np.array([enc.sin_component, enc.cos_component])
        for k, s in enumerate(slices):
            buf = windows[s.slice_id]
            buf.append(np.concatenate([stats[k], group_time]))
            if len(buf) == WINDOW:
                out_t[s.slice_id].append(w.start_time)
                out_v[s.slice_id].append(np.concatenate(buf))
    return {
        s.slice_id: FeatureTable(s.slice_id, np.array(out_t[s.slice_id], dtype=np.float64),
                                 np.array(out_v[s.slice_id], dtype=np.float64).reshape(-1, N_FEATURES))
        for s in slices
    }


@dataclass(frozen=True)
class FeatureScaler:
    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo = np.array(self.min, dtype=np.float64)
        hi = np.array(self.max, dtype=np.float64)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("scaler min/max must be equal-length vectors")
        if np.any(hi < lo):
            raise ValueError("scaler max below min")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.min.shape[0]:
            raise ValueError(f"expected {self.min.shape[0]} features, got {x.shape[-1]}")
        span = self.max - self.min
        degenerate = span == 0
        safe = np.where(degenerate, 1.0, span)
        z = np.where(degenerate, 0.5, (x - self.min) / safe)
        return np.clip(z, 0.0, 1.0)

    def to_dict(self) -> dict:
        return {"format": "rfids-scaler", "version": 1, "min": self.min.tolist(), "max": self.max.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureScaler":
        if d.get("format") != "rfids-scaler" or d.get("version") != 1:
            raise FormatError("not a version-1 scaler document")
        return cls(np.array(d["min"]), np.array(d["max"]))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "FeatureScaler":
        with open(path) as fh:
            try:
                return cls.from_dict(json.load(fh))
            except (json.JSONDecodeError, KeyError) as exc:
                raise FormatError(f"scaler document unreadable: {exc}") from exc


def fit_scaler(training: np.ndarray | Sequence[FeatureVector]) -> FeatureScaler:
    x = _as_matrix(training)
    if x.shape[0] < 2:
        raise ValueError("fit_scaler needs at least two training vectors")
    return FeatureScaler(x.min(axis=0), x.max(axis=0))


def apply_scaler(scaler: FeatureScaler, vector):
    if isinstance(vector, FeatureVector):
        return FeatureVector(scaler.transform(vector.values), vector.window_end_time, vector.band, True)
    return scaler.transform(vector)


def _as_matrix(data) -> np.ndarray:
    if isinstance(data, np.ndarray):
        return np.atleast_2d(data.astype(np.float64))
    return np.array([v.values if isinstance(v, FeatureVector) else v for v in data], dtype=np.float64)

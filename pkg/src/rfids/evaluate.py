"""Alarm/ground-truth matching, precision/recall/TNR, report tables and error curves."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .detector import Alarm, DetectorProfile
from .sim import TruthEntry

DEFAULT_WINDOW_S = 300.0


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ValueError(f"{name} must be a non-negative integer")

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)


def _ratio(num: int, den: int) -> float | None:
    return None if den == 0 else num / den


def precision(c: ConfusionCounts) -> float | None:
    return _ratio(c.tp, c.tp + c.fp)


def recall(c: ConfusionCounts) -> float | None:
    return _ratio(c.tp, c.tp + c.fn)


def tnr(c: ConfusionCounts) -> float | None:
    return _ratio(c.tn, c.tn + c.fp)


def relevant_truth(truth: Iterable[TruthEntry], band: tuple[float, float] | None) -> list[TruthEntry]:
    if band is None:
        return list(truth)
    lo, hi = band
    return [e for e in truth if e.band[0] < hi and lo < e.band[1]]


@dataclass
class MatchResult:
    counts: ConfusionCounts
    detected: list[int]  # per truth entry: 1 if detected else 0
    alarm_labels: list[str]  # "tp" or "fp" per alarm


def match_detail(alarms: Sequence[Alarm], truth: Iterable[TruthEntry], window_s: float = DEFAULT_WINDOW_S,
                 band: tuple[float, float] | None = None, span: tuple[float, float] | None = None) -> MatchResult:
    """Window-based matching.

    A truth interval overlapping ``band`` is a TP when at least one alarm lies
    in ``[start - window_s, end + window_s]``, otherwise a FN. Alarms outside
    every such extended interval are FPs. The remaining attack-free time of
    ``span`` is cut into consecutive ``window_s`` segments (partial segments
    dropped); each segment without an alarm is a TN.
    """
    if window_s <= 0:
        raise ValueError("window_s must be positive")
    times = np.array([a.time for a in alarms], dtype=np.float64)
    if np.any(np.diff(times) < 0):
        raise ValueError("alarms must be sorted by time")
    entries = relevant_truth(truth, band)
    ext = sorted((e.start_time - window_s, e.end_time + window_s) for e in entries)

    detected = []
    for e in entries:
        lo, hi = e.start_time - window_s, e.end_time + window_s
        i = np.searchsorted(times, lo, side="left")
        detected.append(int(i < len(times) and times[i] <= hi))

    labels = []
    for t in times:
        inside = any(lo <= t <= hi for lo, hi in ext)
        labels.append("tp" if inside else "fp")
    fp = labels.count("fp")

    if span is None:
        cand = list(times) + [x for iv in ext for x in iv]
        span = (min(cand), max(cand)) if cand else (0.0, 0.0)
    merged: list[list[float]] = []
    for lo, hi in ext:
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    free, cursor = [], span[0]
    for lo, hi in merged:
        if lo > cursor:
            free.append((cursor, min(lo, span[1])))
        cursor = max(cursor, hi)
    if cursor < span[1]:
        free.append((cursor, span[1]))
    tn = 0
    for lo, hi in free:
        n_seg = int(np.floor((hi - lo) / window_s + 1e-9))
        for k in range(n_seg):
            s0, s1 = lo + k * window_s, lo + (k + 1) * window_s
            a = np.searchsorted(times, s0, side="left")
            if not (a < len(times) and times[a] < s1):
                tn += 1
    tp = sum(detected)
    return MatchResult(ConfusionCounts(tp, fp, len(entries) - tp, tn), detected, labels)


def match(alarms: Sequence[Alarm], truth: Iterable[TruthEntry], window_s: float = DEFAULT_WINDOW_S,
          band: tuple[float, float] | None = None, span: tuple[float, float] | None = None) -> ConfusionCounts:
    return match_detail(alarms, truth, window_s, band, span).counts


@dataclass
class MetricsRow:
    slice_id: str
    attack_ids: tuple[int, ...]
    threshold: float
    testing_tnr: float | None
    precision: float | None
    recall: float | None
    tnr: float | None = None
    counts: ConfusionCounts = field(default_factory=ConfusionCounts)
    testing_counts: ConfusionCounts = field(default_factory=ConfusionCounts)


def _pct(v: float | None) -> str:
    return "-" if v is None else f"{100 * v:.2f}%"


def _num(v: float | None) -> str:
    return "" if v is None else repr(float(v))


class MetricsReport:
    COLUMNS = ("Bandwidth (MHz)", "ID Attack", "Threshold", "Testing TNR", "Precision", "Recall")

    def __init__(self, rows: Sequence[MetricsRow] = ()):
        self.rows = list(rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["slice_id", "attack_ids", "threshold", "testing_tnr", "precision", "recall", "attack_tnr",
                    "tp", "fp", "fn", "tn", "test_fp", "test_tn"])
        for r in self.rows:
            c, tc = r.counts, r.testing_counts
            w.writerow([r.slice_id, " ".join(map(str, r.attack_ids)), repr(r.threshold), _num(r.testing_tnr),
                        _num(r.precision), _num(r.recall), _num(r.tnr), c.tp, c.fp, c.fn, c.tn, tc.fp, tc.tn])
        return buf.getvalue()

    def to_text(self) -> str:
        body = [(r.slice_id, ",".join(map(str, r.attack_ids)) or "-", f"{r.threshold:g}", _pct(r.testing_tnr),
                 _pct(r.precision), _pct(r.recall)) for r in self.rows]
        widths = [max(len(h), *(len(row[i]) for row in body)) if body else len(h) for i, h in enumerate(self.COLUMNS)]
        lines = ["  ".join(h.ljust(wd) for h, wd in zip(self.COLUMNS, widths))]
        lines.append("  ".join("-" * wd for wd in widths))
        lines += ["  ".join(v.ljust(wd) for v, wd in zip(row, widths)) for row in body]
        return "\n".join(lines) + "\n"


def error_curve(profile: DetectorProfile, times: np.ndarray, values: np.ndarray,
                truth: Iterable[TruthEntry] = (), band: tuple[float, float] | None = None) -> list[tuple]:
    """Rows ``(time, score, max |error|, is_attack_start)``; one marker per truth start."""
    times = np.asarray(times, dtype=np.float64)
    if len(times) == 0:
        return []
    errs = profile.errors(values)
    scores, _ = profile.scores(values)
    marks = np.zeros(len(times), dtype=bool)
    for e in relevant_truth(truth, band):
        marks[int(np.argmin(np.abs(times - e.start_time)))] = True
    return [(float(t), float(s), float(np.max(np.abs(er))), bool(m))
            for t, s, er, m in zip(times, scores, errs, marks)]


def write_error_curve(rows, sink) -> None:
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(["unix_time", "score", "max_abs_error", "attack_start"])
    for t, s, e, m in rows:
        w.writerow([repr(t), repr(s), repr(e), int(m)])

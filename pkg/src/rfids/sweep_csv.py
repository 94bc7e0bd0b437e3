"""Reader/writer for the hackrf_sweep CSV dialect.

One record per FFT segment::

    date, time, hz_low, hz_high, hz_bin_width, num_samples, dB, dB, ...

Records that share a timestamp belong to the same sweep.
"""
from __future__ import annotations

import logging
from collections import Counter
from datetime import datetime, timezone
from typing import Iterable, Iterator, TextIO

import numpy as np

from .errors import ConfigError
from .spectrum import ProbeConfig, Sweep

log = logging.getLogger(__name__)

_TIME_FORMATS = ("%Y-%m-%d %H:%M:%S.%f", "%Y-%m-%d %H:%M:%S")


def parse_timestamp(date: str, time: str) -> float:
    text = f"{date.strip()} {time.strip()}"
    for fmt in _TIME_FORMATS:
        try:
            return datetime.strptime(text, fmt).replace(tzinfo=timezone.utc).timestamp()
        except ValueError:
            continue
    raise ValueError(f"unparseable timestamp {text!r}")


def format_timestamp(t: float) -> tuple[str, str]:
    dt = datetime.fromtimestamp(round(t * 1e6) / 1e6, tz=timezone.utc)
    return dt.strftime("%Y-%m-%d"), dt.strftime("%H:%M:%S.%f")


class SweepCsvReader:
    """Iterate sweeps out of CSV lines; ``skipped`` counts dropped records by reason.

    Bins outside the configured ranges are ignored. A record whose bin width
    disagrees with the probe configuration raises :class:`ConfigError`.
    """

    def __init__(self, lines: Iterable[str], config: ProbeConfig):
        self.lines = lines
        self.config = config
        self.skipped: Counter = Counter()
        self._freqs = config.bin_frequencies()

    def _column(self, f_khz: float) -> int:
        i = int(np.searchsorted(self._freqs, f_khz))
        if i < len(self._freqs) and abs(self._freqs[i] - f_khz) < 1e-6:
            return i
        return -1

    def _skip(self, reason: str, lineno: int) -> None:
        self.skipped[reason] += 1
        log.warning("line %d skipped: %s", lineno, reason)

    def __iter__(self) -> Iterator[Sweep]:
        cfg = self.config
        total = cfg.total_bins
        current_t = None
        row = None
        for lineno, line in enumerate(self.lines, 1):
            if not line.strip():
                continue
            fields = [f.strip() for f in line.split(",")]
            try:
                if len(fields) < 7:
                    raise ValueError("too few fields")
                t = parse_timestamp(fields[0], fields[1])
                hz_low, hz_high = float(fields[2]), float(fields[3])
                width_hz = float(fields[4])
                int(float(fields[5]))
                values = np.array([float(v) for v in fields[6:]], dtype=np.float64)
                if width_hz <= 0 or hz_high <= hz_low:
                    raise ValueError("bad segment bounds")
                if not np.all(np.isfinite(values)):
                    raise ValueError("non-finite power")
            except ValueError as exc:
                self._skip(f"malformed: {exc}", lineno)
                continue
            if abs(width_hz / 1000.0 - cfg.bin_width_khz) > 1e-6:
                raise ConfigError(
                    f"line {lineno}: bin width {width_hz / 1000.0} KHz does not match configured {cfg.bin_width_khz} KHz"
                )
            if current_t is not None and t < current_t:
                self._skip("timestamp regressed", lineno)
                continue
            if current_t is None or t > current_t:
                if row is not None:
                    sweep = self._finish(current_t, row)
                    if sweep is not None:
                        yield sweep
                current_t = t
                row = np.full(total, np.nan)
            f0 = hz_low / 1000.0
            for k, v in enumerate(values):
                col = self._column(f0 + k * cfg.bin_width_khz)
                if col >= 0:
                    row[col] = v
        if row is not None:
            sweep = self._finish(current_t, row)
            if sweep is not None:
                yield sweep

    def _finish(self, t: float, row: np.ndarray):
        if np.isnan(row).any():
            self.skipped["incomplete sweep"] += 1
            log.warning("sweep at %.6f lacks %d configured bins; dropped", t, int(np.isnan(row).sum()))
            return None
        cfg = self.config
        parts = tuple(row[o:o + n] for o, n in zip(cfg.column_offsets, cfg.bin_counts))
        return Sweep(t, parts)


def parse_sweep_csv(lines: Iterable[str], config: ProbeConfig) -> SweepCsvReader:
    return SweepCsvReader(lines, config)


def write_sweep_csv(sweeps: Iterable[Sweep], config: ProbeConfig, sink: TextIO, segment_khz: float = 5000.0,
                    num_samples: int = 8192) -> int:
    """Write sweeps in the same dialect, ``segment_khz`` per record. Powers keep full precision."""
    per_seg = max(1, int(round(segment_khz / config.bin_width_khz)))
    b = config.bin_width_khz
    records = 0
    for sw in sweeps:
        date, tod = format_timestamp(sw.timestamp)
        for r, p in zip(config.ranges, sw.powers):
            for k0 in range(0, len(p), per_seg):
                chunk = p[k0:k0 + per_seg]
                lo = (r.f_start + k0 * b) * 1000
                hi = lo + len(chunk) * b * 1000
                vals = ", ".join(repr(float(v)) for v in chunk)
                sink.write(f"{date}, {tod}, {int(lo)}, {int(hi)}, {b * 1000:.2f}, {num_samples}, {vals}\n")
                records += 1
    return records

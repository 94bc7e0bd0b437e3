"""Frequency ranges, sweeps and waterfalls, plus the binary waterfall format.

Frequencies are integer KHz, powers are dBm stored as float64. A waterfall
is ``N`` consecutive sweeps stacked row-wise; its columns are the bins of
every configured range, concatenated in configuration order.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Iterator, Sequence

import numpy as np

from .errors import AssemblyError, ConfigError, FormatError, SliceError

MAGIC = b"RDIO"
FORMAT_VERSION = 1


@dataclass(frozen=True, order=True)
class FrequencyRange:
    """Closed-open band ``[f_start, f_end)`` in KHz."""

    f_start: int
    f_end: int

    def __post_init__(self):
        if self.f_start <= 0 or self.f_end <= 0:
            raise ConfigError(f"frequencies must be positive: {self}")
        if self.f_start >= self.f_end:
            raise ConfigError(f"f_start must be below f_end: {self}")

    @property
    def width(self) -> int:
        return self.f_end - self.f_start

    def contains(self, other: "FrequencyRange") -> bool:
        return self.f_start <= other.f_start and other.f_end <= self.f_end

    def overlaps(self, f_lo: float, f_hi: float) -> bool:
        return f_lo < self.f_end and self.f_start < f_hi

    def label(self) -> str:
        return f"{self.f_start / 1000:g}-{self.f_end / 1000:g}"

    @classmethod
    def from_mhz(cls, lo: float, hi: float) -> "FrequencyRange":
        return cls(int(round(lo * 1000)), int(round(hi * 1000)))


def bin_count(rng: FrequencyRange, bin_width_khz: float) -> int:
    """Number of FFT bins of width ``bin_width_khz`` covering ``rng``."""
    if bin_width_khz <= 0:
        raise ConfigError("bin width must be positive")
    q = rng.width / bin_width_khz
    n = int(round(q))
    if n < 1 or not math.isclose(q, n, rel_tol=0, abs_tol=1e-9):
        raise ConfigError(f"range {rng.label()} MHz is not a whole number of {bin_width_khz} KHz bins")
    return n


@dataclass(frozen=True)
class ProbeConfig:
    ranges: tuple[FrequencyRange, ...]
    bin_width_khz: float = 200.0
    sweep_interval_s: float = 0.0375
    sweeps_per_waterfall: int = 100
    probe_id: str = "probe-0"

    def __post_init__(self):
        object.__setattr__(self, "ranges", tuple(self.ranges))
        if not self.ranges:
            raise ConfigError("at least one frequency range is required")
        if self.sweep_interval_s <= 0:
            raise ConfigError("sweep interval must be positive")
        if int(self.sweeps_per_waterfall) != self.sweeps_per_waterfall or self.sweeps_per_waterfall < 1:
            raise ConfigError("sweeps_per_waterfall must be a positive integer")
        for r in self.ranges:
            bin_count(r, self.bin_width_khz)
            for edge in (r.f_start, r.f_end):
                if not math.isclose(edge / self.bin_width_khz, round(edge / self.bin_width_khz), abs_tol=1e-9):
                    raise ConfigError(f"range edge {edge} KHz is off the {self.bin_width_khz} KHz grid")
        ordered = sorted(self.ranges)
        for a, b in zip(ordered, ordered[1:]):
            if b.f_start < a.f_end:
                raise ConfigError(f"ranges {a.label()} and {b.label()} overlap")

    @property
    def bin_counts(self) -> tuple[int, ...]:
        return tuple(bin_count(r, self.bin_width_khz) for r in self.ranges)

    @property
    def total_bins(self) -> int:
        return sum(self.bin_counts)

    @property
    def column_offsets(self) -> tuple[int, ...]:
        """Column index of the first bin of each range."""
        offs, acc = [], 0
        for n in self.bin_counts:
            offs.append(acc)
            acc += n
        return tuple(offs)

    @property
    def waterfall_duration_s(self) -> float:
        return self.sweeps_per_waterfall * self.sweep_interval_s

    def bin_frequencies(self) -> np.ndarray:
        """Frequency (KHz) of the lower edge of every column."""
        b = self.bin_width_khz
        return np.concatenate([r.f_start + b * np.arange(n) for r, n in zip(self.ranges, self.bin_counts)])

    def range_index(self, sub: FrequencyRange) -> int:
        for i, r in enumerate(self.ranges):
            if r.contains(sub):
                return i
        raise SliceError(f"{sub.label()} MHz is not contained in a single configured range")

    def columns(self, sub: FrequencyRange) -> tuple[int, int]:
        """Column interval ``[c0, c1)`` holding exactly the bins of ``sub``."""
        i = self.range_index(sub)
        r, b = self.ranges[i], self.bin_width_khz
        lo, hi = (sub.f_start - r.f_start) / b, (sub.f_end - r.f_start) / b
        if not (float(lo).is_integer() and float(hi).is_integer()):
            raise SliceError(f"{sub.label()} MHz endpoints are off the {b} KHz bin grid")
        off = self.column_offsets[i]
        return off + int(lo), off + int(hi)

    def to_dict(self) -> dict:
        return {
            "probe_id": self.probe_id,
            "ranges_khz": [[r.f_start, r.f_end] for r in self.ranges],
            "bin_width_khz": self.bin_width_khz,
            "sweep_interval_s": self.sweep_interval_s,
            "sweeps_per_waterfall": self.sweeps_per_waterfall,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProbeConfig":
        return cls(
            ranges=tuple(FrequencyRange(int(a), int(b)) for a, b in d["ranges_khz"]),
            bin_width_khz=float(d.get("bin_width_khz", 200.0)),
            sweep_interval_s=float(d.get("sweep_interval_s", 0.0375)),
            sweeps_per_waterfall=int(d.get("sweeps_per_waterfall", 100)),
            probe_id=str(d.get("probe_id", "probe-0")),
        )


def default_probe_config(probe_id: str = "probe-0") -> ProbeConfig:
    """HackRF probe used in the smart-home deployment: three IoT bands, 200 KHz bins."""
    return ProbeConfig(
        ranges=(
            FrequencyRange(400_000, 500_000),
            FrequencyRange(800_000, 900_000),
            FrequencyRange(2_400_000, 2_500_000),
        ),
        bin_width_khz=200.0,
        sweep_interval_s=0.0375,
        sweeps_per_waterfall=100,
        probe_id=probe_id,
    )


@dataclass(frozen=True)
class Sweep:
    timestamp: float
    powers: tuple[np.ndarray, ...]

    def __post_init__(self):
        arrs = []
        for p in self.powers:
            a = np.array(p, dtype=np.float64)
            if a.ndim != 1:
                raise ValueError("sweep power vectors must be 1-D")
            if not np.all(np.isfinite(a)):
                raise ValueError("sweep powers must be finite")
            a.setflags(write=False)
            arrs.append(a)
        object.__setattr__(self, "powers", tuple(arrs))

    def row(self) -> np.ndarray:
        return np.concatenate(self.powers)


@dataclass(frozen=True, eq=False)
class Waterfall:
    start_time: float
    config: ProbeConfig
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = self.matrix
        # an already frozen float64 C array cannot change under us; anything else is copied
        if not (isinstance(m, np.ndarray) and m.dtype == np.float64 and m.flags.c_contiguous
                and not m.flags.writeable):
            m = np.array(m, dtype=np.float64, order="C")
        expect = (self.config.sweeps_per_waterfall, self.config.total_bins)
        if m.shape != expect:
            raise AssemblyError(f"waterfall matrix has shape {m.shape}, expected {expect}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def probe_id(self) -> str:
        return self.config.probe_id

    @property
    def payload_nbytes(self) -> int:
        return 8 * self.matrix.size

    def range_matrix(self, i: int) -> np.ndarray:
        c0 = self.config.column_offsets[i]
        return self.matrix[:, c0:c0 + self.config.bin_counts[i]]

    def cell_coordinates(self, l: int, col: int) -> tuple[float, float]:
        """(time, frequency KHz) represented by cell ``(l, col)``."""
        return (self.start_time + l * self.config.sweep_interval_s, float(self.config.bin_frequencies()[col]))

    def rows(self) -> list[Sweep]:
        cfg, out = self.config, []
        for l in range(cfg.sweeps_per_waterfall):
            row = self.matrix[l]
            parts = tuple(row[o:o + n] for o, n in zip(cfg.column_offsets, cfg.bin_counts))
            out.append(Sweep(self.start_time + l * cfg.sweep_interval_s, parts))
        return out

    def __eq__(self, other):
        if not isinstance(other, Waterfall):
            return NotImplemented
        return (
            self.start_time == other.start_time
            and self.config == other.config
            and np.array_equal(self.matrix, other.matrix)
        )


@dataclass(frozen=True, eq=False)
class WaterfallSlice:
    start_time: float
    probe_id: str
    slice_range: FrequencyRange
    matrix: np.ndarray = field(repr=False)


def assemble_waterfall(sweeps: Sequence[Sweep], config: ProbeConfig, jitter_tolerance: float = 0.5) -> Waterfall:
    """Stack exactly ``N`` time-ordered sweeps into a waterfall.

    Consecutive timestamps must differ by ``T`` within ``jitter_tolerance * T``.
    """
    n = config.sweeps_per_waterfall
    if len(sweeps) != n:
        raise AssemblyError(f"expected {n} sweeps, got {len(sweeps)}")
    T = config.sweep_interval_s
    matrix = np.empty((n, config.total_bins))
    prev = None
    for l, sw in enumerate(sweeps):
        if len(sw.powers) != len(config.ranges):
            raise AssemblyError(f"{len(sw.powers)} range vectors, config has {len(config.ranges)}", l)
        for p, want in zip(sw.powers, config.bin_counts):
            if p.shape[0] != want:
                raise AssemblyError(f"range vector of length {p.shape[0]}, expected {want}", l)
        if prev is not None:
            dt = sw.timestamp - prev
            if dt <= 0:
                raise AssemblyError("timestamps are not strictly increasing", l)
            if abs(dt - T) > jitter_tolerance * T:
                raise AssemblyError(f"sweep spacing {dt:.6f}s deviates from T={T}s", l)
        prev = sw.timestamp
        matrix[l] = sw.row()
    return Waterfall(sweeps[0].timestamp, config, matrix)


def iter_waterfalls(sweeps: Iterable[Sweep], config: ProbeConfig, jitter_tolerance: float = 0.5) -> Iterator[Waterfall]:
    """Group a sweep stream into back-to-back blocks of ``N``; a trailing partial block is dropped."""
    block: list[Sweep] = []
    for sw in sweeps:
        block.append(sw)
        if len(block) == config.sweeps_per_waterfall:
            yield assemble_waterfall(block, config, jitter_tolerance)
            block = []


def slice_waterfall(w: Waterfall, sub: FrequencyRange) -> WaterfallSlice:
    c0, c1 = w.config.columns(sub)
    return WaterfallSlice(w.start_time, w.probe_id, sub, w.matrix[:, c0:c1])


# -- binary format -----------------------------------------------------------

_HEAD = struct.Struct("<4sHH")
_TIMING = struct.Struct("<dddII")
_RANGE = struct.Struct("<QQ")


def write_waterfall(w: Waterfall, sink: BinaryIO) -> int:
    """Serialize ``w`` (little-endian); returns bytes written."""
    cfg = w.config
    pid = cfg.probe_id.encode("utf-8")
    if len(pid) > 0xFFFF:
        raise FormatError("probe id too long")
    parts = [
        _HEAD.pack(MAGIC, FORMAT_VERSION, len(pid)),
        pid,
        _TIMING.pack(w.start_time, cfg.sweep_interval_s, cfg.bin_width_khz, cfg.sweeps_per_waterfall, len(cfg.ranges)),
    ]
    parts += [_RANGE.pack(r.f_start, r.f_end) for r in cfg.ranges]
    parts.append(w.matrix.astype("<f8", copy=False).tobytes(order="C"))
    n = 0
    for p in parts:
        sink.write(p)
        n += len(p)
    return n


def _read_exact(source: BinaryIO, n: int, what: str) -> bytes:
    buf = source.read(n)
    if len(buf) != n:
        raise FormatError(f"truncated stream while reading {what} ({len(buf)}/{n} bytes)")
    return buf


def read_waterfall(source: BinaryIO) -> Waterfall:
    magic, version, pid_len = _HEAD.unpack(_read_exact(source, _HEAD.size, "header"))
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format version {version}")
    probe_id = _read_exact(source, pid_len, "probe id").decode("utf-8")
    t0, T, b, n, m = _TIMING.unpack(_read_exact(source, _TIMING.size, "timing block"))
    if n == 0 or m == 0:
        raise FormatError("dimension header declares an empty waterfall")
    ranges = [FrequencyRange(*_RANGE.unpack(_read_exact(source, _RANGE.size, "range table"))) for _ in range(m)]
    try:
        cfg = ProbeConfig(tuple(ranges), b, T, n, probe_id)
    except ConfigError as exc:
        raise FormatError(f"inconsistent dimension header: {exc}") from exc
    payload = _read_exact(source, 8 * n * cfg.total_bins, "payload")
    matrix = np.frombuffer(payload, dtype="<f8").reshape(n, cfg.total_bins)
    return Waterfall(t0, cfg, matrix)


def read_waterfalls(source: BinaryIO) -> Iterator[Waterfall]:
    """Read back-to-back waterfall records until a clean end of stream."""
    while True:
        peek = source.read(1)
        if not peek:
            return
        yield read_waterfall(_Prefixed(peek, source))


class _Prefixed:
    """Byte stream with one already-consumed chunk pushed back in front."""

    def __init__(self, head: bytes, rest: BinaryIO):
        self._head, self._rest = head, rest

    def read(self, n: int) -> bytes:
        if self._head:
            take, self._head = self._head[:n], self._head[n:]
            return take + (self._rest.read(n - len(take)) if n > len(take) else b"")
        return self._rest.read(n)

"""Synthetic smart-home RF environment with attack injection.

Every bin of every sweep gets ``max(floor, strongest active emitter) + sigma * z``
where ``z`` is one standard-normal draw per bin and per sweep. The emitter and
the noise share that draw, so the result equals the max of the noise draw and
each emitter's faded level, and raising any level never lowers a bin.

Emitter timing is a pure function of (seed, device, time): burst jitter and
phases come from a counter-based hash, and the Gaussian draws of waterfall
``j`` come from the substream ``SeedSequence([seed, j])``. Any time segment
can therefore be rendered on its own.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np

from .errors import ConfigError
from .spectrum import ProbeConfig, Sweep, Waterfall, default_probe_config

DAY_S = 86400.0
DEFAULT_START = 1_704_067_200.0  # 2024-01-01T00:00:00Z

INTENSITY_OFFSET_DB = {"High": 45.0, "Normal": 25.0, "Low": 10.0}


# -- emission patterns -------------------------------------------------------

_M64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    x = (x + np.uint64(0x9E3779B97F4A7C15)) & _M64
    x = ((x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _M64
    x = ((x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _M64
    return x ^ (x >> np.uint64(31))


def hash_uniform(seed: int, stream: int, counter) -> np.ndarray:
    """Uniform [0, 1) values keyed on (seed, stream, counter); counter may be negative."""
    c = np.asarray(counter, dtype=np.int64).astype(np.uint64)
    with np.errstate(over="ignore"):
        key = _splitmix64(np.full(c.shape, np.uint64(seed & 0xFFFFFFFF) << np.uint64(32) | np.uint64(stream & 0xFFFFFFFF)))
        h = _splitmix64(key ^ _splitmix64(c))
    return (h >> np.uint64(11)).astype(np.float64) / float(1 << 53)


@dataclass(frozen=True)
class PeriodicBeacon:
    interval_s: float
    burst_s: float
    kind: str = field(default="periodic-beacon", init=False)

    def __post_init__(self):
        if self.interval_s <= 0 or not 0 < self.burst_s <= self.interval_s:
            raise ConfigError(f"invalid beacon timing {self}")

    def active(self, times, T, phase, jitter, seed, stream, utc_offset_s=0.0):
        return _bursts_overlap(times, T, self.interval_s, self.burst_s, phase, jitter, seed, stream)


@dataclass(frozen=True)
class DutyCycled:
    on_s: float
    off_s: float
    kind: str = field(default="duty-cycled", init=False)

    def __post_init__(self):
        if self.on_s <= 0 or self.off_s < 0:
            raise ConfigError(f"invalid duty cycle {self}")

    def active(self, times, T, phase, jitter, seed, stream, utc_offset_s=0.0):
        if self.off_s == 0:
            return np.ones(len(times), dtype=bool)
        return _bursts_overlap(times, T, self.on_s + self.off_s, self.on_s, phase, jitter, seed, stream)


@dataclass(frozen=True)
class Scheduled:
    """Active only inside daily windows ``(start_s, end_s)`` measured from midnight."""

    windows: tuple[tuple[float, float], ...]
    inner: PeriodicBeacon | DutyCycled | None = None
    kind: str = field(default="scheduled", init=False)

    def __post_init__(self):
        object.__setattr__(self, "windows", tuple((float(a), float(b)) for a, b in self.windows))
        for a, b in self.windows:
            if not 0 <= a < b <= DAY_S:
                raise ConfigError(f"invalid daily window ({a}, {b})")

    def in_window(self, times, utc_offset_s=0.0):
        tod = np.mod(np.asarray(times) + utc_offset_s, DAY_S)
        mask = np.zeros(len(tod), dtype=bool)
        for a, b in self.windows:
            mask |= (tod >= a) & (tod < b)
        return mask

    def active(self, times, T, phase, jitter, seed, stream, utc_offset_s=0.0):
        mask = self.in_window(times, utc_offset_s)
        if self.inner is not None:
            mask &= self.inner.active(times, T, phase, jitter, seed, stream)
        return mask


def _bursts_overlap(times, T, period, burst, phase, jitter, seed, stream):
    """True where a jittered burst ``[s_k, s_k + burst)`` overlaps the sweep window ``[t, t + T)``."""
    t = np.asarray(times, dtype=np.float64)
    k_lo = np.floor((t - burst - phase) / period).astype(np.int64) - 1
    n_cand = int(math.ceil((T + burst) / period)) + 2
    ks = k_lo[:, None] + np.arange(n_cand)[None, :]
    starts = phase + ks * period + jitter * period * hash_uniform(seed, stream, ks)
    hit = (starts < (t + T)[:, None]) & (starts + burst > t[:, None])
    return hit.any(axis=1)


def pattern_to_dict(p) -> dict:
    d = {k: v for k, v in asdict(p).items() if k != "inner"}
    d["kind"] = p.kind
    if isinstance(p, Scheduled):
        d["windows"] = [list(w) for w in p.windows]
        d["inner"] = pattern_to_dict(p.inner) if p.inner is not None else None
    return d


def pattern_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "periodic-beacon":
        return PeriodicBeacon(float(d["interval_s"]), float(d["burst_s"]))
    if kind == "duty-cycled":
        return DutyCycled(float(d["on_s"]), float(d["off_s"]))
    if kind == "scheduled":
        inner = d.get("inner")
        return Scheduled(tuple(tuple(w) for w in d["windows"]), pattern_from_dict(inner) if inner else None)
    raise ConfigError(f"unknown emission pattern {kind!r}")


# -- environment -------------------------------------------------------------

@dataclass(frozen=True)
class NoiseModel:
    floor_mean_dbm: float = -90.0
    floor_std_db: float = 2.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.floor_std_db < 0:
            raise ConfigError("noise floor std must be non-negative")


@dataclass(frozen=True)
class DeviceProfile:
    name: str
    center_freq_khz: float
    occupied_bandwidth_khz: float
    tx_power_dbm: float
    pattern: PeriodicBeacon | DutyCycled | Scheduled
    jitter_fraction: float = 0.0
    follows: str | None = None  # access point this client is associated with

    def __post_init__(self):
        if self.occupied_bandwidth_khz <= 0:
            raise ConfigError(f"{self.name}: occupied bandwidth must be positive")
        if not 0 <= self.jitter_fraction < 1:
            raise ConfigError(f"{self.name}: jitter_fraction must lie in [0, 1)")

    def band(self, center=None) -> tuple[float, float]:
        c = self.center_freq_khz if center is None else center
        return c - self.occupied_bandwidth_khz / 2, c + self.occupied_bandwidth_khz / 2


@dataclass(frozen=True)
class AttackSpec:
    attack_id: int
    protocol: str
    type: str
    intensity: str
    duration_s: float
    band_khz: tuple[float, float]
    dos: bool = False
    burst_s: float = 10.0
    target_device: str | None = None
    resume_center_khz: float | None = None
    channel_hold_s: float | None = 240.0

    def __post_init__(self):
        object.__setattr__(self, "band_khz", (float(self.band_khz[0]), float(self.band_khz[1])))
        if self.intensity not in INTENSITY_OFFSET_DB:
            raise ConfigError(f"attack {self.attack_id}: unknown intensity {self.intensity!r}")
        if self.duration_s <= 0:
            raise ConfigError(f"attack {self.attack_id}: duration must be positive")
        if self.band_khz[0] >= self.band_khz[1]:
            raise ConfigError(f"attack {self.attack_id}: empty band")

    @property
    def center_freq_khz(self) -> float:
        return 0.5 * (self.band_khz[0] + self.band_khz[1])

    @property
    def channel_width_khz(self) -> float:
        return self.band_khz[1] - self.band_khz[0]


def _centered(center_mhz, width_mhz):
    return (center_mhz * 1000 - width_mhz * 500, center_mhz * 1000 + width_mhz * 500)


def default_attack_catalog() -> dict[int, AttackSpec]:
    """The eight injected attacks (ids, intensities, durations, frequencies)."""
    return {
        1: AttackSpec(1, "WiFi", "DoS", "High", 1200, _centered(2430, 20), dos=True,
                      target_device="wifi-ap", resume_center_khz=2_412_000),
        2: AttackSpec(2, "WiFi", "Deauthentification", "Normal", 60, _centered(2437, 20)),
        3: AttackSpec(3, "WiFi", "Rogue AP", "Normal", 240, _centered(2412, 20)),
        4: AttackSpec(4, "BLE", "Man in the Middle", "Normal", 240, (2_400_000, 2_500_000)),
        5: AttackSpec(5, "Zigbee", "Fake association", "Normal", 60, _centered(2470, 2)),
        6: AttackSpec(6, "Zigbee", "Fake data send", "Normal", 240, _centered(2470, 2)),
        7: AttackSpec(7, "868MHz", "Simulated", "High", 60, _centered(868, 1)),
        8: AttackSpec(8, "433MHz", "DoS", "High", 600, _centered(433.92, 1), dos=True,
                      target_device="domotic-433", resume_center_khz=None),
    }


@dataclass(frozen=True)
class Environment:
    probe: ProbeConfig
    noise: NoiseModel
    devices: tuple[DeviceProfile, ...]
    attacks: dict = field(default_factory=default_attack_catalog)
    utc_offset_s: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "devices", tuple(self.devices))
        names = [d.name for d in self.devices]
        if len(set(names)) != len(names):
            raise ConfigError("device names must be unique")
        for d in self.devices:
            _check_band(self.probe, d.band(), f"device {d.name}")
            if d.follows is not None and (d.follows not in names or d.follows == d.name):
                raise ConfigError(f"device {d.name}: follows unknown device {d.follows!r}")
            if d.tx_power_dbm <= self.noise.floor_mean_dbm:
                raise ConfigError(f"device {d.name}: tx power must exceed the noise floor mean")

    def check_attack(self, attack_id: int) -> None:
        """Validate one catalog attack against the probe and devices (only scheduled attacks need to pass)."""
        if attack_id not in self.attacks:
            raise ConfigError(f"unknown attack id {attack_id}")
        a = self.attacks[attack_id]
        names = [d.name for d in self.devices]
        _check_band(self.probe, a.band_khz, f"attack {a.attack_id}")
        if a.dos and a.target_device is not None and a.target_device not in names:
            raise ConfigError(f"attack {a.attack_id}: unknown target device {a.target_device!r}")
        if a.dos and a.resume_center_khz is not None:
            for dev in self.dos_group(attack_id):
                _check_band(self.probe, dev.band(a.resume_center_khz), f"attack {a.attack_id} resume channel")

    def dos_group(self, attack_id: int) -> list[DeviceProfile]:
        """Devices silenced by a DoS attack: its target and the clients following it."""
        a = self.attacks[attack_id]
        if not a.dos or a.target_device is None:
            return []
        return [d for d in self.devices if a.target_device in (d.name, d.follows)]

    def affected_band(self, attack_id: int) -> tuple[float, float]:
        """Band the ground truth records: the attack channel, widened to the resume channel of the DoS group."""
        a = self.attacks[attack_id]
        lo, hi = a.band_khz
        if a.dos and a.resume_center_khz is not None:
            for dev in self.dos_group(attack_id):
                r_lo, r_hi = dev.band(a.resume_center_khz)
                lo, hi = min(lo, r_lo), max(hi, r_hi)
        return lo, hi


def _check_band(probe: ProbeConfig, band, what: str):
    lo, hi = band
    if not any(r.f_start <= lo and hi <= r.f_end for r in probe.ranges):
        raise ConfigError(f"{what}: band {lo / 1000:g}-{hi / 1000:g} MHz lies outside the probe ranges")


def default_devices() -> tuple[DeviceProfile, ...]:
    """One profile per deployed device class of the reference smart home."""
    return (
        DeviceProfile("wifi-ap", 2_437_000, 20_000, -60.0, PeriodicBeacon(0.1024, 0.004), 0.02),
        DeviceProfile("camera-sensor-wifi", 2_437_000, 20_000, -63.0, DutyCycled(0.02, 0.06), 0.3, "wifi-ap"),
        DeviceProfile("bt-flowerpot", 2_441_000, 78_000, -72.0, PeriodicBeacon(2.0, 0.05), 0.2),
        DeviceProfile("ble-scale", 2_402_000, 2_000, -68.0, PeriodicBeacon(1.0, 0.003), 0.1),
        DeviceProfile("zigbee-bulbs", 2_470_000, 2_000, -66.0, PeriodicBeacon(0.5, 0.005), 0.1),
        DeviceProfile("hoover-wifi", 2_437_000, 20_000, -58.0,
                      Scheduled(((10 * 3600, 11 * 3600),), DutyCycled(0.01, 0.03)), 0.3, "wifi-ap"),
        DeviceProfile("domotic-433", 433_920, 1_000, -62.0, PeriodicBeacon(10.0, 0.2), 0.2),
        DeviceProfile("ha-868-beacon", 868_300, 600, -64.0, PeriodicBeacon(5.0, 0.1), 0.2),
    )


def default_environment(seed: int = 0) -> Environment:
    return Environment(default_probe_config(), NoiseModel(-90.0, 2.0, seed), default_devices())


# -- schedule and ground truth -------------------------------------------------

@dataclass(frozen=True)
class CampaignSchedule:
    campaign_count: int = 20
    campaign_length_s: float = 3 * 3600 + 40 * 60
    inter_campaign_gap_s: float = 3600.0
    intra_attack_gap_s: float = 1200.0
    attack_order: tuple[int, ...] = (2, 3, 4, 5, 6, 7)
    dos_attacks: tuple[tuple[int, float], ...] = ((1, 336_000.0), (8, 340_800.0))
    start_offset_s: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "attack_order", tuple(int(a) for a in self.attack_order))
        object.__setattr__(self, "dos_attacks", tuple((int(a), float(s)) for a, s in self.dos_attacks))
        if self.campaign_count < 0:
            raise ConfigError("campaign_count must be non-negative")

    @classmethod
    def empty(cls) -> "CampaignSchedule":
        return cls(campaign_count=0, attack_order=(), dos_attacks=())

    def intervals(self, catalog: dict) -> list[tuple[int, float, float]]:
        """Sorted ``(attack_id, start_offset_s, end_offset_s)`` list; raises on overlap or unknown id."""
        out = []

        def spec(aid):
            if aid not in catalog:
                raise ConfigError(f"unknown attack id {aid}")
            return catalog[aid]

        for c in range(self.campaign_count):
            c0 = self.start_offset_s + c * (self.campaign_length_s + self.inter_campaign_gap_s)
            t = c0 + self.intra_attack_gap_s
            for aid in self.attack_order:
                d = spec(aid).duration_s
                out.append((aid, t, t + d))
                t += d + self.intra_attack_gap_s
            if self.attack_order and t - self.intra_attack_gap_s > c0 + self.campaign_length_s:
                raise ConfigError(f"campaign {c} does not fit in {self.campaign_length_s} s")
        for aid, start in self.dos_attacks:
            out.append((aid, start, start + spec(aid).duration_s))
        out.sort(key=lambda x: (x[1], x[0]))
        for a, b in zip(out, out[1:]):
            if b[1] < a[2]:
                raise ConfigError(f"attack {a[0]} at {a[1]:.0f}s overlaps attack {b[0]} at {b[1]:.0f}s")
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["attack_order"] = list(self.attack_order)
        d["dos_attacks"] = [list(x) for x in self.dos_attacks]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignSchedule":
        kw = dict(d)
        if "attack_order" in kw:
            kw["attack_order"] = tuple(kw["attack_order"])
        if "dos_attacks" in kw:
            kw["dos_attacks"] = tuple(tuple(x) for x in kw["dos_attacks"])
        return cls(**kw)


@dataclass(frozen=True)
class TruthEntry:
    attack_id: int
    start_time: float
    end_time: float
    band: tuple[float, float]


@dataclass
class GroundTruthLog:
    entries: list[TruthEntry] = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def write_csv(self, sink) -> None:
        w = csv.writer(sink, lineterminator="\n")
        w.writerow(["attack_id", "start_unix", "end_unix", "band_start_khz", "band_end_khz"])
        for e in self.entries:
            w.writerow([e.attack_id, repr(e.start_time), repr(e.end_time), repr(e.band[0]), repr(e.band[1])])

    @classmethod
    def read_csv(cls, source) -> "GroundTruthLog":
        r = csv.DictReader(source)
        return cls([
            TruthEntry(int(row["attack_id"]), float(row["start_unix"]), float(row["end_unix"]),
                       (float(row["band_start_khz"]), float(row["band_end_khz"])))
            for row in r
        ])


# -- rendering ---------------------------------------------------------------

def attack_waveform(spec: AttackSpec, t_rel: float, bin_width_khz: float = 200.0,
                    floor_mean_dbm: float = -90.0) -> np.ndarray:
    """Attacker's own emission (dBm) over the bins of ``spec.band_khz``; ``-inf`` means silent.

    DoS attacks only transmit during their burst; the suppression of the
    target device that follows is an environment effect applied by the
    renderer.
    """
    if spec.attack_id not in range(1, 9):
        raise ConfigError(f"unknown attack id {spec.attack_id}")
    n = int(math.ceil(spec.channel_width_khz / bin_width_khz - 1e-9))
    level = floor_mean_dbm + INTENSITY_OFFSET_DB[spec.intensity]
    if not 0 <= t_rel < spec.duration_s:
        return np.full(n, -np.inf)
    if spec.dos and t_rel >= spec.burst_s:
        return np.full(n, -np.inf)
    return np.full(n, level)


def _band_columns(freqs: np.ndarray, b: float, lo: float, hi: float) -> np.ndarray:
    return np.nonzero((freqs < hi) & (freqs + b > lo))[0]


class Renderer:
    """Renders waterfalls for an environment and a fixed list of realized attack intervals."""

    def __init__(self, env: Environment, truth: Sequence[tuple[int, float, float]], t0: float):
        self.env = env
        self.t0 = t0
        self.truth = [(aid, t0 + s, t0 + e) for aid, s, e in truth]
        probe = env.probe
        self.freqs = probe.bin_frequencies()
        self.b = probe.bin_width_khz
        self.seed = env.noise.rng_seed
        self._dev_cols = {}
        for idx, d in enumerate(env.devices):
            self._dev_cols[(idx, d.center_freq_khz)] = _band_columns(self.freqs, self.b, *d.band())
        self._phase = {idx: float(hash_uniform(self.seed, 1000 + idx, np.array([-1]))[0]) * _period(d.pattern)
                       for idx, d in enumerate(env.devices)}
        self._atk_cols = {aid: _band_columns(self.freqs, self.b, *a.band_khz) for aid, a in env.attacks.items()}

    def _cols(self, idx, center):
        key = (idx, center)
        if key not in self._dev_cols:
            self._dev_cols[key] = _band_columns(self.freqs, self.b, *self.env.devices[idx].band(center))
        return self._dev_cols[key]

    def render(self, j: int) -> Waterfall:
        env, probe = self.env, self.env.probe
        N, T = probe.sweeps_per_waterfall, probe.sweep_interval_s
        start = self.t0 + j * N * T
        times = start + T * np.arange(N)
        floor = env.noise.floor_mean_dbm
        levels = np.full((N, probe.total_bins), floor)
        t_end = times[-1] + T

        live = [(aid, s, e) for aid, s, e in self.truth if s < t_end]
        for idx, dev in enumerate(env.devices):
            on = dev.pattern.active(times, T, self._phase[idx], dev.jitter_fraction, self.seed, idx, env.utc_offset_s)
            centers = np.full(N, dev.center_freq_khz)
            # clients lose their access point with it and rejoin it on the new channel
            anchor = dev.follows or dev.name
            for aid, s, e in live:
                spec = env.attacks[aid]
                if not spec.dos or spec.target_device != anchor:
                    continue
                on &= ~((times >= s + min(spec.burst_s, spec.duration_s)) & (times < e))
                if spec.resume_center_khz is not None:
                    hold_end = np.inf if spec.channel_hold_s is None else e + spec.channel_hold_s
                    centers = np.where((times >= e) & (times < hold_end), spec.resume_center_khz, centers)
            if not on.any():
                continue
            for c in np.unique(centers[on]):
                rows = on & (centers == c)
                cols = self._cols(idx, float(c))
                sub = levels[np.ix_(rows, cols)]
                levels[np.ix_(rows, cols)] = np.maximum(sub, dev.tx_power_dbm)

        for aid, s, e in live:
            if e <= start:
                continue
            spec = env.attacks[aid]
            rel = times - s
            active = (rel >= 0) & (rel < spec.duration_s)
            if spec.dos:
                active &= rel < spec.burst_s
            if not active.any():
                continue
            level = floor + INTENSITY_OFFSET_DB[spec.intensity]
            cols = self._atk_cols[aid]
            sub = levels[np.ix_(active, cols)]
            levels[np.ix_(active, cols)] = np.maximum(sub, level)

        rng = np.random.default_rng(np.random.SeedSequence([self.seed & 0xFFFFFFFF, j]))
        z = rng.standard_normal(levels.shape)
        z *= env.noise.floor_std_db
        z += levels
        z.setflags(write=False)
        return Waterfall(start, probe, z)


def _period(p) -> float:
    if isinstance(p, PeriodicBeacon):
        return p.interval_s
    if isinstance(p, DutyCycled):
        return p.on_s + p.off_s
    return _period(p.inner) if p.inner is not None else 1.0


def _realize(env: Environment, schedule: CampaignSchedule, duration_s: float):
    intervals = schedule.intervals(env.attacks)
    for aid in sorted({iv[0] for iv in intervals}):
        env.check_attack(aid)
    if intervals and intervals[-1][2] > duration_s:
        raise ConfigError(f"schedule ends at {intervals[-1][2]:.0f}s, beyond the {duration_s:.0f}s simulation")
    return intervals


def simulate_waterfalls(env: Environment, schedule: CampaignSchedule, duration_s: float,
                        start_time: float = DEFAULT_START) -> tuple[Iterator[Waterfall], GroundTruthLog]:
    """Waterfall stream covering ``duration_s`` (whole waterfalls only) and its ground truth."""
    intervals = _realize(env, schedule, duration_s)
    truth = GroundTruthLog([TruthEntry(aid, start_time + s, start_time + e, env.affected_band(aid))
                            for aid, s, e in intervals])
    renderer = Renderer(env, intervals, start_time)
    count = int(math.floor(duration_s / env.probe.waterfall_duration_s + 1e-9))
    return (renderer.render(j) for j in range(count)), truth


def simulate(env: Environment, schedule: CampaignSchedule, duration_s: float,
             start_time: float = DEFAULT_START) -> tuple[Iterator[Sweep], GroundTruthLog]:
    """Sweep-level view of :func:`simulate_waterfalls`."""
    waterfalls, truth = simulate_waterfalls(env, schedule, duration_s, start_time)
    return (sw for w in waterfalls for sw in w.rows()), truth


# -- JSON document -----------------------------------------------------------

def environment_to_dict(env: Environment) -> dict:
    return {
        "probe": env.probe.to_dict(),
        "noise": asdict(env.noise),
        "utc_offset_s": env.utc_offset_s,
        "devices": [
            {"name": d.name, "center_freq_khz": d.center_freq_khz, "occupied_bandwidth_khz": d.occupied_bandwidth_khz,
             "tx_power_dbm": d.tx_power_dbm, "jitter_fraction": d.jitter_fraction, "pattern": pattern_to_dict(d.pattern),
             "follows": d.follows}
            for d in env.devices
        ],
        "attacks": [dict(asdict(a), band_khz=list(a.band_khz)) for a in env.attacks.values()],
    }


def environment_from_dict(d: dict, seed: int | None = None) -> Environment:
    probe = ProbeConfig.from_dict(d["probe"]) if "probe" in d else default_probe_config()
    noise = NoiseModel(**d.get("noise", {}))
    if seed is not None:
        noise = replace(noise, rng_seed=seed)
    if "devices" in d:
        devices = tuple(
            DeviceProfile(x["name"], float(x["center_freq_khz"]), float(x["occupied_bandwidth_khz"]),
                          float(x["tx_power_dbm"]), pattern_from_dict(x["pattern"]), float(x.get("jitter_fraction", 0.0)),
                          x.get("follows"))
            for x in d["devices"]
        )
    else:
        devices = default_devices()
    attacks = default_attack_catalog()
    for a in d.get("attacks", []):
        a = dict(a)
        aid = int(a["attack_id"])
        if aid not in range(1, 9):
            raise ConfigError(f"unknown attack id {aid}")
        base = asdict(attacks[aid])
        base.update(a)
        base["band_khz"] = tuple(base["band_khz"])
        attacks[aid] = AttackSpec(**base)
    return Environment(probe, noise, devices, attacks, float(d.get("utc_offset_s", 0.0)))


def load_scenario(path) -> tuple[Environment, CampaignSchedule]:
    """Read the single JSON document holding ``environment`` and ``schedule``."""
    with open(path) as fh:
        doc = json.load(fh)
    env = environment_from_dict(doc.get("environment", {}))
    sched = CampaignSchedule.from_dict(doc["schedule"]) if "schedule" in doc else CampaignSchedule()
    return env, sched

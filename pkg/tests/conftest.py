import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rfids.spectrum import FrequencyRange, ProbeConfig, Sweep, Waterfall

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def small_config(ranges_mhz=((400, 401),), n=4, b=200.0, probe_id="p") -> ProbeConfig:
    return ProbeConfig(tuple(FrequencyRange.from_mhz(lo, hi) for lo, hi in ranges_mhz),
                       bin_width_khz=b, sweeps_per_waterfall=n, probe_id=probe_id)


def random_waterfall(cfg: ProbeConfig, rng, t0=1_700_000_000.0) -> Waterfall:
    m = rng.normal(-80, 10, size=(cfg.sweeps_per_waterfall, cfg.total_bins))
    return Waterfall(t0, cfg, m)


def sweeps_for(cfg: ProbeConfig, matrix, t0=1_700_000_000.0):
    out = []
    for l, row in enumerate(matrix):
        parts = tuple(row[o:o + n] for o, n in zip(cfg.column_offsets, cfg.bin_counts))
        out.append(Sweep(t0 + l * cfg.sweep_interval_s, parts))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance(request):
    """Record one acceptance verdict; lines are also repeated in the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(criterion, ok, detail):
        line = f"ACCEPTANCE {criterion} {'PASS' if ok else 'FAIL'}: {detail}"
        print(line)
        lines.append(line)
        return ok

    return record


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)

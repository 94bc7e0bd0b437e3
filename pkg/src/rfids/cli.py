"""``rfids`` command line: simulate, ingest, pipeline, detect, evaluate.

Every subcommand writes into a run directory (``--out``) and records a
``manifest.json`` with the config hash, seed and a digest of every output,
so reruns can be compared byte for byte.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Sequence

import numpy as np

from . import autoencoder as ae
from . import sim
from .detector import DEFAULT_GRID, DetectorProfile, detect_table, read_alarms, write_alarms
from .errors import ConfigError, RfidsError
from .evaluate import DEFAULT_WINDOW_S, MetricsReport, MetricsRow, error_curve, match, precision, recall, \
    relevant_truth, tnr, write_error_curve
from .features import FeatureTable, SliceSpec, extract_features
from .pipeline import ReferenceConfig, build_reference, default_training, evaluate_profile
from .spectrum import ProbeConfig, iter_waterfalls, read_waterfalls, write_waterfall
from .sweep_csv import parse_sweep_csv

log = logging.getLogger("rfids")

WATERFALLS = "waterfalls.rdio"
TRUTH = "truth.csv"
MANIFEST = "manifest.json"
DEFAULT_SLICES = ((400.0, 500.0), (800.0, 900.0), (2400.0, 2500.0))


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    probe: dict | None = None
    scenario: str | None = None
    environment: dict | None = None
    schedule: dict | None = None
    duration_s: float = 7200.0
    start_time: float = sim.DEFAULT_START
    reference_s: float | None = None
    slices: tuple = DEFAULT_SLICES
    sub_slices: tuple = ()
    split_fraction: float = 0.7
    architecture: dict = field(default_factory=dict)
    training: dict = field(default_factory=dict)
    grid: tuple = DEFAULT_GRID
    fp_target: int = 0
    aggregation: str = "mean"
    window_s: float = DEFAULT_WINDOW_S
    utc_offset_s: float = 0.0
    base_dir: str = "."

    def __post_init__(self):
        if not 0 < self.split_fraction < 1:
            raise ConfigError("split_fraction must lie in (0, 1)")
        if not self.slices and not self.sub_slices:
            raise ConfigError("slice list is empty")
        if self.window_s <= 0:
            raise ConfigError("window_s must be positive")
        if self.duration_s <= 0:
            raise ConfigError("duration_s must be positive")
        if self.fp_target < 0:
            raise ConfigError("fp_target must be non-negative")

    @classmethod
    def from_dict(cls, d: dict, base_dir: str = ".") -> "RunConfig":
        known = {f.name for f in fields(cls)} - {"base_dir"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        kw = dict(d)
        for key in ("slices", "sub_slices"):
            if key in kw:
                try:
                    kw[key] = tuple((float(a), float(b)) for a, b in kw[key])
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"{key} must be a list of [lo_mhz, hi_mhz] pairs") from exc
        if "grid" in kw:
            kw["grid"] = tuple(float(g) for g in kw["grid"])
        try:
            return cls(**kw, base_dir=base_dir)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        d["slices"] = [list(s) for s in self.slices]
        d["sub_slices"] = [list(s) for s in self.sub_slices]
        d["grid"] = list(self.grid)
        return d

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    # -- derived objects --------------------------------------------------------------

    def scenario_doc(self) -> dict:
        doc = {}
        if self.scenario:
            path = os.path.join(self.base_dir, self.scenario)
            try:
                with open(path) as fh:
                    doc = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
        if self.environment is not None:
            doc["environment"] = self.environment
        if self.schedule is not None:
            doc["schedule"] = self.schedule
        return doc

    def env_and_schedule(self) -> tuple[sim.Environment, sim.CampaignSchedule]:
        doc = self.scenario_doc()
        env_doc = dict(doc.get("environment", {}))
        if self.probe is not None:
            env_doc["probe"] = self.probe
        try:
            env = sim.environment_from_dict(env_doc, seed=self.seed)
            sched = sim.CampaignSchedule.from_dict(doc["schedule"]) if "schedule" in doc else sim.CampaignSchedule.empty()
        except (TypeError, KeyError) as exc:
            raise ConfigError(f"invalid scenario: {exc}") from exc
        return env, sched

    def probe_config(self) -> ProbeConfig:
        return self.env_and_schedule()[0].probe

    def slice_specs(self) -> list[SliceSpec]:
        out, seen = [], set()
        for lo, hi in tuple(self.slices) + tuple(self.sub_slices):
            s = SliceSpec.of(lo, hi)
            if s.slice_id not in seen:
                seen.add(s.slice_id)
                out.append(s)
        return out

    def reference_config(self) -> ReferenceConfig:
        arch = ae.Architecture(**{k: tuple(v) if k == "layer_sizes" else v for k, v in self.architecture.items()})
        try:
            training = replace(default_training(self.seed), **self.training)
        except TypeError as exc:
            raise ConfigError(f"invalid training config: {exc}") from exc
        return ReferenceConfig(self.split_fraction, arch, training, self.grid, self.fp_target,
                               self.aggregation, self.window_s)


def load_config(path: str | None, seed: int | None = None) -> RunConfig:
    if path is None:
        cfg = RunConfig()
    else:
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        cfg = RunConfig.from_dict(doc, os.path.dirname(os.path.abspath(path)))
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    return cfg


# -- run directory helpers ---------------------------------------------------------------

def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out: str, command: str, cfg: RunConfig, outputs: Sequence[str], extra: dict | None = None) -> None:
    """Record one subcommand's section in the run manifest (other sections are kept)."""
    entry = {
        "config_sha256": cfg.digest(),
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "outputs": {rel: _sha256(os.path.join(out, rel)) for rel in sorted(outputs)},
    }
    if extra:
        entry.update(extra)
    path = os.path.join(out, MANIFEST)
    doc = {}
    if os.path.exists(path):
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except json.JSONDecodeError:
            log.warning("replacing unreadable manifest %s", path)
    doc[command] = entry
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _open_out(path: str, mode: str = "w"):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    return open(path, mode, newline="" if "b" not in mode else None)


def _need(path: str, what: str) -> str:
    if not os.path.exists(path):
        raise ConfigError(f"missing {what}: {path}")
    return path


def _read_truth(path: str) -> sim.GroundTruthLog:
    if not os.path.exists(path):
        return sim.GroundTruthLog([])
    with open(path, newline="") as fh:
        return sim.GroundTruthLog.read_csv(fh)


def _slice_band(s: SliceSpec) -> tuple[float, float]:
    return float(s.band.f_start), float(s.band.f_end)


def _load_features(input_dir: str, cfg: RunConfig) -> dict[str, FeatureTable]:
    path = _need(os.path.join(input_dir, WATERFALLS), "waterfall file")
    with open(path, "rb") as fh:
        return extract_features(read_waterfalls(fh), cfg.slice_specs(), cfg.utc_offset_s)


# -- subcommands -----------------------------------------------------------------------

def cmd_simulate(cfg: RunConfig, out: str) -> dict:
    env, sched = cfg.env_and_schedule()
    waterfalls, truth = sim.simulate_waterfalls(env, sched, cfg.duration_s, cfg.start_time)
    os.makedirs(out, exist_ok=True)
    count = 0
    with _open_out(os.path.join(out, WATERFALLS), "wb") as fh:
        for w in waterfalls:
            write_waterfall(w, fh)
            count += 1
    with _open_out(os.path.join(out, TRUTH)) as fh:
        truth.write_csv(fh)
    write_manifest(out, "simulate", cfg, [WATERFALLS, TRUTH], {"waterfalls": count, "truth_entries": len(truth)})
    log.info("simulated %d waterfalls, %d attacks", count, len(truth))
    return {"waterfalls": count, "truth_entries": len(truth)}


def cmd_ingest(cfg: RunConfig, out: str, input_csv: str) -> dict:
    probe = cfg.probe_config()
    _need(input_csv, "sweep CSV")
    os.makedirs(out, exist_ok=True)
    count = 0
    with open(input_csv, newline="") as src, _open_out(os.path.join(out, WATERFALLS), "wb") as fh:
        reader = parse_sweep_csv(src, probe)
        for w in iter_waterfalls(reader, probe):
            write_waterfall(w, fh)
            count += 1
    skipped = dict(sorted(reader.skipped.items()))
    write_manifest(out, "ingest", cfg, [WATERFALLS], {"waterfalls": count, "skipped": skipped})
    log.info("ingested %d waterfalls (%s skipped)", count, sum(skipped.values()))
    return {"waterfalls": count, "skipped": skipped}


def _reference_cut(cfg: RunConfig, tables: dict[str, FeatureTable], truth: sim.GroundTruthLog) -> float:
    """End (exclusive) of the attack-free reference period used for training and calibration."""
    t0 = min((float(t.times[0]) for t in tables.values() if len(t)), default=cfg.start_time)
    first_attack = min((e.start_time for e in truth), default=None)
    if cfg.reference_s is not None:
        cut = cfg.start_time + cfg.reference_s
        if first_attack is not None and cut > first_attack:
            raise ConfigError(f"reference period ends at {cut:.0f}, after the first attack at {first_attack:.0f}")
        return cut
    if first_attack is None:
        return float("inf")
    if first_attack <= t0:
        raise ConfigError("no attack-free reference period before the first attack")
    return first_attack


def cmd_pipeline(cfg: RunConfig, out: str, input_dir: str | None = None, reuse_models: bool = False) -> MetricsReport:
    input_dir = input_dir or out
    truth = _read_truth(os.path.join(input_dir, TRUTH))
    tables = _load_features(input_dir, cfg)
    cut = _reference_cut(cfg, tables, truth)
    rcfg = cfg.reference_config()
    os.makedirs(out, exist_ok=True)
    outputs, rows, leakage = [], [], {}
    truth_list = list(truth)
    for s in cfg.slice_specs():
        sid = s.slice_id
        tab = tables[sid]
        clean = tab.select(tab.times < cut)
        attack = tab.select(tab.times >= cut)
        # leakage guard: nothing at or after the first attack may reach training or calibration
        assert not len(clean) or float(clean.times[-1]) < cut
        model_dir = os.path.join(out, "models", sid)
        model = None
        if reuse_models:
            model = ae.load_model(_need(os.path.join(model_dir, "model.json"), "saved model"))
        ref = build_reference(clean, rcfg, model=model)
        os.makedirs(model_dir, exist_ok=True)
        ref.profile.extra = {"train_span": [float(ref.train.times[0]), float(ref.train.times[-1])],
                             "test_span": [float(ref.test.times[0]), float(ref.test.times[-1])]}
        ref.profile.save(os.path.join(model_dir, "profile.json"))
        outputs += [f"models/{sid}/{n}" for n in ("profile.json", "model.json", "scaler.json")]
        leakage[sid] = {"reference_end": cut if np.isfinite(cut) else None,
                        "last_training_time": float(ref.train.times[-1]),
                        "last_calibration_time": float(ref.test.times[-1])}
        band = _slice_band(s)
        if len(attack):
            row, alarms = evaluate_profile(ref.profile, attack, truth_list, band, cfg.window_s, ref.testing_counts)
            curve = error_curve(ref.profile, attack.times, attack.values, truth_list, band)
        else:
            row = MetricsRow(sid, (), ref.profile.threshold, ref.testing_tnr, None, None, None,
                             testing_counts=ref.testing_counts)
            alarms, curve = [], []
        rows.append(row)
        with _open_out(os.path.join(out, "alarms", f"{sid}.csv")) as fh:
            write_alarms(alarms, fh)
        with _open_out(os.path.join(out, "curves", f"{sid}.csv")) as fh:
            write_error_curve(curve, fh)
        outputs += [f"alarms/{sid}.csv", f"curves/{sid}.csv"]
        log.info("slice %s: threshold %.1f, %d alarms", sid, ref.profile.threshold, len(alarms))
    report = MetricsReport(rows)
    _write_report(out, report)
    outputs += ["report.csv", "report.txt"]
    write_manifest(out, "pipeline", cfg, outputs, {"input": os.path.abspath(input_dir) if input_dir != out else ".",
                                                   "reused_models": reuse_models, "leakage_guard": leakage})
    return report


def _write_report(out: str, report: MetricsReport) -> None:
    with _open_out(os.path.join(out, "report.csv")) as fh:
        fh.write(report.to_csv())
    with _open_out(os.path.join(out, "report.txt")) as fh:
        fh.write(report.to_text())


def cmd_detect(cfg: RunConfig, out: str, input_dir: str, models_dir: str) -> dict:
    tables = _load_features(input_dir, cfg)
    counts, outputs = {}, []
    for s in cfg.slice_specs():
        profile = DetectorProfile.load(_need(os.path.join(models_dir, s.slice_id, "profile.json"), "profile"))
        tab = tables[s.slice_id]
        alarms = detect_table(profile, tab.times, tab.values)
        with _open_out(os.path.join(out, "alarms", f"{s.slice_id}.csv")) as fh:
            write_alarms(alarms, fh)
        outputs.append(f"alarms/{s.slice_id}.csv")
        counts[s.slice_id] = len(alarms)
    write_manifest(out, "detect", cfg, outputs, {"alarms": counts})
    return counts


def cmd_evaluate(cfg: RunConfig, out: str, alarms_dir: str, truth_path: str,
                 span: tuple[float, float] | None = None) -> MetricsReport:
    truth = list(_read_truth(_need(truth_path, "ground truth")))
    rows = []
    for s in cfg.slice_specs():
        path = _need(os.path.join(alarms_dir, f"{s.slice_id}.csv"), "alarm file")
        with open(path, newline="") as fh:
            alarms = read_alarms(fh)
        band = _slice_band(s)
        c = match(alarms, truth, cfg.window_s, band, span)
        ids = tuple(sorted({e.attack_id for e in relevant_truth(truth, band)}))
        rows.append(MetricsRow(s.slice_id, ids, float("nan"), None, precision(c), recall(c), tnr(c), c))
    report = MetricsReport(rows)
    os.makedirs(out, exist_ok=True)
    _write_report(out, report)
    write_manifest(out, "evaluate", cfg, ["report.csv", "report.txt"])
    return report


# -- entry point ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rfids", description="RF spectrum anomaly detection experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="run configuration (JSON)")
        sp.add_argument("--out", required=True, help="run directory")
        sp.add_argument("--seed", type=int, help="overrides the config seed")
        return sp

    common(sub.add_parser("simulate", help="synthesize waterfalls and ground truth"))
    sp = common(sub.add_parser("ingest", help="convert a sweep CSV capture into waterfalls"))
    sp.add_argument("--input", required=True, help="sweep CSV file")
    sp = common(sub.add_parser("pipeline", help="train, calibrate, detect and evaluate every slice"))
    sp.add_argument("--input", help="directory holding waterfalls (default: --out)")
    sp.add_argument("--reuse-models", action="store_true", help="reuse models saved in --out")
    sp = common(sub.add_parser("detect", help="run saved profiles over waterfalls"))
    sp.add_argument("--input", required=True, help="directory holding waterfalls")
    sp.add_argument("--models", required=True, help="directory holding <slice>/profile.json")
    sp = common(sub.add_parser("evaluate", help="score alarm files against ground truth"))
    sp.add_argument("--alarms", required=True, help="directory holding <slice>.csv alarm files")
    sp.add_argument("--truth", required=True, help="ground-truth CSV")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.seed)
        if args.command == "simulate":
            cmd_simulate(cfg, args.out)
        elif args.command == "ingest":
            cmd_ingest(cfg, args.out, args.input)
        elif args.command == "pipeline":
            print(cmd_pipeline(cfg, args.out, args.input, args.reuse_models).to_text(), end="")
        elif args.command == "detect":
            cmd_detect(cfg, args.out, args.input, args.models)
        else:
            print(cmd_evaluate(cfg, args.out, args.alarms, args.truth).to_text(), end="")
    except RfidsError as exc:
        print(f"rfids: {exc.category} error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"rfids: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Per-slice reference model: split, scale, train, calibrate, then evaluate on attack data."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import autoencoder as ae
from .detector import DEFAULT_GRID, DetectorProfile, calibrate_threshold, detect_table, fit_error_stats, score_batch
from .errors import TrainingError
from .evaluate import DEFAULT_WINDOW_S, ConfusionCounts, MetricsRow, match, precision, recall, relevant_truth, tnr
from .features import FeatureTable, fit_scaler

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReferenceConfig:
    split_fraction: float = 0.7
    architecture: ae.Architecture = field(default_factory=ae.Architecture)
    training: ae.TrainingConfig = field(default_factory=lambda: default_training())
    grid: tuple[float, ...] = DEFAULT_GRID
    fp_target: int = 0
    aggregation: str = "mean"
    window_s: float = DEFAULT_WINDOW_S

    def __post_init__(self):
        if not 0 < self.split_fraction < 1:
            raise ValueError("split_fraction must lie in (0, 1)")


def default_training(seed: int = 0) -> ae.TrainingConfig:
    """Pipeline training defaults: Adam, stop at 0.1% of the initial worst-sample error."""
    return ae.TrainingConfig(learning_rate=1e-3, momentum=0.9, batch_size=32, max_epochs=400,
                             patience=20, min_improvement=0.0, fit_ratio=1e-3, seed=seed, optimizer="adam")


@dataclass
class Reference:
    profile: DetectorProfile
    train: FeatureTable
    test: FeatureTable
    test_scores: np.ndarray
    testing_counts: ConfusionCounts

    @property
    def testing_tnr(self):
        return tnr(self.testing_counts)


def build_reference(clean: FeatureTable, cfg: ReferenceConfig = ReferenceConfig(),
                    model: ae.ModelParams | None = None) -> Reference:
    """Fit scaler and model on the chronological training split, error stats and threshold on the rest.

    Passing ``model`` skips training (reuse of a saved model).
    """
    train, test = clean.split(cfg.split_fraction)
    if len(train) < 2 or len(test) < 2:
        raise ValueError(f"slice {clean.slice_id}: not enough feature vectors to split ({len(clean)})")
    scaler = fit_scaler(train.values)
    if model is None:
        try:
            model = ae.train(scaler.transform(train.values), cfg.architecture, cfg.training)
        except TrainingError as exc:
            raise TrainingError(f"slice {clean.slice_id}: {exc}") from exc
    test_err = ae.reconstruction_error(model, scaler.transform(test.values))
    stats = fit_error_stats(test_err)
    scores, _ = score_batch(stats, test_err, cfg.aggregation)
    threshold = calibrate_threshold(scores, cfg.grid, cfg.fp_target)
    profile = DetectorProfile(clean.slice_id, stats, threshold, model, scaler, cfg.aggregation)
    alarms = detect_table(profile, test.times, test.values)
    span = (float(test.times[0]), float(test.times[-1]))
    counts = match(alarms, [], cfg.window_s, span=span)
    return Reference(profile, train, test, scores, counts)


def evaluate_profile(profile: DetectorProfile, table: FeatureTable, truth, band, window_s: float = DEFAULT_WINDOW_S,
                     testing_counts: ConfusionCounts | None = None, span=None):
    """Detect on ``table`` and score the alarms against the truth entries overlapping ``band``."""
    alarms = detect_table(profile, table.times, table.values)
    if span is None and len(table):
        span = (float(table.times[0]), float(table.times[-1]))
    counts = match(alarms, truth, window_s, band, span)
    ids = tuple(sorted({e.attack_id for e in relevant_truth(truth, band)}))
    row = MetricsRow(profile.slice_id, ids, profile.threshold,
                     None if testing_counts is None else tnr(testing_counts),
                     precision(counts), recall(counts), tnr(counts), counts,
                     testing_counts or ConfusionCounts())
    return row, alarms

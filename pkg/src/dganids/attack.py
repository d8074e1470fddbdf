"""False-data-injection attacks, the 1/2-threshold detector, and metrics.

Attacked points are one-to-one noisy copies of the clean test rows, so every
evaluation sees balanced classes. Noise variance is the attack-to-signal
power ratio times the per-feature variance of clean training data, which
makes the ratio dimensionless and comparable across features.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import nn
from .gan import Discriminator

log = logging.getLogger(__name__)

SCOPES = ("internal", "external")
MODEL_KINDS = ("standalone", "central", "distributed")


@dataclass(frozen=True)
class AttackScenario:
    ratio: float
    seed: int
    scope: str = "internal"

    def __post_init__(self):
        if self.ratio < 0:
            raise ValueError(f"attack-to-signal power ratio must be >= 0, got {self.ratio}")
        if self.scope not in SCOPES:
            raise ValueError(f"scope must be one of {SCOPES}, got {self.scope!r}")


@dataclass
class DetectionOutcome:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "DetectionOutcome") -> "DetectionOutcome":
        return DetectionOutcome(self.tp + other.tp, self.fp + other.fp,
                                self.tn + other.tn, self.fn + other.fn)


@dataclass
class MetricsReport:
    accuracy: float
    precision: float | None
    fpr: float | None
    tpr: float | None
    counts: DetectionOutcome


def inject_attack(batch: np.ndarray, scenario: AttackScenario,
                  feature_power: np.ndarray) -> np.ndarray:
    """Add zero-mean Gaussian noise with variance ratio * feature_power."""
    if scenario.ratio < 0:
        raise ValueError("negative attack ratio")
    batch = np.asarray(batch, dtype=np.float64)
    if scenario.ratio == 0:
        return batch.copy()
    power = np.asarray(feature_power, dtype=np.float64)
    if power.shape != (batch.shape[1],):
        raise ValueError(f"feature_power must have shape ({batch.shape[1]},), got {power.shape}")
    rng = np.random.default_rng(scenario.seed)
    noise = rng.normal(0.0, 1.0, size=batch.shape) * np.sqrt(scenario.ratio * power)
    return batch + noise


def detect(disc: Discriminator, x: np.ndarray, eps: float) -> str:
    """Classify one point: normal iff |D(x) - 1/2| <= eps (boundary inclusive)."""
    if not 0.0 < eps < 0.5:
        raise ValueError(f"eps must be in (0, 0.5), got {eps}")
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    out, _ = nn.forward(disc.params, x)
    return "normal" if abs(float(out[0, 0]) - 0.5) <= eps else "anomalous"


def _anomalous_mask(disc: Discriminator, rows: np.ndarray, eps: float) -> np.ndarray:
    out, _ = nn.forward(disc.params, rows)
    return np.abs(out[:, 0] - 0.5) > eps


def _device_seed(base_seed: int, device: int) -> int:
    return int(np.random.SeedSequence((base_seed, device)).generate_state(1)[0])


def evaluate(discriminators, test_shares, scenario: AttackScenario, eps: float,
             feature_power: np.ndarray, successor=None) -> DetectionOutcome:
    """Confusion counts over all devices for one scenario.

    Internal scope: device i's discriminator checks its own test share.
    External scope: device i's discriminator checks its ring successor's share.
    Clean rows are the negatives; their attacked copies are the positives.
    ``discriminators`` maps device index to a detector; devices without one
    (e.g. a standalone model living on a single device) are skipped.
    """
    if not 0.0 < eps < 0.5:
        raise ValueError(f"eps must be in (0, 0.5), got {eps}")
    n = len(test_shares)
    if scenario.scope == "external" and successor is None:
        raise ValueError("external scope needs the ring successor map")
    total = DetectionOutcome()
    for i in sorted(discriminators):
        disc = discriminators[i]
        target = i if scenario.scope == "internal" else successor[i]
        share = test_shares[target]
        if len(share) == 0:
            log.warning("device %d has an empty test share; skipped", target)
            continue
        clean = share.records
        attacked = inject_attack(clean, AttackScenario(scenario.ratio,
                                                       _device_seed(scenario.seed, target),
                                                       scenario.scope), feature_power)
        flag_clean = _anomalous_mask(disc, clean, eps)
        flag_attacked = _anomalous_mask(disc, attacked, eps)
        total = total + DetectionOutcome(
            tp=int(flag_attacked.sum()), fp=int(flag_clean.sum()),
            tn=int((~flag_clean).sum()), fn=int((~flag_attacked).sum()))
    return total


def compute_metrics(outcome: DetectionOutcome) -> MetricsReport:
    """Accuracy, precision, FPR, TPR; zero-denominator metrics are None."""
    if outcome.total == 0:
        raise ValueError("cannot compute metrics from all-zero counts")
    tp, fp, tn, fn = outcome.tp, outcome.fp, outcome.tn, outcome.fn
    return MetricsReport(
        accuracy=(tp + tn) / outcome.total,
        precision=tp / (tp + fp) if tp + fp > 0 else None,
        fpr=fp / (fp + tn) if fp + tn > 0 else None,
        tpr=tp / (tp + fn) if tp + fn > 0 else None,
        counts=outcome)


@dataclass
class ModelSet:
    """The trained detectors of the three IDS modes, aligned to devices."""

    standalone: Discriminator | None
    standalone_device: int
    central: Discriminator | None
    distributed: list[Discriminator] | None
    successor: list[int] | None  # ring successor by device index

    def kinds(self):
        out = []
        if self.standalone is not None:
            out.append("standalone")
        if self.central is not None:
            out.append("central")
        if self.distributed is not None:
            out.append("distributed")
        return out


@dataclass
class SweepRow:
    model: str
    scope: str
    ratio: float
    eps: float
    metrics: MetricsReport


SWEEP_HEADER = "model,scope,ratio,eps,tp,fp,tn,fn,accuracy,precision,fpr,tpr"


def _fmt(value) -> str:
    return "" if value is None else repr(float(value))


def sweep_row_csv(row: SweepRow) -> str:
    c = row.metrics.counts
    return ",".join([row.model, row.scope, repr(float(row.ratio)), repr(float(row.eps)),
                     str(c.tp), str(c.fp), str(c.tn), str(c.fn),
                     _fmt(row.metrics.accuracy), _fmt(row.metrics.precision),
                     _fmt(row.metrics.fpr), _fmt(row.metrics.tpr)])


def _model_discs(models: ModelSet, kind: str, n: int) -> dict:
    if kind == "standalone":
        return {models.standalone_device: models.standalone}
    if kind == "central":
        return {i: models.central for i in range(n)}
    return dict(enumerate(models.distributed))


def run_scenario_sweep(models: ModelSet, test_shares, feature_power, ratios,
                       eps: float, seed: int) -> list[SweepRow]:
    """Full factorial sweep over model kind, scope, and attack ratio.

    The central model sees every device's data either way, so its internal
    and external rows coincide and are emitted once with scope "both". Noise
    is derived from (seed, ratio index, device) only, so every model faces
    identical attacked rows and FPR cannot depend on the ratio.
    """
    ratios = list(ratios)
    if not ratios:
        raise ValueError("need at least one attack ratio")
    n = len(test_shares)
    ratio_seeds = [int(s.generate_state(1)[0])
                   for s in np.random.SeedSequence(seed).spawn(len(ratios))]
    rows = []
    for kind in MODEL_KINDS:
        if kind not in models.kinds():
            continue
        scopes = ("both",) if kind == "central" else SCOPES
        discs = _model_discs(models, kind, n)
        for scope in scopes:
            eval_scope = "internal" if scope == "both" else scope
            for ratio, rseed in zip(ratios, ratio_seeds):
                scenario = AttackScenario(ratio, rseed, eval_scope)
                outcome = evaluate(discs, test_shares, scenario, eps,
                                   feature_power, models.successor)
                rows.append(SweepRow(kind, scope, ratio, eps, compute_metrics(outcome)))
    return rows

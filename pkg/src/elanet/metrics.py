"""Binary-classification evaluation.

Threshold-based: confusion counts, precision, recall, F-beta, accuracy,
mean cross-entropy. Threshold-free: ROC curve and trapezoidal AUC.

Conventions pinned for reproducibility: the positive class is Tampered
(index 1); a row is predicted positive iff p_tampered >= threshold (ties
positive); degenerate denominators yield 0. Equal scores move as one group
in the ROC sweep (a diagonal segment), which makes the trapezoidal AUC
equal the tie-aware pairwise ordering statistic exactly.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ElanetError, EmptyPredictionSet, ShapeMismatch, SingleClassOnly
from .fileio import atomic_write_text

PREDICTIONS_HEADER = ["path", "label", "p_authentic", "p_tampered"]
ROC_HEADER = ["threshold", "fpr", "tpr"]
PROB_CLAMP = 1e-12
PROB_SUM_TOL = 1e-6


@dataclass
class PredictionSet:
    """Per-image two-class probabilities with ground truth.

    ``labels`` is (N,) in {0, 1}; ``probs`` is (N, 2) ordered
    (p_authentic, p_tampered), rows summing to 1 within 1e-6.
    """

    paths: list[str]
    labels: np.ndarray
    probs: np.ndarray

    def __post_init__(self) -> None:
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if len(self.paths) == 0:
            raise EmptyPredictionSet("prediction set has no rows")
        if self.probs.shape != (len(self.paths), 2) or self.labels.shape != (len(self.paths),):
            raise ShapeMismatch(
                f"paths/labels/probs disagree: {len(self.paths)}, {self.labels.shape}, {self.probs.shape}"
            )
        if np.any(self.probs < 0):
            raise ElanetError("probabilities must be non-negative")
        if np.any(np.abs(self.probs.sum(axis=1) - 1.0) > PROB_SUM_TOL):
            raise ElanetError("probability rows must sum to 1 within 1e-6")
        if not np.all((self.labels == 0) | (self.labels == 1)):
            raise ElanetError("labels must be 0 or 1")

    def __len__(self) -> int:
        return len(self.paths)

    @property
    def p_tampered(self) -> np.ndarray:
        return self.probs[:, 1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(PREDICTIONS_HEADER)
        for path, label, (pa, pt) in zip(self.paths, self.labels, self.probs):
            writer.writerow([path, int(label), f"{pa:.9f}", f"{pt:.9f}"])
        return buf.getvalue()

    def save(self, path: str | Path) -> None:
        atomic_write_text(path, self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "PredictionSet":
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        if not rows or rows[0] != PREDICTIONS_HEADER:
            raise ElanetError(f"bad predictions header: {rows[:1]}")
        paths, labels, probs = [], [], []
        for r in rows[1:]:
            if len(r) != 4:
                raise ElanetError(f"bad predictions row: {r}")
            paths.append(r[0])
            labels.append(int(r[1]))
            probs.append((float(r[2]), float(r[3])))
        return cls(paths=paths, labels=np.array(labels), probs=np.array(probs))

    @classmethod
    def load(cls, path: str | Path) -> "PredictionSet":
        return cls.from_csv(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class RocCurve:
    """Staircase ROC: (fpr, tpr) points from (0,0) to (1,1) and the
    descending decision thresholds that produced them (inf first)."""

    points: np.ndarray
    thresholds: np.ndarray

    @property
    def fpr(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def tpr(self) -> np.ndarray:
        return self.points[:, 1]


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f_measure: float
    auc: float
    mean_bce: float
    threshold: float
    beta: float = 1.0

    def to_text(self) -> str:
        return (
            f"threshold={self.threshold:.6f}\n"
            f"beta={self.beta:.6f}\n"
            f"accuracy={self.accuracy:.6f}\n"
            f"precision={self.precision:.6f}\n"
            f"recall={self.recall:.6f}\n"
            f"f_measure={self.f_measure:.6f}\n"
            f"auc={self.auc:.6f}\n"
            f"mean_bce={self.mean_bce:.6f}\n"
        )

    def to_csv(self) -> str:
        lines = ["metric,value"]
        for line in self.to_text().strip().splitlines():
            key, _, value = line.partition("=")
            lines.append(f"{key},{value}")
        return "\n".join(lines) + "\n"


def confusion(preds: PredictionSet, threshold: float) -> ConfusionCounts:
    """Counts with Tampered positive; predicted positive iff
    p_tampered >= threshold."""
    if len(preds) == 0:
        raise EmptyPredictionSet("prediction set has no rows")
    positive = preds.p_tampered >= threshold
    actual = preds.labels == 1
    return ConfusionCounts(
        tp=int(np.sum(positive & actual)),
        fp=int(np.sum(positive & ~actual)),
        tn=int(np.sum(~positive & ~actual)),
        fn=int(np.sum(~positive & actual)),
    )


def precision(cc: ConfusionCounts) -> float:
    """tp / (tp + fp), 0 when nothing was predicted positive."""
    denom = cc.tp + cc.fp
    return cc.tp / denom if denom else 0.0


def recall(cc: ConfusionCounts) -> float:
    """tp / (tp + fn), 0 when there are no positives."""
    denom = cc.tp + cc.fn
    return cc.tp / denom if denom else 0.0


def f_measure(p: float, r: float, beta: float = 1.0) -> float:
    """(1 + b^2) * p * r / (b^2 * p + r); beta < 1 leans on precision,
    beta > 1 on recall, beta = 1 is their harmonic mean."""
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    denom = beta * beta * p + r
    return (1 + beta * beta) * p * r / denom if denom else 0.0


def roc_curve(preds: PredictionSet) -> RocCurve:
    """Standard staircase sweep over distinct p_tampered values, descending.

    Rows that share a score move as one group (a diagonal segment). The
    first point is (0,0) at threshold inf; the sweep ends at (1,1) when the
    threshold reaches the minimum score.
    """
    labels = preds.labels
    n_pos = int(np.sum(labels == 1))
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassOnly(f"need both classes, got {n_pos} positive / {n_neg} negative")
    order = np.argsort(-preds.p_tampered, kind="stable")
    scores = preds.p_tampered[order]
    pos = (labels[order] == 1).astype(np.int64)
    # Group boundaries: last index of each run of equal scores.
    distinct = np.nonzero(np.diff(scores))[0]
    group_ends = np.concatenate([distinct, [len(scores) - 1]])
    tp_cum = np.cumsum(pos)[group_ends]
    fp_cum = (group_ends + 1) - tp_cum
    tpr = np.concatenate([[0.0], tp_cum / n_pos])
    fpr = np.concatenate([[0.0], fp_cum / n_neg])
    thresholds = np.concatenate([[np.inf], scores[group_ends]])
    return RocCurve(points=np.column_stack([fpr, tpr]), thresholds=thresholds)


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the staircase, integrated over fpr.

    With grouped ties this equals the pairwise ordering statistic: the
    probability a random positive outscores a random negative, ties at 1/2.
    """
    return float(np.trapezoid(curve.tpr, curve.fpr))


def mean_bce(preds: PredictionSet) -> float:
    """Mean negative log-probability of the true class, clamped to 1e-12."""
    p_true = np.where(preds.labels == 1, preds.probs[:, 1], preds.probs[:, 0])
    return float(np.mean(-np.log(np.clip(p_true, PROB_CLAMP, 1.0))))


def evaluate(preds: PredictionSet, threshold: float = 0.5, beta: float = 1.0) -> MetricsReport:
    """Full report: threshold metrics at ``threshold`` plus AUC and mean BCE."""
    cc = confusion(preds, threshold)
    p = precision(cc)
    r = recall(cc)
    return MetricsReport(
        accuracy=(cc.tp + cc.tn) / cc.total,
        precision=p,
        recall=r,
        f_measure=f_measure(p, r, beta),
        auc=auc(roc_curve(preds)),
        mean_bce=mean_bce(preds),
        threshold=threshold,
        beta=beta,
    )


def roc_to_csv(curve: RocCurve) -> str:
    lines = [",".join(ROC_HEADER)]
    for t, (f, tp) in zip(curve.thresholds, curve.points):
        lines.append(f"{t:.9f},{f:.9f},{tp:.9f}" if np.isfinite(t) else f"inf,{f:.9f},{tp:.9f}")
    return "\n".join(lines) + "\n"

"""Confusion matrices, per-class metrics, AUC and report rendering.

The text report mirrors the familiar four-column classification report:
one row per class in index order, then accuracy, macro avg and weighted
avg. All rendered values are rounded half-up to two decimals; the JSON
form carries full precision.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal

import numpy as np
from scipy.stats import rankdata

from .dataset import ACTION_NAMES, N_CLASSES
from .errors import DataError, ModelError

ZERO_DIVISION_POLICIES = ("zero", "one")


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[t][p] = number of samples of true class t predicted as p."""

    counts: np.ndarray
    class_names: tuple[str, ...] = ACTION_NAMES

    def __post_init__(self):
        counts = np.ascontiguousarray(np.asarray(self.counts, dtype=np.int64))
        if counts.shape != (len(self.class_names), len(self.class_names)):
            raise DataError(f"confusion matrix must be square, got {counts.shape}")
        if np.any(counts < 0):
            raise DataError("confusion matrix entries must be non-negative")
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "class_names", tuple(self.class_names))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def trace(self) -> int:
        return int(np.trace(self.counts))

    def to_csv(self) -> str:
        """Grid with a header row and a leading true-class column."""
        lines = ["true\\predicted," + ",".join(self.class_names)]
        for i, name in enumerate(self.class_names):
            lines.append(name + "," + ",".join(str(int(v)) for v in self.counts[i]))
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "class_names": list(self.class_names),
            "counts": [[int(v) for v in row] for row in self.counts],
        }

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConfusionMatrix):
            return NotImplemented
        return self.class_names == other.class_names and np.array_equal(
            self.counts, other.counts
        )


def confusion_matrix(y_true, y_pred, n_classes: int = N_CLASSES) -> ConfusionMatrix:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise DataError(
            f"y_true and y_pred must be equal-length vectors, got {y_true.shape} and {y_pred.shape}"
        )
    for name, arr in (("y_true", y_true), ("y_pred", y_pred)):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise DataError(f"{name} contains indices outside 0..{n_classes - 1}")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (y_true, y_pred), 1)
    return ConfusionMatrix(counts, ACTION_NAMES[:n_classes])


@dataclass(frozen=True)
class ClassRow:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class Averages:
    precision: float
    recall: float
    f1: float


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def prf_row(precision: float, recall: float, support: int) -> ClassRow:
    """Build a per-class row from precision and recall, deriving f1."""
    return ClassRow(precision, recall, _f1(precision, recall), support)


def per_class_prf(cm: ConfusionMatrix, policy: str = "one") -> tuple[list[ClassRow], bool]:
    """Precision, recall and f1 per class, with zero-denominator handling.

    Returns the rows plus a flag that is set when any denominator was zero
    and the policy value was substituted.
    """
    if policy not in ZERO_DIVISION_POLICIES:
        raise DataError(f"zero-division policy must be one of {ZERO_DIVISION_POLICIES}")
    substitute = 1.0 if policy == "one" else 0.0
    rows: list[ClassRow] = []
    hit = False
    for k in range(len(cm.class_names)):
        tp = int(cm.counts[k, k])
        predicted = int(cm.counts[:, k].sum())
        support = int(cm.counts[k, :].sum())
        if predicted == 0:
            precision = substitute
            hit = True
        else:
            precision = tp / predicted
        if support == 0:
            recall = substitute
            hit = True
        else:
            recall = tp / support
        rows.append(ClassRow(precision, recall, _f1(precision, recall), support))
    return rows, hit


def aggregate(
    rows: list[ClassRow], accuracy: float | None = None
) -> tuple[float, Averages, Averages]:
    """Macro and support-weighted averages over per-class rows.

    Macro values are plain means. Weighted precision and f1 are
    support-weighted means. Accuracy, when not supplied from a confusion
    matrix trace, is derived from the micro identity sum(recall_k *
    support_k) / total; the weighted recall slot always carries the
    accuracy, which equals its support-weighted mean on any full-coverage
    matrix.
    """
    n_rows = len(rows)
    supports = np.array([r.support for r in rows], dtype=np.float64)
    total = supports.sum()
    if total <= 0:
        raise DataError("aggregate needs a positive total support")
    precisions = np.array([r.precision for r in rows])
    recalls = np.array([r.recall for r in rows])
    f1s = np.array([r.f1 for r in rows])

    macro = Averages(
        float(precisions.sum() / n_rows),
        float(recalls.sum() / n_rows),
        float(f1s.sum() / n_rows),
    )
    if accuracy is None:
        accuracy = float((recalls * supports).sum() / total)
    weighted = Averages(
        float((precisions * supports).sum() / total),
        float(accuracy),
        float((f1s * supports).sum() / total),
    )
    return float(accuracy), macro, weighted


@dataclass(frozen=True)
class ClassificationReport:
    rows: tuple[ClassRow, ...]
    accuracy: float
    macro: Averages
    weighted: Averages
    zero_division_policy: str = "one"
    zero_division_hit: bool = False
    auc_macro_ovr: float | None = None
    auc_skipped_classes: tuple[int, ...] = ()
    class_names: tuple[str, ...] = ACTION_NAMES

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        object.__setattr__(self, "auc_skipped_classes", tuple(self.auc_skipped_classes))
        object.__setattr__(self, "class_names", tuple(self.class_names))

    @property
    def total_support(self) -> int:
        return sum(r.support for r in self.rows)


def build_report(
    cm: ConfusionMatrix,
    policy: str = "one",
    y_true=None,
    scores=None,
) -> ClassificationReport:
    """Full report from a confusion matrix, with AUC when scores are given."""
    rows, hit = per_class_prf(cm, policy)
    total = cm.total
    if total == 0:
        raise DataError("cannot report on an empty evaluation")
    accuracy, macro, weighted = aggregate(rows, accuracy=cm.trace / total)
    auc = None
    skipped: tuple[int, ...] = ()
    if scores is not None:
        if y_true is None:
            raise DataError("scores were given without y_true")
        per_class = roc_auc_per_class(y_true, scores)
        skipped = tuple(k for k, v in enumerate(per_class) if v is None)
        usable = [v for v in per_class if v is not None]
        if not usable:
            raise ModelError("AUC undefined: every class lacks positives or negatives")
        auc = float(np.mean(usable))
    return ClassificationReport(
        rows=tuple(rows),
        accuracy=accuracy,
        macro=macro,
        weighted=weighted,
        zero_division_policy=policy,
        zero_division_hit=hit,
        auc_macro_ovr=auc,
        auc_skipped_classes=skipped,
        class_names=cm.class_names,
    )


def roc_auc_per_class(y_true, scores) -> list[float | None]:
    """One-vs-rest AUC per class by the rank statistic with midrank ties.

    A class with no positives or no negatives gets None.
    """
    y_true = np.asarray(y_true, dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[0] != y_true.shape[0]:
        raise DataError(
            f"scores must be (n, k) aligned with y_true, got {scores.shape} for n={y_true.shape[0]}"
        )
    out: list[float | None] = []
    for k in range(scores.shape[1]):
        positive = y_true == k
        n_pos = int(positive.sum())
        n_neg = int(y_true.shape[0] - n_pos)
        if n_pos == 0 or n_neg == 0:
            out.append(None)
            continue
        ranks = rankdata(scores[:, k], method="average")
        rank_sum = float(ranks[positive].sum())
        out.append((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))
    return out


def roc_auc_ovr_macro(y_true, scores) -> float:
    """Unweighted mean of the per-class one-vs-rest AUCs.

    Classes without both positives and negatives are skipped; raises when
    no class is usable.
    """
    per_class = roc_auc_per_class(y_true, scores)
    usable = [v for v in per_class if v is not None]
    if not usable:
        raise ModelError("AUC undefined: every class lacks positives or negatives")
    return float(np.mean(usable))


def round_half_up(value: float, places: int = 2) -> str:
    """Fixed-point decimal string, rounding .xx5 away from zero."""
    quantum = Decimal(1).scaleb(-places)
    return str(Decimal(repr(float(value))).quantize(quantum, rounding=ROUND_HALF_UP))


def render_report(report: ClassificationReport, fmt: str = "text") -> str:
    if fmt == "json":
        return json.dumps(report_to_dict(report), indent=2)
    if fmt != "text":
        raise DataError(f"unknown report format {fmt!r}")

    names = list(report.class_names)
    width = max(len(n) for n in names + ["accuracy", "macro avg", "weighted avg"])
    col = 10

    def line(name: str, p, r, f, support) -> str:
        cells = [f"{name:>{width}}"]
        for v in (p, r, f):
            cells.append(f"{round_half_up(v):>{col}}" if v is not None else " " * col)
        cells.append(f"{support:>{col}d}")
        return " ".join(cells)

    total = report.total_support
    out = [
        " ".join(
            [f"{'':>{width}}"]
            + [f"{h:>{col}}" for h in ("precision", "recall", "f1-score", "support")]
        ),
        "",
    ]
    for name, row in zip(names, report.rows):
        out.append(line(name, row.precision, row.recall, row.f1, row.support))
    out.append("")
    out.append(line("accuracy", None, None, report.accuracy, total))
    out.append(line("macro avg", report.macro.precision, report.macro.recall, report.macro.f1, total))
    out.append(
        line(
            "weighted avg",
            report.weighted.precision,
            report.weighted.recall,
            report.weighted.f1,
            total,
        )
    )
    return "\n".join(out) + "\n"


def report_to_dict(report: ClassificationReport) -> dict:
    return {
        "class_names": list(report.class_names),
        "classes": [
            {
                "name": name,
                "precision": row.precision,
                "recall": row.recall,
                "f1": row.f1,
                "support": row.support,
            }
            for name, row in zip(report.class_names, report.rows)
        ],
        "accuracy": report.accuracy,
        "macro_avg": {
            "precision": report.macro.precision,
            "recall": report.macro.recall,
            "f1": report.macro.f1,
        },
        "weighted_avg": {
            "precision": report.weighted.precision,
            "recall": report.weighted.recall,
            "f1": report.weighted.f1,
        },
        "zero_division_policy": report.zero_division_policy,
        "zero_division_hit": report.zero_division_hit,
        "auc_macro_ovr": report.auc_macro_ovr,
        "auc_averaging": "macro_ovr",
        "auc_skipped_classes": list(report.auc_skipped_classes),
    }


def report_from_json(text: str) -> ClassificationReport:
    raw = json.loads(text)
    rows = tuple(
        ClassRow(c["precision"], c["recall"], c["f1"], c["support"]) for c in raw["classes"]
    )
    return ClassificationReport(
        rows=rows,
        accuracy=raw["accuracy"],
        macro=Averages(**raw["macro_avg"]),
        weighted=Averages(**raw["weighted_avg"]),
        zero_division_policy=raw["zero_division_policy"],
        zero_division_hit=raw["zero_division_hit"],
        auc_macro_ovr=raw["auc_macro_ovr"],
        auc_skipped_classes=tuple(raw["auc_skipped_classes"]),
        class_names=tuple(raw["class_names"]),
    )

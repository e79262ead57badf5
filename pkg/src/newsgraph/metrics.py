"""Binary classification metrics with a threshold-sweep ROC curve.

Class 1 marks a fake article and is scored by the second probability
column.  Macro averages treat both classes equally; an undefined
precision or recall (empty denominator) counts as zero rather than being
dropped.  The area under the curve is computed twice, once by pair
ranking and once by the trapezoid rule over the sweep points, and the
two routes must agree to within 1e-9 or evaluation aborts.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class Metrics:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    auc: float | None
    roc: list


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def _roc_sweep(scores: np.ndarray, labels: np.ndarray) -> list:
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = int(labels.size - n_pos)
    rows = [(float(scores.max()) + 1.0, 0.0, 0.0)]
    for t in sorted(set(scores.tolist()), reverse=True):
        predicted = scores >= t
        tp = int((predicted & pos).sum())
        fp = int((predicted & ~pos).sum())
        rows.append((float(t), fp / n_neg, tp / n_pos))
    return rows


def _auc_by_ranking(scores: np.ndarray, labels: np.ndarray) -> float:
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    diff = pos[:, None] - neg[None, :]
    wins = (diff > 0).sum() + 0.5 * (diff == 0).sum()
    return float(wins / (pos.size * neg.size))


def _auc_by_trapezoid(roc: list) -> float:
    fpr = np.array([r[1] for r in roc])
    tpr = np.array([r[2] for r in roc])
    return float(np.trapezoid(tpr, fpr))


def evaluate_metrics(probs, labels) -> Metrics:
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if probs.ndim != 2 or probs.shape[1] != 2:
        raise ValueError("probs must be an (n, 2) matrix")
    if labels.shape != (probs.shape[0],):
        raise ValueError("labels must match probs row for row")
    if labels.size == 0:
        raise ValueError("cannot evaluate an empty batch")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")

    preds = probs.argmax(axis=1)
    accuracy = float((preds == labels).mean())

    precisions, recalls, f1s = [], [], []
    for cls in (0, 1):
        tp = int(((preds == cls) & (labels == cls)).sum())
        precision = _safe_div(tp, int((preds == cls).sum()))
        recall = _safe_div(tp, int((labels == cls).sum()))
        precisions.append(precision)
        recalls.append(recall)
        f1s.append(_safe_div(2.0 * precision * recall, precision + recall))

    scores = probs[:, 1]
    if len(set(labels.tolist())) < 2:
        auc, roc = None, []
    else:
        roc = _roc_sweep(scores, labels)
        auc = _auc_by_ranking(scores, labels)
        check = _auc_by_trapezoid(roc)
        if abs(auc - check) > 1e-9:
            raise ArithmeticError(
                f"AUC routes disagree: ranking {auc} vs trapezoid {check}")

    return Metrics(
        accuracy=accuracy,
        macro_precision=float(np.mean(precisions)),
        macro_recall=float(np.mean(recalls)),
        macro_f1=float(np.mean(f1s)),
        auc=auc,
        roc=roc,
    )

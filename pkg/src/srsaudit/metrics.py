"""Attack-quality metrics (accuracy, ROC/AUROC, TPR@FPR) and EER."""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError


@dataclass(frozen=True)
class RocCurve:
    """Operating points swept over all score thresholds, (0,0) to (1,1)."""

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray  # score accepted iff score >= threshold


@dataclass(frozen=True)
class EerReport:
    eer: float
    threshold: float


def roc_curve(member_scores, non_member_scores) -> RocCurve:
    """Empirical ROC: one point per distinct threshold, plus the endpoints."""
    pos = np.asarray(member_scores, dtype=np.float64)
    neg = np.asarray(non_member_scores, dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise EmptyInputError("roc needs scores on both sides")
    thresholds = np.unique(np.concatenate([pos, neg]))[::-1]
    pos_sorted = np.sort(pos)
    neg_sorted = np.sort(neg)
    # count of scores >= t via binary search on the sorted arrays
    tpr_body = (pos.size - np.searchsorted(pos_sorted, thresholds, side="left")) / pos.size
    fpr_body = (neg.size - np.searchsorted(neg_sorted, thresholds, side="left")) / neg.size
    tpr = np.concatenate([[0.0], tpr_body])
    fpr = np.concatenate([[0.0], fpr_body])
    thr = np.concatenate([[np.inf], thresholds])
    if fpr[-1] < 1.0 or tpr[-1] < 1.0:
        tpr = np.append(tpr, 1.0)
        fpr = np.append(fpr, 1.0)
        thr = np.append(thr, -np.inf)
    return RocCurve(fpr, tpr, thr)


def auroc(member_scores, non_member_scores) -> float:
    """P(member > non-member) + 0.5 P(tie), via the rank statistic."""
    pos = np.asarray(member_scores, dtype=np.float64)
    neg = np.asarray(non_member_scores, dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise EmptyInputError("auroc needs scores on both sides")
    combined = np.concatenate([pos, neg])
    order = np.argsort(combined, kind="mergesort")
    ranks = np.empty(combined.size)
    ranks[order] = np.arange(1, combined.size + 1)
    # average ranks over ties
    sorted_scores = combined[order]
    i = 0
    while i < sorted_scores.size:
        j = i
        while j + 1 < sorted_scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        if j > i:
            ranks[order[i : j + 1]] = 0.5 * (i + j) + 1
        i = j + 1
    rank_sum = float(ranks[: pos.size].sum())
    u = rank_sum - pos.size * (pos.size + 1) / 2
    return u / (pos.size * neg.size)


def auroc_trapezoid(member_scores, non_member_scores) -> float:
    """Independent AUROC via trapezoidal area under the empirical ROC."""
    curve = roc_curve(member_scores, non_member_scores)
    return float(np.trapezoid(curve.tpr, curve.fpr))


def tpr_at_fpr(curve: RocCurve, x: float) -> float:
    """Best achievable TPR among operating points with FPR <= x (no interpolation)."""
    if not 0.0 <= x <= 1.0:
        raise EmptyInputError("target FPR must lie in [0, 1]")
    eligible = curve.fpr <= x
    return float(curve.tpr[eligible].max())


def accuracy(decisions, labels) -> float:
    """Fraction of correct decisions; warns when the evaluation set is imbalanced."""
    decisions = np.asarray(decisions)
    labels = np.asarray(labels)
    if decisions.size != labels.size or decisions.size == 0:
        raise EmptyInputError("decisions and labels must be equal-length and non-empty")
    n_pos = int(np.sum(labels == 1))
    if n_pos * 2 != labels.size:
        warnings.warn(
            f"imbalanced evaluation set ({n_pos} members vs {labels.size - n_pos} non-members); "
            "accuracy is sensitive to the class ratio",
            stacklevel=2,
        )
    return float(np.mean(decisions == labels))


def _upper_hull(points: np.ndarray) -> np.ndarray:
    """Upper-left convex hull of ROC points sorted by (fpr, tpr)."""
    hull: list[np.ndarray] = []
    for p in points:
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    return np.array(hull)


def eer(genuine_scores, imposter_scores) -> EerReport:
    """Equal error rate at the FAR = FRR crossing of the interpolated ROC.

    Uses the convex hull of the empirical ROC (operating points achievable
    by interpolating between thresholds), so degenerate staircase corners on
    the diagonal do not inflate the rate.
    """
    curve = roc_curve(genuine_scores, imposter_scores)
    points = np.column_stack([curve.fpr, curve.tpr, curve.thresholds])
    order = np.lexsort((points[:, 1], points[:, 0]))
    hull = _upper_hull(points[order])
    # find segment crossing tpr = 1 - fpr, i.e. f(p) = tpr + fpr - 1 changes sign
    f = hull[:, 1] + hull[:, 0] - 1.0
    for idx in range(len(hull) - 1):
        f0, f1 = f[idx], f[idx + 1]
        if f0 <= 0.0 <= f1 or f1 <= 0.0 <= f0:
            if f1 == f0:
                # whole segment on the diagonal: FAR = FRR = 0.5
                return EerReport(0.5, float(0.5 * (hull[idx, 2] + hull[idx + 1, 2])))
            t = -f0 / (f1 - f0)
            fpr = hull[idx, 0] + t * (hull[idx + 1, 0] - hull[idx, 0])
            thr0, thr1 = hull[idx, 2], hull[idx + 1, 2]
            if np.isinf(thr0) and np.isinf(thr1):
                thr = 0.0
            elif np.isinf(thr0):
                thr = thr1
            elif np.isinf(thr1):
                thr = thr0
            else:
                thr = thr0 + t * (thr1 - thr0)
            return EerReport(float(fpr), float(thr))
    raise EmptyInputError("no FAR = FRR crossing found")  # pragma: no cover


def overfit_gap(train_genuine, train_imposter, test_genuine, test_imposter):
    """(train EER, test EER, test - train) over the given trial scores."""
    train = eer(train_genuine, train_imposter).eer
    test = eer(test_genuine, test_imposter).eer
    return train, test, test - train


def write_metrics_csv(path, metrics: dict, n_members: int, n_nonmembers: int, config_hash: str):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value", "n_members", "n_nonmembers", "config_hash"])
        for name, value in metrics.items():
            writer.writerow([name, f"{value:.6f}", n_members, n_nonmembers, config_hash])


def write_roc_csv(path, curve: RocCurve):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "fpr", "tpr"])
        for thr, fpr, tpr in zip(curve.thresholds, curve.fpr, curve.tpr):
            writer.writerow([thr, f"{fpr:.6f}", f"{tpr:.6f}"])

"""Agreement between a predicted and a reference partition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import comb

from .basis import InvalidInputError


def contingency(pred, true):
    pred = np.asarray(pred)
    true = np.asarray(true)
    if pred.shape != true.shape or pred.ndim != 1:
        raise InvalidInputError("label vectors must have equal length")
    p_vals, p_idx = np.unique(pred, return_inverse=True)
    t_vals, t_idx = np.unique(true, return_inverse=True)
    table = np.zeros((p_vals.size, t_vals.size), dtype=int)
    np.add.at(table, (p_idx, t_idx), 1)
    return table, p_vals, t_vals


def adjusted_rand_index(pred, true) -> float:
    table, _, _ = contingency(pred, true)
    n = table.sum()
    sum_cells = comb(table, 2).sum()
    sum_rows = comb(table.sum(axis=1), 2).sum()
    sum_cols = comb(table.sum(axis=0), 2).sum()
    expected = sum_rows * sum_cols / comb(n, 2) if n > 1 else 0.0
    max_index = 0.5 * (sum_rows + sum_cols)
    if max_index == expected:
        # both partitions trivial (all singletons or a single block)
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))


@dataclass
class Evaluation:
    ari: float
    confusion: np.ndarray
    pred_order: np.ndarray
    true_order: np.ndarray
    misclassification_rate: float

    def to_dict(self) -> dict:
        return {
            "ari": self.ari,
            "misclassification_rate": self.misclassification_rate,
            "confusion": self.confusion.tolist(),
            "pred_clusters": self.pred_order.tolist(),
            "true_classes": self.true_order.tolist(),
        }


def evaluate(pred, true) -> Evaluation:
    """ARI, confusion matrix under the best cluster-to-class matching, and error rate.

    Rows of ``confusion`` are predicted clusters reordered so that row j is
    matched to true class j; unmatched clusters follow the matched ones.
    """
    table, p_vals, t_vals = contingency(pred, true)
    rows, cols = linear_sum_assignment(-table)
    matched = int(table[rows, cols].sum())
    pairs = sorted(zip(cols, rows))
    order = [r for _, r in pairs] + [r for r in range(table.shape[0]) if r not in rows]
    return Evaluation(
        ari=adjusted_rand_index(pred, true),
        confusion=table[order],
        pred_order=p_vals[order],
        true_order=t_vals,
        misclassification_rate=1.0 - matched / table.sum(),
    )

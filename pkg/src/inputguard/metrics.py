"""Detection and accuracy metrics: AUROC, TNR at a target TPR, accuracy.

Scores follow the "higher means more positive" convention; for distance
based detection the deviated/out-of-distribution side is the positive
class, so raw minimum distances can be passed as-is.
"""

import math

import numpy as np

from ._validation import as_float_vector
from .errors import InputError


def auroc(positives, negatives):
    """Pair-counting AUROC: P(pos > neg) + 0.5 * P(pos = neg).

    Exact (ties count one half) and equivalent to the O(|P|*|N|) pair
    enumeration; computed via binary search on the sorted negatives.
    """
    pos = as_float_vector(positives, "positives")
    neg = as_float_vector(negatives, "negatives")
    neg_sorted = np.sort(neg)
    below = np.searchsorted(neg_sorted, pos, side="left")
    equal = np.searchsorted(neg_sorted, pos, side="right") - below
    wins = below.sum(dtype=np.float64) + 0.5 * equal.sum(dtype=np.float64)
    return float(wins / (pos.size * neg.size))


def threshold_at_tpr(positives, tpr):
    """Largest threshold t with fraction(positives >= t) >= tpr."""
    if not 0.0 < tpr <= 1.0:
        raise InputError(f"tpr must be in (0, 1], got {tpr}")
    pos = np.sort(as_float_vector(positives, "positives"))
    n = pos.size
    # smallest count c with c/n >= tpr; the epsilon guards fp round-up
    need = max(1, math.ceil(tpr * n - 1e-9))
    return float(pos[n - need])


def tnr_at_tpr(positives, negatives, tpr=0.95):
    """True-negative rate at the threshold achieving the requested TPR."""
    neg = as_float_vector(negatives, "negatives")
    t = threshold_at_tpr(positives, tpr)
    return float(np.mean(neg < t))


def accuracy(predictions, truths):
    """Fraction of exact matches between two aligned label sequences."""
    pred = np.asarray(predictions).ravel()
    true = np.asarray(truths).ravel()
    if pred.size != true.size:
        raise InputError(f"length mismatch: {pred.size} predictions vs {true.size} truths")
    if pred.size == 0:
        raise InputError("empty label sequences")
    return float(np.mean(pred == true))

"""Metric-learning losses over squared Euclidean embedding distances.

Three losses live here, all built on f(a, b) = ||e_a - e_b||^2:

* the classic triplet hinge max(d_ap - d_an + alpha, 0);
* the tri-margin loss that orders clean / deviated / extreme versions of
  the same inputs into three distance bands (margins m1 < m2);
* the quadruplet loss with batch-hard mining, whose auxiliary term also
  separates negative pairs that do not share the anchor (margins m1 > m2).

Every loss returns analytic gradients; at a hinge kink the clamped branch
contributes zero gradient (one-sided limit of the clamp).
"""

from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from ._validation import as_float_matrix, as_label_vector, check_same_rows
from .errors import InputError, MiningError


@dataclass(frozen=True)
class Margins:
    """A margin pair; the required ordering depends on the loss using it."""

    m1: float
    m2: float

    def __post_init__(self):
        if not (self.m1 > 0 and self.m2 > 0):
            raise InputError(f"margins must be positive, got ({self.m1}, {self.m2})")


@dataclass
class SiameseBatch:
    """Row-aligned blocks: anchors, same-class partners, deviated, extreme.

    Row r of every block refers to the same underlying class; partners[r]
    must be a different instance than anchors[r].
    """

    anchors: np.ndarray
    partners: np.ndarray
    deviated: np.ndarray
    extreme: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.anchors = as_float_matrix(self.anchors, "anchors")
        self.partners = as_float_matrix(self.partners, "partners")
        self.deviated = as_float_matrix(self.deviated, "deviated")
        self.extreme = as_float_matrix(self.extreme, "extreme")
        self.labels = as_label_vector(self.labels, "labels")
        for name, block in (
            ("partners", self.partners),
            ("deviated", self.deviated),
            ("extreme", self.extreme),
        ):
            check_same_rows("anchors", self.anchors, name, block)
            if block.shape[1] != self.anchors.shape[1]:
                raise InputError(
                    f"{name} feature width {block.shape[1]} != anchors "
                    f"width {self.anchors.shape[1]}"
                )
        if self.labels.shape[0] != self.anchors.shape[0]:
            raise InputError("labels must align with the batch rows")


def pairwise_sq_distances(embeddings):
    """All-pairs squared Euclidean distances, (N, N), symmetric, zero diagonal.

    Computed from explicit coordinate differences (not the expanded dot
    product form) so the result is exact under translation of the inputs.
    Intended for mining-sized batches (N up to a few hundred).
    """
    e = as_float_matrix(embeddings, "embeddings")
    diff = e[:, None, :] - e[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(d2, 0.0)
    return d2


def rowwise_sq_distances(a, b):
    """Squared Euclidean distance between aligned rows of a and b."""
    a = as_float_matrix(a, "a")
    b = as_float_matrix(b, "b")
    check_same_rows("a", a, "b", b)
    diff = a - b
    return np.einsum("ij,ij->i", diff, diff)


def triplet_loss(d_ap, d_an, alpha):
    """max(d_ap - d_an + alpha, 0) for nonnegative distances."""
    if d_ap < 0 or d_an < 0:
        raise InputError("distances must be nonnegative")
    return max(d_ap - d_an + alpha, 0.0)


BatchHard = namedtuple("BatchHard", ["dist_hard_p", "dist_hard_n", "pos_idx", "neg_idx"])


def mine_batch_hard(d2, labels):
    """Hardest positive and hardest negative distance per anchor.

    For anchor a: the positive is the farthest distinct same-label sample,
    the negative the closest different-label sample. Raises MiningError
    naming the first anchor that lacks either partner.
    """
    d2 = as_float_matrix(d2, "d2")
    n = d2.shape[0]
    if d2.shape[1] != n:
        raise InputError(f"d2 must be square, got {d2.shape}")
    labels = as_label_vector(labels, "labels")
    if labels.shape[0] != n:
        raise InputError("labels must align with the distance matrix")

    same = labels[:, None] == labels[None, :]
    eye = np.eye(n, dtype=bool)
    mask_pos = same & ~eye
    mask_neg = ~same

    for a in range(n):
        if not mask_pos[a].any():
            raise MiningError(f"anchor {a} has no positive in the batch")
        if not mask_neg[a].any():
            raise MiningError(f"anchor {a} has no negative in the batch")

    dist_hard_p = np.where(mask_pos, d2, -np.inf).max(axis=1)
    pos_idx = np.where(mask_pos, d2, -np.inf).argmax(axis=1)
    dist_hard_n = np.where(mask_neg, d2, np.inf).min(axis=1)
    neg_idx = np.where(mask_neg, d2, np.inf).argmin(axis=1)
    return BatchHard(dist_hard_p, dist_hard_n, pos_idx, neg_idx)


def quadruplet_loss(embeddings, labels, margins):
    """Batch-hard quadruplet loss and its gradient w.r.t. the embeddings.

    loss_an = mean(max(dist_hard_p - dist_hard_n + m1, 0)) over anchors;
    loss_nn = mean(max(dist_hard_p - dist_hard_nn + m2, 0)), where
    dist_hard_nn[a] is the smallest distance among pairs (j, k) whose
    labels differ from each other and from a's label. With fewer than
    three distinct labels in the batch no such pair exists and loss_nn
    is 0. Requires m1 > m2.
    """
    m1, m2 = margins.m1, margins.m2
    if not m1 > m2:
        raise InputError(f"quadruplet margins need m1 > m2, got ({m1}, {m2})")
    e = as_float_matrix(embeddings, "embeddings")
    labels = as_label_vector(labels, "labels")
    if labels.shape[0] != e.shape[0]:
        raise InputError("labels must align with the embeddings")

    n = e.shape[0]
    d2 = pairwise_sq_distances(e)
    hard = mine_batch_hard(d2, labels)

    grad = np.zeros_like(e)

    def add_pair_grad(i, j, coeff):
        # coeff * d(||e_i - e_j||^2) accumulated into the gradient
        diff = 2.0 * coeff * (e[i] - e[j])
        grad[i] += diff
        grad[j] -= diff

    t_an = hard.dist_hard_p - hard.dist_hard_n + m1
    loss_an = np.maximum(t_an, 0.0).mean()
    for a in np.nonzero(t_an > 0.0)[0]:
        add_pair_grad(a, hard.pos_idx[a], 1.0 / n)
        add_pair_grad(a, hard.neg_idx[a], -1.0 / n)

    loss_nn = 0.0
    if np.unique(labels).size >= 3:
        diff_lab = labels[:, None] != labels[None, :]
        # mask[a, j, k]: labels of a, j, k pairwise distinct
        mask = diff_lab[:, :, None] & diff_lab[:, None, :] & diff_lab[None, :, :]
        gmax = d2.max()
        d_nn = np.where(mask, d2[None, :, :], gmax + 1.0)
        flat = d_nn.reshape(n, -1)
        nn_flat_idx = flat.argmin(axis=1)
        dist_hard_nn = flat[np.arange(n), nn_flat_idx]
        t_nn = hard.dist_hard_p - dist_hard_nn + m2
        loss_nn = np.maximum(t_nn, 0.0).mean()
        for a in np.nonzero(t_nn > 0.0)[0]:
            j, k = divmod(int(nn_flat_idx[a]), n)
            add_pair_grad(a, hard.pos_idx[a], 1.0 / n)
            add_pair_grad(j, k, -1.0 / n)

    return loss_an + loss_nn, grad


def siamese_trimargin_loss(batch, net, margins):
    """Tri-margin loss over a SiameseBatch, with network parameter gradients.

    Per row, with f_ij the anchor/partner distance, f' the anchor/deviated
    distance and f'' the anchor/extreme distance:

        max(f_ij - f' + m1, 0) + max(f' - f_ij - m2, 0) + max(f_ij - f'' + m2, 0)

    averaged over rows. All four blocks pass through the same (weight
    sharing) network; gradients are accumulated across the four passes.
    Requires m1 < m2.
    """
    m1, m2 = margins.m1, margins.m2
    if not m1 < m2:
        raise InputError(f"tri-margin loss needs m1 < m2, got ({m1}, {m2})")

    ea, cache_a = net.forward_cached(batch.anchors)
    eb, cache_b = net.forward_cached(batch.partners)
    ep, cache_p = net.forward_cached(batch.deviated)
    eq, cache_q = net.forward_cached(batch.extreme)

    f_ij = np.einsum("ij,ij->i", ea - eb, ea - eb)
    f_dev = np.einsum("ij,ij->i", ea - ep, ea - ep)
    f_ext = np.einsum("ij,ij->i", ea - eq, ea - eq)

    t1 = f_ij - f_dev + m1
    t2 = f_dev - f_ij - m2
    t3 = f_ij - f_ext + m2
    n = float(ea.shape[0])
    loss = (np.maximum(t1, 0.0) + np.maximum(t2, 0.0) + np.maximum(t3, 0.0)).sum() / n

    a1 = (t1 > 0.0).astype(np.float64)
    a2 = (t2 > 0.0).astype(np.float64)
    a3 = (t3 > 0.0).astype(np.float64)
    c_ij = (a1 - a2 + a3) / n   # dloss/df_ij per row
    c_dev = (a2 - a1) / n       # dloss/df'
    c_ext = -a3 / n             # dloss/df''

    d_ab = ea - eb
    d_ap = ea - ep
    d_aq = ea - eq
    grad_a = 2.0 * (c_ij[:, None] * d_ab + c_dev[:, None] * d_ap + c_ext[:, None] * d_aq)
    grad_b = -2.0 * c_ij[:, None] * d_ab
    grad_p = -2.0 * c_dev[:, None] * d_ap
    grad_q = -2.0 * c_ext[:, None] * d_aq

    grads, _ = net.backward(cache_a, grad_a)
    for cache, g in ((cache_b, grad_b), (cache_p, grad_p), (cache_q, grad_q)):
        block, _ = net.backward(cache, g)
        for acc, add in zip(grads, block):
            acc += add

    return loss, grads

"""Entropy-smoothed F1 multivariate loss via an O(n²) dynamic program.

Labelings y′ are weighted by exp((1/μ)Σ y′ᵢsᵢ + (n/μ)Δ(b, c)) where sᵢ are
the scores, b counts false negatives and c false positives.  Each class is
a lattice path whose horizontal steps keep the true label and whose
diagonal steps flip it; all tables are kept in the log domain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp


class F1InstanceError(ValueError):
    """The instance has an empty class, so F1 is undefined."""


def f1_delta(b, c, n_plus):
    """F1 score 2a/(2a + b + c) with a = n₊ − b true positives."""
    a = n_plus - np.asarray(b, dtype=float)
    return 2.0 * a / (2.0 * a + b + np.asarray(c, dtype=float))


def f1_loss_table(n_plus, n_minus):
    """Label loss 1 − F1 on the (b, c) grid, shape (n₊+1, n₋+1)."""
    b = np.arange(n_plus + 1)[:, None]
    c = np.arange(n_minus + 1)[None, :]
    return 1.0 - f1_delta(b, c, n_plus)


@dataclass(frozen=True)
class F1Instance:
    scores: np.ndarray
    labels: np.ndarray
    mu: float
    loss: np.ndarray

    @classmethod
    def build(cls, scores, labels, mu, loss=None):
        scores = np.asarray(scores, dtype=float)
        labels = np.asarray(labels)
        if not mu > 0:
            raise ValueError("μ must be positive")
        if scores.shape != labels.shape:
            raise ValueError("scores and labels must align")
        if not np.all(np.isin(labels, (-1, 1))):
            raise ValueError("labels must be ±1")
        n_plus = int(np.sum(labels == 1))
        n_minus = labels.shape[0] - n_plus
        if n_plus == 0 or n_minus == 0:
            raise F1InstanceError("both classes must be present")
        if loss is None:
            loss = f1_loss_table(n_plus, n_minus)
        loss = np.asarray(loss, dtype=float)
        if loss.shape != (n_plus + 1, n_minus + 1):
            raise ValueError("loss table must have shape (n₊+1, n₋+1)")
        return cls(scores, labels.astype(int), float(mu), loss)

    @property
    def n(self):
        return self.labels.shape[0]

    @property
    def positives(self):
        return np.flatnonzero(self.labels == 1)

    @property
    def negatives(self):
        return np.flatnonzero(self.labels == -1)


@dataclass
class F1DPTables:
    """Forward tables per class and their path totals, all log-domain.

    ``forward_pos[k, v]`` is the weight of paths over the first k
    positives with v flips; ``V_plus = forward_pos[n₊]``.  ``cells`` counts
    table entries written, for cost instrumentation.
    """

    forward_pos: np.ndarray
    forward_neg: np.ndarray
    V_plus: np.ndarray
    V_minus: np.ndarray
    logZ: float = np.nan
    cells: int = 0


@dataclass(frozen=True)
class F1Marginals:
    p_flip: np.ndarray
    p_keep: np.ndarray
    cells: int


def _class_edges(instance, idx, positive):
    s = instance.scores[idx] / instance.mu
    # keeping the label contributes y·s/μ, flipping contributes −y·s/μ
    return (s, -s) if positive else (-s, s)


def _forward(keep, flip):
    m = keep.shape[0]
    table = np.full((m + 1, m + 2), -np.inf)
    table[0, 0] = 0.0
    for k in range(1, m + 1):
        prev = table[k - 1, : k + 1]
        row = np.full(k + 1, -np.inf)
        row[:k] = prev[:k] + keep[k - 1]
        row[1:] = np.logaddexp(row[1:], prev[:k] + flip[k - 1])
        table[k, : k + 1] = row
    return table[:, : m + 1]


def forward_pass(instance: F1Instance) -> F1DPTables:
    keep_p, flip_p = _class_edges(instance, instance.positives, True)
    keep_n, flip_n = _class_edges(instance, instance.negatives, False)
    fp = _forward(keep_p, flip_p)
    fn = _forward(keep_n, flip_n)
    n_p, n_n = keep_p.shape[0], keep_n.shape[0]
    cells = n_p * (n_p + 3) // 2 + n_n * (n_n + 3) // 2
    return F1DPTables(fp, fn, fp[n_p].copy(), fn[n_n].copy(), cells=cells)


def _pair_weights(tables, instance):
    return (instance.n / instance.mu) * instance.loss


def compute_Z(tables: F1DPTables, instance: F1Instance) -> float:
    """log Σ_{b,c} exp((n/μ)Δ(b,c))·V₊(b)·V₋(c)."""
    grid = _pair_weights(tables, instance) + tables.V_plus[:, None] + tables.V_minus[None, :]
    tables.logZ = float(logsumexp(grid))
    tables.cells += grid.size
    return tables.logZ


def _class_marginals(forward, keep, flip, terminal):
    """log Z_k for keeping and flipping example k of one class.

    ``terminal[v]`` is the log weight of completing a path that ends this
    class with v flips (the other class already summed out).
    """
    m = keep.shape[0]
    back = terminal.copy()
    log_keep = np.empty(m)
    log_flip = np.empty(m)
    for k in range(m, 0, -1):
        prev = forward[k - 1, :k]
        log_keep[k - 1] = logsumexp(prev + keep[k - 1] + back[:k])
        log_flip[k - 1] = logsumexp(prev + flip[k - 1] + back[1 : k + 1])
        back = np.logaddexp(back[:k] + keep[k - 1], back[1 : k + 1] + flip[k - 1])
    return log_keep, log_flip


def backward_pass(tables: F1DPTables, instance: F1Instance) -> F1Marginals:
    """Per-example probabilities of keeping/flipping the label.

    Both are normalized so that they sum to 1/n for every example.
    """
    if not np.isfinite(tables.logZ):
        compute_Z(tables, instance)
    weights = _pair_weights(tables, instance)
    eta_minus = logsumexp(weights + tables.V_minus[None, :], axis=1)
    eta_plus = logsumexp(weights + tables.V_plus[:, None], axis=0)
    keep_p, flip_p = _class_edges(instance, instance.positives, True)
    keep_n, flip_n = _class_edges(instance, instance.negatives, False)
    kp, fp = _class_marginals(tables.forward_pos, keep_p, flip_p, eta_minus)
    kn, fn = _class_marginals(tables.forward_neg, keep_n, flip_n, eta_plus)
    n = instance.n
    scale = tables.logZ + np.log(n)
    p_flip = np.empty(n)
    p_keep = np.empty(n)
    p_flip[instance.positives] = np.exp(fp - scale)
    p_keep[instance.positives] = np.exp(kp - scale)
    p_flip[instance.negatives] = np.exp(fn - scale)
    p_keep[instance.negatives] = np.exp(kn - scale)
    cells = tables.cells + keep_p.shape[0] ** 2 + keep_n.shape[0] ** 2
    return F1Marginals(p_flip, p_keep, cells)


def smoothed_value(logZ, scores, labels, mu):
    """g*_μ(Aw) = (μ/n)·logZ − (1/n)Σyᵢsᵢ − μ ln 2.

    Follows from maximizing over the 2ⁿ-point distribution of total mass
    1/n with the entropy centered at its uniform minimizer.
    """
    n = labels.shape[0]
    return mu / n * logZ - float(labels @ scores) / n - mu * np.log(2.0)


def f1_smoothed_gradient(w, X, y, mu, loss=None):
    """(∇_w g*_μ(Aw), g*_μ(Aw)) for the smoothed F1 risk; X is (n, p)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    scores = X @ np.asarray(w, dtype=float)
    inst = F1Instance.build(scores, y, mu, loss)
    tables = forward_pass(inst)
    logZ = compute_Z(tables, inst)
    marg = backward_pass(tables, inst)
    grad = -2.0 * X.T @ (marg.p_flip * inst.labels)
    return grad, smoothed_value(logZ, scores, inst.labels, mu)

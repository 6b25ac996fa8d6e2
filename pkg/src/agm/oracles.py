"""Slow, independent reference computations used to validate the solvers.

Nothing here imports the modules it is meant to check.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp


@dataclass(frozen=True)
class OracleReport:
    value: object
    method: str
    tolerance: float = 0.0
    seconds: float = 0.0
    seed: int | None = None
    extras: dict = field(default_factory=dict)


def _f1_loss(b, c, n_plus):
    tp = n_plus - b
    return 1.0 - 2.0 * tp / (2.0 * tp + b + c)


def brute_force_f1(w, X, y, mu, loss=None):
    """Enumerate all 2ⁿ labelings of the smoothed F1 objective.

    Returns (logZ, p_flip, gradient, value); ``loss(b, c, n_plus)``
    defaults to 1 − F1.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    n = y.shape[0]
    if n > 20:
        raise ValueError("enumeration limited to n ≤ 20")
    loss = loss or _f1_loss
    s = X @ np.asarray(w, dtype=float)
    n_plus = int(np.sum(y == 1))
    bits = (np.arange(2**n)[:, None] >> np.arange(n)[None, :]) & 1
    labels = np.where(bits == 1, 1, -1)
    b = np.sum((labels == -1) & (y == 1), axis=1)
    c = np.sum((labels == 1) & (y == -1), axis=1)
    delta = loss(b, c, n_plus)
    expo = labels @ s / mu + n / mu * delta
    logZ = float(logsumexp(expo))
    prob = np.exp(expo - logZ) / n
    flipped = labels != y[None, :]
    p_flip = (prob[:, None] * flipped).sum(axis=0)
    gradient = -2.0 * X.T @ (p_flip * y)
    # value at the Gibbs maximizer, from the definition of the smoothed conjugate
    margin_term = float(prob @ ((labels - y[None, :]) @ s))
    risk_term = n * float(prob @ delta)
    entropy_min = (1.0 / n) * math.log(1.0 / (n * 2.0**n))
    pos = prob > 0
    d2 = float(np.sum(prob[pos] * np.log(prob[pos]))) - entropy_min
    value = margin_term + risk_term - mu * d2
    return logZ, p_flip, gradient, value


def kkt_enumerate_qp(d, m, l, u, sigma, z, tol=1e-9):
    """Solve the box∩hyperplane QP by trying every {lower, free, upper} pattern."""
    d2 = np.asarray(d, dtype=float) ** 2 * np.ones(len(m))
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    l = np.broadcast_to(np.asarray(l, dtype=float), (n,))
    u = np.broadcast_to(np.asarray(u, dtype=float), (n,))
    sig = np.broadcast_to(np.asarray(sigma, dtype=float), (n,))
    pats = np.array(list(itertools.product((0, 1, 2), repeat=n)))
    at_l, free, at_u = pats == 0, pats == 1, pats == 2
    fixed_val = np.where(at_l, l, np.where(at_u, u, 0.0))
    slope = (free * (sig**2 / d2)).sum(axis=1)
    rhs = z - (fixed_val * sig).sum(axis=1) - (free * sig * m).sum(axis=1)
    scale = tol * (1.0 + np.abs(m).max() + np.abs(l).max() + np.abs(u).max())

    # multiplier bounds implied by the sign conditions at the bounds
    g_l = d2 * (l - m)
    g_u = d2 * (u - m)
    lo = np.full(len(pats), -np.inf)
    hi = np.full(len(pats), np.inf)
    decoupled_ok = np.ones(len(pats), dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(n):
            if sig[i] == 0:
                # no multiplier term: a bound is optimal only if the gradient points outward
                decoupled_ok &= ~(at_l[:, i] & (g_l[i] < -scale)) & ~(at_u[:, i] & (g_u[i] > scale))
            elif sig[i] > 0:
                hi = np.where(at_l[:, i], np.minimum(hi, g_l[i] / sig[i]), hi)
                lo = np.where(at_u[:, i], np.maximum(lo, g_u[i] / sig[i]), lo)
            else:
                lo = np.where(at_l[:, i], np.maximum(lo, g_l[i] / sig[i]), lo)
                hi = np.where(at_u[:, i], np.minimum(hi, g_u[i] / sig[i]), hi)
        lam = np.where(slope > 0, rhs / np.where(slope > 0, slope, 1.0), np.clip(0.0, lo, hi))
    alpha = np.where(free, m + lam[:, None] * sig / d2, fixed_val)
    ok = decoupled_ok & (lo <= hi + scale) & (lam >= lo - scale) & (lam <= hi + scale)
    ok &= np.all((alpha >= l - scale) & (alpha <= u + scale), axis=1)
    ok &= np.abs(alpha @ sig - z) <= scale * (1 + abs(z)) * n
    idx = np.flatnonzero(ok)
    if idx.size == 0:
        raise ValueError("no KKT pattern found (infeasible instance?)")
    obj = 0.5 * ((alpha[idx] - m) ** 2 * d2).sum(axis=1)
    return alpha[idx[np.argmin(obj)]]


def finite_difference_grad(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def subgradient_reference(value, subgradient, x0, iters, step=1.0, project=None):
    """Projected subgradient descent with steps step/√k; returns the best point.

    The report's value is the smallest objective seen.
    """
    start = time.perf_counter()
    x = np.array(x0, dtype=float)
    best_x, best = x.copy(), value(x)
    for k in range(1, iters + 1):
        g = subgradient(x)
        nrm = np.linalg.norm(g)
        if nrm == 0:
            break
        x = x - (step / math.sqrt(k)) * g / nrm
        if project is not None:
            x = project(x)
        v = value(x)
        if v < best:
            best, best_x = v, x.copy()
    return OracleReport(best, "projected-subgradient", seconds=time.perf_counter() - start, extras={"x": best_x})


def hinge_objective_with_bias(w, X, y, lam):
    """λ/2‖w‖² + min_b (1/n)Σ[1 − yᵢ(xᵢᵀw + b)]₊ by scanning every kink in b."""
    w = np.asarray(w, dtype=float)
    f = X @ w
    kinks = y - f  # the loss of example i has its kink at b = yᵢ − fᵢ
    losses = np.maximum(0.0, 1.0 - y[None, :] * (f[None, :] + kinks[:, None])).mean(axis=1)
    j = int(np.argmin(losses))
    return 0.5 * lam * float(w @ w) + float(losses[j]), float(kinks[j])


def svm_subgradient_reference(X, y, lam, iters=10**6, step=None, seed=0):
    """Reference optimum of the biased hinge SVM via subgradient steps on (w, b)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    xb = np.zeros(p + 1)
    best = np.inf
    best_x = xb.copy()
    step = step if step is not None else 1.0
    Xy = X * y[:, None]
    ones_b = y
    start = time.perf_counter()
    for k in range(1, iters + 1):
        w, b = xb[:p], xb[p]
        margin = Xy @ w + ones_b * b
        active = margin < 1.0
        val = 0.5 * lam * float(w @ w) + float(np.sum(1.0 - margin[active])) / n
        if val < best:
            best, best_x = val, xb.copy()
        gw = lam * w - Xy[active].sum(axis=0) / n
        gb = -ones_b[active].sum() / n
        xb[:p] -= (step / math.sqrt(k)) * gw
        xb[p] -= (step / math.sqrt(k)) * gb
    return OracleReport(best, "subgradient-(w,b)", seconds=time.perf_counter() - start, seed=seed,
                        extras={"w": best_x[:p], "b": best_x[p]})


def elastic_ball_oracle(g, gamma, r, iters=200):
    """Projection onto {γ‖w‖₁ + ½‖w‖² ≤ r} by bisection on the multiplier."""
    g = np.asarray(g, dtype=float)

    def point(lam):
        return np.sign(g) * np.maximum(np.abs(g) - lam * gamma, 0.0) / (1.0 + lam)

    def level(w):
        return gamma * np.abs(w).sum() + 0.5 * float(w @ w)

    if level(g) <= r:
        return g.copy()
    lo, hi = 0.0, 1.0
    while level(point(hi)) > r:
        hi *= 2.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if level(point(mid)) > r:
            lo = mid
        else:
            hi = mid
    return point(hi)


def entropy_capped_oracle(u, center, nu, total=1.0):
    """Exact capped-simplex KL prox by trying every number of capped coordinates."""
    base = np.log(np.asarray(center, dtype=float)) - np.asarray(u, dtype=float)
    order = np.argsort(-base)
    n = base.shape[0]
    for j in range(n + 1):
        rest = total - j * nu
        if rest < -1e-15:
            break
        w = np.full(n, nu)
        tail = order[j:]
        if tail.size == 0:
            if abs(rest) < 1e-12:
                return w
            continue
        w[tail] = np.exp(base[tail] - logsumexp(base[tail])) * rest
        if np.all(w[tail] <= nu * (1 + 1e-12)):
            return w
    raise ValueError("infeasible cap")

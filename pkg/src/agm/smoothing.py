"""Nesterov smoothing of nonsmooth risks and related constants."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, softmax


def smoothed_hinge(w, mu):
    """Hinge [1 − w]₊ smoothed with ½α² on [−1, 0]; returns (value, derivative).

    Works elementwise on arrays.
    """
    if not mu > 0:
        raise ValueError("μ must be positive")
    w = np.asarray(w, dtype=float)
    gap = 1.0 - w
    value = np.where(gap <= 0, 0.0, np.where(gap <= mu, gap**2 / (2 * mu), gap - mu / 2))
    deriv = np.where(gap <= 0, 0.0, np.where(gap <= mu, -gap / mu, -1.0))
    if value.ndim == 0:
        return float(value), float(deriv)
    return value, deriv


def soft_max(s, mu):
    """μ·ln Σ exp(sᵢ/μ) and its gradient (the Gibbs weights)."""
    if not mu > 0:
        raise ValueError("μ must be positive")
    s = np.asarray(s, dtype=float)
    scaled = s / mu
    return float(mu * logsumexp(scaled)), softmax(scaled)


def choose_mu(epsilon, D):
    """μ = ε/D, the largest smoothing keeping the approximation error below ε."""
    if not epsilon > 0 or not D > 0:
        raise ValueError("ε and D must be positive")
    return epsilon / D


def lipschitz_bound(A_norm, mu, sigma2=1.0):
    """Gradient Lipschitz constant ‖A‖²/(μσ₂) of the smoothed conjugate."""
    if not mu > 0 or not sigma2 > 0:
        raise ValueError("μ and σ₂ must be positive")
    return A_norm**2 / (mu * sigma2)


@dataclass(frozen=True)
class SmoothingPlan:
    epsilon: float
    D: float
    mu: float
    sigma2: float
    A_norm: float
    L_g_mu: float

    @classmethod
    def make(cls, epsilon, D, A_norm, sigma2=1.0):
        mu = choose_mu(epsilon, D)
        return cls(epsilon, D, mu, sigma2, A_norm, lipschitz_bound(A_norm, mu, sigma2))


def _linear_branch(log_arg, rate_arg):
    if rate_arg <= 0:
        return math.inf
    return 1.0 + 0.5 * max(log_arg, 0.0) / math.log1p(math.sqrt(rate_arg))


def iteration_bounds(scheme, *, epsilon, lam, A_norm_sq=None, D=None, sigma1=1.0, sigma2=1.0,
                     distance=None, M=None, L_g=0.0, R=None):
    """Iterations guaranteeing a 2ε-accurate primal solution.

    ``scheme="primal"``: smoothing in the primal, ``distance`` = Δ(w*, u₀).
    ``scheme="dual"``: smoothing in the dual, ``M`` = max Δ(α, u₀) over Q2.
    ``scheme="unsmoothed"``: the SVM special case 2R/√(λε) − 1.
    """
    if not epsilon > 0:
        raise ValueError("ε must be positive")
    if scheme == "primal":
        c = 4.0 * D * A_norm_sq / (sigma1 * sigma2)
        sublinear = math.sqrt(c * distance) / epsilon
        linear = _linear_branch(math.log(c * distance / epsilon**2), sigma1 * sigma2 * lam * epsilon / c)
        return min(sublinear, linear)
    if scheme == "dual":
        total = A_norm_sq + lam * L_g
        c = 4.0 * M * total / (lam * sigma2)
        sublinear = math.sqrt(c / epsilon) - 1.0
        linear = _linear_branch(math.log(c / epsilon), lam * epsilon * sigma2 / (4.0 * D * total))
        return min(sublinear, linear)
    if scheme == "unsmoothed":
        return 2.0 * R / math.sqrt(lam * epsilon) - 1.0
    raise ValueError(f"unknown scheme {scheme!r}")


@dataclass(frozen=True)
class ProxWeights:
    b_sq: np.ndarray
    v_star: np.ndarray
    lmax: float
    iterations: int
    rayleigh: tuple = ()


def power_iteration(M, iters=30, tol=1e-12, start=None, residual_tol=None):
    """Dominant eigenpair of a symmetric PSD matrix.

    Stops after ``iters`` steps or once the Rayleigh quotient changes by
    less than ``tol`` relative.  The quotient converges twice as fast as
    the vector, so callers that need an accurate eigenvector pass
    ``residual_tol`` to stop on ‖Mv − ρv‖ ≤ residual_tol·‖Mv‖ instead.
    Returns (value, vector, steps, quotients).
    """
    n = M.shape[0]
    v = np.ones(n) if start is None else np.asarray(start, dtype=float)
    v = v / np.linalg.norm(v)
    rq = float(v @ M @ v)
    history = [rq]
    steps = 0
    for steps in range(1, iters + 1):
        w = M @ v
        nrm = np.linalg.norm(w)
        if nrm == 0:
            break
        v = w / nrm
        Mv = M @ v
        new = float(v @ Mv)
        history.append(new)
        if residual_tol is None:
            done = abs(new - rq) <= tol * max(abs(new), 1e-300)
        else:
            done = np.linalg.norm(Mv - new * v) <= residual_tol * np.linalg.norm(Mv)
        rq = new
        if done:
            break
    return rq, v, steps, tuple(history)


def optimize_prox_weights(rows, iters=30, tol=1e-12, residual_tol=None):
    """Data-dependent weights bᵢ² = |aᵢᵀv*| for d(u) = ½Σbᵢ²uᵢ².

    v* is the dominant eigenvector of Σaᵢaᵢᵀ, the maximizer of the
    quadratic relaxation of max_{‖v‖=1} Σ|aᵢᵀv|.  Rows orthogonal to v*
    receive the floor 1e-12·max bⱼ².
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if not np.any(rows):
        raise ValueError("all rows are zero")
    gram = rows.T @ rows
    lmax, v, steps, history = power_iteration(gram, iters, tol, residual_tol=residual_tol)
    b_sq = np.abs(rows @ v)
    b_sq = np.maximum(b_sq, 1e-12 * b_sq.max())
    return ProxWeights(b_sq, v, lmax, steps, history)


def prox_weight_proxy(rows, b_sq):
    """(Σbᵢ²)·λmax(Σ bᵢ⁻² aᵢaᵢᵀ), the quantity the weights try to shrink."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    b_sq = np.asarray(b_sq, dtype=float)
    weighted = (rows / b_sq[:, None]).T @ rows
    return float(b_sq.sum() * np.linalg.eigvalsh(weighted)[-1])

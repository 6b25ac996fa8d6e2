"""Composite terms Ψ with their prox oracles.

Every regularizer exposes ``value(x)`` (``inf`` outside its domain),
``prox(v, center, t)`` returning argmin ⟨v,x⟩ + Δ(x, center) + t·Ψ(x),
``lambda2`` (strong convexity wrt the geometry's d) and ``geometry``.
"""

from __future__ import annotations

import numpy as np

from .bregman import ENTROPY, EUCLIDEAN
from .subproblems import BoxHyperplaneQP, capped_simplex_entropy_prox, elastic_net_prox, solve_box_hyperplane

_FEAS_TOL = 1e-9


class ZeroRegularizer:
    """Ψ = 0: the prox is a plain mirror step."""

    lambda2 = 0.0
    affine = True

    def __init__(self, geometry=EUCLIDEAN):
        self.geometry = geometry

    def value(self, x):
        return 0.0

    def prox(self, v, center, t):
        g = self.geometry
        return g.grad_inv(g.grad(center) - v)


class SquaredNormBox:
    """Ψ(x) = (λ/2)‖x‖² plus the indicator of a box (bounds may be infinite)."""

    affine = False
    geometry = EUCLIDEAN

    def __init__(self, lam=0.0, lower=-np.inf, upper=np.inf):
        if lam < 0:
            raise ValueError("λ must be nonnegative")
        self.lam = float(lam)
        self.lower = lower
        self.upper = upper

    @property
    def lambda2(self):
        return self.lam

    def contains(self, x, tol=_FEAS_TOL):
        return bool(np.all(x >= np.asarray(self.lower) - tol) and np.all(x <= np.asarray(self.upper) + tol))

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if not self.contains(x):
            return np.inf
        return 0.5 * self.lam * float(x @ x)

    def prox(self, v, center, t):
        return np.clip((np.asarray(center) - v) / (1.0 + t * self.lam), self.lower, self.upper)


class ElasticNet:
    """Ψ(w) = λ(γ‖w‖₁ + ½‖w‖²), λ-strongly convex in the Euclidean geometry."""

    affine = False
    geometry = EUCLIDEAN

    def __init__(self, lam, gamma):
        if lam <= 0 or gamma < 0:
            raise ValueError("elastic net needs λ > 0 and γ ≥ 0")
        self.lam = float(lam)
        self.gamma = float(gamma)

    @property
    def lambda2(self):
        return self.lam

    def value(self, w):
        w = np.asarray(w, dtype=float)
        return self.lam * (self.gamma * np.abs(w).sum() + 0.5 * float(w @ w))

    def prox(self, v, center, t):
        g = np.asarray(center) - v
        if t == 0:
            return g
        return elastic_net_prox(g, self.lam, self.gamma, 1.0 / t)


class BoxHyperplaneQuadratic:
    """Ψ(α) = (μ/2)‖α‖² plus the indicator of {l ≤ α ≤ u, Σσα = z}.

    The prox is a single box∩hyperplane projection; the multiplier of the
    most recent call is kept in ``last_multiplier``.
    """

    affine = False
    geometry = EUCLIDEAN

    def __init__(self, mu, lower, upper, sigma, z=0.0):
        if mu < 0:
            raise ValueError("μ must be nonnegative")
        self.mu = float(mu)
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        self.sigma = np.asarray(sigma, dtype=float)
        self.z = float(z)
        self.last_multiplier = 0.0

    @property
    def lambda2(self):
        return self.mu

    def contains(self, alpha, tol=_FEAS_TOL):
        alpha = np.asarray(alpha, dtype=float)
        scale = tol * (1.0 + np.abs(self.upper).max())
        in_box = np.all(alpha >= self.lower - scale) and np.all(alpha <= self.upper + scale)
        plane = abs(float(self.sigma @ alpha) - self.z) <= tol * (1.0 + abs(self.z))
        return bool(in_box and plane)

    def value(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        if not self.contains(alpha):
            return np.inf
        return 0.5 * self.mu * float(alpha @ alpha)

    def project(self, target, curvature=1.0):
        qp = BoxHyperplaneQP.build(curvature, target, self.lower, self.upper, self.sigma, self.z)
        alpha, mult = solve_box_hyperplane(qp)
        self.last_multiplier = mult
        return alpha

    def prox(self, v, center, t):
        scale = 1.0 + t * self.mu
        return self.project((np.asarray(center) - v) / scale)


class EntropyCappedSimplex:
    """Ψ(w) = λ·KL(w, w₀) plus the indicator of {w ∈ [0,ν]ⁿ, Σw = 1}.

    Lives in the entropy geometry, where it is λ-strongly convex wrt d.
    """

    affine = False
    geometry = ENTROPY

    def __init__(self, lam, nu, anchor):
        self.lam = float(lam)
        self.nu = float(nu)
        self.anchor = np.asarray(anchor, dtype=float)
        if self.lam < 0:
            raise ValueError("λ must be nonnegative")
        if self.nu * self.anchor.shape[0] < 1 - 1e-12:
            raise ValueError("capped simplex is empty: need ν·n ≥ 1")

    @property
    def lambda2(self):
        return self.lam

    def contains(self, w, tol=_FEAS_TOL):
        w = np.asarray(w, dtype=float)
        return bool(np.all(w >= -tol) and np.all(w <= self.nu + tol) and abs(w.sum() - 1.0) <= tol)

    def value(self, w):
        if not self.contains(w):
            return np.inf
        return self.lam * ENTROPY.divergence(np.maximum(w, 0.0), self.anchor) if self.lam else 0.0

    def prox(self, v, center, t):
        geom = ENTROPY
        weight = 1.0 + t * self.lam
        # Δ(·,c) + tλΔ(·,w₀) = weight·Δ(·,c′) + const with ∇d(c′) the weighted gradient mean
        merged = (geom.grad(center) + t * self.lam * geom.grad(self.anchor)) / weight
        c_new = geom.grad_inv(merged)
        return capped_simplex_entropy_prox(np.asarray(v) / weight, c_new, self.nu, 1.0)

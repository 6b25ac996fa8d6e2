"""Bregman geometries and the compressed estimate-function model."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

_LOG_FLOOR = 1e-300


class DomainError(ValueError):
    """A point lies outside the domain where the prox-function is differentiable."""


class EuclideanGeometry:
    """d(x) = ½‖x‖², strongly convex with modulus 1 wrt the L2 norm."""

    name = "euclidean"
    sigma = 1.0
    norm_id = "l2"

    def d(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * float(x @ x)

    def grad(self, x):
        return np.array(x, dtype=float)

    def grad_inv(self, y):
        """Inverse of the mirror map: the point whose gradient is y."""
        return np.array(y, dtype=float)

    def divergence(self, x, y):
        diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        return 0.5 * float(diff @ diff)

    def norm(self, x):
        return float(np.linalg.norm(x))

    def dual_norm(self, g):
        return float(np.linalg.norm(g))

    def __repr__(self):
        return "EuclideanGeometry()"


class EntropyGeometry:
    """Negative entropy d(x) = Σ xᵢ ln xᵢ on the nonnegative orthant.

    The modulus is 1 wrt the L1 norm on the probability simplex.  Zero
    coordinates of the second argument are clamped to 1e-300 before logs.
    """

    name = "entropy"
    sigma = 1.0
    norm_id = "l1"

    @staticmethod
    def _check(x, label):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0) or not np.all(np.isfinite(x)):
            raise DomainError(f"{label} must be finite and nonnegative for the entropy geometry")
        return x

    def d(self, x):
        x = self._check(x, "x")
        pos = x > 0
        return float(np.sum(x[pos] * np.log(x[pos])))

    def grad(self, x):
        x = self._check(x, "x")
        return np.log(np.maximum(x, _LOG_FLOOR)) + 1.0

    def grad_inv(self, y):
        return np.exp(np.asarray(y, dtype=float) - 1.0)

    def divergence(self, x, y):
        x = self._check(x, "x")
        y = self._check(y, "y")
        ys = np.maximum(y, _LOG_FLOOR)
        pos = x > 0
        total = np.sum(x[pos] * (np.log(x[pos]) - np.log(ys[pos]))) - x.sum() + y.sum()
        return float(max(total, 0.0))

    def norm(self, x):
        return float(np.abs(x).sum())

    def dual_norm(self, g):
        return float(np.abs(g).max()) if np.size(g) else 0.0

    def __repr__(self):
        return "EntropyGeometry()"


BregmanGeometry = EuclideanGeometry | EntropyGeometry

EUCLIDEAN = EuclideanGeometry()
ENTROPY = EntropyGeometry()


def divergence(geom, x, y) -> float:
    """Δ(x, y) = d(x) − d(y) − ⟨∇d(y), x − y⟩."""
    return geom.divergence(x, y)


def mirror_average(geom, weights, points):
    """Point c with ∇d(c) = Σ wᵢ∇d(pᵢ) / Σ wᵢ.

    Σ wᵢ Δ(x, pᵢ) equals (Σ wᵢ) Δ(x, c) plus a constant, so a weighted
    sum of divergences collapses onto a single center.
    """
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    if total <= 0:
        raise ValueError("mirror_average needs positive total weight")
    grads = sum(w * geom.grad(p) for w, p in zip(weights, points) if w > 0)
    return geom.grad_inv(grads / total)


@dataclass(frozen=True)
class EstimateModel:
    """q(x) = weight·Δ(x, center) + ⟨linear, x⟩ + offset + psi_weight·Ψ(x).

    When ``linear`` is zero and ``psi_weight`` is zero the model is in the
    compressed form a·Δ(x, x*) + b, with x* its minimizer and b = q(x*).
    The Bregman part always stays a single term: new terms are merged into
    ``center`` through the mirror map, which keeps memory at O(p).
    """

    geometry: object
    weight: float
    center: np.ndarray
    offset: float = 0.0
    linear: Optional[np.ndarray] = None
    psi_weight: float = 0.0

    @classmethod
    def anchored(cls, geometry, point, weight=1.0):
        point = np.array(point, dtype=float)
        return cls(geometry, float(weight), point, 0.0, np.zeros_like(point), 0.0)

    @property
    def compressed(self) -> bool:
        return self.psi_weight == 0.0 and not np.any(self.linear)

    def value(self, x, psi_value: Optional[Callable] = None) -> float:
        x = np.asarray(x, dtype=float)
        out = self.offset
        if self.weight:
            out += self.weight * self.geometry.divergence(x, self.center)
        if self.linear is not None:
            out += float(self.linear @ x)
        if self.psi_weight:
            if psi_value is None:
                raise ValueError("model carries a Ψ term; pass psi_value")
            out += self.psi_weight * psi_value(x)
        return out

    def scaled(self, factor: float) -> "EstimateModel":
        lin = None if self.linear is None else factor * self.linear
        return replace(
            self,
            weight=factor * self.weight,
            offset=factor * self.offset,
            linear=lin,
            psi_weight=factor * self.psi_weight,
        )

    def add_bregman(self, alpha: float, point) -> "EstimateModel":
        """Merge α·Δ(·, point) into the single Bregman term."""
        if alpha <= 0:
            return self
        geom = self.geometry
        point = np.asarray(point, dtype=float)
        if self.weight <= 0:
            return replace(self, weight=float(alpha), center=point.copy())
        new_weight = self.weight + alpha
        center = geom.grad_inv((self.weight * geom.grad(self.center) + alpha * geom.grad(point)) / new_weight)
        # Σ wⱼΔ(x, yⱼ) = WΔ(x, c) + Σ wⱼΔ(c, yⱼ)
        shift = self.weight * geom.divergence(center, self.center) + alpha * geom.divergence(center, point)
        return replace(self, weight=new_weight, center=center, offset=self.offset + shift)

    def add_linear(self, u, constant: float = 0.0) -> "EstimateModel":
        u = np.asarray(u, dtype=float)
        lin = u.copy() if self.linear is None else self.linear + u
        return replace(self, linear=lin, offset=self.offset + constant)

    def add_psi(self, weight: float) -> "EstimateModel":
        return replace(self, psi_weight=self.psi_weight + weight)

    def compress(self) -> "EstimateModel":
        """Absorb the linear term into the center; requires no Ψ term."""
        if self.psi_weight != 0.0:
            raise ValueError("cannot compress a model that carries a non-affine Ψ term")
        if self.linear is None or not np.any(self.linear):
            return self
        if self.weight <= 0:
            return self
        geom = self.geometry
        star = geom.grad_inv(geom.grad(self.center) - self.linear / self.weight)
        b = self.value(star)
        return EstimateModel(geom, self.weight, star, b, np.zeros_like(star), 0.0)

    def minimizer(self, prox=None):
        """argmin of the model; ``prox(v, center, t)`` handles a Ψ term."""
        geom = self.geometry
        lin = self.linear if self.linear is not None else np.zeros_like(self.center)
        if self.psi_weight == 0.0:
            if not np.any(lin):
                return self.center.copy()
            return geom.grad_inv(geom.grad(self.center) - lin / self.weight)
        if prox is None:
            raise ValueError("model carries a Ψ term; a prox oracle is required")
        return prox(lin / self.weight, self.center, self.psi_weight / self.weight)


def aggregate_term(model: EstimateModel, u, alpha: float, point) -> EstimateModel:
    """Return the model of x ↦ model(x) + ⟨u, x⟩ + α·Δ(x, point).

    The result is compressed to (a+α)·Δ(x, x*) + b when the model has no
    Ψ term.  Otherwise the linear part stays pending and
    :meth:`EstimateModel.minimizer` needs a prox oracle.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    out = model.add_bregman(alpha, point).add_linear(u)
    if out.psi_weight == 0.0 and out.weight > 0:
        out = out.compress()
    return out

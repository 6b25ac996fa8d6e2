"""Regularized risk minimization problems wired to the solvers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .bregman import ENTROPY, EUCLIDEAN
from .fscore import f1_smoothed_gradient
from .regularizers import BoxHyperplaneQuadratic, ElasticNet, EntropyCappedSimplex, SquaredNormBox
from .smoothing import choose_mu, power_iteration, soft_max
from .solvers import CompositeProblem, DualGapTracker


class BuildError(ValueError):
    """The data cannot support the requested problem."""


@dataclass(frozen=True)
class Dataset:
    """Examples as rows of ``X`` (n × p) with targets ``y``."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise BuildError("X must be (n, p) with one target per row")

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def radius(self):
        return float(np.linalg.norm(self.X, axis=1).max())


@dataclass(frozen=True)
class LinearOperatorA:
    """A as an explicit matrix with its adjoint and a norm bound."""

    matrix: np.ndarray
    norm_bound: float = math.inf

    def apply(self, w):
        return self.matrix @ w

    def apply_adjoint(self, alpha):
        return self.matrix.T @ alpha


def estimate_operator_norm(A: LinearOperatorA, iters=1000, tol=1e-14):
    """√λmax(AᵀA) by power iteration."""
    M = A.matrix
    small = M.T @ M if M.shape[1] <= M.shape[0] else M @ M.T
    lmax, _, _, _ = power_iteration(small, iters, tol)
    return math.sqrt(max(lmax, 0.0))


@dataclass
class BuiltProblem:
    """A composite problem plus what is needed to interpret its solution."""

    problem: CompositeProblem
    x0: np.ndarray
    tracker: Optional[DualGapTracker] = None
    mu: float = 0.0
    L_theory: Optional[float] = None
    primal_point: Callable = None
    bias: Callable = None
    objective: Callable = None
    info: dict = field(default_factory=dict)


# ---------------------------------------------------------------- SVM with bias


def _check_two_classes(y):
    if not np.all(np.isin(y, (-1, 1))):
        raise BuildError("labels must be ±1")
    if np.all(y == 1) or np.all(y == -1):
        raise BuildError("both classes are required")


def svm_operator(data: Dataset):
    """A = −YXᵀ in row layout (n × p), with ‖A‖² = min(power estimate, nR²)."""
    y = np.asarray(data.y, dtype=float)
    mat = -(y[:, None] * data.X)
    op = LinearOperatorA(mat)
    est = estimate_operator_norm(op)
    bound = math.sqrt(data.n) * data.radius
    # the tiny inflation guards against power iteration's underestimate
    return LinearOperatorA(mat, min(est * (1 + 1e-9), bound))


def hinge_risk_min_bias(scores, y):
    """min_b (1/n)Σ[1 − yᵢ(sᵢ + b)]₊ and its minimizer, exact in O(n log n)."""
    y = np.asarray(y, dtype=float)
    r = 1.0 - y * scores
    pos_t = np.sort(r[y > 0])
    neg_t = np.sort(-r[y < 0])
    pos_cum = np.concatenate([[0.0], np.cumsum(pos_t[::-1])])
    neg_cum = np.concatenate([[0.0], np.cumsum(neg_t)])
    candidates = np.concatenate([pos_t, neg_t])

    # positives: Σ_{rᵢ > b}(rᵢ − b); negatives with threshold tᵢ = −rᵢ: Σ_{tᵢ < b}(b − tᵢ)
    k_pos = pos_t.shape[0] - np.searchsorted(pos_t, candidates, side="right")
    loss_pos = pos_cum[k_pos] - candidates * k_pos
    k_neg = np.searchsorted(neg_t, candidates, side="left")
    loss_neg = candidates * k_neg - neg_cum[k_neg]
    total = (loss_pos + loss_neg) / y.shape[0]
    j = int(np.argmin(total))
    return float(total[j]), float(candidates[j])


def svm_objective(w, data: Dataset, lam):
    """λ/2‖w‖² + min_b (1/n)Σ[1 − yᵢ(xᵢᵀw + b)]₊."""
    risk, _ = hinge_risk_min_bias(data.X @ w, data.y)
    return 0.5 * lam * float(w @ w) + risk


def _svm_q2(data, mu):
    n = data.n
    return BoxHyperplaneQuadratic(mu, np.zeros(n), np.full(n, 1.0 / n), np.asarray(data.y, dtype=float), 0.0)


class _SmoothedHingeConjugate:
    """g*_μ(Aw) = max_{α∈Q2} ⟨1 − y⊙Xw, α⟩ − (μ/2)‖α‖² for the biased SVM."""

    def __init__(self, data: Dataset, mu: float):
        self.data = data
        self.mu = mu
        self.q2 = _svm_q2(data, 0.0)
        self.y = np.asarray(data.y, dtype=float)

    def maximizer(self, w):
        margin = 1.0 - self.y * (self.data.X @ w)
        alpha = self.q2.project(margin / self.mu, curvature=math.sqrt(self.mu))
        return alpha, margin, -self.q2.last_multiplier

    def value_and_grad(self, w):
        alpha, margin, _ = self.maximizer(w)
        value = float(margin @ alpha) - 0.5 * self.mu * float(alpha @ alpha)
        grad = -self.data.X.T @ (self.y * alpha)
        return value, grad


def svm_dual_objective(alpha, data: Dataset, lam, mu=0.0):
    """D_μ(α) = Σα − (μ/2)‖α‖² − (1/2λ)‖XᵀYα‖²."""
    v = data.X.T @ (np.asarray(data.y, dtype=float) * alpha)
    return float(alpha.sum()) - 0.5 * mu * float(alpha @ alpha) - 0.5 / lam * float(v @ v)


def build_svm_primal_smoothed(data: Dataset, lam, epsilon):
    """Minimize J_μ(w) = λ/2‖w‖² + g*_μ(Aw) with μ = nε."""
    _check_two_classes(data.y)
    mu = choose_mu(epsilon, 1.0 / data.n)
    conj = _SmoothedHingeConjugate(data, mu)
    op = svm_operator(data)
    L = op.norm_bound**2 / mu
    problem = CompositeProblem(conj.value_and_grad, SquaredNormBox(lam), geometry=EUCLIDEAN, L_estimate=L)
    q2 = _svm_q2(data, 0.0)
    tracker = DualGapTracker(
        dual_map=lambda w: conj.maximizer(w)[0],
        dual_value=lambda a: svm_dual_objective(a, data, lam, mu),
        diameter=math.inf,
        contains=q2.contains,
    )

    def smoothed(w):
        return 0.5 * lam * float(w @ w) + conj.value_and_grad(w)[0]

    return BuiltProblem(
        problem,
        np.zeros(data.p),
        tracker,
        mu=mu,
        L_theory=L,
        primal_point=lambda res: res.x,
        bias=lambda w: conj.maximizer(w)[2],
        objective=lambda w: svm_objective(w, data, lam),
        info={"scheme": "primal-smooth", "A_norm_sq": op.norm_bound**2, "D": 1.0 / data.n, "smoothed": smoothed},
    )


def _dual_build(data: Dataset, lam, mu, epsilon=None):
    _check_two_classes(data.y)
    y = np.asarray(data.y, dtype=float)
    X = data.X
    op = svm_operator(data)
    L = op.norm_bound**2 / lam

    def value_and_grad(alpha):
        v = X.T @ (y * alpha)
        return -float(alpha.sum()) + 0.5 / lam * float(v @ v), -1.0 + y * (X @ v) / lam

    psi = _svm_q2(data, mu)
    problem = CompositeProblem(value_and_grad, psi, geometry=EUCLIDEAN, L_estimate=L)
    x0 = np.zeros(data.n)
    diameter = 0.5 * float(np.sum(np.maximum(x0**2, (1.0 / data.n - x0) ** 2)))

    def primal_map(alpha):
        return X.T @ (y * alpha) / lam

    if mu > 0:
        conj = _SmoothedHingeConjugate(data, mu)

        def dual_value(w):
            return -(0.5 * lam * float(w @ w) + conj.value_and_grad(w)[0])
    else:

        def dual_value(w):
            return -svm_objective(w, data, lam)

    tracker = DualGapTracker(dual_map=primal_map, dual_value=dual_value, diameter=diameter)

    def bias(w):
        return hinge_risk_min_bias(X @ w, y)[1]

    return BuiltProblem(
        problem,
        x0,
        tracker,
        mu=mu,
        L_theory=L,
        primal_point=lambda res: res.dual.alpha if res.dual is not None else primal_map(res.x),
        bias=bias,
        objective=lambda w: svm_objective(w, data, lam),
        info={
            "scheme": "dual-smooth" if mu > 0 else "dual-raw",
            "A_norm_sq": op.norm_bound**2,
            "D": 1.0 / data.n,
            "M": diameter,
            "dual_objective": lambda a: svm_dual_objective(a, data, lam, mu),
            "primal_map": primal_map,
        },
    )


def build_svm_dual_smoothed(data: Dataset, lam, epsilon):
    """Minimize −D_μ(α) over Q2 with Ψ = (μ/2)‖α‖² + indicator(Q2), μ = nε."""
    mu = choose_mu(epsilon, 1.0 / data.n)
    return _dual_build(data, lam, mu, epsilon)


def build_svm_dual_unsmoothed(data: Dataset, lam):
    """Minimize −D(α) over Q2 directly; Ψ is the indicator of Q2."""
    return _dual_build(data, lam, 0.0)


# ---------------------------------------------------------------- LPBoost


def build_lpboost(U, lam, nu, epsilon):
    """min over the capped simplex of soft_max(Uw, μ) + λ·KL(w, uniform)."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    t, n = U.shape
    if nu * n < 1 - 1e-12:
        raise BuildError("capped simplex is empty: need ν·n ≥ 1")
    mu = choose_mu(epsilon, math.log(t)) if t > 1 else epsilon
    w0 = np.full(n, 1.0 / n)

    def value_and_grad(w):
        v, weights = soft_max(U @ w, mu)
        return v, U.T @ weights

    psi = EntropyCappedSimplex(lam, nu, w0)
    L = float(np.abs(U).max()) ** 2 / mu
    problem = CompositeProblem(value_and_grad, psi, geometry=ENTROPY, L_estimate=L)
    return BuiltProblem(
        problem,
        w0.copy(),
        mu=mu,
        L_theory=L,
        primal_point=lambda res: res.x,
        objective=lambda w: float(np.max(U @ w)) + psi.value(w),
        info={"smoothed": problem.objective},
    )


# ---------------------------------------------------------------- elastic net


def build_elastic_net_ls(data: Dataset, lam, gamma):
    """(1/n)‖y − Xw‖² + λ(γ‖w‖₁ + ½‖w‖²)."""
    X, y = data.X, np.asarray(data.y, dtype=float)
    n = data.n

    def value_and_grad(w):
        r = X @ w - y
        return float(r @ r) / n, 2.0 / n * (X.T @ r)

    gram = X.T @ X
    L = 2.0 * power_iteration(gram, 1000, 1e-14)[0] / n * (1 + 1e-9)
    problem = CompositeProblem(value_and_grad, ElasticNet(lam, gamma), geometry=EUCLIDEAN, L_estimate=L)
    return BuiltProblem(
        problem,
        np.zeros(data.p),
        L_theory=L,
        primal_point=lambda res: res.x,
        objective=problem.objective,
    )


# ---------------------------------------------------------------- F1 SVM


def build_f1_svm(data: Dataset, lam, epsilon):
    """λ/2‖w‖² + entropy-smoothed F1 structured hinge, μ = ε/ln 2."""
    _check_two_classes(data.y)
    mu = choose_mu(epsilon, math.log(2.0))
    X, y = data.X, np.asarray(data.y, dtype=int)

    def value_and_grad(w):
        grad, value = f1_smoothed_gradient(w, X, y, mu)
        return value, grad

    problem = CompositeProblem(value_and_grad, SquaredNormBox(lam), geometry=EUCLIDEAN)
    return BuiltProblem(
        problem,
        np.zeros(data.p),
        mu=mu,
        primal_point=lambda res: res.x,
        objective=problem.objective,
    )


def f1_score(pred, y):
    pred = np.asarray(pred)
    y = np.asarray(y)
    tp = np.sum((pred == 1) & (y == 1))
    fp = np.sum((pred == 1) & (y == -1))
    fn = np.sum((pred == -1) & (y == 1))
    return 2.0 * tp / (2.0 * tp + fp + fn) if tp + fp + fn else 1.0

"""Accelerated gradient solvers with ∞-memory and 1-memory estimate functions.

Both solvers minimize J(x) = f(x) + Ψ(x) where f has an L-Lipschitz
gradient and is λ1-strongly convex wrt a Bregman prox-function d, and Ψ is
λ2-strongly convex wrt d with a cheap prox oracle.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .bregman import EUCLIDEAN, EstimateModel
from .regularizers import ZeroRegularizer


class ConfigurationError(ValueError):
    """Solver parameters are inconsistent (e.g. L ≤ σλ1)."""


class ProbeLimitError(RuntimeError):
    """The adaptive-L inner loop exceeded its probe budget."""


@dataclass
class CompositeProblem:
    """J = f + Ψ.

    ``value_and_grad(x)`` returns ``(f(x), ∇f(x))``; ``psi`` is a regularizer
    object (see :mod:`agm.regularizers`).
    """

    value_and_grad: Callable
    psi: object = None
    lambda1: float = 0.0
    geometry: object = EUCLIDEAN
    L_estimate: Optional[float] = None

    def __post_init__(self):
        if self.psi is None:
            self.psi = ZeroRegularizer(self.geometry)
        if self.lambda1 < 0 or self.psi.lambda2 < 0:
            raise ConfigurationError("strong convexity constants must be nonnegative")

    @property
    def lambda2(self):
        return self.psi.lambda2

    @property
    def lam(self):
        return self.lambda1 + self.lambda2

    def f_value(self, x):
        return self.value_and_grad(x)[0]

    def f_grad(self, x):
        return self.value_and_grad(x)[1]

    def psi_value(self, x):
        return self.psi.value(x)

    def objective(self, x):
        return self.f_value(x) + self.psi.value(x)


@dataclass(frozen=True)
class AdaptiveLConfig:
    gamma_d: float = 2.0
    gamma_u: float = 2.0
    L_init: float = 1.0
    max_inner_probes: int = 60

    def __post_init__(self):
        if self.gamma_d <= 1 or self.gamma_u <= 1:
            raise ConfigurationError("γ_d and γ_u must exceed 1")
        if self.L_init <= 0:
            raise ConfigurationError("initial L estimate must be positive")


@dataclass
class SolverConfig:
    """``l_mode`` is ``"adaptive"`` or ``"fixed"``; fixed mode uses ``L``
    (or the problem's ``L_estimate``)."""

    l_mode: str = "adaptive"
    L: Optional[float] = None
    adaptive: AdaptiveLConfig = field(default_factory=AdaptiveLConfig)
    max_iter: int = 1000
    gap_tol: Optional[float] = None
    stall_tol: Optional[float] = 1e-12
    stall_window: int = 10
    allow_one_step: bool = False
    record_timing: bool = True
    callback: Optional[Callable] = None


@dataclass(frozen=True)
class TraceRow:
    k: int
    J: float
    D: float
    gap: float
    certified_bound: float
    A_or_c: float
    L_k: float
    probes: int
    elapsed_ms: float
    estimate: float = math.nan
    step: float = math.nan


TRACE_COLUMNS = ("k", "J", "D", "gap", "certified_bound", "A_or_c", "L_k", "probes", "elapsed_ms")


@dataclass
class ConvergenceTrace:
    rows: list = field(default_factory=list)

    def append(self, row: TraceRow):
        self.rows.append(row)

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows], dtype=float)


@dataclass
class SolveResult:
    x: np.ndarray
    trace: ConvergenceTrace
    converged: bool
    reason: str
    iterations: int
    L: float
    dual: Optional["DualGapTracker"] = None
    z: Optional[np.ndarray] = None


@dataclass(frozen=True)
class InfMemState:
    k: int
    A: float
    x: np.ndarray
    z: np.ndarray
    model: EstimateModel
    L: float
    a: float
    u: Optional[np.ndarray]


@dataclass(frozen=True)
class OneMemState:
    k: int
    c: float
    x: np.ndarray
    z: np.ndarray
    model: EstimateModel
    L: float
    a: float
    u: Optional[np.ndarray]


# ---------------------------------------------------------------- step rules


def _positive_root(qa, qb, qc):
    """Positive root of qa·a² + qb·a + qc = 0 with qa > 0 and qc ≤ 0."""
    disc = math.sqrt(max(qb * qb - 4.0 * qa * qc, 0.0))
    if qb >= 0:
        if qc == 0:
            return 0.0
        return (-2.0 * qc) / (qb + disc)
    return (-qb + disc) / (2.0 * qa)


def _check_L(L, sigma, lambda1):
    if not L > sigma * lambda1:
        raise ConfigurationError(
            f"L={L} must exceed σλ1={sigma * lambda1}; the problem is solvable by a single prox step"
        )


def step_coeff_inf(A_k, lambda1, lambda2, L, sigma):
    """Positive root of (L/σ − λ1)a² − (2λA + 1)a − A(λA + 1) = 0."""
    _check_L(L, sigma, lambda1)
    lam = lambda1 + lambda2
    qa = L / sigma - lambda1
    if A_k > 1.0:
        # solve for t = a/A so the coefficients stay O(1) while A grows geometrically
        inv = 1.0 / A_k
        return max(A_k * _positive_root(qa, -(2.0 * lam + inv), -(lam + inv)), 1e-300)
    a = _positive_root(qa, -(2.0 * lam * A_k + 1.0), -A_k * (lam * A_k + 1.0))
    return max(a, 1e-300)


def step_coeff_one(c_k, lambda1, lambda2, L, sigma):
    """Positive root of (L + σλ2)a² + σ(c − λ1 − λ2)a − σc = 0."""
    _check_L(L, sigma, lambda1)
    a = _positive_root(L + sigma * lambda2, sigma * (c_k - lambda1 - lambda2), -sigma * c_k)
    return min(max(a, 1e-300), 1.0)


def tau_inf(A_k, a, lambda1, lambda2):
    A_next = A_k + a
    lam = lambda1 + lambda2
    return 1.0 + lam * A_k, lambda1 * a, lambda2 * a * A_k / A_next


def interp_u_inf(tau1, tau2, tau3, A_k, a, z_k, x_k):
    """u = [a·τ1·z + (τA + τ3·a)x] / (τA_{k+1} − τ2·a)."""
    tau = tau1 + tau2 + tau3
    A_next = A_k + a
    # divide through by τ·A_{k+1}, which overflows once A passes ~1e154
    share = a / A_next
    denom = 1.0 - (tau2 / tau) * share
    if not denom > 0:
        raise FloatingPointError("non-positive interpolation denominator")
    wz = share * (tau1 / tau) / denom
    return wz * np.asarray(z_k) + (1.0 - wz) * np.asarray(x_k)


def interp_u_one(c_k, a, lam, z_k, x_k):
    """u = [(τ − (τ1+τ2)a)x + τ1·a·z] / (τ − τ2·a) with the 1-memory τ's.

    Both τ1·a and τ − τ2·a carry the factor (1 − a), which is cancelled
    here so a step of a = 1 (reached in rounding) stays well defined:
    the weight on z is c·a/(c + λa).
    """
    wz = c_k * a / (c_k + lam * a)
    return wz * np.asarray(z_k) + (1.0 - wz) * np.asarray(x_k)


# ---------------------------------------------------------------- duality gap


@dataclass(frozen=True)
class DualGapTracker:
    """Running dual iterate α_k built from α(u) at the solver's test points.

    ``dual_map(u)`` returns α(u); ``dual_value(α)`` returns D(α);
    ``diameter`` is max Δ(x, u₀) over dom Ψ (``inf`` when unbounded);
    ``contains`` optionally tests membership of α in Q2.
    """

    dual_map: Callable
    dual_value: Callable
    diameter: float = math.inf
    contains: Optional[Callable] = None
    alpha: Optional[np.ndarray] = None
    total: float = 0.0
    anchor_weight: float = 1.0

    def value(self):
        return self.dual_value(self.alpha)

    def _mapped(self, u):
        alpha_u = np.asarray(self.dual_map(u), dtype=float)
        if self.contains is not None and not self.contains(alpha_u):
            raise ValueError("dual map returned a point outside Q2")
        return alpha_u


def dual_update_inf(tracker: DualGapTracker, a, A_next, u) -> DualGapTracker:
    """α_{k+1} = (A_k·α_k + a·α(u)) / A_{k+1}."""
    alpha_u = tracker._mapped(u)
    A_k = A_next - a
    if tracker.alpha is None or A_k <= 0:
        alpha = alpha_u
    else:
        alpha = (A_k / A_next) * tracker.alpha + (a / A_next) * alpha_u
    return replace(tracker, alpha=alpha, total=A_next)


def dual_start_one(tracker: DualGapTracker, u0) -> DualGapTracker:
    return replace(tracker, alpha=tracker._mapped(u0), anchor_weight=1.0)


def dual_update_one(tracker: DualGapTracker, a, u) -> DualGapTracker:
    """α_{k+1} = (1 − a)α_k + a·α(u); tracks b_k(0) = Π(1 − aⱼ)."""
    alpha_u = tracker._mapped(u)
    alpha = alpha_u if tracker.alpha is None else (1.0 - a) * tracker.alpha + a * alpha_u
    return replace(tracker, alpha=alpha, anchor_weight=tracker.anchor_weight * (1.0 - a))


def one_memory_weights(steps):
    """b_k(i) = aᵢ·Π_{j>i}(1 − aⱼ) with a₀ = 1 for steps (a₁, …, a_k)."""
    a = np.concatenate([[1.0], np.asarray(steps, dtype=float)])
    out = np.empty_like(a)
    tail = 1.0
    for i in range(a.shape[0] - 1, -1, -1):
        out[i] = a[i] * tail
        tail *= 1.0 - a[i]
    return out


def certified_gap_bound(mode, weight, L, sigma, diam):
    """(1/A_k)·diam for ``mode="inf"``; (L/σ)·b_k(0)·diam for ``mode="one"``."""
    if not math.isfinite(diam):
        return math.inf
    if mode == "inf":
        return diam / weight if weight > 0 else math.inf
    if mode == "one":
        return (L / sigma) * weight * diam
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------- shared plumbing


def _accepts(lhs, rhs, scale):
    """lhs ≤ rhs up to rounding relative to the magnitudes involved."""
    return lhs <= rhs + 1e-12 * scale


def _model_scale(model: EstimateModel, point, psi_value):
    lin = abs(float(model.linear @ point)) if model.linear is not None else 0.0
    return abs(model.offset) + lin + abs(model.value(point, psi_value))


class _Stopper:
    def __init__(self, config: SolverConfig, has_gap: bool):
        self.config = config
        self.has_gap = has_gap and config.gap_tol is not None
        self.best = []

    def check(self, J, gap):
        cfg = self.config
        if self.has_gap and gap <= cfg.gap_tol:
            return "gap"
        self.best.append(min(J, self.best[-1]) if self.best else J)
        if cfg.stall_tol is not None and len(self.best) > cfg.stall_window:
            old = self.best[-1 - cfg.stall_window]
            if old - self.best[-1] <= cfg.stall_tol * max(1.0, abs(self.best[-1])):
                return "stall"
        return None


def _initial_L(problem, config):
    if config.l_mode == "fixed":
        L = config.L if config.L is not None else problem.L_estimate
        if L is None:
            raise ConfigurationError("fixed L mode needs an L value")
        return float(L)
    if config.l_mode != "adaptive":
        raise ConfigurationError(f"unknown L mode {config.l_mode!r}")
    return None


def _dual_fields(dual, J, mode, weight, L0, sigma):
    if dual is None or dual.alpha is None:
        return math.nan, math.nan, math.nan
    D = dual.value()
    gap = J - D
    bound = certified_gap_bound(mode, weight, L0, sigma, dual.diameter)
    return D, gap, bound


def _single_prox_solution(problem, x0):
    """When L = σλ1 the minimizer of the first model is already optimal."""
    geom = problem.geometry
    fx, gx = problem.value_and_grad(x0)
    L = geom.sigma * problem.lambda1
    return problem.psi.prox(gx * geom.sigma / L, x0, geom.sigma / L)


# ---------------------------------------------------------------- ∞-memory


def run_agm_inf(problem: CompositeProblem, x0, config: SolverConfig | None = None, dual: DualGapTracker | None = None):
    """Accelerated method with the ∞-memory estimate function.

    ψ₀ = Δ(·, x₀) and ψ_{k+1} = ψ_k + a_{k+1}[f(u) + ⟨∇f(u), · − u⟩ +
    λ1Δ(·, u) + Ψ].  In adaptive mode each outer step probes L upward by
    γ_u until A_{k+1}J(x_{k+1}) ≤ ψ_{k+1}(z_{k+1}).
    """
    config = config or SolverConfig()
    geom = problem.geometry
    sigma = geom.sigma
    lam1, lam2 = problem.lambda1, problem.lambda2
    psi = problem.psi
    x = np.array(x0, dtype=float)
    if not math.isfinite(psi.value(x)):
        raise ValueError("x0 must lie in the domain of Ψ")
    fixed_L = _initial_L(problem, config)
    if fixed_L is not None and config.allow_one_step and fixed_L == sigma * lam1:
        sol = _single_prox_solution(problem, x)
        return SolveResult(sol, ConvergenceTrace(), True, "one-step", 0, fixed_L, dual, sol)
    ad = config.adaptive
    L = fixed_L if fixed_L is not None else ad.L_init * ad.gamma_d * ad.gamma_u

    model = EstimateModel.anchored(geom, x)
    z = x.copy()
    A = 0.0
    trace = ConvergenceTrace()
    stopper = _Stopper(config, dual is not None)
    start = time.perf_counter()
    reason = "max_iter"
    k = 0
    for k in range(1, config.max_iter + 1):
        probes = 0
        if fixed_L is None:
            L = L / (ad.gamma_d * ad.gamma_u)
        while True:
            probes += 1
            if fixed_L is None:
                if probes > ad.max_inner_probes:
                    raise ProbeLimitError(f"more than {ad.max_inner_probes} L probes at iteration {k}")
                L = L * ad.gamma_u
                if L <= sigma * lam1:
                    continue
            a = step_coeff_inf(A, lam1, lam2, L, sigma)
            A_next = A + a
            t1, t2, t3 = tau_inf(A, a, lam1, lam2)
            u = interp_u_inf(t1, t2, t3, A, a, z, x)
            fu, gu = problem.value_and_grad(u)
            trial = model.add_bregman(lam1 * a, u).add_linear(a * gu, a * (fu - float(gu @ u))).add_psi(a)
            z_next = trial.minimizer(psi.prox)
            x_next = (A / A_next) * x + (a / A_next) * z_next
            J_next = problem.objective(x_next)
            est = trial.value(z_next, psi.value)
            lhs = A_next * J_next
            if fixed_L is not None or _accepts(lhs, est, _model_scale(trial, z_next, psi.value) + abs(lhs)):
                break
        model, A, x, z = trial, A_next, x_next, z_next
        if dual is not None:
            dual = dual_update_inf(dual, a, A, u)
        D, gap, bound = _dual_fields(dual, J_next, "inf", A, L, sigma)
        elapsed = (time.perf_counter() - start) * 1e3 if config.record_timing else 0.0
        trace.append(TraceRow(k, J_next, D, gap, bound, A, L, probes, elapsed, est, a))
        if config.callback is not None:
            config.callback(InfMemState(k, A, x, z, model, L, a, u))
        why = stopper.check(J_next, gap)
        if why:
            reason = why
            break
        if A > 1e250:
            reason = "saturated"
            break
    converged = reason != "max_iter"
    return SolveResult(x, trace, converged, reason, k, L, dual, z)


# ---------------------------------------------------------------- 1-memory


def _initial_model(problem, u0, L, fu0, gu0):
    geom = problem.geometry
    return EstimateModel.anchored(geom, u0, L / geom.sigma).add_linear(gu0, fu0 - float(gu0 @ u0)).add_psi(1.0)


def run_agm_one(problem: CompositeProblem, u0, config: SolverConfig | None = None, dual: DualGapTracker | None = None):
    """Accelerated method with the 1-memory estimate function.

    q₀ = (L/σ)Δ(·, u₀) + Ψ + f(u₀) + ⟨∇f(u₀), · − u₀⟩; afterwards the model
    is compressed to q_k = c_kΔ(·, z_k) + ψ_k(z_k).
    """
    config = config or SolverConfig()
    geom = problem.geometry
    sigma = geom.sigma
    lam1, lam2 = problem.lambda1, problem.lambda2
    lam = lam1 + lam2
    psi = problem.psi
    u0 = np.array(u0, dtype=float)
    fixed_L = _initial_L(problem, config)
    if fixed_L is not None and config.allow_one_step and fixed_L == sigma * lam1:
        sol = _single_prox_solution(problem, u0)
        return SolveResult(sol, ConvergenceTrace(), True, "one-step", 0, fixed_L, dual, sol)
    ad = config.adaptive
    fu0, gu0 = problem.value_and_grad(u0)
    start = time.perf_counter()

    probes = 0
    L = fixed_L if fixed_L is not None else ad.L_init / ad.gamma_u
    while True:
        probes += 1
        if fixed_L is None:
            if probes > ad.max_inner_probes:
                raise ProbeLimitError("more than the allowed L probes during initialization")
            L = L * ad.gamma_u
            if L <= sigma * lam1:
                continue
        _check_L(L, sigma, lam1)
        q = _initial_model(problem, u0, L, fu0, gu0)
        z = q.minimizer(psi.prox)
        J0 = problem.objective(z)
        qval = q.value(z, psi.value)
        if fixed_L is not None or _accepts(J0, qval, _model_scale(q, z, psi.value) + abs(J0)):
            break
    L0 = L
    x = z.copy()
    c = L / sigma + lam2
    if dual is not None:
        dual = dual_start_one(dual, u0)
    trace = ConvergenceTrace()
    D, gap, bound = _dual_fields(dual, J0, "one", 1.0, L0, sigma)
    elapsed = (time.perf_counter() - start) * 1e3 if config.record_timing else 0.0
    trace.append(TraceRow(0, J0, D, gap, bound, c, L, probes, elapsed, qval, math.nan))
    if config.callback is not None:
        config.callback(OneMemState(0, c, x, z, q, L, math.nan, u0))
    stopper = _Stopper(config, dual is not None)
    reason = "max_iter"
    shrink = 1.0  # Π(1 − aᵢ), the 1-memory counterpart of 1/A_k
    k = 0
    for k in range(1, config.max_iter + 1):
        probes = 0
        if fixed_L is None:
            L = L / (ad.gamma_d * ad.gamma_u)
        while True:
            probes += 1
            if fixed_L is None:
                if probes > ad.max_inner_probes:
                    raise ProbeLimitError(f"more than {ad.max_inner_probes} L probes at iteration {k}")
                L = L * ad.gamma_u
                if L <= sigma * lam1:
                    continue
            a = step_coeff_one(c, lam1, lam2, L, sigma)
            u = interp_u_one(c, a, lam, z, x)
            fu, gu = problem.value_and_grad(u)
            psi_model = (
                q.scaled(1.0 - a).add_bregman(lam1 * a, u).add_linear(a * gu, a * (fu - float(gu @ u))).add_psi(a)
            )
            z_next = psi_model.minimizer(psi.prox)
            x_next = (1.0 - a) * x + a * z_next
            J_next = problem.objective(x_next)
            qval = psi_model.value(z_next, psi.value)
            scale = _model_scale(psi_model, z_next, psi.value) + abs(J_next)
            if fixed_L is not None or _accepts(J_next, qval, scale):
                break
        c = (1.0 - a) * c + lam * a
        x, z = x_next, z_next
        q = EstimateModel(geom, c, z.copy(), qval, np.zeros_like(z), 0.0)
        if dual is not None:
            dual = dual_update_one(dual, a, u)
        weight = dual.anchor_weight if dual is not None else math.nan
        D, gap, bound = _dual_fields(dual, J_next, "one", weight, L0, sigma)
        elapsed = (time.perf_counter() - start) * 1e3 if config.record_timing else 0.0
        trace.append(TraceRow(k, J_next, D, gap, bound, c, L, probes, elapsed, qval, a))
        if config.callback is not None:
            config.callback(OneMemState(k, c, x, z, q, L, a, u))
        why = stopper.check(J_next, gap)
        if why:
            reason = why
            break
        shrink *= 1.0 - a
        if shrink < 1e-250 or not c > 0:
            reason = "saturated"
            break
    converged = reason != "max_iter"
    return SolveResult(x, trace, converged, reason, k, L, dual, z)


def run_agm(problem, x0, memory="inf", config=None, dual=None):
    if memory == "inf":
        return run_agm_inf(problem, x0, config, dual)
    if memory == "one":
        return run_agm_one(problem, x0, config, dual)
    raise ValueError(f"memory must be 'inf' or 'one', got {memory!r}")

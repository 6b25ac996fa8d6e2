"""Exact solvers for the inner problems of each solver iteration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class FeasibilityError(ValueError):
    """The constraint set of a subproblem is empty."""


@dataclass(frozen=True)
class BoxHyperplaneQP:
    """min ½Σ dᵢ²(αᵢ − mᵢ)²  s.t.  lᵢ ≤ αᵢ ≤ uᵢ,  Σ σᵢαᵢ = z."""

    d: np.ndarray
    m: np.ndarray
    l: np.ndarray
    u: np.ndarray
    sigma: np.ndarray
    z: float

    @classmethod
    def build(cls, d, m, l, u, sigma, z):
        m = np.asarray(m, dtype=float)
        n = m.shape[0]

        def vec(v):
            return np.broadcast_to(np.asarray(v, dtype=float), (n,)).copy()

        return cls(vec(d), m.copy(), vec(l), vec(u), vec(sigma), float(z))

    def validate(self):
        n = self.m.shape[0]
        for name in ("d", "l", "u", "sigma"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"{name} must have shape ({n},)")
        arrays = (self.d, self.m, self.l, self.u, self.sigma)
        if not all(np.all(np.isfinite(a)) for a in arrays) or not np.isfinite(self.z):
            raise ValueError("QP data must be finite")
        if np.any(self.d == 0):
            raise ValueError("curvatures d must be nonzero")
        if np.any(self.l >= self.u):
            raise ValueError("bounds must satisfy l < u")

    def hyperplane_range(self):
        s = self.sigma
        lo = np.where(s > 0, s * self.l, s * self.u).sum()
        hi = np.where(s > 0, s * self.u, s * self.l).sum()
        return lo, hi

    def objective(self, alpha):
        return 0.5 * float(np.sum(self.d**2 * (alpha - self.m) ** 2))


class _KinkFunction:
    """f(λ) = c_g + s_g·λ + Σ_{undetermined} clip(λ/d̄², l′, u′) − z′."""

    def __init__(self, dbar2, lo_t, hi_t, z_t):
        # undetermined coordinates are kept compacted so each round touches contiguous memory
        self.dbar2 = dbar2
        self.lo_t = lo_t
        self.hi_t = hi_t
        self.kink_lo = dbar2 * lo_t
        self.kink_hi = dbar2 * hi_t
        self.const = -z_t
        self.slope = 0.0
        self.evaluations = 0

    def resolve(self, left, right):
        """Fold coordinates whose piece is fixed on [left, right] into the buffers."""
        klo, khi = self.kink_lo, self.kink_hi
        upper = khi <= left
        lower = klo >= right
        linear = (klo <= left) & (khi >= right) & ~upper & ~lower
        keep = ~(upper | lower | linear)
        if keep.all():
            return
        self.const += self.hi_t[upper].sum() + self.lo_t[lower].sum()
        self.slope += np.sum(1.0 / self.dbar2[linear])
        self.dbar2 = self.dbar2[keep]
        self.lo_t = self.lo_t[keep]
        self.hi_t = self.hi_t[keep]
        self.kink_lo = klo[keep]
        self.kink_hi = khi[keep]

    def __call__(self, lam):
        self.evaluations += 1
        inner = np.clip(lam / self.dbar2, self.lo_t, self.hi_t).sum()
        return self.const + self.slope * lam + inner


def _lower_median(values):
    k = (values.shape[0] - 1) // 2
    return np.partition(values, k)[k]


def _bracket_root(f, left, right):
    if left == right:
        return left
    fl, fr = f(left), f(right)
    if fr == fl:
        return 0.5 * (left + right)
    return (left * fr - right * fl) / (fr - fl)


def _root_keep_duplicates(f, kinks):
    s = kinks
    while s.shape[0] > 2:
        left, right = s.min(), s.max()
        if left == right:
            return left
        f.resolve(left, right)
        mid = _lower_median(s)
        fm = f(mid)
        if fm == 0:
            return mid
        if fm > 0:
            below = s[s < mid]
            if below.shape[0] == 0:
                # feasibility puts the root at or above the smallest kink; f(mid) > 0 here is rounding
                return mid
            y = below.max()
            fy = f(y)
            if fy == 0:
                return y
            if fy > 0:
                s = below
            else:
                return _bracket_root(f, y, mid)
        else:
            above = s[s > mid]
            if above.shape[0] == 0:
                return mid
            y = above.min()
            fy = f(y)
            if fy == 0:
                return y
            if fy < 0:
                s = above
            else:
                return _bracket_root(f, mid, y)
    f.resolve(s.min(), s.max())
    return _bracket_root(f, s.min(), s.max())


def _root_distinct(f, kinks):
    s = np.unique(kinks)
    while s.shape[0] > 2:
        f.resolve(s[0], s[-1])
        mid = _lower_median(s)
        fm = f(mid)
        if fm == 0:
            return mid
        s = s[s <= mid] if fm > 0 else s[s >= mid]
    if s.shape[0] == 1:
        return s[0]
    f.resolve(s[0], s[-1])
    return _bracket_root(f, s[0], s[-1])


def solve_box_hyperplane(qp: BoxHyperplaneQP, dedupe: bool = False):
    """Exact minimizer of the box∩hyperplane diagonal QP.

    Returns ``(alpha, multiplier)`` with αᵢ = clip(mᵢ + λσᵢ/dᵢ², lᵢ, uᵢ).
    The root of the monotone multiplier function is located by halving the
    kink multiset around its median, which costs O(n) overall.  Duplicate
    kinks are kept; ``dedupe=True`` switches to the variant that first
    removes them (used for differential testing).
    """
    qp.validate()
    lo_z, hi_z = qp.hyperplane_range()
    scale = 1e-12 * (1.0 + abs(lo_z) + abs(hi_z))
    if qp.z < lo_z - scale or qp.z > hi_z + scale:
        raise FeasibilityError(f"hyperplane value {qp.z} outside attainable range [{lo_z}, {hi_z}]")

    alpha = np.clip(qp.m, qp.l, qp.u)
    active = qp.sigma != 0
    if not np.any(active):
        if abs(qp.z) > scale:
            raise FeasibilityError("all hyperplane coefficients are zero but z is not")
        return alpha, 0.0

    sig = qp.sigma[active]
    m = qp.m[active]
    d2 = qp.d[active] ** 2
    dbar2 = d2 / sig**2
    pos = sig > 0
    lo_t = np.where(pos, sig * (qp.l[active] - m), sig * (qp.u[active] - m))
    hi_t = np.where(pos, sig * (qp.u[active] - m), sig * (qp.l[active] - m))
    z_t = qp.z - float(sig @ m)

    f = _KinkFunction(dbar2, lo_t, hi_t, z_t)
    kinks = np.concatenate([f.kink_lo, f.kink_hi])
    lam = _root_distinct(f, kinks) if dedupe else _root_keep_duplicates(f, kinks)

    lo, hi = qp.l[active], qp.u[active]
    gain = sig / d2
    part = np.clip(m + lam * gain, lo, hi)
    # z′ = z − Σσm loses digits when |m| dwarfs the box; polish on the free set
    for _ in range(2):
        resid = float(sig @ part) - qp.z
        free = (part > lo) & (part < hi)
        slope = float(sig[free] @ gain[free])
        if resid == 0 or slope <= 0:
            break
        trial = lam - resid / slope
        cand = np.clip(m + trial * gain, lo, hi)
        if abs(float(sig @ cand) - qp.z) >= abs(resid):
            break
        lam, part = trial, cand
    alpha[active] = part
    return alpha, float(lam)


def elastic_net_prox(g, lam: float, gamma: float, L: float):
    """argmin_w λ(γ‖w‖₁ + ½‖w‖²) + (L/2)‖w − g‖²."""
    if lam <= 0 or gamma < 0 or L <= 0:
        raise ValueError("elastic_net_prox needs λ > 0, γ ≥ 0, L > 0")
    g = np.asarray(g, dtype=float)
    return np.sign(g) * np.maximum(L * np.abs(g) - gamma * lam, 0.0) / (lam + L)


@dataclass(frozen=True)
class ElasticNetBall:
    """{w : γ‖w‖₁ + ½‖w‖² ≤ r}."""

    gamma: float
    r: float

    def __post_init__(self):
        if self.gamma <= 0 or self.r <= 0:
            raise ValueError("ElasticNetBall needs γ > 0 and r > 0")

    def level(self, w):
        w = np.asarray(w, dtype=float)
        return self.gamma * np.abs(w).sum() + 0.5 * float(w @ w)


def elastic_net_ball_project(g, ball: ElasticNetBall):
    """Euclidean projection of g onto the elastic-net ball.

    With t = 1 + λ the derivative of the Lagrange dual is proportional to
    h(λ) = −2r·t² + Σ_{i: λ ≤ |gᵢ|/γ} [(γ + |gᵢ|)² − γ²t²], decreasing in λ.
    It is piecewise quadratic in t between the kinks |gᵢ|/γ, so the root is
    found by locating the sign change over sorted kinks and solving that
    segment exactly.
    """
    g = np.asarray(g, dtype=float)
    gamma, r = ball.gamma, ball.r
    a = np.abs(g)
    if ball.level(g) <= r:
        return g.copy()

    kinks = np.sort(a / gamma)
    sq = np.sort(a)  # same order as kinks
    shifted = (gamma + sq) ** 2
    suffix_sq = np.cumsum(shifted[::-1])[::-1]
    counts = np.arange(a.shape[0], 0, -1, dtype=float)
    t = kinks + 1.0
    h_at_kinks = suffix_sq - gamma**2 * counts * t**2 - 2.0 * r * t**2
    j = int(np.argmax(h_at_kinks <= 0))
    t_root = np.sqrt(suffix_sq[j] / (2.0 * r + gamma**2 * counts[j]))
    lam_left = kinks[j - 1] if j > 0 else 0.0
    lam = float(np.clip(t_root - 1.0, lam_left, kinks[j]))
    return np.sign(g) * np.maximum(a - lam * gamma, 0.0) / (1.0 + lam)


def _lse(v):
    top = v.max()
    return top + np.log(np.exp(v - top).sum())


def capped_simplex_entropy_prox(u, center, nu: float, total: float = 1.0, iters: int = 200):
    """argmin ⟨u,w⟩ + KL(w, center) over {w ∈ [0,ν]ⁿ, Σw = total}.

    The minimizer is wᵢ(τ) = min(ν, centerᵢ·exp(τ − uᵢ)) for the τ making
    the sum equal ``total``.  τ is bracketed and bisected; the uncapped
    coordinates are then rescaled so the hyperplane holds to rounding.
    """
    u = np.asarray(u, dtype=float)
    center = np.asarray(center, dtype=float)
    n = u.shape[0]
    if nu * n < total * (1 - 1e-12):
        raise FeasibilityError(f"cap ν={nu} too small for total {total} over {n} coordinates")
    if np.any(center <= 0):
        raise ValueError("center must be strictly positive")
    base = np.log(center) - u
    log_nu = np.log(nu)

    def mass(tau):
        return np.minimum(log_nu, base + tau)

    tau_lo = np.log(total) - _lse(base)
    tau_hi = np.max(log_nu - base)
    if tau_hi <= tau_lo:
        return np.full(n, total / n)
    for _ in range(iters):
        # once both bracket ends cap the same coordinates the exact rescale below finishes the job
        if np.count_nonzero(base + tau_lo >= log_nu) == np.count_nonzero(base + tau_hi >= log_nu):
            break
        mid = 0.5 * (tau_lo + tau_hi)
        if mid <= tau_lo or mid >= tau_hi:
            break
        if np.exp(mass(mid)).sum() > total:
            tau_hi = mid
        else:
            tau_lo = mid
    # coordinates capped at the lower bracket end are capped at the root
    capped = base + tau_lo >= log_nu
    while True:
        w = np.full(n, float(nu))
        free = ~capped
        if not np.any(free):
            return w
        rest = max(total - nu * capped.sum(), 0.0)
        w[free] = np.exp(base[free] - _lse(base[free])) * rest
        over = free & (w > nu)
        if not np.any(over):
            return w
        capped = capped | over

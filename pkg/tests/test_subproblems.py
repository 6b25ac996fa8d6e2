import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from agm.oracles import elastic_ball_oracle, entropy_capped_oracle, kkt_enumerate_qp
from agm.subproblems import (
    BoxHyperplaneQP,
    ElasticNetBall,
    FeasibilityError,
    capped_simplex_entropy_prox,
    elastic_net_ball_project,
    elastic_net_prox,
    solve_box_hyperplane,
)


def random_qp(rng, n, signs=True):
    d = rng.uniform(0.3, 2.0, n) * rng.choice([-1, 1], n)
    m = rng.normal(0, 2, n)
    l = rng.uniform(-2, 0, n)
    u = l + rng.uniform(0.1, 3, n)
    sigma = rng.uniform(0.2, 2, n) * (rng.choice([-1, 1], n) if signs else 1)
    lo = np.where(sigma > 0, sigma * l, sigma * u).sum()
    hi = np.where(sigma > 0, sigma * u, sigma * l).sum()
    z = rng.uniform(lo, hi)
    return BoxHyperplaneQP.build(d, m, l, u, sigma, z)


def assert_kkt(qp, alpha, lam, tol=1e-10):
    assert np.all(alpha >= qp.l - tol) and np.all(alpha <= qp.u + tol)
    assert abs(qp.sigma @ alpha - qp.z) <= tol * (1 + abs(qp.z)) * max(1, np.abs(qp.sigma).sum())
    active = qp.sigma != 0
    expected = np.clip(qp.m + lam * qp.sigma / qp.d**2, qp.l, qp.u)
    np.testing.assert_allclose(alpha[active], expected[active], atol=1e-9)


# ---------------------------------------------------------------- box∩hyperplane QP


def test_single_variable_is_forced_by_the_equality():
    alpha, _ = solve_box_hyperplane(BoxHyperplaneQP.build(1, [0.0], -10, 10, 1, 3.0))
    assert alpha[0] == pytest.approx(3.0)


def test_two_point_simplex_projection():
    # Lagrangian by hand: α = m + λ, Σα = 1 ⇒ λ = −0.1
    alpha, lam = solve_box_hyperplane(BoxHyperplaneQP.build(1, [0.8, 0.4], 0, 1e6, 1, 1.0))
    np.testing.assert_allclose(alpha, [0.7, 0.3], atol=1e-15)
    assert lam == pytest.approx(-0.1)


def test_capped_projection_matches_kkt_enumeration():
    alpha, _ = solve_box_hyperplane(BoxHyperplaneQP.build(1, [1.0, 1.0, 0.0], 0, 0.5, 1, 1.0))
    np.testing.assert_allclose(alpha, [0.5, 0.5, 0.0], atol=1e-14)
    oracle = kkt_enumerate_qp(1, [1.0, 1.0, 0.0], 0, 0.5, 1, 1.0)
    np.testing.assert_allclose(alpha, oracle, atol=1e-12)


def test_identical_coordinates_give_the_symmetric_solution():
    qp = BoxHyperplaneQP.build(1.0, np.full(7, 0.3), 0.0, 1.0, 1.0, 2.0)
    for dedupe in (False, True):
        alpha, _ = solve_box_hyperplane(qp, dedupe=dedupe)
        np.testing.assert_allclose(alpha, np.full(7, 2.0 / 7), atol=1e-15)


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6), signs=st.booleans())
def test_matches_active_set_oracle(seed, n, signs):
    rng = np.random.default_rng(seed)
    qp = random_qp(rng, n, signs)
    alpha, lam = solve_box_hyperplane(qp)
    oracle = kkt_enumerate_qp(qp.d, qp.m, qp.l, qp.u, qp.sigma, qp.z)
    np.testing.assert_allclose(alpha, oracle, atol=1e-8)
    assert_kkt(qp, alpha, lam)


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 200))
def test_duplicate_tolerant_and_distinct_variants_agree(seed, n):
    rng = np.random.default_rng(seed)
    qp = random_qp(rng, n)
    # quantize to force repeated kinks
    qp = BoxHyperplaneQP.build(1.0, np.round(qp.m), np.round(qp.l) - 1, np.round(qp.u) + 1, np.sign(qp.sigma), 0.0)
    lo, hi = qp.hyperplane_range()
    qp = BoxHyperplaneQP.build(qp.d, qp.m, qp.l, qp.u, qp.sigma, np.floor(0.5 * (lo + hi)))
    a1, l1 = solve_box_hyperplane(qp)
    a2, l2 = solve_box_hyperplane(qp, dedupe=True)
    np.testing.assert_allclose(a1, a2, atol=1e-9)
    assert_kkt(qp, a1, l1)


def test_large_instance_satisfies_kkt(rng):
    qp = random_qp(rng, 200_000)
    alpha, lam = solve_box_hyperplane(qp)
    assert_kkt(qp, alpha, lam)


def test_zero_hyperplane_coefficients_are_solved_by_clipping():
    qp = BoxHyperplaneQP.build(1, [5.0, 0.8, 0.4], 0, 1, [0.0, 1.0, 1.0], 1.0)
    alpha, _ = solve_box_hyperplane(qp)
    np.testing.assert_allclose(alpha, [1.0, 0.7, 0.3], atol=1e-15)


def test_infeasible_hyperplane_raises():
    with pytest.raises(FeasibilityError):
        solve_box_hyperplane(BoxHyperplaneQP.build(1, [0.0, 0.0], 0, 0.1, 1, 1.0))


@pytest.mark.parametrize(
    "field,value",
    [("d", [0.0, 1.0]), ("l", [1.0, 0.0]), ("u", [np.inf, 1.0]), ("m", [np.nan, 0.0])],
)
def test_invalid_inputs_raise(field, value):
    kw = dict(d=[1.0, 1.0], m=[0.0, 0.0], l=[0.0, 0.0], u=[1.0, 1.0], sigma=[1.0, 1.0], z=1.0)
    kw[field] = value
    with pytest.raises(ValueError):
        solve_box_hyperplane(BoxHyperplaneQP.build(**kw))


# ---------------------------------------------------------------- elastic net


def test_elastic_net_prox_examples():
    assert elastic_net_prox(np.zeros(3), 1, 1, 1).tolist() == [0, 0, 0]
    np.testing.assert_allclose(elastic_net_prox(np.array([3.0, -3.0, 0.5]), 1, 1, 1), [1.0, -1.0, 0.0])


@given(seed=st.integers(0, 10**6), lam=st.floats(0.01, 5), gamma=st.floats(0, 3), L=st.floats(0.01, 5))
def test_elastic_net_prox_is_coordinatewise_optimal(seed, lam, gamma, L):
    g = np.random.default_rng(seed).normal(0, 3, 6)
    w = elastic_net_prox(g, lam, gamma, L)

    def objective(v):
        return lam * (gamma * np.abs(v) + 0.5 * v**2) + 0.5 * L * (v - g) ** 2

    base = objective(w)
    for delta in (1e-6, -1e-6):
        assert np.all(base <= objective(w + delta) + 1e-14)


def test_elastic_net_prox_rejects_bad_parameters():
    with pytest.raises(ValueError):
        elastic_net_prox(np.ones(2), 0.0, 1.0, 1.0)


def test_ball_projection_examples():
    assert elastic_net_ball_project(np.array([3.0]), ElasticNetBall(1.0, 1.5))[0] == pytest.approx(1.0)
    np.testing.assert_allclose(elastic_net_ball_project(np.array([3.0, -3.0]), ElasticNetBall(1.0, 3.0)), [1.0, -1.0])
    g = np.array([0.1, -0.2])
    np.testing.assert_array_equal(elastic_net_ball_project(g, ElasticNetBall(1.0, 1.0)), g)


@given(seed=st.integers(0, 10**6), gamma=st.floats(0.05, 4), r=st.floats(0.01, 5), p=st.integers(1, 30))
def test_ball_projection_matches_bisection_oracle(seed, gamma, r, p):
    g = np.random.default_rng(seed).normal(0, 3, p)
    ball = ElasticNetBall(gamma, r)
    w = elastic_net_ball_project(g, ball)
    assert ball.level(w) <= r + 1e-10
    np.testing.assert_allclose(w, elastic_ball_oracle(g, gamma, r), atol=1e-8)
    if ball.level(g) > r:
        assert ball.level(w) == pytest.approx(r, abs=1e-10)


def test_ball_rejects_nonpositive_parameters():
    with pytest.raises(ValueError):
        ElasticNetBall(0.0, 1.0)


# ---------------------------------------------------------------- capped simplex


def test_entropy_prox_of_zero_is_the_center():
    np.testing.assert_allclose(capped_simplex_entropy_prox(np.zeros(4), np.full(4, 0.25), 1.0), np.full(4, 0.25))


def test_entropy_prox_two_point_gibbs():
    w = capped_simplex_entropy_prox(np.array([0.0, np.log(3.0)]), np.full(2, 0.5), 1.0)
    np.testing.assert_allclose(w, [0.75, 0.25], atol=1e-14)


def test_entropy_prox_binding_cap():
    u = np.array([-5.0, 0.0, 0.3])
    w = capped_simplex_entropy_prox(u, np.full(3, 1 / 3), 0.4)
    assert w[0] == pytest.approx(0.4)
    gibbs = np.exp(-u[1:]) / np.exp(-u[1:]).sum() * 0.6
    np.testing.assert_allclose(w[1:], gibbs, atol=1e-14)
    # fine-grid check over the feasible segment
    grid = np.linspace(0, 0.4, 40001)
    pts = np.stack([np.full_like(grid, 0.4), grid, 0.6 - grid], axis=1)
    pts = pts[(pts[:, 2] >= 0) & (pts[:, 2] <= 0.4)]
    c = np.full(3, 1 / 3)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = pts @ u + np.nansum(pts * np.log(pts / c), axis=1) - pts.sum(1) + 1
    obj_w = u @ w + np.sum(w * np.log(w / c)) - w.sum() + 1
    assert obj_w <= vals.min() + 1e-9


@given(seed=st.integers(0, 10**6), n=st.integers(1, 5), nu_scale=st.floats(1.0, 3.0))
def test_entropy_prox_matches_enumeration(seed, n, nu_scale):
    rng = np.random.default_rng(seed)
    u = rng.normal(0, 2, n)
    center = rng.dirichlet(np.ones(n))
    nu = min(1.0, nu_scale / n)
    w = capped_simplex_entropy_prox(u, center, nu)
    assert abs(w.sum() - 1.0) <= 1e-12
    assert np.all(w <= nu * (1 + 1e-12)) and np.all(w >= 0)
    np.testing.assert_allclose(w, entropy_capped_oracle(u, center, nu), atol=1e-10)


def test_entropy_prox_infeasible_cap():
    with pytest.raises(FeasibilityError):
        capped_simplex_entropy_prox(np.zeros(3), np.full(3, 1 / 3), 0.2)


def test_root_at_edge_of_duplicated_kinks():
    # z sits a rounding step below the attainable range, so f > 0 already at the smallest kink
    qp = BoxHyperplaneQP.build(1.0, np.zeros(4), 0.0, 1.0, 1.0, -1e-13)
    alpha, _ = solve_box_hyperplane(qp)
    np.testing.assert_allclose(alpha, 0.0, atol=1e-12)
    alpha_d, _ = solve_box_hyperplane(qp, dedupe=True)
    np.testing.assert_allclose(alpha_d, alpha, atol=1e-12)

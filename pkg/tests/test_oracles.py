import ast
import math
from pathlib import Path

import numpy as np
import pytest

import agm.oracles as oracles
from agm.oracles import (
    brute_force_f1,
    elastic_ball_oracle,
    entropy_capped_oracle,
    finite_difference_grad,
    hinge_objective_with_bias,
    kkt_enumerate_qp,
    subgradient_reference,
    svm_subgradient_reference,
)


def test_oracles_do_not_import_the_modules_they_check():
    tree = ast.parse(Path(oracles.__file__).read_text())
    imported = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.ImportFrom):
            imported.add(node.module or "")
            assert node.level == 0, "relative imports would reach package code"
        elif isinstance(node, ast.Import):
            imported.update(a.name for a in node.names)
    assert not any(name.startswith("agm") for name in imported)


def test_brute_force_single_positive_by_hand():
    s, mu = 0.7, 0.5
    logZ, p_flip, _, _ = brute_force_f1(np.array([s]), np.array([[1.0]]), np.array([1]), mu)
    # keep: exponent s/μ with loss 0; flip: −s/μ plus n·1/μ
    keep, flip = s / mu, -s / mu + 1 / mu
    assert logZ == pytest.approx(np.logaddexp(keep, flip))
    assert p_flip[0] == pytest.approx(np.exp(flip - np.logaddexp(keep, flip)))


def test_brute_force_uniform_for_huge_mu():
    _, p_flip, _, _ = brute_force_f1(np.ones(2), np.eye(3, 2), np.array([1, -1, 1]), 1e10)
    np.testing.assert_allclose(p_flip, np.full(3, 0.5 / 3), rtol=1e-8)


def test_kkt_oracle_examples():
    assert kkt_enumerate_qp(1, [0.0], -10, 10, 1, 3.0)[0] == pytest.approx(3.0)
    np.testing.assert_allclose(kkt_enumerate_qp(1, [0.8, 0.4], 0, 100, 1, 1.0), [0.7, 0.3])


def test_finite_differences_of_half_squared_norm():
    x = np.array([1.0, -2.0, 0.5])
    np.testing.assert_allclose(finite_difference_grad(lambda v: 0.5 * v @ v, x), x, atol=1e-8)


def test_subgradient_reference_on_a_quadratic():
    rep = subgradient_reference(lambda x: float((x - 1) @ (x - 1)), lambda x: 2 * (x - 1), np.zeros(2), 20000, 0.5)
    assert rep.value == pytest.approx(0.0, abs=1e-6)


def test_svm_toy_reference():
    # orthogonal unit features, one per class: w = (t, −t), b = 0, J = λt² + 1 − t, t = 1/(2λ)
    X = np.eye(2)
    y = np.array([1.0, -1.0])
    lam = 1.0
    rep = svm_subgradient_reference(X, y, lam, iters=200_000)
    assert rep.value == pytest.approx(0.75, abs=1e-4)
    J, _ = hinge_objective_with_bias(np.array([0.5, -0.5]), X, y, lam)
    assert J == pytest.approx(0.75)


def test_ridge_limit_against_linear_solve(rng):
    X = rng.normal(size=(30, 4))
    y = rng.normal(size=30)
    lam, n = 0.3, 30

    def value(w):
        r = X @ w - y
        return float(r @ r) / n + 0.5 * lam * float(w @ w)

    def grad(w):
        return 2 / n * X.T @ (X @ w - y) + lam * w

    exact = np.linalg.solve(2 / n * X.T @ X + lam * np.eye(4), 2 / n * X.T @ y)
    rep = subgradient_reference(value, grad, np.zeros(4), 200_000, 1.0)
    assert rep.value == pytest.approx(value(exact), abs=1e-5)


def test_ball_oracle_examples():
    assert elastic_ball_oracle(np.array([3.0]), 1.0, 1.5)[0] == pytest.approx(1.0, abs=1e-12)
    g = np.array([0.1, 0.1])
    np.testing.assert_array_equal(elastic_ball_oracle(g, 1.0, 5.0), g)


def test_entropy_oracle_gibbs_and_cap():
    np.testing.assert_allclose(entropy_capped_oracle(np.array([0.0, math.log(3)]), np.full(2, 0.5), 1.0), [0.75, 0.25])
    w = entropy_capped_oracle(np.array([-10.0, 0.0, 0.0]), np.full(3, 1 / 3), 0.4)
    np.testing.assert_allclose(w, [0.4, 0.3, 0.3])


def test_kkt_oracle_handles_decoupled_coordinates():
    # σ₀ = 0 and m₀ < l₀: coordinate 0 sits at its lower bound whatever the multiplier
    d = [1.675, 2.7739]
    m = [-3.9157, 0.7763]
    l = [-1.6481, -1.0823]
    u = [0.7367, -0.6697]
    alpha = kkt_enumerate_qp(d, m, l, u, [0.0, 1.0], -0.8383)
    np.testing.assert_allclose(alpha, [-1.6481, -0.8383], atol=1e-12)

import numpy as np
import pytest

from oracles import hidden as hidden_oracle
from rutnet.elm import (
    ElmModel,
    ElmParams,
    RelmModel,
    hidden_matrix,
    ridge_objective,
    solve_beta,
    train_elm,
    train_relm,
)
from rutnet.exceptions import NumericalError, ValidationError


def test_hidden_matrix_examples():
    p = ElmParams(np.zeros((3, 2)), np.zeros(3))
    np.testing.assert_array_equal(hidden_matrix(p, np.ones((4, 2))), 0.5)
    one = ElmParams([[2.0]], [-2.0])
    np.testing.assert_array_equal(hidden_matrix(one, [[1.0]]), [[0.5]])
    rng = np.random.default_rng(0)
    W, b, X = rng.normal(size=(3, 5)), rng.normal(size=3), rng.normal(size=(4, 5))
    np.testing.assert_allclose(hidden_matrix(ElmParams(W, b), X), hidden_oracle(W, b, X), atol=1e-12)
    with pytest.raises(ValidationError):
        hidden_matrix(ElmParams(W, b), np.ones((2, 4)))


def test_other_activations():
    p = ElmParams([[1.0]], [0.0], activation="tanh")
    assert hidden_matrix(p, [[0.3]])[0, 0] == pytest.approx(np.tanh(0.3))
    with pytest.raises(ValidationError):
        ElmParams([[1.0]], [0.0], activation="relu6")


def test_solve_beta_examples():
    T = np.array([1.0, -2.0, 3.0])
    np.testing.assert_allclose(solve_beta(np.eye(3), T, 1e12), T, atol=1e-6)
    h, t, C = 0.7, 2.0, 5.0
    assert solve_beta([[h]], [t], C)[0] == pytest.approx(h * t / (h * h + 1 / C), abs=1e-15)
    with pytest.raises(ValidationError):
        solve_beta([[1.0]], [1.0], 0.0)
    with pytest.raises(ValidationError):
        solve_beta([[np.nan]], [1.0], 1.0)


def test_primal_dual_agree():
    rng = np.random.default_rng(1)
    for N, L in [(6, 6), (7, 6), (6, 7), (40, 40)]:
        H, T = rng.normal(size=(N, L)), rng.normal(size=N)
        p, d = solve_beta(H, T, 10.0, "primal"), solve_beta(H, T, 10.0, "dual")
        assert np.linalg.norm(p - d) <= 1e-8 * np.linalg.norm(p)


def test_singular_reports_condition():
    with pytest.raises(NumericalError, match="condition"):
        solve_beta(np.ones((4, 2)), np.ones(4), 1e300)
    with pytest.raises(NumericalError):
        solve_beta(np.full((4, 2), 1e200), np.ones(4), 1.0)


def test_duplicate_rows_ok():
    X = np.array([[0.1, 0.2]] * 5 + [[0.3, -0.1]])
    T = np.array([1.0] * 5 + [2.0])
    rng = np.random.default_rng(0)
    m = train_elm(ElmParams.random(10, 2, rng), X, T)
    assert np.all(np.isfinite(m.predict(X)))


def test_ridge_optimality_random():
    rng = np.random.default_rng(2)
    for _ in range(10):
        N, L = rng.integers(3, 30, size=2)
        H, T, C = rng.normal(size=(N, L)), rng.normal(size=N), 10 ** rng.uniform(-1, 3)
        beta = solve_beta(H, T, C)
        base = ridge_objective(beta, H, T, C)
        for _ in range(50):
            assert ridge_objective(beta + rng.normal(0, 1e-3, L), H, T, C) >= base


def test_relm_zero_residual_corrector():
    # one sample, one neuron per stage: the original fits closely but not exactly
    # at finite C; at huge C the residual is ~0 and the corrector adds nothing
    X = np.array([[0.0]])
    T = np.array([1.0])
    o = ElmParams([[1.0]], [0.0], C=1e12)
    r = ElmParams([[1.0]], [0.5], C=1.0)
    m = train_relm(o, r, X, T)
    assert abs(m.corrector.beta[0]) < 1e-10
    zero = RelmModel(m.original, ElmModel(r, np.zeros(1)))
    np.testing.assert_array_equal(zero.predict(X), m.original.predict(X))


def test_relm_exact_zero_targets_corrector():
    rng = np.random.default_rng(3)
    r = ElmParams.random(4, 2, rng)
    z = train_elm(r, rng.normal(size=(6, 2)), np.zeros(6))
    np.testing.assert_array_equal(z.beta, 0.0)


def test_relm_no_worse_and_disabled():
    rng = np.random.default_rng(4)
    for _ in range(20):
        X, T = rng.normal(size=(30, 3)), rng.normal(size=30)
        o, r = ElmParams.random(8, 3, rng), ElmParams.random(8, 3, rng)
        relm = train_relm(o, r, X, T)
        elm = train_elm(o, X, T)
        assert np.mean((relm.predict(X) - T) ** 2) <= np.mean((elm.predict(X) - T) ** 2) + 1e-12
        plain = train_relm(o, None, X, T)
        np.testing.assert_array_equal(plain.predict(X), elm.predict(X))


def test_single_sample_hand_case():
    h = 1 / (1 + np.exp(-0.5))
    t, C = 3.0, 2.0
    o = ElmParams([[1.0]], [0.0], C=C)
    m = train_relm(o, None, [[0.5]], [t])
    assert m.predict([[0.5]])[0] == pytest.approx(h * h * t / (h * h + 1 / C), abs=1e-14)


def test_batch_equals_loop_and_json_roundtrip():
    rng = np.random.default_rng(5)
    X, T = rng.normal(size=(20, 4)), rng.normal(size=20)
    m = train_relm(ElmParams.random(6, 4, rng), ElmParams.random(5, 4, rng, activation="sine"), X, T)
    batch = m.predict(X)
    loop = np.array([m.predict(x[None, :])[0] for x in X])
    np.testing.assert_allclose(batch, loop, atol=1e-12)
    back = RelmModel.from_json(m.to_json())
    np.testing.assert_array_equal(back.predict(X), batch)
    with pytest.raises(ValidationError):
        RelmModel.from_json('{"version": 99}')

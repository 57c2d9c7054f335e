import math

import numpy as np
import pytest

from rutnet.benchmarks import BENCHMARKS, rastrigin, rosenbrock, sphere
from rutnet.elm import ElmParams, train_relm
from rutnet.exceptions import ValidationError
from rutnet.swarm import (
    Particle,
    RelmShape,
    SwarmConfig,
    adapt_inertia,
    adapt_learning,
    decode_relm,
    evolution_rate,
    initial_positions,
    mse_fitness,
    optimize,
    optimize_relm,
    particle_capacity,
    population_capacity,
    step_kinematics,
)

CFG = SwarmConfig()


def _p(x, v, best):
    return Particle(np.array(x, float), np.array(v, float), np.array(best, float))


def test_kinematics_examples():
    rng = np.random.default_rng(0)
    p = _p([0.3, -0.2], [0, 0], [0.3, -0.2])
    q = step_kinematics(p, p.x.copy(), 0.7, 2, 2, rng)
    np.testing.assert_array_equal(q.x, p.x)
    np.testing.assert_array_equal(q.v, 0)
    q = step_kinematics(_p([0.0, 0.0], [0.1, 0.1], [0.5, 0.5]), np.array([0.5, 0.5]), 1, 0, 0, rng)
    np.testing.assert_allclose(q.x, [0.1, 0.1])
    q = step_kinematics(_p([0.0], [0.0], [1.0]), np.array([1.0]), 0.5, 2, 2, rng, r=0.5, R=0.5)
    assert q.v[0] == 1.0 and q.x[0] == 1.0
    with pytest.raises(ValidationError):
        step_kinematics(p, np.zeros(3), 1, 1, 1, rng)


def test_kinematics_clamps():
    rng = np.random.default_rng(1)
    q = step_kinematics(_p([0.9], [0.9], [-1.0]), np.array([-1.0]), 1.0, 2, 2, rng, x_max=1, v_max=0.5, r=0, R=0)
    assert q.v[0] == 0.5 and q.x[0] == 1.0


def test_capacities():
    assert particle_capacity(0.0, 10.0, 0.0) == 1.0
    assert particle_capacity(10.0, 10.0, 0.0) == 0.0
    assert particle_capacity(5.0, 10.0, 0.0) == 0.5
    assert particle_capacity(3.0, 3.0, 3.0) == 1.0
    assert particle_capacity(math.inf, 3.0, 1.0) == 0.0
    assert population_capacity(5.0, 5.0) == 0.0
    assert population_capacity(8.0, 10.0) == 2.0
    assert population_capacity(8.0) == 0.0


def test_rates_and_parameters():
    assert evolution_rate(0, 0) == 1.0
    assert evolution_rate(0, 1) == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    assert evolution_rate(1, 1) == pytest.approx(1 / math.sqrt(3), abs=1e-15)
    assert adapt_inertia(1.0) == pytest.approx(0.4, abs=1e-15)
    assert adapt_inertia(0.0) == 0.9
    assert adapt_inertia(1 / math.sqrt(2)) == pytest.approx(0.5464, abs=1e-4)
    assert adapt_learning(0.3, 0, CFG) == (2.0, 2.0)
    c1, c2 = adapt_learning(1.0, CFG.iterations, CFG)
    assert c1 == pytest.approx(1.2, abs=1e-15) and c2 == pytest.approx(2.8, abs=1e-15)
    assert adapt_learning(0.0, CFG.iterations, CFG) == (2.0, 2.0)


def test_mse_fitness():
    assert mse_fitness([1, 2], [1, 2]) == 0.0
    assert mse_fitness([1, 1], [0, 0]) == 1.0
    assert mse_fitness([1, 2], [3, 5]) == 6.5


def test_config_validation():
    with pytest.raises(ValidationError):
        SwarmConfig(variant="ga")
    with pytest.raises(ValidationError):
        SwarmConfig(w_min=0.9, w_max=0.4)
    with pytest.raises(ValidationError):
        SwarmConfig(population=0)


def test_single_particle_single_generation():
    cfg = SwarmConfig(iterations=1, population=1, seed=3)
    res = optimize(cfg, sphere, 4)
    x0 = initial_positions(cfg, 4)[0]
    np.testing.assert_array_equal(res.best_position, x0)
    assert res.best_fitness == sphere(x0)
    assert len(res.trace) == 1


def test_sphere_converges_and_is_reproducible():
    res = optimize(SwarmConfig(seed=1), sphere, 5)
    assert res.best_fitness <= 1e-3
    again = optimize(SwarmConfig(seed=1), sphere, 5)
    assert res.trace == again.trace
    assert all(b <= a for a, b in zip(res.trace, res.trace[1:]))


def test_workers_do_not_change_results():
    f = BENCHMARKS["rastrigin"].on_unit_box()
    a = optimize(SwarmConfig(iterations=15, population=12, seed=2, workers=1), f, 6)
    b = optimize(SwarmConfig(iterations=15, population=12, seed=2, workers=4), f, 6)
    assert a.trace == b.trace and a.best_position.tobytes() == b.best_position.tobytes()


def test_non_finite_fitness_never_best():
    def f(x):
        return math.nan if x[0] > 0 else float(np.sum(x * x))

    res = optimize(SwarmConfig(iterations=20, population=10), f, 3)
    assert math.isfinite(res.best_fitness) and res.best_position[0] <= 0


def test_states_within_bounds_and_variants():
    for variant in ("iapso", "fixed_weight", "linear_decreasing"):
        cfg = SwarmConfig(iterations=20, population=8, x_max=0.5, v_max=0.2, variant=variant)
        seen = []

        def check(state):
            for p in state.particles:
                assert np.all(np.abs(p.x) <= 0.5) and np.all(np.abs(p.v) <= 0.2)
                assert 0.4 - 1e-12 <= p.omega <= 0.9 + 1e-12
            seen.append(state.generation)

        res = optimize(cfg, sphere, 3, callback=check)
        assert len(res.trace) == 20 and seen[-1] == 19


def test_trace_csv(tmp_path):
    res = optimize(SwarmConfig(iterations=5, population=4), sphere, 2)
    res.write_trace(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "generation,gbest_fitness,mean_fitness" and len(lines) == 6


def test_benchmarks_at_optimum():
    assert sphere(np.zeros(10)) == 0
    assert rastrigin(np.zeros(10)) == 0
    assert rosenbrock(np.ones(10)) == 0
    f = BENCHMARKS["rosenbrock"].on_unit_box()
    assert f(np.ones(4) / 2.048) == pytest.approx(0, abs=1e-12)


def test_relm_encoding():
    shape = RelmShape(2, 9)
    assert shape.dimension == 40
    pos = np.linspace(-1, 1, 40)
    o, r = decode_relm(pos, shape)
    assert o.W.shape == (2, 9) and r.b.shape == (2,)
    np.testing.assert_array_equal(o.W.ravel(), pos[:18])
    np.testing.assert_array_equal(r.b, pos[38:])
    with pytest.raises(ValidationError):
        decode_relm(pos[:-1], shape)


def test_optimize_relm_consistency_and_gain():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(60, 3))
    y = np.sin(X[:, 0]) + 0.5 * X[:, 1] ** 2
    shape = RelmShape(6, 3)
    cfg = SwarmConfig(iterations=15, population=10, seed=4)
    model, res = optimize_relm(cfg, X, y, shape)
    assert mse_fitness(model.predict(X), y) == pytest.approx(res.best_fitness, abs=1e-12)
    o, r = decode_relm(initial_positions(cfg, shape.dimension)[0], shape)
    assert res.best_fitness <= mse_fitness(train_relm(o, r, X, y).predict(X), y)
    with pytest.raises(ValidationError):
        optimize_relm(cfg, np.zeros((0, 3)), np.zeros(0), shape)

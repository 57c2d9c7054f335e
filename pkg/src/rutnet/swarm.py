"""Particle swarm optimisation with independently adapted particle parameters.

Three update schedules share one engine:

``iapso``
    every particle carries its own inertia and learning factors, recomputed
    each generation from how good it is relative to the current swarm
    (particle capacity) and how much the global best just improved
    (population capacity);
``fixed_weight``
    constriction-style constants (0.729, 1.49445, 1.49445);
``linear_decreasing``
    inertia falling linearly from ``w_max`` to ``w_min`` with
    ``c1 = c1_max`` and ``c2 = c2_max``.

Fitness is minimised. Positions live in ``[-x_max, x_max]^D``.
"""

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .elm import ElmParams, train_relm
from .exceptions import NumericalError, ValidationError

VARIANTS = ("iapso", "fixed_weight", "linear_decreasing")

FIXED_INERTIA = 0.729
FIXED_LEARNING = 1.49445


@dataclass(frozen=True)
class SwarmConfig:
    iterations: int = 100
    population: int = 30
    x_max: float = 1.0
    v_max: float = 1.0
    w_max: float = 0.9
    w_min: float = 0.4
    c1_max: float = 2.0
    c1_min: float = 0.8
    c2_max: float = 2.0
    c2_min: float = 0.8
    variant: str = "iapso"
    seed: int = 0
    mutation_rate: float = 0.05
    random_scope: str = "particle"
    workers: int = 1

    def __post_init__(self):
        if self.iterations < 1 or self.population < 1:
            raise ValidationError("iterations and population must be >= 1")
        if not (self.x_max > 0 and self.v_max > 0):
            raise ValidationError("x_max and v_max must be positive")
        if not self.w_min < self.w_max:
            raise ValidationError("w_min must be below w_max")
        if self.c1_min > self.c1_max or self.c2_min > self.c2_max:
            raise ValidationError("learning factor minima must not exceed maxima")
        if self.variant not in VARIANTS:
            raise ValidationError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValidationError("mutation_rate must lie in [0, 1]")
        if self.random_scope not in ("particle", "dimension"):
            raise ValidationError("random_scope must be 'particle' or 'dimension'")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")


@dataclass
class Particle:
    x: np.ndarray
    v: np.ndarray
    best_x: np.ndarray
    best_f: float = math.inf
    omega: float = 0.0
    c1: float = 0.0
    c2: float = 0.0
    capacity: float = 0.0
    rate: float = 1.0


@dataclass
class SwarmState:
    particles: list
    gbest_x: np.ndarray
    gbest_f: float
    gbest_index: int
    lworst_f: float
    population_capacity: float
    generation: int
    fitness: np.ndarray


@dataclass
class OptimizeResult:
    best_position: np.ndarray
    best_fitness: float
    trace: list
    mean_trace: list = field(default_factory=list)

    def write_trace(self, path):
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["generation", "gbest_fitness", "mean_fitness"])
            for t, (g, m) in enumerate(zip(self.trace, self.mean_trace)):
                w.writerow([t, repr(float(g)), repr(float(m))])


# ----------------------------------------------------------------------------
# adaptive parameter algebra


def particle_capacity(f_i, p_lworst, p_lbest):
    """How close a particle is to the best of the current generation, in [0, 1]."""
    if not math.isfinite(f_i):
        return 0.0
    span = p_lworst - p_lbest
    if span <= 0:
        return 1.0
    return (p_lworst - f_i) / span


def population_capacity(gbest_t, gbest_prev=None):
    """Improvement of the global best since the previous generation (>= 0)."""
    if gbest_prev is None or not (math.isfinite(gbest_prev) and math.isfinite(gbest_t)):
        return 0.0
    return gbest_prev - gbest_t


def evolution_rate(e_g, e_i):
    return 1.0 / math.sqrt((e_g + e_i) ** 2 + (1.0 - 2.0 * e_g * e_i))


def adapt_inertia(rate, w_max=0.9, w_min=0.4):
    return (1.0 - rate) * w_max + rate * w_min


def adapt_learning(rate, t, cfg):
    s = math.sin(rate * math.pi / 2.0) * t / cfg.iterations
    return cfg.c1_max - cfg.c1_min * s, cfg.c2_max + cfg.c2_min * s


def mse_fitness(predictions, targets):
    predictions = np.asarray(predictions, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if predictions.shape != targets.shape:
        raise ValidationError(f"shape mismatch {predictions.shape} vs {targets.shape}")
    return float(np.mean((targets - predictions) ** 2))


# ----------------------------------------------------------------------------
# kinematics


def step_kinematics(p, gbest, omega, c1, c2, rng, x_max=1.0, v_max=1.0, r=None, R=None, scope="particle"):
    """One velocity/position update followed by hard clamping.

    Missing ``r`` and ``R`` are drawn from ``rng``: one uniform each for the
    whole particle (``scope="particle"``) or one per dimension.
    """
    d = len(p.x)
    if len(gbest) != d:
        raise ValidationError("gbest dimension does not match the particle")
    size = d if scope == "dimension" else None
    if r is None:
        r = rng.random(size)
    if R is None:
        R = rng.random(size)
    v = omega * p.v + c1 * r * (p.best_x - p.x) + c2 * R * (gbest - p.x)
    v = np.clip(v, -v_max, v_max)
    x = np.clip(p.x + v, -x_max, x_max)
    return replace(p, x=x, v=v)


def _particle_streams(seed, population):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(population)]


def initial_positions(cfg, dim):
    """Starting positions ``optimize`` would use for ``cfg`` (shape M x D)."""
    return np.array([rng.uniform(-cfg.x_max, cfg.x_max, dim) for rng in _particle_streams(cfg.seed, cfg.population)])


def _evaluate(fitness, xs, workers):
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            vals = list(pool.map(fitness, xs))
    else:
        vals = [fitness(x) for x in xs]
    out = np.array([float(v) for v in vals])
    out[~np.isfinite(out)] = math.inf
    return out


def _schedule(cfg, state):
    """Set omega/c1/c2 on every particle for the move out of ``state.generation``."""
    t = state.generation
    if cfg.variant == "fixed_weight":
        for p in state.particles:
            p.omega, p.c1, p.c2 = FIXED_INERTIA, FIXED_LEARNING, FIXED_LEARNING
        return
    if cfg.variant == "linear_decreasing":
        frac = t / (cfg.iterations - 1) if cfg.iterations > 1 else 1.0
        w = cfg.w_max - (cfg.w_max - cfg.w_min) * frac
        for p in state.particles:
            p.omega, p.c1, p.c2 = w, cfg.c1_max, cfg.c2_max
        return
    finite = state.fitness[np.isfinite(state.fitness)]
    best_now = finite.min() if finite.size else math.inf
    for p, f in zip(state.particles, state.fitness):
        p.capacity = particle_capacity(f, state.lworst_f, best_now)
        p.rate = evolution_rate(state.population_capacity, p.capacity)
        p.omega = adapt_inertia(p.rate, cfg.w_max, cfg.w_min)
        p.c1, p.c2 = adapt_learning(p.rate, t, cfg)


def optimize(cfg, fitness, dim, callback=None):
    """Minimise ``fitness`` over the box; returns an :class:`OptimizeResult`.

    Each particle owns a random stream spawned from ``cfg.seed``, so results
    do not depend on ``cfg.workers``. ``callback(state)`` is invoked after
    every generation's evaluation and again after its move.
    """
    if dim < 1:
        raise ValidationError("dimension must be >= 1")
    rngs = _particle_streams(cfg.seed, cfg.population)
    particles = []
    for rng in rngs:
        x = rng.uniform(-cfg.x_max, cfg.x_max, dim)
        v = rng.uniform(-cfg.v_max, cfg.v_max, dim)
        particles.append(Particle(x, v, x.copy()))
    gbest_x, gbest_f, g_idx = particles[0].x.copy(), math.inf, 0
    prev_gbest = None
    trace, mean_trace = [], []
    for t in range(cfg.iterations):
        f = _evaluate(fitness, [p.x for p in particles], cfg.workers)
        for p, fi in zip(particles, f):
            if fi < p.best_f:
                p.best_f, p.best_x = fi, p.x.copy()
        bests = np.array([p.best_f for p in particles])
        i = int(np.argmin(bests))
        if bests[i] < gbest_f or t == 0:
            gbest_f, gbest_x, g_idx = float(bests[i]), particles[i].best_x.copy(), i
        trace.append(gbest_f)
        finite = f[np.isfinite(f)]
        mean_trace.append(float(finite.mean()) if finite.size else math.inf)
        e_g = population_capacity(gbest_f, prev_gbest)
        if prev_gbest is not None and math.isfinite(prev_gbest):
            e_g /= 1.0 + abs(prev_gbest)
        state = SwarmState(
            particles,
            gbest_x,
            gbest_f,
            g_idx,
            float(finite.max()) if finite.size else math.inf,
            e_g,
            t,
            f,
        )
        prev_gbest = gbest_f
        if t == cfg.iterations - 1:
            if callback:
                callback(state)
            break
        _schedule(cfg, state)
        if callback:
            callback(state)
        for j, (p, rng) in enumerate(zip(particles, rngs)):
            moved = step_kinematics(
                p, gbest_x, p.omega, p.c1, p.c2, rng, cfg.x_max, cfg.v_max, scope=cfg.random_scope
            )
            p.x, p.v = moved.x, moved.v
            if rng.random() < cfg.mutation_rate and j != g_idx:
                p.x = rng.uniform(-cfg.x_max, cfg.x_max, dim)
        if callback:
            callback(state)
    return OptimizeResult(gbest_x, gbest_f, trace, mean_trace)


# ----------------------------------------------------------------------------
# RELM coupling


@dataclass(frozen=True)
class RelmShape:
    n_hidden: int = 64
    n_inputs: int = 9
    C_o: float = 100.0
    C_r: float = 100.0
    activation: str = "sigmoid"
    weight_scale: float = 1.0

    @property
    def block(self):
        return self.n_hidden * self.n_inputs + self.n_hidden

    @property
    def dimension(self):
        return 2 * self.block


def decode_relm(position, shape, x_max=1.0):
    """Split a particle position into original and corrector ELM parameters."""
    position = np.asarray(position, dtype=float)
    if position.shape != (shape.dimension,):
        raise ValidationError(f"position has shape {position.shape}, expected ({shape.dimension},)")
    z = position * (shape.weight_scale / x_max)
    L, n = shape.n_hidden, shape.n_inputs

    def block(offset, C):
        W = z[offset : offset + L * n].reshape(L, n)
        b = z[offset + L * n : offset + L * n + L]
        return ElmParams(W, b, C, shape.activation)

    return block(0, shape.C_o), block(shape.block, shape.C_r)


def relm_fitness(X, y, shape, x_max=1.0):
    def fitness(position):
        o, r = decode_relm(position, shape, x_max)
        try:
            model = train_relm(o, r, X, y)
        except NumericalError:
            return math.inf
        return mse_fitness(model.predict(X), y)

    return fitness


def optimize_relm(cfg, X, y, shape, callback=None):
    """Tune both hidden layers of a RELM by swarm search on training MSE.

    Returns ``(model, result)``; the model is the RELM decoded from the best
    position and re-solved in closed form on ``(X, y)``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(y) == 0:
        raise ValidationError("training set is empty")
    if X.shape[1] != shape.n_inputs:
        shape = replace(shape, n_inputs=X.shape[1])
    result = optimize(cfg, relm_fitness(X, y, shape, cfg.x_max), shape.dimension, callback)
    o, r = decode_relm(result.best_position, shape, cfg.x_max)
    return train_relm(o, r, X, y), result

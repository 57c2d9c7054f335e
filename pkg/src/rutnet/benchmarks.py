"""Standard test functions for comparing swarm variants.

Each function is evaluated on its conventional domain; ``on_unit_box``
rescales it so a swarm searching ``[-x_max, x_max]^D`` covers that domain.
"""

from dataclasses import dataclass

import numpy as np


def sphere(x):
    x = np.asarray(x, dtype=float)
    return float(np.dot(x, x))


def rastrigin(x):
    x = np.asarray(x, dtype=float)
    return float(10.0 * len(x) + np.sum(x * x - 10.0 * np.cos(2.0 * np.pi * x)))


def rosenbrock(x):
    x = np.asarray(x, dtype=float)
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))


@dataclass(frozen=True)
class Benchmark:
    name: str
    func: object
    half_width: float

    def on_unit_box(self, x_max=1.0):
        scale = self.half_width / x_max
        func = self.func
        return lambda x: func(np.asarray(x) * scale)


BENCHMARKS = {
    "sphere": Benchmark("sphere", sphere, 5.12),
    "rastrigin": Benchmark("rastrigin", rastrigin, 5.12),
    "rosenbrock": Benchmark("rosenbrock", rosenbrock, 2.048),
}

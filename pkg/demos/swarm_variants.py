"""Three inertia/learning schedules on standard test functions.

Each function is mapped onto the swarm's [-1, 1]^10 box from its usual
domain. Also writes one convergence trace as plot-ready CSV.
"""

import numpy as np

from rutnet.benchmarks import BENCHMARKS
from rutnet.swarm import VARIANTS, SwarmConfig, optimize

for name, bench in BENCHMARKS.items():
    f = bench.on_unit_box()
    line = [f"{name:<11}"]
    for variant in VARIANTS:
        finals = [optimize(SwarmConfig(variant=variant, seed=s), f, 10).best_fitness for s in range(5)]
        line.append(f"{variant}={np.median(finals):.4g}")
    print("  ".join(line))

res = optimize(SwarmConfig(seed=0), BENCHMARKS["rastrigin"].on_unit_box(), 10)
res.write_trace("rastrigin_trace.csv")
print(f"trace: {len(res.trace)} generations, final {res.trace[-1]:.4g} -> rastrigin_trace.csv")

"""Spread of predictions across retrainings with different random weights.

The pool is the community containing STR1, as found by clustering.
"""

import tempfile

from rutnet import pipeline

out = tempfile.mkdtemp(prefix="rutnet-")
cfg = pipeline.RunConfig().with_overrides(
    [f"output_dir={out}", "seed=4", "swarm.iterations=20", "swarm.population=10"]
)
pipeline.cmd_synth(cfg)
pipeline.cmd_cluster(cfg)
result, members = pipeline.uncertainty_study(cfg, trials=10)
print("pool:", ", ".join(members))
for model, v in result.items():
    print(f"{model:<11} train {v['train']:.5f}   test {v['test']:.5f}")

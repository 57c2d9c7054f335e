"""Single, pooled and community-pooled training, end to end through files.

Uses the same stage functions as the command-line tool, with a small swarm
so it finishes in well under a minute.
"""

import tempfile

from rutnet import pipeline

out = tempfile.mkdtemp(prefix="rutnet-")
cfg = pipeline.RunConfig().with_overrides(
    [f"output_dir={out}", "seed=2", "swarm.iterations=20", "swarm.population=10"]
)
pipeline.cmd_synth(cfg)
clusters = pipeline.cmd_cluster(cfg)
print(f"{clusters.partition.n_communities} communities, ARI {clusters.ari:.2f}")

for mode in pipeline.MODES:
    rep = pipeline.cmd_train(cfg, mode)
    print(f"{mode:<11} RMSE {rep.rmse:.4f}  MAE {rep.mae:.4f}  MAPE {rep.mape:.2f}%")

print(open(f"{out}/metrics_equivalent.txt").read())
print("files in", out)

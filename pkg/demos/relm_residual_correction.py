"""What the residual stage of a RELM buys over a plain ELM.

Both models share the same original hidden layer; the RELM adds a second
ELM fitted to the first one's training residuals.
"""

import numpy as np

from rutnet import data as D
from rutnet.elm import ElmParams, train_elm, train_relm
from rutnet.evaluation import rmse

ds = D.synthesize_dataset(1, 4, 94, seed=3)
recs = D.smooth_records(ds.records)
sets = [D.build_samples(r) for r in recs]
boundary = D.resolve_boundary(sets, D.SplitSpec(0.8))
splits = [D.chronological_split(s, D.SplitSpec(boundary_period=boundary)) for s in sets]
train = D.SampleSet.concat("pool", [tr for tr, _ in splits])
test = D.SampleSet.concat("test", [te for _, te in splits])
st = D.Standardizer().fit(train.X)
Xtr, Xte = st.transform(train.X), st.transform(test.X)

rows = []
for k in range(10):
    rng = np.random.default_rng(k)
    o, r = ElmParams.random(64, 9, rng), ElmParams.random(64, 9, rng)
    elm, relm = train_elm(o, Xtr, train.y), train_relm(o, r, Xtr, train.y)
    rows.append([rmse(elm.predict(Xtr), train.y), rmse(relm.predict(Xtr), train.y),
                 rmse(elm.predict(Xte), test.y), rmse(relm.predict(Xte), test.y)])
rows = np.array(rows)
print("           train RMSE   test RMSE")
print(f"ELM        {rows[:, 0].mean():.4f}       {rows[:, 2].mean():.4f}")
print(f"RELM       {rows[:, 1].mean():.4f}       {rows[:, 3].mean():.4f}")
# the training error can only go down; test error usually follows

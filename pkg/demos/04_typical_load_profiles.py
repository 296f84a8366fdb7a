# %% [markdown]
# # Typical load profiles by DTW barycenter averaging
#
# The representative of a cluster should look like its members. A plain
# pointwise mean of time-shifted peaks flattens them; DBA instead aligns every
# member to the current center and averages the aligned values, repeating
# until the center stops moving.

# %%
import numpy as np

from loadnet.centers import dba, medoid
from loadnet.dtw import dtw_batch, pairwise_distances
from loadnet.synth import TEMPLATES

rng = np.random.default_rng(3)
shape = TEMPLATES["evening_peak"] / TEMPLATES["evening_peak"].sum()
X = np.vstack([np.roll(shape, s) * (1 + 0.05 * rng.standard_normal(96)) for s in rng.integers(-3, 4, 25)])
X /= X.sum(axis=1, keepdims=True)

start = X[medoid(range(len(X)), pairwise_distances(X, 4))]
tlp = dba(X, start, 4)
print("iterations:", tlp.iterations)
print("cost per iteration:", np.round(tlp.cost_history, 6))

# %% [markdown]
# Compare the peak height and the within-cluster squared DTW cost of three
# candidate centers.

# %%
def cost(c):
    return float(np.sum(dtw_batch(np.broadcast_to(c, X.shape), X, 4, "squared")))


for name, c in [("pointwise mean", X.mean(axis=0)), ("medoid", start), ("DBA", tlp.values)]:
    print(f"{name:15s} peak={c.max():.4f}  cost={cost(c):.6f}")
print(f"{'template':15s} peak={shape.max():.4f}")

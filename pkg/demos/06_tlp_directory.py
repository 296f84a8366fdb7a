# %% [markdown]
# # A multi-layer directory of typical load profiles
#
# One clustering rarely serves every purpose: a planner wants a handful of
# archetypes, an analyst wants hundreds of fine shapes. Sweeping gamma
# downwards produces partitions of growing k; for each k-interval the
# directory keeps the partition with the best VCN.

# %%
import math

from loadnet.directory import build_directory, gamma_grid, gamma_sweep
from loadnet.dtw import pairwise_distances
from loadnet.ingest import as_matrix, normalize_all
from loadnet.netbuild import build_graph
from loadnet.synth import SynthSpec, generate

corpus = generate(SynthSpec(curves_per_template=30, noise_sigma=0.1, seed=4))
ids, X = as_matrix(normalize_all(corpus.curves))
dm = pairwise_distances(X, 4)
g = build_graph(dm, 0.5)

sweep = gamma_sweep(g, X, dm, gamma_grid(1.0, 0.05, 0.05))
for p in sweep:
    print(f"gamma={p.gamma:4.2f}  k={p.k:4d}  VCN={p.vcn:6.3f}  variance={p.variance:.2e}")

# %% [markdown]
# Finer layers explain more of each curve, so within-cluster variance falls
# as the layer's cluster count rises.

# %%
directory = build_directory(sweep, [(1, 10), (10, 50), (50, math.inf)])
for layer in directory.layers:
    lo, hi = layer.interval
    if layer.empty:
        print(f"[{lo}, {hi}): empty")
    else:
        print(f"[{lo}, {hi}): gamma={layer.point.gamma:.2f} k={layer.k} variance={layer.variance:.2e}")

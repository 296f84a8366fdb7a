# %% [markdown]
# # Scoring communities against a K-medoids baseline
#
# For each community count found by Louvain, K-medoids is run with the same
# k on the same DTW matrix. Both partitions are scored with internal validity
# indices and with consumer entropy: how many different clusters a
# household's days fall into. Lower DB, S_Dbw and COP are better; higher VCN
# and SF are better.

# %%
import numpy as np

from loadnet.baseline import match_cluster_counts
from loadnet.centers import extract_tlps, tlp_matrix
from loadnet.community import louvain
from loadnet.dtw import pairwise_distances
from loadnet.ingest import as_matrix, normalize_all
from loadnet.netbuild import build_graph
from loadnet.synth import SynthSpec, generate
from loadnet.validity import evaluate

corpus = generate(SynthSpec(curves_per_template=40, noise_sigma=0.1, seed=2))
ids, X = as_matrix(normalize_all(corpus.curves))
households = [c.household_id for c in corpus.curves]
dm = pairwise_distances(X, 4)
g = build_graph(dm, 0.5)

# %%
print(f"{'gamma':>5s} {'method':9s} {'k':>3s} {'DB':>7s} {'VCN':>7s} {'S_Dbw':>7s} "
      f"{'SF':>7s} {'COP':>7s} {'entropy':>7s}")
for gamma in (1.0, 0.3, 0.1):
    part = louvain(g, gamma).partition
    if part.k < 2:
        continue
    cicd = evaluate(part, tlp_matrix(extract_tlps(part, X, dm, 4)), X, dm, households)
    km = match_cluster_counts(part.k, dm)
    base = evaluate(km.partition, X[km.label_medoids], X, dm, households, "medoid")
    for name, r in (("cicd", cicd), ("kmedoids", base)):
        print(f"{gamma:5.2f} {name:9s} {r.k:3d} {r.db:7.3f} {r.vcn:7.3f} {r.s_dbw:7.3f} "
              f"{r.sf:7.3f} {r.cop:7.3f} {r.mean_entropy:7.3f}")

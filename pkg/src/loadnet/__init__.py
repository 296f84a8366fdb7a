"""Load-curve clustering through DTW epsilon-NN networks and Louvain communities."""

__version__ = "0.1.0"

from .baseline import KMedoidsResult, k_medoids, match_cluster_counts
from .centers import TypicalLoadProfile, dba, dba_many, extract_tlps, medoid, tlp_matrix
from .community import (CommunityAggregates, LouvainResult, Partition, delta_q, louvain,
                        modularity, quality)
from .directory import (SweepPoint, TLPDirectory, build_directory, gamma_grid, gamma_sweep,
                        within_cluster_variance)
from .dtw import DistanceMatrix, dtw_batch, dtw_distance, dtw_path, pairwise_distances
from .ingest import (LoadCurve, MeterReading, NormalizedCurve, SkipReport, as_matrix,
                     assemble_days, normalize, normalize_all, parse_readings)
from .netbuild import WeightedGraph, build_graph, vertex_thresholds
from .synth import SynthSpec, adjusted_rand, generate
from .validity import (ValidityReport, consumer_entropy, cop, davies_bouldin, evaluate,
                       s_dbw, score_function, vcn)

"""Batch command line: one subcommand per pipeline stage.

All artifacts live in one output directory.  Every stage writes
``<stage>.manifest.json`` with the hash of its config, the sha256 of each input
and output, and the package version.  A stage whose manifest still matches is
skipped; a stage reading an upstream artifact first checks it against the
producer's manifest (and the producer's own inputs), so edited or outdated
intermediates are reported instead of silently used.

Exit codes: 0 success, 1 usage error (bad flags, missing or stale upstream
artifact), 2 data error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .baseline import k_medoids, match_cluster_counts
from .centers import extract_tlps, tlp_matrix, write_tlps
from .community import Partition, louvain
from .directory import SweepPoint, build_directory, gamma_grid, gamma_sweep, write_sweep
from .dtw import DistanceMatrix, pairwise_distances
from .errors import DataError, MissingArtifact, StaleArtifact
from .ingest import as_matrix, assemble_days, normalize_all, parse_readings, read_curves, write_curves
from .netbuild import WeightedGraph, build_graph
from .synth import SynthSpec, generate
from .validity import REPORT_FIELDS, evaluate

log = logging.getLogger("loadnet")

DEFAULTS = {
    "input": None,
    "out": "run",
    "w": 4,
    "cost": "abs",
    "lambda": 0.5,
    "edge_rule": "union",
    "gamma": 1.0,
    "gamma_start": 1.00,
    "gamma_end": 0.70,
    "gamma_step": 0.01,
    "resolution": "literal",
    "intervals": "1-10,10-100,100-inf",
    "sf_mode": "difference",
    "density_mode": "published",
    "method": "both",
    "k": None,
    "seed": 0,
    "kmedoids_init": "farthest",
    "baseline_centers": "medoid",
    "threads": 1,
    "curves_per_template": 100,
    "noise_sigma": 0.1,
    "days_per_household": 10,
}
TYPES = {"w": int, "lambda": float, "gamma": float, "gamma_start": float, "gamma_end": float,
         "gamma_step": float, "k": int, "seed": int, "threads": int, "curves_per_template": int,
         "noise_sigma": float, "days_per_household": int}
CHOICES = {"cost": ("abs", "squared"), "edge_rule": ("union", "intersection", "global"),
           "resolution": ("literal", "standard"), "sf_mode": ("difference", "sum"),
           "density_mode": ("published", "literal"), "method": ("cicd", "kmedoids", "both"),
           "kmedoids_init": ("farthest", "random"), "baseline_centers": ("medoid", "dba")}

HELP = {
    "input": "readings CSV file(s); defaults to readings.csv from `synth`",
    "out": "artifact directory",
    "w": "DTW band: cells with |i-j| >= w are forbidden",
    "cost": "per-cell DTW cost",
    "lambda": "epsilon multiplier on the mean distance",
    "edge_rule": "how per-vertex thresholds combine into undirected edges",
    "gamma": "Louvain resolution",
    "gamma_start": "first (largest) gamma of the sweep",
    "gamma_end": "last (smallest) gamma of the sweep",
    "gamma_step": "sweep step",
    "resolution": "literal: gamma scales k_in; standard: gamma scales the null model",
    "intervals": "cluster-count intervals, e.g. 1-10,10-100,100-inf",
    "sf_mode": "score-function exponent: bcd-wcd (difference) or bcd+wcd (sum)",
    "density_mode": "S_Dbw density: count points within stdev (published) or beyond it (literal)",
    "method": "which partition(s) to score",
    "k": "K-medoids cluster count; defaults to the community count from `cluster`",
    "seed": "seed for synth and random K-medoids init",
    "kmedoids_init": "K-medoids seeding",
    "baseline_centers": "centers used to score the K-medoids partition",
    "threads": "worker threads (results do not depend on it)",
    "curves_per_template": "synthetic curves per template",
    "noise_sigma": "synthetic noise, as a fraction of the template peak",
    "days_per_household": "consecutive synthetic days per household",
}

STAGE_KEYS = {
    "synth": ["curves_per_template", "noise_sigma", "days_per_household", "seed"],
    "ingest": [],
    "distances": ["w", "cost"],
    "graph": ["lambda", "edge_rule"],
    "cluster": ["gamma", "resolution"],
    "tlp": ["w"],
    "baseline": ["k", "seed", "kmedoids_init"],
    "validate": ["method", "k", "w", "cost", "sf_mode", "density_mode", "seed", "kmedoids_init",
                 "baseline_centers"],
    "sweep": ["gamma_start", "gamma_end", "gamma_step", "resolution", "w", "cost"],
    "directory": ["intervals", "w", "cost"],
}
PRODUCER = {
    "readings.csv": "synth", "labels.csv": "synth",
    "curves.csv": "ingest", "skip_report.json": "ingest",
    "distances.bin": "distances", "distances.bin.ids.json": "distances",
    "graph_edges.csv": "graph", "graph.json": "graph",
    "partition.csv": "cluster", "cluster.json": "cluster",
    "tlp.csv": "tlp",
    "baseline_partition.csv": "baseline", "baseline.json": "baseline",
    "sweep.csv": "sweep", "sweep_partitions.csv": "sweep",
}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- config


def _coerce(key, value):
    if value is None or (isinstance(value, str) and value.lower() in ("", "none")):
        return None
    if key in TYPES:
        try:
            return TYPES[key](value)
        except ValueError:
            raise UsageError(f"{key}: expected {TYPES[key].__name__}, got {value!r}") from None
    if key in CHOICES and value not in CHOICES[key]:
        raise UsageError(f"{key}: expected one of {', '.join(CHOICES[key])}, got {value!r}")
    return value


def read_config_file(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def resolve_config(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(read_config_file(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if isinstance(value, list):
            value = ",".join(value)
        if value is not None:
            cfg[key] = value
    cfg = {k: _coerce(k, v) for k, v in cfg.items()}
    if cfg["w"] < 1:
        raise UsageError("w must be >= 1")
    if cfg["lambda"] <= 0:
        raise UsageError("lambda must be positive")
    if cfg["threads"] < 1:
        raise UsageError("threads must be >= 1")
    if cfg["gamma_step"] <= 0 or cfg["gamma_start"] < cfg["gamma_end"] or cfg["gamma_end"] <= 0:
        raise UsageError("need gamma_start >= gamma_end > 0 and gamma_step > 0")
    parse_intervals(cfg["intervals"])
    return cfg


def parse_intervals(text):
    out = []
    for part in str(text).split(","):
        try:
            lo, hi = part.strip().split("-")
            out.append((int(lo), math.inf if hi.strip().lower() in ("inf", "") else int(hi)))
        except ValueError:
            raise UsageError(f"bad interval {part!r}; use e.g. 1-10,10-100,100-inf") from None
    return out


# -------------------------------------------------------------- manifests


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _config_hash(stage, cfg):
    sub = {k: cfg[k] for k in STAGE_KEYS[stage]}
    return hashlib.sha256(json.dumps(sub, sort_keys=True).encode()).hexdigest(), sub


def _manifest_path(out, stage):
    return out / f"{stage}.manifest.json"


def _load_manifest(out, stage):
    p = _manifest_path(out, stage)
    if not p.exists():
        return None
    return json.loads(p.read_text(encoding="utf-8"))


def require(out, name) -> Path:
    """Path of an upstream artifact after checking it against its producer's manifest."""
    path = out / name
    stage = PRODUCER[name]
    if not path.exists():
        raise MissingArtifact(f"{path} not found; run `loadnet {stage}` first")
    man = _load_manifest(out, stage)
    if man is None or name not in man["outputs"]:
        raise StaleArtifact(f"{path} has no manifest entry; re-run `loadnet {stage}`")
    if sha256(path) != man["outputs"][name]:
        raise StaleArtifact(f"{path} changed since `loadnet {stage}` wrote it; re-run that stage")
    for dep, digest in man["inputs"].items():
        dep_path = out / dep
        if dep in PRODUCER and (not dep_path.exists() or sha256(dep_path) != digest):
            raise StaleArtifact(f"{path} was built from an older {dep}; re-run `loadnet {stage}`")
    return path


def _up_to_date(out, stage, cfg, inputs):
    man = _load_manifest(out, stage)
    if man is None or man.get("version") != __version__:
        return False
    if man["config_hash"] != _config_hash(stage, cfg)[0]:
        return False
    if any(not p.exists() for p in inputs.values()):
        return False
    for name in inputs:
        if name in PRODUCER:
            require(out, name)  # an input that is itself outdated is an error, not a skip
    if man["inputs"] != {name: sha256(p) for name, p in inputs.items()}:
        return False
    return all((out / name).exists() and sha256(out / name) == digest
               for name, digest in man["outputs"].items())


def _input_paths(cfg, out):
    """Readings files for ingest: ``input`` (comma-separated) or the synth output."""
    if cfg["input"] is None:
        return {"readings.csv": out / "readings.csv"}
    return {p.strip(): Path(p.strip()) for p in str(cfg["input"]).split(",") if p.strip()}


def _recorded_inputs(man, cfg, out):
    """Current paths of the inputs a manifest lists."""
    if man["stage"] == "ingest":
        return _input_paths(cfg, out)
    return {name: out / name for name in man["inputs"]}


def _write_manifest(out, stage, cfg, inputs, outputs):
    digest, sub = _config_hash(stage, cfg)
    man = {"stage": stage, "version": __version__, "config_hash": digest, "config": sub,
           "inputs": {name: sha256(p) for name, p in inputs.items()},
           "outputs": {name: sha256(out / name) for name in outputs}}
    _manifest_path(out, stage).write_text(json.dumps(man, indent=2, sort_keys=True) + "\n",
                                          encoding="utf-8")


def _dump_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _g12(x):
    return None if x is None or not math.isfinite(x) else float(f"{x:.12g}")


# ----------------------------------------------------------------- loaders


def _curves(out):
    curves = read_curves(require(out, "curves.csv"))
    normed = normalize_all(curves)
    by_id = {c.curve_id: c for c in curves}
    ids, X = as_matrix(normed)
    households = [by_id[i].household_id for i in ids]
    return ids, X, households


def _distances(out, ids):
    dm = DistanceMatrix.load(require(out, "distances.bin"))
    require(out, "distances.bin.ids.json")
    if list(dm.curve_ids) != list(ids):
        raise StaleArtifact("distance matrix curve ids differ from curves.csv; re-run `loadnet distances`")
    return dm


def _cicd_partition(out, ids):
    part, pids = Partition.read(require(out, "partition.csv"))
    if pids != list(ids):
        raise StaleArtifact("partition.csv does not cover curves.csv; re-run `loadnet cluster`")
    return part


# ----------------------------------------------------------------- stages


def stage_synth(cfg, out):
    spec = SynthSpec(curves_per_template=cfg["curves_per_template"], noise_sigma=cfg["noise_sigma"],
                     days_per_household=cfg["days_per_household"], seed=cfg["seed"])
    generate(spec).write(out / "readings.csv", out / "labels.csv")
    return {}, ["readings.csv", "labels.csv"]


def stage_ingest(cfg, out):
    inputs = _input_paths(cfg, out)
    if cfg["input"] is None:
        require(out, "readings.csv")
    readings = []
    for name, src in inputs.items():
        if not src.exists():
            raise UsageError(f"input file {src} not found")
        with open(src, "rb") as fh:
            rows, problems = parse_readings(fh)
        readings += rows
        for p in problems:
            log.warning("%s: %s", name, p)
    curves, report = assemble_days(readings)
    normed = normalize_all(curves, report)
    kept = {c.curve_id for c in normed}
    write_curves([c for c in curves if c.curve_id in kept], out / "curves.csv")
    (out / "skip_report.json").write_text(report.to_json() + "\n", encoding="utf-8")
    log.info("ingested %d curves (%s)", len(normed), report.to_json())
    return inputs, ["curves.csv", "skip_report.json"]


def stage_distances(cfg, out):
    ids, X, _ = _curves(out)
    dm = pairwise_distances(X, cfg["w"], cfg["cost"], curve_ids=ids, threads=cfg["threads"])
    dm.save(out / "distances.bin")
    return {"curves.csv": out / "curves.csv"}, ["distances.bin", "distances.bin.ids.json"]


def stage_graph(cfg, out):
    ids, _, _ = _curves(out)
    dm = _distances(out, ids)
    g = build_graph(dm, cfg["lambda"], cfg["edge_rule"])
    g.write(out / "graph_edges.csv", out / "graph.json")
    log.info("graph: %d vertices, %d edges", g.n, g.n_edges)
    return {"distances.bin": out / "distances.bin"}, ["graph_edges.csv", "graph.json"]


def _graph(out):
    return WeightedGraph.read(require(out, "graph_edges.csv"), require(out, "graph.json"))


def stage_cluster(cfg, out):
    g = _graph(out)
    res = louvain(g, cfg["gamma"], cfg["resolution"])
    res.partition.write(out / "partition.csv", g.curve_ids)
    res.write_meta(out / "cluster.json")
    log.info("gamma=%g: k=%d, Q=%.6f", cfg["gamma"], res.k, res.q_history[-1])
    return {"graph_edges.csv": out / "graph_edges.csv", "graph.json": out / "graph.json"}, \
        ["partition.csv", "cluster.json"]


def stage_tlp(cfg, out):
    ids, X, _ = _curves(out)
    dm = _distances(out, ids)
    part = _cicd_partition(out, ids)
    write_tlps(extract_tlps(part, X, dm, cfg["w"]), out / "tlp.csv")
    return {n: out / n for n in ("curves.csv", "distances.bin", "partition.csv")}, ["tlp.csv"]


def _matched_k(cfg, out):
    if cfg["k"] is not None:
        return cfg["k"]
    meta = json.loads(require(out, "cluster.json").read_text(encoding="utf-8"))
    return meta["k"]


def stage_baseline(cfg, out):
    ids, _, _ = _curves(out)
    dm = _distances(out, ids)
    inputs = {"distances.bin": out / "distances.bin"}
    if cfg["k"] is None:
        inputs["cluster.json"] = out / "cluster.json"
        res = match_cluster_counts(_matched_k(cfg, out), dm, cfg["seed"], init=cfg["kmedoids_init"])
        if res is None:
            raise DataError("community detection found a single cluster; nothing to compare against")
    else:
        res = k_medoids(dm, cfg["k"], cfg["seed"], init=cfg["kmedoids_init"])
    res.partition.write(out / "baseline_partition.csv", ids)
    res.write_meta(out / "baseline.json", ids)
    return inputs, ["baseline_partition.csv", "baseline.json"]


def stage_validate(cfg, out):
    ids, X, households = _curves(out)
    dm = _distances(out, ids)
    opts = dict(w=cfg["w"], cost=cfg["cost"], sf_mode=cfg["sf_mode"], density=cfg["density_mode"])
    inputs = {"curves.csv": out / "curves.csv", "distances.bin": out / "distances.bin"}
    reports = []
    if cfg["method"] in ("cicd", "both"):
        part = _cicd_partition(out, ids)
        inputs["partition.csv"] = out / "partition.csv"
        C = tlp_matrix(extract_tlps(part, X, dm, cfg["w"]))
        rep = evaluate(part, C, X, dm, households, "averaged", **opts)
        reports.append(("cicd", rep))
    if cfg["method"] in ("kmedoids", "both"):
        k = _matched_k(cfg, out)
        if cfg["k"] is None:
            inputs["cluster.json"] = out / "cluster.json"
        res = match_cluster_counts(k, dm, cfg["seed"], init=cfg["kmedoids_init"])
        if res is None:
            raise DataError("k < 2: validity indices are undefined")
        if cfg["baseline_centers"] == "dba":
            C, mode = tlp_matrix(extract_tlps(res.partition, X, dm, cfg["w"])), "averaged"
        else:
            C, mode = X[res.label_medoids], "medoid"
        rep = evaluate(res.partition, C, X, dm, households, mode, **opts)
        reports.append(("kmedoids", rep))
    _dump_json([dict(method=m, **r.as_dict()) for m, r in reports], out / "validity.json")
    with open(out / "validity.csv", "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["method"] + list(REPORT_FIELDS))
        for m, r in reports:
            wr.writerow([m] + r.csv_row())
    return inputs, ["validity.json", "validity.csv"]


def stage_sweep(cfg, out):
    ids, X, _ = _curves(out)
    dm = _distances(out, ids)
    g = _graph(out)
    grid = gamma_grid(cfg["gamma_start"], cfg["gamma_end"], cfg["gamma_step"])
    points = gamma_sweep(g, X, dm, grid, cfg["w"], cfg["cost"], cfg["resolution"], cfg["threads"])
    write_sweep(points, out / "sweep.csv")
    with open(out / "sweep_partitions.csv", "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["curve_id"] + [f"{p.gamma:.12g}" for p in points])
        cols = np.column_stack([p.partition.labels for p in points])
        for cid, row in zip(ids, cols.tolist()):
            wr.writerow([cid] + row)
    inputs = {n: out / n for n in ("curves.csv", "distances.bin", "graph_edges.csv")}
    return inputs, ["sweep.csv", "sweep_partitions.csv"]


def _read_sweep(out, ids, X, dm, cfg):
    rows = list(csv.DictReader(open(require(out, "sweep.csv"), newline="", encoding="utf-8")))
    with open(require(out, "sweep_partitions.csv"), newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        table = [[int(v) for v in r] for r in reader]
    table = np.array(table, dtype=int)
    if table[:, 0].tolist() != list(ids):
        raise StaleArtifact("sweep_partitions.csv does not cover curves.csv; re-run `loadnet sweep`")
    points = []
    for col, row in enumerate(rows, start=1):
        vcn = float(row["vcn"]) if row["vcn"] else math.nan
        points.append(SweepPoint(float(row["gamma"]), int(row["k"]), vcn, float(row["Q"]),
                                 Partition(table[:, col]), float(row["variance"])))
    return points


def stage_directory(cfg, out):
    ids, X, _ = _curves(out)
    dm = _distances(out, ids)
    points = _read_sweep(out, ids, X, dm, cfg)
    directory = build_directory(points, parse_intervals(cfg["intervals"]))
    for layer in directory.nonempty():
        layer.point.tlps = extract_tlps(layer.point.partition, X, dm, cfg["w"])
    directory.write(out / "directory", ids)
    outputs = ["directory/manifest.json"]
    for i, layer in enumerate(directory.layers):
        if not layer.empty:
            outputs += [f"directory/layer{i}_tlp.csv", f"directory/layer{i}_partition.csv"]
    inputs = {n: out / n for n in ("curves.csv", "distances.bin", "sweep.csv", "sweep_partitions.csv")}
    return inputs, outputs


STAGES = {
    "synth": (stage_synth, "generate a labelled synthetic corpus (readings.csv, labels.csv)"),
    "ingest": (stage_ingest, "parse readings into complete, normalizable daily curves"),
    "distances": (stage_distances, "banded-DTW pairwise distance matrix"),
    "graph": (stage_graph, "epsilon-NN network over the distance matrix"),
    "cluster": (stage_cluster, "Louvain communities at one gamma"),
    "tlp": (stage_tlp, "DBA typical load profile per community"),
    "baseline": (stage_baseline, "K-medoids with the community count (or --k)"),
    "validate": (stage_validate, "validity indices for cicd, kmedoids or both"),
    "sweep": (stage_sweep, "Louvain over a descending gamma grid, scored by VCN"),
    "directory": (stage_directory, "best-VCN layer per cluster-count interval"),
}

STAGE_FLAGS = {
    "synth": ["curves_per_template", "noise_sigma", "days_per_household", "seed"],
    "ingest": ["input"],
    "distances": ["w", "cost", "threads"],
    "graph": ["lambda", "edge_rule"],
    "cluster": ["gamma", "resolution"],
    "tlp": ["w"],
    "baseline": ["k", "seed", "kmedoids_init"],
    "validate": ["method", "k", "w", "cost", "sf_mode", "density_mode", "seed", "kmedoids_init",
                 "baseline_centers"],
    "sweep": ["gamma_start", "gamma_end", "gamma_step", "resolution", "w", "cost", "threads"],
    "directory": ["intervals", "w", "cost"],
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser():
    parser = _Parser(prog="loadnet", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"loadnet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in STAGES.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="key = value config file (flags override it)")
        p.add_argument("--out", help="artifact directory (default: run)")
        p.add_argument("--force", action="store_true", help="recompute even if up to date")
        p.add_argument("-v", "--verbose", action="store_true")
        for key in STAGE_FLAGS[name]:
            flag = "--" + key.replace("_", "-")
            kw = {"dest": key, "default": None, "help": f"{HELP[key]} (default: {DEFAULTS[key]})"}
            if key in CHOICES:
                kw["choices"] = CHOICES[key]
            if key == "input":
                kw["nargs"] = "+"
            p.add_argument(flag, **kw)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                            format="%(levelname)s %(message)s")
        cfg = resolve_config(args)
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        fn = STAGES[args.command][0]
        man = _load_manifest(out, args.command)
        if man and not args.force and _up_to_date(out, args.command, cfg,
                                                    _recorded_inputs(man, cfg, out)):
            log.info("%s: up to date", args.command)
            return 0
        inputs, outputs = fn(cfg, out)
        _write_manifest(out, args.command, cfg, inputs, outputs)
        return 0
    except (UsageError, MissingArtifact, StaleArtifact) as exc:
        print(f"loadnet: error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"loadnet: data error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()

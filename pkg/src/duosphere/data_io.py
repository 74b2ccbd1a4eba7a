"""Neutral dataset directory format, experiment splits, and the synthetic
planted-anomaly generator."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graph import Graph, adjacency, build_graph

# Synthetic label scheme: class 0 is normal; 1/2/3 are the planted kinds.
SYNTH_CLASSES = ["normal", "structure_anomaly", "attribute_anomaly",
                 "combined_anomaly"]


class DatasetError(ValueError):
    pass


@dataclass
class DatasetBundle:
    graph: Graph
    class_names: list[str]
    provenance: dict = field(default_factory=dict)


@dataclass
class SplitSpec:
    normal_class: int
    seed: int
    train_idx: np.ndarray
    val_idx: np.ndarray
    val_truth: np.ndarray
    test_idx: np.ndarray
    test_truth: np.ndarray


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def write_dataset(bundle: DatasetBundle, out_dir) -> None:
    """Serialize to the on-disk contract: meta.json, edges.tsv, features.bin,
    labels.txt. Byte-deterministic for a given bundle."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    g = bundle.graph
    feats = np.ascontiguousarray(g.attributes, dtype="<f8").tobytes()
    edges = "".join(f"{u}\t{v}\n" for u, v in g.edges).encode()
    (out / "features.bin").write_bytes(feats)
    (out / "edges.tsv").write_bytes(edges)
    (out / "labels.txt").write_text("".join(f"{l}\n" for l in g.labels))
    meta = {
        "n_nodes": g.n_nodes,
        "n_attrs": g.n_attrs,
        "n_classes": len(bundle.class_names),
        "class_names": bundle.class_names,
        "feature_dtype": "f64",
        "checksum_features": _sha256(feats),
        "checksum_edges": _sha256(edges),
    }
    if bundle.provenance:
        meta["provenance"] = bundle.provenance
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_dataset(dataset_dir) -> DatasetBundle:
    d = Path(dataset_dir)
    meta_path = d / "meta.json"
    if not meta_path.exists():
        raise DatasetError(f"{d}: missing meta.json")
    meta = json.loads(meta_path.read_text())
    n, m = meta["n_nodes"], meta["n_attrs"]
    if meta.get("feature_dtype") != "f64":
        raise DatasetError(f"unsupported feature dtype {meta.get('feature_dtype')}")

    feats = (d / "features.bin").read_bytes()
    if _sha256(feats) != meta["checksum_features"]:
        raise DatasetError(f"{d}: features.bin checksum mismatch")
    if len(feats) != n * m * 8:
        raise DatasetError(f"{d}: features.bin has {len(feats)} bytes, "
                           f"expected {n * m * 8}")
    x = np.frombuffer(feats, dtype="<f8").reshape(n, m)

    edges_bytes = (d / "edges.tsv").read_bytes()
    if _sha256(edges_bytes) != meta["checksum_edges"]:
        raise DatasetError(f"{d}: edges.tsv checksum mismatch")
    edges = []
    for lineno, line in enumerate(edges_bytes.decode().splitlines(), start=1):
        parts = line.split("\t")
        if len(parts) != 2:
            raise DatasetError(f"{d}/edges.tsv:{lineno}: malformed line {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise DatasetError(f"{d}/edges.tsv:{lineno}: non-integer endpoint")
        if u >= v:
            raise DatasetError(f"{d}/edges.tsv:{lineno}: pairs must satisfy u < v")
        edges.append((u, v))

    labels = []
    for lineno, line in enumerate((d / "labels.txt").read_text().splitlines(), 1):
        try:
            labels.append(int(line))
        except ValueError:
            raise DatasetError(f"{d}/labels.txt:{lineno}: malformed class id")
    if len(labels) != n:
        raise DatasetError(f"{d}: label count {len(labels)} != node count {n}")
    n_classes = meta["n_classes"]
    if len(meta["class_names"]) != n_classes:
        raise DatasetError(f"{d}: class_names length != n_classes")
    if labels and (min(labels) < 0 or max(labels) >= n_classes):
        raise DatasetError(f"{d}: label outside [0, {n_classes})")

    g = build_graph(edges, x.copy(), np.array(labels))
    if g.n_edges != len(edges):
        raise DatasetError(f"{d}: edges.tsv contains duplicates or self-loops")
    return DatasetBundle(graph=g, class_names=list(meta["class_names"]),
                         provenance=meta.get("provenance", {}))


def dataset_checksum(dataset_dir) -> str:
    meta = json.loads((Path(dataset_dir) / "meta.json").read_text())
    return _sha256((meta["checksum_features"] + meta["checksum_edges"]).encode())


def make_splits(bundle: DatasetBundle, normal_class: int, seed: int) -> SplitSpec:
    """60/15/25 split of normal nodes; val and test padded with an equal number
    of anomalous nodes sampled from all other classes pooled together."""
    labels = bundle.graph.labels
    normal = np.flatnonzero(labels == normal_class)
    if len(normal) < 10:
        raise DatasetError(
            f"normal class {normal_class} has only {len(normal)} nodes (need >= 10)")
    rng = np.random.default_rng(seed)
    normal = rng.permutation(normal)
    n = len(normal)
    n_val = int(np.floor(0.15 * n))
    n_test = int(np.floor(0.25 * n))
    n_train = n - n_val - n_test  # remainder goes to train
    train = normal[:n_train]
    val_norm = normal[n_train:n_train + n_val]
    test_norm = normal[n_train + n_val:]

    anomalous = np.flatnonzero(labels != normal_class)
    need = n_val + n_test
    if len(anomalous) < need:
        raise DatasetError(
            f"need {need} anomalous nodes for val/test halves, have {len(anomalous)}")
    picked = rng.choice(anomalous, size=need, replace=False)
    val_anom = picked[:n_val]
    test_anom = picked[n_val:]

    val_idx = np.concatenate([val_norm, val_anom])
    test_idx = np.concatenate([test_norm, test_anom])
    val_truth = np.concatenate([np.zeros(n_val, np.int64), np.ones(n_val, np.int64)])
    test_truth = np.concatenate([np.zeros(n_test, np.int64),
                                 np.ones(n_test, np.int64)])
    return SplitSpec(normal_class=normal_class, seed=seed,
                     train_idx=np.sort(train), val_idx=val_idx, val_truth=val_truth,
                     test_idx=test_idx, test_truth=test_truth)


@dataclass
class SynthConfig:
    n_per_block: int = 200
    blocks: int = 2
    p_in: float = 0.05
    p_out: float = 0.002
    attr_dim: int = 16
    anomaly_rate: float = 0.05
    anomaly_mix: tuple = (1 / 3, 1 / 3, 1 / 3)  # structure, attribute, combined
    center_scale: float = 20.0
    noise_scale: float = 1.0

    def __post_init__(self):
        if not (self.p_out < self.p_in):
            raise ValueError("p_in must exceed p_out")
        if not (0.0 <= self.anomaly_rate < 0.5):
            raise ValueError(f"anomaly_rate must lie in [0, 0.5), got {self.anomaly_rate}")


def synth_planted(cfg: SynthConfig, seed: int) -> DatasetBundle:
    """Stochastic block model with Gaussian per-block attribute centers and
    planted structure / attribute / combined anomalies.

    Structure anomalies keep their attributes but have their edges rewired
    into blocks foreign to their attribute community; attribute anomalies
    keep their edges but get attributes redrawn around a foreign block's
    center; combined anomalies get both edits, so their rewired edges land in
    blocks inconsistent with their new attribute community. Degree is
    preserved by the rewiring.

    The base graph and the planted edits consume independent random streams,
    so for a fixed seed the pre-plant edges and attributes are identical
    across configs that differ only in the anomaly settings.
    """
    rng = np.random.default_rng(seed)
    b, m = cfg.blocks, cfg.n_per_block
    n = b * m
    block_of = np.repeat(np.arange(b), m)

    # Block-diagonal-ish SBM edges.
    iu, ju = np.triu_indices(n, k=1)
    same = block_of[iu] == block_of[ju]
    p = np.where(same, cfg.p_in, cfg.p_out)
    mask = rng.random(len(p)) < p
    edges = np.stack([iu[mask], ju[mask]], axis=1)

    centers = rng.normal(0.0, cfg.center_scale, size=(b, cfg.attr_dim))
    x = centers[block_of] + rng.normal(0.0, cfg.noise_scale, size=(n, cfg.attr_dim))

    labels = np.zeros(n, dtype=np.int64)
    n_anom = int(round(cfg.anomaly_rate * n))
    plant_rng = np.random.default_rng([seed, 0xA0])
    anom_nodes = plant_rng.choice(n, size=n_anom, replace=False)
    mix = np.asarray(cfg.anomaly_mix, dtype=np.float64)
    mix = mix / mix.sum() if mix.sum() > 0 else mix
    counts = np.floor(mix * n_anom).astype(int)
    while counts.sum() < n_anom:
        counts[int(np.argmax(mix))] += 1
    kinds = np.repeat([1, 2, 3], counts)

    pair_set = {(int(u), int(v)) for u, v in edges}
    for node, kind in zip(anom_nodes.tolist(), kinds.tolist()):
        labels[node] = kind
        if b < 2:
            raise DatasetError("need at least two blocks to plant anomalies")
        attr_block = int(block_of[node])
        if kind in (2, 3):  # redraw attributes around a foreign center
            foreign = [blk for blk in range(b) if blk != block_of[node]]
            attr_block = foreign[plant_rng.integers(len(foreign))]
            x[node] = centers[attr_block] + plant_rng.normal(
                0.0, cfg.noise_scale, cfg.attr_dim)
        if kind in (1, 3):
            # Rewire every incident edge into a block inconsistent with the
            # node's attribute community, preserving degree.
            wrong = [blk for blk in range(b) if blk != attr_block]
            incident = [pr for pr in pair_set if node in pr]
            for pr in incident:
                pair_set.discard(pr)
            if m * len(wrong) - (1 if block_of[node] != attr_block else 0) \
                    < len(incident):
                raise DatasetError("foreign blocks too small to rewire into")
            for _ in incident:
                while True:
                    blk = wrong[plant_rng.integers(len(wrong))]
                    other = int(blk * m + plant_rng.integers(m))
                    if other == node:
                        continue
                    pr = (node, other) if node < other else (other, node)
                    if pr not in pair_set:
                        pair_set.add(pr)
                        break

    g = build_graph(sorted(pair_set), x, labels)
    return DatasetBundle(graph=g, class_names=list(SYNTH_CLASSES),
                         provenance={"source": "synthetic", "seed": seed,
                                     "config": {k: (list(v) if isinstance(v, tuple) else v)
                                                for k, v in cfg.__dict__.items()}})


# Per-dataset defaults: (epochs, mu_a, mu_s, beta, struct_policy)
DATASET_DEFAULTS = {
    "cora": {"epochs": 5000, "mu_a": 0.2, "mu_s": 0.9, "beta": 0.2,
             "struct_policy": "full", "dec_activation": "sigmoid"},
    "citeseer": {"epochs": 2000, "mu_a": 0.4, "mu_s": 0.6, "beta": 0.4,
                 "struct_policy": "full", "dec_activation": "sigmoid"},
    "pubmed": {"epochs": 2000, "mu_a": 0.4, "mu_s": 0.9, "beta": 0.2,
               "struct_policy": "sampled", "dec_activation": "identity"},
    "synthetic": {"epochs": 1000, "mu_a": 0.2, "mu_s": 0.9, "beta": 0.5,
                  "struct_policy": "full", "dec_activation": "identity",
                  "embed_dim": 16, "hidden_dim": 32, "self_loops": False,
                  "standardize": True},
}

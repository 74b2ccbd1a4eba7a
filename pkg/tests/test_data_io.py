import json

import numpy as np
import pytest

from duosphere.data_io import (DatasetBundle, DatasetError, SynthConfig,
                               dataset_checksum, load_dataset, make_splits,
                               synth_planted, write_dataset)
from duosphere.graph import build_graph


def small_synth(seed=0, **kw):
    defaults = dict(n_per_block=40, p_in=0.2, p_out=0.01, attr_dim=4)
    defaults.update(kw)
    return synth_planted(SynthConfig(**defaults), seed)


def test_synth_config_validates():
    with pytest.raises(ValueError):
        SynthConfig(p_in=0.01, p_out=0.05)
    with pytest.raises(ValueError):
        SynthConfig(anomaly_rate=0.6)


def test_synth_zero_rate_all_normal():
    bundle = small_synth(anomaly_rate=0.0)
    assert np.all(bundle.graph.labels == 0)


def test_synth_label_counts_match_rate():
    bundle = small_synth(anomaly_rate=0.1)
    n = bundle.graph.n_nodes
    assert int(np.sum(bundle.graph.labels != 0)) == round(0.1 * n)


def test_synth_structure_only_keeps_attributes():
    base = small_synth(anomaly_rate=0.0)
    planted = small_synth(anomaly_rate=0.1, anomaly_mix=(1, 0, 0))
    assert set(np.unique(planted.graph.labels)) <= {0, 1}
    # Structure-only planting must leave every attribute row untouched.
    assert np.array_equal(base.graph.attributes, planted.graph.attributes)


def test_synth_attribute_only_keeps_edges():
    base = small_synth(anomaly_rate=0.0)
    planted = small_synth(anomaly_rate=0.1, anomaly_mix=(0, 1, 0))
    assert set(np.unique(planted.graph.labels)) <= {0, 2}
    assert np.array_equal(base.graph.edges, planted.graph.edges)
    anomalous = planted.graph.labels == 2
    assert not np.allclose(base.graph.attributes[anomalous],
                           planted.graph.attributes[anomalous])
    assert np.array_equal(base.graph.attributes[~anomalous],
                          planted.graph.attributes[~anomalous])


def test_synth_structure_edit_preserves_edge_count():
    # Each planted node swaps its incident edges one for one, so the total
    # edge count never changes.
    base = small_synth(anomaly_rate=0.0)
    planted = small_synth(anomaly_rate=0.1, anomaly_mix=(1, 0, 0))
    assert planted.graph.n_edges == base.graph.n_edges


def test_synth_rewired_edges_leave_home_block():
    cfg = SynthConfig(n_per_block=40, p_in=0.2, p_out=0.01, attr_dim=4,
                      anomaly_rate=0.1, anomaly_mix=(1, 0, 0))
    bundle = synth_planted(cfg, 3)
    g = bundle.graph
    block_of = np.repeat(np.arange(cfg.blocks), cfg.n_per_block)
    for node in np.flatnonzero(g.labels == 1):
        mask = (g.edges[:, 0] == node) | (g.edges[:, 1] == node)
        others = g.edges[mask].sum(axis=1) - node
        assert np.all(block_of[others] != block_of[node])


def test_synth_deterministic():
    b1, b2 = small_synth(seed=5), small_synth(seed=5)
    assert np.array_equal(b1.graph.edges, b2.graph.edges)
    assert np.array_equal(b1.graph.attributes, b2.graph.attributes)
    assert np.array_equal(b1.graph.labels, b2.graph.labels)


def test_write_load_roundtrip(tmp_path):
    bundle = small_synth(seed=1, anomaly_rate=0.1)
    d = tmp_path / "ds"
    write_dataset(bundle, d)
    loaded = load_dataset(d)
    assert np.array_equal(bundle.graph.edges, loaded.graph.edges)
    assert np.array_equal(bundle.graph.attributes, loaded.graph.attributes)
    assert np.array_equal(bundle.graph.labels, loaded.graph.labels)
    assert bundle.class_names == loaded.class_names


def test_write_is_byte_deterministic(tmp_path):
    bundle = small_synth(seed=2)
    d1, d2 = tmp_path / "a", tmp_path / "b"
    write_dataset(bundle, d1)
    write_dataset(bundle, d2)
    for name in ("meta.json", "edges.tsv", "features.bin", "labels.txt"):
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes()
    assert dataset_checksum(d1) == dataset_checksum(d2)


def test_load_detects_feature_corruption(tmp_path):
    bundle = small_synth(seed=2)
    d = tmp_path / "ds"
    write_dataset(bundle, d)
    raw = bytearray((d / "features.bin").read_bytes())
    raw[0] ^= 0xFF
    (d / "features.bin").write_bytes(bytes(raw))
    with pytest.raises(DatasetError, match="checksum"):
        load_dataset(d)


def test_load_detects_malformed_edges(tmp_path):
    import hashlib
    bundle = small_synth(seed=2)
    d = tmp_path / "ds"
    write_dataset(bundle, d)
    bad = b"1\t0\n"  # violates the u < v contract
    (d / "edges.tsv").write_bytes(bad)
    meta = json.loads((d / "meta.json").read_text())
    meta["checksum_edges"] = hashlib.sha256(bad).hexdigest()
    (d / "meta.json").write_text(json.dumps(meta))
    with pytest.raises(DatasetError, match="u < v"):
        load_dataset(d)


def test_load_missing_meta(tmp_path):
    with pytest.raises(DatasetError, match="meta.json"):
        load_dataset(tmp_path / "nowhere")


def test_split_proportions():
    bundle = small_synth(seed=0, anomaly_rate=0.3)
    split = make_splits(bundle, normal_class=0, seed=0)
    n = int(np.sum(bundle.graph.labels == 0))
    n_val = int(np.floor(0.15 * n))
    n_test = int(np.floor(0.25 * n))
    # Remainder rolls into the training set.
    assert len(split.train_idx) == n - n_val - n_test
    assert int(np.sum(split.val_truth == 0)) == n_val
    assert int(np.sum(split.test_truth == 0)) == n_test
    # Val and test carry equal numbers of anomalous nodes.
    assert int(np.sum(split.val_truth == 1)) == n_val
    assert int(np.sum(split.test_truth == 1)) == n_test


def test_split_partitions_are_disjoint():
    bundle = small_synth(seed=0, anomaly_rate=0.3)
    split = make_splits(bundle, 0, seed=3)
    pools = [set(split.train_idx.tolist()), set(split.val_idx.tolist()),
             set(split.test_idx.tolist())]
    assert not (pools[0] & pools[1])
    assert not (pools[0] & pools[2])
    assert not (pools[1] & pools[2])


def test_split_deterministic():
    bundle = small_synth(seed=0, anomaly_rate=0.3)
    s1 = make_splits(bundle, 0, seed=9)
    s2 = make_splits(bundle, 0, seed=9)
    assert np.array_equal(s1.train_idx, s2.train_idx)
    assert np.array_equal(s1.val_idx, s2.val_idx)
    assert np.array_equal(s1.test_idx, s2.test_idx)


def test_split_rejects_tiny_normal_class():
    g = build_graph([(0, 1)], np.zeros((6, 2)),
                    np.array([0, 0, 0, 1, 1, 1]))
    bundle = DatasetBundle(graph=g, class_names=["a", "b"])
    with pytest.raises(DatasetError, match="only 3"):
        make_splits(bundle, 0, seed=0)

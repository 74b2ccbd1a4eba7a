"""Full-batch training loop: center/radius initialization, per-epoch gradient
updates of the composite loss, and quantile radius refits."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import hypersphere as hs
from . import model as mdl
from . import tape
from .graph import Graph, adjacency, induced_subgraph, normalized_adjacency
from .model import ForwardOutputs, ModelConfig, Variant
from .tape import ParameterStore, Tensor


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 200
    lr: float = 0.002
    beta: float = 0.5
    mu_s: float = 0.9
    mu_a: float = 0.2
    seed: int = 0
    standardize: bool = False  # center/scale attributes by train-node statistics
    graph_mode: str = "train-induced"  # or "full"
    struct_policy: str = "full"  # or "sampled"
    neg_sample_factor: int = 10  # sampled policy: zeros per positive entry
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if not (0.0 <= self.beta <= 1.0):
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.graph_mode not in ("train-induced", "full"):
            raise ValueError(f"unknown graph_mode {self.graph_mode!r}")
        if self.struct_policy not in ("full", "sampled"):
            raise ValueError(f"unknown struct_policy {self.struct_policy!r}")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class TrainedModel:
    store: ParameterStore
    sphere_s: hs.Hypersphere | None
    sphere_a: hs.Hypersphere | None
    model_cfg: ModelConfig
    train_cfg: TrainConfig
    history: list[dict] = field(default_factory=list)
    # Attribute normalization fitted on the training nodes (None when the
    # standardize option is off); eval-time forwards must reapply it.
    feature_mean: np.ndarray | None = None
    feature_scale: float | None = None

    def normalize_attributes(self, x: np.ndarray) -> np.ndarray:
        if self.feature_mean is None:
            return x
        return (x - self.feature_mean) / self.feature_scale

    HISTORY_COLUMNS = ("epoch", "total", "sphere_s", "sphere_a", "recon_s", "recon_a")

    def history_csv(self) -> str:
        lines = [",".join(self.HISTORY_COLUMNS)]
        for row in self.history:
            lines.append(",".join(
                str(row[c]) if c == "epoch" else repr(float(row[c]))
                for c in self.HISTORY_COLUMNS))
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        payload = {
            "format": "duosphere-checkpoint-v1",
            "model_cfg": self.model_cfg.to_dict(),
            "train_cfg": self.train_cfg.to_dict(),
            "params": {k: {"shape": list(v.shape), "data": v.reshape(-1).tolist()}
                       for k, v in self.store.state_dict().items()},
            "sphere_s": _sphere_dict(self.sphere_s),
            "sphere_a": _sphere_dict(self.sphere_a),
            "history": self.history,
            "feature_mean": None if self.feature_mean is None
            else self.feature_mean.tolist(),
            "feature_scale": self.feature_scale,
        }
        with open(path, "w") as f:
            json.dump(payload, f)

    @classmethod
    def load(cls, path) -> "TrainedModel":
        with open(path) as f:
            payload = json.load(f)
        if payload.get("format") != "duosphere-checkpoint-v1":
            raise TrainingError(f"unrecognized checkpoint format in {path}")
        cfg = ModelConfig.from_dict(payload["model_cfg"])
        tcfg = TrainConfig(**payload["train_cfg"])
        store = ParameterStore()
        for name, spec in payload["params"].items():
            store.add(name, np.array(spec["data"]).reshape(spec["shape"]))
        fmean = payload.get("feature_mean")
        return cls(store=store,
                   sphere_s=_sphere_from(payload["sphere_s"]),
                   sphere_a=_sphere_from(payload["sphere_a"]),
                   model_cfg=cfg, train_cfg=tcfg, history=payload["history"],
                   feature_mean=None if fmean is None else np.array(fmean),
                   feature_scale=payload.get("feature_scale"))


def _sphere_dict(s):
    if s is None:
        return None
    return {"center": s.center.tolist(), "radius": s.radius, "mu": s.mu}


def _sphere_from(d):
    if d is None:
        return None
    return hs.Hypersphere(center=np.array(d["center"]), radius=d["radius"], mu=d["mu"])


def structure_recon_loss(ahat: Tensor, a_target: np.ndarray) -> Tensor:
    """Mean squared error between reconstructed and true adjacency entries."""
    return tape.mse(ahat, a_target)


def attribute_recon_loss(xhat: Tensor, x: np.ndarray) -> Tensor:
    return tape.mse(xhat, x)


def total_loss(fwd: ForwardOutputs, sphere_s, sphere_a, a_target: np.ndarray | None,
               x_target: np.ndarray, beta: float, variant: Variant,
               loss_rows: np.ndarray | None = None) -> tuple[Tensor, dict]:
    """Composite objective: beta * (structure sphere + structure reconstruction)
    + (1 - beta) * (attribute sphere + attribute reconstruction), with the
    ablation variant dropping the corresponding terms.

    loss_rows restricts sphere and attribute losses to those embedding rows
    (full-graph encoding with train-only losses); None uses every row.
    """
    if not (0.0 <= beta <= 1.0):
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    parts = {"sphere_s": 0.0, "sphere_a": 0.0, "recon_s": 0.0, "recon_a": 0.0}
    terms: list[tuple[float, Tensor]] = []

    def rows(t: Tensor) -> Tensor:
        return t if loss_rows is None else tape.row_select(t, loss_rows)

    struct_w = beta if variant.has_attribute else 1.0
    attr_w = (1.0 - beta) if variant.has_structure else 1.0

    if variant.has_structure:
        if variant.has_spheres:
            ls = hs.sphere_loss(rows(fwd.zs), sphere_s)
            parts["sphere_s"] = ls.item()
            terms.append((struct_w, ls))
        if variant.has_structure_decoder:
            sr = structure_recon_loss(fwd.ahat, a_target)
            parts["recon_s"] = sr.item()
            terms.append((struct_w, sr))
    if variant.has_attribute:
        if variant.has_spheres:
            la = hs.sphere_loss(rows(fwd.za), sphere_a)
            parts["sphere_a"] = la.item()
            terms.append((attr_w, la))
        if variant.has_attribute_decoder:
            ar = attribute_recon_loss(rows(fwd.xhat), x_target if loss_rows is None
                                      else x_target[loss_rows])
            parts["recon_a"] = ar.item()
            terms.append((attr_w, ar))
    if not terms:
        raise TrainingError(f"variant {variant.value} leaves no loss terms")
    return tape.weighted_sum(terms), parts


def _sample_structure_pairs(g: Graph, rng: np.random.Generator,
                            factor: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All positive (edge) entries plus `factor * |E|` sampled zero entries.

    Returns (rows, cols, targets). Resampled every epoch by the caller.
    """
    pos = g.edges
    n_neg = factor * max(len(pos), 1)
    edge_set = set(map(tuple, pos.tolist()))
    rows = rng.integers(0, g.n_nodes, size=2 * n_neg + 16)
    cols = rng.integers(0, g.n_nodes, size=2 * n_neg + 16)
    keep = []
    for r, c in zip(rows, cols):
        if r == c:
            continue
        key = (r, c) if r < c else (c, r)
        if key in edge_set:
            continue
        keep.append((r, c))
        if len(keep) == n_neg:
            break
    neg = np.array(keep, dtype=np.int64).reshape(-1, 2)
    all_rows = np.concatenate([pos[:, 0], neg[:, 0]])
    all_cols = np.concatenate([pos[:, 1], neg[:, 1]])
    targets = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
    return all_rows, all_cols, targets


def train(g: Graph, train_idx, model_cfg: ModelConfig,
          train_cfg: TrainConfig) -> TrainedModel:
    """Run the full training procedure and return the fitted model.

    Deterministic for a fixed seed: weight init, negative sampling, and all
    kernel reductions are seed- and order-stable.
    """
    train_idx = np.asarray(sorted(set(int(i) for i in train_idx)), dtype=np.int64)
    if len(train_idx) == 0:
        raise TrainingError("empty training set")
    variant = model_cfg.variant
    rng = np.random.default_rng(train_cfg.seed)

    feature_mean = feature_scale = None
    if train_cfg.standardize:
        xt = g.attributes[train_idx]
        feature_mean = xt.mean(axis=0)
        feature_scale = max(float(np.sqrt(np.mean((xt - feature_mean) ** 2))), 1e-12)

    if train_cfg.graph_mode == "train-induced":
        tg, _ = induced_subgraph(g, train_idx)
        loss_rows = None
    else:
        tg = g
        loss_rows = train_idx

    a_norm = normalized_adjacency(tg, self_loops=model_cfg.self_loops) \
        if variant.has_structure else None
    x = tg.attributes
    if feature_mean is not None:
        x = (x - feature_mean) / feature_scale
    if variant.has_structure_decoder and train_cfg.struct_policy == "full":
        if loss_rows is None:
            a_target = adjacency(tg).toarray()
        else:
            a_target = adjacency(tg).toarray()[np.ix_(loss_rows, loss_rows)]
    else:
        a_target = None

    store = mdl.init_params(model_cfg, rng)

    # Hypersphere centers come from one untrained forward pass over the
    # training nodes; radii start at zero and are refit by quantile each epoch.
    sphere_s = sphere_a = None
    if variant.has_spheres:
        fwd0 = mdl.forward(a_norm, x, store, model_cfg)
        rows = slice(None) if loss_rows is None else loss_rows
        if variant.has_structure:
            sphere_s = hs.Hypersphere(center=hs.init_center(fwd0.zs.data[rows]),
                                      radius=0.0, mu=train_cfg.mu_s)
        if variant.has_attribute:
            sphere_a = hs.Hypersphere(center=hs.init_center(fwd0.za.data[rows]),
                                      radius=0.0, mu=train_cfg.mu_a)

    history: list[dict] = []
    sampled = train_cfg.struct_policy == "sampled" and variant.has_structure_decoder
    for epoch in range(1, train_cfg.epochs + 1):
        pairs = None
        target = a_target
        if sampled:
            if loss_rows is not None:
                raise TrainingError("sampled structure policy requires train-induced mode")
            prows, pcols, target = _sample_structure_pairs(tg, rng,
                                                           train_cfg.neg_sample_factor)
            pairs = (prows, pcols)
        fwd = mdl.forward(a_norm, x, store, model_cfg, structure_pairs=pairs)
        if variant.has_structure_decoder and loss_rows is not None:
            # Full-graph mode: reconstruct the train-by-train block only.
            ahat_block = tape.row_select(fwd.ahat, loss_rows)
            cols = tape.Tensor(ahat_block.data[:, loss_rows], _parents=(ahat_block,),
                               _bwd=_col_scatter(ahat_block.data.shape, loss_rows))
            fwd = ForwardOutputs(zs=fwd._zs, za=fwd._za, zf=fwd._zf,
                                 ahat=cols, xhat=fwd._xhat)
        loss, parts = total_loss(fwd, sphere_s, sphere_a, target, x,
                                 train_cfg.beta, variant, loss_rows=loss_rows)
        if not np.isfinite(loss.data):
            raise TrainingError(f"non-finite loss at epoch {epoch}")
        store.clear_grads()
        loss.backward()
        tape.adam_step(store, train_cfg.lr, train_cfg.adam_beta1,
                       train_cfg.adam_beta2, train_cfg.adam_eps)

        if variant.has_spheres:
            rows = slice(None) if loss_rows is None else loss_rows
            if sphere_s is not None:
                sphere_s.radius = hs.update_radius(
                    hs.distances(fwd.zs.data[rows], sphere_s.center), sphere_s.mu)
            if sphere_a is not None:
                sphere_a.radius = hs.update_radius(
                    hs.distances(fwd.za.data[rows], sphere_a.center), sphere_a.mu)

        history.append({"epoch": epoch, "total": loss.item(), **parts})

    return TrainedModel(store=store, sphere_s=sphere_s, sphere_a=sphere_a,
                        model_cfg=model_cfg, train_cfg=train_cfg, history=history,
                        feature_mean=feature_mean, feature_scale=feature_scale)


def _col_scatter(shape, cols):
    def bwd(g):
        full = np.zeros(shape)
        full[:, cols] = g
        return (full,)
    return bwd

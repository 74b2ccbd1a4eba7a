"""The dual autoencoder network: GCN structure branch, MLP attribute branch,
inner-product structure decoder, element-wise fusion, and ablation wiring."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import tape
from .graph import CSRMatrix
from .tape import ActivationKind, ParameterStore, Tensor


class Variant(Enum):
    FULL = "full"
    WO_OC = "wo-oc"
    WO_AES = "wo-aes"
    WO_AEA = "wo-aea"
    WO_DEA = "wo-dea"
    WO_DES = "wo-des"
    WO_DEBOTH = "wo-deboth"

    @property
    def has_structure(self) -> bool:
        return self is not Variant.WO_AES

    @property
    def has_attribute(self) -> bool:
        return self is not Variant.WO_AEA

    @property
    def has_structure_decoder(self) -> bool:
        return self.has_structure and self not in (Variant.WO_DES, Variant.WO_DEBOTH)

    @property
    def has_attribute_decoder(self) -> bool:
        return self.has_attribute and self not in (Variant.WO_DEA, Variant.WO_DEBOTH)

    @property
    def has_spheres(self) -> bool:
        return self is not Variant.WO_OC


class InactiveBranchError(RuntimeError):
    """Requested an output that the ablation variant does not produce."""


@dataclass
class ModelConfig:
    n_attrs: int
    embed_dim: int = 32
    struct_layers: list[int] = field(default_factory=lambda: [64])
    attr_enc_layers: list[int] = field(default_factory=lambda: [64])
    attr_dec_layers: list[int] = field(default_factory=lambda: [64])
    activation: ActivationKind = ActivationKind.RELU
    dec_activation: ActivationKind = ActivationKind.SIGMOID
    self_loops: bool = True
    variant: Variant = Variant.FULL

    # Hidden layer widths exclude the final layer: the encoders always end at
    # embed_dim and the attribute decoder always ends at n_attrs.

    def struct_widths(self) -> list[int]:
        return [self.n_attrs, *self.struct_layers, self.embed_dim]

    def attr_enc_widths(self) -> list[int]:
        return [self.n_attrs, *self.attr_enc_layers, self.embed_dim]

    def attr_dec_widths(self) -> list[int]:
        return [self.embed_dim, *self.attr_dec_layers, self.n_attrs]

    def to_dict(self) -> dict:
        return {
            "n_attrs": self.n_attrs,
            "embed_dim": self.embed_dim,
            "struct_layers": list(self.struct_layers),
            "attr_enc_layers": list(self.attr_enc_layers),
            "attr_dec_layers": list(self.attr_dec_layers),
            "activation": self.activation.value,
            "dec_activation": self.dec_activation.value,
            "self_loops": self.self_loops,
            "variant": self.variant.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(
            n_attrs=d["n_attrs"],
            embed_dim=d["embed_dim"],
            struct_layers=list(d["struct_layers"]),
            attr_enc_layers=list(d["attr_enc_layers"]),
            attr_dec_layers=list(d["attr_dec_layers"]),
            activation=ActivationKind(d["activation"]),
            dec_activation=ActivationKind(d["dec_activation"]),
            self_loops=d["self_loops"],
            variant=Variant(d["variant"]),
        )


class ForwardOutputs:
    """Branch outputs of one forward pass; inactive outputs raise on access."""

    def __init__(self, zs=None, za=None, zf=None, ahat=None, xhat=None):
        self._zs, self._za, self._zf = zs, za, zf
        self._ahat, self._xhat = ahat, xhat

    def _get(self, value, name):
        if value is None:
            raise InactiveBranchError(f"{name} is not produced by this variant")
        return value

    @property
    def zs(self) -> Tensor:
        return self._get(self._zs, "structure embedding")

    @property
    def za(self) -> Tensor:
        return self._get(self._za, "attribute embedding")

    @property
    def zf(self) -> Tensor:
        return self._get(self._zf, "fused embedding")

    @property
    def ahat(self) -> Tensor:
        return self._get(self._ahat, "adjacency reconstruction")

    @property
    def xhat(self) -> Tensor:
        return self._get(self._xhat, "attribute reconstruction")

    def has(self, name: str) -> bool:
        return getattr(self, f"_{name}") is not None


def init_params(cfg: ModelConfig, rng: np.random.Generator) -> ParameterStore:
    """Glorot-uniform weights; biases start at zero; inactive branches get no
    parameters at all (so they provably receive no gradient)."""
    store = ParameterStore()
    v = cfg.variant
    if v.has_structure:
        w = cfg.struct_widths()
        for l in range(len(w) - 1):
            store.add(f"struct.enc.{l}.w", tape.glorot_uniform(rng, w[l], w[l + 1]))
    if v.has_attribute:
        w = cfg.attr_enc_widths()
        for l in range(len(w) - 1):
            store.add(f"attr.enc.{l}.w", tape.glorot_uniform(rng, w[l], w[l + 1]))
            store.add(f"attr.enc.{l}.b", np.zeros(w[l + 1]))
    if v.has_attribute_decoder:
        w = cfg.attr_dec_widths()
        for l in range(len(w) - 1):
            store.add(f"attr.dec.{l}.w", tape.glorot_uniform(rng, w[l], w[l + 1]))
            store.add(f"attr.dec.{l}.b", np.zeros(w[l + 1]))
    return store


def structure_encode(a_norm: CSRMatrix, x: Tensor, store: ParameterStore,
                     cfg: ModelConfig) -> Tensor:
    """Stacked GCN layers: act(A_norm @ Z @ W); final layer is linear."""
    widths = cfg.struct_widths()
    n_layers = len(widths) - 1
    z = x
    for l in range(n_layers):
        act = cfg.activation if l < n_layers - 1 else ActivationKind.IDENTITY
        z = tape.activate(tape.spmm(a_norm, tape.matmul(z, store[f"struct.enc.{l}.w"])), act)
    return z


def structure_decode(zs: Tensor) -> Tensor:
    """Edge probabilities: sigmoid of the embedding Gram matrix."""
    return tape.sigmoid(tape.gram(zs))


def structure_decode_pairs(zs: Tensor, rows: np.ndarray, cols: np.ndarray) -> Tensor:
    """Sampled-entry variant of structure_decode for large graphs."""
    return tape.sigmoid(tape.pair_dots(zs, rows, cols))


def attribute_encode(x: Tensor, store: ParameterStore, cfg: ModelConfig) -> Tensor:
    """Row-wise MLP on the attribute matrix; no adjacency involved."""
    widths = cfg.attr_enc_widths()
    n_layers = len(widths) - 1
    z = x
    for l in range(n_layers):
        act = cfg.activation if l < n_layers - 1 else ActivationKind.IDENTITY
        z = tape.dense_affine(z, store[f"attr.enc.{l}.w"], store[f"attr.enc.{l}.b"], act)
    return z


def fuse(zs: Tensor, za: Tensor) -> Tensor:
    """Element-wise sum of the two embeddings."""
    return tape.add(zs, za)


def attribute_decode(zf: Tensor, store: ParameterStore, cfg: ModelConfig) -> Tensor:
    widths = cfg.attr_dec_widths()
    n_layers = len(widths) - 1
    z = zf
    for l in range(n_layers):
        act = cfg.activation if l < n_layers - 1 else cfg.dec_activation
        z = tape.dense_affine(z, store[f"attr.dec.{l}.w"], store[f"attr.dec.{l}.b"], act)
    return z


def forward(a_norm: CSRMatrix | None, x: np.ndarray, store: ParameterStore,
            cfg: ModelConfig, structure_pairs=None) -> ForwardOutputs:
    """Full forward pass honoring the ablation variant.

    structure_pairs, when given as (rows, cols), switches the structure
    decoder to sampled entries instead of the dense N x N matrix.
    """
    v = cfg.variant
    xt = tape.constant(x)
    zs = za = zf = ahat = xhat = None
    if v.has_structure:
        if a_norm is None:
            raise ValueError("structure branch requires the normalized adjacency")
        zs = structure_encode(a_norm, xt, store, cfg)
        if v.has_structure_decoder:
            if structure_pairs is None:
                ahat = structure_decode(zs)
            else:
                ahat = structure_decode_pairs(zs, *structure_pairs)
    if v.has_attribute:
        za = attribute_encode(xt, store, cfg)
    if zs is not None and za is not None:
        zf = fuse(zs, za)
    else:
        zf = zs if zs is not None else za
    if v.has_attribute_decoder:
        xhat = attribute_decode(zf, store, cfg)
    return ForwardOutputs(zs=zs, za=za, zf=zf, ahat=ahat, xhat=xhat)

"""GNN building bricks with hand-derived backward passes.

A model is a chain of bricks: an optional MLP encoder, a GNN core (gcn,
sage, or gprgnn propagation), an optional mean readout, and an optional MLP
decoder. Hidden layers use ReLU; the final trainable layer of the whole
chain is linear. Dropout (inverted, seeded) is applied to the input of every
trainable layer in train mode.

All math is dense float64 on numpy arrays; the normalized adjacency comes in
as a scipy CSR matrix. Backward passes are written out by hand and checked
against central finite differences in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import ShapeMismatch, StaleCache
from ..graph import Graph, mean_neighbor_adjacency

GNN_KINDS = ("gcn", "sage", "gprgnn")


@dataclass(frozen=True)
class ModelSpec:
    gnn_kind: str
    encoder_dims: tuple = ()        # MLP layer dims, e.g. (in, h); empty = pass-through
    gnn_dims: tuple = ()            # gcn/sage layer dims (d0, ..., dL); unused by gprgnn
    decoder_dims: tuple = ()        # MLP dims ending in num_classes; empty = pass-through
    k_prop: int = 0                 # gprgnn propagation steps
    gamma_alpha: float = 0.1        # decay of the initial propagation coefficients
    dropout: float = 0.0
    readout: str = "none"           # "none" | "mean"

    def __post_init__(self):
        object.__setattr__(self, "encoder_dims", tuple(int(d) for d in self.encoder_dims))
        object.__setattr__(self, "gnn_dims", tuple(int(d) for d in self.gnn_dims))
        object.__setattr__(self, "decoder_dims", tuple(int(d) for d in self.decoder_dims))
        if self.gnn_kind not in GNN_KINDS:
            raise ShapeMismatch(f"unknown gnn kind '{self.gnn_kind}'")
        if self.gnn_kind == "gprgnn":
            if self.k_prop < 1:
                raise ShapeMismatch("gprgnn needs k_prop >= 1")
        elif len(self.gnn_dims) < 2:
            raise ShapeMismatch(f"{self.gnn_kind} needs gnn_dims with at least 2 entries")
        if not (0.0 <= self.dropout < 1.0):
            raise ShapeMismatch("dropout must be in [0, 1)")
        if self.readout not in ("none", "mean"):
            raise ShapeMismatch(f"unknown readout '{self.readout}'")
        # adjacent brick dims must agree
        chain = []
        if self.encoder_dims:
            chain.extend(self.encoder_dims)
        if self.gnn_kind != "gprgnn":
            chain.extend(self.gnn_dims)
        if self.decoder_dims:
            chain.extend(self.decoder_dims)
        if self.encoder_dims and self.gnn_kind != "gprgnn" \
                and self.encoder_dims[-1] != self.gnn_dims[0]:
            raise ShapeMismatch("encoder output dim != gnn input dim")
        if self.decoder_dims:
            pre = self.gnn_dims[-1] if self.gnn_kind != "gprgnn" else (
                self.encoder_dims[-1] if self.encoder_dims else None)
            if pre is not None and pre != self.decoder_dims[0]:
                raise ShapeMismatch("decoder input dim incompatible with preceding brick")

    @property
    def in_dim(self) -> int:
        if self.encoder_dims:
            return self.encoder_dims[0]
        if self.gnn_kind == "gprgnn":
            return self.decoder_dims[0] if self.decoder_dims else 0
        return self.gnn_dims[0]


def layer_plan(spec: ModelSpec) -> list[tuple]:
    """Forward-order layer descriptors: (kind, name_prefix, d_in, d_out)."""
    plan = []
    dims = spec.encoder_dims
    for i in range(len(dims) - 1):
        plan.append(("linear", f"encoder.{i}", dims[i], dims[i + 1]))
    if spec.gnn_kind == "gprgnn":
        d = spec.encoder_dims[-1] if spec.encoder_dims else spec.in_dim
        plan.append(("prop", "gnn.gamma", d, d))
    else:
        dims = spec.gnn_dims
        for i in range(len(dims) - 1):
            plan.append((spec.gnn_kind, f"gnn.{i}", dims[i], dims[i + 1]))
    if spec.readout == "mean":
        plan.append(("readout", "", 0, 0))
    dims = spec.decoder_dims
    for i in range(len(dims) - 1):
        plan.append(("linear", f"decoder.{i}", dims[i], dims[i + 1]))
    return plan


def _last_trainable_index(plan) -> int:
    idx = -1
    for i, layer in enumerate(plan):
        if layer[0] != "readout":
            idx = i
    return idx


@dataclass
class ParamStore:
    params: dict = field(default_factory=dict)
    grads: dict = field(default_factory=dict)
    has_grads: bool = False

    def names(self) -> list[str]:
        return sorted(self.params)

    def copy_params(self) -> dict:
        return {k: v.copy() for k, v in self.params.items()}

    def load_params(self, values: dict) -> None:
        for name, arr in values.items():
            if name not in self.params:
                raise ShapeMismatch(f"unknown parameter '{name}'")
            if self.params[name].shape != arr.shape:
                raise ShapeMismatch(f"shape mismatch for '{name}'")
            self.params[name] = np.array(arr, dtype=np.float64)


def init_params(spec: ModelSpec, rng: np.random.Generator) -> ParamStore:
    """Glorot-uniform weights, zero biases, PPR-style propagation coefficients.

    gamma_k = alpha * (1 - alpha)^k for k < K, and gamma_K = (1 - alpha)^K.
    Weight tensors are drawn in layer order so the stream is reproducible.
    """
    params: dict[str, np.ndarray] = {}
    for kind, name, din, dout in layer_plan(spec):
        if kind == "readout":
            continue
        if kind == "prop":
            alpha = spec.gamma_alpha
            gamma = np.array([alpha * (1 - alpha) ** k for k in range(spec.k_prop)]
                             + [(1 - alpha) ** spec.k_prop], dtype=np.float64)
            params[name] = gamma.reshape(1, -1)
            continue
        bound = math.sqrt(6.0 / (din + dout))
        if kind == "sage":
            params[f"{name}.weight_self"] = rng.uniform(-bound, bound, size=(din, dout))
            params[f"{name}.weight_neigh"] = rng.uniform(-bound, bound, size=(din, dout))
        else:
            params[f"{name}.weight"] = rng.uniform(-bound, bound, size=(din, dout))
        params[f"{name}.bias"] = np.zeros((1, dout))
    grads = {k: np.zeros_like(v) for k, v in params.items()}
    return ParamStore(params=params, grads=grads)


@dataclass
class ForwardCache:
    spec: ModelSpec
    store: ParamStore
    records: list


def forward(spec: ModelSpec, store: ParamStore, g: Graph, adj_norm: sp.csr_matrix,
            mode: str = "eval", rng: np.random.Generator | None = None):
    """Run the model on the whole graph; returns (logits, cache for backward).

    `mode` is "train" (dropout on, consumes rng) or "eval" (pure function).
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got '{mode}'")
    h = g.features
    if h.shape[1] != spec.in_dim:
        raise ShapeMismatch(f"feature dim {h.shape[1]} != model input dim {spec.in_dim}")
    if mode == "train" and spec.dropout > 0.0 and rng is None:
        raise ValueError("train mode with dropout needs an rng")

    plan = layer_plan(spec)
    last = _last_trainable_index(plan)
    mean_adj = mean_neighbor_adjacency(g) if spec.gnn_kind == "sage" else None

    records = []
    for i, (kind, name, _din, _dout) in enumerate(plan):
        if kind == "readout":
            n_rows = h.shape[0]
            h = h.mean(axis=0, keepdims=True)
            records.append({"kind": "readout", "n_rows": n_rows})
            continue

        drop_mask = None
        if mode == "train" and spec.dropout > 0.0:
            keep = 1.0 - spec.dropout
            drop_mask = (rng.random(h.shape) < keep).astype(np.float64) / keep
            h = h * drop_mask
        rec = {"kind": kind, "name": name, "drop_mask": drop_mask, "h_in": h}

        if kind == "linear":
            z = h @ store.params[f"{name}.weight"] + store.params[f"{name}.bias"]
        elif kind == "gcn":
            ah = adj_norm @ h
            z = ah @ store.params[f"{name}.weight"] + store.params[f"{name}.bias"]
            rec["ah"] = ah
        elif kind == "sage":
            mh = mean_adj @ h
            z = (h @ store.params[f"{name}.weight_self"]
                 + mh @ store.params[f"{name}.weight_neigh"]
                 + store.params[f"{name}.bias"])
            rec["mh"] = mh
            rec["mean_adj"] = mean_adj
        elif kind == "prop":
            gamma = store.params[name][0]
            powers = [h]
            for _ in range(spec.k_prop):
                powers.append(adj_norm @ powers[-1])
            z = gamma[0] * powers[0]
            for k in range(1, spec.k_prop + 1):
                z = z + gamma[k] * powers[k]
            rec["powers"] = powers
        else:
            raise ShapeMismatch(f"unknown layer kind '{kind}'")

        if i != last and kind != "prop":
            rec["relu_mask"] = z > 0
            h = np.where(rec["relu_mask"], z, 0.0)
        else:
            rec["relu_mask"] = None
            h = z
        records.append(rec)

    return h, ForwardCache(spec=spec, store=store, records=records)


def backward(spec: ModelSpec, store: ParamStore, cache: ForwardCache,
             dlogits: np.ndarray, adj_norm: sp.csr_matrix) -> None:
    """Populate store.grads for every parameter from d(loss)/d(logits)."""
    if cache.store is not store or cache.spec != spec:
        raise StaleCache("cache does not belong to this (spec, store) pair")

    for name in store.grads:
        store.grads[name][...] = 0.0

    d = dlogits
    for rec in reversed(cache.records):
        kind = rec["kind"]
        if kind == "readout":
            n = rec["n_rows"]
            d = np.repeat(d / n, n, axis=0)
            continue
        if rec["relu_mask"] is not None:
            d = np.where(rec["relu_mask"], d, 0.0)

        name = rec.get("name")
        h_in = rec["h_in"]
        if kind == "linear":
            store.grads[f"{name}.weight"][...] = h_in.T @ d
            store.grads[f"{name}.bias"][...] = d.sum(axis=0, keepdims=True)
            d = d @ store.params[f"{name}.weight"].T
        elif kind == "gcn":
            store.grads[f"{name}.weight"][...] = rec["ah"].T @ d
            store.grads[f"{name}.bias"][...] = d.sum(axis=0, keepdims=True)
            d = adj_norm.T @ (d @ store.params[f"{name}.weight"].T)
        elif kind == "sage":
            store.grads[f"{name}.weight_self"][...] = h_in.T @ d
            store.grads[f"{name}.weight_neigh"][...] = rec["mh"].T @ d
            store.grads[f"{name}.bias"][...] = d.sum(axis=0, keepdims=True)
            d = (d @ store.params[f"{name}.weight_self"].T
                 + rec["mean_adj"].T @ (d @ store.params[f"{name}.weight_neigh"].T))
        elif kind == "prop":
            gamma = store.params[name][0]
            powers = rec["powers"]
            dgamma = np.array([float(np.sum(powers[k] * d)) for k in range(spec.k_prop + 1)])
            store.grads[name][...] = dgamma.reshape(1, -1)
            acc = gamma[0] * d
            t = d
            for k in range(1, spec.k_prop + 1):
                t = adj_norm.T @ t
                acc = acc + gamma[k] * t
            d = acc

        if rec["drop_mask"] is not None:
            d = d * rec["drop_mask"]

    store.has_grads = True

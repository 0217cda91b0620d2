"""Undirected graph representation (CSR), structural transforms, and disk format.

A :class:`Graph` stores a symmetric adjacency in CSR form together with dense
float64 node features, integer labels (-1 = unlabeled), disjoint train/valid/
test masks, and optional categorical node attributes. Instances are immutable
after construction; all arrays are marked read-only.

The on-disk format is a single UTF-8 JSON object; see :func:`save_graph`.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
import scipy.sparse as sp

from .errors import (
    InvariantViolation,
    NoEdges,
    OutOfRangeNode,
    ParseError,
    ShapeMismatch,
    UnlabeledEndpoint,
)

GRAPH_FORMAT_VERSION = 1

MASK_NAMES = ("train", "valid", "test")


@dataclass(frozen=True)
class Graph:
    num_nodes: int
    row_ptr: np.ndarray          # int64, length num_nodes + 1
    col_idx: np.ndarray          # int64, neighbor ids, sorted within each row
    features: np.ndarray         # float64, (num_nodes, feat_dim)
    labels: np.ndarray           # int64, -1 = unlabeled
    train_mask: np.ndarray       # bool
    valid_mask: np.ndarray       # bool
    test_mask: np.ndarray        # bool
    edge_weight: Optional[np.ndarray] = None   # float64 aligned with col_idx
    node_attrs: dict = field(default_factory=dict)  # name -> array of categorical values

    @property
    def num_edges(self) -> int:
        """Number of undirected edges (each stored twice in CSR)."""
        return len(self.col_idx) // 2

    @property
    def feat_dim(self) -> int:
        return self.features.shape[1]

    def neighbors(self, u: int) -> np.ndarray:
        return self.col_idx[self.row_ptr[u]:self.row_ptr[u + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.row_ptr)

    def undirected_edges(self) -> np.ndarray:
        """(m, 2) array of edges with u < v, lexicographically sorted."""
        u = np.repeat(np.arange(self.num_nodes), np.diff(self.row_ptr))
        v = self.col_idx
        keep = u < v
        return np.stack([u[keep], v[keep]], axis=1)

    def mask_ids(self, name: str) -> np.ndarray:
        m = {"train": self.train_mask, "valid": self.valid_mask, "test": self.test_mask}[name]
        return np.flatnonzero(m)


@dataclass(frozen=True)
class GraphCollection:
    """A list of graphs with per-graph labels and optional scalar properties."""

    graphs: list
    graph_labels: np.ndarray
    graph_props: Optional[np.ndarray] = None

    def __post_init__(self):
        if len(self.graphs) != len(self.graph_labels):
            raise ShapeMismatch("graph_labels length != number of graphs")
        if self.graph_props is not None and len(self.graph_props) != len(self.graphs):
            raise ShapeMismatch("graph_props length != number of graphs")

    def __len__(self) -> int:
        return len(self.graphs)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _as_masks(num_nodes: int, masks) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Normalize masks given as None, {name: ids-or-bool}, or a 3-tuple of bool arrays."""
    out = []
    if masks is None:
        masks = {}
    if isinstance(masks, dict):
        for name in MASK_NAMES:
            val = masks.get(name)
            if val is None:
                out.append(np.zeros(num_nodes, dtype=bool))
                continue
            val = np.asarray(val)
            if val.dtype == bool:
                if val.shape != (num_nodes,):
                    raise ShapeMismatch(f"mask '{name}' has shape {val.shape}, want ({num_nodes},)")
                out.append(val.astype(bool))
            else:
                ids = val.astype(np.int64)
                if ids.size and (ids.min() < 0 or ids.max() >= num_nodes):
                    raise OutOfRangeNode(f"mask '{name}' contains out-of-range node id")
                m = np.zeros(num_nodes, dtype=bool)
                m[ids] = True
                out.append(m)
    else:
        for name, val in zip(MASK_NAMES, masks):
            val = np.asarray(val, dtype=bool)
            if val.shape != (num_nodes,):
                raise ShapeMismatch(f"mask '{name}' has shape {val.shape}, want ({num_nodes},)")
            out.append(val)
    return tuple(out)


def build_graph(edge_list, num_nodes: int, features=None, labels=None, masks=None,
                node_attrs=None) -> Graph:
    """Assemble an undirected Graph from an edge list.

    Input edges are symmetrized; duplicates and self-loops are dropped. Rows
    come out sorted, so the CSR invariants hold by construction.
    """
    num_nodes = int(num_nodes)
    if num_nodes < 0:
        raise InvariantViolation("num_nodes must be >= 0")

    edges = np.asarray(list(edge_list), dtype=np.int64).reshape(-1, 2)
    if edges.size and (edges.min() < 0 or edges.max() >= num_nodes):
        bad = edges[(edges >= num_nodes).any(axis=1) | (edges < 0).any(axis=1)][0]
        raise OutOfRangeNode(f"edge {tuple(bad)} has endpoint outside [0, {num_nodes})")

    if features is None:
        features = np.zeros((num_nodes, 0), dtype=np.float64)
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] != num_nodes:
        raise ShapeMismatch(f"features shape {features.shape}, want ({num_nodes}, d)")

    if labels is None:
        labels = np.full(num_nodes, -1, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (num_nodes,):
        raise ShapeMismatch(f"labels shape {labels.shape}, want ({num_nodes},)")

    train, valid, test = _as_masks(num_nodes, masks)

    # Symmetrize, drop self-loops, dedupe via packed codes.
    if edges.size:
        both = np.concatenate([edges, edges[:, ::-1]], axis=0)
        both = both[both[:, 0] != both[:, 1]]
        codes = np.unique(both[:, 0] * num_nodes + both[:, 1])
        src = codes // num_nodes
        dst = codes % num_nodes
    else:
        src = np.zeros(0, dtype=np.int64)
        dst = np.zeros(0, dtype=np.int64)

    row_ptr = np.zeros(num_nodes + 1, dtype=np.int64)
    np.add.at(row_ptr, src + 1, 1)
    row_ptr = np.cumsum(row_ptr)

    attrs = {}
    if node_attrs:
        for name, col in node_attrs.items():
            col = np.asarray(col)
            if col.shape != (num_nodes,):
                raise ShapeMismatch(f"node attr '{name}' shape {col.shape}, want ({num_nodes},)")
            attrs[name] = _freeze(col.copy())

    g = Graph(
        num_nodes=num_nodes,
        row_ptr=_freeze(row_ptr),
        col_idx=_freeze(dst),
        features=_freeze(features.copy()),
        labels=_freeze(labels.copy()),
        train_mask=_freeze(train.copy()),
        valid_mask=_freeze(valid.copy()),
        test_mask=_freeze(test.copy()),
        node_attrs=attrs,
    )
    validate_graph(g)
    return g


def validate_graph(g: Graph) -> None:
    """Check every Graph invariant; raise InvariantViolation naming the field."""
    n = g.num_nodes
    if g.row_ptr.shape != (n + 1,):
        raise InvariantViolation(f"row_ptr: length {g.row_ptr.shape[0]}, want {n + 1}")
    if g.row_ptr[0] != 0:
        raise InvariantViolation("row_ptr: first entry must be 0")
    if np.any(np.diff(g.row_ptr) < 0):
        raise InvariantViolation("row_ptr: must be non-decreasing")
    if g.row_ptr[-1] != len(g.col_idx):
        raise InvariantViolation("row_ptr: last entry must equal len(col_idx)")
    if len(g.col_idx) and (g.col_idx.min() < 0 or g.col_idx.max() >= n):
        raise InvariantViolation("col_idx: node id out of range")
    for u in range(n):
        row = g.col_idx[g.row_ptr[u]:g.row_ptr[u + 1]]
        if row.size and np.any(np.diff(row) <= 0):
            raise InvariantViolation(f"col_idx: row {u} not strictly increasing")
        if np.any(row == u):
            raise InvariantViolation(f"col_idx: self-loop at node {u}")
    # Symmetry: the set of (u, v) must equal the set of (v, u).
    u = np.repeat(np.arange(n), np.diff(g.row_ptr))
    fwd = u * n + g.col_idx
    rev = g.col_idx * n + u
    if not np.array_equal(np.sort(fwd), np.sort(rev)):
        raise InvariantViolation("col_idx: adjacency not symmetric")
    if g.features.shape[0] != n:
        raise InvariantViolation("features: row count != num_nodes")
    if not np.all(np.isfinite(g.features)):
        raise InvariantViolation("features: non-finite entry")
    if g.labels.shape != (n,):
        raise InvariantViolation("labels: length != num_nodes")
    for name, mask in zip(MASK_NAMES, (g.train_mask, g.valid_mask, g.test_mask)):
        if mask.shape != (n,) or mask.dtype != np.bool_:
            raise InvariantViolation(f"masks: '{name}' must be bool of length {n}")
    overlap = (g.train_mask & g.valid_mask) | (g.train_mask & g.test_mask) | (g.valid_mask & g.test_mask)
    if overlap.any():
        raise InvariantViolation("masks: train/valid/test not pairwise disjoint")
    unlabeled = g.labels == -1
    if ((g.train_mask | g.valid_mask | g.test_mask) & unlabeled).any():
        raise InvariantViolation("masks: unlabeled node included in a mask")
    if g.edge_weight is not None and g.edge_weight.shape != g.col_idx.shape:
        raise InvariantViolation("edge_weight: length != len(col_idx)")


def sym_normalized_adjacency(g: Graph, add_self_loops: bool = True) -> sp.csr_matrix:
    """Symmetric GCN normalization as a scipy CSR matrix.

    weight(u, v) = 1 / sqrt(deg(u) * deg(v)), where deg counts the self-loop
    when `add_self_loops` is on; an isolated node then keeps weight 1 on its
    diagonal. With self-loops off, isolated rows stay empty.
    """
    n = g.num_nodes
    deg = g.degrees().astype(np.float64)
    if add_self_loops:
        deg = deg + 1.0

    u = np.repeat(np.arange(n), np.diff(g.row_ptr))
    v = g.col_idx
    if add_self_loops:
        u = np.concatenate([u, np.arange(n)])
        v = np.concatenate([v, np.arange(n)])
    # Single sqrt keeps w(u,v) exact for integer degree products (e.g. 1/(d+1)
    # on regular graphs).
    w = 1.0 / np.sqrt(deg[u] * deg[v])
    mat = sp.csr_matrix((w, (u, v)), shape=(n, n))
    mat.sort_indices()
    return mat


def mean_neighbor_adjacency(g: Graph) -> sp.csr_matrix:
    """Row-normalized adjacency D^{-1} A; isolated nodes get an all-zero row."""
    deg = g.degrees().astype(np.float64)
    with np.errstate(divide="ignore"):
        inv = np.where(deg > 0, 1.0 / deg, 0.0)
    w = np.repeat(inv, np.diff(g.row_ptr))
    return sp.csr_matrix((w, g.col_idx.astype(np.int64), g.row_ptr.astype(np.int64)),
                         shape=(g.num_nodes, g.num_nodes))


def edge_homophily(g: Graph) -> float:
    """Fraction of undirected edges whose endpoints share a label."""
    edges = g.undirected_edges()
    if len(edges) == 0:
        raise NoEdges("edge_homophily needs at least one edge")
    lu = g.labels[edges[:, 0]]
    lv = g.labels[edges[:, 1]]
    if np.any(lu == -1) or np.any(lv == -1):
        raise UnlabeledEndpoint("edge_homophily: every edge endpoint must be labeled")
    return float(np.mean(lu == lv))


def induced_subgraph(g: Graph, nodes: Iterable[int]) -> tuple[Graph, dict]:
    """Subgraph on `nodes` keeping exactly the within-set edges.

    New ids are dense in sorted order of the old ids; returns (subgraph,
    id_map old -> new).
    """
    old = np.unique(np.asarray(list(nodes), dtype=np.int64))
    if old.size and (old.min() < 0 or old.max() >= g.num_nodes):
        raise OutOfRangeNode("induced_subgraph: node id out of range")
    id_map = {int(o): i for i, o in enumerate(old)}

    lookup = np.full(g.num_nodes, -1, dtype=np.int64)
    lookup[old] = np.arange(old.size)

    edges = g.undirected_edges()
    if len(edges):
        keep = (lookup[edges[:, 0]] >= 0) & (lookup[edges[:, 1]] >= 0)
        sub_edges = lookup[edges[keep]]
    else:
        sub_edges = np.zeros((0, 2), dtype=np.int64)

    attrs = {name: col[old] for name, col in g.node_attrs.items()}
    sub = build_graph(
        sub_edges,
        old.size,
        features=g.features[old],
        labels=g.labels[old],
        masks=(g.train_mask[old], g.valid_mask[old], g.test_mask[old]),
        node_attrs=attrs,
    )
    return sub, id_map


# ---------------------------------------------------------------------------
# Disk format
# ---------------------------------------------------------------------------

def graph_to_dict(g: Graph) -> dict:
    """Canonical JSON-ready dict (each undirected edge listed once, u < v)."""
    doc = {
        "format_version": GRAPH_FORMAT_VERSION,
        "directed": False,
        "num_nodes": g.num_nodes,
        "edges": g.undirected_edges().tolist(),
        "features": g.features.tolist(),
        "labels": g.labels.tolist(),
        "masks": {name: g.mask_ids(name).tolist() for name in MASK_NAMES},
    }
    if g.node_attrs:
        doc["node_attrs"] = {name: col.tolist() for name, col in sorted(g.node_attrs.items())}
    return doc


def graph_from_dict(doc: dict) -> Graph:
    if not isinstance(doc, dict):
        raise ParseError("graph document must be a JSON object")
    for key in ("format_version", "directed", "num_nodes", "edges", "features", "labels"):
        if key not in doc:
            raise ParseError(f"missing field '{key}'")
    if doc["format_version"] != GRAPH_FORMAT_VERSION:
        raise ParseError(f"unsupported format_version {doc['format_version']}")
    if doc["directed"] is not False:
        raise InvariantViolation("directed: only undirected graphs are supported (directed must be false)")
    try:
        return build_graph(
            np.asarray(doc["edges"], dtype=np.int64).reshape(-1, 2),
            int(doc["num_nodes"]),
            features=np.asarray(doc["features"], dtype=np.float64).reshape(int(doc["num_nodes"]), -1),
            labels=doc["labels"],
            masks=doc.get("masks"),
            node_attrs=doc.get("node_attrs"),
        )
    except (ValueError, TypeError) as exc:
        raise ParseError(f"malformed graph document: {exc}") from exc


def save_graph(g: Graph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(graph_to_dict(g), fh, separators=(",", ":"))
        fh.write("\n")


def load_graph(path) -> Graph:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from exc
    return graph_from_dict(doc)


def graph_fingerprint(g: Graph) -> str:
    """sha256 of the canonical serialized form; stable across processes."""
    payload = json.dumps(graph_to_dict(g), separators=(",", ":"), sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def graphs_equal(a: Graph, b: Graph) -> bool:
    """Exact field-wise equality (bitwise on float arrays)."""
    if a.num_nodes != b.num_nodes:
        return False
    pairs = [
        (a.row_ptr, b.row_ptr), (a.col_idx, b.col_idx), (a.labels, b.labels),
        (a.train_mask, b.train_mask), (a.valid_mask, b.valid_mask), (a.test_mask, b.test_mask),
    ]
    if not all(np.array_equal(x, y) for x, y in pairs):
        return False
    if a.features.shape != b.features.shape or not np.array_equal(a.features, b.features):
        return False
    if sorted(a.node_attrs) != sorted(b.node_attrs):
        return False
    return all(np.array_equal(a.node_attrs[k], b.node_attrs[k]) for k in a.node_attrs)

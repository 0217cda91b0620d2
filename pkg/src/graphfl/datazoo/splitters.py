"""Splitters: disperse a standalone graph or graph collection into N clients.

Each splitter is a pure function of (source, config, seed) and records a
manifest sufficient to reproduce the split byte-for-byte. Partition-type
splitters produce disjoint node sets whose union is the source node set.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from ..errors import (
    DataError,
    EmptyClass,
    InvalidParams,
    MissingProps,
    ParseError,
    TooFewGroups,
    TooManyClients,
    UnknownAttribute,
)
from ..graph import (
    Graph,
    GraphCollection,
    build_graph,
    graph_fingerprint,
    induced_subgraph,
    load_graph,
    save_graph,
)
from ..rng import ROLE_SPLIT, derive_rng
from .louvain import louvain_partition


@dataclass
class FederatedDataset:
    manifest: dict               # splitter, config, seed, num_clients, source_sha256
    clients: list                # Graph (node-level) or GraphCollection (graph-level)

    @property
    def num_clients(self) -> int:
        return len(self.clients)


def collection_fingerprint(coll: GraphCollection) -> str:
    h = hashlib.sha256()
    for g in coll.graphs:
        h.update(graph_fingerprint(g).encode())
    h.update(json.dumps(coll.graph_labels.tolist()).encode())
    if coll.graph_props is not None:
        h.update(json.dumps(coll.graph_props.tolist()).encode())
    return h.hexdigest()


def _make_manifest(splitter: str, config: dict, seed: int, num_clients: int, source_sha: str) -> dict:
    return {
        "splitter": splitter,
        "config": config,
        "seed": int(seed),
        "num_clients": int(num_clients),
        "source_sha256": source_sha,
    }


def _greedy_balance(groups: list[np.ndarray], num_clients: int) -> list[np.ndarray]:
    """Assign groups to clients, largest group first, each to the currently
    smallest client (ties to the smaller client id)."""
    order = sorted(range(len(groups)), key=lambda i: (-len(groups[i]), i))
    buckets: list[list] = [[] for _ in range(num_clients)]
    sizes = [0] * num_clients
    for gi in order:
        target = min(range(num_clients), key=lambda c: (sizes[c], c))
        buckets[target].extend(groups[gi].tolist())
        sizes[target] += len(groups[gi])
    return [np.asarray(sorted(b), dtype=np.int64) for b in buckets]


def _drop_edges(g: Graph, frac: float, rng) -> Graph:
    """Remove floor(frac * m) undirected edges uniformly without replacement."""
    m = g.num_edges
    k = int(math.floor(frac * m))
    if k == 0:
        return g
    edges = g.undirected_edges()
    drop = rng.choice(m, size=k, replace=False)
    keep = np.ones(m, dtype=bool)
    keep[drop] = False
    return build_graph(
        edges[keep], g.num_nodes,
        features=g.features, labels=g.labels,
        masks=(g.train_mask, g.valid_mask, g.test_mask),
        node_attrs=g.node_attrs,
    )


# ---------------------------------------------------------------------------
# Node-level splitters
# ---------------------------------------------------------------------------

def random_splitter(g: Graph, num_clients: int, overlap: bool = False,
                    drop_edge_frac: float = 0.0, seed: int = 0,
                    overlap_frac: float = 0.1) -> FederatedDataset:
    """Shuffle nodes into near-equal subsets, induce subgraphs, drop edges.

    With `overlap` on, a fraction `overlap_frac` of nodes is duplicated into a
    second client.
    """
    if num_clients < 1 or num_clients > g.num_nodes:
        raise TooManyClients(f"cannot split {g.num_nodes} nodes into {num_clients} clients")
    if not (0.0 <= drop_edge_frac < 1.0):
        raise InvalidParams("drop_edge_frac must be in [0, 1)")
    rng = derive_rng(seed, ROLE_SPLIT)

    perm = rng.permutation(g.num_nodes)
    parts = [p.copy() for p in np.array_split(perm, num_clients)]

    if overlap and num_clients > 1:
        n_dup = int(round(overlap_frac * g.num_nodes))
        dup_nodes = rng.choice(g.num_nodes, size=n_dup, replace=False)
        home = np.empty(g.num_nodes, dtype=np.int64)
        for ci, part in enumerate(parts):
            home[part] = ci
        for node in dup_nodes:
            other = int(rng.integers(0, num_clients - 1))
            if other >= home[node]:
                other += 1
            parts[other] = np.append(parts[other], node)

    clients = []
    for part in parts:
        sub, _ = induced_subgraph(g, part)
        clients.append(_drop_edges(sub, drop_edge_frac, rng))

    config = {"overlap": bool(overlap), "drop_edge_frac": float(drop_edge_frac),
              "overlap_frac": float(overlap_frac)}
    manifest = _make_manifest("random", config, seed, num_clients, graph_fingerprint(g))
    return FederatedDataset(manifest=manifest, clients=clients)


def community_splitter(g: Graph, num_clients: int, seed: int = 0) -> FederatedDataset:
    """Louvain communities assigned greedily to clients; cross-client edges drop.

    If Louvain finds fewer communities than clients, the largest community is
    split randomly in half until there are enough groups.
    """
    if num_clients < 1 or num_clients > g.num_nodes:
        raise TooManyClients(f"cannot split {g.num_nodes} nodes into {num_clients} clients")
    rng = derive_rng(seed, ROLE_SPLIT)

    assignment = louvain_partition(g)
    groups = [np.flatnonzero(assignment == c) for c in range(int(assignment.max()) + 1)]
    while len(groups) < num_clients:
        big = max(range(len(groups)), key=lambda i: (len(groups[i]), -i))
        members = rng.permutation(groups[big])
        half = len(members) // 2
        groups[big] = np.sort(members[:half])
        groups.append(np.sort(members[half:]))

    parts = _greedy_balance(groups, num_clients)
    clients = [induced_subgraph(g, part)[0] for part in parts]
    manifest = _make_manifest("community", {}, seed, num_clients, graph_fingerprint(g))
    return FederatedDataset(manifest=manifest, clients=clients)


def attribute_splitter(g: Graph, attr_name: str, num_clients: int) -> FederatedDataset:
    """Group nodes by a categorical attribute value, balance groups to clients."""
    if attr_name not in g.node_attrs:
        raise UnknownAttribute(f"node attribute '{attr_name}' not present")
    col = g.node_attrs[attr_name]
    values = sorted({str(v) for v in col.tolist()})
    if len(values) < num_clients:
        raise TooFewGroups(f"{len(values)} distinct values of '{attr_name}' < {num_clients} clients")

    as_str = np.asarray([str(v) for v in col.tolist()])
    groups = [np.flatnonzero(as_str == val) for val in values]
    parts = _greedy_balance(groups, num_clients)
    clients = [induced_subgraph(g, part)[0] for part in parts]
    manifest = _make_manifest("attribute", {"attr_name": attr_name}, 0, num_clients,
                              graph_fingerprint(g))
    return FederatedDataset(manifest=manifest, clients=clients)


# ---------------------------------------------------------------------------
# Label-space (LDA) splitter: works on a labeled graph or a graph collection
# ---------------------------------------------------------------------------

def _lda_assign(labels: np.ndarray, num_clients: int, alpha: float, rng) -> np.ndarray:
    """Per class, draw Dirichlet(alpha) client proportions and assign items
    multinomially. Returns the client index of every item (-1 for unlabeled)."""
    assignment = np.full(len(labels), -1, dtype=np.int64)
    classes = np.unique(labels[labels >= 0])
    if classes.size == 0:
        raise EmptyClass("no labeled items to split")
    for cls in classes:
        ids = np.flatnonzero(labels == cls)
        props = rng.dirichlet(np.full(num_clients, alpha))
        assignment[ids] = rng.choice(num_clients, size=len(ids), p=props)

    # Repair empty clients: move one random item from the largest client.
    for client in range(num_clients):
        if np.count_nonzero(assignment == client) > 0:
            continue
        counts = [np.count_nonzero(assignment == c) for c in range(num_clients)]
        donor = max(range(num_clients), key=lambda c: (counts[c], -c))
        donor_items = np.flatnonzero(assignment == donor)
        moved = donor_items[int(rng.integers(0, len(donor_items)))]
        assignment[moved] = client
    return assignment


def label_space_splitter(items, num_clients: int, alpha: float, seed: int = 0) -> FederatedDataset:
    """Dirichlet label-skew split of a labeled Graph (over its labeled nodes)
    or a GraphCollection (over its graphs)."""
    if alpha <= 0:
        raise InvalidParams("alpha must be > 0")
    rng = derive_rng(seed, ROLE_SPLIT)
    config = {"alpha": float(alpha)}

    if isinstance(items, Graph):
        assignment = _lda_assign(items.labels, num_clients, alpha, rng)
        clients = [induced_subgraph(items, np.flatnonzero(assignment == c))[0]
                   for c in range(num_clients)]
        manifest = _make_manifest("label_space", config, seed, num_clients,
                                  graph_fingerprint(items))
        return FederatedDataset(manifest=manifest, clients=clients)

    coll: GraphCollection = items
    assignment = _lda_assign(coll.graph_labels, num_clients, alpha, rng)
    clients = []
    for c in range(num_clients):
        ids = np.flatnonzero(assignment == c)
        clients.append(GraphCollection(
            graphs=[coll.graphs[i] for i in ids],
            graph_labels=coll.graph_labels[ids],
            graph_props=None if coll.graph_props is None else coll.graph_props[ids],
        ))
    manifest = _make_manifest("label_space", config, seed, num_clients,
                              collection_fingerprint(coll))
    return FederatedDataset(manifest=manifest, clients=clients)


def instance_space_splitter(coll: GraphCollection, num_clients: int) -> FederatedDataset:
    """Sort graphs by their scalar property; contiguous near-equal segments."""
    if coll.graph_props is None:
        raise MissingProps("instance_space_splitter needs graph_props")
    if num_clients < 1 or num_clients > len(coll):
        raise TooManyClients(f"cannot split {len(coll)} graphs into {num_clients} clients")
    order = np.argsort(coll.graph_props, kind="stable")
    segments = np.array_split(order, num_clients)
    clients = [GraphCollection(
        graphs=[coll.graphs[i] for i in seg],
        graph_labels=coll.graph_labels[seg],
        graph_props=coll.graph_props[seg],
    ) for seg in segments]
    manifest = _make_manifest("instance_space", {}, 0, num_clients,
                              collection_fingerprint(coll))
    return FederatedDataset(manifest=manifest, clients=clients)


# ---------------------------------------------------------------------------
# Disk layout: manifest.json + client_0.json ... client_{N-1}.json
# ---------------------------------------------------------------------------

def save_federated_dataset(ds: FederatedDataset, outdir) -> None:
    if not all(isinstance(c, Graph) for c in ds.clients):
        raise DataError("only node-level (Graph) datasets have a disk format")
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(ds.manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for i, g in enumerate(ds.clients):
        save_graph(g, os.path.join(outdir, f"client_{i}.json"))


def load_federated_dataset(path) -> FederatedDataset:
    manifest_path = os.path.join(path, "manifest.json")
    try:
        with open(manifest_path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
    except FileNotFoundError as exc:
        raise ParseError(f"no manifest.json in {path}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid manifest.json: {exc}") from exc
    for key in ("splitter", "config", "seed", "num_clients", "source_sha256"):
        if key not in manifest:
            raise ParseError(f"manifest.json missing field '{key}'")
    clients = [load_graph(os.path.join(path, f"client_{i}.json"))
               for i in range(int(manifest["num_clients"]))]
    return FederatedDataset(manifest=manifest, clients=clients)


def resplit_from_manifest(manifest: dict, source) -> FederatedDataset:
    """Re-run the split recorded in a manifest; verifies the source fingerprint."""
    name = manifest["splitter"]
    seed = int(manifest["seed"])
    n = int(manifest["num_clients"])
    cfg = manifest["config"]

    if isinstance(source, Graph):
        actual = graph_fingerprint(source)
    else:
        actual = collection_fingerprint(source)
    if actual != manifest["source_sha256"]:
        raise DataError("source fingerprint does not match manifest.source_sha256")

    if name == "random":
        return random_splitter(source, n, overlap=cfg["overlap"],
                               drop_edge_frac=cfg["drop_edge_frac"], seed=seed,
                               overlap_frac=cfg["overlap_frac"])
    if name == "community":
        return community_splitter(source, n, seed=seed)
    if name == "attribute":
        return attribute_splitter(source, cfg["attr_name"], n)
    if name == "label_space":
        return label_space_splitter(source, n, alpha=cfg["alpha"], seed=seed)
    if name == "instance_space":
        return instance_space_splitter(source, n)
    raise ParseError(f"unknown splitter '{name}' in manifest")

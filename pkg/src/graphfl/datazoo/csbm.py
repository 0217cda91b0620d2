"""Federal contextual stochastic-block-model generator.

Every client's node features come from the same two-Gaussian mixture (one
global direction is drawn once and shared), while the structural signal --
hence the homophily level -- varies per client through phi:

    lambda_c = lambda_max * sin(phi_c * pi / 2)
    P(edge within community)  = (d + lambda_c * sqrt(d)) / n
    P(edge across communities) = (d - lambda_c * sqrt(d)) / n

Features are x_i = sqrt(mu/n) * v_i * u + z_i / sqrt(p) with v_i in {-1,+1}
uniform, u ~ N(0, I_p / p) shared, z_i ~ N(0, I_p). Labels are the planted
communities; masks are stratified per class (default 60/20/20).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidParams
from ..graph import Graph, build_graph
from ..rng import ROLE_GEN, derive_rng
from .splitters import FederatedDataset


def default_lambda_max(n: int, d: float) -> float:
    """0.9 * sqrt(d) * (1 - d/n), clipped so both edge probabilities stay valid."""
    lam = 0.9 * math.sqrt(d) * (1.0 - d / n)
    return min(lam, math.sqrt(d), (n - d) / math.sqrt(d))


@dataclass(frozen=True)
class CsbmParams:
    n: int                      # nodes per client
    p: int                      # feature dimension
    d: float                    # average degree
    mu: float                   # feature signal strength
    phi_per_client: tuple       # one phi in [0, 1] per client
    lambda_max: float = None    # None -> default_lambda_max(n, d)
    seed: int = 0
    mask_ratios: tuple = (0.6, 0.2, 0.2)

    def __post_init__(self):
        object.__setattr__(self, "phi_per_client", tuple(float(x) for x in self.phi_per_client))
        if self.lambda_max is None:
            object.__setattr__(self, "lambda_max", default_lambda_max(self.n, self.d))
        if self.n < 2:
            raise InvalidParams("n must be >= 2")
        if self.p < 1:
            raise InvalidParams("p must be >= 1")
        if self.d < 1:
            raise InvalidParams("d must be >= 1")
        if not self.phi_per_client:
            raise InvalidParams("phi_per_client must be nonempty")
        if any(not (0.0 <= phi <= 1.0) for phi in self.phi_per_client):
            raise InvalidParams("phi values must lie in [0, 1]")
        if (self.d + self.lambda_max * math.sqrt(self.d)) / self.n > 1.0:
            raise InvalidParams("(d + lambda_max*sqrt(d))/n must be <= 1")
        if self.d - self.lambda_max * math.sqrt(self.d) < 0.0:
            raise InvalidParams("lambda_max too large: across-community probability < 0")
        if len(self.mask_ratios) != 3 or abs(sum(self.mask_ratios) - 1.0) > 1e-9:
            raise InvalidParams("mask_ratios must be three values summing to 1")

    @property
    def num_clients(self) -> int:
        return len(self.phi_per_client)

    def lambda_for(self, client: int) -> float:
        return self.lambda_max * math.sin(self.phi_per_client[client] * math.pi / 2.0)

    def edge_probs(self, client: int) -> tuple[float, float]:
        lam = self.lambda_for(client)
        p_in = (self.d + lam * math.sqrt(self.d)) / self.n
        p_out = (self.d - lam * math.sqrt(self.d)) / self.n
        return p_in, p_out

    def to_dict(self) -> dict:
        return {
            "n": self.n, "p": self.p, "d": self.d, "mu": self.mu,
            "phi_per_client": list(self.phi_per_client),
            "lambda_max": self.lambda_max,
            "mask_ratios": list(self.mask_ratios),
        }


def _stratified_masks(labels: np.ndarray, ratios, rng) -> dict:
    masks = {"train": [], "valid": [], "test": []}
    for cls in np.unique(labels):
        ids = np.flatnonzero(labels == cls)
        ids = rng.permutation(ids)
        n_tr = int(math.floor(ratios[0] * len(ids)))
        n_va = int(math.floor(ratios[1] * len(ids)))
        masks["train"].extend(ids[:n_tr].tolist())
        masks["valid"].extend(ids[n_tr:n_tr + n_va].tolist())
        masks["test"].extend(ids[n_tr + n_va:].tolist())
    return masks


def _client_graph(params: CsbmParams, client: int, u: np.ndarray, rng) -> Graph:
    n, p = params.n, params.p
    v = rng.integers(0, 2, size=n) * 2 - 1
    noise = rng.normal(size=(n, p))
    features = math.sqrt(params.mu / n) * v[:, None] * u[None, :] + noise / math.sqrt(p)

    p_in, p_out = params.edge_probs(client)
    same = v[:, None] == v[None, :]
    prob = np.where(same, p_in, p_out)
    coin = rng.random((n, n))
    upper = np.triu(coin < prob, k=1)
    edges = np.argwhere(upper)

    labels = (v + 1) // 2
    masks = _stratified_masks(labels, params.mask_ratios, rng)
    return build_graph(edges, n, features=features, labels=labels, masks=masks)


def fedcsbm_generate(params: CsbmParams) -> FederatedDataset:
    """One graph per client; the feature direction u is drawn once and shared."""
    global_rng = derive_rng(params.seed, ROLE_GEN, 0)
    u = global_rng.normal(0.0, 1.0 / math.sqrt(params.p), size=params.p)

    clients = []
    for c in range(params.num_clients):
        rng = derive_rng(params.seed, ROLE_GEN, 1 + c)
        clients.append(_client_graph(params, c, u, rng))

    cfg = params.to_dict()
    fingerprint = hashlib.sha256(
        json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()
    manifest = {
        "splitter": "fedcsbm",
        "config": cfg,
        "seed": params.seed,
        "num_clients": params.num_clients,
        "source_sha256": fingerprint,
    }
    return FederatedDataset(manifest=manifest, clients=clients)

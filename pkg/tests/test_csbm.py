import numpy as np
import pytest

from graphfl.datazoo import CsbmParams, fedcsbm_generate
from graphfl.errors import InvalidParams
from graphfl.graph import edge_homophily, graphs_equal, validate_graph


def test_invalid_params():
    with pytest.raises(InvalidParams):
        CsbmParams(n=100, p=0, d=5, mu=1.0, phi_per_client=(0.5,))
    with pytest.raises(InvalidParams):
        CsbmParams(n=100, p=4, d=0.5, mu=1.0, phi_per_client=(0.5,))
    with pytest.raises(InvalidParams):
        CsbmParams(n=100, p=4, d=5, mu=1.0, phi_per_client=(1.5,))
    with pytest.raises(InvalidParams):
        # forces within-community probability above 1
        CsbmParams(n=10, p=4, d=9, mu=1.0, phi_per_client=(1.0,), lambda_max=5.0)


def test_phi_zero_homophily_half():
    vals = []
    for seed in range(5):
        params = CsbmParams(n=500, p=4, d=10, mu=0.0, phi_per_client=(0.0,), seed=seed)
        g = fedcsbm_generate(params).clients[0]
        vals.append(edge_homophily(g))
    assert np.mean(vals) == pytest.approx(0.5, abs=0.03)


def test_determinism_across_calls():
    params = CsbmParams(n=80, p=6, d=8, mu=2.0, phi_per_client=(0.3, 0.3), seed=42)
    a = fedcsbm_generate(params)
    b = fedcsbm_generate(params)
    for ga, gb in zip(a.clients, b.clients):
        assert graphs_equal(ga, gb)


def test_homophily_increases_with_phi():
    grid = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)
    per_phi = np.zeros(len(grid))
    for seed in range(5):
        params = CsbmParams(n=500, p=4, d=10, mu=0.0, phi_per_client=grid, seed=seed)
        ds = fedcsbm_generate(params)
        per_phi += np.array([edge_homophily(g) for g in ds.clients])
    per_phi /= 5
    assert np.all(np.diff(per_phi) > 0)


def test_valid_graphs_and_masks():
    params = CsbmParams(n=120, p=8, d=6, mu=1.0, phi_per_client=(0.2, 0.7), seed=3)
    ds = fedcsbm_generate(params)
    assert ds.manifest["num_clients"] == 2
    for g in ds.clients:
        validate_graph(g)
        n_tr = g.train_mask.sum()
        assert n_tr + g.valid_mask.sum() + g.test_mask.sum() == 120
        assert abs(n_tr - 72) <= 2  # 60% stratified per class, floor rounding
        assert set(np.unique(g.labels)) <= {0, 1}


def test_feature_distribution_identical_across_clients():
    # same mu, u, p, n: two-sample mean and covariance-trace checks at 3 sigma
    params = CsbmParams(n=2000, p=16, d=6, mu=8.0, phi_per_client=(0.1, 0.8), seed=11)
    ds = fedcsbm_generate(params)
    xa, xb = ds.clients[0].features, ds.clients[1].features
    na, nb = len(xa), len(xb)

    diff = xa.mean(axis=0) - xb.mean(axis=0)
    se = np.sqrt(xa.var(axis=0) / na + xb.var(axis=0) / nb)
    assert np.all(np.abs(diff) <= 3.0 * se)

    # traces of the sample covariance: compare via the variance sums
    ta = xa.var(axis=0, ddof=1).sum()
    tb = xb.var(axis=0, ddof=1).sum()
    # rough std of a variance estimate: var * sqrt(2/(n-1)) per coordinate
    se_tr = np.sqrt(np.sum((xa.var(axis=0) ** 2) * 2 / (na - 1))
                    + np.sum((xb.var(axis=0) ** 2) * 2 / (nb - 1)))
    assert abs(ta - tb) <= 3.0 * se_tr

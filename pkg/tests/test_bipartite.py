import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spreadkit.bipartite import (StarDemand, d_matching, default_c, edge_marginal, sample_c_neighbor_subgraph,
                                 sample_spread_pm_bipartite, sample_spread_star_matching, try_pm_once)
from spreadkit.errors import RetriesExhausted
from spreadkit.estimator import cp_interval
from spreadkit.hypergraph import BipartiteGraph
from spreadkit.matching import hall_violation, max_bipartite_matching
from spreadkit.regularity import generate_super_regular_pair
from spreadkit.rng import SeededRng

# per-slot vertex spread constant for star systems at n=80, d=0.5, D=30
STAR_C = 8


def perfect_matching_graph(n, rng):
    return BipartiteGraph.from_edges(n, n, enumerate(rng.permutation(n).tolist()))


def test_degree_one_graph_is_reproduced():
    G = perfect_matching_graph(12, SeededRng(0))
    for C in (1, 3, 10):
        assert np.array_equal(sample_c_neighbor_subgraph(G, C, SeededRng(C)).adj, G.adj)


def test_subgraph_is_deterministic_and_spanning():
    G = BipartiteGraph.random(30, 30, 0.5, SeededRng(1))
    H1 = sample_c_neighbor_subgraph(G, 4, SeededRng(7))
    H2 = sample_c_neighbor_subgraph(G, 4, SeededRng(7))
    assert np.array_equal(H1.adj, H2.adj)
    assert not (H1.adj & ~G.adj).any()
    assert H1.deg_a().min() >= 1 and H1.deg_b().min() >= 1


def test_subgraph_rejects_isolated_vertex_and_bad_c():
    adj = np.ones((4, 4), bool)
    adj[2] = False
    with pytest.raises(ValueError):
        sample_c_neighbor_subgraph(BipartiteGraph(adj), 2, SeededRng(0))
    with pytest.raises(ValueError):
        sample_c_neighbor_subgraph(BipartiteGraph.complete(3, 3), 0, SeededRng(0))


def test_complete_pair_edge_marginal():
    n, C, trials = 50, 10, 10_000
    G = BipartiteGraph.complete(n, n)
    want = 1 - (1 - 1 / n) ** (2 * C)
    assert np.allclose(edge_marginal(G, C), want)
    rng = SeededRng(11)
    hits = np.zeros((n, n), dtype=np.int64)
    for t in range(trials):
        hits += sample_c_neighbor_subgraph(G, C, rng.child(t)).adj
    for e in [(0, 0), (17, 33), (49, 1)]:
        lo, hi = cp_interval(int(hits[e]), trials, 0.999)
        assert lo <= want <= hi
    # the mean over all n^2 edges pins the marginal far more tightly
    assert abs(hits.mean() / trials - want) < 0.005
    assert want <= 2 * C / n


def test_hall_examples():
    assert hall_violation(BipartiteGraph.complete(4, 4)) is None
    adj = np.ones((4, 4), bool)
    adj[1] = False
    v = hall_violation(BipartiteGraph(adj))
    assert v.S == (1,) and v.neighborhood == ()
    with pytest.raises(ValueError):
        hall_violation(BipartiteGraph.complete(3, 4))


def brute_deficient(G):
    for size in range(1, G.na + 1):
        for S in itertools.combinations(range(G.na), size):
            if G.adj[list(S)].any(axis=0).sum() < size:
                return True
    return False


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(0, 10**6), st.floats(0.1, 0.6))
def test_hall_violation_matches_subset_oracle(n, seed, p):
    G = BipartiteGraph.random(n, n, p, SeededRng(seed))
    v = hall_violation(G)
    assert (v is None) == (not brute_deficient(G)) == (len(max_bipartite_matching(G)) == n)
    if v is not None:
        assert set(np.flatnonzero(G.adj[list(v.S)].any(axis=0))) == set(v.neighborhood)
        assert len(v.neighborhood) < len(v.S)


def test_sparse_six_by_six_violation():
    found = 0
    for s in range(200):
        G = BipartiteGraph.random(6, 6, 0.3, SeededRng(s))
        v = hall_violation(G)
        if v is not None:
            found += 1
            nbrs = G.adj[list(v.S)].any(axis=0).sum()
            assert nbrs < len(v.S)
    assert found > 0


def test_pm_output_is_perfect_in_g():
    G, _ = generate_super_regular_pair(100, 0.5, SeededRng(0))
    M = sample_spread_pm_bipartite(G, 25, SeededRng(1))
    assert len(M) == 100
    a_side = {a for a, _ in M.edges}
    b_side = {b for _, b in M.edges}
    assert a_side == set(range(100)) and b_side == set(range(100))
    assert all(G.adj[a, b] for a, b in M.edges)


def test_pm_sampler_replays():
    G, _ = generate_super_regular_pair(40, 0.5, SeededRng(2))
    assert sample_spread_pm_bipartite(G, 25, SeededRng(3)) == sample_spread_pm_bipartite(G, 25, SeededRng(3))


def test_single_attempt_success_rate():
    ok = 0
    for s in range(60):
        G, _ = generate_super_regular_pair(100, 0.5, SeededRng(s))
        ok += try_pm_once(G, 25, SeededRng(s, (1,))) is not None
    assert ok >= 45


def test_pm_retries_exhausted():
    adj = np.ones((4, 4), bool)
    adj[:, 0] = False
    adj[0, 0] = True
    adj[1, 0] = True
    adj[0, 1:] = False
    adj[1, 1:] = False
    with pytest.raises(RetriesExhausted):
        sample_spread_pm_bipartite(BipartiteGraph(adj), 3, SeededRng(0), max_retries=3)


def test_default_c():
    assert default_c(0.5) == 50 and default_c(1.0) == 25


def test_star_trivial_cases():
    G = BipartiteGraph.complete(10, 10)
    assert sample_spread_star_matching(G, StarDemand((0,) * 10, 3), 5, SeededRng(0)) == {}
    out = sample_spread_star_matching(G, StarDemand((1,) * 10, 1), 5, SeededRng(0))
    assert sorted(b for bs in out.values() for b in bs) == list(range(10))
    with pytest.raises(ValueError):
        StarDemand((4,), 3)
    with pytest.raises(ValueError):
        sample_spread_star_matching(G, StarDemand((2,) * 10, 2), 5, SeededRng(0))


def test_d_matching_is_none_when_hall_fails():
    H = BipartiteGraph.from_edges(2, 3, [(0, 0), (1, 0)])
    assert d_matching(H, [1, 1]) is None
    assert d_matching(BipartiteGraph.complete(2, 3), [2, 1]) is not None


def random_demands(n, cap, rng):
    dem = rng.integers(0, cap + 1, n)
    while dem.sum() > n:
        dem[rng.integers(n)] = 0
    return tuple(int(x) for x in dem)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_star_assignment_invariants(seed):
    rng = SeededRng(seed)
    G, _ = generate_super_regular_pair(40, 0.5, rng.child(0))
    dem = random_demands(40, 3, rng.child(1).gen)
    out = sample_spread_star_matching(G, StarDemand(dem, 3), 20, rng.child(2))
    used = [b for bs in out.values() for b in bs]
    assert len(used) == len(set(used))
    for a in range(40):
        bs = out.get(a, ())
        assert len(bs) == dem[a]
        assert all(G.adj[a, b] for b in bs)


def test_star_vertex_spread():
    n, D, trials = 80, 30, 1000
    G, _ = generate_super_regular_pair(n, 0.5, SeededRng(0))
    dem = random_demands(n, 3, SeededRng(1).gen)
    counts = np.zeros((n, n), dtype=np.int64)
    for t in range(trials):
        out = sample_spread_star_matching(G, StarDemand(dem, 3), D, SeededRng(2, (t,)))
        for a, bs in out.items():
            counts[a, list(bs)] += 1
    # a fixed leaf slot of star a lands on b with probability P[b in image(a)] / d_a
    slot = counts / np.maximum(1, np.array(dem))[:, None]
    worst = np.unravel_index(np.argmax(slot), slot.shape)
    assert slot[worst] / trials <= STAR_C / n

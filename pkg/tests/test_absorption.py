import math

import numpy as np
import pytest

from spreadkit.absorption import (EngineConfig, cover_down, extract_regular_subgraph, generate_dirac_host,
                                  greedy_min_degree_matching, nibble_matching, sample_partite_vortex,
                                  sample_spread_kr_factor_absorption, sample_spread_pm_dirac, sample_vortex)
from spreadkit.errors import StageFailure
from spreadkit.hypergraph import Hypergraph, is_matching, is_perfect_matching
from spreadkit.regularity import PartiteSystem, generate_super_regular_system
from spreadkit.rng import SeededRng


def union_of_matchings(n, t, rng):
    edges = set()
    for i in range(t):
        p = rng.child(i).permutation(n)
        edges.update(tuple(sorted(p[j:j + 3].tolist())) for j in range(0, n, 3))
    return Hypergraph(n, 3, sorted(edges))


def test_config_validation():
    with pytest.raises(ValueError):
        EngineConfig(eps=1.5)
    with pytest.raises(ValueError):
        EngineConfig(strategy="other")
    with pytest.raises(ValueError):
        EngineConfig().threshold(1, 5)
    assert EngineConfig(degree_threshold=0.7).threshold(1, 5) == 0.7


def test_vortex_below_floor_is_trivial():
    V = sample_vortex(Hypergraph.complete(20, 3), EngineConfig(), SeededRng(0))
    assert V.depth == 0 and V.sizes() == [20]


def test_vortex_nesting_and_band():
    cfg = EngineConfig()
    H = Hypergraph.complete(150, 3)
    for s in range(20):
        V = sample_vortex(H, cfg, SeededRng(s))
        assert V.depth >= 1
        for a, b in zip(V.sets, V.sets[1:]):
            assert set(b.tolist()) <= set(a.tolist())
            assert abs(len(b) / len(a) - cfg.shrink) <= cfg.size_slack * cfg.shrink
        assert len(V.sets[-1]) >= cfg.final_floor


def test_vortex_vertex_marginal():
    H, cfg, trials = Hypergraph.complete(150, 3), EngineConfig(), 10_000
    hits, size = 0, 0
    for s in range(trials):
        V = sample_vortex(H, cfg, SeededRng(7, (s,)))
        hits += 0 in set(V.sets[1].tolist())
        size += len(V.sets[1])
    assert hits / trials <= 2 * (size / trials) / 150


def test_partite_vortex_is_balanced():
    S = generate_super_regular_system(3, 60, 0.5, SeededRng(1))
    V = sample_partite_vortex(S, EngineConfig(), SeededRng(2))
    assert V.partite and V.depth >= 1
    for s in V.sets[1:]:
        counts = np.bincount(s // 60, minlength=3)
        assert len(set(counts.tolist())) == 1


def test_extract_from_union_of_matchings():
    H = union_of_matchings(12, 3, SeededRng(0))
    R = extract_regular_subgraph(H, 0.1, SeededRng(1), count=2, Q=12)
    assert set(R.edge_list()) <= set(H.edge_list())
    assert R.degrees().max() <= 2 and R.num_edges == 8


def test_extract_block_size_must_divide():
    with pytest.raises(ValueError):
        extract_regular_subgraph(Hypergraph.complete(12, 3), 0.1, SeededRng(0), Q=10)


def test_extracted_matchings_cover_most_vertices():
    H = Hypergraph.complete(60, 3)
    ok = 0
    for s in range(100):
        try:
            R = extract_regular_subgraph(H, 0.1, SeededRng(s), count=1, Q=12, partition_retries=1)
        except StageFailure:
            continue
        ok += R.num_edges * 3 >= 0.9 * 60
    assert ok >= 95


def test_extract_degree_cap():
    R = extract_regular_subgraph(Hypergraph.complete(60, 3), 0.1, SeededRng(3), count=8, Q=12)
    assert R.degrees().max() <= 8
    assert R.num_edges * 3 >= 8 * 0.9 * 60


def test_greedy_matching_is_maximal():
    H = Hypergraph.complete(15, 3).materialized()
    E = H.edges[SeededRng(0).random(H.num_edges) < 0.05]
    M = greedy_min_degree_matching(E, 15, SeededRng(1))
    used = np.zeros(15, bool)
    for row in M:
        assert not used[row].any()
        used[row] = True
    assert all(used[e].any() for e in E)


def test_nibble_output_is_matching():
    H = Hypergraph.complete(300, 3)
    res = nibble_matching(H, 1.0, 0.1, SeededRng(0), report=True)
    assert is_matching(H, res.matching)
    assert res.coverage >= 0.9
    assert res.rate == pytest.approx(64 / 300 ** 2)


def test_nibble_rejects_empty_host():
    with pytest.raises(ValueError):
        nibble_matching(Hypergraph(9, 3, []), None, 0.1, SeededRng(0))


def test_cover_down_contract():
    cfg = EngineConfig()
    H = Hypergraph.complete(150, 3)
    W = np.arange(150)
    for s in range(5):
        U = np.sort(SeededRng(s).permutation(150)[:45])
        res = cover_down(H, W, U, cfg, SeededRng(s, (1,)), report=True)
        in_u = np.zeros(150, bool)
        in_u[U] = True
        covered = np.zeros(150, bool)
        for e in res.matching.edges:
            inside = int((~in_u[list(e)]).sum())
            # every edge lies inside V \ U or meets it in exactly one vertex
            assert inside in (1, 3)
            assert not covered[list(e)].any()
            covered[list(e)] = True
        assert covered[~in_u].all()
        assert covered[in_u].sum() <= cfg.shrink * len(U)


def test_cover_down_needs_next_set():
    with pytest.raises(ValueError):
        cover_down(Hypergraph.complete(30, 3), np.arange(30), np.array([], dtype=np.int64), EngineConfig(),
                   SeededRng(0))


def test_dirac_pm_complete_and_replay():
    H = Hypergraph.complete(60, 3)
    trace = []
    M = sample_spread_pm_dirac(H, rng=SeededRng(5), trace=trace)
    assert is_perfect_matching(H, M)
    assert M == sample_spread_pm_dirac(H, rng=SeededRng(5))
    assert any(t.get("level") == "final" for t in trace)


def test_dirac_pm_random_host():
    H = generate_dirac_host(60, 3, 0.95, 0.9, SeededRng(2))
    assert H.degrees().min() >= 0.9 * math.comb(59, 2)
    assert is_perfect_matching(H, sample_spread_pm_dirac(H, rng=SeededRng(3)))


def test_dirac_pm_preconditions():
    with pytest.raises(ValueError):
        sample_spread_pm_dirac(Hypergraph.complete(31, 3))
    sparse = generate_dirac_host(30, 3, 0.4, 0.3, SeededRng(0))
    with pytest.raises(ValueError):
        sample_spread_pm_dirac(sparse)


def test_partite_absorption_on_complete_system():
    n = 30
    S = PartiteSystem(3, n, {(i, j): np.ones((n, n), bool) for i in range(3) for j in range(i + 1, 3)})
    M = sample_spread_kr_factor_absorption(S, rng=SeededRng(0))
    assert is_perfect_matching(S.clique_hypergraph(), M)

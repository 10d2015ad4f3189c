from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binom

from spreadkit.hypergraph import BipartiteGraph
from spreadkit.regularity import (GeneratorConfig, PartiteSystem, boost_to_super_regular, certify_regularity,
                                  certify_super_regular, counting_lemma_audit, generate_four_layer,
                                  generate_degree_regular_system, generate_super_regular_pair,
                                  generate_super_regular_system,
                                  inner_regular_split, pair_density)
from spreadkit.rng import SeededRng

from oracles import exhaustive_regularity


def test_pair_density_examples():
    assert pair_density(BipartiteGraph.complete(3, 4), None, None) == 1
    assert pair_density(BipartiteGraph(np.zeros((3, 3), bool)), None, None) == 0
    G = BipartiteGraph.from_edges(3, 3, [(0, 0), (0, 1), (1, 1), (2, 0), (2, 2)])
    assert pair_density(G, None, None) == Fraction(5, 9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_pair_density_symmetric(seed):
    adj = SeededRng(seed).random((10, 10)) < 0.4
    adj = np.triu(adj, 1)
    adj = adj | adj.T
    X, Y = [0, 1, 2, 3], [5, 6, 7]
    assert pair_density(adj, X, Y) == pair_density(adj, Y, X)


def test_exhaustive_examples():
    assert certify_regularity(BipartiteGraph.complete(8, 8), eps=0.2, method="exhaustive").score == 0
    M = np.zeros((8, 8), bool)
    M[:4, :4] = M[4:, 4:] = True
    cert = certify_regularity(BipartiteGraph(M), eps=0.25, method="exhaustive")
    assert cert.score >= 0.5
    with pytest.raises(ValueError):
        certify_regularity(BipartiteGraph.complete(17, 17), method="exhaustive")


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.integers(2, 6), st.integers(0, 10**6), st.sampled_from([0.2, 0.34, 0.5]))
def test_exhaustive_score_is_exact(a, b, seed, eps):
    M = SeededRng(seed).random((a, b)) < 0.5
    cert = certify_regularity(BipartiteGraph(M), eps=eps, method="exhaustive")
    want = exhaustive_regularity(M.astype(int).tolist(), eps)
    assert abs(cert.score - float(want)) < 1e-12


def test_codegree_score_random_pairs():
    passes = sum(certify_regularity(BipartiteGraph.random(40, 40, 0.5, SeededRng(s)), eps=0.15,
                                    method="codegree").passes() for s in range(100))
    assert passes >= 95


def test_super_regular_examples():
    assert certify_super_regular(BipartiteGraph.complete(8, 8), d=1, eps=0.1, delta=0.9).ok
    M = np.ones((8, 8), bool)
    M[3] = False
    v = certify_super_regular(BipartiteGraph(M), d=1, eps=0.2, delta=0.5)
    assert not v.ok and v.worst_vertex == ("A", 3)


def test_super_regular_random_pairs_match_degree_floor_probability():
    # regularity itself passes; the full verdict is limited by the degree floor
    # 0.35 * 40 = 14, which all 80 Bin(40, 1/2) degrees clear with probability
    # (1 - P[Bin <= 13])^80
    verdicts = [certify_super_regular(BipartiteGraph.random(40, 40, 0.5, SeededRng(s)), d=0.5, eps=0.15,
                                      delta=0.35) for s in range(100)]
    assert sum(v.certificate.passes() for v in verdicts) >= 95
    expected = (1 - binom.cdf(13, 40, 0.5)) ** 80
    rate = sum(v.ok for v in verdicts) / 100
    assert abs(rate - expected) <= 3 * np.sqrt(expected * (1 - expected) / 100)


def _system(r, n, d, seed):
    return generate_super_regular_system(r, n, d, SeededRng(seed))


def test_counting_lemma_trivial_cases():
    full = PartiteSystem(3, 5, {(i, j): np.ones((5, 5), bool) for i, j in [(0, 1), (0, 2), (1, 2)]})
    obs, _ = counting_lemma_audit(full, [(0, 1)], [range(3), range(4)], 0.1, 1.0)
    assert obs == 12
    obs, _ = counting_lemma_audit(full, [(0, 1), (1, 2), (0, 2)], [range(5)] * 3, 0.1, 1.0)
    assert obs == 125


def test_counting_lemma_band():
    inside = 0
    for s in range(100):
        S = _system(3, 30, 0.6, s)
        obs, (lo, hi) = counting_lemma_audit(S, [(0, 1), (1, 2), (0, 2)], [range(30)] * 3, 0.1, 20)
        A = [S.block(0, 1), S.block(1, 2), S.block(0, 2)]
        brute = sum(int(A[0][a, b] and A[1][b, c] and A[2][a, c])
                    for a in range(30) for b in range(30) for c in range(30)) if s < 3 else obs
        assert brute == obs
        inside += lo <= obs <= hi
    assert inside >= 95


def test_inner_split_regular_degrees_untouched():
    n = 20
    M = np.zeros((n, n), bool)
    for i in range(n):
        M[i, [(i + t) % n for t in range(10)]] = True
    out, rep = inner_regular_split(BipartiteGraph(M), 0.5, 0.05, SeededRng(0))
    assert np.array_equal(out.adj, M) and rep.removed_edges == 0


def test_inner_split_rejects_dense():
    with pytest.raises(ValueError):
        inner_regular_split(BipartiteGraph.complete(8, 8), 1.0, 0.05, SeededRng(0))


def test_inner_split_random_pairs():
    good = 0
    for s in range(100):
        G = BipartiteGraph.random(60, 60, 0.5, SeededRng(s))
        out, rep = inner_regular_split(G, 0.5, 0.05, SeededRng(s, (1,)))
        assert not (out.adj & ~G.adj).any()
        assert rep.removed_edges <= rep.removal_bound
        good += rep.kept_verdict.certificate.passes() and rep.complement_verdict.certificate.passes()
    assert good >= 90


def test_boost_identity_when_delta_equals_d():
    n = 20
    M = np.zeros((n, n), bool)
    for i in range(n):
        M[i, [(i + t) % n for t in range(10)]] = True
    out, rep = boost_to_super_regular(BipartiteGraph(M), 0.5, 0.04, 0.5, SeededRng(0))
    assert np.array_equal(out.adj, M)
    assert rep.exceptional_a == [] and rep.exceptional_b == []


def test_boost_keeps_low_vertex_floor():
    G = BipartiteGraph.random(40, 40, 0.5, SeededRng(3))
    adj = G.adj.copy()
    adj[0] = False
    adj[0, :13] = True
    out, rep = boost_to_super_regular(BipartiteGraph(adj), 0.5, 0.04, 0.3, SeededRng(1))
    assert 0 in rep.exceptional_a
    normal_b = np.ones(40, bool)
    normal_b[rep.exceptional_b] = False
    assert out.adj[0].sum() == min(12, (adj[0] & normal_b).sum())


def test_boost_contract_and_floor():
    n, eps, delta = 60, 0.06, 0.3
    ok = 0
    for s in range(100):
        G = BipartiteGraph.random(n, n, 0.6, SeededRng(s))
        out, rep = boost_to_super_regular(G, 0.6, eps, delta, SeededRng(s, (1,)))
        assert not (out.adj & ~G.adj).any()
        floor = delta * n * (1 - 4 * np.sqrt(eps))
        assert min(out.deg_a().min(), out.deg_b().min()) >= floor - 1e-9
        ok += rep.verdict.ok
    assert ok == 100


def test_generator_complete_when_d_is_one():
    S = _system(3, 10, 1.0, 0)
    assert all(M.all() for M in S.blocks.values())
    assert all(v == 0 for v in S.resamples.values())


def test_generator_acceptance_quick():
    fast = sum(generate_super_regular_pair(40, 0.5, SeededRng(s))[1] <= 5 for s in range(100))
    assert fast >= 99


def test_four_layer_structure():
    S = generate_four_layer(30, 0.5, SeededRng(1))
    assert set(S.blocks) == {(0, 1), (1, 2), (2, 3)}
    assert not S.block(0, 2).any() and not S.block(0, 3).any() and not S.block(1, 3).any()
    cfg = GeneratorConfig()
    for i in range(3):
        assert certify_super_regular(S.pair(i, i + 1), d=0.5, eps=cfg.eps, delta=0.25,
                                     density_tol=cfg.density_tol).ok


def test_partite_system_roundtrip():
    S = generate_degree_regular_system(3, 8, 2, SeededRng(2))
    assert all(M.sum(axis=0).tolist() == [6] * 8 for M in S.blocks.values())
    T = PartiteSystem.from_dict(S.to_dict())
    assert all(np.array_equal(S.block(*k), T.block(*k)) for k in S.blocks)

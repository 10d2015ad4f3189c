import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spreadkit.cli import dirac_graph
from spreadkit.estimator import cp_interval
from spreadkit.exact import BudgetExhausted, exact_hypergraph_pm
from spreadkit.hypergraph import BipartiteGraph, Hypergraph, complete_graph, random_ksets
from spreadkit.percolation import (CSV_COLUMNS, NonBracketing, clique_coupling_comparison,
                                   containment_probability, drift, estimate_threshold, factor_normalizer,
                                   loglog_slope, make_checker, pm_normalizer, random_subhost,
                                   sat_perfect_matching, scaling_experiment, write_csv)
from spreadkit.rng import SeededRng


def test_endpoints_are_deterministic():
    K = BipartiteGraph.complete(10, 10)
    assert containment_probability(K, "pm", 1.0, 20, SeededRng(0)).freq == 1
    assert containment_probability(K, "pm", 0.0, 20, SeededRng(0)).freq == 0
    H = Hypergraph.complete(9, 3)
    assert containment_probability(H, "pm", 1.0, 5, SeededRng(0)).freq == 1
    assert containment_probability(H, "pm", 0.0, 5, SeededRng(0)).freq == 0
    with pytest.raises(ValueError):
        containment_probability(K, "pm", 1.5, 5, SeededRng(0))


def test_knn_at_log_n_over_n_matches_isolated_vertex_limit():
    # below this scale a perfect matching exists iff no vertex is isolated, and the
    # isolated-vertex count is close to Poisson with mean 2n(1-p)^n
    n, trials = 128, 400
    p = math.log(n) / n
    c = containment_probability(BipartiteGraph.complete(n, n), "pm", p, trials, SeededRng(1))
    want = math.exp(-2 * n * (1 - p) ** n)
    lo, hi = cp_interval(c.successes, c.trials, 0.999)
    assert lo <= want <= hi


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_coupling_is_monotone(seed, p1, p2):
    p, q = sorted((p1, p2))
    check = make_checker("pm")
    for host in (BipartiteGraph.complete(8, 8), Hypergraph.complete(9, 3)):
        a = random_subhost(host, p, SeededRng(seed))
        b = random_subhost(host, q, SeededRng(seed))
        if isinstance(host, BipartiteGraph):
            assert not (a.adj & ~b.adj).any()
        else:
            assert set(a.edge_list()) <= set(b.edge_list())
        assert check(b) or not check(a)


@pytest.mark.parametrize("n, m", [(9, 10), (12, 25), (15, 60), (15, 200)])
def test_sat_agrees_with_search(n, m):
    for s in range(30):
        rng = SeededRng(s, (n, m))
        H = Hypergraph(n, 3, random_ksets(n, 3, m, rng))
        assert sat_perfect_matching(H) == (exact_hypergraph_pm(H) is not None)


def test_checkers_agree_on_random_subhosts():
    H = Hypergraph.complete(18, 3)
    sat, search = make_checker("pm"), make_checker("pm", solver="search")
    for t in range(40):
        sub = random_subhost(H, 0.06, SeededRng(2, (t,)))
        assert sat(sub) == search(sub)


def test_tiny_budget_excludes_trials():
    H = Hypergraph.complete(30, 3)
    c = containment_probability(H, "pm", 0.01, 10, SeededRng(0), budget=1, solver="search")
    assert c.excluded + c.trials == 10
    with pytest.raises(BudgetExhausted):
        sat_perfect_matching(random_subhost(Hypergraph.complete(60, 3), 0.004, SeededRng(1)), conflicts=1)


def test_checker_arguments():
    with pytest.raises(ValueError):
        make_checker("pm", solver="ilp")
    with pytest.raises(ValueError):
        make_checker("kr-factor")
    with pytest.raises(ValueError):
        make_checker("hamilton")
    assert make_checker("kr-factor", r=3)(complete_graph(6))
    assert not make_checker("kr-factor", r=3)(complete_graph(7))


def test_no_perfect_matching_does_not_bracket():
    adj = np.ones((5, 5), bool)
    adj[:, 0] = False
    with pytest.raises(NonBracketing):
        estimate_threshold(BipartiteGraph(adj), "pm", trials=10, rng=SeededRng(0))


def test_threshold_bracket_and_profile():
    n = 64
    est = estimate_threshold(BipartiteGraph.complete(n, n), "pm", trials=100, rng=SeededRng(2),
                             normalizer=math.log(n) / n)
    lo, hi = est.bracket
    assert lo <= est.p_hat <= hi and hi / lo <= 1.1
    assert 0.5 <= est.normalized <= 2
    freqs = [e.freq for e in est.evaluations]
    assert freqs == sorted(freqs)
    for e in est.evaluations:
        assert (e.freq >= 0.5) == (e.p >= hi)


def test_threshold_replays():
    K = BipartiteGraph.complete(32, 32)
    a = estimate_threshold(K, "pm", trials=50, rng=SeededRng(3))
    b = estimate_threshold(K, "pm", trials=50, rng=SeededRng(3))
    assert a.to_dict() == b.to_dict()


def test_dirac_host_threshold_same_order_as_complete():
    n = 256
    base = estimate_threshold(complete_graph(n), "pm", trials=100, rng=SeededRng(1))
    D = dirac_graph(n, 0.65, 0.55, SeededRng(2))
    assert D.degrees().min() >= 0.55 * n
    dirac = estimate_threshold(D, "pm", trials=100, rng=SeededRng(1))
    assert 1 / 3 <= dirac.p_hat / base.p_hat <= 3


def test_normalizers():
    for n in (10, 100):
        assert factor_normalizer(n, 2) == pytest.approx(math.log(n) / n)
        assert pm_normalizer(n, 2) == pytest.approx(math.log(n) / n)
    assert pm_normalizer(30, 3) == pytest.approx(math.log(30) / 900)


def test_scaling_rows_and_csv(tmp_path):
    rows = scaling_experiment(lambda n: BipartiteGraph.complete(n, n), "pm", [16, 32], 50, SeededRng(4),
                              lambda n: math.log(n) / n)
    assert [r.n for r in rows] == [16, 32]
    assert all(r.lo <= r.p_hat <= r.hi and r.ratio == pytest.approx(r.p_hat / r.normalizer) for r in rows)
    assert drift(rows) >= 1
    with pytest.raises(ValueError):
        scaling_experiment(lambda n: BipartiteGraph.complete(n, n), "pm", [32, 16], 10, SeededRng(0),
                           lambda n: 1.0)
    c = containment_probability(BipartiteGraph.complete(8, 8), "pm", 0.5, 20, SeededRng(0))
    write_csv([c.row("bipartite(8,8)", 8, "pm")], tmp_path / "c.csv")
    assert (tmp_path / "c.csv").read_text().splitlines()[0] == ",".join(CSV_COLUMNS)


def test_coupling_endpoints_on_complete_graph():
    res = clique_coupling_comparison(complete_graph(12), 3, [1.0], 20, SeededRng(0), a_grid=[1.0])
    assert res.curve_pm[0].freq == 1 and res.curve_factor[1.0][0].freq == 1


def test_coupling_aligned_constant_and_slope():
    ps, qs = [], []
    for n in (18, 24, 30):
        res = clique_coupling_comparison(complete_graph(n), 3, [1.0], 100, SeededRng(n))
        ps.append(res.p_hat)
        qs.append(res.q_hat)
        if n == 30:
            assert 0 < res.a_aligned < 3
    assert 0.25 <= loglog_slope(ps, qs) <= 0.5
    assert loglog_slope([1, 10, 100], [2, 20, 200]) == pytest.approx(1)

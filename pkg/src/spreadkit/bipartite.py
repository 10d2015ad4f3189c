"""Spread perfect matchings and star systems in dense bipartite graphs.

Every vertex draws ``C`` uniform neighbours with repetition; the union of all
draws is a sparse subgraph ``H`` that still has a perfect matching with good
probability.  Any perfect matching of ``H`` is then spread, because an edge
survives into ``H`` with probability at most ``2C/n``, independently across
disjoint edges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import RetriesExhausted
from .hypergraph import BipartiteGraph, Matching
from .matching import hopcroft_karp, random_order_matching
from .rng import SeededRng

DEFAULT_RETRIES = 20


def default_c(d: float) -> int:
    """Default number of neighbour draws for a pair of density ``d``."""
    return math.ceil(25 / d)


def _draw_neighbors(adj: np.ndarray, C: int, rng: SeededRng) -> np.ndarray:
    """Row-wise: C uniform draws (with repetition) among each row's neighbours."""
    deg = adj.sum(axis=1)
    rows, cols = np.nonzero(adj)
    ptr = np.zeros(adj.shape[0] + 1, dtype=np.int64)
    np.cumsum(deg, out=ptr[1:])
    draws = rng.gen.integers(0, deg[:, None], size=(adj.shape[0], C))
    return cols[ptr[:-1, None] + draws]


def sample_c_neighbor_subgraph(G: BipartiteGraph, C: int, rng: SeededRng) -> BipartiteGraph:
    """Union of C uniform neighbour draws from every vertex of both sides."""
    if C < 1:
        raise ValueError("C must be at least 1")
    if G.na == 0 or G.nb == 0:
        return BipartiteGraph(G.adj.copy())
    if G.deg_a().min() == 0 or G.deg_b().min() == 0:
        raise ValueError("isolated vertex")
    H = np.zeros_like(G.adj)
    pick_b = _draw_neighbors(G.adj, C, rng)
    H[np.repeat(np.arange(G.na), C), pick_b.ravel()] = True
    pick_a = _draw_neighbors(G.adj.T, C, rng)
    H[pick_a.ravel(), np.repeat(np.arange(G.nb), C)] = True
    return BipartiteGraph(H)


def edge_marginal(G: BipartiteGraph, C: int) -> np.ndarray:
    """Exact ``P[ab in H]`` for every pair (zero off the edges of G)."""
    da = G.deg_a().astype(float)
    db = G.deg_b().astype(float)
    miss = np.outer((1 - 1 / da) ** C, (1 - 1 / db) ** C)
    return np.where(G.adj, 1 - miss, 0.0)


def try_pm_once(G: BipartiteGraph, C: int, rng: SeededRng) -> Matching | None:
    """One attempt: draw H and return a perfect matching of H, or None."""
    H = sample_c_neighbor_subgraph(G, C, rng.child(0))
    M = random_order_matching(H, rng.child(1))
    return M if len(M) == G.na else None


def sample_spread_pm_bipartite(G: BipartiteGraph, C: int, rng: SeededRng,
                               max_retries: int = DEFAULT_RETRIES) -> Matching:
    """Spread perfect matching of a balanced bipartite graph.

    Attempt ``t`` uses ``rng.child(t)``; the first successful attempt wins.
    Callers are expected to have certified ``G`` as a dense super-regular pair.
    """
    if G.na != G.nb:
        raise ValueError("parts must have equal size")
    for t in range(max_retries):
        M = try_pm_once(G, C, rng.child(t))
        if M is not None:
            return M
    raise RetriesExhausted("bipartite perfect matching", max_retries)


# ---------------------------------------------------------------------------
# star systems

@dataclass(frozen=True)
class StarDemand:
    demands: tuple[int, ...]
    cap: int

    def __post_init__(self):
        if any(x < 0 for x in self.demands):
            raise ValueError("demands must be non-negative")
        if self.demands and max(self.demands) > self.cap:
            raise ValueError("demand above cap")

    @property
    def total(self) -> int:
        return sum(self.demands)


def star_subgraph(G: BipartiteGraph, D: int, rng: SeededRng) -> BipartiteGraph:
    """``G(D/|B|)`` together with D uniformly chosen edges at every vertex."""
    adj = G.adj
    H = adj & (rng.child(0).random(adj.shape) < min(1.0, D / max(G.nb, 1)))
    keys = rng.child(1).random(adj.shape)
    keys[~adj] = np.inf
    if D > 0:
        if G.nb:
            k = min(D, G.nb)
            part = np.argpartition(keys, k - 1, axis=1)[:, :k]
            pick = np.zeros_like(adj)
            np.put_along_axis(pick, part, True, axis=1)
            H |= pick & adj
        keys = rng.child(2).random(adj.shape)
        keys[~adj] = np.inf
        if G.na:
            k = min(D, G.na)
            part = np.argpartition(keys, k - 1, axis=0)[:k, :]
            pick = np.zeros_like(adj)
            np.put_along_axis(pick, part, True, axis=0)
            H |= pick & adj
    return BipartiteGraph(H)


def d_matching(H: BipartiteGraph, demands, rng: SeededRng | None = None) -> dict[int, tuple[int, ...]] | None:
    """A demand-respecting star system in ``H``, or None if Hall fails."""
    demands = list(demands)
    rows = np.repeat(np.arange(H.na), demands)
    if rows.size == 0:
        return {}
    sub = BipartiteGraph(H.adj[rows])
    if rng is None:
        match_a, _ = hopcroft_karp(sub.neighbors(), sub.nb)
        pairs = [(i, b) for i, b in enumerate(match_a) if b != -1]
    else:
        pairs = list(random_order_matching(sub, rng).edges)
    if len(pairs) < rows.size:
        return None
    out: dict[int, list[int]] = {}
    for i, b in pairs:
        out.setdefault(int(rows[i]), []).append(int(b))
    if rng is not None:
        gen = rng.child(1)
        return {a: tuple(int(x) for x in gen.permutation(bs)) for a, bs in sorted(out.items())}
    return {a: tuple(sorted(bs)) for a, bs in sorted(out.items())}


def sample_spread_star_matching(G: BipartiteGraph, demand: StarDemand, D: int,
                                rng: SeededRng, max_retries: int = DEFAULT_RETRIES
                                ) -> dict[int, tuple[int, ...]]:
    """Spread star system: each ``a`` gets ``d_a`` distinct, globally disjoint B-vertices.

    The leaves of each star come in uniformly random order, so a fixed leaf
    slot of ``a`` lands on ``b`` with probability ``P[b in image(a)] / d_a``.
    """
    if len(demand.demands) != G.na:
        raise ValueError("one demand per A-vertex")
    if demand.total > G.nb:
        raise ValueError("total demand exceeds |B|")
    if demand.total == 0:
        return {}
    for t in range(max_retries):
        r = rng.child(t)
        H = star_subgraph(G, D, r.child(0))
        out = d_matching(H, demand.demands, r.child(1))
        if out is not None:
            return out
    raise RetriesExhausted("star matching", max_retries)


def star_edge_bound(G: BipartiteGraph, D: int) -> float:
    """Upper bound on ``P[ab in H]`` for the star construction (max over edges)."""
    da = G.deg_a().astype(float)
    db = G.deg_b().astype(float)
    da[da == 0] = np.inf
    db[db == 0] = np.inf
    return float(min(1.0, D / G.nb + D / da.min() + D / db.min()))

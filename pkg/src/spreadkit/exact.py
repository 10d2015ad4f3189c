"""Exact perfect-matching and clique-factor search.

Backtracking exact cover over vertex bitsets.  At each node the solver picks
the uncovered vertex with the fewest compatible edges (ties to the lowest
label) and prunes as soon as some uncovered vertex has no compatible edge.
The budget counts node expansions, so an exhausted budget replays exactly.
"""
from __future__ import annotations

from typing import Iterable

import numpy as np

from .hypergraph import Factor, Hypergraph, Matching, clique_complex
from .rng import SeededRng

DEFAULT_BUDGET = 200_000


class BudgetExhausted(RuntimeError):
    """The search hit its node budget before reaching a verdict."""

    def __init__(self, nodes: int):
        super().__init__(f"node budget exhausted after {nodes} expansions")
        self.nodes = nodes


def _prepare(nv: int, edges: list[tuple[int, ...]]):
    masks = []
    inc: list[list[int]] = [[] for _ in range(nv)]
    for i, e in enumerate(edges):
        m = 0
        for v in e:
            m |= 1 << v
            inc[v].append(i)
        masks.append(m)
    return masks, inc


def _find_cover(nv: int, edges: list[tuple[int, ...]], budget: int) -> list[int] | None:
    masks, inc = _prepare(nv, edges)
    nodes = 0

    def rec(uncovered: list[int], cand: dict[int, list[int]]) -> list[int] | None:
        nonlocal nodes
        if not uncovered:
            return []
        nodes += 1
        if nodes > budget:
            raise BudgetExhausted(nodes)
        pivot = uncovered[0]
        best = len(cand[pivot])
        for u in uncovered:
            c = len(cand[u])
            if c < best:
                pivot, best = u, c
        for ei in cand[pivot]:
            em = masks[ei]
            rest = [u for u in uncovered if not (em >> u) & 1]
            new: dict[int, list[int]] = {}
            dead = False
            for u in rest:
                lst = [f for f in cand[u] if not masks[f] & em]
                if not lst:
                    dead = True
                    break
                new[u] = lst
            if dead:
                continue
            found = rec(rest, new)
            if found is not None:
                found.append(ei)
                return found
        return None

    verts = list(range(nv))
    if any(not inc[v] for v in verts):
        return None
    return rec(verts, {v: inc[v] for v in verts})


def _count_covers(nv: int, edges: list[tuple[int, ...]], budget: int) -> int:
    masks, inc = _prepare(nv, edges)
    nodes = 0

    def rec(uncovered: list[int], cand: dict[int, list[int]]) -> int:
        nonlocal nodes
        if not uncovered:
            return 1
        nodes += 1
        if nodes > budget:
            raise BudgetExhausted(nodes)
        pivot = uncovered[0]  # lowest uncovered vertex: each cover counted once
        total = 0
        for ei in cand[pivot]:
            em = masks[ei]
            rest = [u for u in uncovered if not (em >> u) & 1]
            new = {}
            for u in rest:
                lst = [f for f in cand[u] if not masks[f] & em]
                if not lst:
                    break
                new[u] = lst
            else:
                total += rec(rest, new)
        return total

    verts = list(range(nv))
    if any(not inc[v] for v in verts):
        return 0
    return rec(verts, {v: inc[v] for v in verts})


def exact_hypergraph_pm(H: Hypergraph, budget: int = DEFAULT_BUDGET,
                        rng: SeededRng | None = None,
                        vertices: Iterable[int] | None = None) -> Matching | None:
    """A perfect matching of ``H`` (or of ``H[vertices]``), or None if none exists.

    With ``rng`` the vertices are relabelled and the edge order shuffled before
    the search, so the returned matching depends on the seed.  Raises
    :class:`BudgetExhausted` when the search is cut off.
    """
    if vertices is None:
        verts = np.arange(H.n, dtype=np.int64)
        sub = H
    else:
        verts = np.unique(np.fromiter((int(v) for v in vertices), dtype=np.int64))
        sub = H.induced(verts)
    nv = len(verts)
    if nv % H.k:
        raise ValueError("k must divide the number of vertices")
    if nv == 0:
        return Matching(())
    rows = sub.edges
    if rng is not None:
        verts = verts[rng.permutation(nv)]
        rows = rows[rng.permutation(len(rows))]
    local = np.full(H.n, -1, dtype=np.int64)
    local[verts] = np.arange(nv)
    loc_rows = local[rows]
    edges = [tuple(r) for r in loc_rows.tolist()]
    found = _find_cover(nv, edges, budget)
    if found is None:
        return None
    return Matching.of(rows[i].tolist() for i in found)


def exact_kr_factor(G: Hypergraph, r: int, budget: int = DEFAULT_BUDGET,
                    rng: SeededRng | None = None) -> Factor | None:
    """A perfect K_r-factor of the graph ``G`` or None."""
    if G.n % r:
        raise ValueError("r must divide n")
    M = exact_hypergraph_pm(clique_complex(G, r), budget, rng)
    return None if M is None else Factor.of(M.edges)


def count_perfect_matchings(H: Hypergraph, budget: int = DEFAULT_BUDGET) -> int:
    if H.n % H.k:
        raise ValueError("k must divide n")
    return _count_covers(H.n, H.edge_list(), budget)


def count_kr_factors(G: Hypergraph, r: int, budget: int = DEFAULT_BUDGET) -> int:
    """Exact number of perfect K_r-factors of ``G``."""
    if G.n % r:
        raise ValueError("r must divide n")
    return count_perfect_matchings(clique_complex(G, r), budget)

"""Augmenting-path matching algorithms.

``hopcroft_karp`` handles bipartite graphs and ``max_graph_matching`` runs
Edmonds' blossom algorithm on general graphs.  Both are deterministic given
their input adjacency order; samplers that want seed-sensitive output permute
the input first.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .hypergraph import BipartiteGraph, Hypergraph, Matching
from .rng import SeededRng


def hopcroft_karp(nbrs: list[list[int]], nb: int) -> tuple[list[int], list[int]]:
    """Maximum matching of a bipartite graph given A-side neighbour lists.

    Returns ``(match_a, match_b)`` with -1 for unmatched vertices.
    """
    na = len(nbrs)
    match_a = [-1] * na
    match_b = [-1] * nb
    # greedy start
    for a in range(na):
        for b in nbrs[a]:
            if match_b[b] == -1:
                match_a[a] = b
                match_b[b] = a
                break
    while True:
        dist = [-1] * na
        queue = [a for a in range(na) if match_a[a] == -1]
        for a in queue:
            dist[a] = 0
        found = False
        head = 0
        while head < len(queue):
            a = queue[head]
            head += 1
            for b in nbrs[a]:
                a2 = match_b[b]
                if a2 == -1:
                    found = True
                elif dist[a2] == -1:
                    dist[a2] = dist[a] + 1
                    queue.append(a2)
        if not found:
            return match_a, match_b
        it = [0] * na
        for root in range(na):
            if match_a[root] != -1:
                continue
            stack = [root]
            path_b: list[int] = []
            while stack:
                a = stack[-1]
                lst = nbrs[a]
                moved = False
                while it[a] < len(lst):
                    b = lst[it[a]]
                    it[a] += 1
                    a2 = match_b[b]
                    if a2 == -1:
                        path_b.append(b)
                        for aa, bb in zip(stack, path_b):
                            match_a[aa] = bb
                            match_b[bb] = aa
                        stack = []
                        moved = True
                        break
                    if dist[a2] == dist[a] + 1:
                        path_b.append(b)
                        stack.append(a2)
                        moved = True
                        break
                if not moved:
                    dist[a] = -1
                    stack.pop()
                    if path_b:
                        path_b.pop()


def max_bipartite_matching(G: BipartiteGraph) -> Matching:
    """Maximum-cardinality matching (Hopcroft-Karp, ascending-id order)."""
    match_a, _ = hopcroft_karp(G.neighbors(), G.nb)
    return Matching.of([(a, b) for a, b in enumerate(match_a) if b != -1], bipartite=True)


def random_order_matching(G: BipartiteGraph, rng: SeededRng) -> Matching:
    """Maximum matching found after a random relabelling of both sides."""
    pa = rng.permutation(G.na)
    pb = rng.permutation(G.nb)
    sub = G.adj[np.ix_(pa, pb)]
    nbrs = [np.flatnonzero(row).tolist() for row in sub]
    match_a, _ = hopcroft_karp(nbrs, G.nb)
    return Matching.of([(int(pa[i]), int(pb[j])) for i, j in enumerate(match_a) if j != -1],
                       bipartite=True)


@dataclass(frozen=True)
class HallViolation:
    """A set ``S`` on one side with ``|N(S)| < |S|``."""

    side: str
    S: tuple[int, ...]
    neighborhood: tuple[int, ...]


def hall_violation(G: BipartiteGraph) -> HallViolation | None:
    """None iff ``G`` has a perfect matching, else a deficient set.

    The set is read off the alternating-reachability cut from the lowest
    unmatched vertex once the matching is maximum.
    """
    if G.na != G.nb:
        raise ValueError("hall_violation needs balanced parts")
    nbrs = G.neighbors()
    match_a, match_b = hopcroft_karp(nbrs, G.nb)
    free = [a for a in range(G.na) if match_a[a] == -1]
    if not free:
        return None
    root = free[0]
    seen_a = {root}
    seen_b: set[int] = set()
    queue = deque([root])
    while queue:
        a = queue.popleft()
        for b in nbrs[a]:
            if b in seen_b:
                continue
            seen_b.add(b)
            a2 = match_b[b]
            # b is matched, otherwise the matching was not maximum
            if a2 != -1 and a2 not in seen_a:
                seen_a.add(a2)
                queue.append(a2)
    return HallViolation("A", tuple(sorted(seen_a)), tuple(sorted(seen_b)))


def max_graph_matching(G: Hypergraph) -> Matching:
    """Maximum matching of a general graph (Edmonds' blossom algorithm)."""
    if G.k != 2:
        raise ValueError("max_graph_matching needs a graph")
    n = G.n
    ptr, idx = G.incidence()
    e = G.edges
    adj: list[list[int]] = []
    for v in range(n):
        inc = e[idx[ptr[v]:ptr[v + 1]]]
        adj.append(np.where(inc[:, 0] == v, inc[:, 1], inc[:, 0]).tolist())
    match = [-1] * n
    for v in range(n):
        if match[v] == -1:
            for w in adj[v]:
                if match[w] == -1:
                    match[v] = w
                    match[w] = v
                    break

    def find_path(root: int) -> int:
        used = [False] * n
        parent = [-1] * n
        base = list(range(n))
        used[root] = True
        queue = deque([root])

        def lca(a: int, b: int) -> int:
            mark = [False] * n
            while True:
                a = base[a]
                mark[a] = True
                if match[a] == -1:
                    break
                a = parent[match[a]]
            while True:
                b = base[b]
                if mark[b]:
                    return b
                b = parent[match[b]]

        def mark_path(v: int, b: int, child: int, blossom: list[bool]) -> None:
            while base[v] != b:
                blossom[base[v]] = True
                blossom[base[match[v]]] = True
                parent[v] = child
                child = match[v]
                v = parent[match[v]]

        while queue:
            v = queue.popleft()
            for to in adj[v]:
                if base[v] == base[to] or match[v] == to:
                    continue
                if to == root or (match[to] != -1 and parent[match[to]] != -1):
                    cur = lca(v, to)
                    blossom = [False] * n
                    mark_path(v, cur, to, blossom)
                    mark_path(to, cur, v, blossom)
                    for i in range(n):
                        if blossom[base[i]]:
                            base[i] = cur
                            if not used[i]:
                                used[i] = True
                                queue.append(i)
                elif parent[to] == -1:
                    parent[to] = v
                    if match[to] == -1:
                        # augment along the alternating path
                        while to != -1:
                            pv = parent[to]
                            nxt = match[pv]
                            match[to] = pv
                            match[pv] = to
                            to = nxt
                        return 1
                    used[match[to]] = True
                    queue.append(match[to])
        return 0

    for v in range(n):
        if match[v] == -1 and adj[v]:
            find_path(v)
    return Matching.of([(v, match[v]) for v in range(n) if match[v] > v])


def has_perfect_matching_graph(G: Hypergraph) -> bool:
    if G.n % 2:
        return False
    if G.n and np.any(G.degrees() == 0):
        return False
    return len(max_graph_matching(G)) * 2 == G.n

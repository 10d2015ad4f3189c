"""Core hypergraph, bipartite graph and matching types.

Edges are stored as a sorted ``(m, k)`` int64 array whose rows are sorted
vertex tuples.  Each row also has an integer code (base-``n`` digits), which
makes membership tests a ``searchsorted``.  A complete hypergraph may be kept
implicit when it is too large to list; the few routines that need to handle
huge complete hosts (sampling, degrees) special-case it.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .rng import SeededRng

SCHEMA_VERSION = "1.0"
MATERIALIZE_LIMIT = 4_000_000


def check_schema(obj: dict) -> None:
    version = str(obj.get("schema_version", SCHEMA_VERSION))
    if version.split(".")[0] != SCHEMA_VERSION.split(".")[0]:
        raise ValueError(f"unsupported schema version {version}")


def combinations_array(vertices: Sequence[int] | np.ndarray, k: int) -> np.ndarray:
    """All k-subsets of ``vertices`` (in the given order) as an int64 array."""
    vs = [int(v) for v in vertices]
    count = math.comb(len(vs), k)
    flat = np.fromiter(itertools.chain.from_iterable(itertools.combinations(vs, k)),
                       dtype=np.int64, count=count * k)
    return flat.reshape(count, k)


class Hypergraph:
    """k-uniform hypergraph on vertices ``0..n-1``."""

    __slots__ = ("n", "k", "_edges", "_complete", "_codes", "_inc", "_deg")

    def __init__(self, n: int, k: int, edges=None, *, complete: bool = False,
                 _canonical: bool = False):
        if k < 1:
            raise ValueError("k must be positive")
        if n < 0:
            raise ValueError("n must be non-negative")
        if float(n) ** k >= 2.0**62:
            raise ValueError("n**k too large for integer edge codes")
        self.n = int(n)
        self.k = int(k)
        self._complete = bool(complete)
        self._codes = None
        self._inc = None
        self._deg = None
        if complete:
            self._edges = None
            return
        arr = np.asarray(edges if edges is not None else [], dtype=np.int64)
        if arr.size == 0:
            arr = np.zeros((0, self.k), dtype=np.int64)
        if arr.ndim != 2 or arr.shape[1] != self.k:
            raise ValueError(f"edges must be {self.k}-sets")
        if not _canonical:
            arr = np.sort(arr, axis=1)
            if arr.size:
                if arr.min() < 0 or arr.max() >= self.n:
                    raise ValueError("edge vertex out of range")
                if self.k > 1 and np.any(arr[:, 1:] == arr[:, :-1]):
                    raise ValueError("edge with repeated vertex")
            codes = self._encode(arr)
            order = np.argsort(codes, kind="stable")
            codes = codes[order]
            if codes.size > 1 and np.any(codes[1:] == codes[:-1]):
                raise ValueError("duplicate edge")
            arr = arr[order]
            self._codes = codes
        self._edges = np.ascontiguousarray(arr)

    # construction ----------------------------------------------------------
    @classmethod
    def complete(cls, n: int, k: int) -> "Hypergraph":
        return cls(n, k, complete=True)

    @classmethod
    def from_edges(cls, n: int, k: int, edges: Iterable[Iterable[int]]) -> "Hypergraph":
        return cls(n, k, [tuple(e) for e in edges])

    def _encode(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.int64)
        code = np.zeros(rows.shape[0], dtype=np.int64)
        for j in range(rows.shape[1]):
            code = code * self.n + rows[:, j]
        return code

    # basic accessors -------------------------------------------------------
    @property
    def is_complete(self) -> bool:
        return self._complete

    @property
    def num_edges(self) -> int:
        if self._complete:
            return math.comb(self.n, self.k)
        return int(self._edges.shape[0])

    def __len__(self) -> int:
        return self.num_edges

    @property
    def edges(self) -> np.ndarray:
        if self._edges is None:
            if self.num_edges > MATERIALIZE_LIMIT:
                raise MemoryError(f"complete {self.k}-graph on {self.n} vertices is too large to list")
            self._edges = combinations_array(range(self.n), self.k)
        return self._edges

    def materialized(self) -> "Hypergraph":
        """Return an explicit copy (a complete host gets its edge list)."""
        if not self._complete:
            return self
        return Hypergraph(self.n, self.k, self.edges, _canonical=True)

    @property
    def codes(self) -> np.ndarray:
        if self._codes is None:
            self._codes = self._encode(self.edges)
        return self._codes

    def edge_list(self) -> list[tuple[int, ...]]:
        return [tuple(e) for e in self.edges.tolist()]

    def edge_index(self, rows) -> np.ndarray:
        """Index of each (sorted) row in ``edges`` or -1 when absent."""
        rows = np.atleast_2d(np.asarray(rows, dtype=np.int64))
        if rows.size == 0:
            return np.zeros(0, dtype=np.int64)
        q = self._encode(rows)
        codes = self.codes
        pos = np.searchsorted(codes, q)
        pos_c = np.minimum(pos, max(len(codes) - 1, 0))
        hit = (pos < len(codes)) & (codes[pos_c] == q) if len(codes) else np.zeros(len(q), bool)
        return np.where(hit, pos, -1)

    def has_edges(self, rows) -> np.ndarray:
        if self._complete:
            rows = np.atleast_2d(np.asarray(rows, dtype=np.int64))
            s = np.sort(rows, axis=1)
            return np.all(s[:, 1:] != s[:, :-1], axis=1) if self.k > 1 else np.ones(len(s), bool)
        return self.edge_index(np.sort(np.atleast_2d(np.asarray(rows, dtype=np.int64)), axis=1)) >= 0

    def has_edge(self, e: Iterable[int]) -> bool:
        return bool(self.has_edges([sorted(e)])[0])

    def degrees(self) -> np.ndarray:
        if self._deg is None:
            if self._complete:
                self._deg = np.full(self.n, math.comb(self.n - 1, self.k - 1), dtype=np.int64)
            else:
                self._deg = np.bincount(self.edges.ravel(), minlength=self.n).astype(np.int64)
        return self._deg

    def incidence(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR incidence: edges through v are ``idx[ptr[v]:ptr[v+1]]``."""
        if self._inc is None:
            e = self.edges
            owners = e.ravel()
            eidx = np.repeat(np.arange(e.shape[0], dtype=np.int64), self.k)
            order = np.argsort(owners, kind="stable")
            ptr = np.zeros(self.n + 1, dtype=np.int64)
            np.cumsum(np.bincount(owners, minlength=self.n), out=ptr[1:])
            self._inc = (ptr, eidx[order])
        return self._inc

    # derived hypergraphs ---------------------------------------------------
    def subgraph(self, keep) -> "Hypergraph":
        """Spanning sub-hypergraph with the selected edges (mask or indices)."""
        return Hypergraph(self.n, self.k, self.edges[keep], _canonical=True)

    def induced(self, vertices: Iterable[int]) -> "Hypergraph":
        """Spanning hypergraph keeping only the edges inside ``vertices``."""
        vs = np.unique(np.fromiter((int(v) for v in vertices), dtype=np.int64))
        if self._complete or self.num_edges > 4 * math.comb(len(vs), self.k):
            rows = combinations_array(vs, self.k)
            if not self._complete:
                rows = rows[self.edge_index(rows) >= 0]
            return Hypergraph(self.n, self.k, rows, _canonical=True)
        inside = np.zeros(self.n, dtype=bool)
        inside[vs] = True
        return self.subgraph(np.all(inside[self.edges], axis=1))

    def adjacency_matrix(self) -> np.ndarray:
        if self.k != 2:
            raise ValueError("adjacency matrix needs a graph (k=2)")
        adj = np.zeros((self.n, self.n), dtype=bool)
        e = self.edges
        adj[e[:, 0], e[:, 1]] = True
        adj[e[:, 1], e[:, 0]] = True
        return adj

    # serialization ---------------------------------------------------------
    def to_dict(self) -> dict:
        return {"n": self.n, "k": self.k, "edges": self.edges.tolist()}

    @classmethod
    def from_dict(cls, obj: dict) -> "Hypergraph":
        check_schema(obj)
        return cls(int(obj["n"]), int(obj["k"]), obj["edges"])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Hypergraph):
            return NotImplemented
        return (self.n, self.k) == (other.n, other.k) and np.array_equal(self.codes, other.codes)

    def __repr__(self) -> str:
        kind = "complete " if self._complete else ""
        return f"Hypergraph({kind}n={self.n}, k={self.k}, m={self.num_edges})"


def graph(n: int, edges: Iterable[Iterable[int]]) -> Hypergraph:
    return Hypergraph.from_edges(n, 2, edges)


def complete_graph(n: int) -> Hypergraph:
    return Hypergraph(n, 2, combinations_array(range(n), 2), _canonical=True)


def graph_from_adjacency(adj: np.ndarray) -> Hypergraph:
    iu = np.argwhere(np.triu(np.asarray(adj, dtype=bool), 1))
    return Hypergraph(adj.shape[0], 2, iu, _canonical=True)


# ---------------------------------------------------------------------------
# bipartite graphs

class BipartiteGraph:
    """Bipartite graph with parts ``A = range(na)`` and ``B = range(nb)``.

    Vertex ids are local to their side.  Adjacency is a dense boolean matrix,
    which is the right trade-off at the sizes used here (a few hundred).
    """

    __slots__ = ("adj", "_nbrs")

    def __init__(self, adj):
        self.adj = np.ascontiguousarray(np.asarray(adj, dtype=bool))
        if self.adj.ndim != 2:
            raise ValueError("adjacency must be a matrix")
        self._nbrs = None

    @classmethod
    def from_edges(cls, na: int, nb: int, edges: Iterable[tuple[int, int]]) -> "BipartiteGraph":
        adj = np.zeros((na, nb), dtype=bool)
        for a, b in edges:
            adj[a, b] = True
        return cls(adj)

    @classmethod
    def complete(cls, na: int, nb: int) -> "BipartiteGraph":
        return cls(np.ones((na, nb), dtype=bool))

    @classmethod
    def random(cls, na: int, nb: int, p: float, rng: SeededRng) -> "BipartiteGraph":
        return cls(rng.random((na, nb)) < p)

    @property
    def na(self) -> int:
        return self.adj.shape[0]

    @property
    def nb(self) -> int:
        return self.adj.shape[1]

    @property
    def num_edges(self) -> int:
        return int(self.adj.sum())

    def deg_a(self) -> np.ndarray:
        return self.adj.sum(axis=1)

    def deg_b(self) -> np.ndarray:
        return self.adj.sum(axis=0)

    def neighbors(self) -> list[list[int]]:
        """Neighbour lists of A-vertices (ascending B ids)."""
        if self._nbrs is None:
            self._nbrs = [np.flatnonzero(row).tolist() for row in self.adj]
        return self._nbrs

    def edges(self) -> list[tuple[int, int]]:
        return [(int(a), int(b)) for a, b in np.argwhere(self.adj)]

    def transpose(self) -> "BipartiteGraph":
        return BipartiteGraph(self.adj.T)

    def to_dict(self) -> dict:
        return {"na": self.na, "nb": self.nb, "edges": [list(e) for e in self.edges()]}

    @classmethod
    def from_dict(cls, obj: dict) -> "BipartiteGraph":
        check_schema(obj)
        return cls.from_edges(int(obj["na"]), int(obj["nb"]), [tuple(e) for e in obj["edges"]])

    def as_graph(self) -> Hypergraph:
        """The same graph as a k=2 hypergraph with B shifted by ``na``."""
        ab = np.argwhere(self.adj).astype(np.int64)
        ab[:, 1] += self.na
        return Hypergraph(self.na + self.nb, 2, ab)

    def __repr__(self) -> str:
        return f"BipartiteGraph({self.na}x{self.nb}, m={self.num_edges})"


# ---------------------------------------------------------------------------
# matchings and factors

@dataclass(frozen=True)
class Matching:
    """Pairwise disjoint edges.

    For hypergraph matchings each edge is a sorted vertex tuple.  For
    bipartite matchings (``bipartite=True``) each edge is an ``(a, b)`` pair of
    side-local ids.
    """

    edges: tuple[tuple[int, ...], ...]
    bipartite: bool = False

    @classmethod
    def of(cls, edges: Iterable[Iterable[int]], bipartite: bool = False) -> "Matching":
        if bipartite:
            es = sorted((int(a), int(b)) for a, b in edges)
        else:
            es = sorted(tuple(sorted(int(v) for v in e)) for e in edges)
        return cls(tuple(es), bipartite)

    def __len__(self) -> int:
        return len(self.edges)

    def vertices(self) -> set[int]:
        if self.bipartite:
            raise ValueError("bipartite matchings have two vertex spaces")
        return {v for e in self.edges for v in e}

    def as_dict(self) -> dict[int, int]:
        if not self.bipartite:
            raise ValueError("only bipartite matchings map A to B")
        return {a: b for a, b in self.edges}

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "kind": "matching",
                "bipartite": self.bipartite, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, obj: dict) -> "Matching":
        check_schema(obj)
        return cls.of(obj["edges"], bool(obj.get("bipartite", False)))


@dataclass(frozen=True)
class Factor:
    """Pairwise disjoint r-cliques, each stored as a sorted tuple."""

    cliques: tuple[tuple[int, ...], ...]

    @classmethod
    def of(cls, cliques: Iterable[Iterable[int]]) -> "Factor":
        return cls(tuple(sorted(tuple(sorted(int(v) for v in c)) for c in cliques)))

    def __len__(self) -> int:
        return len(self.cliques)

    def vertices(self) -> set[int]:
        return {v for c in self.cliques for v in c}

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "kind": "factor",
                "cliques": [list(c) for c in self.cliques]}

    @classmethod
    def from_dict(cls, obj: dict) -> "Factor":
        check_schema(obj)
        return cls.of(obj["cliques"])


def is_matching(H: Hypergraph, M: Matching) -> bool:
    seen: set[int] = set()
    for e in M.edges:
        if len(e) != H.k or len(set(e)) != H.k:
            return False
        if seen.intersection(e):
            return False
        seen.update(e)
    return len(M.edges) == 0 or bool(np.all(H.has_edges(list(M.edges))))


def is_perfect_matching(H: Hypergraph, M: Matching) -> bool:
    return is_matching(H, M) and len(M.edges) * H.k == H.n


def is_bipartite_matching(G: BipartiteGraph, M: Matching, perfect: bool = False) -> bool:
    a_seen, b_seen = set(), set()
    for a, b in M.edges:
        if not (0 <= a < G.na and 0 <= b < G.nb) or not G.adj[a, b]:
            return False
        if a in a_seen or b in b_seen:
            return False
        a_seen.add(a)
        b_seen.add(b)
    if perfect:
        return len(a_seen) == G.na == G.nb
    return True


def is_kr_factor(G: Hypergraph, F: Factor, r: int, perfect: bool = True) -> bool:
    """Check that ``F`` is a (perfect) K_r-factor of the graph ``G``."""
    adj = G.adjacency_matrix()
    seen: set[int] = set()
    for c in F.cliques:
        if len(c) != r or len(set(c)) != r or seen.intersection(c):
            return False
        seen.update(c)
        for u, v in itertools.combinations(c, 2):
            if not adj[u, v]:
                return False
    return (len(seen) == G.n) if perfect else True


# ---------------------------------------------------------------------------
# degree statistics and basic random operations

def min_ell_degree(H: Hypergraph, ell: int) -> tuple[int, tuple[int, ...]]:
    """Minimum number of edges containing an ell-set, with a minimizing set.

    Ties go to the lexicographically smallest ell-set.
    """
    if not 1 <= ell < H.k:
        raise ValueError("ell must satisfy 1 <= ell < k")
    if H.n < H.k:
        raise ValueError("need n >= k")
    if H.is_complete:
        return math.comb(H.n - ell, H.k - ell), tuple(range(ell))
    if ell == 1:
        deg = H.degrees()
        v = int(np.argmin(deg))
        return int(deg[v]), (v,)
    e = H.edges
    subs = [e[:, list(c)] for c in itertools.combinations(range(H.k), ell)]
    rows = np.concatenate(subs, axis=0)
    code = np.zeros(rows.shape[0], dtype=np.int64)
    for j in range(ell):
        code = code * H.n + rows[:, j]
    vals, counts = np.unique(code, return_counts=True)
    total = math.comb(H.n, ell)
    if len(vals) < total:
        # some ell-set lies in no edge; find the first absent one
        present = set(vals.tolist())
        for c in itertools.combinations(range(H.n), ell):
            cc = 0
            for v in c:
                cc = cc * H.n + v
            if cc not in present:
                return 0, c
    i = int(np.argmin(counts))
    cc = int(vals[i])
    s = []
    for _ in range(ell):
        s.append(cc % H.n)
        cc //= H.n
    return int(counts[i]), tuple(reversed(s))


def ell_degree_into(H: Hypergraph, ell: int, inside: np.ndarray) -> np.ndarray:
    """For ell=1: number of edges through v whose other vertices lie in ``inside``.

    ``inside`` is a boolean mask over the vertices.  Only ell=1 is supported;
    it is the case used by the absorption engine.
    """
    if ell != 1:
        raise NotImplementedError("only vertex degrees are supported")
    e = H.edges
    ins = inside[e]
    cnt = ins.sum(axis=1)
    out = np.zeros(H.n, dtype=np.int64)
    full = cnt == H.k
    if full.any():
        out += np.bincount(e[full].ravel(), minlength=H.n)
    one_out = cnt == H.k - 1
    if one_out.any():
        rows = e[one_out]
        miss = rows[~ins[one_out]]
        out += np.bincount(miss, minlength=H.n)
    return out


def random_ksets(n: int, k: int, count: int, rng: SeededRng) -> np.ndarray:
    """``count`` distinct uniformly random k-subsets of range(n), sorted rows."""
    total = math.comb(n, k)
    if count > total:
        raise ValueError("more k-sets requested than exist")
    if count == 0:
        return np.zeros((0, k), dtype=np.int64)
    if count * 3 > total:
        if total > MATERIALIZE_LIMIT:
            raise MemoryError("dense sample of a huge complete hypergraph")
        rows = combinations_array(range(n), k)
        pick = np.sort(rng.choice(total, size=count, replace=False))
        return rows[pick]
    base = np.power(n, np.arange(k - 1, -1, -1, dtype=np.int64))
    found = np.zeros(0, dtype=np.int64)
    while found.size < count:
        need = count - found.size
        draw = np.sort(rng.integers(0, n, size=(int(need * 1.1) + 16, k)), axis=1)
        ok = np.all(draw[:, 1:] != draw[:, :-1], axis=1) if k > 1 else np.ones(len(draw), bool)
        found = np.unique(np.concatenate([found, draw[ok] @ base]))
    if found.size > count:
        found = np.sort(rng.choice(found, size=count, replace=False))
    rows = np.zeros((count, k), dtype=np.int64)
    c = found.copy()
    for j in range(k - 1, -1, -1):
        rows[:, j] = c % n
        c //= n
    return rows


def binomial_subgraph(H: Hypergraph, p: float, rng: SeededRng) -> Hypergraph:
    """Keep each edge independently with probability ``p``.

    An explicit host uses one uniform per edge (``U_e < p``), so two calls with
    the same stream and ``p <= p'`` give nested edge sets.  An implicit complete
    host draws the edge count and then a uniform set of that many k-sets.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if p >= 1.0:
        return H
    if H.is_complete and H.num_edges > MATERIALIZE_LIMIT:
        count = int(rng.binomial(H.num_edges, p))
        return Hypergraph(H.n, H.k, random_ksets(H.n, H.k, count, rng), _canonical=True)
    u = rng.random(H.num_edges)
    return H.subgraph(u < p)


def clique_complex(G: Hypergraph, r: int) -> Hypergraph:
    """The r-uniform hypergraph of r-cliques of the graph ``G``."""
    if G.k != 2:
        raise ValueError("clique complex needs a graph")
    if r < 2:
        raise ValueError("r must be at least 2")
    if r == 2:
        return G
    adj = G.adjacency_matrix()
    fwd = np.triu(adj, 1)
    found: list[np.ndarray] = []

    def extend(prefix: list[int], cand: np.ndarray) -> None:
        if len(prefix) == r - 1:
            last = np.flatnonzero(cand)
            if last.size:
                block = np.empty((last.size, r), dtype=np.int64)
                block[:, :-1] = prefix
                block[:, -1] = last
                found.append(block)
            return
        for w in np.flatnonzero(cand):
            extend(prefix + [int(w)], cand & fwd[w])

    for v in range(G.n):
        extend([v], fwd[v])
    rows = np.concatenate(found) if found else np.zeros((0, r), dtype=np.int64)
    return Hypergraph(G.n, r, rows, _canonical=True)


def dump_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")

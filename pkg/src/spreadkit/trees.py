"""Spread embeddings of bounded-degree spanning trees.

The pipeline works on a host that comes with a cluster decomposition: a
perfect matching of clusters into dense pairs and an assignment of tree
vertices to clusters.  A handful of bridge vertices are placed first by a
random greedy step.  Each cluster pair then gets four random buffers, the bulk
of its forest is placed by a buffered random greedy procedure, and a small
reserved structure (leaves, secondary leaves with their children, or short
paths) is completed with the spread star and path samplers.

Every placement is uniform over a candidate set of linear size, which is what
keeps the embedding vertex-spread.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import asdict, dataclass, field

import numpy as np

from .bipartite import StarDemand, d_matching, sample_spread_star_matching
from .errors import RetriesExhausted, StageFailure
from .hypergraph import SCHEMA_VERSION, BipartiteGraph, check_schema
from .partite_factor import FactorParams, sample_spread_kr_factor
from .regularity import GeneratorConfig, PartiteSystem, certify_super_regular
from .rng import SeededRng

TREE_SHAPES = ("random", "caterpillar", "broom", "path", "star")
CASES = ("leaves", "secondary-left", "secondary-right", "paths")


# ---------------------------------------------------------------------------
# trees

class RootedTree:
    """Tree on ``0..n-1`` given by a parent array; the root has parent ``-1``."""

    def __init__(self, parent, max_degree: int | None = None):
        self.parent = np.asarray(parent, dtype=np.int64)
        self.n = int(self.parent.size)
        self.max_degree = max_degree
        self.children: list[list[int]] = [[] for _ in range(self.n)]
        for v, p in enumerate(self.parent.tolist()):
            if p >= 0:
                self.children[p].append(v)

    @property
    def root(self) -> int:
        return int(np.flatnonzero(self.parent < 0)[0])

    def degrees(self) -> np.ndarray:
        deg = np.array([len(c) for c in self.children], dtype=np.int64)
        deg[self.parent >= 0] += 1
        return deg

    def edges(self) -> np.ndarray:
        """``(child, parent)`` rows."""
        v = np.flatnonzero(self.parent >= 0)
        return np.stack([v, self.parent[v]], axis=1) if v.size else np.zeros((0, 2), dtype=np.int64)

    def neighbors(self, v: int) -> list[int]:
        p = int(self.parent[v])
        return ([p] if p >= 0 else []) + self.children[v]

    def depth(self) -> np.ndarray:
        out = np.zeros(self.n, dtype=np.int64)
        for v in self.bfs_order():
            if self.parent[v] >= 0:
                out[v] = out[self.parent[v]] + 1
        return out

    def bfs_order(self) -> list[int]:
        order, queue = [], deque([self.root])
        while queue:
            v = queue.popleft()
            order.append(v)
            queue.extend(self.children[v])
        return order

    def leaves(self) -> np.ndarray:
        if self.n == 1:
            return np.zeros(0, dtype=np.int64)
        return np.flatnonzero(self.degrees() == 1)

    def secondary_leaves(self) -> np.ndarray:
        """Non-leaf vertices all of whose children are leaves (rooted sense)."""
        childless = np.array([not c for c in self.children])
        return np.array([v for v in range(self.n)
                         if self.children[v] and all(childless[c] for c in self.children[v])],
                        dtype=np.int64)

    def validate(self) -> None:
        roots = np.flatnonzero(self.parent < 0)
        if self.n == 0 or roots.size != 1:
            raise ValueError("need exactly one root")
        if ((self.parent >= self.n) | (self.parent < -1)).any():
            raise ValueError("parent out of range")
        if len(self.bfs_order()) != self.n:
            raise ValueError("parent array has a cycle or is disconnected")
        if self.max_degree is not None and self.n > 1 and self.degrees().max() > self.max_degree:
            raise ValueError("degree cap exceeded")

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "kind": "tree",
                "parent": self.parent.tolist(), "max_degree": self.max_degree}

    @classmethod
    def from_dict(cls, obj: dict) -> "RootedTree":
        check_schema(obj)
        T = cls(obj["parent"], obj.get("max_degree"))
        T.validate()
        return T

    def __repr__(self) -> str:
        return f"RootedTree(n={self.n}, max_degree={self.max_degree})"


def generate_tree(n: int, delta: int, shape: str = "random", rng: SeededRng | None = None) -> RootedTree:
    """Tree of the requested shape with maximum degree at most ``delta``; root is 0."""
    if n < 1:
        raise ValueError("n must be positive")
    if delta < 2:
        raise ValueError("delta must be at least 2")
    if shape not in TREE_SHAPES:
        raise ValueError(f"unknown shape {shape!r}")
    parent = np.full(n, -1, dtype=np.int64)
    if shape == "path" or n <= 2:
        parent[1:] = np.arange(n - 1)
    elif shape == "star":
        if delta < n - 1:
            raise ValueError("a star on n vertices needs delta >= n - 1")
        parent[1:] = 0
    elif shape == "caterpillar":
        legs = delta - 2
        spine, v = [0], 1
        while v < n:
            tip = spine[-1]
            # legs first so that the spine keeps growing from a vertex with room
            for _ in range(legs if len(spine) > 1 else legs + 1):
                if v >= n - 1:
                    break
                parent[v] = tip
                v += 1
            if v < n:
                parent[v] = tip
                spine.append(v)
                v += 1
    elif shape == "broom":
        handle = (n + 1) // 2
        parent[1:handle] = np.arange(handle - 1)
        queue, deg = deque([handle - 1]), np.zeros(n, dtype=np.int64)
        deg[handle - 1] = 1 if handle > 1 else 0
        for v in range(handle, n):
            while deg[queue[0]] >= delta:
                queue.popleft()
            p = queue[0]
            parent[v] = p
            deg[p] += 1
            deg[v] = 1
            queue.append(v)
    else:
        if rng is None:
            raise ValueError("random trees need an rng")
        deg = np.zeros(n, dtype=np.int64)
        open_ = [0]
        for v in range(1, n):
            j = rng.randbelow(len(open_))
            p = open_[j]
            parent[v] = p
            deg[p] += 1
            deg[v] = 1
            if deg[p] >= delta:
                open_[j] = open_[-1]
                open_.pop()
            open_.append(v)
    T = RootedTree(parent, delta)
    T.validate()
    return T


# ---------------------------------------------------------------------------
# embeddings

class PartialEmbedding:
    """Injective partial map from tree vertices to host vertices."""

    def __init__(self, n_tree: int, n_host: int):
        self.phi = np.full(n_tree, -1, dtype=np.int64)
        self.occupied = np.zeros(n_host, dtype=bool)

    def place(self, x: int, y: int) -> None:
        if self.phi[x] != -1:
            raise ValueError(f"tree vertex {x} already placed")
        if self.occupied[y]:
            raise ValueError(f"host vertex {y} already occupied")
        self.phi[x] = y
        self.occupied[y] = True

    def copy(self) -> "PartialEmbedding":
        out = PartialEmbedding(self.phi.size, self.occupied.size)
        out.phi = self.phi.copy()
        out.occupied = self.occupied.copy()
        return out

    @property
    def domain(self) -> np.ndarray:
        return np.flatnonzero(self.phi >= 0)

    def is_total(self) -> bool:
        return bool((self.phi >= 0).all())

    def to_list(self) -> list[int]:
        return self.phi.tolist()


def check_embedding(T: RootedTree, adj: np.ndarray, phi, total: bool = True) -> bool:
    """Injective, edge-preserving and (optionally) total, checked edge by edge."""
    phi = np.asarray(phi, dtype=np.int64)
    if phi.size != T.n:
        return False
    placed = phi >= 0
    if total and not placed.all():
        return False
    img = phi[placed]
    if (img >= adj.shape[0]).any() or np.unique(img).size != img.size:
        return False
    for c, p in T.edges():
        if placed[c] and placed[p] and not adj[phi[c], phi[p]]:
            return False
    return True


class EmbeddingStuck(StageFailure):
    """A greedy step found fewer candidates than its floor."""


class DecompositionError(ValueError):
    """The tree shape does not support the requested decomposition."""


# ---------------------------------------------------------------------------
# cluster decompositions

@dataclass
class PairSpecial:
    """Reserved structure of one cluster pair.

    ``links`` holds the case data: ``(leaf, parent)`` rows for leaves,
    ``(secondary, parent)`` rows for secondary leaves, and ``(x0, x1, x2, x3)``
    rows for paths with ``x0`` on the left side.
    """
    case: str
    F1: tuple[int, ...]
    F2: tuple[int, ...]
    links: tuple[tuple[int, ...], ...]


@dataclass
class ClusterDecomposition:
    clusters: list[np.ndarray]
    pairs: list[tuple[int, int]]
    assignment: np.ndarray
    bridges: tuple[int, ...]
    special: list[PairSpecial]
    alpha: float
    K: int

    def pair_of_cluster(self, c: int) -> int:
        for p, (a, b) in enumerate(self.pairs):
            if c in (a, b):
                return p
        raise KeyError(c)

    def problems(self, T: RootedTree, adj: np.ndarray, d: float | None = None) -> list[str]:
        """Invariant violations (empty when the decomposition is valid)."""
        out = []
        M, n = len(self.clusters), T.n
        counts = np.bincount(self.assignment, minlength=M)
        for c, C in enumerate(self.clusters):
            if counts[c] != len(C):
                out.append(f"cluster {c}: {counts[c]} tree vertices for {len(C)} host vertices")
            if not n / (2 * M) <= len(C) <= 2 * n / M:
                out.append(f"cluster {c}: size {len(C)} out of range")
        if len(self.bridges) > self.K:
            out.append(f"{len(self.bridges)} bridges exceed K={self.K}")
        matched = {frozenset(p) for p in self.pairs}
        S = set(self.bridges)
        if sorted(c for p in self.pairs for c in p) != list(range(M)):
            out.append("pairs are not a perfect matching of clusters")
        for u, v in T.edges():
            cu, cv = int(self.assignment[u]), int(self.assignment[v])
            if cu == cv:
                out.append(f"edge {u}-{v} inside cluster {cu}")
                continue
            if d is not None:
                dens = adj[np.ix_(self.clusters[cu], self.clusters[cv])].mean()
                if dens < d / 2:
                    out.append(f"edge {u}-{v}: cluster pair density {dens:.3f} below d/2")
            if frozenset((cu, cv)) not in matched and not (u in S and v in S):
                out.append(f"edge {u}-{v} crosses pairs outside the bridge set")
        for p, sp in enumerate(self.special):
            members = set(np.flatnonzero(np.isin(self.assignment, self.pairs[p])).tolist())
            if S & (set(sp.F1) | set(sp.F2)):
                out.append(f"pair {p}: special sets meet the bridges")
            if not (set(sp.F1) | set(sp.F2)) <= members:
                out.append(f"pair {p}: special sets leave the pair")
            out.extend(f"pair {p}: {msg}" for msg in _case_problems(T, self, p, sp))
        return out

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "kind": "cluster_decomposition",
                "clusters": [c.tolist() for c in self.clusters],
                "pairs": [list(p) for p in self.pairs],
                "assignment": self.assignment.tolist(), "bridges": list(self.bridges),
                "special": [{"case": s.case, "F1": list(s.F1), "F2": list(s.F2),
                             "links": [list(x) for x in s.links]} for s in self.special],
                "alpha": self.alpha, "K": self.K}

    @classmethod
    def from_dict(cls, obj: dict) -> "ClusterDecomposition":
        check_schema(obj)
        return cls([np.asarray(c, dtype=np.int64) for c in obj["clusters"]],
                   [tuple(p) for p in obj["pairs"]],
                   np.asarray(obj["assignment"], dtype=np.int64), tuple(obj["bridges"]),
                   [PairSpecial(s["case"], tuple(s["F1"]), tuple(s["F2"]),
                                tuple(tuple(x) for x in s["links"])) for s in obj["special"]],
                   float(obj["alpha"]), int(obj["K"]))


def _case_problems(T: RootedTree, dec: ClusterDecomposition, p: int, sp: PairSpecial) -> list[str]:
    left, right = dec.pairs[p]
    a = dec.assignment
    deg = T.degrees()
    out = []
    if sp.case == "leaves":
        sides = [a[x] for x, _ in sp.links]
        if sides.count(left) != sides.count(right):
            out.append("leaves not equally divided")
        for x, par in sp.links:
            if deg[x] != 1 or par not in T.neighbors(x):
                out.append(f"{x} is not a leaf hanging from {par}")
        if set(sp.F2) != {x for x, _ in sp.links} or set(sp.F1) != {q for _, q in sp.links}:
            out.append("F1/F2 do not match the leaf links")
    elif sp.case in ("secondary-left", "secondary-right"):
        side = left if sp.case == "secondary-left" else right
        kids = set()
        for y, par in sp.links:
            if a[y] != side or T.parent[y] != par or not T.children[y]:
                out.append(f"{y} is not a secondary leaf on the requested side")
            if any(T.children[c] for c in T.children[y]):
                out.append(f"{y} has a non-leaf child")
            kids.update(T.children[y])
        if set(sp.F2) != {y for y, _ in sp.links} | kids or set(sp.F1) != {q for _, q in sp.links}:
            out.append("F1/F2 do not match the secondary-leaf links")
    elif sp.case == "paths":
        for x0, x1, x2, x3 in sp.links:
            if a[x0] != left or deg[x1] != 2 or deg[x2] != 2:
                out.append(f"path {x0}-{x3} malformed")
            if not (x1 in T.neighbors(x0) and x2 in T.neighbors(x1) and x3 in T.neighbors(x2)):
                out.append(f"path {x0}-{x3} is not a path of the tree")
        if set(sp.F2) != {v for x in sp.links for v in x[1:3]} or \
                set(sp.F1) != {v for x in sp.links for v in (x[0], x[3])}:
            out.append("F1/F2 do not match the path links")
    else:
        out.append(f"unknown case {sp.case!r}")
    return out


def _subtree_sizes(T: RootedTree, cut: np.ndarray) -> np.ndarray:
    size = np.ones(T.n, dtype=np.int64)
    for v in reversed(T.bfs_order()):
        p = T.parent[v]
        if p >= 0 and not cut[v]:
            size[p] += size[v]
    return size


def _cut_pieces(T: RootedTree, P: int, rng: SeededRng) -> np.ndarray:
    """Cut ``P - 1`` tree edges into pieces of about ``n / P`` vertices; returns piece ids."""
    cut = np.zeros(T.n, dtype=bool)
    piece = np.zeros(T.n, dtype=np.int64)
    target = T.n / P
    for k in range(1, P):
        size = _subtree_sizes(T, cut)
        inroot = piece == 0
        inroot[T.root] = False
        cand = np.flatnonzero(inroot & ~cut)
        if cand.size == 0:
            raise DecompositionError("tree too small for the requested number of pairs")
        gap = np.abs(size[cand] - target)
        good = cand[gap <= 0.25 * target]
        v = int(good[rng.randbelow(good.size)]) if good.size else int(cand[np.argmin(gap)])
        cut[v] = True
        stack = [v]
        while stack:  # relabel the detached subtree
            u = stack.pop()
            piece[u] = k
            stack.extend(c for c in T.children[u] if not cut[c])
    return piece


def _pick(rng: SeededRng, items: list, m: int) -> list:
    idx = rng.permutation(len(items))[:m]
    return [items[i] for i in sorted(idx.tolist())]


def _special_leaves(T, members, a, left, right, S, m, rng):
    deg = T.degrees()
    half = max(1, round(m / 2))
    links = []
    for j, side in enumerate((left, right)):
        cand = [(x, T.neighbors(x)[0]) for x in members
                if a[x] == side and deg[x] == 1 and x not in S and T.neighbors(x)[0] not in S
                and deg[T.neighbors(x)[0]] > 1]
        if len(cand) < half:
            return None
        links += _pick(rng.child(j), cand, half)
    return links


def _special_secondary(T, members, a, side, S, m, rng):
    cand = []
    for y in members:
        kids = T.children[y]
        par = int(T.parent[y])
        if (a[y] == side and kids and par >= 0 and y not in S and par not in S
                and all(not T.children[c] and c not in S for c in kids)):
            cand.append((y, par))
    m = max(1, round(m))
    return _pick(rng, cand, m) if len(cand) >= m else None


def _special_paths(T, members, a, left, S, m, rng):
    deg = T.degrees()
    cand = []
    for x1 in members:
        if deg[x1] != 2 or x1 in S:
            continue
        for x2 in T.neighbors(x1):
            if x2 > x1 and deg[x2] == 2 and x2 not in S:
                x0 = next(u for u in T.neighbors(x1) if u != x2)
                x3 = next(u for u in T.neighbors(x2) if u != x1)
                if x0 in S or x3 in S:
                    continue
                cand.append((x0, x1, x2, x3) if a[x0] == left else (x3, x2, x1, x0))
    m = max(1, round(m))
    used: set[int] = set()
    out = []
    for i in rng.permutation(len(cand)).tolist():
        path = cand[i]
        if used.isdisjoint(path):
            out.append(path)
            used.update(path)
            if len(out) == m:
                return sorted(out)
    return None


def _random_block(na: int, nb: int, d: float, rng: SeededRng, cfg: GeneratorConfig) -> np.ndarray:
    for t in range(cfg.max_resamples + 1):
        M = rng.child(t).random((na, nb)) < d
        if certify_super_regular(BipartiteGraph(M), d=d, eps=cfg.eps, delta=cfg.delta_factor * d,
                                 density_tol=cfg.density_tol).ok:
            return M
    raise DecompositionError("could not certify a cluster pair")


def synthetic_decomposition(T: RootedTree, clusters: int = 2, cases="random",
                            rng: SeededRng | None = None, *, d: float = 0.5, alpha: float = 0.2,
                            K: int = 8, cfg: GeneratorConfig = GeneratorConfig()
                            ) -> tuple[np.ndarray, ClusterDecomposition]:
    """Host graph together with a decomposition that ``T`` fits exactly.

    The tree is cut into ``clusters / 2`` pieces; the endpoints of the cut
    edges and the root form the bridge set.  Each piece is two-coloured by
    depth parity and its colour classes become a matched cluster pair.  Every
    two distinct clusters are joined by an independent certified random
    bipartite graph of density ``d``; clusters themselves are independent sets.
    ``cases`` is one case tag, a list with one tag per pair, or ``"random"``.
    """
    rng = rng or SeededRng(0)
    if clusters < 2 or clusters % 2:
        raise ValueError("clusters must be a positive even number")
    P = clusters // 2
    if isinstance(cases, str):
        cases = [cases] * P
    if len(cases) != P or any(c not in CASES + ("random",) for c in cases):
        raise ValueError("need one known case tag per cluster pair")
    piece = _cut_pieces(T, P, rng.child(0))
    S = {T.root}
    for v in np.flatnonzero(piece != piece[np.maximum(T.parent, 0)]).tolist():
        S.update((v, int(T.parent[v])))
    if len(S) > K:
        raise DecompositionError(f"{len(S)} bridge vertices exceed K={K}")
    parity = T.depth() % 2
    a = 2 * piece + parity
    counts = np.bincount(a, minlength=clusters)
    if (counts < T.n / (2 * clusters)).any() or (counts > 2 * T.n / clusters).any():
        raise DecompositionError(f"unbalanced colour classes {counts.tolist()}")
    offsets = np.concatenate([[0], np.cumsum(counts)])
    cl = [np.arange(offsets[c], offsets[c + 1]) for c in range(clusters)]
    pairs = [(2 * p, 2 * p + 1) for p in range(P)]

    special = []
    for p, want in enumerate(cases):
        left, right = pairs[p]
        members = np.flatnonzero(piece == p).tolist()
        m = alpha * min(counts[left], counts[right])
        prng = rng.child(1 + p)
        options = list(CASES) if want == "random" else [want]
        order = [options[i] for i in prng.child(0).permutation(len(options))]
        chosen = None
        for case in order:
            if case == "leaves":
                links = _special_leaves(T, members, a, left, right, S, m, prng.child(1))
            elif case.startswith("secondary"):
                side = left if case == "secondary-left" else right
                links = _special_secondary(T, members, a, side, S, m, prng.child(2))
            else:
                links = _special_paths(T, members, a, left, S, m, prng.child(3))
            if links:
                chosen = (case, links)
                break
        if chosen is None:
            raise DecompositionError(f"pair {p}: tree has no room for case {want!r}")
        case, links = chosen
        if case == "leaves":
            F2 = {x for x, _ in links}
            F1 = {q for _, q in links}
        elif case.startswith("secondary"):
            F2 = {y for y, _ in links} | {c for y, _ in links for c in T.children[y]}
            F1 = {q for _, q in links}
        else:
            F2 = {v for x in links for v in x[1:3]}
            F1 = {v for x in links for v in (x[0], x[3])}
        special.append(PairSpecial(case, tuple(sorted(F1)), tuple(sorted(F2)),
                                   tuple(tuple(int(v) for v in x) for x in links)))

    N = T.n
    adj = np.zeros((N, N), dtype=bool)
    hrng = rng.child(1 + P)
    t = 0
    for i in range(clusters):
        for j in range(i + 1, clusters):
            M = _random_block(len(cl[i]), len(cl[j]), d, hrng.child(t), cfg)
            adj[np.ix_(cl[i], cl[j])] = M
            adj[np.ix_(cl[j], cl[i])] = M.T
            t += 1
    dec = ClusterDecomposition(cl, pairs, a.astype(np.int64), tuple(sorted(S)), special, alpha, K)
    return adj, dec


# ---------------------------------------------------------------------------
# buffered random greedy

@dataclass
class TreeConfig:
    eps: float = 0.04
    alpha: float = 0.2
    K: int = 8
    star_D: int = 8
    buffer_retries: int = 50
    max_retries: int = 10
    factor: FactorParams = field(default_factory=lambda: FactorParams(max_rounds=40))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ForestPiece:
    """Bipartite forest with sides ``left`` (into A) and ``right`` (into B)."""
    left: tuple[int, ...]
    right: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]

    def neighbors(self) -> dict[int, list[int]]:
        nb = {v: [] for v in self.left + self.right}
        for u, v in self.edges:
            nb[u].append(v)
            nb[v].append(u)
        return nb

    def components(self) -> list[list[int]]:
        nb = self.neighbors()
        seen, out = set(), []
        for s in sorted(nb):
            if s in seen:
                continue
            comp, stack = [], [s]
            seen.add(s)
            while stack:
                u = stack.pop()
                comp.append(u)
                for w in nb[u]:
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
            out.append(sorted(comp))
        return out


@dataclass(frozen=True)
class HostPair:
    adj: np.ndarray
    A: np.ndarray
    B: np.ndarray

    @property
    def density(self) -> float:
        return float(self.adj[np.ix_(self.A, self.B)].mean())


def _mask(N: int, items) -> np.ndarray:
    m = np.zeros(N, dtype=bool)
    m[np.asarray(list(items), dtype=np.int64)] = True
    return m


def _contiguous_order(H: ForestPiece, nb: dict, S: set) -> list[int]:
    """Component by component, each vertex's unplaced neighbours right after it.

    Components are entered at their bridge vertices when they have any.  A
    vertex therefore waits at most ``Delta`` placements after its first
    placed neighbour.
    """
    order = []
    for comp in H.components():
        roots = [v for v in comp if v in S] or [comp[0]]
        seen = set(roots)
        stack = list(reversed(roots))
        if roots[0] not in S:
            order.append(roots[0])
        while stack:
            u = stack.pop()
            fresh = [w for w in sorted(nb[u]) if w not in seen]
            seen.update(fresh)
            order.extend(w for w in fresh if w not in S)
            stack.extend(reversed(fresh))
    return order


def _summary(sizes: list[int]) -> dict:
    if not sizes:
        return {"count": 0}
    arr = np.asarray(sizes)
    edges = [1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1 << 30]
    hist, _ = np.histogram(arr, bins=edges)
    return {"count": int(arr.size), "min": int(arr.min()), "mean": float(arr.mean()),
            "hist": {f"{lo}-{hi - 1}": int(h) for lo, hi, h in zip(edges, edges[1:], hist) if h}}


def random_greedy_embed(H: ForestPiece, G: HostPair, S, phi0: PartialEmbedding, F, B1, B2,
                        config: TreeConfig | None = None, rng: SeededRng | None = None,
                        trace: dict | None = None) -> PartialEmbedding:
    """Extend ``phi0`` to every vertex of ``H`` inside the pair ``G``.

    ``Z1, Z2`` are carved out of ``B2`` (``Z2`` first when ``B2`` is tiny),
    neighbours of ``S`` get private random target sets avoiding the buffers,
    vertices of ``F`` aim at ``B1 + Z1`` and everything else at the unbuffered
    rest plus ``Z2``.  Each vertex is drawn uniformly from the targets that
    keep a ``d/2`` fraction of every unplaced neighbour's options.
    """
    cfg = config or TreeConfig()
    rng = rng or SeededRng(0)
    adj, N = G.adj, G.adj.shape[0]
    S = set(int(s) for s in S)
    F = set(int(v) for v in F)
    phi = phi0.copy()
    if not H.left and not H.right:
        return phi
    nb = H.neighbors()
    A_m, B_m = _mask(N, G.A), _mask(N, G.B)
    B1_m, B2_m = _mask(N, B1), _mask(N, B2)
    if (B1_m & B2_m).any():
        raise ValueError("B1 and B2 must be disjoint")
    if len(H.left) > len(G.A) or len(H.right) > len(G.B):
        raise ValueError("forest side larger than host side")
    for side, W in ((H.left, A_m), (H.right, B_m)):
        if sum(v in F for v in side) != int((B1_m & W).sum()):
            raise ValueError("|F| and |B1| disagree on a side")
        if int((B2_m & W).sum()) != int(W.sum()) - len(side):
            raise ValueError("|B2| must equal the unused room on each side")
    if any(phi.phi[s] < 0 for s in S):
        raise ValueError("bridge vertices must be placed by phi0")

    n = min(len(G.A), len(G.B))
    d = G.density
    eps = cfg.eps
    Delta = max((len(x) for x in nb.values()), default=0)
    side_of = {v: 0 for v in H.left} | {v: 1 for v in H.right}
    W = (A_m, B_m)

    z = max(1, math.floor(math.sqrt(eps) * n))
    Z1 = np.zeros(N, dtype=bool)
    Z2 = np.zeros(N, dtype=bool)
    for j, Wm in enumerate(W):
        pool = np.flatnonzero(B2_m & Wm)
        pool = pool[rng.child(j).permutation(pool.size)]
        z2 = min(z, (pool.size + 1) // 2)
        z1 = min(z, pool.size - z2)
        Z2[pool[:z2]] = True
        Z1[pool[z2:z2 + z1]] = True

    def available(u: int, target: np.ndarray) -> np.ndarray:
        m = target & ~phi.occupied
        for w in nb[u]:
            if phi.phi[w] >= 0:
                m &= adj[phi.phi[w]]
        return m

    NS = sorted({w for s in S for w in nb.get(s, []) if w not in S})
    k = max(1, len(S))
    xsize = max(1, math.floor(math.sqrt(eps) * (d / 2) ** Delta * n / (2 * Delta * k))) if Delta else 1
    target: dict[int, np.ndarray] = {}
    Z3 = np.zeros(N, dtype=bool)
    xr = rng.child(2)
    for i, v in enumerate(NS):
        Wv, Wo = W[side_of[v]], W[1 - side_of[v]]
        free = available(v, Wv) & ~(B1_m | B2_m | Z3)
        free &= adj[:, Wo].sum(axis=1) >= (d / 2) * Wo.sum()
        pool = np.flatnonzero(free)
        others = [target[u] for u in NS[:i] if side_of[u] != side_of[v]]
        for t in range(cfg.buffer_retries):
            if pool.size < xsize:
                break
            pick = pool[xr.child(i).child(t).permutation(pool.size)[:xsize]]
            if all(adj[np.ix_(pick, np.flatnonzero(X))].mean() >= 0.8 * d for X in others):
                break
        else:
            pick = None
        if pool.size < xsize or pick is None:
            raise EmbeddingStuck("greedy", f"no room for the target set of {v}",
                                 {"vertex": v, "room": int(pool.size)})
        target[v] = _mask(N, pick)
        Z3[pick] = True
    region_F = (B1_m & ~Z3) | Z1
    region_rest = (~(B1_m | B2_m | Z3)) | Z2
    for v in nb:
        if v in S or v in target:
            continue
        target[v] = W[side_of[v]] & (region_F if v in F else region_rest)

    order = _contiguous_order(H, nb, S)
    floor = max(1, math.ceil(eps ** 2 * n))
    sizes = []
    grng = rng.child(3)
    for i, v in enumerate(order):
        cand = np.flatnonzero(available(v, target[v]))
        for u in nb[v]:
            if phi.phi[u] >= 0 or cand.size == 0:
                continue
            au = available(u, target[u])
            cnt = int(au.sum())
            if cnt:
                ok = adj[np.ix_(cand, np.flatnonzero(au))].sum(axis=1) >= (d / 2) * cnt
                cand = cand[ok]
        if cand.size < floor:
            raise EmbeddingStuck("greedy", f"vertex {v} has {cand.size} candidates (floor {floor})",
                                 {"vertex": v, "step": i, "candidates": int(cand.size),
                                  "floor": floor})
        sizes.append(int(cand.size))
        phi.place(v, int(cand[grng.randbelow(cand.size)]))

    newly = [v for v in order]
    used_B2 = int(sum(B2_m[phi.phi[v]] for v in newly))
    missed_F = int(sum(not B1_m[phi.phi[v]] for v in newly if v in F))
    bound = eps ** (1 / 3) * n
    ok = used_B2 <= bound and missed_F <= bound
    if trace is not None:
        trace.update({"n": n, "density": d, "z": z, "target_size": xsize, "floor": floor,
                      "order": order, "candidates": _summary(sizes), "min_candidates": min(sizes, default=None),
                      "B2_used": used_B2, "F_missed": missed_F, "bound": bound,
                      "postconditions": ok})
    if not ok:
        raise StageFailure("greedy", "buffer postcondition violated",
                           {"B2_used": used_B2, "F_missed": missed_F, "bound": bound})
    return phi


# ---------------------------------------------------------------------------
# path systems

@dataclass
class PathSystem:
    """``paths[j] = (v1, v2, v3, v4)`` in global ids of the four-layer system."""
    paths: np.ndarray


def sample_path_system(fourlayer: PartiteSystem, pi, rng: SeededRng, ends=None,
                       params: FactorParams | None = None) -> PathSystem:
    """Disjoint length-3 paths ``v1 v2 v3 pi(v1)`` covering all four layers.

    ``V1`` and ``V4`` are identified along ``pi``: a vertex ``x`` of ``V1``
    sees ``y`` in ``V3`` when ``pi(x)`` does.  A spread triangle factor of the
    resulting three-part system is read back as paths.  ``ends`` optionally
    lists the ``V1`` vertex of each path slot (local ids); rows follow it.
    """
    if fourlayer.r != 4:
        raise ValueError("need a four-layer system")
    n = fourlayer.n
    pi = np.asarray(pi, dtype=np.int64)
    if pi.shape != (n,) or sorted(pi.tolist()) != list(range(n)):
        raise ValueError("pi must be a bijection V1 -> V4")
    blocks = {(0, 1): fourlayer.block(0, 1), (1, 2): fourlayer.block(1, 2),
              (0, 2): fourlayer.block(3, 2)[pi]}
    aux = PartiteSystem(3, n, blocks)
    factor = sample_spread_kr_factor(aux, params or FactorParams(), rng)
    rows = np.asarray(factor.cliques, dtype=np.int64)
    local = rows - np.array([0, n, 2 * n])[None, :]
    by_v1 = np.empty((n, 3), dtype=np.int64)
    by_v1[local[:, 0]] = local
    slots = np.arange(n) if ends is None else np.asarray(ends, dtype=np.int64)
    sel = by_v1[slots]
    paths = np.stack([sel[:, 0], sel[:, 1] + n, sel[:, 2] + 2 * n, pi[sel[:, 0]] + 3 * n], axis=1)
    return PathSystem(paths)


# ---------------------------------------------------------------------------
# the pipeline

def _complete_stars(phi: PartialEmbedding, adj: np.ndarray, groups: dict[int, list[int]],
                    targets: np.ndarray, cfg: TreeConfig, rng: SeededRng, stage: str) -> None:
    """Place each group's children on distinct targets adjacent to the group root's image."""
    roots = sorted(groups)
    rows = phi.phi[roots]
    G = BipartiteGraph(adj[np.ix_(rows, targets)])
    demands = [len(groups[r]) for r in roots]
    if sum(demands) != targets.size:
        raise StageFailure(stage, "demand does not match the free room",
                           {"demand": sum(demands), "room": int(targets.size)})
    if d_matching(G, demands) is None:
        raise StageFailure(stage, "no star system exists", {"roots": roots})
    cap = max(demands)
    out = sample_spread_star_matching(G, StarDemand(tuple(demands), cap), cfg.star_D, rng)
    for i, r in enumerate(roots):
        for x, b in zip(sorted(groups[r]), out.get(i, ())):
            phi.place(x, int(targets[b]))


def _buffers(adj, A, B, sizes_a, sizes_b, delta, cfg, rng):
    """Disjoint random buffers with every cross pair keeping a delta/3 minimum degree."""
    for t in range(cfg.buffer_retries):
        r = rng.child(t)
        pa = A[r.child(0).permutation(A.size)]
        pb = B[r.child(1).permutation(B.size)]
        b1, b2 = pa[:sizes_a[0]], pa[sizes_a[0]:sizes_a[0] + sizes_a[1]]
        c1, c2 = pb[:sizes_b[0]], pb[sizes_b[0]:sizes_b[0] + sizes_b[1]]
        good = True
        for X in (b1, b2):
            for Y in (c1, c2):
                if X.size and Y.size:
                    M = adj[np.ix_(X, Y)]
                    if min(M.sum(1).min() / Y.size, M.sum(0).min() / X.size) < delta / 3:
                        good = False
        if good:
            return b1, b2, c1, c2, t
    raise StageFailure("buffers", "no buffer choice passed the degree check")


def _place_bridges(T, adj, dec, phi, delta, rng, sizes):
    cl = dec.clusters
    order = [v for v in T.bfs_order() if v in set(dec.bridges)]
    for i, s in enumerate(order):
        C = cl[dec.assignment[s]]
        cand = C[~phi.occupied[C]]
        for u in T.neighbors(s):
            if phi.phi[u] >= 0:
                cand = cand[adj[phi.phi[u], cand]]
            Cu = cl[dec.assignment[u]]
            cand = cand[adj[np.ix_(cand, Cu)].sum(axis=1) >= delta * Cu.size / 3]
        if cand.size == 0:
            raise EmbeddingStuck("bridges", f"no candidate for bridge {s}", {"vertex": int(s)})
        sizes.append(int(cand.size))
        phi.place(s, int(cand[rng.child(i).randbelow(cand.size)]))


def _embed_pair(T, adj, dec, p, phi, delta, cfg, rng, trace):
    left, right = dec.pairs[p]
    sp = dec.special[p]
    A, B = dec.clusters[left], dec.clusters[right]
    a = dec.assignment
    F1, F2 = set(sp.F1), set(sp.F2)
    members = [v for v in range(T.n) if a[v] in (left, right)]
    Lt = [v for v in members if a[v] == left]
    Rt = [v for v in members if a[v] == right]
    freeA = A[~phi.occupied[A]]
    freeB = B[~phi.occupied[B]]
    count = lambda vs, X: sum(v in X for v in vs)
    b1, b2, c1, c2, tries = _buffers(adj, freeA, freeB, (count(Lt, F1), count(Lt, F2)),
                                     (count(Rt, F1), count(Rt, F2)), delta, cfg, rng.child(0))
    keep = set(members) - F2
    H = ForestPiece(tuple(v for v in Lt if v in keep), tuple(v for v in Rt if v in keep),
                    tuple((int(c), int(q)) for c, q in T.edges() if c in keep and q in keep))
    S_here = [s for s in dec.bridges if s in keep]
    gtrace: dict = {}
    phi2 = random_greedy_embed(H, HostPair(adj, A, B), S_here, phi, F1,
                               np.concatenate([b1, c1]), np.concatenate([b2, c2]), cfg,
                               rng.child(1), gtrace)
    phi.phi, phi.occupied = phi2.phi, phi2.occupied
    D2 = A[~phi.occupied[A]]
    D2r = B[~phi.occupied[B]]
    crng = rng.child(2)
    if sp.case == "leaves":
        # leaves on the left hang from right-side parents, then the other way round
        for j, (side, room) in enumerate(((left, D2), (right, D2r))):
            groups: dict[int, list[int]] = {}
            for x, q in sp.links:
                if a[x] == side:
                    groups.setdefault(q, []).append(x)
            _complete_stars(phi, adj, groups, room, cfg, crng.child(j), "stars")
    elif sp.case.startswith("secondary"):
        first, second = (D2, D2r) if sp.case == "secondary-left" else (D2r, D2)
        groups = {}
        for y, q in sp.links:
            groups.setdefault(q, []).append(y)
        _complete_stars(phi, adj, groups, first, cfg, crng.child(0), "stars")
        kids = {y: list(T.children[y]) for y, _ in sp.links}
        _complete_stars(phi, adj, kids, second, cfg, crng.child(1), "stars")
    else:
        links = np.asarray(sp.links, dtype=np.int64)
        m = links.shape[0]
        if D2.size != m or D2r.size != m:
            raise StageFailure("paths", "free room does not match the path count")
        V1 = phi.phi[links[:, 0]]
        V4 = phi.phi[links[:, 3]]
        V2, V3 = D2r, D2
        layers = [V1, V2, V3, V4]
        blocks = {(i, i + 1): adj[np.ix_(layers[i], layers[i + 1])] for i in range(3)}
        try:
            ps = sample_path_system(PartiteSystem(4, m, blocks), np.arange(m), crng, None, cfg.factor)
        except RetriesExhausted as exc:
            raise StageFailure("paths", str(exc)) from exc
        loc = ps.paths - (np.arange(4) * m)[None, :]
        for j in range(m):
            phi.place(int(links[j, 1]), int(V2[loc[j, 1]]))
            phi.place(int(links[j, 2]), int(V3[loc[j, 2]]))
    if trace is not None:
        trace.append({"stage": "pair", "pair": p, "case": sp.case, "buffer_resamples": tries,
                      "greedy": {k: v for k, v in gtrace.items() if k != "order"}})


def _embed_once(T, adj, dec, cfg, rng, trace):
    phi = PartialEmbedding(T.n, adj.shape[0])
    delta = min(adj[np.ix_(dec.clusters[i], dec.clusters[j])].mean() for i, j in dec.pairs)
    sizes: list[int] = []
    _place_bridges(T, adj, dec, phi, delta, rng.child(0), sizes)
    if trace is not None:
        trace.append({"stage": "bridges", "candidates": _summary(sizes)})
    for p in range(len(dec.pairs)):
        _embed_pair(T, adj, dec, p, phi, delta, cfg, rng.child(1 + p), trace)
    if not check_embedding(T, adj, phi.phi):
        raise StageFailure("verify", "result is not an embedding")
    return phi


def embed_tree(T: RootedTree, adj: np.ndarray, dec: ClusterDecomposition,
               config: TreeConfig | None = None, rng: SeededRng | None = None,
               trace: list | None = None) -> PartialEmbedding:
    """Spread embedding of ``T`` along a cluster decomposition of the host.

    Attempt ``t`` runs on ``rng.child(t)``; a failed stage discards the whole
    attempt.  ``trace`` (a list) receives one record per stage and failure.
    """
    cfg = config or TreeConfig()
    rng = rng or SeededRng(0)
    problems = dec.problems(T, adj)
    if problems:
        raise ValueError("invalid decomposition: " + "; ".join(problems[:3]))
    failures = []
    for t in range(cfg.max_retries):
        local: list | None = [] if trace is not None else None
        try:
            phi = _embed_once(T, adj, dec, cfg, rng.child(t), local)
        except StageFailure as exc:
            failures.append(exc.stage)
            if trace is not None:
                trace.extend(local)
                trace.append({"stage": "failure", "attempt": t, "where": exc.stage,
                              "message": str(exc)})
            continue
        if trace is not None:
            trace.extend(local)
            trace.append({"stage": "done", "attempt": t})
        return phi
    raise RetriesExhausted("tree embedding", cfg.max_retries, detail=",".join(failures))


def embed_tree_dense(T: RootedTree, adj: np.ndarray, rng: SeededRng | None = None,
                     max_retries: int = 10, star_D: int = 8, trace: list | None = None
                     ) -> PartialEmbedding:
    """Single-stage fallback for dense hosts without a decomposition.

    Non-leaves are placed random-greedily in BFS order (candidates keep half
    the average density towards the free vertices); leaves are then attached
    with one spread star system.
    """
    rng = rng or SeededRng(0)
    N = adj.shape[0]
    if N != T.n:
        raise ValueError("host and tree must have the same order")
    d = float(adj.sum() / max(1, N * (N - 1)))
    leaves = set(T.leaves().tolist()) - {T.root}
    for t in range(max_retries):
        r = rng.child(t)
        phi = PartialEmbedding(T.n, N)
        try:
            for i, v in enumerate(x for x in T.bfs_order() if x not in leaves):
                free = ~phi.occupied
                if T.parent[v] >= 0:
                    free &= adj[phi.phi[T.parent[v]]]
                cand = np.flatnonzero(free)
                room = int((~phi.occupied).sum()) - 1
                if T.children[v] and cand.size:
                    deg = (adj[cand][:, ~phi.occupied]).sum(axis=1)
                    cand = cand[deg >= (d / 2) * room]
                if cand.size == 0:
                    raise EmbeddingStuck("dense-greedy", f"vertex {v} stuck", {"vertex": int(v)})
                phi.place(v, int(cand[r.child(0).child(i).randbelow(cand.size)]))
            groups: dict[int, list[int]] = {}
            for x in leaves:
                groups.setdefault(int(T.parent[x]), []).append(x)
            if groups:
                _complete_stars(phi, adj, groups, np.flatnonzero(~phi.occupied),
                                TreeConfig(star_D=star_D), r.child(1), "dense-stars")
        except (StageFailure, RetriesExhausted) as exc:
            if trace is not None:
                trace.append({"stage": "failure", "attempt": t, "message": str(exc)})
            continue
        if check_embedding(T, adj, phi.phi):
            return phi
    raise RetriesExhausted("dense tree embedding", max_retries)


def random_dense_host(n: int, p: float, rng: SeededRng) -> np.ndarray:
    """Symmetric G(n, p) adjacency matrix."""
    upper = np.triu(rng.random((n, n)) < p, 1)
    return upper | upper.T

"""Regular pairs: certification, surgery and synthetic generators.

A pair is given either as a :class:`BipartiteGraph` (sides are its rows and
columns) or as a graph plus two disjoint vertex lists.  Two certification
methods exist:

``exhaustive``
    the exact maximum of ``|d(A1, A2) - d(X1, X2)|`` over all qualifying
    subset pairs, feasible up to 16 vertices per side.  For a fixed ``X1`` the
    extreme ``X2`` of each size is a prefix of the columns sorted by degree
    into ``X1``, so only the ``X1`` side is enumerated.

``codegree``
    the mean absolute deviation of the pairwise codegrees from ``d**2 |B|``,
    normalised by ``|B|`` and maximised over the two sides.  A pair passes at
    ``eps`` when this score is at most ``eps``.  The score is a calibrated
    surrogate; the rigorous consequence is carried separately as
    ``certified_bound`` (see :func:`codegree_bound`).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .hypergraph import SCHEMA_VERSION, BipartiteGraph, Hypergraph, check_schema
from .rng import SeededRng

EXHAUSTIVE_CAP = 16
DEFAULT_RATIO = 0.1  # "eps << d" is read as eps <= DEFAULT_RATIO * d


def _biadjacency(G, A1=None, A2=None) -> np.ndarray:
    if isinstance(G, BipartiteGraph):
        adj = G.adj
        rows = np.arange(G.na) if A1 is None else np.asarray(list(A1), dtype=np.int64)
        cols = np.arange(G.nb) if A2 is None else np.asarray(list(A2), dtype=np.int64)
        return adj[np.ix_(rows, cols)]
    if isinstance(G, PartiteSystem):
        adj = G.adjacency()
    elif isinstance(G, Hypergraph):
        adj = G.adjacency_matrix()
    else:
        adj = np.asarray(G, dtype=bool)
    if A1 is None or A2 is None:
        raise ValueError("vertex sets are required for a general graph")
    a1 = np.asarray(list(A1), dtype=np.int64)
    a2 = np.asarray(list(A2), dtype=np.int64)
    if np.intersect1d(a1, a2).size:
        raise ValueError("vertex sets must be disjoint")
    return adj[np.ix_(a1, a2)]


def pair_density(G, X1, X2) -> Fraction:
    """Exact density ``e(X1, X2) / (|X1| |X2|)``."""
    M = _biadjacency(G, X1, X2)
    if M.shape[0] == 0 or M.shape[1] == 0:
        raise ValueError("empty part")
    return Fraction(int(M.sum()), M.shape[0] * M.shape[1])


@dataclass(frozen=True)
class PairCertificate:
    density: Fraction
    score: float
    min_degree_fraction: float
    method: str
    eps: float
    certified_bound: float | None = None
    witness: tuple[tuple[int, ...], tuple[int, ...]] | None = None

    def passes(self, eps: float | None = None) -> bool:
        return self.score <= (self.eps if eps is None else eps) + 1e-12

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "kind": "pair_certificate",
                "density": [self.density.numerator, self.density.denominator],
                "score": self.score, "min_degree_fraction": self.min_degree_fraction,
                "method": self.method, "eps": self.eps,
                "certified_bound": self.certified_bound,
                "witness": None if self.witness is None else [list(w) for w in self.witness]}


def _min_deg_fraction(M: np.ndarray) -> float:
    a, b = M.shape
    return float(min(M.sum(axis=1).min() / b, M.sum(axis=0).min() / a))


def _exhaustive(M: np.ndarray, eps: float):
    a, b = M.shape
    d = M.sum() / (a * b)
    s1 = max(1, math.ceil(eps * a - 1e-9))
    s2 = max(1, math.ceil(eps * b - 1e-9))
    masks = np.arange(1, 1 << a, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(a)) & 1).astype(np.int64)
    sizes = bits.sum(axis=1)
    keep = sizes >= s1
    bits, sizes, masks = bits[keep], sizes[keep], masks[keep]
    col = bits @ M.astype(np.int64)  # degree of each column into X1
    asc = np.sort(col, axis=1)
    top = np.cumsum(asc[:, ::-1], axis=1)
    bot = np.cumsum(asc, axis=1)
    t = np.arange(1, b + 1)
    denom = sizes[:, None] * t[None, :]
    dev = np.maximum(np.abs(top / denom - d), np.abs(bot / denom - d))
    dev[:, : s2 - 1] = -1.0
    i, j = np.unravel_index(int(np.argmax(dev)), dev.shape)
    x1 = tuple(int(v) for v in np.flatnonzero(bits[i]))
    order = np.argsort(col[i], kind="stable")
    size2 = j + 1
    hi = order[::-1][:size2]
    lo = order[:size2]
    pick = hi if abs(top[i, j] / denom[i, j] - d) >= abs(bot[i, j] / denom[i, j] - d) else lo
    x2 = tuple(sorted(int(v) for v in pick))
    sub = M[np.ix_(list(x1), list(x2))]
    exact = abs(Fraction(int(M.sum()), a * b) - Fraction(int(sub.sum()), sub.size))
    return float(exact), (x1, x2)


def codegree_score(M: np.ndarray) -> float:
    """Mean |codeg(u, v) - d^2 |B|| / |B| over ordered pairs u != v, max over sides."""
    a, b = M.shape
    d = M.sum() / (a * b)
    best = 0.0
    for X, other in ((M, b), (M.T, a)):
        m = X.shape[0]
        if m < 2:
            continue
        F = X.astype(np.float64)
        cod = F @ F.T
        np.fill_diagonal(cod, d * d * other)
        best = max(best, float(np.abs(cod - d * d * other).sum() / (m * (m - 1) * other)))
    return best


def codegree_bound(M: np.ndarray, eps: float) -> float:
    """Rigorous upper bound on the exhaustive score implied by codegrees.

    With ``x = |X| >= eps|A|``, ``y = |Y| >= eps|B|``, Cauchy-Schwarz gives
    ``|d(X,Y) - d| <= eps^-1/2 sqrt(s/eps^2 + d(1-d)/(eps|A|) + (2d + 1/(eps|A|)) rho)``
    where ``s`` is the codegree score of side A and ``rho`` the largest
    relative degree deviation on side A.  Both orientations are valid; the
    smaller bound is returned.  At desk sizes the bound is usually above 1.
    """
    a, b = M.shape
    d = M.sum() / (a * b)
    out = math.inf
    for X in (M, M.T):
        m, other = X.shape
        if m < 2:
            continue
        F = X.astype(np.float64)
        cod = F @ F.T
        np.fill_diagonal(cod, d * d * other)
        s = float(np.abs(cod - d * d * other).sum() / (m * (m - 1) * other))
        s *= (m - 1) / m  # the derivation sums over a^2 ordered pairs
        rho = float(np.abs(X.sum(axis=1) / other - d).max())
        inner = s / eps**2 + d * (1 - d) / (eps * m) + (2 * d + 1 / (eps * m)) * rho
        out = min(out, math.sqrt(inner / eps))
    return out


def certify_regularity(G, A1=None, A2=None, eps: float = 0.1,
                       method: str = "auto") -> PairCertificate:
    """Regularity certificate of the pair ``(A1, A2)``.

    ``method`` is ``"exhaustive"``, ``"codegree"`` or ``"auto"`` (exhaustive when
    both sides have at most 16 vertices).
    """
    M = _biadjacency(G, A1, A2)
    a, b = M.shape
    if a == 0 or b == 0:
        raise ValueError("parts must be nonempty")
    if method == "auto":
        method = "exhaustive" if max(a, b) <= EXHAUSTIVE_CAP else "codegree"
    dens = Fraction(int(M.sum()), a * b)
    mdf = _min_deg_fraction(M)
    if method == "exhaustive":
        if max(a, b) > EXHAUSTIVE_CAP:
            raise ValueError(f"exhaustive certification is capped at {EXHAUSTIVE_CAP} per side")
        score, wit = _exhaustive(M, eps)
        return PairCertificate(dens, score, mdf, "exhaustive", eps, score, wit)
    if method != "codegree":
        raise ValueError(f"unknown method {method!r}")
    return PairCertificate(dens, codegree_score(M), mdf, "codegree", eps, codegree_bound(M, eps))


@dataclass(frozen=True)
class SuperRegularVerdict:
    ok: bool
    worst_vertex: tuple[str, int]
    reason: str
    certificate: PairCertificate

    def __bool__(self) -> bool:
        return self.ok


def certify_super_regular(G, A1=None, A2=None, d: float = 0.5, eps: float = 0.1,
                          delta: float | None = None, *, density_tol: float | None = None,
                          plus: bool = False, method: str = "auto") -> SuperRegularVerdict:
    """Check ``(d, eps, delta)``-super-regularity of a pair.

    The density must lie within ``density_tol`` (default ``eps``) of ``d``;
    with ``plus=True`` only the lower side is enforced.  ``delta`` defaults to
    ``d - eps``.  The worst vertex is the one with the smallest degree fraction,
    reported as ``("A", i)`` or ``("B", j)`` with ids local to the given lists.
    """
    M = _biadjacency(G, A1, A2)
    cert = certify_regularity(BipartiteGraph(M), None, None, eps, method)
    if delta is None:
        delta = d - eps
    tol = eps if density_tol is None else density_tol
    a, b = M.shape
    da = M.sum(axis=1) / b
    db = M.sum(axis=0) / a
    ia, ib = int(np.argmin(da)), int(np.argmin(db))
    worst = ("A", ia) if da[ia] <= db[ib] else ("B", ib)
    low = min(da[ia], db[ib])
    dens = float(cert.density)
    if low < delta - 1e-12:
        return SuperRegularVerdict(False, worst, "degree", cert)
    if dens < d - tol - 1e-12 or (not plus and dens > d + tol + 1e-12):
        return SuperRegularVerdict(False, worst, "density", cert)
    if not cert.passes(eps):
        return SuperRegularVerdict(False, worst, "regularity", cert)
    return SuperRegularVerdict(True, worst, "ok", cert)


# ---------------------------------------------------------------------------
# partite systems

class PartiteSystem:
    """r parts of n vertices each; part i holds global ids ``i*n .. i*n+n-1``.

    ``blocks[(i, j)]`` for ``i < j`` is the n-by-n adjacency between parts.
    Missing blocks are edgeless.
    """

    def __init__(self, r: int, n: int, blocks: dict[tuple[int, int], np.ndarray],
                 densities: dict[tuple[int, int], float] | None = None):
        self.r = int(r)
        self.n = int(n)
        self.blocks: dict[tuple[int, int], np.ndarray] = {}
        for (i, j), M in blocks.items():
            M = np.asarray(M, dtype=bool)
            if i > j:
                i, j, M = j, i, M.T
            if i == j or not (0 <= i < self.r and 0 <= j < self.r):
                raise ValueError("blocks must join two distinct parts")
            if M.shape != (self.n, self.n):
                raise ValueError("parts must have equal size")
            self.blocks[(i, j)] = np.ascontiguousarray(M)
        if densities is None:
            densities = {key: float(M.mean()) if M.size else 0.0 for key, M in self.blocks.items()}
        self.densities = {(min(i, j), max(i, j)): float(v) for (i, j), v in densities.items()}
        self._adj = None
        self._cliques = None

    def block(self, i: int, j: int) -> np.ndarray:
        if i < j:
            return self.blocks.get((i, j), np.zeros((self.n, self.n), dtype=bool))
        return self.block(j, i).T

    def density(self, i: int, j: int) -> float:
        return self.densities.get((min(i, j), max(i, j)), 0.0)

    def part(self, i: int) -> np.ndarray:
        return np.arange(i * self.n, (i + 1) * self.n)

    def part_of(self, v: int) -> int:
        return int(v) // self.n

    @property
    def num_vertices(self) -> int:
        return self.r * self.n

    def adjacency(self) -> np.ndarray:
        if self._adj is None:
            N = self.num_vertices
            adj = np.zeros((N, N), dtype=bool)
            for (i, j), M in self.blocks.items():
                adj[i * self.n:(i + 1) * self.n, j * self.n:(j + 1) * self.n] = M
                adj[j * self.n:(j + 1) * self.n, i * self.n:(i + 1) * self.n] = M.T
            self._adj = adj
        return self._adj

    def graph(self) -> Hypergraph:
        iu = np.argwhere(np.triu(self.adjacency(), 1))
        return Hypergraph(self.num_vertices, 2, iu, _canonical=True)

    def pair(self, i: int, j: int) -> BipartiteGraph:
        return BipartiteGraph(self.block(i, j))

    def cliques(self) -> np.ndarray:
        """All transversal r-cliques as an ``(m, r)`` array of global ids."""
        if self._cliques is None:
            n = self.n
            partial = np.arange(n, dtype=np.int64)[:, None]
            for j in range(1, self.r):
                ok = np.ones((partial.shape[0], n), dtype=bool)
                for i in range(j):
                    ok &= self.block(i, j)[partial[:, i]]
                rows, cols = np.nonzero(ok)
                partial = np.concatenate([partial[rows], cols[:, None]], axis=1)
            self._cliques = partial + (np.arange(self.r, dtype=np.int64) * n)[None, :]
        return self._cliques

    def clique_hypergraph(self) -> Hypergraph:
        c = self.cliques()
        return Hypergraph(self.num_vertices, self.r, c, _canonical=True)

    def restrict(self, subsets: Sequence[Sequence[int]]) -> "PartiteSystem":
        """Sub-system on local index lists (one per part, equal lengths)."""
        if len(subsets) != self.r or len({len(s) for s in subsets}) != 1:
            raise ValueError("need one equal-sized subset per part")
        idx = [np.asarray(list(s), dtype=np.int64) for s in subsets]
        blocks = {(i, j): M[np.ix_(idx[i], idx[j])] for (i, j), M in self.blocks.items()}
        return PartiteSystem(self.r, len(idx[0]), blocks, self.densities)

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "kind": "partite_system", "r": self.r,
                "n": self.n,
                "densities": [[i, j, v] for (i, j), v in sorted(self.densities.items())],
                "blocks": [[i, j, np.argwhere(M).tolist()] for (i, j), M in sorted(self.blocks.items())]}

    @classmethod
    def from_dict(cls, obj: dict) -> "PartiteSystem":
        check_schema(obj)
        r, n = int(obj["r"]), int(obj["n"])
        blocks = {}
        for i, j, edges in obj["blocks"]:
            M = np.zeros((n, n), dtype=bool)
            for a, b in edges:
                M[a, b] = True
            blocks[(int(i), int(j))] = M
        dens = {(int(i), int(j)): float(v) for i, j, v in obj["densities"]}
        return cls(r, n, blocks, dens)

    def __repr__(self) -> str:
        return f"PartiteSystem(r={self.r}, n={self.n})"


# ---------------------------------------------------------------------------
# counting lemma audit

def counting_lemma_audit(system: PartiteSystem, pattern: Sequence[tuple[int, int]],
                         subsets: Sequence[Sequence[int]], eps: float,
                         c_h: float) -> tuple[int, tuple[float, float]]:
    """Homomorphism count of ``pattern`` with vertex i mapped into ``subsets[i]``.

    Pattern vertex ``i`` lives in part ``i``; ``subsets`` holds local ids.
    Returns the exact count and the band
    ``prod d_ij * prod |X_i| +- c_h * eps * prod |A_i|``.
    """
    h = len(subsets)
    if h > 4 or h > system.r:
        raise ValueError("patterns have at most 4 vertices, one per part")
    X = [np.asarray(list(s), dtype=np.int64) for s in subsets]
    for x in X:
        if len(x) < eps * system.n:
            raise ValueError("subsets too small")
    edges = [(min(i, j), max(i, j)) for i, j in pattern]
    for i, j in edges:
        if system.density(i, j) < eps:
            raise ValueError("declared density below eps")
    letters = "abcd"
    ops, terms = [], []
    for i, j in edges:
        ops.append(system.block(i, j)[np.ix_(X[i], X[j])].astype(np.int64))
        terms.append(letters[i] + letters[j])
    used = {c for t in terms for c in t}
    free = 1
    for i in range(h):
        if letters[i] not in used:
            free *= len(X[i])
    observed = int(np.einsum(",".join(terms) + "->", *ops)) * free if ops else free
    predicted = float(np.prod([system.density(i, j) for i, j in edges])) * \
        float(np.prod([len(x) for x in X]))
    slack = c_h * eps * float(system.n) ** h
    return observed, (predicted - slack, predicted + slack)


# ---------------------------------------------------------------------------
# surgery

@dataclass
class SplitReport:
    high_a: list[int]
    high_b: list[int]
    removed_edges: int
    removal_bound: float
    input_verdict: SuperRegularVerdict
    kept_verdict: SuperRegularVerdict
    complement_verdict: SuperRegularVerdict


def _check_ratio(small: float, big: float, ratio: float, what: str) -> None:
    if small > ratio * big + 1e-12:
        raise ValueError(f"{what}: need eps <= {ratio} * {big}")


def inner_regular_split(G: BipartiteGraph, d: float, eps: float, rng: SeededRng,
                        ratio: float = DEFAULT_RATIO) -> tuple[BipartiteGraph, SplitReport]:
    """Spanning subgraph G' with G' and its bipartite complement both super-regular.

    High-degree vertices (degree at least ``(d + 2 eps) n``) lose the edges
    between the two high sets and are then trimmed to ``round(d n)`` edges.
    """
    if d > 2 / 3:
        raise ValueError("inner regular split needs d <= 2/3")
    _check_ratio(eps, d, ratio, "inner_regular_split")
    adj = G.adj.copy()
    na, nb = adj.shape
    hi_a = np.flatnonzero(adj.sum(axis=1) >= (d + 2 * eps) * nb)
    hi_b = np.flatnonzero(adj.sum(axis=0) >= (d + 2 * eps) * na)
    before = int(adj.sum())
    adj[np.ix_(hi_a, hi_b)] = False
    target_a = int(round(d * nb))
    target_b = int(round(d * na))
    for t, v in enumerate(hi_a):
        nbrs = np.flatnonzero(adj[v])
        if len(nbrs) > target_a:
            drop = rng.child(t).choice(nbrs, size=len(nbrs) - target_a, replace=False)
            adj[v, drop] = False
    for t, v in enumerate(hi_b):
        nbrs = np.flatnonzero(adj[:, v])
        if len(nbrs) > target_b:
            drop = rng.child(len(hi_a) + t).choice(nbrs, size=len(nbrs) - target_b, replace=False)
            adj[drop, v] = False
    out = BipartiteGraph(adj)
    e3 = eps ** (1 / 3)
    report = SplitReport(
        hi_a.tolist(), hi_b.tolist(), before - int(adj.sum()), 2 * eps * na * nb,
        certify_super_regular(G, d=d, eps=eps),
        certify_super_regular(out, d=d, eps=e3),
        certify_super_regular(BipartiteGraph(~adj), d=1 - d, eps=e3),
    )
    return out, report


@dataclass
class BoostReport:
    exceptional_a: list[int]
    exceptional_b: list[int]
    topped_up: int
    floor: int
    verdict: SuperRegularVerdict


def boost_to_super_regular(G: BipartiteGraph, d: float, eps: float, delta: float,
                           rng: SeededRng, ratio: float = DEFAULT_RATIO
                           ) -> tuple[BipartiteGraph, BoostReport]:
    """Spanning subgraph that is ``(delta+, eps^(1/3))``-super-regular.

    Vertices with degree outside ``(d +- 2 eps) n`` are exceptional.  Edges
    between non-exceptional vertices are kept with probability ``delta / d``,
    edges between two exceptional vertices are dropped, and each exceptional
    vertex keeps ``ceil(delta n)`` of its remaining edges.  A non-exceptional
    vertex that sampling leaves below ``delta n (1 - 4 sqrt(eps))`` gets random
    original edges back until it reaches that floor.
    """
    if not 0 < delta <= d:
        raise ValueError("need 0 < delta <= d")
    _check_ratio(eps, d, ratio, "boost_to_super_regular")
    adj = G.adj
    na, nb = adj.shape
    deg_a = adj.sum(axis=1)
    deg_b = adj.sum(axis=0)
    if deg_a.min() < delta * nb - 1e-9 or deg_b.min() < delta * na - 1e-9:
        raise ValueError("some vertex has degree below delta n")
    exc_a = (deg_a < (d - 2 * eps) * nb) | (deg_a > (d + 2 * eps) * nb)
    exc_b = (deg_b < (d - 2 * eps) * na) | (deg_b > (d + 2 * eps) * na)
    normal = np.outer(~exc_a, ~exc_b)
    keep = adj & normal & (rng.child(0).random(adj.shape) < delta / d)
    # exceptional vertices keep ceil(delta n) edges towards normal vertices
    gen = rng.child(1)
    for v in np.flatnonzero(exc_a):
        cand = np.flatnonzero(adj[v] & ~exc_b)
        want = min(len(cand), math.ceil(delta * nb - 1e-9))
        keep[v, gen.choice(cand, size=want, replace=False)] = True
    for v in np.flatnonzero(exc_b):
        cand = np.flatnonzero(adj[:, v] & ~exc_a)
        want = min(len(cand), math.ceil(delta * na - 1e-9))
        keep[gen.choice(cand, size=want, replace=False), v] = True
    # desk-scale concentration: top sampled degrees up to the floor
    slack = 1 - 4 * math.sqrt(eps)
    floor_a = math.ceil(delta * nb * slack - 1e-9)
    floor_b = math.ceil(delta * na * slack - 1e-9)
    gen = rng.child(2)
    topped = 0
    for v in np.flatnonzero(~exc_a):
        have = int(keep[v].sum())
        if have < floor_a:
            cand = np.flatnonzero(adj[v] & ~keep[v])
            add = gen.choice(cand, size=min(len(cand), floor_a - have), replace=False)
            keep[v, add] = True
            topped += 1
    for v in np.flatnonzero(~exc_b):
        have = int(keep[:, v].sum())
        if have < floor_b:
            cand = np.flatnonzero(adj[:, v] & ~keep[:, v])
            add = gen.choice(cand, size=min(len(cand), floor_b - have), replace=False)
            keep[add, v] = True
            topped += 1
    out = BipartiteGraph(keep)
    e3 = eps ** (1 / 3)
    verdict = certify_super_regular(out, d=delta, eps=e3, delta=delta - e3, plus=True)
    return out, BoostReport(np.flatnonzero(exc_a).tolist(), np.flatnonzero(exc_b).tolist(),
                            topped, floor_a, verdict)


# ---------------------------------------------------------------------------
# generators

@dataclass(frozen=True)
class GeneratorConfig:
    density_tol: float = 0.05
    eps: float = 0.15
    delta_factor: float = 0.5
    max_resamples: int = 100


class RejectionCapExceeded(RuntimeError):
    pass


def _random_pair(n: int, d: float, rng: SeededRng) -> np.ndarray:
    return rng.random((n, n)) < d


def _pair_ok(M: np.ndarray, d: float, cfg: GeneratorConfig) -> bool:
    return certify_super_regular(BipartiteGraph(M), d=d, eps=cfg.eps, delta=cfg.delta_factor * d,
                                 density_tol=cfg.density_tol).ok


def generate_super_regular_pair(n: int, d: float, rng: SeededRng,
                                cfg: GeneratorConfig = GeneratorConfig()) -> tuple[BipartiteGraph, int]:
    """Random bipartite pair resampled until certified; returns (pair, resamples)."""
    if not 0 < d <= 1:
        raise ValueError("need 0 < d <= 1")
    for t in range(cfg.max_resamples + 1):
        M = _random_pair(n, d, rng.child(t))
        if _pair_ok(M, d, cfg):
            return BipartiteGraph(M), t
    raise RejectionCapExceeded(f"no certified pair after {cfg.max_resamples} resamples")


def generate_super_regular_system(r: int, n: int, d: float, rng: SeededRng,
                                  cfg: GeneratorConfig = GeneratorConfig(),
                                  pairs: Sequence[tuple[int, int]] | None = None
                                  ) -> PartiteSystem:
    """Independent-edge r-partite system, each listed pair certified.

    Every pair is drawn independently and redrawn until it passes
    certification at ``(d +- density_tol, eps, delta_factor * d)``.  The number
    of redraws per pair is kept in ``system.resamples``.
    """
    if not 0 < d <= 1:
        raise ValueError("need 0 < d <= 1")
    if pairs is None:
        pairs = list(itertools.combinations(range(r), 2))
    blocks, dens, resamples = {}, {}, {}
    for t, (i, j) in enumerate(pairs):
        G, tries = generate_super_regular_pair(n, d, rng.child(t), cfg)
        blocks[(i, j)] = G.adj
        dens[(i, j)] = d
        resamples[(i, j)] = tries
    system = PartiteSystem(r, n, blocks, dens)
    system.resamples = resamples
    return system


def generate_four_layer(n: int, d: float, rng: SeededRng,
                        cfg: GeneratorConfig = GeneratorConfig()) -> PartiteSystem:
    """Layers V1..V4 (parts 0..3) with certified consecutive pairs only."""
    return generate_super_regular_system(4, n, d, rng, cfg, pairs=[(0, 1), (1, 2), (2, 3)])


def _degree_regular_pair(n: int, holes: int, rng: SeededRng, cap: int) -> np.ndarray:
    rows = np.arange(n)
    for t in range(cap + 1):
        gen = rng.child(t)
        M = np.ones((n, n), dtype=bool)
        for _ in range(holes):
            p = gen.permutation(n)
            if not M[rows, p].all():
                break
            M[rows, p] = False
        else:
            return M
    raise RejectionCapExceeded("could not place disjoint perfect matchings")


def generate_degree_regular_system(r: int, n: int, holes: int, rng: SeededRng,
                                   cfg: GeneratorConfig = GeneratorConfig(eps=0.5, density_tol=0.15)
                                   ) -> PartiteSystem:
    """Each pair is K_{n,n} minus ``holes`` disjoint random perfect matchings.

    Every vertex has degree exactly ``n - holes`` towards each other part,
    which keeps clique degrees tight even at very small ``n``.  Pairs are
    redrawn until certified like :func:`generate_super_regular_system`.
    """
    if not 0 <= holes < n:
        raise ValueError("need 0 <= holes < n")
    d = (n - holes) / n
    blocks, resamples = {}, {}
    for t, (i, j) in enumerate(itertools.combinations(range(r), 2)):
        prng = rng.child(t)
        for k in range(cfg.max_resamples + 1):
            M = _degree_regular_pair(n, holes, prng.child(k), cfg.max_resamples)
            if _pair_ok(M, d, cfg):
                break
        else:
            raise RejectionCapExceeded(f"no certified pair after {cfg.max_resamples} resamples")
        blocks[(i, j)] = M
        resamples[(i, j)] = k
    system = PartiteSystem(r, n, blocks, {key: d for key in blocks})
    system.resamples = resamples
    return system

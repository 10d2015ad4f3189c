"""Iterative absorption engine for spread perfect matchings.

A random vortex ``V_0 ⊇ V_1 ⊇ ... ⊇ V_N`` is drawn first.  Level by level,
``cover_down`` covers everything of the current set outside the next one,
spilling only a few vertices into it: a near-regular subgraph is extracted,
a nibble finds an almost perfect matching in it, and a random greedy pass
absorbs the leftovers with edges that have all other vertices in the next
set.  The small final set is matched by exact search.

The same engine runs on r-partite systems (``partite`` mode): vertex sets are
kept balanced across parts, edges are transversal r-cliques and the
regularization step samples cliques from a fractional clique matching.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from .errors import BudgetExhausted, RetriesExhausted, StageFailure
from .exact import exact_hypergraph_pm
from .hypergraph import (Hypergraph, Matching, binomial_subgraph, ell_degree_into,
                         min_ell_degree)
from .partite_factor import (fractional_clique_matching, sample_clique_regularization,
                             target_vertex_sum)
from .regularity import PartiteSystem
from .rng import SeededRng

# minimum-degree thresholds known to force perfect matchings (ell, k)
KNOWN_THRESHOLDS = {(1, 2): 0.5, (1, 3): 5 / 9, (2, 3): 0.5}


@dataclass
class EngineConfig:
    eps: float = 0.7              # vortex shrinks by eps**2 per level
    size_slack: float = 0.25      # accepted band (1 +- slack) * eps**2
    eta: float = 0.1              # nibble may miss an eta fraction
    gamma: float = 0.1            # partial matchings in the regular subgraph cover >= (1-gamma)
    regular_matchings: int = 8    # matchings in the extracted regular subgraph
    block_size: int = 12          # Q, blocks for the partial matchings
    nibble_c: float = 64.0
    nibble_frac: float = 0.05     # batch fraction of the greedy pass
    degree_threshold: float | None = None
    margin: float = 0.05
    final_floor: int = 18
    final_budget: int = 200_000
    block_budget: int = 20_000
    vortex_resamples: int = 50
    partition_retries: int = 10
    nibble_retries: int = 20
    cover_retries: int = 10
    pipeline_retries: int = 3
    strategy: str = "matching-removal"   # or "fractional-sampling"
    vortex_degree_frac: float = 0.3      # partite vortex: deg into next set >= frac * d * size
    partite_floor: int = 12              # partite vortex: final vertices per part

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if not 0 <= self.size_slack < 1:
            raise ValueError("size_slack must lie in [0, 1)")
        if not (0 < self.eta < 1 and 0 < self.gamma < 1):
            raise ValueError("eta and gamma must lie in (0, 1)")
        if self.regular_matchings < 1 or self.block_size < 1:
            raise ValueError("regular_matchings and block_size must be positive")
        if self.final_floor < 1:
            raise ValueError("final_floor must be positive")
        if self.strategy not in ("matching-removal", "fractional-sampling"):
            raise ValueError(f"unknown strategy {self.strategy!r}")

    @property
    def shrink(self) -> float:
        return self.eps ** 2

    def threshold(self, ell: int, k: int) -> float:
        if self.degree_threshold is not None:
            return self.degree_threshold
        if (ell, k) not in KNOWN_THRESHOLDS:
            raise ValueError(f"no default degree threshold for ell={ell}, k={k}; pass one")
        return KNOWN_THRESHOLDS[(ell, k)]

    def to_dict(self) -> dict:
        return asdict(self)


class GreedyStarvation(StageFailure):
    def __init__(self, vertex: int, state: dict):
        super().__init__("greedy", f"no available edge through vertex {vertex}", state)
        self.vertex = vertex


# ---------------------------------------------------------------------------
# vortex

@dataclass
class Vortex:
    sets: list[np.ndarray]
    shrink: float
    partite: bool = False
    resamples: int = 0

    @property
    def depth(self) -> int:
        return len(self.sets) - 1

    def sizes(self) -> list[int]:
        return [len(s) for s in self.sets]

    def level_of(self, n: int) -> np.ndarray:
        """Deepest level containing each vertex (-1 outside ``V_0``)."""
        lev = np.full(n, -1, dtype=np.int64)
        for i, s in enumerate(self.sets):
            lev[s] = i
        return lev


def _planned_sizes(n0: int, shrink: float, floor: int) -> int:
    levels, size = 0, float(n0)
    while size * shrink >= floor:
        size *= shrink
        levels += 1
    return levels


def _degree_ok(H: Hypergraph, mask: np.ndarray, threshold: float, rows: np.ndarray) -> bool:
    """Every vertex in ``rows`` has at least threshold*C(|mask|-1, k-1) edges into ``mask``."""
    if H.is_complete:
        return True
    size = int(mask.sum())
    need = threshold * math.comb(max(size - 1, 0), H.k - 1)
    deg = ell_degree_into(H, 1, mask)
    return bool((deg[rows] >= need).all())


def sample_vortex(H: Hypergraph, config: EngineConfig, rng: SeededRng,
                  vertices: np.ndarray | None = None, degree_threshold: float | None = None
                  ) -> Vortex:
    """Nested binomial subsets at rate eps**2, redrawn until the size band holds.

    When ``degree_threshold`` is given (1-degrees, as a fraction of
    C(|V_i|-1, k-1)), every vertex must also keep that many edges inside
    each set.  Levels stop once the next expected size would fall below the
    final floor.
    """
    V0 = np.arange(H.n, dtype=np.int64) if vertices is None else np.sort(np.asarray(vertices, dtype=np.int64))
    q = config.shrink
    levels = _planned_sizes(len(V0), q, config.final_floor)
    if levels == 0:
        return Vortex([V0], q)
    lo, hi = (1 - config.size_slack) * q, (1 + config.size_slack) * q
    for t in range(config.vortex_resamples + 1):
        gen = rng.child(t)
        sets = [V0]
        ok = True
        for i in range(levels):
            cur = sets[-1]
            nxt = cur[gen.random(len(cur)) < q]
            ratio = len(nxt) / len(cur)
            if not lo <= ratio <= hi or len(nxt) < config.final_floor and i == levels - 1:
                ok = False
                break
            if degree_threshold is not None:
                mask = np.zeros(H.n, dtype=bool)
                mask[nxt] = True
                if not _degree_ok(H, mask, degree_threshold, V0):
                    ok = False
                    break
            sets.append(nxt)
        if ok:
            return Vortex(sets, q, resamples=t)
    raise StageFailure("vortex", f"no acceptable vortex after {config.vortex_resamples} resamples")


def sample_partite_vortex(system: PartiteSystem, config: EngineConfig, rng: SeededRng) -> Vortex:
    """Balanced vortex: each level keeps exactly ceil(eps**2 * m) vertices per part.

    Every vertex of a level must keep at least ``vortex_degree_frac * d * m``
    neighbours in each other part of the next level.
    """
    r, n = system.r, system.n
    q = config.shrink
    sizes = [n]
    while math.ceil(q * sizes[-1]) >= config.partite_floor and math.ceil(q * sizes[-1]) < sizes[-1]:
        sizes.append(math.ceil(q * sizes[-1]))
    V0 = np.arange(r * n, dtype=np.int64)
    if len(sizes) == 1:
        return Vortex([V0], q, partite=True)
    adj = system.adjacency()
    for t in range(config.vortex_resamples + 1):
        gen = rng.child(t)
        local = [np.arange(n)] * r
        sets = [V0]
        ok = True
        for m in sizes[1:]:
            local = [np.sort(gen.permutation(cur)[:m]) for cur in local]
            nxt = np.concatenate([j * n + loc for j, loc in enumerate(local)])
            prev = sets[-1]
            for j in range(r):
                prev_j = prev[(prev >= j * n) & (prev < (j + 1) * n)]
                for k2 in range(r):
                    if k2 == j:
                        continue
                    tgt = k2 * n + local[k2]
                    deg = adj[np.ix_(prev_j, tgt)].sum(axis=1)
                    if deg.min() < config.vortex_degree_frac * system.density(j, k2) * m:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
            sets.append(nxt)
        if ok:
            return Vortex(sets, q, partite=True, resamples=t)
    raise StageFailure("vortex", f"no acceptable partite vortex after {config.vortex_resamples} resamples")


# ---------------------------------------------------------------------------
# regular subgraph from partial matchings

def _partial_matching(H: Hypergraph, alive: np.ndarray, verts: np.ndarray, Q: int,
                      ell: int, threshold: float | None, budget: int,
                      rng: SeededRng) -> list[int]:
    """Random Q-block partition; exact perfect matching inside every block that passes.

    Returns indices into ``H.edges``.
    """
    n, k, edges = H.n, H.k, H.edges
    perm = verts[rng.child(0).permutation(len(verts))]
    # full Q-blocks, then one shorter block trimmed to a multiple of k
    sizes = [Q] * (len(verts) // Q)
    tail = (len(verts) % Q) // k * k
    if tail:
        sizes.append(tail)
    nblocks = len(sizes)
    starts = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    block = np.full(n, -1, dtype=np.int64)
    block[perm[: starts[-1]]] = np.repeat(np.arange(nblocks), sizes)
    b = block[edges]
    inside = alive & (b[:, 0] >= 0) & (b == b[:, :1]).all(axis=1)
    cand = np.flatnonzero(inside)
    cand = cand[np.argsort(b[cand, 0], kind="stable")]
    bounds = np.searchsorted(b[cand, 0], np.arange(nblocks + 1))
    local = np.full(n, -1, dtype=np.int64)
    chosen: list[int] = []
    for j in range(nblocks):
        ids = cand[bounds[j]:bounds[j + 1]]
        if len(ids) == 0:
            continue
        members = perm[starts[j]:starts[j + 1]]
        q = len(members)
        local[members] = np.arange(q)
        Hb = Hypergraph(q, k, local[edges[ids]])
        if threshold is not None:
            deg, _ = min_ell_degree(Hb, ell)
            if deg < threshold * math.comb(q - ell, k - ell):
                continue
        try:
            M = exact_hypergraph_pm(Hb, budget, rng.child(1 + j))
        except BudgetExhausted:
            continue
        if M is None:
            continue
        rows = np.sort(members[np.array(M.edges, dtype=np.int64)], axis=1)
        chosen.extend(H.edge_index(rows).tolist())
    return chosen


def extract_regular_subgraph(H: Hypergraph, gamma: float, rng: SeededRng, *,
                             count: int = 8, Q: int = 12, ell: int = 1,
                             threshold: float | None = None,
                             vertices: np.ndarray | None = None,
                             budget: int = 20_000, partition_retries: int = 10) -> Hypergraph:
    """Union of ``count`` edge-disjoint partial matchings, each covering >= (1-gamma)|V|.

    Every matching comes from a random partition into Q-blocks with an exact
    perfect matching inside each block that passes the degree test; its
    edges are removed before the next round, so no degree exceeds ``count``.
    """
    verts = np.arange(H.n, dtype=np.int64) if vertices is None else np.asarray(vertices, dtype=np.int64)
    k = H.k
    if Q % k:
        raise ValueError("block size must be divisible by k")
    alive = np.ones(H.num_edges, dtype=bool)
    need = (1 - gamma) * len(verts)
    picked: list[int] = []
    for j in range(count):
        for t in range(partition_retries):
            got = _partial_matching(H, alive, verts, Q, ell, threshold, budget,
                                    rng.child(j).child(t))
            if len(got) * k >= need:
                break
        else:
            raise StageFailure("regularize", f"matching {j} covered fewer than {need:.0f} vertices",
                               {"extracted": j})
        alive[got] = False
        picked.extend(got)
    return H.subgraph(np.sort(np.array(picked, dtype=np.int64)))


# ---------------------------------------------------------------------------
# nibble

def greedy_min_degree_matching(edges: np.ndarray, n: int, rng: SeededRng,
                               frac: float = 0.05) -> np.ndarray:
    """Batched random greedy matching favouring edges of small total degree."""
    used = np.zeros(n, dtype=bool)
    chosen = []
    E = np.asarray(edges, dtype=np.int64)
    while len(E):
        deg = np.bincount(E.ravel(), minlength=n)
        key = deg[E].sum(axis=1) + rng.random(len(E))
        take = max(1, math.ceil(frac * len(E)))
        if take < len(E):
            idx = np.argpartition(key, take - 1)[:take]
        else:
            idx = np.arange(len(E))
        idx = idx[np.argsort(key[idx])]
        for row in E[idx].tolist():
            if not used[row].any():
                used[row] = True
                chosen.append(row)
        E = E[~used[E].any(axis=1)]
    return np.array(chosen, dtype=np.int64).reshape(-1, edges.shape[1] if len(edges) else 0)


@dataclass
class NibbleResult:
    matching: Matching
    coverage: float
    attempts: int
    rate: float


def nibble_matching(H: Hypergraph, gamma: float | None, eta: float, rng: SeededRng, *,
                    C: float = 64.0, vertices: np.ndarray | None = None,
                    max_retries: int = 20, frac: float = 0.05,
                    report: bool = False) -> Matching | NibbleResult:
    """Near-perfect spread matching of a near-regular hypergraph.

    Keep each edge with probability min(1, C/(gamma n^(k-1))), drop the edges
    at vertices whose sample degree exceeds C + C**0.75, then run the batched
    random greedy matching on what is left.  Retried until at least
    (1-eta) of ``vertices`` are covered.  ``gamma=None`` uses the measured
    edge density.
    """
    nv = H.n if vertices is None else len(vertices)
    k = H.k
    if gamma is None:
        gamma = H.num_edges / max(math.comb(nv, k), 1)
    if gamma <= 0:
        raise ValueError("empty host")
    rate = min(1.0, C / (gamma * nv ** (k - 1)))
    cap = C + C ** 0.75
    best = None
    for t in range(max_retries):
        r = rng.child(t)
        L = binomial_subgraph(H, rate, r.child(0))
        E = L.edges
        if len(E):
            deg = np.bincount(E.ravel(), minlength=H.n)
            E = E[(deg[E] <= cap).all(axis=1)]
        M = greedy_min_degree_matching(E, H.n, r.child(1), frac)
        cov = len(M) * k / nv if nv else 1.0
        if best is None or cov > best[1]:
            best = (M, cov)
        if cov >= 1 - eta:
            res = NibbleResult(Matching.of(M.tolist()), cov, t + 1, rate)
            return res if report else res.matching
    raise RetriesExhausted("nibble coverage", max_retries,
                           detail=f"best coverage {best[1]:.3f} < {1 - eta:.3f}")


# ---------------------------------------------------------------------------
# cover down

@dataclass
class CoverResult:
    matching: Matching
    nibble_edges: int
    greedy_edges: int
    spill: int
    attempts: int
    coverage: float


def _greedy_absorb(H: Hypergraph, incidence, leftovers: np.ndarray, avail_u: np.ndarray,
                   rng: SeededRng) -> list[tuple[int, ...]]:
    """For each leftover vertex pick a uniform edge through it with all others in ``avail_u``."""
    k = H.k
    out = []
    order = leftovers[rng.child(0).permutation(len(leftovers))]
    gen = rng.child(1)
    for v in order.tolist():
        if H.is_complete:
            pool = np.flatnonzero(avail_u)
            pool = pool[pool != v]
            if len(pool) < k - 1:
                raise GreedyStarvation(v, {"available": int(len(pool))})
            others = gen.choice(pool, size=k - 1, replace=False)
            e = tuple(sorted([v] + [int(x) for x in others]))
        else:
            ptr, idx = incidence
            cand = idx[ptr[v]:ptr[v + 1]]
            rows = H.edges[cand]
            ok = (avail_u[rows] | (rows == v)).all(axis=1)
            rows = rows[ok]
            if len(rows) == 0:
                raise GreedyStarvation(v, {"available": int(avail_u.sum())})
            e = tuple(int(x) for x in rows[gen.integers(len(rows))])
        avail_u[list(e)] = False
        out.append(e)
    return out


def cover_down(H: Hypergraph, W: np.ndarray, U: np.ndarray, config: EngineConfig, rng: SeededRng,
               *, ell: int = 1, threshold: float | None = None,
               system: PartiteSystem | None = None, incidence=None,
               report: bool = False) -> Matching | CoverResult:
    """Matching covering all of ``W \\ U`` and at most eps**2 |U| vertices of ``U``.

    ``H`` is the host (all edges are checked for membership); ``W`` is the
    current vertex set and ``U ⊆ W`` the protected next set.  Attempt ``t``
    runs on ``rng.child(t)``.
    """
    W = np.asarray(W, dtype=np.int64)
    U = np.asarray(U, dtype=np.int64)
    if len(U) == 0:
        raise ValueError("empty U: cover_down needs a nonempty next set")
    in_u = np.zeros(H.n, dtype=bool)
    in_u[U] = True
    rest = W[~in_u[W]]
    cap = config.shrink * len(U)
    if incidence is None and not H.is_complete:
        incidence = H.incidence()
    last = None
    for t in range(config.cover_retries):
        r = rng.child(t)
        try:
            if len(rest):
                tilde = _regularize(H, rest, config, r.child(0), ell, threshold, system)
                nib = nibble_matching(tilde, None, config.eta, r.child(1), C=config.nibble_c,
                                      vertices=rest, max_retries=config.nibble_retries,
                                      frac=config.nibble_frac, report=True)
                nib_edges = list(nib.matching.edges)
                coverage = nib.coverage
            else:
                nib_edges, coverage = [], 1.0
            covered = np.zeros(H.n, dtype=bool)
            for e in nib_edges:
                covered[list(e)] = True
            left = rest[~covered[rest]]
            avail = in_u.copy()
            greedy = _greedy_absorb(H, incidence, left, avail, r.child(2))
        except (StageFailure, RetriesExhausted) as exc:
            last = exc
            continue
        spill = len(greedy) * (H.k - 1)
        if spill > cap:
            last = StageFailure("cover_down", f"spill {spill} exceeds {cap:.1f}",
                                {"spill": spill, "U": len(U)})
            continue
        M = Matching.of(nib_edges + greedy)
        res = CoverResult(M, len(nib_edges), len(greedy), spill, t + 1, coverage)
        return res if report else M
    raise StageFailure("cover_down", f"{config.cover_retries} attempts failed: {last}",
                       {"U": len(U), "rest": len(rest)})


def _regularize(H, rest, config, rng, ell, threshold, system):
    if config.strategy == "fractional-sampling":
        if system is None:
            raise ValueError("fractional-sampling needs the partite system")
        n = system.n
        parts = [np.sort(rest[(rest >= j * n) & (rest < (j + 1) * n)]) - j * n
                 for j in range(system.r)]
        sub = system.restrict(parts)
        cl = sub.cliques()
        deg = np.bincount(cl.ravel(), minlength=sub.r * sub.n)
        if len(cl) == 0 or deg.min() == 0:
            raise StageFailure("regularize", "a leftover vertex lies in no clique")
        # small levels: the default target can exceed what the poorest vertex supports
        target = min(float(target_vertex_sum(sub)), 0.5 * float(deg.min()))
        try:
            omega = fractional_clique_matching(sub, "solver", tol=1e-8, max_iter=2000,
                                               target=target)
        except RuntimeError as exc:
            raise StageFailure("regularize", str(exc)) from exc
        picked = sample_clique_regularization(omega, rng)
        m = sub.n
        loc = picked.cliques - (np.arange(system.r) * m)[None, :]
        glob = np.stack([j * n + parts[j][loc[:, j]] for j in range(system.r)], axis=1)
        return Hypergraph(H.n, H.k, glob)
    sub = H.induced(rest)
    return extract_regular_subgraph(sub, config.gamma, rng, count=config.regular_matchings,
                                    Q=config.block_size, ell=ell, threshold=threshold,
                                    vertices=rest, budget=config.block_budget,
                                    partition_retries=config.partition_retries)


# ---------------------------------------------------------------------------
# pipeline

def _check_degree(H: Hypergraph, ell: int, need: float) -> None:
    deg, S = min_ell_degree(H, ell)
    if deg < need:
        raise ValueError(f"min {ell}-degree {deg} below required {need:.1f} (at {S})")


def _run_levels(H, vortex, config, rng, ell, threshold, system, trace):
    n = H.n
    covered = np.zeros(n, dtype=bool)
    edges: list[tuple[int, ...]] = []
    incidence = None if H.is_complete else H.incidence()
    sets = vortex.sets
    N = vortex.depth
    for i in range(N):
        t0 = time.perf_counter()
        nxt2 = np.zeros(n, dtype=bool)
        if i + 2 <= N:
            nxt2[sets[i + 2]] = True
        Vi = sets[i]
        W = Vi[~covered[Vi] & ~nxt2[Vi]]
        U = sets[i + 1][~nxt2[sets[i + 1]]]
        try:
            res = cover_down(H, W, U, config, rng.child(i), ell=ell, threshold=threshold,
                             system=system, incidence=incidence, report=True)
        except StageFailure as exc:
            exc.state.setdefault("level", i)
            raise
        for e in res.matching.edges:
            if covered[list(e)].any():
                raise AssertionError("cover_down reused a covered vertex")
            covered[list(e)] = True
        edges.extend(res.matching.edges)
        # level invariants: everything outside V_{i+1} covered, small spill, V_{i+2} untouched
        outside = np.ones(n, dtype=bool)
        outside[sets[i + 1]] = False
        if not covered[outside].all():
            raise AssertionError(f"level {i}: vertices outside V_{i + 1} left uncovered")
        spill = int(covered[sets[i + 1]].sum())
        if spill > 2 * config.shrink * len(sets[i + 1]):
            raise AssertionError(f"level {i}: spill {spill} above 2 eps^2 |V_{i + 1}|")
        if i + 2 <= N and covered[sets[i + 2]].any():
            raise AssertionError(f"level {i}: matching touches V_{i + 2}")
        if trace is not None:
            trace.append({"level": i, "V": len(Vi), "W": len(W), "U": len(U),
                          "nibble_edges": res.nibble_edges, "greedy_edges": res.greedy_edges,
                          "nibble_coverage": round(res.coverage, 4), "spill": spill,
                          "attempts": res.attempts,
                          "seconds": round(time.perf_counter() - t0, 4)})
    return covered, edges


def sample_spread_pm_dirac(H: Hypergraph, ell: int = 1, margin: float | None = None,
                           config: EngineConfig | None = None, rng: SeededRng | None = None,
                           trace: list | None = None) -> Matching:
    """Spread perfect matching of a hypergraph above a minimum ell-degree threshold.

    Raises ``ValueError`` when the degree precondition fails and
    :class:`StageFailure` (with the failing level) when every whole-run retry
    breaks down somewhere.
    """
    config = config or EngineConfig()
    rng = rng or SeededRng(0)
    k = H.k
    if H.n % k:
        raise ValueError("k must divide n")
    margin = config.margin if margin is None else margin
    thr = config.threshold(ell, k)
    _check_degree(H, ell, (thr + margin) * math.comb(H.n - ell, k - ell))
    vortex_thr = (thr + margin / 2) if ell == 1 else None
    last = None
    for attempt in range(config.pipeline_retries):
        r = rng.child(attempt)
        try:
            vortex = sample_vortex(H, config, r.child(0), degree_threshold=vortex_thr)
            if trace is not None:
                trace.append({"attempt": attempt, "vortex": vortex.sizes(),
                              "vortex_resamples": vortex.resamples})
            covered, edges = _run_levels(H, vortex, config, r.child(1), ell, thr, None, trace)
            final = _final(H, covered, config, r.child(2), trace)
            return Matching.of(edges + list(final.edges))
        except StageFailure as exc:
            last = exc
            if trace is not None:
                trace.append({"attempt": attempt, "failed": exc.stage, "state": _jsonable(exc.state)})
    raise last


def _final(H, covered, config, rng, trace):
    residual = np.flatnonzero(~covered)
    t0 = time.perf_counter()
    try:
        M = exact_hypergraph_pm(H, config.final_budget, rng, vertices=residual)
    except BudgetExhausted as exc:
        raise StageFailure("final", str(exc), {"residual": int(len(residual))}) from exc
    if M is None:
        raise StageFailure("final", "residual has no perfect matching",
                           {"residual": int(len(residual))})
    if trace is not None:
        trace.append({"level": "final", "residual": int(len(residual)),
                      "seconds": round(time.perf_counter() - t0, 4)})
    return M


def sample_spread_kr_factor_absorption(system: PartiteSystem, config: EngineConfig | None = None,
                                       rng: SeededRng | None = None,
                                       trace: list | None = None) -> Matching:
    """Partite mode: spread K_r-factor through a balanced vortex and clique sampling."""
    config = config or EngineConfig(strategy="fractional-sampling")
    rng = rng or SeededRng(0)
    H = system.clique_hypergraph()
    deg = H.degrees()
    if (deg == 0).any():
        raise ValueError(f"vertex {int(np.flatnonzero(deg == 0)[0])} lies in no clique")
    last = None
    for attempt in range(config.pipeline_retries):
        r = rng.child(attempt)
        try:
            vortex = sample_partite_vortex(system, config, r.child(0))
            if trace is not None:
                trace.append({"attempt": attempt, "vortex": vortex.sizes(),
                              "vortex_resamples": vortex.resamples})
            covered, edges = _run_levels(H, vortex, config, r.child(1), 1, None, system, trace)
            final = _final(H, covered, config, r.child(2), trace)
            return Matching.of(edges + list(final.edges))
        except StageFailure as exc:
            last = exc
            if trace is not None:
                trace.append({"attempt": attempt, "failed": exc.stage, "state": _jsonable(exc.state)})
    raise last


def _jsonable(d: dict) -> dict:
    return {k: (v if isinstance(v, (int, float, str, bool, type(None))) else str(v)) for k, v in d.items()}


def generate_dirac_host(n: int, k: int, p: float, min_frac: float, rng: SeededRng,
                        max_resamples: int = 100) -> Hypergraph:
    """Binomial subgraph of the complete k-graph with min 1-degree >= min_frac * C(n-1, k-1)."""
    K = Hypergraph.complete(n, k)
    need = min_frac * math.comb(n - 1, k - 1)
    for t in range(max_resamples + 1):
        G = binomial_subgraph(K, p, rng.child(t))
        if G.degrees().min() >= need:
            return G
    raise StageFailure("generate", f"no host with min degree {need:.0f} after {max_resamples} draws")

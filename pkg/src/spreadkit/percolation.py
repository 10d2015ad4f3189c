"""Containment probabilities of random subgraphs and threshold estimates.

Perfect matchings of k-uniform hypergraphs with ``k >= 3`` are decided by
default with a CDCL SAT solver (one variable per edge, exactly one chosen
edge at every vertex).  Near the 50% point these instances are hard for plain
backtracking, while clause learning settles them in about a second at
``n = 120``.  The hand-written exact search remains available as
``solver="search"``.

Every trial ``t`` at every edge probability uses the same stream
``rng.child(t)`` and keeps an edge when its uniform falls below ``p``.  The
random subgraphs are therefore nested in ``p``, and containment frequencies
are exactly monotone along a bisection.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from pysat.card import CardEnc, EncType
from pysat.solvers import Solver

from .estimator import cp_interval
from .exact import BudgetExhausted, exact_hypergraph_pm
from .hypergraph import BipartiteGraph, Hypergraph, binomial_subgraph, clique_complex
from .matching import has_perfect_matching_graph, hopcroft_karp
from .rng import SeededRng

SAT_SOLVER = "cadical195"
BUDGET = 1_000_000  # SAT conflicts, or search nodes with solver="search"
PAIRWISE_MAX = 12

CSV_COLUMNS = ["host", "n", "property", "p", "trials", "successes", "freq", "ci_lo", "ci_hi", "seed"]


class NonBracketing(ValueError):
    """The property fails even at ``p = 1``, so there is no threshold to find."""


# ---------------------------------------------------------------------------
# checkers

def _bipartite_pm(G: BipartiteGraph) -> bool:
    if G.na != G.nb:
        return False
    if G.na == 0:
        return True
    if G.deg_a().min() == 0 or G.deg_b().min() == 0:
        return False
    match_a, _ = hopcroft_karp(G.neighbors(), G.nb)
    return all(b != -1 for b in match_a)


def _greedy_cover(H: Hypergraph) -> bool:
    """First-fit over the canonical edge order; a cheap positive certificate on dense hosts."""
    used = np.zeros(H.n, dtype=bool)
    covered = 0
    for e in H.edges.tolist():
        if not used[e].any():
            used[e] = True
            covered += H.k
            if covered == H.n:
                return True
    return False


def sat_perfect_matching(H: Hypergraph, conflicts: int = BUDGET) -> bool:
    """Decide whether ``H`` has a perfect matching with a SAT solver.

    One variable per edge and an exactly-one constraint per vertex (pairwise
    at-most-one for small degrees, a sequential counter above PAIRWISE_MAX).
    Raises :class:`BudgetExhausted` when the solver gives up after
    ``conflicts`` conflicts.  The solver is deterministic, so verdicts replay.
    """
    if H.n % H.k:
        return False
    inc: list[list[int]] = [[] for _ in range(H.n)]
    for i, e in enumerate(H.edges.tolist(), start=1):
        for v in e:
            inc[v].append(i)
    top = H.num_edges
    with Solver(name=SAT_SOLVER) as s:
        for lits in inc:
            if not lits:
                return False
            s.add_clause(lits)
            if len(lits) <= PAIRWISE_MAX:
                for a in range(len(lits)):
                    for b in range(a + 1, len(lits)):
                        s.add_clause([-lits[a], -lits[b]])
            else:
                enc = CardEnc.atmost(lits, 1, top_id=top, encoding=EncType.seqcounter)
                top = max(top, enc.nv)
                s.append_formula(enc.clauses)
        s.conf_budget(conflicts)
        verdict = s.solve_limited()
    if verdict is None:
        raise BudgetExhausted(conflicts)
    return bool(verdict)


def _hyper_pm(H: Hypergraph, budget: int, solver: str) -> bool:
    if H.n % H.k:
        return False
    if H.n == 0:
        return True
    if H.num_edges == 0 or (H.degrees() == 0).any():
        return False
    if H.k == 2:
        return has_perfect_matching_graph(H)
    if _greedy_cover(H):
        return True
    if solver == "sat":
        return sat_perfect_matching(H, budget)
    return exact_hypergraph_pm(H, budget) is not None


def make_checker(prop: str | Callable, r: int | None = None, budget: int = BUDGET,
                 solver: str = "sat") -> Callable:
    """Exact checker for ``"pm"`` or ``"kr-factor"`` (with ``r``); callables pass through.

    ``budget`` counts SAT conflicts with ``solver="sat"`` and node expansions
    with ``solver="search"``.
    """
    if callable(prop):
        return prop
    if solver not in ("sat", "search"):
        raise ValueError(f"unknown solver {solver!r}")
    if prop == "pm":
        return lambda S: (_bipartite_pm(S) if isinstance(S, BipartiteGraph)
                          else _hyper_pm(S, budget, solver))
    if prop == "kr-factor":
        if r is None:
            raise ValueError("kr-factor needs r")

        def check(G: Hypergraph) -> bool:
            if G.n % r:
                return False
            deg = G.degrees()
            if G.n and (deg < r - 1).any():
                return False
            return _hyper_pm(clique_complex(G, r), budget, solver)
        return check
    raise ValueError(f"unknown property {prop!r}")


def random_subhost(host, p: float, rng: SeededRng):
    """Monotone-coupled binomial subgraph of a hypergraph or bipartite host."""
    if isinstance(host, BipartiteGraph):
        if p >= 1:
            return host
        return BipartiteGraph(host.adj & (rng.random(host.adj.shape) < p))
    if p >= 1:
        return host
    return binomial_subgraph(host, p, rng)


def describe(host) -> tuple[str, int]:
    if isinstance(host, BipartiteGraph):
        return f"bipartite({host.na},{host.nb})", host.na
    kind = "complete" if host.is_complete else "explicit"
    return f"{kind}(n={host.n},k={host.k})", host.n


# ---------------------------------------------------------------------------
# containment and thresholds

@dataclass
class Containment:
    p: float
    trials: int
    successes: int
    excluded: int
    freq: float
    ci_lo: float
    ci_hi: float
    seed: int

    def row(self, host: str, n: int, prop: str) -> dict:
        return {"host": host, "n": n, "property": prop, "p": self.p, "trials": self.trials,
                "successes": self.successes, "freq": self.freq, "ci_lo": self.ci_lo,
                "ci_hi": self.ci_hi, "seed": self.seed}


def containment_probability(host, checker, p: float, trials: int, rng: SeededRng,
                            r: int | None = None, budget: int = BUDGET,
                            confidence: float = 0.95, solver: str = "sat") -> Containment:
    """Frequency of the property over ``trials`` nested binomial subgraphs.

    Trials whose exact search runs out of budget are excluded from the
    frequency and counted in ``excluded``.
    """
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    check = make_checker(checker, r, budget, solver)
    hits = excluded = 0
    for t in range(trials):
        sub = random_subhost(host, p, rng.child(t))
        try:
            hits += bool(check(sub))
        except BudgetExhausted:
            excluded += 1
    valid = trials - excluded
    lo, hi = cp_interval(hits, valid, confidence) if valid else (0.0, 1.0)
    return Containment(float(p), valid, hits, excluded, hits / valid if valid else float("nan"),
                       lo, hi, rng.seed)


@dataclass
class ThresholdEstimate:
    host: str
    n: int
    property: str
    p_hat: float
    bracket: tuple[float, float]
    trials: int
    target: float
    normalizer: float | None
    evaluations: list[Containment] = field(default_factory=list)

    @property
    def normalized(self) -> float | None:
        return None if not self.normalizer else self.p_hat / self.normalizer

    def to_dict(self) -> dict:
        out = asdict(self)
        out["normalized"] = self.normalized
        return out


def estimate_threshold(host, checker, target: float = 0.5, trials: int = 200,
                       rng: SeededRng | None = None, *, r: int | None = None,
                       rel_width: float = 0.1, p_start: float | None = None,
                       normalizer: float | None = None, budget: int = BUDGET,
                       prop: str | None = None, solver: str = "sat") -> ThresholdEstimate:
    """Geometric bisection for the ``p`` where containment crosses ``target``.

    The bracket ``(lo, hi)`` always has ``freq(lo) < target <= freq(hi)`` and
    is shrunk until ``hi / lo <= 1 + rel_width``; ``p_hat`` is its geometric
    midpoint.  Raises :class:`NonBracketing` when ``freq(1) < target``.
    """
    rng = rng or SeededRng(0)
    check = make_checker(checker, r, budget, solver)
    evals: dict[float, Containment] = {}

    def f(p: float) -> float:
        if p not in evals:
            evals[p] = containment_probability(host, check, p, trials, rng, budget=budget)
        return evals[p].freq

    if not f(1.0) >= target:
        raise NonBracketing("property absent at p = 1")
    p = min(1.0, p_start if p_start else 0.5)
    lo, hi = None, 1.0
    if f(p) >= target:
        hi = p
        while True:
            p /= 2
            if p < 1e-12:
                raise NonBracketing("property present at every p tried")
            if f(p) >= target:
                hi = p
            else:
                lo = p
                break
    else:
        lo = p
        while True:
            p = min(1.0, 2 * p)
            if f(p) >= target:
                hi = p
                break
            lo = p
    while hi / lo > 1 + rel_width:
        mid = math.sqrt(lo * hi)
        if f(mid) >= target:
            hi = mid
        else:
            lo = mid
    name, n = describe(host)
    pname = prop or (checker if isinstance(checker, str) else getattr(checker, "__name__", "custom"))
    return ThresholdEstimate(name, n, str(pname), math.sqrt(lo * hi), (lo, hi), trials, target,
                             normalizer, [evals[k] for k in sorted(evals)])


# ---------------------------------------------------------------------------
# scaling

def pm_normalizer(n: int, k: int) -> float:
    """``log n / n^(k-1)``."""
    return math.log(n) / n ** (k - 1)


def factor_normalizer(n: int, r: int) -> float:
    """``(log n)^(2/(r(r-1))) n^(-2/r)``; equals ``log n / n`` at ``r = 2``."""
    return math.log(n) ** (2 / (r * (r - 1))) * n ** (-2 / r)


@dataclass
class ScalingRow:
    n: int
    p_hat: float
    lo: float
    hi: float
    normalizer: float
    ratio: float
    excluded: int


def scaling_experiment(family: Callable[[int], object], checker, ns: Sequence[int], trials: int,
                       rng: SeededRng, normalizer: Callable[[int], float], *, r: int | None = None,
                       budget: int = BUDGET, rel_width: float = 0.1,
                       p_start: Callable[[int], float] | None = None,
                       solver: str = "sat") -> list[ScalingRow]:
    """Threshold estimate for each ``n`` and its ratio to ``normalizer(n)``."""
    if list(ns) != sorted(ns):
        raise ValueError("n list must be ascending")
    rows = []
    for i, n in enumerate(ns):
        host = family(n)
        norm = normalizer(n)
        est = estimate_threshold(host, checker, 0.5, trials, rng.child(i), r=r, rel_width=rel_width,
                                 p_start=min(1.0, p_start(n) if p_start else norm),
                                 normalizer=norm, budget=budget, solver=solver)
        rows.append(ScalingRow(n, est.p_hat, est.bracket[0], est.bracket[1], norm,
                               est.p_hat / norm, sum(e.excluded for e in est.evaluations)))
    return rows


def drift(rows: Sequence[ScalingRow]) -> float:
    """Largest over smallest normalized ratio."""
    ratios = [row.ratio for row in rows]
    return max(ratios) / min(ratios)


# ---------------------------------------------------------------------------
# clique complex versus graph factors

@dataclass
class CouplingResult:
    n: int
    r: int
    p_hat: float
    q_hat: float
    a_aligned: float
    curve_pm: list[Containment]
    curve_factor: dict[float, list[Containment]]


def clique_coupling_comparison(G: Hypergraph, r: int, p_grid: Sequence[float], trials: int,
                               rng: SeededRng, a_grid: Sequence[float] = (), *,
                               budget: int = BUDGET, rel_width: float = 0.1) -> CouplingResult:
    """Perfect matchings of the random clique complex against K_r-factors of ``G(q)``.

    Curve A is the perfect-matching frequency in the ``p``-random subgraph of
    the r-clique complex; curve B (one per ``a``) is the K_r-factor frequency
    in ``G(q)`` with ``q = a p^(1/binom(r,2))``.  The aligned constant is
    ``q_hat / p_hat^(1/binom(r,2))`` from the two bisected 50% points.
    """
    if G.k != 2:
        raise ValueError("need a graph")
    e = math.comb(r, 2)
    K = clique_complex(G, r)
    curve_a = [containment_probability(K, "pm", p, trials, rng.child(0), budget=budget) for p in p_grid]
    curve_b = {}
    for j, a in enumerate(a_grid):
        curve_b[float(a)] = [containment_probability(G, "kr-factor", min(1.0, a * p ** (1 / e)), trials,
                                                     rng.child(1), r=r, budget=budget)
                             for p in p_grid]
    pa = estimate_threshold(K, "pm", 0.5, trials, rng.child(0), rel_width=rel_width, budget=budget)
    qb = estimate_threshold(G, "kr-factor", 0.5, trials, rng.child(1), r=r, rel_width=rel_width,
                            budget=budget)
    return CouplingResult(G.n, r, pa.p_hat, qb.p_hat, qb.p_hat / pa.p_hat ** (1 / e), curve_a, curve_b)


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    return float(np.polyfit(lx, ly, 1)[0])


def write_csv(rows: Sequence[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow(row)

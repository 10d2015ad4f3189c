"""Spread K_r-factors in super-regular r-partite systems.

Two routes live here.  The inductive sampler matches the last two parts with
the bipartite sampler, contracts the matching into a single part, rebuilds the
pair graphs towards it (the "gamma" graphs) and recurses.  The weighting code
builds a fractional clique matching with equal vertex sums, either exactly
through weight-shifting gadgets or numerically by proportional fitting.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .bipartite import DEFAULT_RETRIES, default_c, sample_spread_pm_bipartite
from .errors import RetriesExhausted
from .hypergraph import SCHEMA_VERSION, BipartiteGraph, Factor, Matching, check_schema
from .regularity import PartiteSystem, boost_to_super_regular, certify_super_regular
from .rng import SeededRng


# ---------------------------------------------------------------------------
# gamma graphs and the inductive sampler

def matching_permutation(M1: Matching, n: int) -> np.ndarray:
    """``sigma[a] = b`` for a perfect matching given in local indices."""
    sigma = np.full(n, -1, dtype=np.int64)
    seen = np.zeros(n, dtype=bool)
    for a, b in M1.edges:
        if not (0 <= a < n and 0 <= b < n) or sigma[a] != -1 or seen[b]:
            raise ValueError("not a matching between two parts of size n")
        sigma[a] = b
        seen[b] = True
    if (sigma < 0).any():
        raise ValueError("M1 is not perfect")
    return sigma


def build_gamma_graph(system: PartiteSystem, i: int, M1: Matching,
                      left: int | None = None, right: int | None = None) -> BipartiteGraph:
    """Matched pairs of ``(left, right)`` against part ``i``.

    Row ``a`` stands for the matched edge ``(a, sigma[a])``; it is adjacent to
    ``v`` in part ``i`` when ``v`` sees both endpoints.  ``left``/``right``
    default to the last two parts.
    """
    left = system.r - 2 if left is None else left
    right = system.r - 1 if right is None else right
    sigma = matching_permutation(M1, system.n)
    adj = system.block(left, i) & system.block(right, i)[sigma]
    return BipartiteGraph(adj)


def isolated_rows(G: BipartiteGraph) -> np.ndarray:
    return np.flatnonzero(G.deg_a() == 0)


@dataclass
class FactorParams:
    """Knobs for the inductive sampler; ``None`` means derived from the densities."""
    C: int | None = None
    max_retries: int = DEFAULT_RETRIES
    max_rounds: int = 20
    gamma_eps: float = 0.15
    gamma_delta_factor: float = 0.5
    boost: bool = True


def _min_density(system: PartiteSystem) -> float:
    return min(system.pair(i, j).adj.mean() for i in range(system.r) for j in range(i + 1, system.r))


def _certify_gamma(G: BipartiteGraph, params: FactorParams, rng: SeededRng):
    """Return a certified host for the next level, or None."""
    d = float(G.adj.mean())
    if d == 0 or G.deg_a().min() == 0 or G.deg_b().min() == 0:
        return None, "isolated"
    delta = params.gamma_delta_factor * d
    v = certify_super_regular(G, d=d, eps=params.gamma_eps, delta=delta, plus=True)
    if v.ok:
        return G, "ok"
    if not params.boost:
        return None, v.reason
    eps_b = min(params.gamma_eps, d / 10)
    try:
        H, rep = boost_to_super_regular(G, d, eps_b, delta, rng)
    except ValueError:
        return None, v.reason
    v2 = certify_super_regular(H, d=delta, eps=params.gamma_eps, delta=delta / 2, plus=True)
    return (H, "boosted") if v2.ok else (None, v2.reason)


def _one_round(system: PartiteSystem, params: FactorParams, rng: SeededRng,
               trace: list | None, depth: int) -> np.ndarray | None:
    r, n = system.r, system.n
    pair = system.pair(r - 2, r - 1)
    C = params.C or default_c(float(pair.adj.mean()))
    M1 = sample_spread_pm_bipartite(pair, C, rng.child(0), params.max_retries)
    sigma = matching_permutation(M1, n)
    if r == 2:
        return np.stack([np.arange(n), sigma + n], axis=1)
    blocks = {(a, b): system.block(a, b) for a in range(r - 2) for b in range(a + 1, r - 2)}
    for i in range(r - 2):
        G = build_gamma_graph(system, i, M1)
        host, status = _certify_gamma(G, params, rng.child(2 + i))
        if trace is not None:
            trace.append({"depth": depth, "part": i, "gamma_density": float(G.adj.mean()),
                          "status": status})
        if host is None:
            return None
        blocks[(i, r - 2)] = host.adj.T
    reduced = PartiteSystem(r - 1, n, blocks)
    sub = _sample(reduced, params, rng.child(1), trace, depth + 1)
    if sub is None:
        return None
    # lift: the contracted part's vertex a stands for (a, sigma[a])
    local = sub - (np.arange(r - 1, dtype=np.int64) * n)[None, :]
    out = np.concatenate([local, sigma[local[:, -1]][:, None]], axis=1)
    return out + (np.arange(r, dtype=np.int64) * n)[None, :]


def _sample(system, params, rng, trace, depth):
    for t in range(params.max_rounds):
        try:
            got = _one_round(system, params, rng.child(t), trace, depth)
        except RetriesExhausted:
            got = None
        if trace is not None:
            trace.append({"depth": depth, "round": t, "ok": got is not None})
        if got is not None:
            return got
    return None


def sample_spread_kr_factor(system: PartiteSystem, params: FactorParams | None = None,
                            rng: SeededRng | None = None, trace: list | None = None) -> Factor:
    """Spread perfect K_r-factor of a super-regular r-partite system.

    Round ``t`` at the top level runs on ``rng.child(t)`` and draws its
    matching of the last two parts from ``rng.child(t).child(0)`` exactly as
    :func:`sample_spread_pm_bipartite` would.
    """
    params = params or FactorParams()
    rng = rng or SeededRng(0)
    if system.r < 2:
        raise ValueError("need at least two parts")
    got = _sample(system, params, rng, trace, 0)
    if got is None:
        raise RetriesExhausted("K_r-factor round", params.max_rounds)
    return Factor.of(got.tolist())


# ---------------------------------------------------------------------------
# fractional clique matchings

@dataclass
class CliqueWeighting:
    """Weights on transversal cliques (rows of ``cliques``) and the target vertex sum."""
    r: int
    n: int
    cliques: np.ndarray
    weights: list
    target: Fraction | float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.cliques = np.asarray(self.cliques, dtype=np.int64).reshape(-1, self.r)
        if len(self.weights) != len(self.cliques):
            raise ValueError("one weight per clique")
        if any(w < 0 or w > 1 for w in self.weights):
            raise ValueError("weights must lie in [0, 1]")

    @property
    def exact(self) -> bool:
        return all(isinstance(w, (Fraction, int)) for w in self.weights)

    def vertex_sums(self) -> list:
        sums = [Fraction(0) if self.exact else 0.0 for _ in range(self.r * self.n)]
        for row, w in zip(self.cliques.tolist(), self.weights):
            for v in row:
                sums[v] += w
        return sums

    def max_deviation(self) -> float:
        return float(max(abs(s - self.target) for s in self.vertex_sums()))

    def to_dict(self) -> dict:
        def enc(x):
            x = Fraction(x) if self.exact else x
            return [x.numerator, x.denominator] if isinstance(x, Fraction) else float(x)
        return {"schema_version": SCHEMA_VERSION, "kind": "clique_weighting", "r": self.r,
                "n": self.n, "target": enc(self.target),
                "weights": {",".join(map(str, row)): enc(w)
                            for row, w in zip(self.cliques.tolist(), self.weights)}}

    @classmethod
    def from_dict(cls, obj: dict) -> "CliqueWeighting":
        check_schema(obj)

        def dec(x):
            return Fraction(int(x[0]), int(x[1])) if isinstance(x, list) else float(x)
        keys = list(obj["weights"])
        cliques = [[int(t) for t in k.split(",")] for k in keys]
        return cls(int(obj["r"]), int(obj["n"]), np.array(cliques, dtype=np.int64),
                   [dec(obj["weights"][k]) for k in keys], dec(obj["target"]))


class GadgetError(ValueError):
    """Gadget construction impossible (empty gadget set or uncovered vertex)."""


class _ExactAccumulator:
    """Sum of ``a/b * K`` terms over integer arrays with one shared denominator."""

    def __init__(self, shape):
        self.num = np.zeros(shape, dtype=object)
        self.num[...] = 0
        self.den = 1

    def add(self, K: np.ndarray, frac: Fraction) -> None:
        if frac == 0:
            return
        b = frac.denominator
        g = math.gcd(self.den, b)
        if b // g != 1:
            m = b // g
            self.num *= m
            self.den *= m
        self.num += K.astype(object) * (frac.numerator * (self.den // b))

    def value(self, idx) -> Fraction:
        return Fraction(int(self.num[idx]), self.den)


def _pair_density(system: PartiteSystem, i: int, j: int) -> Fraction:
    return Fraction(int(system.block(i, j).sum()), system.n ** 2)


def target_vertex_sum(system: PartiteSystem) -> Fraction:
    prod = Fraction(1)
    for i in range(system.r):
        for j in range(i + 1, system.r):
            prod *= _pair_density(system, i, j)
    return Fraction(system.n ** (system.r - 1), 2) * prod


def gadget_weights(system: PartiteSystem) -> tuple[np.ndarray, list[Fraction], Fraction]:
    """Raw gadget-corrected weights ``(cliques, weights, target)``, range unchecked."""
    if system.r != 3:
        raise ValueError("gadget-exact mode is limited to r = 3")
    n = system.n
    if n > 12:
        raise ValueError("gadget-exact mode is limited to n <= 12")
    B01, B02, B12 = system.block(0, 1), system.block(0, 2), system.block(1, 2)
    T = (B01[:, :, None] & B02[:, None, :] & B12[None, :, :]).astype(np.int64)
    m = int(T.sum())
    if m == 0:
        raise GadgetError("no transversal cliques")
    acc = _ExactAccumulator(T.shape)
    for part in range(3):
        # link[x] = pairs (y, z) of the other two parts that close a clique with x
        link = np.moveaxis(T, part, 0)
        deg = link.sum(axis=(1, 2))
        if (deg == 0).any():
            raise GadgetError(f"vertex {int(np.flatnonzero(deg == 0)[0])} of part {part} lies in no clique")
        for v1 in range(n):
            for v2 in range(n):
                if v1 == v2 or deg[v1] == deg[v2]:
                    continue
                P = link[v1][None] & link                      # (x, y1, y2)
                Q = link[v2][None] & link                      # (x, y3, y4)
                # valid partner tuples for each first half, by inclusion-exclusion
                cq = Q.sum(axis=(1, 2))[:, None, None] - Q.sum(axis=2)[:, :, None] \
                    - Q.sum(axis=1)[:, None, :] + Q
                cp = P.sum(axis=(1, 2))[:, None, None] - P.sum(axis=2)[:, :, None] \
                    - P.sum(axis=1)[:, None, :] + P
                W = P * cq
                V = Q * cp
                size = int(W.sum())
                if size == 0:
                    raise GadgetError(f"empty gadget set for part {part}, pair ({v1}, {v2})")
                c = Fraction(int(deg[v1] - deg[v2]), 2 * n * size)
                K = np.zeros((n, n, n), dtype=np.int64)
                K[v1] -= W.sum(axis=0)
                K += W
                K[v2] += V.sum(axis=0)
                K -= V
                acc.add(np.moveaxis(K, 0, part), c)
    tau = target_vertex_sum(system)
    scale = tau / Fraction(m, n)
    idx = np.argwhere(T)
    weights = [scale * (1 + acc.value(tuple(t))) for t in idx.tolist()]
    return idx + np.array([0, n, 2 * n]), weights, tau


def _gadget_exact(system: PartiteSystem) -> CliqueWeighting:
    cliques, weights, tau = gadget_weights(system)
    bad = sum(1 for w in weights if w < 0 or w > 1)
    if bad:
        raise GadgetError(f"{bad} gadget weights fall outside [0, 1]")
    return CliqueWeighting(3, system.n, cliques, weights, tau, {"mode": "gadget-exact"})


def _clique_incidence(system: PartiteSystem, target: float | None = None):
    cl = system.cliques()
    r, n = system.r, system.n
    if len(cl) == 0:
        raise ValueError("no transversal cliques")
    deg = np.bincount(cl.ravel(), minlength=r * n)
    if (deg == 0).any():
        raise ValueError(f"vertex {int(np.flatnonzero(deg == 0)[0])} lies in no clique")
    return cl, float(target_vertex_sum(system) if target is None else target)


def _vsums(cl: np.ndarray, w: np.ndarray, N: int) -> np.ndarray:
    return np.bincount(cl.ravel(), weights=np.repeat(w, cl.shape[1]), minlength=N)


def _ipf(system: PartiteSystem, tol: float, max_iter: int, target=None) -> CliqueWeighting:
    cl, tau = _clique_incidence(system, target)
    r, n = system.r, system.n
    w = np.full(len(cl), tau * n / len(cl))
    for it in range(max_iter):
        for i in range(r):
            s = np.bincount(cl[:, i], weights=w, minlength=r * n)
            w *= tau / s[cl[:, i]]
        if np.abs(_vsums(cl, w, r * n) - tau).max() <= tol * tau:
            break
    else:
        raise RuntimeError("proportional fitting did not converge")
    if w.max() > 1:
        raise RuntimeError(f"fitted weight {w.max():.3f} above 1")
    return CliqueWeighting(r, n, cl, w.tolist(), tau, {"mode": "solver", "method": "ipf",
                                                       "iterations": it + 1})


def _projection(system: PartiteSystem, tol: float, max_iter: int, target=None) -> CliqueWeighting:
    """Nearest point to the uniform weighting with equal vertex sums and weights in [0, 1]."""
    cl, tau = _clique_incidence(system, target)
    r, n = system.r, system.n
    N = r * n
    gram = np.zeros((N, N))
    for a in range(r):
        for b in range(r):
            np.add.at(gram, (cl[:, a], cl[:, b]), 1.0)
    pinv = np.linalg.pinv(gram)

    def affine(x):
        y = pinv @ (_vsums(cl, x, N) - tau)
        return x - y[cl].sum(axis=1)

    w = np.full(len(cl), tau * n / len(cl))
    p = np.zeros_like(w)
    q = np.zeros_like(w)
    for it in range(max_iter):
        y = affine(w + p)
        p = w + p - y
        w = np.clip(y + q, 0.0, 1.0)
        q = y + q - w
        if np.abs(_vsums(cl, w, N) - tau).max() <= tol * tau:
            break
    else:
        raise RuntimeError("alternating projections did not converge")
    return CliqueWeighting(r, n, cl, w.tolist(), tau, {"mode": "solver", "method": "projection",
                                                       "iterations": it + 1})


def fractional_clique_matching(system: PartiteSystem, mode: str = "solver",
                               tol: float = 1e-10, max_iter: int = 10_000,
                               method: str = "projection",
                               target: float | None = None) -> CliqueWeighting:
    """Clique weighting whose vertex sums all equal half the expected clique degree.

    ``gadget-exact`` starts from the uniform weighting and shifts weight
    with four-clique gadgets in exact rational arithmetic (r = 3, n <= 12).
    ``solver`` reaches the same vertex-sum contract numerically: by default
    the uniform weighting is projected onto equal sums within [0, 1]
    (Dykstra's alternating projections); ``method="ipf"`` uses iterative
    proportional fitting instead, which can overshoot 1 on irregular hosts.
    ``target`` overrides the common vertex sum (solver mode only).
    """
    if mode == "gadget-exact":
        return _gadget_exact(system)
    if mode == "solver":
        if method == "ipf":
            return _ipf(system, tol, max_iter, target)
        if method == "projection":
            return _projection(system, tol, max_iter, target)
        raise ValueError(f"unknown solver method {method!r}")
    raise ValueError(f"unknown mode {mode!r}")


@dataclass
class RegularizationSample:
    cliques: np.ndarray
    vertex_sums: np.ndarray
    max_deviation: float


def sample_clique_regularization(omega: CliqueWeighting, rng: SeededRng) -> RegularizationSample:
    """Keep each clique independently with probability equal to its weight."""
    w = np.array([float(x) for x in omega.weights])
    keep = rng.random(len(w)) < w
    chosen = omega.cliques[keep]
    sums = np.bincount(chosen.ravel(), minlength=omega.r * omega.n)
    dev = float(np.abs(sums - float(omega.target)).max()) if sums.size else float(omega.target)
    return RegularizationSample(chosen, sums, dev)

"""Monte Carlo estimates of spread and vertex-spread constants.

A sampler is any callable ``sampler(rng)`` returning one random structure.
For set samplers the structure is an iterable of hashable ground elements
(edges, cliques); for embedding samplers it is an integer array ``phi`` with
``phi[x]`` the image of ``x``.  Trial ``t`` always runs on ``rng.child(t)``,
so totals do not depend on how trials are scheduled.

Only sets of size one and two are tracked.  Larger sets have probabilities far
below what ``10^4`` trials can resolve.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable

import numpy as np
from scipy.stats import beta

from .errors import ExhaustedError, RetriesExhausted
from .rng import SeededRng

CI_METHOD = "clopper-pearson one-sided"


def cp_upper(k: int, n: int, confidence: float = 0.95) -> float:
    """One-sided Clopper-Pearson upper bound for ``k`` successes in ``n`` trials."""
    if n <= 0:
        return 1.0
    if k >= n:
        return 1.0
    return float(beta.ppf(confidence, k + 1, n - k))


def cp_lower(k: int, n: int, confidence: float = 0.95) -> float:
    if n <= 0 or k <= 0:
        return 0.0
    return float(beta.ppf(1 - confidence, k, n - k + 1))


def cp_interval(k: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    """Two-sided Clopper-Pearson interval at the given confidence."""
    tail = (1 + confidence) / 2
    return cp_lower(k, n, tail), cp_upper(k, n, tail)


@dataclass
class SetLevel:
    """Statistics for tracked sets of one size."""
    size: int
    count: int
    prob: float
    upper: float
    implied: float
    argmax: list = field(default_factory=list)


@dataclass
class SpreadEstimate:
    trials: int
    seed: int
    normalizer: float
    confidence: float
    levels: dict[int, SetLevel]
    failures: int = 0
    ci_method: str = CI_METHOD
    table: Callable[[], Iterable[tuple[str, int]]] | None = field(default=None, repr=False)

    def rows(self) -> Iterable[tuple[str, int]]:
        """``(set descriptor, count)`` for every tracked set that occurred."""
        return self.table() if self.table is not None else iter(())

    def level(self, s: int) -> SetLevel:
        return self.levels[s]

    @property
    def c1(self) -> float:
        return self.levels[1].implied

    def ci_width(self, s: int) -> float:
        lv = self.levels[s]
        return lv.upper - lv.prob

    def to_dict(self) -> dict:
        return {"trials": self.trials, "seed": self.seed, "normalizer": self.normalizer,
                "confidence": self.confidence, "failures": self.failures,
                "ci_method": self.ci_method,
                "levels": {str(s): asdict(lv) for s, lv in sorted(self.levels.items())}}

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=1, default=_plain)
            fh.write("\n")

    def write_csv(self, path) -> None:
        """One row per tracked set: descriptor, count, trials, p_hat, upper."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["set", "count", "trials", "p_hat", "upper"])
            for desc, k in self.rows():
                w.writerow([desc, k, self.trials, k / self.trials,
                            cp_upper(k, self.trials, self.confidence)])


def _plain(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x))


def _run(sampler: Callable, trials: int, rng: SeededRng, max_failures: int | None):
    if trials < 100:
        raise ValueError("need at least 100 trials")
    max_failures = trials if max_failures is None else max_failures
    fails = 0
    for t in range(trials):
        try:
            yield sampler(rng.child(t))
        except ExhaustedError:
            fails += 1
            if fails > max_failures:
                raise RetriesExhausted("spread estimation", t + 1, fails)
            yield None


def _desc(x) -> str:
    if isinstance(x, (tuple, list)):
        return "-".join(_desc(v) for v in x)
    return str(x)


def _merge(codes: np.ndarray, counts: np.ndarray, new: np.ndarray):
    if new.size == 0:
        return codes, counts
    u, c = np.unique(new, return_counts=True)
    allc = np.concatenate([codes, u])
    allk = np.concatenate([counts, c])
    uu, inv = np.unique(allc, return_inverse=True)
    return uu, np.bincount(inv, weights=allk).astype(np.int64)


def estimate_spread(sampler: Callable[[SeededRng], Iterable], trials: int, rng: SeededRng,
                    normalizer: float = 1.0, max_set_size: int = 2, confidence: float = 0.95,
                    max_failures: int | None = None, chunk: int = 5_000_000) -> SpreadEstimate:
    """Maximum empirical probability of single elements and of element pairs.

    ``implied`` is ``(max probability)^(1/s) * normalizer``.  Pair counts are
    kept sparsely (only pairs that ever co-occur).  Failed trials (sampler
    raising an exhaustion error) are skipped and counted; more than
    ``max_failures`` of them abort the run.
    """
    if max_set_size not in (1, 2):
        raise ValueError("only set sizes 1 and 2 are tracked")
    ids: dict = {}
    single = np.zeros(0, dtype=np.int64)
    pcodes = np.zeros(0, dtype=np.int64)
    pcounts = np.zeros(0, dtype=np.int64)
    pending: list[np.ndarray] = []
    pending_size = 0
    done = fails = 0
    for out in _run(sampler, trials, rng, max_failures):
        if out is None:
            fails += 1
            continue
        done += 1
        elems = np.array(sorted({ids.setdefault(e, len(ids)) for e in out}), dtype=np.int64)
        if single.size < len(ids):
            single = np.concatenate([single, np.zeros(len(ids) - single.size, dtype=np.int64)])
        single[elems] += 1
        if max_set_size == 2 and elems.size > 1:
            i, j = np.triu_indices(elems.size, 1)
            pending.append((elems[i] << 32) | elems[j])
            pending_size += i.size
            if pending_size >= chunk:
                pcodes, pcounts = _merge(pcodes, pcounts, np.concatenate(pending))
                pending, pending_size = [], 0
    if pending:
        pcodes, pcounts = _merge(pcodes, pcounts, np.concatenate(pending))
    if done == 0:
        raise RetriesExhausted("spread estimation", trials, fails)
    inv = {v: k for k, v in ids.items()}
    levels = {}
    top = int(np.argmax(single)) if single.size else -1
    k1 = int(single[top]) if top >= 0 else 0
    levels[1] = SetLevel(1, k1, k1 / done, cp_upper(k1, done, confidence),
                         (k1 / done) * normalizer, [inv[top]] if top >= 0 else [])
    if max_set_size == 2:
        if pcodes.size:
            j = int(np.argmax(pcounts))
            k2 = int(pcounts[j])
            a, b = int(pcodes[j] >> 32), int(pcodes[j] & 0xFFFFFFFF)
            arg = [inv[a], inv[b]]
        else:
            k2, arg = 0, []
        levels[2] = SetLevel(2, k2, k2 / done, cp_upper(k2, done, confidence),
                             math.sqrt(k2 / done) * normalizer, arg)

    def table():
        for i, k in enumerate(single.tolist()):
            yield _desc(inv[i]), int(k)
        for c, k in zip(pcodes.tolist(), pcounts.tolist()):
            yield _desc((inv[c >> 32], inv[c & 0xFFFFFFFF])), int(k)

    est = SpreadEstimate(done, rng.seed, float(normalizer), confidence, levels, fails, table=table)
    est.pair_counts = (pcodes, pcounts)
    est.single_counts = single
    est.elements = inv
    return est


def estimate_vertex_spread(sampler: Callable[[SeededRng], np.ndarray], trials: int, rng: SeededRng,
                           n_host: int | None = None, normalizer: float | None = None,
                           top: int = 20, confidence: float = 0.95,
                           max_failures: int | None = None) -> SpreadEstimate:
    """Maximum of ``P[phi(x) = y]`` over all pairs, plus pair statistics for the hottest ones.

    The pair level considers the ``top`` most frequent ``(x, y)`` assignments
    with distinct ``x`` and distinct ``y`` and reports the largest joint
    frequency ``P[phi(x1) = y1 and phi(x2) = y2]``.  The normalizer defaults
    to the host order.
    """
    samples = []
    fails = 0
    for out in _run(sampler, trials, rng, max_failures):
        if out is None:
            fails += 1
            continue
        samples.append(np.asarray(out, dtype=np.int64))
    if not samples:
        raise RetriesExhausted("vertex spread estimation", trials, fails)
    S = np.stack(samples)
    done, n_tree = S.shape
    n_host = int(S.max()) + 1 if n_host is None else n_host
    normalizer = float(n_host if normalizer is None else normalizer)
    counts = np.zeros((n_tree, n_host), dtype=np.int64)
    np.add.at(counts, (np.broadcast_to(np.arange(n_tree), S.shape), S), 1)
    flat = np.argsort(counts, axis=None, kind="stable")[::-1]
    x0, y0 = np.unravel_index(int(flat[0]), counts.shape)
    k1 = int(counts[x0, y0])
    levels = {1: SetLevel(1, k1, k1 / done, cp_upper(k1, done, confidence),
                          k1 / done * normalizer, [int(x0), int(y0)])}
    hot = []
    for f in flat[: max(top * 4, top)]:
        x, y = np.unravel_index(int(f), counts.shape)
        if counts[x, y] == 0:
            break
        hot.append((int(x), int(y)))
        if len(hot) == top:
            break
    best, arg = 0, []
    for i in range(len(hot)):
        for j in range(i + 1, len(hot)):
            (x1, y1), (x2, y2) = hot[i], hot[j]
            if x1 == x2 or y1 == y2:
                continue
            k = int(np.count_nonzero((S[:, x1] == y1) & (S[:, x2] == y2)))
            if k > best:
                best, arg = k, [[x1, y1], [x2, y2]]
    levels[2] = SetLevel(2, best, best / done, cp_upper(best, done, confidence),
                         math.sqrt(best / done) * normalizer, arg)
    def table():
        for x, y in zip(*np.nonzero(counts)):
            yield f"{x}->{y}", int(counts[x, y])

    est = SpreadEstimate(done, rng.seed, normalizer, confidence, levels, fails, table=table)
    est.counts = counts
    return est

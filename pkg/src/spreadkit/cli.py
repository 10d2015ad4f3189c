"""Command-line front end.

Every invocation resolves its configuration (flags over a flat ``key = value``
config file over defaults), runs one command under the master seed, writes its
artifacts into ``--out`` and appends a :class:`RunRecord` to the ledger in
``--ledger-dir`` (default ``$SPREADKIT_LEDGER_DIR`` or the working directory).

Exit codes: 0 success, 1 negative result, 2 usage, 3 budget or retry
exhaustion, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import tempfile
from pathlib import Path
from typing import Callable

import numpy as np

from . import percolation as perc
from .absorption import generate_dirac_host, sample_spread_kr_factor_absorption, sample_spread_pm_dirac
from .bipartite import (StarDemand, default_c, sample_spread_pm_bipartite, sample_spread_star_matching,
                        try_pm_once)
from .errors import BudgetExhausted, ExhaustedError
from .estimator import estimate_spread, estimate_vertex_spread
from .hypergraph import (BipartiteGraph, Factor, Hypergraph, Matching, complete_graph, is_bipartite_matching,
                         is_kr_factor, is_perfect_matching)
from .partite_factor import FactorParams, sample_spread_kr_factor
from .records import (RunRecord, append_record, file_sha256, host_from_dict, host_to_dict, now, plain,
                      read_config_file, read_json, read_records, write_json)
from .regularity import (PartiteSystem, RejectionCapExceeded, generate_four_layer, generate_super_regular_pair,
                         generate_super_regular_system)
from .rng import SeededRng
from .trees import (RootedTree, TreeConfig, check_embedding, embed_tree, embed_tree_dense, generate_tree,
                    random_dense_host, synthetic_decomposition)

OK, NEGATIVE, USAGE, EXHAUSTED, IO = 0, 1, 2, 3, 4

SAMPLERS = ("pm-bipartite", "pm-dirac", "kr-factor", "kr-factor-absorption", "tree", "tree-dense")
AUTO_HOST = {"pm-bipartite": "pair", "pm-dirac": "complete", "kr-factor": "system",
             "kr-factor-absorption": "system"}


class UsageError(ValueError):
    pass


def _ints(s) -> list[int]:
    if isinstance(s, (list, tuple)):
        return [int(x) for x in s]
    return [int(x) for x in str(s).split(",") if x.strip()]


def _floats(s) -> list[float]:
    if isinstance(s, (list, tuple)):
        return [float(x) for x in s]
    return [float(x) for x in str(s).split(",") if x.strip()]


# key: (default, type, help); choices are checked by the command itself
HOST_OPTS = {
    "host": ("auto", str, "host kind (auto picks the sampler's natural host)"),
    "host_file": ("", str, "host JSON (overrides --host)"),
    "n": (30, int, "order (per part for partite systems)"),
    "k": (3, int, "uniformity"),
    "r": (3, int, "clique size / number of parts"),
    "d": (0.5, float, "pair density"),
    "p": (0.5, float, "edge probability"),
    "min_frac": (0.9, float, "minimum degree fraction for Dirac hosts"),
    "delta": (3, int, "tree maximum degree"),
    "shape": ("random", str, "tree shape"),
}
SAMPLER_OPTS = {
    **HOST_OPTS,
    "c": (0, int, "neighbour draws C (0 = default for the density)"),
    "clusters": (2, int, "clusters of the synthetic tree decomposition"),
    "eps": (0.04, float, "tree pipeline epsilon"),
    "alpha": (0.2, float, "tree special-set fraction"),
}
OPTIONS: dict[str, dict] = {
    "generate": {**HOST_OPTS, "kind": ("complete", str, "complete|knn|dirac|kn|dirac-graph|pair|system|"
                                                        "four-layer|tree")},
    "sample": {**SAMPLER_OPTS, "sampler": ("pm-dirac", str, "|".join(SAMPLERS))},
    "verify": {"host_file": ("", str, "host JSON"), "structure_file": ("", str, "structure JSON"),
               "r": (3, int, "clique size for factors")},
    "estimate-spread": {**SAMPLER_OPTS, "sampler": ("pm-bipartite", str, "|".join(SAMPLERS)),
                        "trials": (1000, int, "samples"), "top": (20, int, "hot pairs for vertex spread")},
    "threshold": {"host": ("knn", str, "knn|complete|kn|dirac-graph"), "n": (128, int, "order"),
                  "k": (3, int, "uniformity of complete hosts"), "property": ("pm", str, "pm|kr-factor"),
                  "r": (3, int, "clique size"), "trials": (200, int, "trials per probability"),
                  "target": (0.5, float, "containment level"), "rel_width": (0.1, float, "bracket width"),
                  "min_frac": (0.55, float, "Dirac graph minimum degree fraction"),
                  "dirac_p": (0.7, float, "edge probability of the Dirac graph host"),
                  "budget": (1_000_000, int, "conflict / node budget per trial"),
                  "solver": ("sat", str, "sat|search")},
    "scaling": {"host": ("knn", str, "knn|complete|kn"), "ns": ("64,128,256", _ints, "orders"),
                "k": (3, int, "uniformity of complete hosts"), "property": ("pm", str, "pm|kr-factor"),
                "r": (3, int, "clique size"), "trials": (100, int, "trials per probability"),
                "rel_width": (0.1, float, "bracket width"), "budget": (1_000_000, int, "budget per trial"),
                "solver": ("sat", str, "sat|search")},
    "couple": {"n": (30, int, "order of K_n"), "r": (3, int, "clique size"),
               "trials": (100, int, "trials per point"), "p_grid": ("", _floats, "hyperedge probabilities"),
               "a_grid": ("1", _floats, "constants a in q = a p^(1/binom(r,2))"),
               "budget": (1_000_000, int, "budget per trial")},
    "calibrate": {"what": ("bip-c", str, "bip-c|star-d"), "n": (100, int, "part size"),
                  "d": (0.5, float, "pair density"), "grid": ("5,10,15,20,25,30", _ints, "values to sweep"),
                  "seeds": (50, int, "seeds per value"), "target": (0.75, float, "required success rate")},
    "replay": {"record": ("", str, "ledger or record JSON"), "index": (-1, int, "record index in the ledger")},
}


# ---------------------------------------------------------------------------
# configuration

def resolve_config(command: str, flags: dict, file_values: dict) -> dict:
    opts = OPTIONS[command]
    unknown = set(file_values) - set(opts) - {"seed"}
    if unknown:
        raise UsageError(f"unknown config keys for {command}: {', '.join(sorted(unknown))}")
    cfg = {}
    for key, (default, typ, _) in opts.items():
        value = default
        if key in file_values:
            value = file_values[key]
        if flags.get(key) is not None:
            value = flags[key]
        try:
            cfg[key] = typ(value)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value for {key}: {value!r}") from exc
    return cfg


# ---------------------------------------------------------------------------
# hosts and samplers

def _load_host(path: str):
    return host_from_dict(read_json(path))


def build_host(cfg: dict, rng: SeededRng, kind: str | None = None):
    """Host for a generate/sample run; randomness comes from ``rng``."""
    if cfg.get("host_file"):
        return _load_host(cfg["host_file"])
    kind = kind or cfg["host"]
    n = cfg["n"]
    if kind == "complete":
        return Hypergraph.complete(n, cfg["k"])
    if kind == "dirac":
        return generate_dirac_host(n, cfg["k"], cfg["p"], cfg["min_frac"], rng)
    if kind == "knn":
        return BipartiteGraph.complete(n, n)
    if kind == "kn":
        return complete_graph(n)
    if kind == "dirac-graph":
        return dirac_graph(n, cfg["p"], cfg["min_frac"], rng)
    if kind == "pair":
        return generate_super_regular_pair(n, cfg["d"], rng)[0]
    if kind == "system":
        return generate_super_regular_system(cfg["r"], n, cfg["d"], rng)
    if kind == "four-layer":
        return generate_four_layer(n, cfg["d"], rng)
    if kind == "tree":
        return generate_tree(n, cfg["delta"], cfg["shape"], rng)
    raise UsageError(f"unknown host kind {kind!r}")


def dirac_graph(n: int, p: float, min_frac: float, rng: SeededRng, max_resamples: int = 100) -> Hypergraph:
    """G(n, p) resampled until its minimum degree is at least ``min_frac * n``."""
    for t in range(max_resamples + 1):
        adj = random_dense_host(n, p, rng.child(t))
        if adj.sum(axis=1).min() >= min_frac * n:
            iu = np.argwhere(np.triu(adj, 1))
            return Hypergraph(n, 2, iu)
    raise RejectionCapExceeded(f"no G({n}, {p}) with minimum degree {min_frac}n")


class Sampler:
    """A host drawn once plus a seeded structure sampler on it."""

    def __init__(self, name: str, cfg: dict, rng: SeededRng):
        if name not in SAMPLERS:
            raise UsageError(f"unknown sampler {name!r}")
        self.name, self.cfg = name, cfg
        hrng = rng.child(0)
        self.tree = self.decomposition = None
        if name in AUTO_HOST:
            self.host = build_host(cfg, hrng, AUTO_HOST[name] if cfg["host"] == "auto" else None)
        elif name == "tree":
            self.tree = generate_tree(cfg["n"], cfg["delta"], cfg["shape"], hrng.child(0))
            self.host, self.decomposition = synthetic_decomposition(
                self.tree, cfg["clusters"], "random", hrng.child(1), d=cfg["d"], alpha=cfg["alpha"])
        else:
            self.tree = generate_tree(cfg["n"], cfg["delta"], cfg["shape"], hrng.child(0))
            self.host = random_dense_host(cfg["n"], cfg["p"], hrng.child(1))

    @property
    def normalizer(self) -> float:
        """Host-size scale at which the spread constant is reported."""
        n = self.cfg["n"]
        if self.name == "pm-dirac":
            return float(self.host.n) ** (self.host.k - 1)
        if self.name.startswith("kr-factor"):
            return float(self.host.n) ** (self.host.r - 1)
        return float(n)

    def draw(self, rng: SeededRng, trace: list | None = None):
        cfg, H = self.cfg, self.host
        if self.name == "pm-bipartite":
            return sample_spread_pm_bipartite(H, cfg["c"] or default_c(cfg["d"]), rng)
        if self.name == "pm-dirac":
            return sample_spread_pm_dirac(H, rng=rng, trace=trace)
        if self.name == "kr-factor":
            return sample_spread_kr_factor(H, FactorParams(C=cfg["c"] or None), rng, trace)
        if self.name == "kr-factor-absorption":
            return Factor.of(sample_spread_kr_factor_absorption(H, rng=rng, trace=trace).edges)
        if self.name == "tree":
            conf = TreeConfig(eps=cfg["eps"], alpha=cfg["alpha"])
            return embed_tree(self.tree, H, self.decomposition, conf, rng, trace).phi.copy()
        return embed_tree_dense(self.tree, H, rng, trace=trace).phi.copy()

    def elements(self, structure):
        if isinstance(structure, Matching):
            return structure.edges
        if isinstance(structure, Factor):
            return structure.cliques
        return structure

    def host_dict(self) -> dict:
        return host_to_dict(self.host)

    def structure_dict(self, structure) -> dict:
        if isinstance(structure, (Matching, Factor)):
            return structure.to_dict()
        return {"kind": "embedding", "tree": self.tree.to_dict(), "phi": [int(x) for x in structure]}


def verdict(host, structure: dict, r: int = 3) -> bool:
    kind = structure.get("kind")
    if kind == "matching":
        M = Matching.from_dict(structure)
        if isinstance(host, BipartiteGraph):
            return is_bipartite_matching(host, M, perfect=True)
        return is_perfect_matching(host, M)
    if kind == "factor":
        F = Factor.from_dict(structure)
        if isinstance(host, PartiteSystem):
            return is_kr_factor(host.graph(), F, host.r)
        return is_kr_factor(host, F, r)
    if kind == "embedding":
        T = RootedTree.from_dict(structure["tree"])
        adj = host if isinstance(host, np.ndarray) else host.adjacency_matrix()
        return check_embedding(T, adj, np.asarray(structure["phi"]))
    raise UsageError(f"cannot verify structure kind {kind!r}")


# ---------------------------------------------------------------------------
# commands; each returns (outcome, artifact names, exit code)

class Run:
    def __init__(self, cfg: dict, seed: int, out: Path, trace: list | None):
        self.cfg, self.seed, self.out, self.trace = cfg, seed, out, trace
        self.rng = SeededRng(seed)
        self.artifacts: list[str] = []

    def path(self, name: str) -> Path:
        self.artifacts.append(name)
        return self.out / name


def cmd_generate(run: Run):
    cfg = run.cfg
    host = build_host({**cfg, "host_file": ""}, run.rng, cfg["kind"])
    write_json(host_to_dict(host), run.path("host.json"))
    return {"kind": cfg["kind"], "host": repr(host)}, OK


def cmd_sample(run: Run):
    s = Sampler(run.cfg["sampler"], run.cfg, run.rng)
    if not run.cfg["host_file"]:
        write_json(s.host_dict(), run.path("host.json"))
    structure = s.draw(run.rng.child(1), run.trace)
    sd = s.structure_dict(structure)
    ok = verdict(s.host, sd)
    write_json({**sd, "sampler": s.name, "valid": ok}, run.path("structure.json"))
    return {"sampler": s.name, "size": len(s.elements(structure)),
            "verdict": "valid" if ok else "invalid"}, OK if ok else NEGATIVE


def cmd_verify(run: Run):
    cfg = run.cfg
    if not cfg["host_file"] or not cfg["structure_file"]:
        raise UsageError("verify needs --host-file and --structure-file")
    ok = verdict(_load_host(cfg["host_file"]), read_json(cfg["structure_file"]), cfg["r"])
    return {"verdict": "valid" if ok else "invalid"}, OK if ok else NEGATIVE


def cmd_estimate_spread(run: Run):
    cfg = run.cfg
    s = Sampler(cfg["sampler"], cfg, run.rng)
    if s.name.startswith("tree"):
        est = estimate_vertex_spread(lambda r: s.draw(r), cfg["trials"], run.rng.child(1),
                                     n_host=s.host.shape[0], top=cfg["top"])
    else:
        est = estimate_spread(lambda r: s.elements(s.draw(r)), cfg["trials"], run.rng.child(1),
                              normalizer=s.normalizer)
    est.write_csv(run.path("spread.csv"))
    est.write_json(run.path("spread.json"))
    summary = est.to_dict()
    return {"sampler": s.name, "c1": summary["levels"]["1"]["implied"],
            "c2": summary["levels"]["2"]["implied"], "failures": est.failures}, OK


def _threshold_host(cfg: dict, rng: SeededRng):
    host, n = cfg["host"], cfg["n"]
    if host == "knn":
        return BipartiteGraph.complete(n, n), perc.pm_normalizer(n, 2)
    if host == "complete":
        H = Hypergraph.complete(n, cfg["k"])
        return H, perc.pm_normalizer(n, cfg["k"])
    if host in ("kn", "dirac-graph"):
        G = complete_graph(n) if host == "kn" else dirac_graph(n, cfg["dirac_p"], cfg["min_frac"], rng)
        if cfg["property"] == "kr-factor":
            return G, perc.factor_normalizer(n, cfg["r"])
        return G, perc.pm_normalizer(n, 2)
    raise UsageError(f"unknown threshold host {host!r}")


def cmd_threshold(run: Run):
    cfg = run.cfg
    host, norm = _threshold_host(cfg, run.rng.child(0))
    est = perc.estimate_threshold(host, cfg["property"], cfg["target"], cfg["trials"], run.rng.child(1),
                                  r=cfg["r"], rel_width=cfg["rel_width"], p_start=min(1.0, norm),
                                  normalizer=norm, budget=cfg["budget"], solver=cfg["solver"])
    excluded = sum(e.excluded for e in est.evaluations)
    row = {"host": cfg["host"], "n": cfg["n"], "property": cfg["property"], "p_hat": est.p_hat,
           "lo": est.bracket[0], "hi": est.bracket[1], "trials": cfg["trials"], "normalizer": norm,
           "normalized": est.normalized, "excluded": excluded, "seed": run.seed}
    _write_rows(run.path("threshold.csv"), [row])
    perc.write_csv([e.row(est.host, est.n, est.property) for e in est.evaluations],
                   run.path("evaluations.csv"))
    return row, OK


def _family(cfg: dict) -> tuple[Callable[[int], object], Callable[[int], float]]:
    host, prop = cfg["host"], cfg["property"]
    if host == "knn":
        return (lambda n: BipartiteGraph.complete(n, n)), (lambda n: perc.pm_normalizer(n, 2))
    if host == "complete":
        k = cfg["k"]
        return (lambda n: Hypergraph.complete(n, k)), (lambda n: perc.pm_normalizer(n, k))
    if host == "kn":
        if prop == "kr-factor":
            r = cfg["r"]
            return complete_graph, (lambda n: perc.factor_normalizer(n, r))
        return complete_graph, (lambda n: perc.pm_normalizer(n, 2))
    raise UsageError(f"unknown scaling family {host!r}")


def cmd_scaling(run: Run):
    cfg = run.cfg
    family, norm = _family(cfg)
    rows = perc.scaling_experiment(family, cfg["property"], cfg["ns"], cfg["trials"], run.rng,
                                   norm, r=cfg["r"], budget=cfg["budget"], rel_width=cfg["rel_width"],
                                   solver=cfg["solver"])
    table = [{"n": x.n, "p_hat": x.p_hat, "lo": x.lo, "hi": x.hi, "normalizer": x.normalizer,
              "ratio": x.ratio, "excluded": x.excluded} for x in rows]
    _write_rows(run.path("scaling.csv"), table)
    return {"rows": table, "drift": perc.drift(rows)}, OK


def cmd_couple(run: Run):
    cfg = run.cfg
    n, r = cfg["n"], cfg["r"]
    grid = cfg["p_grid"] or [x * perc.pm_normalizer(n, r) for x in (1, 2, 4, 8)]
    res = perc.clique_coupling_comparison(complete_graph(n), r, grid, cfg["trials"], run.rng,
                                          cfg["a_grid"], budget=cfg["budget"])
    rows = [{"curve": "pm-clique-complex", "a": "", "p": c.p, "q": "", "freq": c.freq,
             "ci_lo": c.ci_lo, "ci_hi": c.ci_hi} for c in res.curve_pm]
    for a, curve in res.curve_factor.items():
        rows += [{"curve": "kr-factor", "a": a, "p": p, "q": c.p, "freq": c.freq, "ci_lo": c.ci_lo,
                  "ci_hi": c.ci_hi} for p, c in zip(grid, curve)]
    _write_rows(run.path("couple.csv"), rows)
    return {"n": n, "r": r, "p_hat": res.p_hat, "q_hat": res.q_hat, "a_aligned": res.a_aligned}, OK


def cmd_calibrate(run: Run):
    cfg = run.cfg
    n, d = cfg["n"], cfg["d"]
    rows = []
    for i, value in enumerate(cfg["grid"]):
        wins = 0
        for s in range(cfg["seeds"]):
            r = run.rng.child(s)
            G = generate_super_regular_pair(n, d, r.child(0))[0]
            if cfg["what"] == "bip-c":
                wins += try_pm_once(G, value, r.child(1).child(i)) is not None
            elif cfg["what"] == "star-d":
                demand = StarDemand(tuple([1] * (n // 2) + [0] * (n - n // 2)), 1)
                try:
                    sample_spread_star_matching(G, demand, value, r.child(1).child(i), max_retries=1)
                    wins += 1
                except ExhaustedError:
                    pass
            else:
                raise UsageError(f"unknown calibration target {cfg['what']!r}")
        rows.append({"value": value, "successes": wins, "seeds": cfg["seeds"], "rate": wins / cfg["seeds"]})
    _write_rows(run.path("calibrate.csv"), rows)
    good = [row["value"] for row in rows if row["rate"] >= cfg["target"]]
    chosen = min(good) if good else None
    return {"what": cfg["what"], "chosen": chosen, "rows": rows}, OK if good else NEGATIVE


def cmd_replay(run: Run):
    cfg = run.cfg
    if not cfg["record"]:
        raise UsageError("replay needs --record")
    records = read_records(cfg["record"])
    if not records:
        raise UsageError("no records found")
    rec = records[cfg["index"]]
    if not rec.verify_digest():
        return {"match": False, "reason": "config digest mismatch"}, NEGATIVE
    if rec.command == "replay":
        raise UsageError("cannot replay a replay")
    with tempfile.TemporaryDirectory() as tmp:
        inner = Run(rec.config, rec.seed, Path(tmp), None)
        outcome, code = COMMANDS[rec.command](inner)
        outcome = json.loads(json.dumps(outcome, sort_keys=True, default=plain))
        hashes = {name: file_sha256(Path(tmp) / name) for name in inner.artifacts}
    want = {a["name"]: a["sha256"] for a in rec.artifacts}
    same = outcome == rec.outcome and code == rec.exit_code and hashes == want
    return {"match": same, "command": rec.command, "config_digest": rec.config_digest}, OK if same else NEGATIVE


def _write_rows(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if not rows:
            return
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


COMMANDS: dict[str, Callable[[Run], tuple[dict, int]]] = {
    "generate": cmd_generate, "sample": cmd_sample, "verify": cmd_verify,
    "estimate-spread": cmd_estimate_spread, "threshold": cmd_threshold, "scaling": cmd_scaling,
    "couple": cmd_couple, "calibrate": cmd_calibrate, "replay": cmd_replay,
}


# ---------------------------------------------------------------------------
# entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spreadkit", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, opts in OPTIONS.items():
        p = sub.add_parser(name)
        if "sampler" in opts:
            p.add_argument("sampler", nargs="?", default=None, help=opts["sampler"][2])
        p.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
        p.add_argument("--config", default=None, help="flat key = value config file")
        p.add_argument("--out", default=".", help="directory for artifacts")
        p.add_argument("--ledger-dir", default=None, help="ledger directory")
        p.add_argument("--trace", default=None, help="write per-stage trace records (JSON lines)")
        for key, (_, typ, help_) in opts.items():
            if key == "sampler":
                continue
            p.add_argument("--" + key.replace("_", "-"), dest=key, default=None,
                           type=str if typ not in (int, float) else typ, help=help_)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    command = args.command
    started = now()
    trace: list | None = [] if args.trace else None
    try:
        file_values = read_config_file(args.config) if args.config else {}
        cfg = resolve_config(command, vars(args), file_values)
        seed = args.seed if args.seed is not None else int(file_values.get("seed", 0))
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
    except UsageError as exc:
        print(f"spreadkit: {exc}", file=sys.stderr)
        return USAGE
    except OSError as exc:
        print(f"spreadkit: {exc}", file=sys.stderr)
        return IO
    run = Run(cfg, seed, out, trace)
    try:
        outcome, code = COMMANDS[command](run)
    except perc.NonBracketing as exc:
        outcome, code = {"error": str(exc)}, NEGATIVE
    except (ExhaustedError, BudgetExhausted, RejectionCapExceeded) as exc:
        outcome, code = {"error": str(exc)}, EXHAUSTED
    except UsageError as exc:
        outcome, code = {"error": str(exc)}, USAGE
    except OSError as exc:
        outcome, code = {"error": str(exc)}, IO
    except ValueError as exc:
        outcome, code = {"error": str(exc)}, USAGE
    outcome = json.loads(json.dumps(outcome, sort_keys=True, default=plain))
    try:
        artifacts = [{"name": a, "path": str((out / a).resolve()), "sha256": file_sha256(out / a)}
                     for a in run.artifacts if (out / a).exists()]
        if trace is not None:
            with open(args.trace, "w", encoding="utf-8") as fh:
                for entry in trace:
                    fh.write(json.dumps(entry, sort_keys=True, default=plain) + "\n")
        record = RunRecord(command, cfg, seed, outcome, code, started, now(), artifacts)
        append_record(record, args.ledger_dir)
    except OSError as exc:
        print(f"spreadkit: {exc}", file=sys.stderr)
        return IO
    print(json.dumps(outcome, sort_keys=True))
    if code == USAGE and "error" in outcome:
        print(f"spreadkit: {outcome['error']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())

"""Run records, the JSON-lines ledger, config files and structure (de)serialization."""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .hypergraph import SCHEMA_VERSION, BipartiteGraph, Hypergraph, check_schema
from .regularity import PartiteSystem
from .trees import RootedTree

LEDGER_ENV = "SPREADKIT_LEDGER_DIR"
LEDGER_FILE = "runs.jsonl"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=plain)


def plain(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (set, frozenset)):
        return sorted(x)
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def digest(config: dict) -> str:
    """sha256 of the canonical JSON form of a resolved config."""
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


@dataclass
class RunRecord:
    command: str
    config: dict
    seed: int
    outcome: dict
    exit_code: int
    started: str
    finished: str
    artifacts: list[dict] = field(default_factory=list)
    config_digest: str = ""
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self):
        if not self.config_digest:
            self.config_digest = digest(self.config)

    def verify_digest(self) -> bool:
        return digest(self.config) == self.config_digest

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "RunRecord":
        check_schema(obj)
        fields = {k: obj[k] for k in ("command", "config", "seed", "outcome", "exit_code",
                                      "started", "finished")}
        return cls(**fields, artifacts=list(obj.get("artifacts", [])),
                   config_digest=obj.get("config_digest", ""),
                   schema_version=obj.get("schema_version", SCHEMA_VERSION))


def ledger_path(directory: str | os.PathLike | None = None) -> Path:
    base = directory or os.environ.get(LEDGER_ENV) or "."
    return Path(base) / LEDGER_FILE


def append_record(record: RunRecord, directory=None) -> Path:
    """Append one line to the ledger; the file is never rewritten."""
    path = ledger_path(directory)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(canonical_json(record.to_dict()) + "\n")
    return path


def read_records(path) -> list[RunRecord]:
    """Records from a ledger file or from a single JSON record."""
    text = Path(path).read_text(encoding="utf-8").strip()
    if not text:
        return []
    try:
        return [RunRecord.from_dict(json.loads(text))]
    except json.JSONDecodeError:
        return [RunRecord.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]


def read_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment; dashes in keys become underscores."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


# ---------------------------------------------------------------------------
# structures on disk

def write_json(obj: dict, path) -> None:
    """Schema-versioned, key-sorted JSON; equal objects give equal bytes."""
    obj = {"schema_version": SCHEMA_VERSION, **obj}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(obj, sort_keys=True, separators=(",", ":"), default=plain))
        fh.write("\n")


def read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    check_schema(obj)
    return obj


def host_to_dict(host) -> dict:
    if isinstance(host, Hypergraph):
        if host.is_complete:
            return {"kind": "hypergraph", "n": host.n, "k": host.k, "complete": True}
        return {"kind": "hypergraph", **host.to_dict()}
    if isinstance(host, BipartiteGraph):
        return {"kind": "bipartite", **host.to_dict()}
    if isinstance(host, PartiteSystem):
        return host.to_dict()
    if isinstance(host, RootedTree):
        return {"kind": "tree", **host.to_dict()}
    if isinstance(host, np.ndarray) and host.ndim == 2:
        iu = np.argwhere(np.triu(host, 1))
        return {"kind": "graph", "n": int(host.shape[0]), "edges": iu.tolist()}
    raise TypeError(f"cannot serialize {type(host).__name__}")


def host_from_dict(obj: dict):
    check_schema(obj)
    kind = obj.get("kind")
    if kind == "hypergraph":
        if obj.get("complete"):
            return Hypergraph.complete(int(obj["n"]), int(obj["k"]))
        return Hypergraph.from_dict(obj)
    if kind == "bipartite":
        return BipartiteGraph.from_dict(obj)
    if kind == "partite_system":
        return PartiteSystem.from_dict(obj)
    if kind == "tree":
        return RootedTree.from_dict(obj)
    if kind == "graph":
        n = int(obj["n"])
        adj = np.zeros((n, n), dtype=bool)
        for a, b in obj["edges"]:
            adj[a, b] = adj[b, a] = True
        return adj
    raise ValueError(f"unknown structure kind {kind!r}")

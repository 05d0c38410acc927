"""Survey tables, graph construction, and edge splits.

File formats:
  nodes file   - comma-delimited, header row, a PID column; empty cell = missing.
  schema file  - JSON mapping column name -> kind in {categorical, numeric, binary}.
                 Alternatively the nodes header may annotate kinds inline
                 as "column:kind", in which case no sidecar is needed.
  edges file   - comma-delimited with header src,dst,confidence where
                 confidence is "confident" or "uncertain".
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

VALID_KINDS = ("categorical", "numeric", "binary")
CONFIDENT = "confident"
UNCERTAIN = "uncertain"
PID_COLUMN = "PID"


class DataError(ValueError):
    """Raised when an input file violates the table contracts."""


class Edge(NamedTuple):
    src: str
    dst: str
    confidence: str


@dataclass(frozen=True)
class NodeTable:
    """Raw survey attributes per person, keyed by PID.

    Rows keep their original string cells ('' marks a missing value); the
    dense internal index of a PID is its row position.
    """

    pids: tuple[str, ...]
    columns: tuple[str, ...]
    kinds: dict[str, str]
    cells: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if len(set(self.pids)) != len(self.pids):
            raise DataError("duplicate PIDs in node table")
        object.__setattr__(self, "_index", {pid: i for i, pid in enumerate(self.pids)})

    @property
    def n(self) -> int:
        return len(self.pids)

    def index_of(self, pid: str) -> int:
        try:
            return self._index[pid]
        except KeyError:
            raise DataError(f"unknown PID {pid!r}") from None

    def has_pid(self, pid: str) -> bool:
        return pid in self._index

    def column_values(self, column: str) -> list[str]:
        j = self.columns.index(column)
        return [row[j] for row in self.cells]

    def missing_count(self) -> int:
        return sum(1 for row in self.cells for cell in row if cell == "")

    def row(self, i: int) -> dict[str, str]:
        return dict(zip(self.columns, self.cells[i]))


def _parse_schema(path: Path) -> dict[str, str]:
    try:
        schema = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"schema file {path} is not valid JSON: {exc}") from exc
    if not isinstance(schema, dict):
        raise DataError(f"schema file {path} must be a JSON object")
    return {str(k): str(v) for k, v in schema.items()}


def _validate_cell(column: str, kind: str, value: str, pid: str) -> None:
    if value == "":
        return
    if kind == "numeric":
        try:
            float(value)
        except ValueError:
            raise DataError(
                f"column {column!r} is declared numeric but PID {pid} has value {value!r}"
            ) from None
    elif kind == "binary":
        if value not in ("0", "1"):
            raise DataError(
                f"column {column!r} is declared binary but PID {pid} has value {value!r}"
            )


def load_nodes(path: str | Path, schema_path: str | Path | None = None) -> NodeTable:
    """Load a node table, taking column kinds from the schema sidecar or
    from inline "name:kind" header annotations."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"nodes file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"nodes file {path} is empty (header row required)") from None
        rows = list(reader)

    schema = _parse_schema(Path(schema_path)) if schema_path is not None else None
    columns: list[str] = []
    kinds: dict[str, str] = {}
    pid_col = None
    for j, raw in enumerate(header):
        name, sep, inline_kind = raw.partition(":")
        if name == PID_COLUMN:
            pid_col = j
            continue
        if schema is not None:
            if name not in schema:
                raise DataError(f"column {name!r} missing from schema sidecar")
            kind = schema[name]
        elif sep:
            kind = inline_kind
        else:
            raise DataError(f"column {raw!r} has no declared kind (no schema, no annotation)")
        if kind not in VALID_KINDS:
            raise DataError(f"unknown column kind {kind!r} for column {name!r}")
        columns.append(name)
        kinds[name] = kind
    if pid_col is None:
        raise DataError(f"nodes file {path} has no {PID_COLUMN} column")

    pids: list[str] = []
    seen: set[str] = set()
    cells: list[tuple[str, ...]] = []
    for line_no, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise DataError(f"nodes file {path} line {line_no}: expected {len(header)} cells")
        pid = row[pid_col]
        if pid == "":
            raise DataError(f"nodes file {path} line {line_no}: empty PID")
        if pid in seen:
            raise DataError(f"duplicate PID {pid}")
        seen.add(pid)
        pids.append(pid)
        cells.append(tuple(cell for j, cell in enumerate(row) if j != pid_col))

    table = NodeTable(tuple(pids), tuple(columns), kinds, tuple(cells))
    for j, column in enumerate(table.columns):
        kind = table.kinds[column]
        for pid, row in zip(table.pids, table.cells):
            _validate_cell(column, kind, row[j], pid)
    return table


@dataclass(frozen=True)
class EdgeTable:
    """Directed nomination edges with confidence labels."""

    edges: tuple[Edge, ...]

    def __post_init__(self):
        seen: set[Edge] = set()
        for e in self.edges:
            if e.src == e.dst:
                raise DataError(f"self-loop edge on PID {e.src}")
            if e.confidence not in (CONFIDENT, UNCERTAIN):
                raise DataError(f"invalid confidence {e.confidence!r} on edge {e.src}->{e.dst}")
            if e in seen:
                raise DataError(f"duplicate edge row {e.src}->{e.dst} ({e.confidence})")
            seen.add(e)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_confident(self) -> int:
        return sum(1 for e in self.edges if e.confidence == CONFIDENT)

    @property
    def n_uncertain(self) -> int:
        return sum(1 for e in self.edges if e.confidence == UNCERTAIN)

    def select(self, confidence: str) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if e.confidence == confidence)

    def undirected_pairs(self, nodes: NodeTable, confidence: str = CONFIDENT) -> list[tuple[int, int]]:
        """Deduplicated unordered index pairs for edges of one confidence class."""
        pairs = {
            tuple(sorted((nodes.index_of(e.src), nodes.index_of(e.dst))))
            for e in self.edges
            if e.confidence == confidence
        }
        return sorted(pairs)


def load_edges(path: str | Path, nodes: NodeTable) -> EdgeTable:
    path = Path(path)
    if not path.exists():
        raise DataError(f"edges file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"edges file {path} is empty (header row required)")
        required = {"src", "dst", "confidence"}
        if not required.issubset(reader.fieldnames):
            raise DataError(f"edges file {path} must have columns src,dst,confidence")
        edges = []
        for line_no, row in enumerate(reader, start=2):
            src, dst, conf = row["src"], row["dst"], row["confidence"]
            for endpoint in (src, dst):
                if not nodes.has_pid(endpoint):
                    raise DataError(
                        f"edges file {path} line {line_no}: PID {endpoint!r} not in node table"
                    )
            edges.append(Edge(src, dst, conf))
    return EdgeTable(tuple(edges))


def write_edges(path: str | Path, edges: Iterable[Edge]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["src", "dst", "confidence"])
        for e in edges:
            writer.writerow([e.src, e.dst, e.confidence])


@dataclass(frozen=True)
class Graph:
    """Symmetrized adjacency with self-loops over a fixed node count.

    Message arrays list every (receiver, sender) pair with sender in N(receiver),
    grouped contiguously by receiver (row_ptr gives CSR-style offsets), which is
    the layout the attention layers consume.
    """

    n: int
    neighbors: tuple[np.ndarray, ...]
    receivers: np.ndarray
    senders: np.ndarray
    row_ptr: np.ndarray
    undirected_edges: frozenset[tuple[int, int]]

    @property
    def n_messages(self) -> int:
        return int(self.receivers.shape[0])

    @property
    def n_undirected(self) -> int:
        return len(self.undirected_edges)

    def degree(self, i: int) -> int:
        """Neighborhood size including the self-loop."""
        return int(self.neighbors[i].shape[0])

    def has_edge(self, i: int, j: int) -> bool:
        if i == j:
            return False
        return (min(i, j), max(i, j)) in self.undirected_edges

    def neighbors_of(self, i: int, include_self: bool = True) -> np.ndarray:
        nbrs = self.neighbors[i]
        if include_self:
            return nbrs
        return nbrs[nbrs != i]


def graph_from_pairs(pairs: Iterable[tuple[int, int]], n: int) -> Graph:
    """Build the symmetrized self-looped graph over unordered index pairs."""
    if n < 1:
        raise DataError("graph needs at least one node")
    adj: list[set[int]] = [{i} for i in range(n)]
    undirected: set[tuple[int, int]] = set()
    for i, j in pairs:
        i, j = int(i), int(j)
        if i == j:
            raise DataError(f"self-loop pair ({i}, {j})")
        if not (0 <= i < n and 0 <= j < n):
            raise DataError(f"pair ({i}, {j}) outside [0, {n})")
        adj[i].add(j)
        adj[j].add(i)
        undirected.add((min(i, j), max(i, j)))
    neighbors = tuple(np.array(sorted(s), dtype=np.int64) for s in adj)
    degrees = np.array([len(s) for s in adj], dtype=np.int64)
    row_ptr = np.concatenate([[0], np.cumsum(degrees)])
    receivers = np.repeat(np.arange(n, dtype=np.int64), degrees)
    senders = np.concatenate(neighbors)
    return Graph(
        n=n,
        neighbors=neighbors,
        receivers=receivers,
        senders=senders,
        row_ptr=row_ptr,
        undirected_edges=frozenset(undirected),
    )


def build_graph(edges: EdgeTable, nodes: NodeTable, include: str = CONFIDENT) -> Graph:
    """Graph over the selected confidence class ("confident", "uncertain" or "all")."""
    if include == "all":
        selected = edges.edges
    elif include in (CONFIDENT, UNCERTAIN):
        selected = edges.select(include)
    else:
        raise DataError(f"invalid confidence filter {include!r}")
    pairs = {
        (min(a, b), max(a, b))
        for a, b in ((nodes.index_of(e.src), nodes.index_of(e.dst)) for e in selected)
    }
    return graph_from_pairs(sorted(pairs), nodes.n)


@dataclass(frozen=True)
class EdgeSplit:
    """Disjoint train/validation/test partition of unordered confident pairs."""

    train: tuple[tuple[int, int], ...]
    validation: tuple[tuple[int, int], ...]
    test: tuple[tuple[int, int], ...]
    seed: int

    def all_pairs(self) -> set[tuple[int, int]]:
        return set(self.train) | set(self.validation) | set(self.test)


def _partition_sizes(n: int, ratios: tuple[float, float, float]) -> list[int]:
    """Largest-remainder apportionment, exact partition, each within +-1 of n*r."""
    raw = [n * r for r in ratios]
    base = [int(np.floor(x)) for x in raw]
    shortfall = n - sum(base)
    remainders = sorted(range(len(ratios)), key=lambda i: (-(raw[i] - base[i]), i))
    for i in remainders[:shortfall]:
        base[i] += 1
    return base


def split_edges(
    pairs: Iterable[tuple[int, int]],
    ratios: tuple[float, float, float] = (0.6, 0.2, 0.2),
    seed: int = 0,
) -> EdgeSplit:
    """Seeded random partition of confident pairs into train/validation/test."""
    normalized = sorted({(min(i, j), max(i, j)) for i, j in pairs})
    if any(i == j for i, j in normalized):
        raise DataError("self-loop pair in edge split input")
    if len(normalized) < 5:
        raise DataError(f"need at least 5 edges to split, got {len(normalized)}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise DataError(f"split ratios must sum to 1, got {ratios}")
    rng = np.random.Generator(np.random.PCG64(seed))
    order = rng.permutation(len(normalized))
    shuffled = [normalized[k] for k in order]
    n_train, n_val, n_test = _partition_sizes(len(shuffled), tuple(ratios))
    train = tuple(shuffled[:n_train])
    validation = tuple(shuffled[n_train : n_train + n_val])
    test = tuple(shuffled[n_train + n_val :])
    assert len(test) == n_test
    return EdgeSplit(train=train, validation=validation, test=test, seed=seed)


def sample_non_edges(
    n: int,
    count: int,
    known_pairs: set[tuple[int, int]],
    rng: np.random.Generator,
    max_tries: int = 200,
) -> list[tuple[int, int]]:
    """Sample `count` unordered node pairs absent from known_pairs, uniformly
    with replacement. Raises DataError when the graph is too dense to sample."""
    if count == 0:
        return []
    if n < 2:
        raise DataError("need at least two nodes to sample non-edges")
    out: list[tuple[int, int]] = []
    for _ in range(max_tries):
        need = count - len(out)
        cand = rng.integers(0, n, size=(max(need * 2, 16), 2))
        for i, j in cand:
            if i == j:
                continue
            pair = (min(int(i), int(j)), max(int(i), int(j)))
            if pair in known_pairs:
                continue
            out.append(pair)
            if len(out) == count:
                return out
    raise DataError("graph too dense: failed to sample enough non-edges")

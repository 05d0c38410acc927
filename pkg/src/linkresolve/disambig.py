"""Pair disambiguation and link-existence decisions over trained embeddings,
plus threshold calibration, ambiguity simulation, and batch edge resolution.

Case files are line-delimited JSON, one case per line, referencing PIDs;
in memory all cases use dense node indices. Resolution logs are likewise
JSONL and are consumed by the review service and the report generator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .data import DataError, Graph, NodeTable, sample_non_edges
from .validation import as_float_matrix

PAIR = "pair"
EXISTENCE = "existence"
DEFAULT_MARGIN_EPSILON = 1e-6


@dataclass(frozen=True)
class AmbiguityCase:
    """One reported-link ambiguity: choose between two candidate alters, or
    decide whether a single reported link exists."""

    case_id: str
    kind: str  # pair | existence
    u: int
    v1: int | None = None
    v2: int | None = None
    v: int | None = None
    truth: int | bool | None = None  # pair: true alter index; existence: bool
    provenance: str = "real"  # real | simulated | planted

    def __post_init__(self):
        if self.kind == PAIR:
            if self.v1 is None or self.v2 is None or self.v1 == self.v2:
                raise DataError(f"case {self.case_id}: pair case needs two distinct candidates")
            if self.u in (self.v1, self.v2):
                raise DataError(f"case {self.case_id}: source equals a candidate")
        elif self.kind == EXISTENCE:
            if self.v is None or self.v == self.u:
                raise DataError(f"case {self.case_id}: existence case needs v != u")
        else:
            raise DataError(f"case {self.case_id}: unknown kind {self.kind!r}")

    def to_record(self, nodes: NodeTable, include_truth: bool = False) -> dict:
        rec: dict = {"case_id": self.case_id, "kind": self.kind, "u": nodes.pids[self.u]}
        if self.kind == PAIR:
            rec["candidates"] = [nodes.pids[self.v1], nodes.pids[self.v2]]
        else:
            rec["v"] = nodes.pids[self.v]
        rec["provenance"] = self.provenance
        if include_truth and self.truth is not None:
            rec["truth"] = nodes.pids[self.truth] if self.kind == PAIR else bool(self.truth)
        return rec


@dataclass(frozen=True)
class Threshold:
    tau: float
    f1: float  # calibration objective value on the validation cases
    n_validation: int

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("distance threshold must be non-negative")


@dataclass(frozen=True)
class Resolution:
    """Model decision for one case, with the margin used for review ordering."""

    case_id: str
    kind: str
    chosen: int | None  # pair cases: index of the chosen candidate
    exists: bool | None  # existence cases: verdict
    edge: tuple[int, int] | None  # accepted link, if any
    distances: tuple[float, ...]
    margin: float
    low_confidence: bool

    def to_record(self, nodes: NodeTable) -> dict:
        rec = {
            "case_id": self.case_id,
            "kind": self.kind,
            "distances": [float(d) for d in self.distances],
            "margin": float(self.margin),
            "low_confidence": self.low_confidence,
        }
        if self.kind == PAIR:
            rec["decision"] = nodes.pids[self.chosen]
        else:
            rec["decision"] = "exists" if self.exists else "absent"
        if self.edge is not None:
            rec["edge"] = [nodes.pids[self.edge[0]], nodes.pids[self.edge[1]]]
        return rec


def embedding_distance(z_u, z_v, metric: str = "euclidean") -> float:
    z_u = np.asarray(z_u, dtype=np.float64)
    z_v = np.asarray(z_v, dtype=np.float64)
    if metric == "euclidean":
        return float(np.linalg.norm(z_u - z_v))
    if metric == "cosine":
        nu, nv = np.linalg.norm(z_u), np.linalg.norm(z_v)
        if nu == 0 or nv == 0:
            return 1.0
        return float(1.0 - np.dot(z_u, z_v) / (nu * nv))
    raise ValueError(f"unknown distance metric {metric!r}")


def resolve_pair(
    case: AmbiguityCase,
    embeddings: np.ndarray,
    margin_epsilon: float = DEFAULT_MARGIN_EPSILON,
    metric: str = "euclidean",
) -> Resolution:
    """Choose the candidate with the smaller embedding distance to the source.
    Exact ties go to the lower-index candidate and are flagged low-confidence."""
    if case.kind != PAIR:
        raise DataError(f"case {case.case_id} is not a pair case")
    Z = as_float_matrix(embeddings, "embeddings")
    d1 = embedding_distance(Z[case.u], Z[case.v1], metric)
    d2 = embedding_distance(Z[case.u], Z[case.v2], metric)
    margin = abs(d1 - d2)
    if d1 == d2:
        chosen = min(case.v1, case.v2)
        low = True
    else:
        chosen = case.v1 if d1 < d2 else case.v2
        low = margin < margin_epsilon
    return Resolution(
        case_id=case.case_id,
        kind=PAIR,
        chosen=chosen,
        exists=None,
        edge=(case.u, chosen),
        distances=(d1, d2),
        margin=margin,
        low_confidence=low,
    )


def calibrate_threshold(
    distances: Sequence[float], labels: Sequence[int], margin_epsilon: float = DEFAULT_MARGIN_EPSILON
) -> Threshold:
    """Pick the cutoff maximizing F1 of "exists iff distance < tau" over the
    midpoints of sorted distinct validation distances (plus an all-exist cutoff
    above the maximum); ties prefer the larger cutoff, i.e. higher recall."""
    d = np.asarray(distances, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if d.shape != y.shape or d.ndim != 1 or len(d) == 0:
        raise DataError("calibration needs matching non-empty distances and labels")
    if y.min() == y.max():
        raise DataError("calibration requires both positive and negative validation cases")
    distinct = np.unique(d)
    candidates = [(a + b) / 2.0 for a, b in zip(distinct, distinct[1:])]
    candidates.append(float(distinct[-1]) * 1.01 + 1e-9)  # classify everything as existing
    best_tau, best_f1 = None, -1.0
    n_pos = int(y.sum())
    for tau in candidates:
        preds = d < tau
        tp = int(np.sum(preds & (y == 1)))
        fp = int(np.sum(preds & (y == 0)))
        fn = n_pos - tp
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        if f1 > best_f1 or (f1 == best_f1 and tau > best_tau):
            best_tau, best_f1 = tau, f1
    return Threshold(tau=float(best_tau), f1=float(best_f1), n_validation=len(d))


def link_exists(
    case: AmbiguityCase,
    embeddings: np.ndarray,
    threshold: Threshold,
    margin_epsilon: float = DEFAULT_MARGIN_EPSILON,
    metric: str = "euclidean",
) -> Resolution:
    """The link exists iff the embedding distance is strictly below the cutoff."""
    if case.kind != EXISTENCE:
        raise DataError(f"case {case.case_id} is not an existence case")
    Z = as_float_matrix(embeddings, "embeddings")
    d = embedding_distance(Z[case.u], Z[case.v], metric)
    exists = d < threshold.tau
    margin = abs(d - threshold.tau)
    return Resolution(
        case_id=case.case_id,
        kind=EXISTENCE,
        chosen=None,
        exists=exists,
        edge=(case.u, case.v) if exists else None,
        distances=(d,),
        margin=margin,
        low_confidence=margin < margin_epsilon,
    )


def resolve_case(
    case: AmbiguityCase,
    embeddings: np.ndarray,
    threshold: Threshold | None,
    margin_epsilon: float = DEFAULT_MARGIN_EPSILON,
    metric: str = "euclidean",
) -> Resolution:
    if case.kind == PAIR:
        return resolve_pair(case, embeddings, margin_epsilon, metric)
    if threshold is None:
        raise DataError("existence cases need a calibrated threshold")
    return link_exists(case, embeddings, threshold, margin_epsilon, metric)


# ---------------------------------------------------------------------------
# Ambiguity simulation
# ---------------------------------------------------------------------------


def simulate_pair_cases(
    test_pairs: Sequence[tuple[int, int]],
    known_pairs: set[tuple[int, int]],
    n_nodes: int,
    count: int,
    seed: int = 0,
    max_tries: int = 200,
) -> list[AmbiguityCase]:
    """Sample cases (with replacement): (u, v1) from the test split and a decoy
    v2 such that (u, v2) is absent from the entire known edge set. Candidate
    order is shuffled; the truth records the real alter."""
    if count < 0:
        raise DataError("case count must be non-negative")
    if count and not test_pairs:
        raise DataError("test split is empty")
    rng = np.random.Generator(np.random.PCG64(seed))
    cases: list[AmbiguityCase] = []
    for k in range(count):
        for attempt in range(max_tries):
            i, j = test_pairs[int(rng.integers(0, len(test_pairs)))]
            u, v1 = (i, j) if rng.random() < 0.5 else (j, i)
            v2 = int(rng.integers(0, n_nodes))
            pair = (min(u, v2), max(u, v2))
            if v2 in (u, v1) or pair in known_pairs:
                continue
            first = rng.random() < 0.5
            a, b = (v1, v2) if first else (v2, v1)
            cases.append(
                AmbiguityCase(
                    case_id=f"sim-pair-{k:04d}",
                    kind=PAIR,
                    u=u,
                    v1=a,
                    v2=b,
                    truth=v1,
                    provenance="simulated",
                )
            )
            break
        else:
            raise DataError(f"could not find a decoy after {max_tries} tries (graph too dense)")
    return cases


def simulate_link_cases(
    test_pairs: Sequence[tuple[int, int]],
    known_pairs: set[tuple[int, int]],
    n_nodes: int,
    seed: int = 0,
) -> list[AmbiguityCase]:
    """Balanced existence cases: every test edge as a positive plus an equal
    number of uniformly sampled non-edges as negatives."""
    if not test_pairs:
        raise DataError("test split is empty")
    rng = np.random.Generator(np.random.PCG64(seed))
    cases = [
        AmbiguityCase(
            case_id=f"sim-link-pos-{k:04d}",
            kind=EXISTENCE,
            u=i,
            v=j,
            truth=True,
            provenance="simulated",
        )
        for k, (i, j) in enumerate(test_pairs)
    ]
    negatives = sample_non_edges(n_nodes, len(test_pairs), known_pairs, rng)
    cases.extend(
        AmbiguityCase(
            case_id=f"sim-link-neg-{k:04d}",
            kind=EXISTENCE,
            u=i,
            v=j,
            truth=False,
            provenance="simulated",
        )
        for k, (i, j) in enumerate(negatives)
    )
    return cases


# ---------------------------------------------------------------------------
# Batch resolution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResolveOutcome:
    confident_pairs: tuple[tuple[int, int], ...]  # input pairs plus accepted links
    resolutions: tuple[Resolution, ...]
    accepted: tuple[tuple[int, int], ...]

    @property
    def n_accepted(self) -> int:
        return len(self.accepted)

    @property
    def n_rejected(self) -> int:
        return sum(1 for r in self.resolutions if r.edge is None)


def resolve_edge_list(
    confident_pairs: Iterable[tuple[int, int]],
    cases: Sequence[AmbiguityCase],
    embeddings: np.ndarray,
    threshold: Threshold | None,
    margin_epsilon: float = DEFAULT_MARGIN_EPSILON,
    metric: str = "euclidean",
) -> ResolveOutcome:
    """Resolve every uncertain case and append accepted links to the confident
    set; the resolution list is the complete audit log."""
    base = {(min(i, j), max(i, j)) for i, j in confident_pairs}
    resolutions = [
        resolve_case(case, embeddings, threshold, margin_epsilon, metric) for case in cases
    ]
    accepted = []
    merged = set(base)
    for r in resolutions:
        if r.edge is not None:
            pair = (min(r.edge), max(r.edge))
            accepted.append(pair)
            merged.add(pair)
    return ResolveOutcome(
        confident_pairs=tuple(sorted(merged)),
        resolutions=tuple(resolutions),
        accepted=tuple(accepted),
    )


# ---------------------------------------------------------------------------
# File IO
# ---------------------------------------------------------------------------


def write_cases(path: str | Path, cases: Sequence[AmbiguityCase], nodes: NodeTable) -> None:
    with open(path, "w") as fh:
        for case in cases:
            fh.write(json.dumps(case.to_record(nodes), sort_keys=True) + "\n")


def write_ground_truth(path: str | Path, cases: Sequence[AmbiguityCase], nodes: NodeTable) -> None:
    with open(path, "w") as fh:
        for case in cases:
            rec = {"case_id": case.case_id, "kind": case.kind}
            if case.truth is not None:
                rec["truth"] = nodes.pids[case.truth] if case.kind == PAIR else bool(case.truth)
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def load_cases(
    path: str | Path, nodes: NodeTable, truth_path: str | Path | None = None
) -> list[AmbiguityCase]:
    truths: dict[str, int | bool] = {}
    if truth_path is not None:
        with open(truth_path) as fh:
            for line in fh:
                rec = json.loads(line)
                t = rec.get("truth")
                if t is None:
                    continue
                truths[rec["case_id"]] = nodes.index_of(t) if isinstance(t, str) else bool(t)
    cases = []
    with open(path) as fh:
        for line in fh:
            rec = json.loads(line)
            kind = rec["kind"]
            kwargs = dict(
                case_id=rec["case_id"],
                kind=kind,
                u=nodes.index_of(rec["u"]),
                truth=truths.get(rec["case_id"]),
                provenance=rec.get("provenance", "real"),
            )
            if kind == PAIR:
                c1, c2 = rec["candidates"]
                kwargs["v1"] = nodes.index_of(c1)
                kwargs["v2"] = nodes.index_of(c2)
            else:
                kwargs["v"] = nodes.index_of(rec["v"])
            cases.append(AmbiguityCase(**kwargs))
    return cases


def write_resolutions(
    path: str | Path, resolutions: Sequence[Resolution], nodes: NodeTable
) -> None:
    with open(path, "w") as fh:
        for r in resolutions:
            fh.write(json.dumps(r.to_record(nodes), sort_keys=True) + "\n")


def load_resolutions(path: str | Path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh]

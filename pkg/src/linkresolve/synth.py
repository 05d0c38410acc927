"""Synthetic survey generator: homophily-driven networks with planted
ambiguities and known ground truth, plus a mental-health attribute block and
risk indicator items for the downstream prediction task.

Link probability for a pair is logistic(similarity + intercept), where
similarity rewards matching categorical attributes, penalizes absolute
differences of range-normalized numerics (both weighted per attribute), and
adds a latent-community match term that is deliberately *not* observable in
the attribute table: real nominations have drivers the survey never records,
and this is what gives structure-aware models room over feature-only ones.
The intercept is calibrated by bisection so the expected edge count hits the
configured target.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import CONFIDENT, UNCERTAIN, DataError, Edge, EdgeTable, NodeTable
from .disambig import EXISTENCE, PAIR, AmbiguityCase, write_cases, write_ground_truth
from .gat import stable_sigmoid


@dataclass(frozen=True)
class AttributeSpec:
    name: str
    kind: str  # categorical | numeric | binary
    categories: tuple[str, ...] = ()
    probs: tuple[float, ...] = ()
    low: int = 0
    high: int = 0
    p_true: float = 0.5
    missing_rate: float = 0.0


def default_attribute_specs() -> tuple[AttributeSpec, ...]:
    """Survey-style attribute block: demographics, family, and service history."""
    cat = lambda name, cats, probs=None, miss=0.0: AttributeSpec(
        name=name,
        kind="categorical",
        categories=tuple(cats),
        probs=tuple(probs) if probs else tuple([1.0 / len(cats)] * len(cats)),
        missing_rate=miss,
    )
    num = lambda name, low, high, miss=0.0: AttributeSpec(
        name=name, kind="numeric", low=low, high=high, missing_rate=miss
    )
    return (
        num("age", 19, 52),
        cat("race", ["white", "black", "hispanic", "asian", "other"], [0.42, 0.2, 0.22, 0.1, 0.06]),
        cat("ed", ["hs", "some_college", "associate", "bachelor", "graduate"], [0.3, 0.3, 0.15, 0.18, 0.07]),
        cat("marital_status", ["single", "married", "divorced", "widowed"], [0.42, 0.44, 0.12, 0.02]),
        AttributeSpec(name="romantic", kind="binary", p_true=0.55),
        cat("gender", ["male", "female", "nonbinary"], [0.78, 0.2, 0.02]),
        cat("sexuality", ["hetero", "gay", "bi"], [0.88, 0.06, 0.06], miss=0.04),
        num("siblings", 0, 6),
        num("household", 1, 8),
        cat("dad_ed", ["hs", "some_college", "associate", "bachelor", "graduate"], [0.4, 0.22, 0.14, 0.16, 0.08], miss=0.06),
        cat("mom_ed", ["hs", "some_college", "associate", "bachelor", "graduate"], [0.38, 0.24, 0.15, 0.16, 0.07], miss=0.05),
        num("military_join", 1995, 2022),
        cat("rank", ["E2", "E3", "E4", "E5", "E6", "E7", "O1", "O2"], [0.08, 0.18, 0.26, 0.2, 0.12, 0.06, 0.06, 0.04]),
        cat("mos", [f"mos_{k}" for k in range(10)]),
        AttributeSpec(name="deploy_ever", kind="binary", p_true=0.62),
        num("deployments", 0, 6),
        cat("deploy_where", ["iraq", "afghanistan", "kuwait", "korea", "germany", "other"]),
        # mostly-null column, present to exercise the drop rule downstream
        cat("service_notes", ["note_a", "note_b", "note_c"], miss=0.65),
    )


def default_homophily() -> dict[str, float]:
    """Attribute weights in the link-probability logit. Core demographic and
    relationship attributes dominate; everything the survey retains carries at
    least some signal, as coders report for the real instrument."""
    return {
        "gender": 7.5,
        "romantic": 6.2,
        "marital_status": 6.2,
        "age": 7.5,
        "race": 2.5,
        "ed": 2.2,
        "sexuality": 1.9,
        "siblings": 1.5,
        "household": 1.5,
        "dad_ed": 1.5,
        "mom_ed": 1.5,
        "military_join": 3.1,
        "rank": 2.5,
        "mos": 1.9,
        "deploy_ever": 1.9,
        "deployments": 1.9,
        "deploy_where": 1.2,
    }


def default_risk_weights() -> dict[str, float]:
    return {
        "deployments": 0.8,
        "deploy_ever": 0.5,
        "romantic": -0.6,
        "household": -0.4,
        "siblings": -0.2,
        "age": -0.3,
    }


RISK_ITEM_RANGES = ((1, 4), (1, 5), (1, 4), (0, 5))  # raw sum spans 3..18
RISK_ITEM_COLUMNS = tuple(f"risk_item_{k + 1}" for k in range(4))


@dataclass(frozen=True)
class SynthConfig:
    n: int = 242
    target_edges: int = 275
    pair_cases: int = 4
    existence_cases: int = 83
    existence_true_fraction: float = 0.75
    extra_attribute_count: int = 271
    informative_extra_count: int = 12
    homophily: dict[str, float] = field(default_factory=default_homophily)
    latent_groups: int = 40
    latent_weight: float = 3.5
    # "attributes": cohorts form around occupation and age band (plus noise),
    # so community membership is partially recoverable from the survey;
    # "random": communities invisible to every attribute
    latent_source: str = "attributes"
    latent_noise: float = 0.15
    decoy_quantile: float = 0.9
    exact_counts: bool = False
    risk_weights: dict[str, float] = field(default_factory=default_risk_weights)
    risk_exposure_weight: float = 1.5
    risk_noise: float = 0.6
    risk_missing_rate: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise DataError("need at least two nodes")
        if not (0 < self.target_edges < self.n * (self.n - 1) // 2):
            raise DataError("edge target must be positive and below the complete-graph count")
        if self.pair_cases < 0 or self.existence_cases < 0:
            raise DataError("ambiguity counts must be non-negative")
        if not (0 <= self.existence_true_fraction <= 1):
            raise DataError("existence_true_fraction must be in [0, 1]")
        if not (0 <= self.decoy_quantile < 1):
            raise DataError("decoy_quantile must be in [0, 1)")
        if self.extra_attribute_count < self.informative_extra_count:
            raise DataError("informative extras cannot exceed the extra attribute count")


@dataclass
class SyntheticDataset:
    config: SynthConfig
    nodes: NodeTable
    edges: EdgeTable
    cases: list[AmbiguityCase]
    true_pairs: list[tuple[int, int]]
    risk_nodes: NodeTable
    indicator_columns: tuple[str, ...]
    latent: np.ndarray
    intercept: float

    def confident_pairs(self) -> list[tuple[int, int]]:
        return self.edges.undirected_pairs(self.nodes, CONFIDENT)


def _sample_attributes(specs, n, rng) -> tuple[list[dict[str, str]], dict[str, np.ndarray]]:
    """Raw string cells per node plus numeric encodings used for similarity."""
    rows = [dict() for _ in range(n)]
    encoded: dict[str, np.ndarray] = {}
    for spec in specs:
        if spec.kind == "categorical":
            codes = rng.choice(len(spec.categories), size=n, p=np.array(spec.probs))
            values = [spec.categories[int(c)] for c in codes]
            enc = codes.astype(np.float64)
        elif spec.kind == "binary":
            draws = (rng.random(n) < spec.p_true).astype(np.int64)
            values = [str(int(v)) for v in draws]
            enc = draws.astype(np.float64)
        else:
            draws = rng.integers(spec.low, spec.high + 1, size=n)
            values = [str(int(v)) for v in draws]
            enc = draws.astype(np.float64)
        missing = rng.random(n) < spec.missing_rate
        for i in range(n):
            rows[i][spec.name] = "" if missing[i] else values[i]
        enc = enc.copy()
        enc[missing] = np.nan
        encoded[spec.name] = enc
    # structural missingness: deployment location only exists for deployed people
    if "deploy_ever" in encoded and "deploy_where" in encoded:
        never = encoded["deploy_ever"] == 0
        for i in np.nonzero(never)[0]:
            rows[int(i)]["deploy_where"] = ""
        enc = encoded["deploy_where"].copy()
        enc[never] = np.nan
        encoded["deploy_where"] = enc
    return rows, encoded


def attribute_similarity(
    specs: tuple[AttributeSpec, ...],
    encoded: dict[str, np.ndarray],
    weights: dict[str, float],
) -> np.ndarray:
    """Pairwise observable similarity: weighted category matches minus weighted
    normalized numeric gaps; missing values contribute nothing."""
    n = len(next(iter(encoded.values())))
    sim = np.zeros((n, n))
    for spec in specs:
        beta = weights.get(spec.name, 0.0)
        if beta == 0.0:
            continue
        x = encoded[spec.name]
        present = ~np.isnan(x)
        both = present[:, None] & present[None, :]
        if spec.kind in ("categorical", "binary"):
            match = (x[:, None] == x[None, :]) & both
            sim += beta * match
        else:
            rng_width = max(spec.high - spec.low, 1)
            gap = np.abs(x[:, None] - x[None, :]) / rng_width
            gap = np.where(both, gap, 0.0)
            sim -= beta * gap
    np.fill_diagonal(sim, 0.0)
    return sim


def _calibrate_intercept(sim_upper: np.ndarray, target: int) -> float:
    lo, hi = -40.0, 15.0
    for _ in range(200):
        mid = (lo + hi) / 2.0
        expected = float(np.sum(stable_sigmoid(sim_upper + mid)))
        if expected > target:
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2.0


def generate(config: SynthConfig) -> SyntheticDataset:
    """Deterministic full dataset for one config+seed."""
    rng = np.random.Generator(np.random.PCG64(config.seed))
    n = config.n
    specs = default_attribute_specs()
    rows, encoded = _sample_attributes(specs, n, rng)

    observable = attribute_similarity(specs, encoded, config.homophily)
    latent = _assign_latent_groups(config, encoded, rng)
    sim = observable + config.latent_weight * (latent[:, None] == latent[None, :])
    np.fill_diagonal(sim, 0.0)

    iu, ju = np.triu_indices(n, k=1)
    sim_upper = sim[iu, ju]
    intercept = _calibrate_intercept(sim_upper, config.target_edges)
    probs = stable_sigmoid(sim_upper + intercept)
    drawn = rng.random(len(probs)) < probs
    if config.exact_counts:
        drawn = _adjust_to_exact(drawn, probs, config.target_edges, rng)
    true_pairs = [(int(iu[k]), int(ju[k])) for k in np.nonzero(drawn)[0]]
    true_set = set(true_pairs)

    # --- ambiguity plan ---
    n_exist_true = int(round(config.existence_cases * config.existence_true_fraction))
    n_exist_false = config.existence_cases - n_exist_true
    needed = config.pair_cases + n_exist_true
    if len(true_pairs) < needed + 5:
        raise DataError(
            f"only {len(true_pairs)} edges generated; cannot plant {needed} ambiguous ones"
        )
    order = rng.permutation(len(true_pairs))
    pair_edge_ids = order[: config.pair_cases]
    exist_true_ids = order[config.pair_cases : needed]

    adjacency: dict[int, set[int]] = {i: set() for i in range(n)}
    for a, b in true_pairs:
        adjacency[a].add(b)
        adjacency[b].add(a)

    cases: list[AmbiguityCase] = []
    uncertain_rows: set[tuple[int, int]] = set()

    for k, edge_id in enumerate(pair_edge_ids):
        a, b = true_pairs[int(edge_id)]
        u, v_true = (a, b) if rng.random() < 0.5 else (b, a)
        decoy = _pick_decoy(u, v_true, observable, adjacency, uncertain_rows, config, rng)
        uncertain_rows.add((min(u, v_true), max(u, v_true)))
        uncertain_rows.add((min(u, decoy), max(u, decoy)))
        first = rng.random() < 0.5
        v1, v2 = (v_true, decoy) if first else (decoy, v_true)
        cases.append(
            AmbiguityCase(
                case_id=f"planted-pair-{k:04d}",
                kind=PAIR,
                u=u,
                v1=v1,
                v2=v2,
                truth=v_true,
                provenance="planted",
            )
        )

    for k, edge_id in enumerate(exist_true_ids):
        a, b = true_pairs[int(edge_id)]
        u, v = (a, b) if rng.random() < 0.5 else (b, a)
        uncertain_rows.add((min(u, v), max(u, v)))
        cases.append(
            AmbiguityCase(
                case_id=f"planted-exist-t-{k:04d}",
                kind=EXISTENCE,
                u=u,
                v=v,
                truth=True,
                provenance="planted",
            )
        )

    placed = 0
    guard = 0
    while placed < n_exist_false:
        guard += 1
        if guard > 100 * max(n_exist_false, 1):
            raise DataError("could not place out-of-network cases (graph too dense)")
        u, v = int(rng.integers(0, n)), int(rng.integers(0, n))
        pair = (min(u, v), max(u, v))
        if u == v or pair in true_set or pair in uncertain_rows:
            continue
        uncertain_rows.add(pair)
        cases.append(
            AmbiguityCase(
                case_id=f"planted-exist-f-{placed:04d}",
                kind=EXISTENCE,
                u=u,
                v=v,
                truth=False,
                provenance="planted",
            )
        )
        placed += 1

    # --- edge table ---
    removed = {true_pairs[int(e)] for e in np.concatenate([pair_edge_ids, exist_true_ids])} if len(
        true_pairs
    ) else set()
    pids = [str(i + 1) for i in range(n)]
    edge_rows: list[Edge] = []
    for a, b in true_pairs:
        if (a, b) in removed:
            continue
        s, d = (a, b) if rng.random() < 0.5 else (b, a)
        edge_rows.append(Edge(pids[s], pids[d], CONFIDENT))
    for case in cases:
        if case.kind == PAIR:
            edge_rows.append(Edge(pids[case.u], pids[case.v1], UNCERTAIN))
            edge_rows.append(Edge(pids[case.u], pids[case.v2], UNCERTAIN))
        else:
            edge_rows.append(Edge(pids[case.u], pids[case.v], UNCERTAIN))

    columns = tuple(s.name for s in specs)
    kinds = {s.name: s.kind for s in specs}
    nodes = NodeTable(
        pids=tuple(pids),
        columns=columns,
        kinds=kinds,
        cells=tuple(tuple(rows[i][c] for c in columns) for i in range(n)),
    )
    edges = EdgeTable(tuple(edge_rows))

    risk_nodes, indicator_columns = _generate_risk_block(
        config, nodes, encoded, adjacency, rng
    )

    return SyntheticDataset(
        config=config,
        nodes=nodes,
        edges=edges,
        cases=cases,
        true_pairs=sorted(true_pairs),
        risk_nodes=risk_nodes,
        indicator_columns=indicator_columns,
        latent=latent,
        intercept=intercept,
    )


def _assign_latent_groups(config: SynthConfig, encoded: dict[str, np.ndarray], rng) -> np.ndarray:
    """Community assignment driving link formation beyond pairwise homophily."""
    n = len(next(iter(encoded.values())))
    if config.latent_source == "random":
        return rng.integers(0, config.latent_groups, size=n)
    if config.latent_source != "attributes":
        raise DataError(f"unknown latent_source {config.latent_source!r}")
    mos = encoded["mos"]
    n_mos = int(np.nanmax(mos)) + 1
    n_bands = max(1, round(config.latent_groups / n_mos))
    age = encoded["age"]
    age_filled = np.where(np.isnan(age), np.nanmean(age), age)
    edges = np.quantile(age_filled, np.linspace(0, 1, n_bands + 1)[1:-1])
    band = np.searchsorted(edges, age_filled)
    mos_filled = np.where(np.isnan(mos), rng.integers(0, n_mos, size=n), mos).astype(int)
    groups = mos_filled * n_bands + band
    shuffle = rng.random(n) < config.latent_noise
    groups[shuffle] = rng.integers(0, n_mos * n_bands, size=int(shuffle.sum()))
    return groups


def _adjust_to_exact(drawn, probs, target, rng):
    drawn = drawn.copy()
    idx = np.nonzero(drawn)[0]
    if len(idx) > target:
        drop = rng.choice(idx, size=len(idx) - target, replace=False)
        drawn[drop] = False
    elif len(idx) < target:
        pool = np.nonzero(~drawn)[0]
        weights = probs[pool]
        weights = weights / weights.sum()
        add = rng.choice(pool, size=target - len(idx), replace=False, p=weights)
        drawn[add] = True
    return drawn


def _pick_decoy(u, v_true, observable, adjacency, used, config, rng) -> int:
    """Decoy not linked to u, preferentially from the top similarity quantile
    relative to the true alter (name collisions track demographics)."""
    n = observable.shape[0]
    eligible = [
        w
        for w in range(n)
        if w not in (u, v_true)
        and w not in adjacency[u]
        and (min(u, w), max(u, w)) not in used
    ]
    if not eligible:
        raise DataError(f"no valid decoy exists for node {u}")
    sims = observable[v_true, eligible]
    cut = np.quantile(sims, config.decoy_quantile)
    top = [w for w, s in zip(eligible, sims) if s >= cut]
    pool = top if top else eligible
    return int(pool[int(rng.integers(0, len(pool)))])


def _generate_risk_block(config, nodes, encoded, adjacency, rng):
    """Latent risk from weighted attributes plus network exposure; four integer
    indicator items whose sum spans the 3..18 scale, and the extra
    mental-health attribute block (a few columns informative, the rest noise)."""
    n = nodes.n
    base = rng.normal(0.0, config.risk_noise, size=n)
    for name, weight in config.risk_weights.items():
        x = encoded[name]
        filled = np.where(np.isnan(x), np.nanmean(x), x)
        std = filled.std()
        if std > 0:
            base += weight * (filled - filled.mean()) / std
    base_std = (base - base.mean()) / max(base.std(), 1e-12)

    provisional = 3.0 + 15.0 * stable_sigmoid(base_std - 1.85)
    exposure = np.empty(n)
    for i in range(n):
        nbrs = sorted(adjacency[i])
        exposure[i] = provisional[nbrs].mean() if nbrs else provisional.mean()
    exposure_std = (exposure - exposure.mean()) / max(exposure.std(), 1e-12)
    final = base_std + config.risk_exposure_weight * exposure_std
    final_std = (final - final.mean()) / max(final.std(), 1e-12)
    total = 3.0 + 15.0 * stable_sigmoid(final_std - 1.1)

    frac = (total - 3.0) / 15.0
    item_cells = np.zeros((n, 4), dtype=np.int64)
    for k, (lo, hi) in enumerate(RISK_ITEM_RANGES):
        noisy = lo + frac * (hi - lo) + rng.normal(0.0, 0.25, size=n)
        item_cells[:, k] = np.clip(np.round(noisy), lo, hi).astype(np.int64)
    item_missing = rng.random((n, 4)) < config.risk_missing_rate

    n_extra = config.extra_attribute_count
    extra_names = [f"mh_{k + 1:03d}" for k in range(n_extra)]
    informative = rng.choice(n_extra, size=config.informative_extra_count, replace=False)
    extra = rng.normal(size=(n, n_extra))
    for col in informative:
        coef = rng.uniform(0.6, 1.2)
        extra[:, col] = coef * base_std + rng.normal(0.0, 0.5, size=n)

    columns = tuple(extra_names) + RISK_ITEM_COLUMNS
    kinds = {c: "numeric" for c in columns}
    cells = []
    for i in range(n):
        row = [f"{extra[i, k]:.4f}" for k in range(n_extra)]
        for k in range(4):
            row.append("" if item_missing[i, k] else str(int(item_cells[i, k])))
        cells.append(tuple(row))
    risk_nodes = NodeTable(
        pids=nodes.pids, columns=columns, kinds=kinds, cells=tuple(cells)
    )
    return risk_nodes, RISK_ITEM_COLUMNS


def corrupted_pairs(ds: SyntheticDataset) -> list[tuple[int, int]]:
    """The face-value reading of the survey: every confident edge, the decoy
    candidate for each pair ambiguity, and every reported existence link
    whether or not the true alter is in the network."""
    pairs = set(ds.confident_pairs())
    for case in ds.cases:
        if case.kind == PAIR:
            decoy = case.v1 if case.truth == case.v2 else case.v2
            pairs.add((min(case.u, decoy), max(case.u, decoy)))
        else:
            pairs.add((min(case.u, case.v), max(case.u, case.v)))
    return sorted(pairs)


def _write_nodes_csv(path: Path, table: NodeTable) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["PID", *table.columns])
        for pid, row in zip(table.pids, table.cells):
            writer.writerow([pid, *row])


def write_dataset(ds: SyntheticDataset, outdir: str | Path) -> dict[str, Path]:
    """Write every artifact consumed by the pipeline; byte-identical per seed."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "nodes": outdir / "nodes.csv",
        "schema": outdir / "schema.json",
        "edges": outdir / "edges.csv",
        "cases": outdir / "cases.jsonl",
        "ground_truth": outdir / "ground_truth.jsonl",
        "risk_nodes": outdir / "risk_nodes.csv",
        "risk_schema": outdir / "risk_schema.json",
        "truth_edges": outdir / "truth_edges.csv",
    }
    _write_nodes_csv(paths["nodes"], ds.nodes)
    paths["schema"].write_text(
        json.dumps(dict(sorted(ds.nodes.kinds.items())), indent=2, sort_keys=True) + "\n"
    )
    with open(paths["edges"], "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["src", "dst", "confidence"])
        for e in ds.edges.edges:
            writer.writerow([e.src, e.dst, e.confidence])
    write_cases(paths["cases"], ds.cases, ds.nodes)
    write_ground_truth(paths["ground_truth"], ds.cases, ds.nodes)
    _write_nodes_csv(paths["risk_nodes"], ds.risk_nodes)
    paths["risk_schema"].write_text(
        json.dumps(dict(sorted(ds.risk_nodes.kinds.items())), indent=2, sort_keys=True) + "\n"
    )
    with open(paths["truth_edges"], "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["src", "dst", "confidence"])
        for a, b in ds.true_pairs:
            writer.writerow([ds.nodes.pids[a], ds.nodes.pids[b], CONFIDENT])
    return paths


def fixture_config(seed: int = 20240011) -> SynthConfig:
    """The shipped benchmark dataset: 242 nodes and exactly 275 reported rows,
    184 of them confident, matching the production survey's scale."""
    return SynthConfig(
        n=242,
        target_edges=250,
        pair_cases=4,
        existence_cases=83,
        existence_true_fraction=62 / 83,
        exact_counts=True,
        seed=seed,
    )

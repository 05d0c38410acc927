"""Attribute preprocessing: one-hot encoding, z-scoring, and column provenance.

The fitted column map is the complete recipe for turning raw rows into the
numeric feature matrix: applying it to the same table reproduces the matrix
exactly, and its hash ties a trained model to the encoding it was fit on.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .data import DataError, NodeTable
from .validation import check_fitted

UNKNOWN_CATEGORY = "__unknown__"


@dataclass(frozen=True)
class ColumnSpec:
    """Provenance of one output feature column."""

    name: str
    source: str
    source_kind: str  # categorical | numeric | binary
    transform: str  # onehot | zscore
    category: str | None = None  # onehot only; UNKNOWN_CATEGORY marks the missing-value column
    mean: float | None = None  # zscore only
    std: float | None = None


@dataclass(frozen=True)
class ColumnMap:
    columns: tuple[ColumnSpec, ...]
    dropped: tuple[tuple[str, str], ...]  # (column, reason)
    missing_threshold: float

    @property
    def width(self) -> int:
        return len(self.columns)

    def feature_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def sources(self) -> list[str]:
        return [c.source for c in self.columns]

    def to_json(self) -> dict:
        cols = []
        for c in self.columns:
            entry = {
                "name": c.name,
                "source": c.source,
                "source_kind": c.source_kind,
                "transform": c.transform,
            }
            if c.transform == "onehot":
                entry["category"] = c.category
            else:
                # hex floats round-trip exactly
                entry["mean"] = float(c.mean).hex()
                entry["std"] = float(c.std).hex()
            cols.append(entry)
        return {
            "columns": cols,
            "dropped": [list(d) for d in self.dropped],
            "missing_threshold": float(self.missing_threshold).hex(),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ColumnMap":
        cols = []
        for entry in doc["columns"]:
            if entry["transform"] == "onehot":
                cols.append(
                    ColumnSpec(
                        name=entry["name"],
                        source=entry["source"],
                        source_kind=entry["source_kind"],
                        transform="onehot",
                        category=entry["category"],
                    )
                )
            else:
                cols.append(
                    ColumnSpec(
                        name=entry["name"],
                        source=entry["source"],
                        source_kind=entry["source_kind"],
                        transform="zscore",
                        mean=float.fromhex(entry["mean"]),
                        std=float.fromhex(entry["std"]),
                    )
                )
        return cls(
            columns=tuple(cols),
            dropped=tuple((d[0], d[1]) for d in doc["dropped"]),
            missing_threshold=float.fromhex(doc["missing_threshold"]),
        )

    def hash(self) -> str:
        canon = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def apply(self, nodes: NodeTable) -> np.ndarray:
        """Encode raw rows with the recorded transforms."""
        out = np.zeros((nodes.n, self.width), dtype=np.float64)
        col_cache: dict[str, list[str]] = {}
        for k, spec in enumerate(self.columns):
            if spec.source not in col_cache:
                if spec.source not in nodes.columns:
                    raise DataError(f"column {spec.source!r} missing from node table")
                col_cache[spec.source] = nodes.column_values(spec.source)
            values = col_cache[spec.source]
            if spec.transform == "onehot":
                if spec.category == UNKNOWN_CATEGORY:
                    out[:, k] = [1.0 if v == "" else 0.0 for v in values]
                else:
                    out[:, k] = [1.0 if v == spec.category else 0.0 for v in values]
            else:
                enc = np.zeros(nodes.n)
                for i, v in enumerate(values):
                    # missing numerics impute to the recorded mean, i.e. 0 after z-scoring
                    enc[i] = 0.0 if v == "" else (float(v) - spec.mean) / spec.std
                out[:, k] = enc
        return out


@dataclass(frozen=True)
class FeatureMatrix:
    """Encoded node features plus the provenance of every column."""

    values: np.ndarray
    column_map: ColumnMap

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    def feature_names(self) -> list[str]:
        return self.column_map.feature_names()


class SurveyPreprocessor(BaseEstimator, TransformerMixin):
    """Encode a NodeTable into a dense float matrix.

    Columns whose missing fraction exceeds ``missing_threshold`` are dropped.
    Categorical columns are one-hot expanded (missing values get a dedicated
    unknown-category column); numeric and binary columns are z-scored over the
    non-missing values (population std) with missing entries imputed to the
    mean, i.e. 0 after normalization. Constant columns are dropped.
    """

    def __init__(self, missing_threshold: float = 0.5):
        self.missing_threshold = missing_threshold

    def fit(self, nodes: NodeTable, y=None):
        if not (0 < self.missing_threshold <= 1):
            raise DataError(
                f"missing_threshold must be in (0, 1], got {self.missing_threshold}"
            )
        specs: list[ColumnSpec] = []
        dropped: list[tuple[str, str]] = []
        for column in nodes.columns:
            values = nodes.column_values(column)
            kind = nodes.kinds[column]
            n_missing = sum(1 for v in values if v == "")
            if nodes.n == 0 or n_missing / max(nodes.n, 1) > self.missing_threshold:
                dropped.append((column, "missing_fraction"))
                continue
            if kind == "categorical":
                categories = sorted({v for v in values if v != ""})
                if UNKNOWN_CATEGORY in categories:
                    raise DataError(
                        f"column {column!r} uses the reserved category {UNKNOWN_CATEGORY!r}"
                    )
                if not categories:
                    dropped.append((column, "all_missing"))
                    continue
                if len(categories) == 1 and n_missing == 0:
                    dropped.append((column, "constant"))
                    continue
                for cat in categories:
                    specs.append(
                        ColumnSpec(
                            name=f"{column}={cat}",
                            source=column,
                            source_kind=kind,
                            transform="onehot",
                            category=cat,
                        )
                    )
                if n_missing > 0:
                    specs.append(
                        ColumnSpec(
                            name=f"{column}={UNKNOWN_CATEGORY}",
                            source=column,
                            source_kind=kind,
                            transform="onehot",
                            category=UNKNOWN_CATEGORY,
                        )
                    )
            else:  # numeric or binary
                present = np.array([float(v) for v in values if v != ""], dtype=np.float64)
                if present.size == 0:
                    dropped.append((column, "all_missing"))
                    continue
                mean = float(np.mean(present))
                std = float(np.std(present))
                if std <= 0.0:
                    dropped.append((column, "constant"))
                    continue
                specs.append(
                    ColumnSpec(
                        name=column,
                        source=column,
                        source_kind=kind,
                        transform="zscore",
                        mean=mean,
                        std=std,
                    )
                )
        if not specs:
            raise DataError("no usable features: every column was dropped")
        self.column_map_ = ColumnMap(
            columns=tuple(specs),
            dropped=tuple(dropped),
            missing_threshold=self.missing_threshold,
        )
        return self

    def transform(self, nodes: NodeTable) -> np.ndarray:
        check_fitted(self, "column_map_")
        return self.column_map_.apply(nodes)


def preprocess(nodes: NodeTable, missing_threshold: float = 0.5) -> FeatureMatrix:
    """One-shot fit+transform returning the matrix together with its column map."""
    prep = SurveyPreprocessor(missing_threshold=missing_threshold).fit(nodes)
    return FeatureMatrix(values=prep.transform(nodes), column_map=prep.column_map_)

import numpy as np
import pytest

from linkresolve.data import DataError, NodeTable
from linkresolve.preprocessing import (
    ColumnMap,
    SurveyPreprocessor,
    UNKNOWN_CATEGORY,
    preprocess,
)


def make_table(columns, kinds, rows, pids=None):
    pids = pids or [str(i) for i in range(len(rows))]
    return NodeTable(
        pids=tuple(pids),
        columns=tuple(columns),
        kinds=dict(zip(columns, kinds)),
        cells=tuple(tuple(r) for r in rows),
    )


def test_majority_missing_column_dropped():
    rows = [["", "a"], ["", "b"], ["", "a"], ["1.0", "b"], ["2.0", "a"]]
    table = make_table(["x", "c"], ["numeric", "categorical"], rows)
    fm = preprocess(table, missing_threshold=0.5)
    assert ("x", "missing_fraction") in fm.column_map.dropped
    assert all(spec.source != "x" for spec in fm.column_map.columns)


def test_exactly_half_missing_kept():
    rows = [["", "a"], ["", "b"], ["1.0", "a"], ["3.0", "b"]]
    table = make_table(["x", "c"], ["numeric", "categorical"], rows)
    fm = preprocess(table, missing_threshold=0.5)
    assert any(spec.source == "x" for spec in fm.column_map.columns)


def test_zscore_two_symmetric_points():
    table = make_table(["x"], ["numeric"], [["2"], ["4"]])
    fm = preprocess(table)
    assert np.allclose(sorted(fm.values[:, 0]), [-1.0, 1.0])


def test_onehot_with_unknown_column():
    table = make_table(["c"], ["categorical"], [["A"], ["A"], ["B"], [""]])
    fm = preprocess(table)
    assert fm.feature_names() == ["c=A", "c=B", f"c={UNKNOWN_CATEGORY}"]
    expected = np.array([[1, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
    assert np.array_equal(fm.values, expected)


def test_onehot_entries_are_binary_and_rows_complete(rng):
    cats = ["x", "y", "z"]
    rows = [[cats[int(rng.integers(0, 3))], str(rng.integers(0, 50))] for _ in range(40)]
    rows[3][0] = ""
    table = make_table(["c", "v"], ["categorical", "numeric"], rows)
    fm = preprocess(table)
    onehot_cols = [k for k, s in enumerate(fm.column_map.columns) if s.transform == "onehot"]
    assert np.all(np.isin(fm.values[:, onehot_cols], (0.0, 1.0)))
    assert np.all(np.isfinite(fm.values))


def test_numeric_normalization_stats():
    rng = np.random.Generator(np.random.PCG64(17))
    values = rng.normal(10, 3, size=50)
    rows = [[repr(float(v))] for v in values]
    rows[7] = [""]
    rows[21] = [""]
    table = make_table(["x"], ["numeric"], rows)
    fm = preprocess(table)
    non_imputed = np.array([fm.values[i, 0] for i in range(50) if i not in (7, 21)])
    assert abs(non_imputed.mean()) < 1e-9
    assert abs(non_imputed.std() - 1.0) < 1e-9
    assert fm.values[7, 0] == 0.0  # mean-imputed after normalization


def test_constant_column_dropped():
    table = make_table(["x", "y"], ["numeric", "numeric"], [["5", "1"], ["5", "2"]])
    fm = preprocess(table)
    assert ("x", "constant") in fm.column_map.dropped
    assert fm.width == 1


def test_binary_column_zscored():
    table = make_table(["b"], ["binary"], [["0"], ["1"], ["1"], ["0"]])
    fm = preprocess(table)
    assert np.allclose(sorted(set(fm.values[:, 0])), [-1.0, 1.0])


def test_all_columns_dropped_error():
    table = make_table(["x"], ["numeric"], [["5"], ["5"]])
    with pytest.raises(DataError, match="no usable features"):
        preprocess(table)


def test_invalid_threshold():
    table = make_table(["x"], ["numeric"], [["1"], ["2"]])
    with pytest.raises(DataError, match="missing_threshold"):
        preprocess(table, missing_threshold=0.0)


def test_idempotence_applying_recorded_map():
    rng = np.random.Generator(np.random.PCG64(3))
    cats = ["a", "b", "c", ""]
    rows = [
        [cats[int(rng.integers(0, 4))], f"{rng.normal():.6f}", str(int(rng.integers(0, 2)))]
        for _ in range(30)
    ]
    table = make_table(["c", "x", "flag"], ["categorical", "numeric", "binary"], rows)
    fm = preprocess(table)
    again = fm.column_map.apply(table)
    assert np.array_equal(fm.values, again)


def test_column_map_json_roundtrip_and_hash():
    table = make_table(
        ["c", "x"], ["categorical", "numeric"], [["a", "1"], ["b", "2"], ["", "3"]]
    )
    fm = preprocess(table)
    doc = fm.column_map.to_json()
    restored = ColumnMap.from_json(doc)
    assert restored == fm.column_map
    assert restored.hash() == fm.column_map.hash()
    assert np.array_equal(restored.apply(table), fm.values)


def test_transformer_api():
    table = make_table(["x"], ["numeric"], [["1"], ["3"]])
    prep = SurveyPreprocessor()
    assert prep.get_params()["missing_threshold"] == 0.5
    out = prep.fit_transform(table)
    assert out.shape == (2, 1)
    with pytest.raises(RuntimeError, match="not fitted"):
        SurveyPreprocessor().transform(table)

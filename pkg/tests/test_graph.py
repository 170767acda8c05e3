import gzip
import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rwer.errors import DimensionError, GraphFormatError
from rwer.graph import (
    apply_forward,
    apply_transposed,
    from_edges,
    load_edge_list,
    row_normalize,
    write_label_map,
)

from conftest import random_strong_graph


def load(text):
    return load_edge_list(io.BytesIO(text.encode()))


def test_two_cycle_load():
    g = load("0 1\n1 0\n")
    assert (g.n, g.m) == (2, 2)
    np.testing.assert_array_equal(g.adjacency.toarray(), [[0, 1], [1, 0]])


def test_duplicate_edges_merge_by_sum():
    g = load("a b 2\na b 3\n")
    assert g.m == 1
    assert g.adjacency[g.node_id("a"), g.node_id("b")] == 5.0


def test_path_has_dangling_tail():
    t = row_normalize(load("0 1\n1 2\n"))
    assert t.dangling_nodes.tolist() == [2]


def test_ids_by_first_appearance_and_comments():
    g = load("# header\nz y\n\ny x 0.5\n  # indented comment\n")
    assert g.labels == ("z", "y", "x")
    assert g.adjacency[1, 2] == 0.5


def test_self_loops_kept():
    g = load("0 0\n0 1\n")
    assert g.adjacency[0, 0] == 1.0


@pytest.mark.parametrize("text, lineno", [
    ("0 1\n0\n", 2),
    ("0 1 2 3\n", 1),
    ("0 1\n1 0 abc\n", 2),
    ("0 1 -1\n", 1),
    ("0 1 nan\n", 1),
])
def test_malformed_lines_report_line_number(text, lineno):
    with pytest.raises(GraphFormatError) as err:
        load(text)
    assert err.value.lineno == lineno
    assert f"line {lineno}" in str(err.value)


def test_empty_graph_rejected():
    with pytest.raises(GraphFormatError, match="empty"):
        load("# nothing here\n\n")


def test_gzip_is_transparent(tmp_path):
    p = tmp_path / "g.txt.gz"
    p.write_bytes(gzip.compress(b"0 1\n1 2 4\n"))
    g = load_edge_list(p)
    assert (g.n, g.m) == (3, 2)
    assert g.adjacency[1, 2] == 4.0


def test_load_is_deterministic():
    text = "\n".join(f"{i % 7} {(3 * i) % 11} {1 + i % 3}" for i in range(200))
    a, b = load(text), load(text)
    for attr in ("indptr", "indices", "data"):
        assert getattr(a.adjacency, attr).tobytes() == getattr(b.adjacency, attr).tobytes()
    assert a.labels == b.labels


def test_csr_invariants():
    g = load("3 1 1\n3 0 2\n3 1 4\n0 3\n")
    a = g.adjacency
    for i in range(g.n):
        cols = a.indices[a.indptr[i]:a.indptr[i + 1]]
        assert np.all(np.diff(cols) > 0)
        assert g.out_degree_weight[i] == a.data[a.indptr[i]:a.indptr[i + 1]].sum()


def test_label_map_tsv(tmp_path):
    g = load("x y\ny z\n")
    write_label_map(g, tmp_path / "labels.tsv")
    assert (tmp_path / "labels.tsv").read_text() == "0\tx\n1\ty\n2\tz\n"


def test_row_normalize_examples():
    t = row_normalize(from_edges([0, 1], [1, 0]))
    np.testing.assert_array_equal(t.dense(), [[0, 1], [1, 0]])

    t = row_normalize(from_edges([0, 0], [1, 2], [2.0, 3.0]))
    np.testing.assert_allclose(t.dense()[0], [0, 0.4, 0.6])
    assert t.dangling_nodes.tolist() == [1, 2]
    assert t.normalized.indptr[2] == t.normalized.indptr[1]  # empty row


def test_operator_examples():
    t = row_normalize(from_edges([0, 1], [1, 0]))
    np.testing.assert_array_equal(apply_transposed(t, [1.0, 0.0]), [0, 1])
    np.testing.assert_array_equal(apply_forward(t, [1.0, 0.0]), [0, 1])
    np.testing.assert_array_equal(apply_transposed(t, np.zeros(2)), [0, 0])

    t = row_normalize(from_edges([0, 0], [1, 2], [2.0, 3.0]))
    np.testing.assert_allclose(apply_transposed(t, [1.0, 0, 0]), [0, 0.4, 0.6])
    x = np.array([5.0, -2.0, 7.0])
    assert apply_forward(t, x)[1] == 0.0 and apply_forward(t, x)[2] == 0.0


def test_forward_of_ones_on_non_dangling_graph(rng):
    t = row_normalize(random_strong_graph(40, rng))
    np.testing.assert_allclose(apply_forward(t, np.ones(40)), 1.0, atol=1e-12)


def test_operator_dimension_mismatch(two_cycle):
    with pytest.raises(DimensionError):
        apply_transposed(two_cycle, np.ones(3))
    with pytest.raises(DimensionError):
        apply_forward(two_cycle, np.ones(1))


def test_operators_write_into_buffer(two_cycle):
    out = np.empty(2)
    res = apply_transposed(two_cycle, [0.25, 0.75], out=out)
    assert res is out
    np.testing.assert_array_equal(out, [0.75, 0.25])


graphs = st.builds(
    lambda n, seed, dangle: (n, seed, dangle),
    st.integers(2, 60), st.integers(0, 2**31 - 1), st.booleans(),
)


def _random_graph(n, seed, dangle):
    rng = np.random.default_rng(seed)
    m = rng.integers(1, 4 * n)
    src = rng.integers(0, n, m)
    if dangle:
        src = src[src != n - 1]
    dst = rng.integers(0, n, src.size)
    return from_edges(src, dst, rng.uniform(0.0, 3.0, src.size), n=n)


@settings(max_examples=60, deadline=None)
@given(graphs)
def test_rows_stochastic_and_mass_preserved(params):
    g = _random_graph(*params)
    t = row_normalize(g)
    sums = np.asarray(t.normalized.sum(axis=1)).ravel()
    live = ~t.dangling
    np.testing.assert_allclose(sums[live], 1.0, atol=1e-12)
    assert np.all(sums[t.dangling] == 0)
    assert np.array_equal(t.dangling, g.out_degree_weight == 0)

    x = np.random.default_rng(params[1]).random(g.n)
    x[t.dangling] = 0.0
    assert abs(apply_transposed(t, x).sum() - x.sum()) <= 1e-12 * max(1.0, x.sum())


def test_from_edges_rejects_bad_input():
    with pytest.raises(ValueError):
        from_edges([0], [1], [-1.0])
    with pytest.raises(DimensionError):
        from_edges([0], [5], n=3)

import numpy as np
import pytest
import scipy.io

from distsddm.generators import random_sddm
from distsddm.io import (
    ParseError,
    read_edge_list,
    read_matrix_market,
    read_vector,
    write_edge_list,
    write_matrix_market,
    write_vector,
)
from distsddm.linalg import StructuralError, WeightedGraph


def test_matrix_market_roundtrip_matches_scipy(tmp_path, rng):
    M = random_sddm(12, rng)
    path = tmp_path / "m.mtx"
    write_matrix_market(path, M, comment="test matrix")
    got = read_matrix_market(path)
    assert np.array_equal(got, M)
    np.testing.assert_array_equal(scipy.io.mmread(str(path)).toarray(), M)


def test_matrix_market_reads_scipy_output(tmp_path, rng):
    M = random_sddm(7, rng)
    path = tmp_path / "s.mtx"
    scipy.io.mmwrite(str(path), scipy.sparse.coo_matrix(M), symmetry="symmetric")
    np.testing.assert_allclose(read_matrix_market(path), M, rtol=1e-15)


@pytest.mark.parametrize(
    "body,line",
    [
        ("2 2 2\n1 1 2\n2 2 x\n", 4),
        ("2 2 3\n1 1 2\n", 3),
        ("2 2 1\n3 1 2\n", 3),
        ("2 3 1\n1 1 2\n", 2),
    ],
)
def test_matrix_market_errors_carry_line(tmp_path, body, line):
    path = tmp_path / "bad.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real symmetric\n" + body)
    with pytest.raises(ParseError) as info:
        read_matrix_market(path)
    assert info.value.line == line


def test_matrix_market_general_must_be_symmetric(tmp_path):
    path = tmp_path / "g.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 2\n2 1 -1\n2 2 2\n")
    with pytest.raises(StructuralError):
        read_matrix_market(path)


def test_edge_list_roundtrip(tmp_path):
    G = WeightedGraph(4, ((0, 1, 1.5), (1, 2, 2.0), (2, 3, 0.25)))
    path = tmp_path / "g.txt"
    write_edge_list(path, G)
    assert read_edge_list(path) == G


@pytest.mark.parametrize(
    "text,line",
    [("0 1 1\n1 1 2\n", 2), ("0 1 1\n# c\n1 0 3\n", 3), ("0 1 -1\n", 1), ("0 1\n", 1), ("0 a 1\n", 1)],
)
def test_edge_list_errors_carry_line(tmp_path, text, line):
    path = tmp_path / "g.txt"
    path.write_text(text)
    with pytest.raises(ParseError) as info:
        read_edge_list(path)
    assert info.value.line == line


def test_vector_roundtrip_is_exact(tmp_path, rng):
    v = rng.standard_normal(9)
    path = tmp_path / "v.txt"
    write_vector(path, v)
    assert np.array_equal(read_vector(path), v)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sketchspec.errors import ParseError
from sketchspec.matrix_io import MAGIC, read_matrix, write_matrix


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)),
              elements=st.floats(allow_nan=False, allow_infinity=False, width=64)))
def test_binary_round_trip_bit_exact(tmp_path_factory, a):
    p = tmp_path_factory.mktemp("bin") / "m.bin"
    write_matrix(p, a)
    b = read_matrix(p)
    assert b.shape == a.shape and b.tobytes() == a.tobytes()


def test_binary_layout(tmp_path):
    a = np.arange(6, dtype=float).reshape(2, 3)
    p = tmp_path / "m.bin"
    write_matrix(p, a)
    raw = p.read_bytes()
    assert raw[:4] == MAGIC
    assert int.from_bytes(raw[4:8], "little") == 2 and int.from_bytes(raw[8:12], "little") == 3
    assert np.array_equal(np.frombuffer(raw[12:], "<f8"), a.ravel())


def test_mm_round_trip_diag(tmp_path):
    a = np.diag([3.0, 1.0])
    p = tmp_path / "d.mtx"
    write_matrix(p, a)
    b = read_matrix(p)
    assert np.all(np.abs(b - a) <= 1e-15 * np.abs(a).max())
    text = p.read_text().splitlines()
    assert text[0] == "%%MatrixMarket matrix array real general"


def test_mm_round_trip_random(tmp_path, seeded):
    a = seeded((5, 4), 1)
    p = tmp_path / "r.mtx"
    write_matrix(p, a)
    assert np.array_equal(read_matrix(p), a)


def test_format_sniffing(tmp_path):
    a = np.eye(2)
    write_matrix(tmp_path / "x.dat", a, "bin")
    write_matrix(tmp_path / "y.dat", a, "mm")
    assert np.array_equal(read_matrix(tmp_path / "x.dat"), a)
    assert np.array_equal(read_matrix(tmp_path / "y.dat"), a)


@pytest.mark.parametrize(
    "text,line",
    [
        ("%%MatrixMarket matrix array complex general\n1 1\n1 0\n", 1),
        ("%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 2\n", 1),
        ("%%MatrixMarket matrix array real symmetric\n1 1\n1\n", 1),
        ("%%MatrixMarket matrix array real general\n2 2\n1\n2\nx\n4\n", 5),
        ("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n", None),
        ("%%MatrixMarket matrix array real general\n2\n", 2),
        ("not a banner\n", 1),
    ],
)
def test_mm_parse_errors(tmp_path, text, line):
    p = tmp_path / "bad.mtx"
    p.write_text(text)
    with pytest.raises(ParseError) as err:
        read_matrix(p)
    if line is not None:
        assert f"line {line}" in str(err.value)


def test_mm_comments_and_integer_field(tmp_path):
    p = tmp_path / "c.mtx"
    p.write_text("%%MatrixMarket matrix array integer general\n% a comment\n2 1\n3\n-4\n")
    assert np.array_equal(read_matrix(p), np.array([[3.0], [-4.0]]))


def test_truncated_binary(tmp_path):
    p = tmp_path / "t.bin"
    write_matrix(p, np.ones((3, 3)))
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(ParseError):
        read_matrix(p)

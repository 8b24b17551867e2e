import numpy as np
import pytest

from sromuq.errors import BadMagic, NonFinite, TruncatedFile
from sromuq.matio import read_csv, read_matrix, write_csv, write_matrix


def test_roundtrip_bitwise(tmp_path):
    rng = np.random.default_rng(3)
    m = rng.standard_normal((7, 5))
    f = tmp_path / "m.srm"
    write_matrix(f, m)
    back = read_matrix(f)
    assert back.shape == (7, 5)
    assert np.array_equal(back, m)


def test_vector_stored_as_column(tmp_path):
    f = tmp_path / "v.srm"
    write_matrix(f, np.arange(4.0))
    assert read_matrix(f).shape == (4, 1)


def test_empty_file_truncated(tmp_path):
    f = tmp_path / "empty.srm"
    f.write_bytes(b"")
    with pytest.raises(TruncatedFile):
        read_matrix(f)


def test_bad_magic(tmp_path):
    f = tmp_path / "bad.srm"
    f.write_bytes(b"NOTMAGIC" + b"\0" * 32)
    with pytest.raises(BadMagic):
        read_matrix(f)


def test_truncated_payload(tmp_path):
    f = tmp_path / "m.srm"
    write_matrix(f, np.ones((4, 4)))
    blob = f.read_bytes()
    f.write_bytes(blob[:-16])
    with pytest.raises(TruncatedFile):
        read_matrix(f)


def test_nonfinite_rejected(tmp_path):
    with pytest.raises(NonFinite):
        write_matrix(tmp_path / "nan.srm", np.array([[1.0, np.nan]]))


def test_csv_golden_layout(tmp_path):
    f = tmp_path / "m.csv"
    write_csv(f, np.array([[1.5, -2.0], [0.25, 3.0]]))
    assert f.read_text() == "1.5,-2.0\n0.25,3.0\n"


def test_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(11)
    m = rng.standard_normal((3, 4))
    f = tmp_path / "m.csv"
    write_csv(f, m, header=["a", "b", "c", "d"])
    back = read_csv(f, skip_header=True)
    assert np.array_equal(back, m)

import numpy as np
import pytest

from mdlan.core import (
    as_matrix, load_csv, load_matrix, load_mdm1, nrmse, save_csv, save_mdm1, top_svd,
)


def test_as_matrix_rejects_nonfinite_and_wrong_rank():
    with pytest.raises(ValueError, match="non-finite"):
        as_matrix([[1.0, np.nan]])
    with pytest.raises(ValueError, match="2-D"):
        as_matrix([1.0, 2.0])
    M = as_matrix([[1, 2], [3, 4]])
    assert M.dtype == np.float64 and M.flags.f_contiguous


def test_top_svd_diagonal():
    f = top_svd(np.diag([3.0, 1.0]), 2)
    np.testing.assert_allclose(f.S, [3, 1])
    np.testing.assert_allclose(f.U, np.eye(2))
    np.testing.assert_allclose(f.V, np.eye(2))


def test_top_svd_zero_matrix():
    np.testing.assert_array_equal(top_svd(np.zeros((4, 4)), 2).S, [0, 0])


def test_top_svd_rank3_reconstruction(rng):
    M = rng.uniform(size=(6, 3)) @ rng.uniform(size=(3, 5))
    f = top_svd(M, 5)
    assert f.S[3] <= 1e-8 and f.S[4] <= 1e-8
    assert np.linalg.norm(M - f.reconstruct()) <= 1e-8


def test_top_svd_factors_orthonormal_and_sorted(rng):
    f = top_svd(rng.normal(size=(9, 7)), 4)
    np.testing.assert_allclose(f.U.T @ f.U, np.eye(4), atol=1e-10)
    np.testing.assert_allclose(f.V.T @ f.V, np.eye(4), atol=1e-10)
    assert np.all(np.diff(f.S) <= 0) and np.all(f.S >= 0)
    # sign convention: largest-magnitude entry of each u is positive
    idx = np.argmax(np.abs(f.U), axis=0)
    assert np.all(f.U[idx, range(4)] > 0)


def test_top_svd_transpose_invariant(rng):
    M = rng.normal(size=(7, 5))
    np.testing.assert_allclose(top_svd(M, 5).S, top_svd(M.T, 5).S, atol=1e-10)


def test_top_svd_rejects_bad_k():
    with pytest.raises(ValueError):
        top_svd(np.ones((3, 2)), 3)
    with pytest.raises(ValueError):
        top_svd(np.ones((3, 2)), 0)
    with pytest.raises(ValueError):
        top_svd(np.array([[np.inf, 0.0]]), 1)


def test_nrmse_examples():
    X0 = np.array([[3.0, 0], [0, 4]])
    assert nrmse(X0, X0) == 0
    assert nrmse(np.eye(2), np.zeros((2, 2))) == 1
    assert nrmse(X0, np.array([[3.0, 0], [0, 0]])) == pytest.approx(0.8, abs=1e-15)


def test_nrmse_errors():
    with pytest.raises(ValueError, match="shape"):
        nrmse(np.eye(2), np.eye(3))
    with pytest.raises(ZeroDivisionError):
        nrmse(np.zeros((2, 2)), np.eye(2))


def test_mdm1_layout(tmp_path):
    M = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    p = tmp_path / "m.mdm1"
    save_mdm1(p, M)
    raw = p.read_bytes()
    assert raw[:4] == b"MDM1"
    assert int.from_bytes(raw[4:12], "little") == 2
    assert int.from_bytes(raw[12:20], "little") == 3
    np.testing.assert_array_equal(np.frombuffer(raw[20:], "<f8"), [1, 4, 2, 5, 3, 6])
    np.testing.assert_array_equal(load_mdm1(p), M)
    np.testing.assert_array_equal(load_matrix(p), M)


def test_mdm1_truncated_payload(tmp_path):
    p = tmp_path / "bad.mdm1"
    save_mdm1(p, np.ones((2, 2)))
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(ValueError, match="payload"):
        load_mdm1(p)


def test_csv_roundtrip_exact(tmp_path, rng):
    M = rng.normal(size=(4, 3))
    p = tmp_path / "m.csv"
    save_csv(p, M)
    np.testing.assert_array_equal(load_csv(p), M)
    np.testing.assert_array_equal(load_matrix(p), M)
    assert "," in p.read_text().splitlines()[0]

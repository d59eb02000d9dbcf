"""Dense matrices, truncated SVD and recovery metrics.

Matrices are plain ``numpy.ndarray`` objects of dtype float64 stored in
column-major (Fortran) order so that frame/observation columns are
contiguous.  :func:`as_matrix` is the single gate every solver path uses
to admit data.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MDM1_MAGIC = b"MDM1"


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return `a` as a finite 2-D float64 column-major array.

    Raises ValueError for non-2-D or non-finite input.
    """
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"{name} must have positive dimensions, got {m.shape}")
    if not np.all(np.isfinite(m)):
        bad = int(np.count_nonzero(~np.isfinite(m)))
        raise ValueError(f"{name} contains {bad} non-finite entries")
    return np.asfortranarray(m)


@dataclass(frozen=True)
class SvdFactors:
    U: np.ndarray  # m x k, orthonormal columns
    S: np.ndarray  # k, descending, >= 0
    V: np.ndarray  # n x k, orthonormal columns

    @property
    def k(self) -> int:
        return self.S.shape[0]

    def reconstruct(self) -> np.ndarray:
        return np.asfortranarray((self.U * self.S) @ self.V.T)


def canonicalize_signs(U: np.ndarray, V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flip (u_i, v_i) pairs so the largest-magnitude entry of each u_i is positive."""
    if U.shape[1] == 0:
        return U, V
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs, V * signs


def top_svd(M, k: int) -> SvdFactors:
    """The `k` leading singular triplets of `M` with canonical signs."""
    M = as_matrix(M)
    m, n = M.shape
    if not 1 <= k <= min(m, n):
        raise ValueError(f"k={k} out of range [1, {min(m, n)}] for a {m}x{n} matrix")
    U, S, Vt = np.linalg.svd(M, full_matrices=False)
    U, V = canonicalize_signs(U[:, :k], Vt[:k].T)
    S = np.maximum(S[:k], 0.0)
    return SvdFactors(np.asfortranarray(U), S.copy(), np.asfortranarray(V))


def nrmse(X0, X) -> float:
    """||X0 - X||_F / ||X0||_F."""
    X0 = np.asarray(X0, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if X0.shape != X.shape:
        raise ValueError(f"shape mismatch: {X0.shape} vs {X.shape}")
    ref = np.linalg.norm(X0)
    if ref == 0.0:
        raise ZeroDivisionError("nrmse undefined: reference matrix has zero Frobenius norm")
    return float(np.linalg.norm(X0 - X) / ref)


# -- serialization ----------------------------------------------------------

def save_mdm1(path, M) -> None:
    """Raw binary dump: b"MDM1", u64 rows, u64 cols, little-endian f64 column-major."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ValueError("MDM1 stores 2-D matrices only")
    with open(path, "wb") as fh:
        fh.write(MDM1_MAGIC)
        fh.write(struct.pack("<QQ", M.shape[0], M.shape[1]))
        fh.write(M.astype("<f8").tobytes(order="F"))


def load_mdm1(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:4] != MDM1_MAGIC:
        raise ValueError(f"{path}: not an MDM1 file")
    rows, cols = struct.unpack("<QQ", data[4:20])
    payload = data[20:]
    if len(payload) != 8 * rows * cols:
        raise ValueError(f"{path}: payload holds {len(payload)} bytes, expected {8 * rows * cols}")
    flat = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    return np.asfortranarray(flat.reshape((rows, cols), order="F"))


def save_csv(path, M) -> None:
    M = np.asarray(M, dtype=np.float64)
    np.savetxt(path, M, delimiter=",", fmt="%.17g")


def load_csv(path) -> np.ndarray:
    M = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    return np.asfortranarray(M)


def load_matrix(path) -> np.ndarray:
    """Load MDM1 or CSV, sniffing the magic bytes."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MDM1_MAGIC:
        return load_mdm1(path)
    return load_csv(path)

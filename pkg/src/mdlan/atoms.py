"""Rank-one and one-sparse atomic sets with their synthesis/analysis maps."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import as_matrix, top_svd


@dataclass
class AtomBasis:
    """Rank-one atoms u_i v_i^T (unit-norm factors) with coefficients alpha_i.

    Atoms are kept as factor matrices ``U`` (m x r) and ``V`` (n x r), never
    as dense m x n outer products.
    """

    U: np.ndarray
    V: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        self.U = np.asarray(self.U, dtype=np.float64).reshape(self.U.shape[0], -1)
        self.V = np.asarray(self.V, dtype=np.float64).reshape(self.V.shape[0], -1)
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64).ravel()
        r = self.coeffs.shape[0]
        if self.U.shape[1] != r or self.V.shape[1] != r:
            raise ValueError(
                f"atom count mismatch: U has {self.U.shape[1]}, V has {self.V.shape[1]}, "
                f"{r} coefficients"
            )

    @classmethod
    def empty(cls, m: int, n: int) -> "AtomBasis":
        return cls(np.zeros((m, 0)), np.zeros((n, 0)), np.zeros(0))

    @property
    def shape(self) -> tuple[int, int]:
        return self.U.shape[0], self.V.shape[0]

    def __len__(self) -> int:
        return self.coeffs.shape[0]

    def subset(self, mask) -> "AtomBasis":
        mask = np.asarray(mask, dtype=bool)
        return AtomBasis(self.U[:, mask], self.V[:, mask], self.coeffs[mask])


@dataclass
class SparseAtomSet:
    """One-sparse atoms: (row, col) coordinates with coefficients beta."""

    rows: np.ndarray
    cols: np.ndarray
    beta: np.ndarray
    shape: tuple[int, int] = field(default=(0, 0))

    def __len__(self) -> int:
        return self.beta.shape[0]

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape, order="F")
        out[self.rows, self.cols] = self.beta
        return out


def synthesize(basis: AtomBasis) -> np.ndarray:
    """F_Psi alpha = sum_i alpha_i u_i v_i^T."""
    return np.asfortranarray((basis.U * basis.coeffs) @ basis.V.T)


def analyze(basis: AtomBasis, M) -> np.ndarray:
    """Adjoint map: <M, u_i v_i^T> = u_i^T M v_i for every atom."""
    M = np.asarray(M, dtype=np.float64)
    if M.shape != basis.shape:
        raise ValueError(f"shape mismatch: matrix {M.shape}, atoms {basis.shape}")
    return np.einsum("ij,ij->j", basis.U, M @ basis.V)


def candidate_lowrank_atoms(G, r_hat: int | None = None) -> AtomBasis:
    """Atoms maximizing <G, psi> over unit rank-one matrices, strongest first.

    These are the leading singular pairs of G with the singular values as
    coefficients (Eckart-Young).
    """
    G = as_matrix(G, "G")
    if r_hat is None:
        r_hat = min(G.shape)
    f = top_svd(G, r_hat)
    return AtomBasis(f.U, f.V, f.S)


def sparse_from_matrix(E) -> SparseAtomSet:
    E = np.asarray(E, dtype=np.float64)
    # column-major traversal to match the storage layout
    cols, rows = np.nonzero(E.T)
    return SparseAtomSet(rows, cols, E[rows, cols].copy(), shape=E.shape)

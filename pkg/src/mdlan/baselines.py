"""Convex RPCA (nuclear norm + gamma * l1) by inexact augmented Lagrangian."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import as_matrix
from .solver import DecompositionResult, IterRecord, update_sparse


@dataclass
class RpcaConfig:
    gamma: float | None = None  # None -> 1 / sqrt(max(m, n))
    tol: float = 1e-7
    max_iter: int = 500
    mu1: float | None = None  # None -> 1.25 / ||Y||_2
    rho: float = 1.5

    def __post_init__(self):
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.rho > 1:
            raise ValueError("rho must exceed 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


def svt(M, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """Singular value soft-thresholding: prox of tau * ||.||_* at M.

    Returns the thresholded matrix and its (nonzero) singular values.
    """
    U, S, Vt = np.linalg.svd(M, full_matrices=False)
    S = np.maximum(S - tau, 0.0)
    r = int(np.count_nonzero(S))
    return np.asfortranarray((U[:, :r] * S[:r]) @ Vt[:r]), S[:r]


def rpca_ialm(Y, config: RpcaConfig | None = None) -> DecompositionResult:
    config = config or RpcaConfig()
    Y = as_matrix(Y, "Y")
    m, n = Y.shape
    gamma = config.gamma if config.gamma is not None else 1.0 / math.sqrt(max(m, n))
    X = np.zeros((m, n), order="F")
    E = np.zeros((m, n), order="F")
    U = np.zeros((m, n), order="F")
    y_norm = np.linalg.norm(Y)
    if y_norm == 0.0:
        return DecompositionResult(X, E, 0, 0, 1, "converged",
                                   [IterRecord(1, 0.0, 0, 0, gamma, 0.0, 0.0)])
    mu = float(config.mu1 if config.mu1 is not None else 1.25 / np.linalg.norm(Y, 2))
    history = []
    status = "max-iter"
    rank = 0
    for t in range(1, config.max_iter + 1):
        X, sv = svt(Y - E + U / mu, 1.0 / mu)
        rank = sv.shape[0]
        E = update_sparse(Y - X + U / mu, gamma / mu)
        R = Y - X - E
        U = U + mu * R
        feas = float(np.linalg.norm(R) / y_norm)
        objective = float(sv.sum() + gamma * np.abs(E).sum())
        history.append(IterRecord(t, feas, rank, int(np.count_nonzero(E)), gamma, mu, objective))
        mu *= config.rho
        if feas <= config.tol:
            status = "converged"
            break
    return DecompositionResult(X, E, rank, int(np.count_nonzero(E)), t, status, history)

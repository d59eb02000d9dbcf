"""Ideal codelengths (in bits) for low-rank atoms and sparse outliers.

Low-rank atoms are encoded column by column: every column is reshaped to
the image grid, passed through the causal bilinear predictor
(north + west - northwest, zero padded) and the quantized residual is
charged under a Laplace or Laplace-convolved-Gaussian (LG) density.
Sparse matrices pay a Laplace cost on the values plus log2(mn) bits per
nonzero position.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr

LOG2 = math.log(2.0)
QUANT_STEP = 1.0
LAPLACE_THETA_MIN = 1.0


@dataclass(frozen=True)
class PredictorMap:
    """Causal bilinear predictor on an h x w raster (row-major) grid.

    The residual operator W is unit lower triangular; it is applied as a
    stencil and inverted by 2-D prefix sums, never materialized unless
    :meth:`as_dense` is called.
    """

    h: int
    w: int

    def __post_init__(self):
        if self.h < 1 or self.w < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.h}x{self.w}")

    @property
    def size(self) -> int:
        return self.h * self.w

    def as_dense(self) -> np.ndarray:
        return prediction_residual(self, np.eye(self.size))


def build_predictor(h: int, w: int) -> PredictorMap:
    return PredictorMap(int(h), int(w))


def _as_grid(pmap: PredictorMap, a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.shape[0] != pmap.size:
        raise ValueError(f"length {a.shape[0]} does not match {pmap.h}x{pmap.w} grid")
    return a.reshape((pmap.h, pmap.w) + a.shape[1:])


def prediction_residual(pmap: PredictorMap, column) -> np.ndarray:
    """W @ column (also accepts an (h*w) x n matrix, one column per image)."""
    a = _as_grid(pmap, column)
    res = a.copy()
    res[1:] -= a[:-1]
    res[:, 1:] -= a[:, :-1]
    res[1:, 1:] += a[:-1, :-1]
    return res.reshape(np.shape(column))


def inverse_residual(pmap: PredictorMap, residual) -> np.ndarray:
    """Solve W a = residual (back-substitution == 2-D prefix sum)."""
    r = _as_grid(pmap, residual)
    return np.cumsum(np.cumsum(r, axis=0), axis=1).reshape(np.shape(residual))


# -- probability models -----------------------------------------------------

def quantize(x):
    """Round to the step-1 lattice (ties to even)."""
    return np.round(np.asarray(x, dtype=np.float64) / QUANT_STEP) * QUANT_STEP


def lg_logpdf(x, sigma: float, theta: float):
    """Natural log of the Laplace(0, theta) * Normal(0, sigma^2) density.

    Uses erfc(z) = 2 Phi(-sqrt(2) z) so both branches stay finite for any x.
    """
    x = np.asarray(x, dtype=np.float64)
    a = x / theta + log_ndtr(-x / sigma - sigma / theta)
    b = -x / theta + log_ndtr(x / sigma - sigma / theta)
    return (
        -math.log(4.0 * theta)
        + sigma**2 / (2.0 * theta**2)
        + math.log(2.0)
        + np.logaddexp(a, b)
    )


def lg_neglog2(x, sigma: float, theta: float):
    """-log2 p_LG(x | sigma^2, theta)."""
    if sigma <= 0 or theta <= 0:
        raise ValueError("sigma and theta must be positive")
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("lg_neglog2 requires finite x")
    out = -lg_logpdf(x, sigma, theta) / LOG2
    return float(out) if out.ndim == 0 else out


def laplace_neglog2(x, theta: float):
    x = np.asarray(x, dtype=np.float64)
    out = (np.abs(x) / theta + math.log(2.0 * theta)) / LOG2
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CodelengthModel:
    kind: str = "lg"  # "lg" or "laplace"
    sigma_floor: float = 0.5
    delta: float = QUANT_STEP

    def __post_init__(self):
        if self.kind not in ("lg", "laplace"):
            raise ValueError(f"unknown codelength model {self.kind!r}")
        if not self.sigma_floor > 0:
            raise ValueError("sigma_floor must be positive")
        if self.delta != QUANT_STEP:
            raise ValueError("quantization step is fixed at 1")

    def fit(self, R: np.ndarray) -> tuple[float, float]:
        """Estimate (sigma, theta) from an m x n residual matrix."""
        f = self.sigma_floor
        if self.kind == "laplace":
            # theta >= 1 keeps the peak mass p(0)*delta below 1, so zeros cost > 0 bits
            return 0.0, max(float(np.mean(np.abs(R))), f, LAPLACE_THETA_MIN)
        ddof = 1 if R.shape[0] > 1 else 0
        col_var = float(np.min(np.var(R, axis=0, ddof=ddof)))
        sigma2 = max(f * f, col_var)
        total_var = float(np.var(R, ddof=1 if R.size > 1 else 0))
        theta = 0.5 * math.sqrt(max(total_var - sigma2, f * f))
        return math.sqrt(sigma2), theta

    def neglog2(self, x, sigma: float, theta: float):
        if self.kind == "laplace":
            return laplace_neglog2(x, theta)
        return lg_neglog2(x, sigma, theta)

    def zero_cost(self) -> float:
        """Bits charged to a single quantized zero by an all-zero residual."""
        sigma, theta = self.fit(np.zeros((1, 1)))
        return float(self.neglog2(0.0, sigma, theta))


def _sum_neglog2(Q: np.ndarray, model: CodelengthModel, sigma: float, theta: float) -> float:
    # Q holds integers; price each distinct value once
    q = Q.astype(np.int64).ravel()
    lo, hi = int(q.min()), int(q.max())
    if hi - lo <= 4 * q.size:
        counts = np.bincount(q - lo)
        vals = np.nonzero(counts)[0]
        return float(np.dot(counts[vals], model.neglog2(vals + lo, sigma, theta)))
    vals, counts = np.unique(q, return_counts=True)
    return float(np.dot(counts, model.neglog2(vals, sigma, theta)))


def residual_codelength(R, model: CodelengthModel) -> float:
    """Bits for an already-quantized residual matrix under a fitted model."""
    R = np.asarray(R, dtype=np.float64)
    if not np.any(R):
        return R.size * model.zero_cost()
    sigma, theta = model.fit(R)
    return _sum_neglog2(R, model, sigma, theta)


def lowrank_atom_codelength(u, v, alpha: float, pmap: PredictorMap,
                            model: CodelengthModel) -> float:
    """Bits to describe the scaled atom alpha u v^T column by column.

    Column j of the residual is (alpha v_j) W u, so W u is computed once.
    """
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape[0] != pmap.size:
        raise ValueError(f"atom length {u.shape[0]} does not match {pmap.h}x{pmap.w} grid")
    Wu = prediction_residual(pmap, u)
    n_entries = u.shape[0] * v.shape[0]
    if alpha * np.max(np.abs(Wu), initial=0.0) * np.max(np.abs(v), initial=0.0) < 0.5:
        return n_entries * model.zero_cost()
    R = quantize(np.outer(Wu, alpha * v))
    return residual_codelength(R, model)


def atom_codelengths(basis, pmap: PredictorMap, model: CodelengthModel) -> np.ndarray:
    """Codelength of every atom in an AtomBasis."""
    return np.array([
        lowrank_atom_codelength(basis.U[:, i], basis.V[:, i], basis.coeffs[i], pmap, model)
        for i in range(len(basis))
    ])


def sparse_codelength(entries, theta: float, m: int, n: int) -> float:
    """theta * sum|beta| + k log2(mn)."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    beta = np.asarray(entries.beta, dtype=np.float64)
    return float(theta * np.sum(np.abs(beta)) + beta.shape[0] * math.log2(m * n))


def estimate_theta(E, support_only: bool = True) -> float:
    """Mean |E| over the nonzero support (Laplace MLE); 1 when E = 0."""
    E = np.asarray(E, dtype=np.float64)
    a = np.abs(E)
    if support_only:
        nz = a[a != 0]
        return float(nz.mean()) if nz.size else 1.0
    mean = float(a.mean())
    return mean if mean > 0 else 1.0

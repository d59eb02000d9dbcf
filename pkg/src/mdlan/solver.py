"""ADMM solver for the MDL atomic-norm decomposition Y = X + E."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .atoms import AtomBasis, candidate_lowrank_atoms, sparse_from_matrix, synthesize
from .codelength import (
    CodelengthModel,
    atom_codelengths,
    build_predictor,
    estimate_theta,
    sparse_codelength,
)
from .core import as_matrix

log = logging.getLogger(__name__)

RESCALE_MODES = ("pilot", "max", "none")
IMAGE_OUTLIER_SCALE = 8.0
FLAT_OUTLIER_SCALE = 24.0
# pilot scaling never pushes max|Y| outside [1, 1000] x outlier_scale
_PILOT_CLAMP = (1.0, 1000.0)

TRACE_FIELDS = ["iter", "feasibility", "rank_est", "nnz_est", "theta", "mu", "codelength_bits"]


@dataclass
class SolverConfig:
    mu1: float | None = None  # None -> 1.25 / ||Y||_2
    rho: float = 1.1
    theta1: float = 1.0
    tol: float = 1e-7
    max_iter: int = 500
    r_hat_cap: int | None = None
    model: CodelengthModel = field(default_factory=CodelengthModel)
    image_shape: tuple[int, int] | None = None
    theta_support_only: bool = True
    # Bits (atom cost) and squared data units (outlier cost) only balance at
    # one data scale, so Y is rescaled before solving and X, E mapped back.
    #   "pilot": a short convex RPCA run estimates the outlier magnitude
    #            sum(e^2)/sum|e|; Y is scaled so that lands on outlier_scale.
    #   "max":   max|Y| is scaled to working_range.
    #   "none":  native units.
    # Quantization (step 1), theta1 and mu1 all live in the rescaled units.
    rescale: str = "pilot"
    outlier_scale: float | None = None  # None -> 8 with image_shape, else 24
    working_range: float = 80.0

    def __post_init__(self):
        if not self.rho > 1:
            raise ValueError("rho must exceed 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not self.theta1 > 0:
            raise ValueError("theta1 must be positive")
        if self.mu1 is not None and not self.mu1 > 0:
            raise ValueError("mu1 must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.rescale not in RESCALE_MODES:
            raise ValueError(f"rescale must be one of {RESCALE_MODES}")
        if not self.working_range > 0:
            raise ValueError("working_range must be positive")
        if self.outlier_scale is not None and not self.outlier_scale > 0:
            raise ValueError("outlier_scale must be positive")


@dataclass
class IterRecord:
    iter: int
    feasibility: float
    rank_est: int
    nnz_est: int
    theta: float
    mu: float
    codelength_bits: float


@dataclass
class DecompositionResult:
    X: np.ndarray
    E: np.ndarray
    rank_est: int
    nnz_est: int
    iters: int
    status: str  # "converged" or "max-iter"
    history: list[IterRecord] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def write_trace(path, history) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_FIELDS)
        for rec in history:
            w.writerow([rec.iter, repr(float(rec.feasibility)), rec.rank_est, rec.nnz_est,
                        repr(float(rec.theta)), repr(float(rec.mu)),
                        repr(float(rec.codelength_bits))])


# -- elementwise operators ---------------------------------------------------

def soft_threshold(x, tau: float):
    """sign(x) * max(|x| - tau, 0)."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    x = np.asarray(x, dtype=np.float64)
    out = np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)
    return float(out) if out.ndim == 0 else out


def shrink_indicator(x, tau: float):
    """1 where x - tau >= 0, else 0."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    out = (np.asarray(x, dtype=np.float64) - tau >= 0).astype(np.int64)
    return int(out) if out.ndim == 0 else out


def update_sparse(Z, tau: float) -> np.ndarray:
    """argmin_E tau ||E||_1 + 1/2 ||E - Z||_F^2."""
    return np.asfortranarray(soft_threshold(np.asarray(Z, dtype=np.float64), tau))


def select_atoms(basis: AtomBasis, s, mu: float) -> np.ndarray:
    """Indicator v minimizing (1/mu) sum v_i s_i + 1/2 ||sum v_i alpha_i psi_i - G||_F^2.

    For orthogonal atoms taken from the SVD of G the objective separates:
    keeping atom i changes it by s_i/mu - alpha_i^2/2, so v_i = 1 iff
    alpha_i^2 / 2 >= s_i / mu.  Zero-coefficient atoms are never kept.
    """
    s = np.asarray(s, dtype=np.float64).ravel()
    if s.shape[0] != len(basis):
        raise ValueError(f"{s.shape[0]} codelengths for {len(basis)} atoms")
    if not mu > 0:
        raise ValueError("mu must be positive")
    a = basis.coeffs
    return ((a > 0) & (0.5 * a * a >= s / mu)).astype(np.int64)


def selection_objective(basis: AtomBasis, s, mu: float, v, G) -> float:
    """Evaluate the atom-selection cost of indicator `v` directly."""
    v = np.asarray(v, dtype=bool)
    X = synthesize(basis.subset(v))
    return float(np.dot(np.asarray(s)[v], np.ones(v.sum())) / mu
                 + 0.5 * np.linalg.norm(X - G) ** 2)


# -- ADMM ---------------------------------------------------------------------

def outlier_magnitude(Y) -> float:
    """sum(e^2) / sum|e| over the sparse part of a loose convex RPCA fit.

    Returns 0 when that sparse part is empty.
    """
    from .baselines import RpcaConfig, rpca_ialm  # baselines imports this module

    a = np.abs(rpca_ialm(Y, RpcaConfig(tol=1e-5)).E)
    total = a.sum()
    return float((a * a).sum() / total) if total > 0 else 0.0


def working_scale(Y: np.ndarray, config: SolverConfig) -> float:
    """Factor applied to Y before solving."""
    peak = float(np.max(np.abs(Y)))
    if config.rescale == "none" or peak == 0.0:
        return 1.0
    if config.rescale == "max":
        return config.working_range / peak
    target = config.outlier_scale
    if target is None:
        target = IMAGE_OUTLIER_SCALE if config.image_shape is not None else FLAT_OUTLIER_SCALE
    lo, hi = _PILOT_CLAMP[0] * target / peak, _PILOT_CLAMP[1] * target / peak
    mag = outlier_magnitude(Y)
    if mag <= 0.0:
        return hi
    return float(np.clip(target / mag, lo, hi))


def _codelengths(basis: AtomBasis, pmap, model, floor: float, mu: float) -> np.ndarray:
    """Atom codelengths, skipping atoms that cannot pass the selection rule.

    Every fitted model is at least as wide as the floor model, whose peak
    density bounds all others, so no atom costs less than the all-zero
    residual.  An atom with alpha^2/2 < floor/mu is rejected whatever its
    exact cost; it is assigned the floor.
    """
    s = np.full(len(basis), floor)
    live = 0.5 * basis.coeffs**2 >= floor / mu
    if live.any():
        s[live] = atom_codelengths(basis.subset(live), pmap, model)
    return s


def decompose(Y, config: SolverConfig | None = None) -> DecompositionResult:
    """Split Y into low-rank X (MDL-selected rank-one atoms) and sparse E."""
    config = config or SolverConfig()
    Y = as_matrix(Y, "Y")
    m, n = Y.shape
    if config.image_shape is not None:
        h, w = config.image_shape
        if h * w != m:
            raise ValueError(f"image shape {h}x{w} does not match {m} rows")
    else:
        h, w = m, 1
    pmap = build_predictor(h, w)
    r_hat = min(m, n) if config.r_hat_cap is None else min(config.r_hat_cap, m, n)

    X = np.zeros((m, n), order="F")
    E = np.zeros((m, n), order="F")
    U = np.zeros((m, n), order="F")
    y_norm = np.linalg.norm(Y)
    if y_norm == 0.0:
        rec = IterRecord(1, 0.0, 0, 0, config.theta1, 0.0, 0.0)
        return DecompositionResult(X, E, 0, 0, 1, "converged", [rec])
    scale = working_scale(Y, config)
    Y = Y * scale
    y_norm *= scale

    mu = float(config.mu1 if config.mu1 is not None else 1.25 / np.linalg.norm(Y, 2))
    floor = m * n * config.model.zero_cost()
    theta = config.theta1
    history: list[IterRecord] = []
    status = "max-iter"
    rank = 0
    for t in range(1, config.max_iter + 1):
        G = Y - E + U / mu
        basis = candidate_lowrank_atoms(G, r_hat)
        s = _codelengths(basis, pmap, config.model, floor, mu)
        v = select_atoms(basis, s, mu)
        chosen = basis.subset(v.astype(bool))
        X = synthesize(chosen)
        rank = len(chosen)

        E = update_sparse(Y - X + U / mu, theta / mu)
        R = Y - X - E
        U = U + mu * R
        feas = float(np.linalg.norm(R) / y_norm)
        nnz = int(np.count_nonzero(E))
        bits = float(np.dot(s, v))
        if nnz:
            bits += sparse_codelength(sparse_from_matrix(E), theta, m, n)
        history.append(IterRecord(t, feas, rank, nnz, theta, mu, bits))
        log.debug("iter %d feas %.3e rank %d nnz %d theta %.4g mu %.4g",
                  t, feas, rank, nnz, theta, mu)

        mu *= config.rho
        theta = estimate_theta(E, config.theta_support_only)
        if feas <= config.tol:
            status = "converged"
            break

    X = X / scale
    E = E / scale
    return DecompositionResult(X, E, rank, int(np.count_nonzero(E)), t, status, history)

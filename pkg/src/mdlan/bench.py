"""Synthetic benchmarks: planted low-rank + sparse data, trials and grids.

All randomness comes from numpy's counter-based Philox generator seeded
through ``SeedSequence``; normal variates are drawn by inverse CDF from
uniforms so the streams do not depend on a sampler implementation.
"""
from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import ndtri

from .baselines import RpcaConfig, rpca_ialm
from .core import nrmse
from .solver import SolverConfig, decompose

SUCCESS_EPS = 0.01
METHODS = ("mdlan", "rpca")

TRIAL_FIELDS = ["m", "n", "r", "p", "seed", "method", "lr_nrmse", "sp_nrmse",
                "rank_est", "nnz_est", "success", "status"]
GRID_FIELDS = ["method", "n", "p", "trials", "success_ratio", "mean_lr_nrmse",
               "mean_sp_nrmse", "mean_rank_est", "mean_nnz_est"]
CURVE_FIELDS = GRID_FIELDS + ["std_lr_nrmse", "std_sp_nrmse"]


def make_rng(*key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(k) for k in key])))


def uniforms(rng: np.random.Generator, size) -> np.ndarray:
    """Uniforms on the open interval (0, 1)."""
    return rng.random(size) + 2.0**-54


def normals(rng: np.random.Generator, size) -> np.ndarray:
    return ndtri(uniforms(rng, size))


def p_key(p: float) -> int:
    return int(round(p * 1_000_000))


@dataclass(frozen=True)
class SyntheticSpec:
    m: int
    n: int
    r: int
    p: float
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.r <= min(self.m, self.n):
            raise ValueError(f"rank {self.r} exceeds min({self.m}, {self.n})")
        if not 0 <= self.p < 1:
            raise ValueError("corruption ratio must lie in [0, 1)")


def gen_synthetic(spec: SyntheticSpec):
    """Planted X0 (rank r), E0 (round(p m n) N(0,1) entries) and Y = X0 + E0."""
    m, n, r = spec.m, spec.n, spec.r
    rng = make_rng(spec.seed, m, n, r, p_key(spec.p))
    B, _ = np.linalg.qr(normals(rng, (m, r)))
    C = 5.0 * uniforms(rng, (r, n))
    X0 = np.asfortranarray(B @ C)
    k = int(round(spec.p * m * n))
    E0 = np.zeros(m * n)
    if k:
        pos = rng.choice(m * n, size=k, replace=False)
        E0[pos] = normals(rng, k)
    E0 = E0.reshape((m, n), order="F")
    return X0, E0, np.asfortranarray(X0 + E0)


@dataclass
class BenchRecord:
    m: int
    n: int
    r: int
    p: float
    seed: int
    method: str
    lr_nrmse: float
    sp_nrmse: float
    rank_est: int
    nnz_est: int
    success: bool
    status: str
    wall_time: float = field(default=0.0, compare=False)

    def row(self) -> dict:
        d = asdict(self)
        d.pop("wall_time")
        d["success"] = int(d["success"])
        return d


def run_method(Y, method: str, solver_config: SolverConfig | None = None,
               rpca_config: RpcaConfig | None = None):
    if method == "mdlan":
        return decompose(Y, solver_config)
    if method == "rpca":
        return rpca_ialm(Y, rpca_config)
    raise ValueError(f"unknown method {method!r}")


def run_trial(spec: SyntheticSpec, method: str, solver_config: SolverConfig | None = None,
              rpca_config: RpcaConfig | None = None) -> BenchRecord:
    X0, E0, Y = gen_synthetic(spec)
    t0 = time.perf_counter()
    res = run_method(Y, method, solver_config, rpca_config)
    wall = time.perf_counter() - t0
    lr = nrmse(X0, res.X)
    sp = nrmse(E0, res.E) if np.any(E0) else math.nan
    return BenchRecord(spec.m, spec.n, spec.r, spec.p, spec.seed, method, lr, sp,
                       res.rank_est, res.nnz_est, lr < SUCCESS_EPS, res.status, wall)


def trial_seed(seed: int, n: int, p: float, trial: int) -> int:
    """Per-trial seed derived from the run seed and the cell coordinates."""
    return int(np.random.SeedSequence([seed, n, p_key(p), trial]).generate_state(1, np.uint64)[0])


def _run_task(args):
    m, r, n, p, method, seed, trial, solver_config, rpca_config = args
    spec = SyntheticSpec(m, n, r, p, trial_seed(seed, n, p, trial))
    return run_trial(spec, method, solver_config, rpca_config)


def default_jobs() -> int:
    return os.cpu_count() or 1


def run_cells(cells, jobs: int | None = None):
    """Run every trial of every cell; returns one record list per cell.

    A cell is (m, r, n, p, trials, method, seed, solver_config, rpca_config).
    Trials are independent tasks seeded from their coordinates, so the
    output never depends on `jobs` or scheduling.
    """
    jobs = default_jobs() if jobs is None else jobs
    tasks = [(m, r, n, p, meth, seed, t, sc, rc)
             for (m, r, n, p, trials, meth, seed, sc, rc) in cells for t in range(trials)]
    if jobs <= 1 or len(tasks) <= 1:
        flat = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            flat = list(pool.map(_run_task, tasks))
    out, i = [], 0
    for cell in cells:
        out.append(flat[i:i + cell[4]])
        i += cell[4]
    return out


def run_trials(m: int, n: int, r: int, p: float, trials: int, method: str, seed: int = 0,
               jobs: int | None = 1, solver_config=None, rpca_config=None) -> list[BenchRecord]:
    """Table-1 style: `trials` seeded runs of one method at one (n, p)."""
    return run_cells([(m, r, n, p, trials, method, seed, solver_config, rpca_config)], jobs)[0]


def _mean(xs) -> float:
    xs = [x for x in xs if not math.isnan(x)]
    return float(np.mean(xs)) if xs else math.nan


def _std(xs) -> float:
    xs = [x for x in xs if not math.isnan(x)]
    return float(np.std(xs)) if xs else math.nan


def summarize(method: str, n: int, p: float, records) -> dict:
    return {
        "method": method, "n": n, "p": p, "trials": len(records),
        "success_ratio": sum(r.success for r in records) / len(records),
        "mean_lr_nrmse": _mean([r.lr_nrmse for r in records]),
        "mean_sp_nrmse": _mean([r.sp_nrmse for r in records]),
        "mean_rank_est": _mean([r.rank_est for r in records]),
        "mean_nnz_est": _mean([r.nnz_est for r in records]),
        "std_lr_nrmse": _std([r.lr_nrmse for r in records]),
        "std_sp_nrmse": _std([r.sp_nrmse for r in records]),
    }


def _grid(m, r, n_values, p_values, trials, methods, seed, jobs, solver_config, rpca_config):
    if not n_values or not p_values or not methods:
        raise ValueError("grid axes must be nonempty")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    for meth in methods:
        if meth not in METHODS:
            raise ValueError(f"unknown method {meth!r}")
    cells = [(m, r, n, p, trials, meth, seed, solver_config, rpca_config)
             for meth in methods for n in n_values for p in p_values]
    results = run_cells(cells, jobs)
    return [summarize(c[5], c[2], c[3], recs) for c, recs in zip(cells, results)]


def phase_grid(m: int, r: int, n_values, p_values, trials: int, methods=METHODS,
               seed: int = 0, jobs: int | None = 1, solver_config=None, rpca_config=None):
    """Success ratio per (method, n, p) cell; rows ordered method, n, p."""
    return _grid(m, r, n_values, p_values, trials, methods, seed, jobs,
                 solver_config, rpca_config)


def sweep_p(m: int, n: int, r: int, p_values, trials: int, methods=METHODS, seed: int = 0,
            jobs: int | None = 1, solver_config=None, rpca_config=None):
    """NRMSE / rank / nnz curves against the corruption ratio at fixed n."""
    return _grid(m, r, [n], p_values, trials, methods, seed, jobs, solver_config, rpca_config)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_rows(path, fields, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for row in rows:
            w.writerow([_fmt(row[f]) for f in fields])


def read_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# -- F-measure and imaging stand-ins -------------------------------------------

def f_measure(mask, truth) -> float:
    """Harmonic mean of precision and recall of a binary mask."""
    mask = np.asarray(mask, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if mask.shape != truth.shape:
        raise ValueError(f"shape mismatch: {mask.shape} vs {truth.shape}")
    if not truth.any():
        raise ValueError("truth mask has no positives; F-measure undefined")
    tp = int(np.count_nonzero(mask & truth))
    if tp == 0:
        return 0.0
    precision = tp / int(np.count_nonzero(mask))
    recall = tp / int(np.count_nonzero(truth))
    return 2 * precision * recall / (precision + recall)


def square_path(h: int, w: int, frames: int, size: int):
    """Top-left corners of a square sweeping the frame on a fixed path."""
    out = []
    for j in range(frames):
        t = j / max(frames - 1, 1)
        col = int(round(t * (w - size)))
        row = int(round((h - size) * (0.5 + 0.35 * math.sin(2 * math.pi * t))))
        out.append((row, col))
    return out


def smooth_background(h: int, w: int, rng: np.random.Generator, texture: float = 12.0):
    rr, cc = np.mgrid[0:h, 0:w]
    bg = 60.0 + 70.0 * rr / max(h - 1, 1) + 40.0 * cc / max(w - 1, 1)
    return bg + texture * (uniforms(rng, (h, w)) - 0.5)


def gen_synthetic_video(h: int, w: int, frames: int, square_size: int = 8,
                        illum_drift: float = 0.0, seed: int = 0):
    """Static background + moving bright square, frames stacked as columns.

    Returns (Y, truth) with Y of shape (h*w, frames), integer valued in
    [0, 255] so it survives an 8-bit file round trip, and truth the boolean
    foreground mask of the same shape.
    """
    if square_size < 0 or square_size > min(h, w):
        raise ValueError("square does not fit in the frame")
    rng = make_rng(seed, h, w, frames, square_size)
    bg = smooth_background(h, w, rng)
    Y = np.empty((h * w, frames), order="F")
    truth = np.zeros((h * w, frames), dtype=bool, order="F")
    path = square_path(h, w, frames, square_size)
    for j in range(frames):
        gain = 1.0 + illum_drift * math.sin(2 * math.pi * j / frames)
        frame = gain * bg
        m = np.zeros((h, w), dtype=bool)
        if square_size:
            r0, c0 = path[j]
            m[r0:r0 + square_size, c0:c0 + square_size] = True
            frame = np.where(m, 250.0, frame)
        Y[:, j] = np.clip(np.round(frame), 0, 255).ravel()
        truth[:, j] = m.ravel()
    return Y, truth


def face_image(h: int, w: int) -> np.ndarray:
    """A smooth face-like intensity pattern: elliptic head with darker features."""
    rr, cc = np.mgrid[0:h, 0:w]
    y = (rr - (h - 1) / 2) / (h / 2)
    x = (cc - (w - 1) / 2) / (w / 2)
    head = np.exp(-((x / 0.75) ** 2 + (y / 0.95) ** 2) ** 2)
    eyes = sum(np.exp(-(((x - ex) / 0.12) ** 2 + ((y + 0.25) / 0.07) ** 2)) for ex in (-0.3, 0.3))
    mouth = np.exp(-((x / 0.3) ** 2 + ((y - 0.45) / 0.06) ** 2))
    return 40.0 + 170.0 * head - 60.0 * eyes - 50.0 * mouth


def gen_synthetic_faces(h: int, w: int, frames: int, shadow_frac: float = 0.3,
                        seed: int = 0):
    """Rank-1 face stack under varying illumination with planted shadow patches.

    Returns (Y, base, shadow) where base is the clean rank-1 stack and
    shadow = Y - base is nonzero exactly on the planted rectangles.
    """
    rng = make_rng(seed, h, w, frames)
    face = face_image(h, w)
    gains = 0.7 + 0.5 * uniforms(rng, frames)
    base = np.asfortranarray(np.outer(face.ravel(), gains))
    Y = base.copy()
    for j in range(frames):
        if uniforms(rng, 1)[0] >= shadow_frac:
            continue
        ph = int(h * (0.2 + 0.2 * uniforms(rng, 1)[0]))
        pw = int(w * (0.2 + 0.2 * uniforms(rng, 1)[0]))
        r0 = int(uniforms(rng, 1)[0] * (h - ph))
        c0 = int(uniforms(rng, 1)[0] * (w - pw))
        frame = Y[:, j].reshape(h, w)
        frame[r0:r0 + ph, c0:c0 + pw] *= 0.35
    return Y, base, np.asfortranarray(Y - base)


def shadow_capture(E, shadow) -> float:
    """Fraction of planted shadow mass sum|shadow| that E recovers.

    Each planted pixel contributes min(|E|, |shadow|) when E has the same
    sign there, so overshooting or landing elsewhere earns nothing.
    """
    E = np.asarray(E, dtype=np.float64)
    shadow = np.asarray(shadow, dtype=np.float64)
    if E.shape != shadow.shape:
        raise ValueError(f"shape mismatch: {E.shape} vs {shadow.shape}")
    total = float(np.abs(shadow).sum())
    if total == 0:
        raise ValueError("no planted shadow mass")
    hit = np.sign(E) == np.sign(shadow)
    return float(np.sum(np.minimum(np.abs(E), np.abs(shadow)) * hit) / total)


def add_salt_pepper(Y, density: float, rng: np.random.Generator) -> np.ndarray:
    """Replace a `density` fraction of entries by 0 or 255 with equal odds."""
    Y = np.array(Y, dtype=np.float64, order="F")
    hit = uniforms(rng, Y.shape) < density
    salt = uniforms(rng, Y.shape) < 0.5
    Y[hit & salt] = 255.0
    Y[hit & ~salt] = 0.0
    return Y

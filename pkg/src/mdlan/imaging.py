"""Image stacks as matrices: 8-bit PGM/PPM frames become columns.

Frames are vectorized in raster order (row-major), which is the order the
causal predictor's north/west stencil assumes.  Pillow does the PNM
parsing; this module only enforces the 8-bit P5/P6 contract.
"""
from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .core import save_mdm1
from .solver import DecompositionResult, SolverConfig, decompose

PNM_MAGIC = {b"P5": 1, b"P6": 3}
DEFAULT_PATTERNS = ("*.pgm", "*.ppm")


@dataclass
class ImageStack:
    h: int
    w: int
    channels: int
    data: list[np.ndarray]  # one (h*w) x frames matrix per channel
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.channels not in (1, 3):
            raise ValueError("channels must be 1 or 3")
        if len(self.data) != self.channels:
            raise ValueError(f"{len(self.data)} matrices for {self.channels} channels")
        shapes = {d.shape for d in self.data}
        if len(shapes) != 1 or next(iter(shapes))[0] != self.h * self.w:
            raise ValueError(f"channel matrices must all be {self.h * self.w} x frames")

    @property
    def frames(self) -> int:
        return self.data[0].shape[1]

    def frame(self, j: int) -> np.ndarray:
        """Frame j as an h x w (or h x w x 3) array."""
        planes = [d[:, j].reshape(self.h, self.w) for d in self.data]
        return planes[0] if self.channels == 1 else np.stack(planes, axis=-1)


def read_pnm(path) -> np.ndarray:
    """One 8-bit binary PGM (h x w) or PPM (h x w x 3) as float64."""
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic not in PNM_MAGIC:
        raise ValueError(f"{path}: unsupported format (need binary P5/P6)")
    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            raise ValueError(f"{path}: only 8-bit maxval 255 images are supported")
        return np.asarray(im, dtype=np.float64)


def write_pnm(path, frame) -> None:
    frame = np.asarray(frame)
    if frame.ndim not in (2, 3) or (frame.ndim == 3 and frame.shape[2] != 3):
        raise ValueError(f"cannot write frame of shape {frame.shape}")
    pix = np.clip(np.round(frame), 0, 255).astype(np.uint8)
    Image.fromarray(pix).save(path, format="PPM")


def list_frames(directory, pattern: str | None = None) -> list[Path]:
    d = Path(directory)
    if not d.is_dir():
        raise FileNotFoundError(f"{d}: not a directory")
    patterns = (pattern,) if pattern else DEFAULT_PATTERNS
    files = sorted({f for pat in patterns for f in d.glob(pat) if f.is_file()},
                   key=lambda f: f.name)
    if not files:
        raise FileNotFoundError(f"{d}: no frames matching {' or '.join(patterns)}")
    return files


def load_stack(directory, pattern: str | None = None) -> ImageStack:
    files = list_frames(directory, pattern)
    first = read_pnm(files[0])
    h, w = first.shape[:2]
    channels = 1 if first.ndim == 2 else 3
    data = [np.empty((h * w, len(files)), order="F") for _ in range(channels)]
    for j, f in enumerate(files):
        img = first if j == 0 else read_pnm(f)
        if img.shape != first.shape:
            raise ValueError(f"{f}: size {img.shape[1]}x{img.shape[0]} differs from "
                             f"{w}x{h} of {files[0].name}")
        planes = [img] if channels == 1 else [img[..., c] for c in range(3)]
        for c, plane in enumerate(planes):
            data[c][:, j] = plane.ravel()
    return ImageStack(h, w, channels, data, [f.name for f in files])


def save_stack(stack: ImageStack, directory, prefix: str = "frame") -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    ext = "pgm" if stack.channels == 1 else "ppm"
    paths = []
    for j in range(stack.frames):
        p = d / f"{prefix}_{j:04d}.{ext}"
        write_pnm(p, stack.frame(j))
        paths.append(p)
    return paths


def stack_from_matrix(M, h: int, w: int) -> ImageStack:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != h * w:
        raise ValueError(f"matrix rows {M.shape[0]} do not match {h}x{w}")
    return ImageStack(h, w, 1, [np.asfortranarray(M)])


def _solve(args):
    Y, config = args
    return decompose(Y, config)


def decompose_stack(stack: ImageStack, config: SolverConfig | None = None,
                    jobs: int = 1) -> dict[int, DecompositionResult]:
    """Decompose every channel independently on the true image geometry."""
    config = config or SolverConfig()
    if config.image_shape is None:
        config = dataclasses.replace(config, image_shape=(stack.h, stack.w))
    elif tuple(config.image_shape) != (stack.h, stack.w):
        raise ValueError(f"config image_shape {config.image_shape} does not match "
                         f"stack {stack.h}x{stack.w}")
    tasks = [(Y, config) for Y in stack.data]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            results = list(pool.map(_solve, tasks))
    else:
        results = [_solve(t) for t in tasks]
    return dict(enumerate(results))


def foreground_mask(E, kappa: float = 0.0) -> np.ndarray:
    """|E| > kappa (strict)."""
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    return np.abs(np.asarray(E)) > kappa


def save_components(result: DecompositionResult, shape, outdir) -> None:
    """low_####.pgm (clamped, rounded X), sparse_####.pgm (|E| scaled to 255), X/E dumps."""
    h, w = shape
    X, E = result.X, result.E
    if X.shape[0] != h * w:
        raise ValueError(f"{X.shape[0]} rows do not match {h}x{w}")
    d = Path(outdir)
    d.mkdir(parents=True, exist_ok=True)
    peak = float(np.max(np.abs(E), initial=0.0))
    gain = 255.0 / peak if peak > 0 else 0.0
    for j in range(X.shape[1]):
        write_pnm(d / f"low_{j:04d}.pgm", X[:, j].reshape(h, w))
        write_pnm(d / f"sparse_{j:04d}.pgm", (np.abs(E[:, j]) * gain).reshape(h, w))
    save_mdm1(d / "X.mdm1", X)
    save_mdm1(d / "E.mdm1", E)

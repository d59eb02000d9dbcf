"""Synthetic video (F-measure) and planted-shadow faces, both methods."""
import argparse

import numpy as np

from mdlan.baselines import rpca_ialm
from mdlan.bench import (
    add_salt_pepper, f_measure, gen_synthetic_faces, gen_synthetic_video, make_rng, shadow_capture,
)
from mdlan.core import nrmse
from mdlan.imaging import foreground_mask
from mdlan.solver import SolverConfig, decompose


def solve(method, Y, shape):
    return decompose(Y, SolverConfig(image_shape=shape)) if method == "mdlan" else rpca_ialm(Y)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--face-trials", type=int, default=5)
    args = ap.parse_args()

    for drift, kappa in ((0.0, 0.0), (0.1, 1.0)):
        Y, truth = gen_synthetic_video(48, 64, 40, 8, drift, args.seed)
        for method in ("mdlan", "rpca"):
            res = solve(method, Y, (48, 64))
            f = f_measure(foreground_mask(res.E, kappa), truth)
            print(f"video drift={drift:.1f} kappa={kappa:.0f} {method:>5}: F {f:.3f}, rank {res.rank_est}")

    for method in ("mdlan", "rpca"):
        caps, errs = [], []
        for t in range(args.face_trials):
            Y, base, shadow = gen_synthetic_faces(48, 42, 30, 0.3, args.seed + t)
            caps.append(shadow_capture(solve(method, Y, (48, 42)).E, shadow))
            noisy = add_salt_pepper(Y, 0.2, make_rng(args.seed + t, 1))
            errs.append(nrmse(base, solve(method, noisy, (48, 42)).X))
        print(f"faces {method:>5}: shadow captured {np.mean(caps):.3f}, "
              f"salt-and-pepper NRMSE {np.mean(errs):.4f}")


if __name__ == "__main__":
    main()

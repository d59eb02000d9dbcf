"""NRMSE, rank and sparsity estimates against the corruption ratio (m=108, n=100, r=4)."""
import argparse

from mdlan.bench import CURVE_FIELDS, sweep_p, write_rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--jobs", type=int, default=None)
    ap.add_argument("--out", default="curves.csv")
    args = ap.parse_args()

    ps = [0.05, 0.15, 0.25, 0.35, 0.45, 0.55]
    rows = sweep_p(108, 100, 4, ps, args.trials, seed=args.seed, jobs=args.jobs)
    write_rows(args.out, CURVE_FIELDS, rows)
    print(f"{'method':>6} {'p':>5} {'lr NRMSE':>10} {'sp NRMSE':>10} {'rank':>6} {'nnz':>8} {'k':>6}")
    for r in rows:
        print(f"{r['method']:>6} {r['p']:5.2f} {r['mean_lr_nrmse']:10.2e} {r['mean_sp_nrmse']:10.2e} "
              f"{r['mean_rank_est']:6.1f} {r['mean_nnz_est']:8.0f} {round(r['p'] * 10800):6d}")


if __name__ == "__main__":
    main()

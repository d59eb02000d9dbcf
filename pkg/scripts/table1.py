"""Low-rank / sparse NRMSE of both methods at p = 0.05 and 0.5 (m=108, n=100, r=4)."""
import argparse

import numpy as np

from mdlan.bench import TRIAL_FIELDS, run_trials, write_rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="table1_trials.csv")
    args = ap.parse_args()

    rows = []
    print(f"{'p':>5} {'method':>6} {'low-rank NRMSE':>22} {'sparse NRMSE':>22} {'rank':>5}")
    for p in (0.05, 0.5):
        for method in ("mdlan", "rpca"):
            recs = run_trials(108, 100, 4, p, args.trials, method, args.seed, args.jobs)
            rows += [r.row() for r in recs]
            lr = np.array([r.lr_nrmse for r in recs])
            sp = np.array([r.sp_nrmse for r in recs])
            rank = np.mean([r.rank_est for r in recs])
            print(f"{p:5.2f} {method:>6} {lr.mean():11.2e} +- {lr.std():8.1e} "
                  f"{sp.mean():11.2e} +- {sp.std():8.1e} {rank:5.1f}")
    write_rows(args.out, TRIAL_FIELDS, rows)


if __name__ == "__main__":
    main()

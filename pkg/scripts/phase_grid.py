"""Success-ratio grid over (n, p) at m = 900, r = 2, printed as one table per method."""
import argparse

from mdlan.bench import GRID_FIELDS, phase_grid, write_rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=int, default=900)
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=None)
    ap.add_argument("--out", default="grid.csv")
    args = ap.parse_args()

    ns = [10, 20, 30, 40, 50]
    ps = [0.01, 0.11, 0.21, 0.31, 0.41]
    rows = phase_grid(args.m, 2, ns, ps, args.trials, seed=args.seed, jobs=args.jobs)
    write_rows(args.out, GRID_FIELDS, rows)
    table = {(r["method"], r["n"], r["p"]): r["success_ratio"] for r in rows}
    for method in ("mdlan", "rpca"):
        print(f"\n{method}: success ratio (rows n, columns p)")
        print("  n  " + " ".join(f"{p:5.2f}" for p in ps))
        for n in ns:
            print(f"{n:3d}  " + " ".join(f"{table[(method, n, p)]:5.1f}" for p in ps))


if __name__ == "__main__":
    main()

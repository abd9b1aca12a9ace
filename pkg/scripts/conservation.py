"""Max drift of every quadratic Killing polynomial along random geodesics of a rank-one space.

    python3 scripts/conservation.py cpm:2 --geodesics 20 --csv traj.csv
"""
import argparse
import csv

import numpy as np

from killing_lab import indecomposability_report, resolve
from killing_lab.taylor_flow import evaluate_many, geodesic_flow, normalized, random_start, tensor_poly


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("space")
    ap.add_argument("--geodesics", type=int, default=20)
    ap.add_argument("--s-max", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--csv", help="dump the first trajectory with the first Killing polynomial")
    args = ap.parse_args()
    M = resolve(args.space)
    _, sol = indecomposability_report(M)
    Ks = [normalized(tensor_poly(T)) for T in sol.tensors()]
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for g in range(args.geodesics):
        X0, P0 = random_start(M, rng)
        ts, Y = geodesic_flow(M, X0, P0, args.s_max)
        for j, K in enumerate(Ks):
            v = evaluate_many(K, Y[:, :M.n], Y[:, M.n:])
            worst = max(worst, float(np.max(np.abs(v - v[0]))))
            if args.csv and g == 0 and j == 0:
                with open(args.csv, "w", newline="") as fh:
                    w = csv.writer(fh)
                    w.writerow(["s"] + [f"X{i}" for i in range(M.n)] + [f"P{i}" for i in range(M.n)] + ["K"])
                    for s, y, k in zip(ts, Y, v):
                        w.writerow([f"{s:.6f}"] + [f"{c:.15e}" for c in y] + [f"{k:.15e}"])
    print(f"{args.space}: {len(Ks)} Killing polynomials, {args.geodesics} geodesics, max deviation {worst:.3e}")


if __name__ == "__main__":
    main()

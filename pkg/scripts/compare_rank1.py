"""Compare the rank-one reduced system with the full top-slot system by exact mutual membership.

    python3 scripts/compare_rank1.py cpm:2 hpm:2 --ranks 2 3
"""
import argparse
import time

from killing_lab import compare_rank1_topslot, resolve


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("spaces", nargs="*", default=["cpm:2", "hpm:2"])
    ap.add_argument("--ranks", nargs="+", type=int, default=[2, 3])
    ap.add_argument("--budget", type=float, default=1e8, help="assembly cost above which lattice checks are used")
    args = ap.parse_args()
    for sid in args.spaces:
        for d in args.ranks:
            t0 = time.perf_counter()
            r = compare_rank1_topslot(resolve(sid), d, budget=args.budget)
            print(f"{sid} d={d}: rank-one {r.rank1_dim}, top-slot {r.topslot_dim}, equal={r.equal}, "
                  f"assembled {r.assembled_levels}, lattice {r.verified_levels} on {r.generators} generators, "
                  f"{time.perf_counter() - t0:.0f} s", flush=True)


if __name__ == "__main__":
    main()

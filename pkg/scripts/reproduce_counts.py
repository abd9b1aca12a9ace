"""Print unknown/solution/decomposable/indecomposable counts for quadratic Killing tensors.

    python3 scripts/reproduce_counts.py sphere:3 cpm:2 hpm:2 hpm:3 op2
"""
import argparse
import resource
import time

from killing_lab import indecomposability_report, resolve


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("spaces", nargs="*", default=["sphere:3", "cpm:2", "hpm:2", "hpm:3", "op2"])
    args = ap.parse_args()
    print(f"{'space':10} {'n':>3} {'unknowns':>9} {'solutions':>9} {'decomp':>7} {'indecomp':>8} {'sec':>7}")
    for sid in args.spaces:
        t0 = time.perf_counter()
        rep, _ = indecomposability_report(resolve(sid))
        print(f"{sid:10} {rep.n:3d} {rep.unknown_dim:9d} {rep.solution_dim:9d} {rep.decomposable_dim:7d} "
              f"{rep.indecomposable_dim:8d} {time.perf_counter() - t0:7.1f}", flush=True)
    peak = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 2 ** 20
    print(f"peak memory {peak:.2f} GB")


if __name__ == "__main__":
    main()

"""Compare the numba and numpy distance-field kernels.

    python3 benchmarks/bench_kernels.py [--sizes 8 16 32 64] [--repeats 20]
"""

import argparse

from babybench.bench import run_kernel_bench

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 16, 32, 64])
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args()
    for line in run_kernel_bench(args.sizes, args.repeats):
        print(line)

"""Compare the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--iterations N] [--csv PATH]

Prints one row per (kernel, backend) and the compiled/fallback speedup.
Without a built extension only the fallback rows appear.
"""
from __future__ import annotations

import argparse
from collections import defaultdict
from pathlib import Path

from fedblockhealth.bench import bench_kernels, rows_csv


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--iterations", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--csv", help="also write the raw rows as CSV")
    args = parser.parse_args(argv)

    rows = list(bench_kernels(args.iterations, args.seed))
    if args.csv:
        Path(args.csv).write_text(rows_csv(rows), encoding="utf-8")
    by_op = defaultdict(dict)
    for r in rows:
        by_op[r.operation][r.backend] = r
    print(f"{'kernel':<14} {'backend':<8} {'per call':>12}  speedup")
    for op, backends in by_op.items():
        base = backends.get("python")
        for name, r in sorted(backends.items()):
            speed = f"{base.per_op_us / r.per_op_us:7.1f}x" if base and name != "python" else ""
            print(f"{op:<14} {name:<8} {r.per_op_us:>9.1f} us  {speed}")


if __name__ == "__main__":
    main()

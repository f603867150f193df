#!/usr/bin/env python3
"""Honest proof size against n for the LR protocols, and against string length for
the equality protocols. Prints a table and writes results/proofsize.csv."""
import argparse
import math
import sys
from pathlib import Path

from lrdip.cli import PROOFSIZE_FIELDS, RunConfig, write_table, proofsize_rows


def doubling(a, b):
    out = []
    while a <= b:
        out.append(a)
        a *= 2
    return tuple(out)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-n", type=int, default=1 << 14)
    ap.add_argument("--out", type=Path, default=Path("results/proofsize.csv"))
    args = ap.parse_args(argv)
    rows = []
    for proto, sizes in (("double", doubling(256, args.max_n)), ("tradeoff", doubling(256, args.max_n)),
                         ("eq2", (8, 16, 32, 64)), ("selfreduce", (4, 8, 16))):
        rows += proofsize_rows(RunConfig(subcommand="proofsize", protocol=proto, sizes=sizes))
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_table(PROOFSIZE_FIELDS, rows, str(args.out))
    print(f"{'protocol':<11}{'n':>8}{'rounds':>8}{'max bits':>10}{'/loglog n':>11}")
    for p, n, rounds, mb, *_ in rows:
        ll = math.log2(math.log2(n)) if n > 2 else 1
        print(f"{p:<11}{n:>8}{rounds:>8}{mb:>10}{mb / ll:>11.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Acceptance-rate sweep for every protocol family against the strategy library.

Writes one CSV per protocol into --outdir. Default sizes match the acceptance
run for double; the others are kept small enough for one CPU.
"""
import argparse
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from lrdip.adversary import SweepConfig, soundness_sweep, write_csv


@dataclass
class Plan:
    outdir: Path = Path("results")
    trials: int = 2000
    double_sizes: tuple = (256, 1024, 4096)
    tradeoff_sizes: tuple = (256, 1024)
    eq2_lengths: tuple = (8, 16)
    selfreduce_lengths: tuple = (16,)
    selfreduce_trials: int = 500
    instance_seeds: tuple = (0, 1)
    cases: list = field(default_factory=list)

    def __post_init__(self):
        self.cases = [
            SweepConfig("double", self.double_sizes, self.instance_seeds, self.trials),
            SweepConfig("tradeoff", self.tradeoff_sizes, self.instance_seeds, self.trials),
            SweepConfig("eq2", self.eq2_lengths, self.instance_seeds, self.trials),
            SweepConfig("selfreduce", self.selfreduce_lengths, (0,), self.selfreduce_trials),
        ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", type=Path, default=Path("results"))
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--only", help="run a single protocol family")
    args = ap.parse_args(argv)
    plan = Plan(args.outdir, args.trials)
    plan.outdir.mkdir(parents=True, exist_ok=True)
    flagged = 0
    for cfg in plan.cases:
        if args.only and cfg.protocol != args.only:
            continue
        t0 = time.time()
        rows = soundness_sweep(cfg, log=lambda m: print(m, file=sys.stderr))
        out = plan.outdir / f"soundness_{cfg.protocol}.csv"
        write_csv(rows, out)
        flagged += sum(r.flag != "ok" for r in rows)
        print(f"{cfg.protocol}: {len(rows)} rows -> {out} ({time.time() - t0:.0f}s)")
    print(f"rows above bound + CI: {flagged}")
    return 1 if flagged else 0


if __name__ == "__main__":
    sys.exit(main())

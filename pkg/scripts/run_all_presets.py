"""Run every preset (or the ones named) into runs/<preset>/ and print a status table."""

import argparse
import sys
import time
from pathlib import Path

from besovlab.cli import main as cli_main
from besovlab.presets import PRESETS

STATUS = {0: "pass", 1: "FAIL", 2: "config error", 3: "blow-up"}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("presets", nargs="*", default=[p for p in PRESETS if p != "nonlinear-decay-2d"])
    parser.add_argument("--out", default="runs")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    worst = 0
    for pid in args.presets:
        start = time.perf_counter()
        code = cli_main(["run", "--preset", pid, "--seed", str(args.seed), "--out", str(Path(args.out) / pid)])
        print(f"== {pid}: {STATUS.get(code, code)} in {time.perf_counter() - start:.1f}s\n")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())

"""The 512^2 small-data run, optionally with a different amplitude or seed.

Takes about ten minutes on one core.  Example:
    python3 scripts/run_nonlinear_decay.py --target-x 0.1 --out runs/nl-x0.1
"""

import argparse
import json
import sys
import tempfile
from pathlib import Path

from besovlab.cli import main as cli_main


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--target-x", type=float, default=0.05, help="size of the data in the critical norm")
    parser.add_argument("--n", type=int, default=512)
    parser.add_argument("--L", type=float, default=256.0)
    parser.add_argument("--support-radius", type=float, help="radius holding the data; must stay below L/4")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="runs/nonlinear-decay-2d")
    args = parser.parse_args(argv)
    cfg = {
        "preset": "nonlinear-decay-2d",
        "seed": args.seed,
        "out": args.out,
        "grid": {"n": args.n, "L": args.L},
        "options": {"target_X": args.target_x},
    }
    if args.support_radius is not None:
        cfg["options"]["support_radius"] = args.support_radius
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(cfg, fh)
    try:
        return cli_main(["-v", "run", "--config", fh.name])
    finally:
        Path(fh.name).unlink()


if __name__ == "__main__":
    sys.exit(main())

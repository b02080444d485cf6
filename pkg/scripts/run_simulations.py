#!/usr/bin/env python3
"""Run the four simulation studies with their default protocols and drop
CSV tables + manifests under an output directory.

Usage: python scripts/run_simulations.py [--out results] [--seed 1] [--threads 4]
"""

import argparse
import sys
from pathlib import Path

from auprcopt.cli import main as cli_main


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    out = Path(args.out)

    runs = [
        ["simulate", "bias", "--pi", "0.1", "--pi0", "0.2", "--seed", args.seed,
         "--out", out / "bias_pi0_020"],
        ["simulate", "bias", "--pi", "0.1", "--pi0", "0.02", "--seed", args.seed,
         "--out", out / "bias_pi0_002"],
        ["simulate", "interp", "--dist", "binormal", "--seed", args.seed,
         "--out", out / "interp"],
        ["simulate", "ema", "--betas", "0.5,0.1,0.01", "--iters", "300",
         "--seed", args.seed, "--out", out / "ema"],
        ["simulate", "stability", "--sizes", "500,1000,2000,4000",
         "--perturbations", "20", "--seed", args.seed, "--out", out / "stability"],
    ]
    for argv in runs:
        argv = [str(a) for a in argv] + ["--threads", str(args.threads), "--json"]
        print("::", " ".join(argv))
        code = cli_main(argv)
        if code != 0:
            return code
    print(f"all tables under {out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())

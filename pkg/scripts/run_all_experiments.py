#!/usr/bin/env python3
"""Rerun the three packaged imaging experiments in one go.

Equivalent to `superlens-imaging experiment 1|2|3` in sequence; outputs
land under --out (default ./out) as exp1/, exp2/, exp3/.
"""

import argparse
import sys
import time

from superlens_imaging.config import build_config
from superlens_imaging.errors import SuperlensError
from superlens_imaging.experiments import EXPERIMENTS, run_experiment


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fast", action="store_true",
                    help="coarse grids (I=33, N_f=8, M=32) for a quick look")
    ap.add_argument("--out", default="out", metavar="DIR")
    args = ap.parse_args(argv)

    base = build_config(fast=args.fast)
    try:
        for exp_id in sorted(EXPERIMENTS):
            t0 = time.time()
            result = run_experiment(exp_id, base, out_root=args.out)
            for row in result["rows"]:
                print(f"exp{exp_id} [{row['label']}]: chose "
                      f"N={row['chosen_N']}, rel error "
                      f"{row['rel_error_at_chosen']:.3f}")
            print(f"exp{exp_id}: {time.time() - t0:.1f}s -> {result['dir']}")
    except SuperlensError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())

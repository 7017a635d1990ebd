"""Print the HGR-KB value over a grid of kernel degrees for a synthetic relation."""
import argparse

import numpy as np

from hgrkb import degree_scan
from hgrkb.correlation import monotonicity_violations
from hgrkb.datagen import SyntheticSpec, generate


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--data", default="quadratic:n=1000:sigma=0.1")
    p.add_argument("--max-degree", type=int, default=7)
    args = p.parse_args()

    a, b = generate(SyntheticSpec.parse(args.data))
    grid = degree_scan(a, b, args.max_degree, args.max_degree)
    print("h\\k " + " ".join(f"{k:>6d}" for k in range(1, args.max_degree + 1)))
    for h, row in enumerate(grid, start=1):
        print(f"{h:>3d} " + " ".join(f"{v:6.3f}" for v in row))
    bad = monotonicity_violations(grid)
    print(f"monotonicity violations: {len(bad)}; max-min spread {np.ptp(grid):.3f}")


if __name__ == "__main__":
    main()

"""Median runtime of HGR-SK against the iterative HGR-KB path for growing sample sizes."""
import argparse

from hgrkb.cli import bench_sizes


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--sizes", default="1000,3000,10000,30000")
    p.add_argument("--degree", type=int, default=5)
    p.add_argument("--repeats", type=int, default=5)
    args = p.parse_args()

    sizes = [int(s) for s in args.sizes.split(",")]
    print(f"{'n':>7}{'sk ms':>10}{'kb refine ms':>14}{'kb eigen ms':>13}{'ratio':>8}")
    for row in bench_sizes(sizes, args.degree, args.repeats):
        print(f"{row['n']:>7}{row['sk_median_s'] * 1e3:10.2f}{row['kb_refine_median_s'] * 1e3:14.2f}"
              f"{row['kb_eigen_median_s'] * 1e3:13.2f}{row['ratio']:8.1f}")


if __name__ == "__main__":
    main()

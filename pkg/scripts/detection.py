"""Compare Pearson, HGR-KB, HGR-SK and RDC against the oracle correlation across noise levels."""
import argparse
import contextlib
import io
import json

from hgrkb.cli import main as cli


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--n", type=int, default=1000)
    args = p.parse_args()

    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = cli(["detect", "--seeds", str(args.seeds), "--runs", "3", "--n", str(args.n)])
    if code:
        raise SystemExit(code)
    summary = json.loads(buf.getvalue())["results"]["summary"]
    print(f"{'relation':<14}{'sigma':>6}{'method':>9}{'mean':>8}{'std':>8}{'oracle':>8}")
    for row in summary:
        print(f"{row['relation']:<14}{row['sigma']:>6}{row['method']:>9}{row['mean']:8.3f}{row['std']:8.3f}{row['oracle_mean']:8.3f}")


if __name__ == "__main__":
    main()

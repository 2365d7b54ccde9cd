"""Regenerate the threshold-vs-photon-number curves and compare them with their saturation values.

    python scripts/reproduce_fig1.py [--out fig1.csv]
"""

import argparse
import csv
import math

from twinbeam import cli


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="fig1.csv")
    args = parser.parse_args()

    code = cli.main(["fig1", "--out", args.out])
    if code:
        raise SystemExit(code)
    with open(args.out, newline="") as fh:
        rows = list(csv.reader(fh))
    header, last = rows[0], [float(v) for v in rows[-1]]
    print(f"wrote {len(rows) - 1} rows to {args.out}")
    print(f"{'curve':>12} {'value at N=' + rows[-1][0]:>16} {'saturation':>12} {'gap':>8}")
    for name, value in zip(header[1:], last[1:]):
        m = float(name.split("=")[1].rstrip(")"))
        sat = math.log1p(1 / (2 * m))
        print(f"{name:>12} {value:16.6f} {sat:12.6f} {100 * (sat - value) / sat:7.2f}%")


if __name__ == "__main__":
    main()

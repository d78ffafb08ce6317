#!/usr/bin/env python3
"""Writes the synthetic 87-bank balance-sheet fixture (data/eba_synthetic_87.csv).

Total assets are log-uniform on [1e2, 1e6] (millions), capital is 3-8% of
assets and interbank liabilities 5-25% of assets. Output is deterministic.
"""
import argparse
import math
import random


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=2011)
    ap.add_argument("--banks", type=int, default=87)
    ap.add_argument("--output", default="data/eba_synthetic_87.csv")
    args = ap.parse_args()

    rng = random.Random(args.seed)
    with open(args.output, "w", newline="\n") as f:
        f.write("bank_id,total_assets,capital,interbank_liabilities\n")
        for k in range(args.banks):
            assets = math.exp(rng.uniform(math.log(1e2), math.log(1e6)))
            capital = assets * rng.uniform(0.03, 0.08)
            interbank = assets * rng.uniform(0.05, 0.25)
            f.write(f"SYN{k + 1:03d},{assets:.4f},{capital:.4f},{interbank:.4f}\n")


if __name__ == "__main__":
    main()

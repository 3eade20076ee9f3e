"""Pump and dyes comparison tables: posterior means, IACT and CCES per sampler.

    python scripts/reproduce_tables.py --out results/
"""
import argparse
from pathlib import Path

from marginal_mcmc.bench import COMPARE_FIELDS, compare, rows_to_csv


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results")
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)

    tables = {
        "pump": compare("pump", ["aims", "gibbs"], 100, 10_000, a.seed),
        "dyes": compare("dyes", ["mwg", "gibbs", "twalk"],
                        {"mwg": 10_000, "gibbs": 10_000, "twalk": 100_000},
                        {"mwg": 100_000, "gibbs": 100_000, "twalk": 1_000_000}, a.seed),
    }
    for name, rows in tables.items():
        (out / f"table_{name}.csv").write_text(rows_to_csv(rows, COMPARE_FIELDS))
        print(f"\n{name}")
        print(f"{'sampler':>7} {'stat':>6} {'mean':>12} {'IACT':>8} {'CCES (s)':>10} {'wall (s)':>9}")
        for r in rows:
            print(f"{r['sampler']:>7} {r['statistic']:>6} {r['mean']:12.5g} {r['iact']:8.2f} "
                  f"{r['cces']:10.2e} {r['wall_seconds']:9.2f}")


if __name__ == "__main__":
    main()

"""IACT and CCES against data size for the censored, dyes and rat-pup models.

Writes ``bench_<model>.csv`` and the log-log series ``plot_<model>.csv``;
rendering is left to any plotting tool.

    python scripts/scaling_figures.py --models censored dyes --replicates 5
"""
import argparse
from pathlib import Path

from marginal_mcmc.bench import BENCH_FIELDS, PLOT_FIELDS, bench, plotdata, rows_to_csv

GRIDS = {
    "censored": ([100, 1000, 10_000, 100_000], ["gibbs", "twalk"]),
    "dyes": ([6, 60, 600, 6000], ["gibbs", "mwg"]),
    "ratpup": ([27, 270, 2700], ["gibbs", "mwg"]),
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--models", nargs="+", default=sorted(GRIDS), choices=sorted(GRIDS))
    ap.add_argument("--replicates", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results")
    a = ap.parse_args()
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    for model in a.models:
        sizes, samplers = GRIDS[model]
        rows = bench(model, sizes, samplers, a.replicates, a.seed)
        (out / f"bench_{model}.csv").write_text(rows_to_csv(rows, BENCH_FIELDS))
        (out / f"plot_{model}.csv").write_text(rows_to_csv(plotdata(rows), PLOT_FIELDS))
        for r in rows:
            print(f"{model:>8} {r['size']:>7} {r['sampler']:>6} {r['statistic']:>7} "
                  f"IACT {r['iact']:8.2f}  CCES {r['cces']:.3e}")


if __name__ == "__main__":
    main()

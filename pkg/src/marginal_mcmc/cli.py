"""``marginal-mcmc`` command line.

Every subcommand reads a JSON config; ``--seed`` and ``--out`` override the
config's values. Exit codes: 0 success, 2 bad usage or config, 3 numerical
failure during sampling.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench as B
from .core import Chain, _atomic_write, make_rng
from .errors import NumericalError


def _load(path) -> dict:
    cfg = json.loads(Path(path).read_text())
    if not isinstance(cfg, dict):
        raise ValueError("config must be a JSON object")
    return cfg


def cmd_run(cfg: dict, out: Path) -> None:
    rc = B.RunConfig.from_dict(cfg)
    res = B.run(rc, out)
    for row in res["report"].rows():
        print(f"{row['statistic']:>10s}  mean={row['mean']:.6g}  tau={row['tau']:.4g}  cces={row['cces']:.3g}")
    print(f"wrote {res['chain_path']}")


def cmd_bench(cfg: dict, out: Path) -> None:
    model = cfg["model"]
    rows = B.bench(model, cfg["sizes"], cfg["samplers"], int(cfg.get("replicates", 5)),
                   int(cfg.get("seed", 0)), int(cfg.get("pilot", B.PILOT_LENGTH)),
                   tuple(cfg.get("statistics", ())))
    path = out / f"bench_{model}.csv"
    _atomic_write(path, B.rows_to_csv(rows, B.BENCH_FIELDS))
    print(f"wrote {path} ({len(rows)} rows)")


def cmd_compare(cfg: dict, out: Path) -> None:
    model = cfg["model"]
    data = B.DataSource(**cfg["data"]) if "data" in cfg else None
    rows = B.compare(model, cfg.get("samplers", []), cfg.get("burn", 1000), cfg.get("samples", 10_000),
                     int(cfg.get("seed", 0)), data)
    path = out / f"compare_{model}.csv"
    _atomic_write(path, B.rows_to_csv(rows, B.COMPARE_FIELDS))
    for r in rows:
        print(f"{r['sampler']:>6s} {r['statistic']:>10s}  mean={r['mean']:.6g}  tau={r['iact']:.4g}")
    print(f"wrote {path}")


def cmd_mtc(cfg: dict, out: Path) -> None:
    model = B.build_model(cfg["model"], B.DataSource(**cfg["data"]) if "data" in cfg else None)
    chain = Chain.from_csv(cfg["chain"])
    joint = B.mtc(model, chain, int(cfg.get("count", len(chain))), make_rng(int(cfg.get("seed", 0)), 7))
    path = out / f"{cfg['model']}_mtc.csv"
    joint.to_csv(path)
    print(f"wrote {path} ({len(joint)} joint draws)")


def cmd_plotdata(cfg: dict, out: Path) -> None:
    src = Path(cfg["bench"])
    rows = B.plotdata(B.read_csv_rows(src))
    path = out / f"plot_{src.stem}.csv"
    _atomic_write(path, B.rows_to_csv(rows, B.PLOT_FIELDS))
    print(f"wrote {path}")


COMMANDS = {"run": cmd_run, "bench": cmd_bench, "compare": cmd_compare, "mtc": cmd_mtc,
            "plotdata": cmd_plotdata}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="marginal-mcmc", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="JSON config file")
    ap.add_argument("--seed", type=int, help="override the config seed")
    ap.add_argument("--out", help="output directory (default: config 'out' or ./out)")
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _load(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        out = Path(args.out or cfg.get("out", "out"))
        if args.command == "run":
            cfg["out"] = str(out)
        else:
            cfg.pop("out", None)
        COMMANDS[args.command](cfg, out)
    except NumericalError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

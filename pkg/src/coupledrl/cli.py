"""Command-line entry point: ``python -m coupledrl <command> ...``.

Commands:

``verify``  proposition checks; exit 0 iff every requested check passes.
``run``     train the configured algorithms over the seeds, one CSV per algorithm.
``sweep``   ``run`` over the ``sweep_lr`` grid, every cell recorded.
``replay``  rerun a stored output directory and compare the files byte for byte.
``plot``    mean-return curves per algorithm from a run directory, as SVG.

Exit codes: 0 success, 1 environment or runtime failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
import traceback
from pathlib import Path
from typing import Optional, Sequence

from .config import TABULAR_ALGORITHMS, ConfigError, ExperimentConfig, parse_flat
from .experiments import (
    FINITE_ENVS,
    build_env,
    final_mean,
    n_input_features,
    read_csv,
    records_to_csv,
    run_algorithm,
    validate,
)
from .harness import PROPOSITIONS, UnknownPropositionError, verify_proposition

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
CONFIG_NAME = "config.txt"


class UsageError(Exception):
    pass


def parse_seeds(seed: Optional[int], seeds: Optional[str]) -> Optional[list[int]]:
    """``--seed s`` -> [s]; ``--seeds N`` -> 0..N-1; ``--seeds a,b,c`` -> that list."""
    if seed is not None and seeds is not None:
        raise UsageError("give --seed or --seeds, not both")
    if seed is not None:
        return [seed]
    if seeds is None:
        return None
    try:
        if "," in seeds:
            return [int(s) for s in seeds.split(",") if s.strip()]
        n = int(seeds)
    except ValueError as exc:
        raise UsageError(f"bad --seeds value {seeds!r}") from exc
    if n < 1:
        raise UsageError("--seeds needs a positive count")
    return list(range(n))


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coupledrl", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt_default):
        sp.add_argument("--seed", type=int, help="single seed")
        sp.add_argument("--seeds", help="seed count N (0..N-1) or comma-separated list")
        sp.add_argument("--config", type=Path, help="flat key = value config file")
        sp.add_argument("--out", type=Path, help="output directory")
        sp.add_argument("--format", choices=("csv", "json"), default=fmt_default)

    v = sub.add_parser("verify", help="run proposition checks")
    v.add_argument("ids", nargs="*", help=f"proposition IDs ({', '.join(PROPOSITIONS)})")
    v.add_argument("--all", action="store_true", help="every proposition")
    common(v, "json")

    for name, text in (("run", "train and write one CSV per algorithm"),
                       ("sweep", "run every step size in sweep_lr")):
        r = sub.add_parser(name, help=text)
        common(r, "csv")
        r.add_argument("--jobs", type=int, default=1, help="worker processes (seed-level)")
        r.add_argument("--plot", action="store_true", help="also write returns.svg")
        if name == "run":
            r.add_argument("--sweep", action="store_true", help="same as the sweep command")

    rp = sub.add_parser("replay", help="rerun a stored run directory and compare")
    rp.add_argument("directory", type=Path)
    rp.add_argument("--out", type=Path, help="where to write the rerun (default: temporary)")
    rp.add_argument("--jobs", type=int, default=1)

    pl = sub.add_parser("plot", help="SVG of mean return per algorithm")
    pl.add_argument("directory", type=Path)
    pl.add_argument("--out", type=Path, help="SVG path (default: <directory>/returns.svg)")
    pl.add_argument("--window", type=int, default=10, help="moving-average window")
    return p


# --------------------------------------------------------------------------- verify


def _verify_overrides(path: Optional[Path]) -> dict[str, dict]:
    """``P5.steps = 1000`` style lines grouped by proposition."""
    if path is None:
        return {}
    out: dict[str, dict] = {}
    for key, value in parse_flat(path.read_text()).items():
        if "." not in key:
            raise ConfigError(f"verify config keys look like ID.param, got {key!r}")
        pid, param = key.split(".", 1)
        if pid not in PROPOSITIONS:
            raise UnknownPropositionError(f"unknown proposition {pid!r}")
        out.setdefault(pid, {})[param] = float(value) if any(ch in value for ch in ".e") else int(value)
    return out


def _gap_csv(report) -> str:
    lines = ["seed,run,step,max_gap,config_hash"]
    for i, run in enumerate(report.runs):
        lines += [f"{run.seed},{i},{t},{g!r},{report.config_hash}" for t, g in enumerate(run.gaps.tolist())]
    return "\n".join(lines) + "\n"


def cmd_verify(args) -> int:
    ids = list(PROPOSITIONS) if args.all else args.ids
    if not ids:
        raise UsageError("name at least one proposition or pass --all")
    bad = [i for i in ids if i not in PROPOSITIONS]
    if bad:
        raise UsageError(f"unknown proposition(s) {', '.join(bad)}; choose from {', '.join(PROPOSITIONS)}")
    seeds = parse_seeds(args.seed, args.seeds) or [0]
    overrides = _verify_overrides(args.config)
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
    ok = True
    for pid in ids:
        try:
            rep = verify_proposition(pid, seeds, overrides.get(pid))
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc
        ok &= rep.passed
        verdicts = sorted({r.verdict for r in rep.runs})
        worst = max((r.max_gap for r in rep.runs), default=0.0)
        status = "PASS" if rep.passed else "FAIL"
        print(f"{pid:4s} {status}  expect={rep.expect:10s} verdicts={','.join(verdicts) or '-'} "
              f"max_gap={worst:.3e} seeds={len(seeds)} hash={rep.config_hash}"
              + (f"  error: {rep.error}" if rep.error else ""))
        failed = [k for k, v in rep.checks.items() if not v]
        if failed:
            print(f"     failed checks: {', '.join(failed)}")
        if args.out:
            if args.format == "json":
                (args.out / f"{pid}.json").write_text(rep.to_json())
            else:
                (args.out / f"{pid}.csv").write_text(_gap_csv(rep))
    return EXIT_OK if ok else EXIT_FAIL


# --------------------------------------------------------------------------- run / sweep


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    seeds = parse_seeds(getattr(args, "seed", None), getattr(args, "seeds", None))
    if seeds is not None:
        cfg = cfg.replace(seeds=tuple(seeds))
    validate(cfg)
    return cfg


def _write_run(cfg: ExperimentConfig, out: Path, fmt: str, jobs: int, suffix: str = "") -> dict[str, float]:
    """Run every algorithm; returns final 100-episode means by file stem."""
    out.mkdir(parents=True, exist_ok=True)
    (out / CONFIG_NAME).write_text(cfg.dumps())
    env = build_env(cfg, cfg.seeds[0])
    summary = {}
    if cfg.env not in FINITE_ENVS:
        n = n_input_features(cfg, env)
        print(f"# config {cfg.hash}: {cfg.env}, {cfg.features} input with {n} features")
    for alg in cfg.algorithms:
        records = run_algorithm(cfg, alg, jobs)
        stem = f"{alg}{suffix}"
        if fmt == "csv":
            (out / f"{stem}.csv").write_text(records_to_csv(records))
        else:
            doc = {"config_hash": cfg.hash, "algorithm": alg, "records": [r.to_dict() for r in records]}
            (out / f"{stem}.json").write_text(json.dumps(doc, indent=1) + "\n")
        summary[stem] = final_mean(records)
        print(f"{stem}: {len(records)} episodes, final-100 mean return {summary[stem]:.2f}")
    return summary


def cmd_run(args) -> int:
    if getattr(args, "sweep", False):
        return cmd_sweep(args)
    cfg = _load_config(args)
    out = args.out or Path(f"runs/{cfg.name}-{cfg.hash}")
    _write_run(cfg, out, args.format, args.jobs)
    if args.plot:
        _plot(out, out / "returns.svg", 10)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    if not cfg.sweep_lr:
        raise ConfigError("sweep needs a non-empty sweep_lr list in the config")
    out = args.out or Path(f"runs/{cfg.name}-{cfg.hash}-sweep")
    out.mkdir(parents=True, exist_ok=True)
    (out / CONFIG_NAME).write_text(cfg.dumps())
    cells = []
    for step in cfg.sweep_lr:
        for alg in cfg.algorithms:
            key = "alpha" if alg in TABULAR_ALGORITHMS else "lr"
            cell = cfg.replace(algorithms=(alg,), sweep_lr=(), **{key: step})
            res = _write_run(cell, out / f"{alg}_{key}{step!r}", args.format, args.jobs)
            cells.append({"algorithm": alg, key: step, "config_hash": cell.hash,
                          "final100_mean_return": res[alg]})
    (out / "sweep.json").write_text(json.dumps({"config_hash": cfg.hash, "cells": cells}, indent=2) + "\n")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_replay(args) -> int:
    src = args.directory
    cfg_path = src / CONFIG_NAME
    if not cfg_path.exists():
        raise UsageError(f"{src} has no {CONFIG_NAME}")
    cfg = ExperimentConfig.load(cfg_path)
    validate(cfg)
    files = sorted(p for p in src.iterdir() if p.suffix in (".csv", ".json"))
    fmt = "json" if files and all(p.suffix == ".json" for p in files) else "csv"
    with tempfile.TemporaryDirectory() as tmp:
        out = args.out or Path(tmp)
        _write_run(cfg, out, fmt, args.jobs)
        same = True
        for p in files + [cfg_path]:
            other = out / p.name
            equal = other.exists() and other.read_bytes() == p.read_bytes()
            same &= equal
            print(f"{p.name}: {'identical' if equal else 'DIFFERS'}")
    if cfg.clock == "on":
        print("note: clock = on, wall-clock columns are not reproducible")
    return EXIT_OK if same else EXIT_FAIL


# --------------------------------------------------------------------------- plot


def _plot(directory: Path, out: Path, window: int) -> None:
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "coupledrl"  # stable element ids
    import matplotlib.pyplot as plt
    import numpy as np

    csvs = sorted(directory.glob("*.csv"))
    if not csvs:
        raise UsageError(f"no run CSVs in {directory}")
    fig, ax = plt.subplots(figsize=(7, 4))
    hashes = set()
    for path in csvs:
        rows = read_csv(path.read_text())
        by_seed: dict[str, list[float]] = {}
        for r in rows:
            by_seed.setdefault(r["seed"], []).append(float(r["return"]))
            hashes.add(r["config_hash"])
        n = min(len(v) for v in by_seed.values())
        mean = np.mean([v[:n] for v in by_seed.values()], axis=0)
        w = max(1, min(window, n))
        smooth = np.convolve(mean, np.ones(w) / w, mode="valid")
        ax.plot(np.arange(w - 1, n), smooth, label=f"{path.stem} ({len(by_seed)} seeds)")
    ax.set_xlabel("episode")
    ax.set_ylabel(f"mean return ({window}-episode moving average)")
    ax.set_title(f"config {', '.join(sorted(hashes))}", fontsize=8)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_plot(args) -> int:
    out = args.out or args.directory / "returns.svg"
    _plot(args.directory, out, args.window)
    print(f"wrote {out}")
    return EXIT_OK


COMMANDS = {"verify": cmd_verify, "run": cmd_run, "sweep": cmd_sweep, "replay": cmd_replay, "plot": cmd_plot}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, UnknownPropositionError, FileNotFoundError) as exc:
        print(f"coupledrl {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # environment or numerical failure
        print(f"coupledrl {args.command}: failure: {exc!r}", file=sys.stderr)
        traceback.print_exc(file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

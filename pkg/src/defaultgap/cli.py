"""``defaultgap run ...`` and ``defaultgap presets``.

Exit codes: 0 when every check passes, 1 when a check fails or the run
raises, 2 on a config error (nothing is written in that case).
"""
import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import __version__
from . import experiments as ex
from ._accel import backend
from .errors import ConfigError, DefaultGapError
from .stats import write_rows

EXIT_OK, EXIT_CHECK, EXIT_CONFIG = 0, 1, 2


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default, allow_nan=False) + "\n"


def _atomic_text(path, text):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_csv(path, header, rows):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    os.close(fd)
    try:
        write_rows(tmp, header, rows)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_artifacts(out_dir, cfg, summary, files):
    os.makedirs(out_dir, exist_ok=True)
    names = []
    for name in sorted(files):
        item = files[name]
        path = os.path.join(out_dir, name)
        if isinstance(item, dict):
            _atomic_text(path, _dump(ex._clean(item)))
        else:
            header, rows = item
            _atomic_csv(path, header, rows)
        names.append(name)
    _atomic_text(os.path.join(out_dir, "summary.json"), _dump(summary))
    manifest = {
        "package": "defaultgap",
        "version": __version__,
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "config": cfg.echo(),
        "artifacts": names + ["summary.json"],
        "units": "years; 15 days = 15/365, 3 months = 0.25",
    }
    if cfg.schedule is not None:
        manifest["horizon"] = {"payments": cfg.schedule.horizon_payments,
                               "years": cfg.schedule.horizon_payments * cfg.schedule.n_interval}
    _atomic_text(os.path.join(out_dir, "manifest.json"), _dump(manifest))


def _load(args):
    if args.config:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    elif args.preset:
        raw = ex.preset_config(args.preset)
    else:
        match = [n for n, p in sorted(ex.PRESETS.items()) if p["experiment"] == args.experiment]
        if not match:
            raise ConfigError(f"no default config for experiment {args.experiment!r}")
        raw = ex.preset_config(match[0])
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if args.paths is not None:
        raw["n_paths"] = args.paths
    if args.seed is not None:
        raw["seed"] = args.seed
    cfg = ex.load_config(raw)
    out = args.out or cfg.output_dir or os.path.join("runs", cfg.preset or cfg.experiment)
    return cfg, out


def cmd_run(args):
    try:
        cfg, out = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        summary, files = ex.run_experiment(cfg, workers=args.workers)
    except (DefaultGapError, ValueError, ArithmeticError) as exc:
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CHECK
    if args.dump_paths:
        files = dict(files)
        files.update(_path_dump(cfg, args.dump_paths))
    write_artifacts(out, cfg, summary, files)
    for c in summary["checks"]:
        print(f"{'PASS' if c['pass'] else 'FAIL'}  {c['name']}  value={c['value']}  threshold={c['threshold']}")
    print(f"artifacts in {out} (backend {backend()})")
    if not summary["all_pass"]:
        failed = [c["name"] for c in summary["checks"] if not c["pass"]]
        print(f"failed checks: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def _path_dump(cfg, n):
    """CSV of the first ``n`` grid paths (payment dates only) for inspection."""
    from .paths import TimeGrid, sample_grid_path
    from .rng import generators
    from .levy import FirmValue
    from .default_times import LatticeFirm
    sched = cfg.schedule
    grid = TimeGrid(0.0, sched.n_interval, sched.horizon_payments)
    rows = []
    for i, g in enumerate(generators(cfg.seed, 0, n, lane=99)):
        if isinstance(cfg.firm, FirmValue):
            x = sample_grid_path(cfg.firm, grid, g).log_values
        elif isinstance(cfg.firm, LatticeFirm):
            w = cfg.firm.walk
            st = g.choice(w.steps, size=grid.steps, p=w.probs)
            x = cfg.firm.log_s0 + w.pitch * np.concatenate([[0], np.cumsum(st)])
        else:
            return {}
        rows.extend((i, t, v) for t, v in zip(grid.times, x))
    return {"paths.csv": (["path", "t", "log_s"], rows)}


def cmd_presets(args):
    print(ex.list_presets())
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="defaultgap", description="Default-gap experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment")
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="JSON config file")
    src.add_argument("--preset", help="named preset (see `defaultgap presets`)")
    src.add_argument("--experiment", choices=ex.EXPERIMENTS, help="run the default preset of an experiment")
    r.add_argument("--paths", type=int, help="override n_paths")
    r.add_argument("--seed", type=int, help="override seed")
    r.add_argument("--out", help="output directory")
    r.add_argument("--workers", type=int, default=1, help="worker threads (results do not depend on it)")
    r.add_argument("--dump-paths", type=int, default=0, metavar="N", help="also write the first N paths")
    r.set_defaults(func=cmd_run)
    ps = sub.add_parser("presets", help="list presets")
    ps.set_defaults(func=cmd_presets)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

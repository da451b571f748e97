"""Command-line front end.

Exit codes: 0 success, 1 validation error, 2 numeric failure during a run,
3 an oracle suite out of tolerance.
"""
from __future__ import annotations

import argparse
import itertools
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import PRESETS, Config, ConfigError, default_values, parse_config
from .sim import CSV_COLUMNS, RunRecord, SimulationError, run_scenario

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ORACLE = 0, 1, 2, 3


def _fmt(x) -> str:
    return format(float(x), ".9g")


def export_csv(record: RunRecord, path) -> Path:
    """Write the sampled columns as UTF-8 CSV with LF line endings."""
    path = Path(path)
    cols = [record[c] for c in CSV_COLUMNS]
    lines = [",".join(CSV_COLUMNS)]
    cmd_idx = CSV_COLUMNS.index("dump_cmd")
    for row in zip(*cols):
        lines.append(
            ",".join(str(int(v)) if i == cmd_idx else _fmt(v) for i, v in enumerate(row))
        )
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as e:
        raise OSError(f"cannot write {path}: {e.strerror or e}") from e
    return path


def write_sidecar(cfg: Config, csv_path) -> Path:
    side = Path(csv_path).with_suffix(".cfg")
    side.write_text(cfg.to_text(), encoding="utf-8", newline="\n")
    return side


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_scenario_args(p, preset=True):
    if preset:
        p.add_argument("--preset", choices=sorted(PRESETS), default="sc1")
    p.add_argument("--config", type=Path, help="key = value file layered over the preset")
    p.add_argument("--seed", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--sample-every", type=int)


def build_parser():
    ap = _Parser(prog="wecsim", description=__doc__.splitlines()[0])
    ap.add_argument("--print-preset", choices=sorted(PRESETS), help="print a preset's resolved config and exit")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("run", help="run one scenario and export CSV")
    _add_scenario_args(p)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("compare", help="SC1 (PD) vs SC2 (ANFIS) on the same wind")
    _add_scenario_args(p, preset=False)
    p.add_argument("--out-dir", type=Path, help="also export sc1.csv and sc2.csv here")

    sub.add_parser("oracle", help="run the self-check suites")

    p = sub.add_parser("tune-pd", help="grid search PD gains on SC1")
    _add_scenario_args(p, preset=False)
    p.add_argument("--kp", type=float, nargs="+", default=[1e5, 2.5e5, 4e5])
    p.add_argument("--kd", type=float, nargs="+", default=[2.5e4, 5e4, 1e5])
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    return ap


def load_config(args, preset="sc1") -> Config:
    preset = getattr(args, "preset", None) or preset
    text = args.config.read_text(encoding="utf-8") if getattr(args, "config", None) else ""
    cfg = parse_config(text, preset=preset)
    overrides = {}
    if args.seed is not None:
        overrides["sim.seed"] = args.seed
    if args.dt is not None:
        overrides["sim.dt"] = args.dt
    if args.sample_every is not None:
        overrides["sim.sample_every"] = args.sample_every
    if getattr(args, "out", None) is not None:
        overrides["output.path"] = str(args.out)
    return cfg.with_overrides(**overrides) if overrides else cfg


def _max_workers() -> int:
    env = os.environ.get("WECSIM_THREADS")
    cap = int(env) if env and env.isdigit() and int(env) > 0 else (os.cpu_count() or 1)
    return max(1, min(2, cap))


def _run_cfg(cfg: Config) -> RunRecord:
    return run_scenario(cfg.scenario())


def summary_table(rows) -> str:
    head = f"{'controller':<10} {'f_max_dev_hz':>13} {'f_rms_dev_hz':>13} {'speed_mean_pu':>14} {'energy_resid_%':>15}"
    out = [head, "-" * len(head)]
    for name, s in rows:
        out.append(
            f"{name:<10} {s.f_max_dev_hz:13.4f} {s.f_rms_dev_hz:13.4f} "
            f"{s.speed_mean_pu:14.5f} {s.energy_residual_pct:15.2e}"
        )
    return "\n".join(out)


def cmd_run(args) -> int:
    cfg = load_config(args)
    rec = _run_cfg(cfg)
    out = cfg["output.path"]
    if out:
        export_csv(rec, out)
        if cfg["output.sidecar"]:
            write_sidecar(cfg, out)
    print(summary_table([(cfg["sim.name"], rec.summary)]))
    print(f"wall time {rec.wall_time:.2f} s, {len(rec)} samples")
    return EXIT_OK


def cmd_compare(args) -> int:
    base = load_config(args, preset="sc1")
    cfgs = [
        base.with_overrides(**{"sim.name": "sc1", "sim.controller": "pd"}),
        base.with_overrides(**{"sim.name": "sc2", "sim.controller": "anfis"}),
    ]
    workers = _max_workers()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            recs = list(ex.map(_run_cfg, cfgs))
    else:
        recs = [_run_cfg(c) for c in cfgs]
    if args.out_dir:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        for c, r in zip(cfgs, recs):
            path = args.out_dir / f"{c['sim.name']}.csv"
            export_csv(r, path)
            write_sidecar(c, path)
    print(f"seed {base['sim.seed']}, wind mean {base['wind.mean']} m/s, TI {base['wind.ti']}")
    print(summary_table([("PD", recs[0].summary), ("ANFIS", recs[1].summary)]))
    return EXIT_OK


def cmd_oracle(args) -> int:
    from . import oracles

    ok = True
    for suite in (
        oracles.phasor_equivalence,
        oracles.gradient_check,
        oracles.energy_audit,
        oracles.convergence,
        oracles.dump_quantization,
    ):
        res = suite()
        print(res.line(), flush=True)
        ok &= res.passed
    return EXIT_OK if ok else EXIT_ORACLE


def cmd_tune_pd(args) -> int:
    base = load_config(args, preset="sc1")
    best = None
    print(f"{'kp':>10} {'kd':>10} {'mean max|df| Hz':>16}")
    for kp, kd in itertools.product(args.kp, args.kd):
        devs = []
        for seed in args.seeds:
            cfg = base.with_overrides(**{"pd.kp": kp, "pd.kd": kd, "sim.seed": seed})
            try:
                devs.append(_run_cfg(cfg).summary.f_max_dev_hz)
            except SimulationError:
                devs.append(float("inf"))
        score = sum(devs) / len(devs)
        print(f"{kp:10.4g} {kd:10.4g} {score:16.4f}", flush=True)
        if best is None or score < best[0]:
            best = (score, kp, kd)
    print(f"best: pd.kp = {best[1]:g}, pd.kd = {best[2]:g} (mean max|df| {best[0]:.4f} Hz)")
    return EXIT_OK


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.print_preset:
            print(Config(default_values(args.print_preset)).to_text(), end="")
            return EXIT_OK
        handlers = {"run": cmd_run, "compare": cmd_compare, "oracle": cmd_oracle, "tune-pd": cmd_tune_pd}
        if args.command not in handlers:
            ap.print_help()
            return EXIT_CONFIG
        return handlers[args.command](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as e:
        print(f"simulation failed: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

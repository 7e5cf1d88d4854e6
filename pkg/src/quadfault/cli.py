"""Command line interface.

    quadfault run <config.yaml> [--out DIR] [--seed N] [--l1 on|off]
                  [--baseline-integral] [--duration S]
    quadfault sweep <dir-or-configs...> [--out DIR]
    quadfault report <run-dir-or-csv> [--out DIR]

Exit codes: 0 on success, 1 when a run diverges, 2 on configuration errors.
"""

import argparse
import sys
from pathlib import Path

from . import harness, report as report_mod, scenario


def _build_parser():
    p = argparse.ArgumentParser(prog="quadfault",
                                description="quadrotor damage/fault simulation")
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="execute one scenario")
    pr.add_argument("config", help="scenario YAML file")
    pr.add_argument("--out", default=None, help="output directory (default: runs/<name>)")
    pr.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    pr.add_argument("--l1", choices=["on", "off"], default=None,
                    help="force the adaptive augmentation on or off")
    pr.add_argument("--baseline-integral", action="store_true",
                    help="replace the adaptive loop with the integral compensator")
    pr.add_argument("--duration", type=float, default=None, help="override duration [s]")

    ps = sub.add_parser("sweep", help="run several scenarios and tabulate")
    ps.add_argument("configs", nargs="+",
                    help="YAML files, or a single directory of YAML files")
    ps.add_argument("--out", default="sweep_out", help="output directory")

    pp = sub.add_parser("report", help="render figures and RMSE table for a run")
    pp.add_argument("run", help="run directory or run.csv path")
    pp.add_argument("--out", default=None, help="where to put the figures (default: alongside)")
    return p


def _load_config(path, args):
    cfg = scenario.load(path)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.l1 is not None:
        cfg.l1_enabled = args.l1 == "on"
    if args.baseline_integral:
        cfg.integral_enabled = True
        cfg.l1_enabled = False
    if args.duration is not None:
        if args.duration <= 0:
            raise scenario.ConfigError("duration must be positive")
        cfg.duration = args.duration
    return cfg


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = _load_config(args.config, args)
            out = Path(args.out) if args.out else Path("runs") / cfg.name
            res = harness.run(cfg, out_dir=out)
            rmse = res.summary["rmse"]
            print(f"{cfg.name}: {res.summary['status']}, "
                  f"rmse={rmse['mean']:.4f} m" if rmse else f"{cfg.name}: no data")
            print(f"outputs in {out}")
            return 1 if res.diverged else 0

        if args.command == "sweep":
            paths = []
            for c in args.configs:
                p = Path(c)
                if p.is_dir():
                    paths.extend(sorted(p.glob("*.yaml")))
                else:
                    paths.append(p)
            if not paths:
                raise scenario.ConfigError("no scenario files found")
            configs = [scenario.load(p) for p in paths]
            rows = harness.sweep(configs, out_dir=args.out)
            report_mod.sweep_figure(rows, Path(args.out) / "sweep.png")
            for r in rows:
                print(f"{r['name']}: {r['status']}, rmse_mean={r['rmse_mean']}")
            return 0

        if args.command == "report":
            written = report_mod.render_report(args.run, out_dir=args.out)
            for w in written:
                print(f"wrote {w}")
            return 0
    except scenario.ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

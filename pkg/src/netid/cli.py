"""Command-line entry point: simulate, identify, point-estimate, reproduce."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

from .harness import ConfigError, ExperimentConfig, load_config, reproduce_paper, run
from .harness.experiments import converged_draw
from .harness.io import write_draw, write_json
from .harness.config import Mode

OUT_ENV = "NETID_OUT"
EXIT_OK, EXIT_ERROR, EXIT_TOLERANCE = 0, 1, 2


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    changes = {}
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        changes["seeds"] = (args.seed,)
    out = args.out or os.environ.get(OUT_ENV)
    if out:
        changes["output_dir"] = out
    return dataclasses.replace(cfg, **changes) if changes else cfg


def _print_sets(report):
    for curve in report.curves:
        sets = " U ".join(str(iv) for iv in curve.intervals) or "empty"
        print(f"seed {curve.seed} {curve.criterion}: {sets}")


def cmd_simulate(args) -> int:
    cfg = _config(args)
    if cfg.mode in (Mode.BASELINE_CLOSED_FORM, Mode.FE_ONLY_MC):
        # closed-form modes have no network draw of their own; simulate the underlying design
        cfg = dataclasses.replace(cfg, mode=Mode.POINT_ID)
    for seed in cfg.seeds:
        draw, used, skipped = converged_draw(cfg, seed)
        paths = write_draw(Path(cfg.output_dir), draw, stem=f"draw_seed{seed}")
        print(f"seed {seed}: draw seed {used} ({skipped} skipped), {len(draw.network.edges())} edges -> "
              f"{paths[0].parent}")
    return EXIT_OK


def cmd_identify(args) -> int:
    cfg = _config(args)
    if cfg.mode is Mode.POINT_ID:
        raise ConfigError("identify needs a set-identification mode; use point-estimate for point_id")
    report = run(cfg, args.jobs)
    report.write()
    _print_sets(report)
    return EXIT_OK


def cmd_point(args) -> int:
    cfg = dataclasses.replace(_config(args), mode=Mode.POINT_ID)
    report = run(cfg, args.jobs)
    report.write()
    for e in report.estimates:
        if "error" in e:
            print(f"seed {e['seed']}: {e['error']}")
        else:
            print(f"seed {e['seed']}: " + ", ".join(f"{n}={v:.4f} (se {s:.4f})" if s is not None else f"{n}={v:.4f}"
                                                     for n, v, s in zip(e["names"], e["estimate"], e["std_err"])))
    return EXIT_OK


def cmd_reproduce(args) -> int:
    out = args.out or os.environ.get(OUT_ENV) or "netid_out"
    report = reproduce_paper(args.which, out, args.jobs)
    for c in report.checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}: published {c['published']}; computed {c['computed']}")
    write_json(Path(out) / args.which / "checks.json", report.checks)
    return EXIT_OK if report.passed else EXIT_TOLERANCE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="netid", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", type=Path, help="key = value experiment file")
            sp.add_argument("--seed", type=int, help="run a single replication with this seed")
        sp.add_argument("--out", help=f"output directory (default: config output_dir, or ${OUT_ENV})")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes for replications")

    common(sub.add_parser("simulate", help="simulate equilibrium networks and write CSVs"))
    common(sub.add_parser("identify", help="evaluate criteria over the parameter grid"))
    common(sub.add_parser("point-estimate", help="fit the tetrad conditional logit"))
    rp = sub.add_parser("reproduce", help="rerun a published figure or table with pass/fail checks")
    rp.add_argument("which", choices=["figure1", "table1", "table2"])
    common(rp, config=False)
    return p


COMMANDS = {"simulate": cmd_simulate, "identify": cmd_identify, "point-estimate": cmd_point,
            "reproduce": cmd_reproduce}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

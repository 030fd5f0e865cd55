"""Command line: run, list-presets, validate, replot.

Exit status: 0 all gating checks passed, 1 some check failed, 2 invalid
configuration or unwritable output, 3 the run blew up (partial artifacts
are still written).
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import SCHEMA_VERSION, ConfigError, ExperimentConfig, load_config
from .outputs import OutputError, Record, plot_records, read_csv, write_csv
from .presets import PRESETS, RunResult, get_preset
from .solver import BlowUpError, DensityFloorError

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3
log = logging.getLogger("besovlab")


def _config_from_args(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
        return cfg.with_overrides(seed=args.seed, out=args.out, preset=args.preset)
    if not args.preset:
        raise ConfigError("give --preset or --config")
    return ExperimentConfig(args.preset, seed=args.seed or 0, out=args.out or "runs")


def _json_safe(x):
    if isinstance(x, float) and not np.isfinite(x):
        return str(x)
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    return x


def write_artifacts(out: Path, cfg: ExperimentConfig, result: RunResult, status: str, error: str | None = None) -> dict:
    preset = get_preset(cfg.preset)
    write_csv(result.records, out / "records.csv")
    plot_records(result.records, out / "plots", result.targets)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "preset": preset.id,
        "claim": preset.claim,
        "seed": cfg.seed,
        "status": status,
        "passed": result.passed and error is None,
        "checks": [{"name": c.name, "passed": c.passed, "gating": c.gating, "detail": c.detail} for c in result.checks],
        "notes": result.notes,
        "targets": result.targets,
        "config": cfg.to_dict(),
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    if error:
        summary["error"] = error
    try:
        (out / "summary.json").write_text(json.dumps(_json_safe(summary), indent=2) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write summary: {exc}") from exc
    return summary


def _partial_result(exc) -> RunResult:
    res = RunResult()
    traj = getattr(exc, "partial", None)
    if traj is not None and getattr(traj, "times", None):
        for t, v in zip(traj.times, traj.l2):
            res.records.append(Record("partial", float(t), "L2(a,u)", 0.0, 2.0, 2.0, "full", float(v), False))
    return res


def cmd_run(args) -> int:
    try:
        cfg = _config_from_args(args)
        preset = get_preset(cfg.preset)
        ctx = preset.validate(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create {out}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    log.info("running %s (seed %d) into %s", preset.id, cfg.seed, out)
    try:
        result = preset.runner(ctx)
    except (BlowUpError, DensityFloorError) as exc:
        try:
            write_artifacts(out, cfg, _partial_result(exc), "blow-up", str(exc))
        except OutputError as err:
            print(f"error: {err}", file=sys.stderr)
        print(f"run stopped: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    try:
        summary = write_artifacts(out, cfg, result, "complete")
    except OutputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{preset.id}: {preset.claim}")
    for c in result.checks:
        tag = ("PASS" if c.passed else "FAIL") if c.gating else "info"
        print(f"  [{tag}] {c.name}: {c.detail}")
    for n in result.notes:
        print(f"  note: {n}")
    return EXIT_OK if summary["passed"] else EXIT_FAILED


def cmd_list(args) -> int:
    for p in PRESETS.values():
        print(f"{p.id:22s} {p.claim}")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        cfg = _config_from_args(args)
        get_preset(cfg.preset).validate(cfg)
    except ConfigError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"ok: preset {cfg.preset}, seed {cfg.seed}")
    return EXIT_OK


def cmd_replot(args) -> int:
    out = Path(args.out or "runs")
    try:
        records = read_csv(out / "records.csv")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    targets = {}
    summary = out / "summary.json"
    if summary.exists():
        targets = {k: float(v) for k, v in json.loads(summary.read_text()).get("targets", {}).items()}
    try:
        paths = plot_records(records, out / "plots", targets)
    except OutputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"wrote {len(paths)} plot(s) to {out / 'plots'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="besovlab", description="Decay experiments for the linearized and nonlinear compressible flow.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True)
    for name, fn, help_ in (
        ("run", cmd_run, "run a preset and write CSV, SVG and summary.json"),
        ("validate", cmd_validate, "check a configuration without running it"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--preset")
        p.add_argument("--config")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.set_defaults(fn=fn)
    p = sub.add_parser("list-presets", help="list presets and the claim each checks")
    p.set_defaults(fn=cmd_list)
    p = sub.add_parser("replot", help="rebuild the SVG plots from an output directory")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_replot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())

"""Operator entry point: prepare offline assets, run experiments headless,
replay/export traces.

Exit codes: 0 ok, 2 configuration error, 3 sampler error, 4 corrupt trace.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .reliability import SamplerDegenerateError, UnreachableEventError
from .scenario import ScenarioError, load_scenario
from .trace import TraceError, TraceReader

EXIT_CONFIG = 2
EXIT_SAMPLER = 3
EXIT_TRACE = 4


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _load(scenario_path: str):
    try:
        return load_scenario(scenario_path)
    except (FileNotFoundError, ScenarioError, ValueError) as e:
        raise CliError(f"scenario error: {e}", EXIT_CONFIG) from e


def cmd_prepare(args) -> int:
    from .runtime import run_offline_phase

    scenario = _load(args.scenario)
    out_dir = Path(args.out or f"assets-{scenario.id}")
    try:
        assets = run_offline_phase(scenario, seed=args.seed, out_dir=out_dir)
    except (UnreachableEventError, SamplerDegenerateError) as e:
        raise CliError(f"sampler error: {e}", EXIT_SAMPLER) from e
    manifest = out_dir / "manifest.txt"
    print(manifest)
    print(f"baseline {assets.baseline_id}: D rows {assets.ensemble_d.n}, "
          f"{len(assets.limit_states)} limit states, "
          f"prepared in {assets.prep_seconds:.1f}s")
    return 0


def cmd_run(args) -> int:
    from .runtime import run_forward_experiment, run_inverse_experiment

    scenario = _load(args.scenario)
    if args.mode == "serve":
        from .service import serve

        serve(bind=args.bind, scenarios={scenario.id: scenario})
        return 0

    out = Path(args.out or f"{scenario.id}-{args.mode}-{args.seed or scenario.seed}.rttr")
    runner = run_forward_experiment if args.mode == "forward" else run_inverse_experiment
    session = None
    try:
        session, report = runner(scenario, duration=args.duration, seed=args.seed,
                                 out_path=out)
    except KeyboardInterrupt:
        if session is not None:
            session.close()
        print("interrupted; trace flushed", file=sys.stderr)
        return 0
    except (UnreachableEventError, SamplerDegenerateError) as e:
        raise CliError(f"sampler error: {e}", EXIT_SAMPLER) from e
    report_path = out.with_suffix(".report.json")
    report_path.write_text(json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n")
    print(out)
    print(report_path)
    for comp, s in sorted(report.beta_summary.items()):
        print(f"  {comp}: beta min {s['min']:.2f} mean {s['mean']:.2f} final {s['final']:.2f}")
    if report.energy_j is not None:
        print(f"  energy: {report.energy_j:.4e} J")
    return 0


def _component_columns(frames) -> list[str]:
    ids = []
    for fr in frames:
        for c in fr["components"]:
            if c["id"] not in ids:
                ids.append(c["id"])
    return ids


def cmd_export(args) -> int:
    path = Path(args.trace)
    if not path.exists():
        raise CliError(f"trace not found: {path}", EXIT_CONFIG)
    out = Path(args.out or (path.stem + (".csv" if args.format == "csv" else ".frames.jsonl")))
    try:
        with TraceReader(path) as reader:
            frames = list(reader.frames())
    except TraceError as e:
        if out.exists():
            out.unlink()
        raise CliError(f"corrupt trace: {e}", EXIT_TRACE) from e

    if args.format == "frames":
        with open(out, "w") as f:
            for fr in frames:
                f.write(json.dumps(fr, sort_keys=True) + "\n")
    else:
        comp_ids = _component_columns(frames)
        header = ["t", "clock"]
        for cid in comp_ids:
            header += [f"beta_{cid}", f"p_{cid}", f"band_{cid}"]
        has_power = any("power_w" in fr["state"] for fr in frames)
        if has_power:
            header += ["power_w", "energy_j"]
        with open(out, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(header)
            for fr in frames:
                row = [fr["t"], repr(fr["clock"])]
                by_id = {c["id"]: c for c in fr["components"]}
                for cid in comp_ids:
                    c = by_id.get(cid)
                    row += ([repr(c["beta"]), repr(c["p"]), c["band"]]
                            if c else ["", "", ""])
                if has_power:
                    row += [repr(fr["state"].get("power_w", "")),
                            repr(fr["state"].get("energy_j", ""))]
                w.writerow(row)
    print(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="risktwin",
                                description="Structural-risk digital twin runner")
    sub = p.add_subparsers(dest="command", required=True)

    prep = sub.add_parser("prepare", help="run the offline phase and persist ensembles")
    prep.add_argument("--scenario", required=True,
                      help="scenario YAML path or bundled id (plate, beam-arm, turbine)")
    prep.add_argument("--seed", type=int, default=None)
    prep.add_argument("--out", default=None, help="asset directory")
    prep.set_defaults(fn=cmd_prepare)

    run = sub.add_parser("run", help="run an experiment or host the service")
    run.add_argument("--scenario", required=True)
    run.add_argument("--mode", choices=["forward", "inverse", "serve"], default="forward")
    run.add_argument("--duration", type=float, default=None, help="seconds of simulation")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", default=None, help="trace output path")
    run.add_argument("--bind", default=None, help="host:port for serve mode")
    run.set_defaults(fn=cmd_run)

    exp = sub.add_parser("export", help="export a trace to csv or frame records")
    exp.add_argument("--trace", required=True)
    exp.add_argument("--format", choices=["csv", "frames"], default="csv")
    exp.add_argument("--out", default=None)
    exp.set_defaults(fn=cmd_export)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CliError as e:
        print(str(e), file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())

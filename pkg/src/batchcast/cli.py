"""Scenario runner, trace checker and convergence sweep.

Exit codes: 0 all properties pass, 1 property failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import metrics, properties, scenarios


def _run(args) -> int:
    try:
        text = Path(args.scenario).read_text()
        scenario = scenarios.scenario_from_json(text)
        if args.seed is not None:
            scenario.seed = args.seed
        sim = scenarios.run_scenario(scenario)
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: invalid scenario: {exc}", file=sys.stderr)
        return 2

    verdicts = properties.check_trace(sim.trace)
    report = {
        "scenario_digest": hashlib.sha256(text.encode()).hexdigest(),
        "scenario": scenario.name,
        "seed": scenario.seed,
        "verdicts": {k: v.to_json() for k, v in verdicts.items()},
        "metrics": metrics.amortized_report(sim.trace, scenario),
    }
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        trace_path = out / f"{scenario.name}.trace.jsonl"
        trace_path.write_text(sim.trace_jsonl())
        report["trace_path"] = str(trace_path)
        (out / f"{scenario.name}.report.json").write_text(
            json.dumps(report, indent=2))
    failed = _print_verdicts(verdicts)
    return 1 if failed else 0


def _check(args) -> int:
    try:
        records = properties.load_trace_file(args.check_only)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: malformed trace: {exc}", file=sys.stderr)
        return 2
    verdicts = properties.check_trace(records)
    failed = _print_verdicts(verdicts)
    return 1 if failed else 0


def _sweep(args) -> int:
    try:
        spec = json.loads(Path(args.sweep).read_text())
        rows = metrics.convergence_sweep(
            spec.get("m_values", [16, 64, 256, 1024]),
            n_clients=spec.get("clients", 1024),
            payload_bits=spec.get("payload_bits", 64))
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: invalid sweep spec: {exc}", file=sys.stderr)
        return 2
    csv_text = metrics.sweep_csv(rows)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sweep.csv").write_text(csv_text)
    print(csv_text, end="")
    return 0


def _print_verdicts(verdicts) -> bool:
    failed = False
    for name in properties.ALL_PROPERTIES:
        v = verdicts[name]
        if v.ok:
            print(f"PASS {name}")
        else:
            failed = True
            print(f"FAIL {name} at event {v.counterexample}: {v.detail}")
    return failed


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="batchcast",
        description="Run broadcast scenarios, verify traces, sweep costs.")
    parser.add_argument("--scenario", help="scenario JSON file to run")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the scenario seed")
    parser.add_argument("--out", help="output directory for trace and report")
    parser.add_argument("--check-only", metavar="TRACE",
                        help="verify an existing trace file and exit")
    parser.add_argument("--sweep", metavar="SPEC",
                        help="convergence sweep spec (JSON file)")
    parser.add_argument("--write-corpus", metavar="DIR",
                        help="write the bundled scenario corpus and exit")
    args = parser.parse_args(argv)

    if args.write_corpus:
        scenarios.write_corpus(args.write_corpus)
        return 0
    if args.check_only:
        return _check(args)
    if args.sweep:
        return _sweep(args)
    if args.scenario:
        return _run(args)
    parser.print_usage()
    return 2


if __name__ == "__main__":
    sys.exit(main())

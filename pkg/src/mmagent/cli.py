"""Command-line entry point.

Subcommands: run (one scenario or ad-hoc query), suite (a directory of
scenarios), conformance (check a tool server), bank (inspect a memory bank).
Exit codes: 0 success, 1 wrong answer on a ground-truthed single run,
2 configuration or scenario errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import yaml

from .learner import ConfigError, MemoryBank, normalize_answer
from .planner import HttpBackend
from .protocol import ProtocolToolClient, conformance_check, open_endpoint
from .scenario import MODES, ScenarioFormatError, ScriptedToolClient, load_scenario
from .session import (
    Backends,
    SessionConfig,
    run_query,
    run_records,
    run_scenario,
    run_suite,
)
from .toolset import default_registry
from .trace import write_jsonl


def _session_config(args, mode_default: str = "pie") -> SessionConfig:
    return SessionConfig(
        mode=args.mode or mode_default,
        workspace=Path(args.workdir),
        max_attempts=args.max_attempts,
        strict_gt=args.strict_gt,
        debug_prompts=bool(getattr(args, "debug_prompts", None)),
    )


def _tool_client(args):
    if args.tools is None:
        return None
    config = yaml.safe_load(Path(args.tools).read_text(encoding="utf-8")) or {}
    return ProtocolToolClient(
        default=config.get("endpoint"),
        per_tool=config.get("endpoints", {}),
        timeout_s=float(config.get("timeout_s", 60)),
        secret=config.get("secret"),
    )


def _write_trace(args, result) -> None:
    if args.trace:
        path = Path(args.trace)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as handle:
            write_jsonl(run_records(result), handle)


def _cmd_run(args) -> int:
    config = _session_config(args)
    bank = MemoryBank(args.bank) if args.bank else MemoryBank()
    registry = default_registry()

    if args.scenario:
        scenario = load_scenario(args.scenario, registry)
        if args.backend and args.backend.startswith("http:"):
            backend = HttpBackend(args.backend[len("http:"):])
            backends = Backends(planner=backend, evaluator=backend, tool=backend)
            external = _tool_client(args) or ScriptedToolClient(scenario.scripted_tools)
            result = run_query(
                config, registry, backends, external,
                scenario.query, scenario.resources, scenario.ground_truth, bank=bank,
            )
        else:
            result = run_scenario(scenario, config, registry, bank=bank)
        ground_truth = scenario.ground_truth
    else:
        if not args.query:
            print("error: provide a scenario file or --query", file=sys.stderr)
            return 2
        if not args.backend or not args.backend.startswith("http:"):
            print("error: ad-hoc queries need --backend http:URL", file=sys.stderr)
            return 2
        backend = HttpBackend(args.backend[len("http:"):])
        backends = Backends(planner=backend, evaluator=backend, tool=backend)
        resources = [_parse_resource_arg(spec) for spec in args.resource or []]
        result = run_query(
            config, registry, backends, _tool_client(args),
            args.query, resources, args.gt, bank=bank,
        )
        ground_truth = args.gt

    _write_trace(args, result)
    print(f"answer: {result.answer}")
    if result.outcome is not None:
        print(
            f"outcome: {result.outcome.kind} after {result.outcome.attempts_used} attempt(s)"
        )
    if ground_truth is not None and result.answer is not None:
        if normalize_answer(result.answer) != normalize_answer(ground_truth):
            print(f"wrong answer (expected {ground_truth!r})", file=sys.stderr)
            return 1
    elif ground_truth is not None:
        print(f"no answer produced (expected {ground_truth!r})", file=sys.stderr)
        return 1
    return 0


def _parse_resource_arg(spec: str):
    from .scenario import ResourceDecl

    parts = spec.split(":", 2)
    if len(parts) < 2:
        raise ConfigError(f"--resource must be kind:path[:description], got {spec!r}")
    kind, location = parts[0], parts[1]
    description = parts[2] if len(parts) > 2 else Path(location).stem
    if kind == "image":
        return ResourceDecl(kind="image", location=location, description=description)
    if kind == "video":
        return ResourceDecl(
            kind="video", location=location, description=description,
            duration_s=60.0, has_audio=False, has_subtitles=False,
        )
    raise ConfigError(f"unknown resource kind {kind!r}")


def _cmd_suite(args) -> int:
    config = _session_config(args, mode_default="peil_gt")
    bank = MemoryBank(args.bank) if args.bank else MemoryBank()
    report = run_suite(
        args.directory, config, bank=bank,
        trace_dir=args.trace, registry=default_registry(),
    )
    print(report.render())
    return 0


def _cmd_conformance(args) -> int:
    endpoint = open_endpoint(args.endpoint, timeout_s=args.timeout)
    try:
        report = conformance_check(endpoint)
    finally:
        endpoint.close()
    print(report.render())
    return 0 if report.all_passed else 1


def _cmd_bank(args) -> int:
    bank = MemoryBank(args.path)
    if args.query:
        entries = bank.retrieve(args.query, args.k)
    else:
        entries = bank.entries()
    print(f"{len(bank)} entrie(s) in {args.path}")
    for entry in entries:
        print(
            f"- {entry.created_at} query={entry.query!r} answer={entry.answer!r} "
            f"steps={len(entry.trace.steps)}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmagent")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a single query or scenario")
    run.add_argument("scenario", nargs="?", help="scenario YAML file")
    run.add_argument("--query", help="ad-hoc question (requires --backend http:URL)")
    run.add_argument("--resource", action="append",
                     help="kind:path[:description], repeatable")
    run.add_argument("--gt", help="ground-truth answer for scoring")
    run.add_argument("--mode", choices=MODES, default=None)
    run.add_argument("--backend", help="scripted (default for scenarios) or http:URL")
    run.add_argument("--tools", help="YAML mapping of tool endpoints")
    run.add_argument("--trace", help="write the run's JSONL trace here")
    run.add_argument("--bank", help="memory bank file")
    run.add_argument("--max-attempts", type=int, default=3)
    run.add_argument("--strict-gt", action="store_true",
                     help="ground-truth check passes only on normalized exact match")
    run.add_argument("--workdir", default="workspace")
    run.add_argument("--debug-prompts", action="store_true")
    run.set_defaults(func=_cmd_run)

    suite = sub.add_parser("suite", help="run every scenario in a directory")
    suite.add_argument("directory")
    suite.add_argument("--mode", choices=MODES, default=None)
    suite.add_argument("--trace", help="directory for per-scenario trace files")
    suite.add_argument("--bank", help="memory bank file")
    suite.add_argument("--max-attempts", type=int, default=3)
    suite.add_argument("--strict-gt", action="store_true")
    suite.add_argument("--workdir", default="workspace")
    suite.set_defaults(func=_cmd_suite)

    conf = sub.add_parser("conformance", help="check a tool server endpoint")
    conf.add_argument("endpoint", help="http(s)://... or stdio:COMMAND")
    conf.add_argument("--timeout", type=float, default=60.0)
    conf.set_defaults(func=_cmd_conformance)

    bank = sub.add_parser("bank", help="inspect a memory bank file")
    bank.add_argument("path")
    bank.add_argument("--query", help="retrieve entries for this query")
    bank.add_argument("-k", type=int, default=3)
    bank.set_defaults(func=_cmd_bank)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ScenarioFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""The reasoning trace: ordered thought/action/observation steps plus the
resources they touched, with JSONL emission and replay loading.

Record kinds on disk: ``resource``, ``thought``, ``action``, ``observation``,
``summary``, ``final``, ``verdict``, ``outcome``.  Records carry no wall-clock
timestamps and no absolute paths, so identical runs emit identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable

from .executor import Observation
from .grammar import ActionCall, ParseError, parse_action
from .inspector import VisualResource, as_record, from_record, summarize


@dataclass
class TraceStep:
    """One loop iteration.  ``action`` is None when the planner's action could
    not be parsed (the surface string stays in ``action_raw``) or when the
    reply was not in step form at all (``action_raw`` empty)."""

    thought: str
    action: ActionCall | None
    observation: Observation
    action_raw: str = ""
    produced_resources: list[VisualResource] = field(default_factory=list)
    summaries: list[str] = field(default_factory=list)


@dataclass
class ReasoningTrace:
    mode: str
    attempt_index: int = 1
    initial: list[VisualResource] = field(default_factory=list)
    steps: list[TraceStep] = field(default_factory=list)
    final_answer: str | None = None
    exhausted: str | None = None  # "step_budget" | "format_errors" | "backend_error"

    @property
    def ended(self) -> bool:
        return self.final_answer is not None or self.exhausted is not None


def _flatten(text: str) -> str:
    return " ".join(text.split())


def render_history(trace: ReasoningTrace, include_summaries: bool = True) -> str:
    """The prompt-facing rendering: strictly append-only across a session.

    Summaries appear at the position where their resource was registered;
    every Action line is followed by its Observation.
    """
    lines: list[str] = []
    if include_summaries:
        for resource in trace.initial:
            lines.append(f"Summary: {summarize(resource)}")
    for step in trace.steps:
        lines.append(f"Thought: {_flatten(step.thought)}")
        if step.action_raw:
            lines.append(f"Action: {step.action_raw}")
        lines.append(f"Observation: {_flatten(step.observation.text)}")
        if include_summaries:
            for summary in step.summaries:
                lines.append(f"Summary: {summary}")
    if trace.final_answer is not None:
        lines.append(f"Final Answer: {trace.final_answer}")
    return "\n".join(lines)


def structural_issues(trace: ReasoningTrace) -> list[str]:
    """Deterministic consistency scan: every action's resource indices must
    have existed in the catalog before that step executed."""
    issues: list[str] = []
    known = len(trace.initial)
    for position, step in enumerate(trace.steps):
        if step.action is not None:
            for index in step.action.resources:
                if index >= known:
                    issues.append(
                        f"step {position + 1} references visual[{index}] "
                        f"before it was registered"
                    )
        known += len(step.produced_resources)
    return issues


# JSONL emission and loading.

def trace_records(trace: ReasoningTrace) -> list[dict]:
    records: list[dict] = []
    for resource in trace.initial:
        records.append({"kind": "resource", "resource": as_record(resource)})
    for step in trace.steps:
        records.append({"kind": "thought", "text": step.thought})
        if step.action_raw:
            records.append({"kind": "action", "text": step.action_raw})
        records.append(
            {
                "kind": "observation",
                "text": step.observation.text,
                "produced": list(step.observation.produced_indices),
            }
        )
        for resource in step.produced_resources:
            records.append({"kind": "resource", "resource": as_record(resource)})
        for summary in step.summaries:
            records.append({"kind": "summary", "text": summary})
    final: dict = {
        "kind": "final",
        "answer": trace.final_answer,
        "mode": trace.mode,
        "attempt": trace.attempt_index,
    }
    if trace.exhausted is not None:
        final["exhausted"] = trace.exhausted
    records.append(final)
    return records


def verdict_record(attempt: int, passed: bool, critique: str) -> dict:
    return {"kind": "verdict", "attempt": attempt, "pass": passed, "critique": critique}


def outcome_record(kind: str, attempts_used: int, answer: str | None, saved: bool) -> dict:
    return {
        "kind": "outcome",
        "outcome": kind,
        "attempts": attempts_used,
        "answer": answer,
        "saved": saved,
    }


def write_jsonl(records: Iterable[dict], sink: IO[str]) -> None:
    for record in records:
        sink.write(json.dumps(record, ensure_ascii=False) + "\n")


def emit_trace(trace: ReasoningTrace, sink: IO[str] | Path | str) -> None:
    if isinstance(sink, (str, Path)):
        with open(sink, "w", encoding="utf-8") as handle:
            write_jsonl(trace_records(trace), handle)
    else:
        write_jsonl(trace_records(trace), sink)


class TraceFormatError(Exception):
    pass


def traces_from_records(records: list[dict]) -> tuple[list[ReasoningTrace], list[dict], dict | None]:
    """Rebuild traces (one per attempt segment) plus verdict and outcome
    records from a JSONL record stream."""
    traces: list[ReasoningTrace] = []
    verdicts: list[dict] = []
    outcome: dict | None = None

    current: ReasoningTrace | None = None
    step: TraceStep | None = None

    def ensure_trace() -> ReasoningTrace:
        nonlocal current
        if current is None:
            current = ReasoningTrace(mode="", attempt_index=1)
        return current

    def close_step() -> None:
        nonlocal step
        if step is not None:
            ensure_trace().steps.append(step)
            step = None

    for record in records:
        kind = record.get("kind")
        if kind == "resource":
            resource = from_record(record["resource"])
            if step is not None:
                step.produced_resources.append(resource)
            else:
                ensure_trace().initial.append(resource)
        elif kind == "thought":
            close_step()
            step = TraceStep(
                thought=record["text"], action=None,
                observation=Observation(text=""),
            )
        elif kind == "action":
            if step is None:
                raise TraceFormatError("action record without a preceding thought")
            step.action_raw = record["text"]
            try:
                step.action = parse_action(record["text"])
            except ParseError:
                step.action = None
        elif kind == "observation":
            if step is None:
                raise TraceFormatError("observation record without a preceding thought")
            step.observation = Observation(
                text=record["text"], produced_indices=list(record.get("produced", []))
            )
        elif kind == "summary":
            if step is None:
                raise TraceFormatError("summary record outside a step")
            step.summaries.append(record["text"])
        elif kind == "verdict":
            verdicts.append(record)
        elif kind == "outcome":
            outcome = record
        elif kind == "final":
            close_step()
            trace = ensure_trace()
            trace.final_answer = record.get("answer")
            trace.exhausted = record.get("exhausted")
            trace.mode = record.get("mode", "")
            trace.attempt_index = record.get("attempt", 1)
            traces.append(trace)
            current = None
        else:
            raise TraceFormatError(f"unknown record kind: {kind!r}")
    if step is not None or current is not None:
        raise TraceFormatError("trace file ended without a final record")
    return traces, verdicts, outcome


def load_trace(path: Path | str) -> ReasoningTrace:
    """Load a single-attempt trace file; inverse of emit_trace."""
    records = read_jsonl(path)
    traces, _, _ = traces_from_records(records)
    if len(traces) != 1:
        raise TraceFormatError(f"expected one trace in {path}, found {len(traces)}")
    return traces[0]


def read_jsonl(path: Path | str) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise TraceFormatError(f"{path}:{line_number}: invalid JSON: {exc}")
    return records

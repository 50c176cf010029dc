"""Attempt evaluation, the retry loop, and the in-context memory bank.

Two evaluator modes: self-assessment (an LLM judges the trace against
completeness/consistency/format, after a deterministic structural pre-screen)
and ground-truth comparison (a normalizer first, then an LLM semantic judge
unless strict matching is requested).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Protocol

from . import templates
from .grammar import parse_action
from .planner import LLMBackend
from .trace import (
    ReasoningTrace,
    render_history,
    structural_issues,
    trace_records,
    traces_from_records,
)


class ConfigError(Exception):
    pass


@dataclass
class LearnerConfig:
    mode: str = "off"  # "off" | "self_check" | "gt_check"
    max_attempts: int = 3
    strict_gt: bool = False

    def __post_init__(self) -> None:
        if self.mode not in ("off", "self_check", "gt_check"):
            raise ConfigError(f"unknown learner mode {self.mode!r}")
        if self.max_attempts < 1:
            raise ConfigError("max_attempts must be at least 1")


@dataclass
class Verdict:
    passed: bool
    critique: str

    def __post_init__(self) -> None:
        if not self.passed and not self.critique:
            raise ValueError("failing verdicts need a critique")


@dataclass
class MemoryEntry:
    query: str
    trace: ReasoningTrace
    answer: str
    created_at: str


@dataclass
class LearnerOutcome:
    kind: str  # "no_adjustment" | "plan_revision" | "function_update_flag"
    attempts_used: int
    final_answer: str | None
    saved_entry: MemoryEntry | None = None
    verdicts: list[Verdict] = field(default_factory=list)


_ARTICLES = {"a", "an", "the"}
_NUMBER_WORDS = {
    "zero": "0", "one": "1", "two": "2", "three": "3", "four": "4",
    "five": "5", "six": "6", "seven": "7", "eight": "8", "nine": "9",
    "ten": "10", "eleven": "11", "twelve": "12", "thirteen": "13",
    "fourteen": "14", "fifteen": "15", "sixteen": "16", "seventeen": "17",
    "eighteen": "18", "nineteen": "19", "twenty": "20",
}

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def normalize_answer(text: str) -> str:
    """Case-fold, drop articles and punctuation, map number words 0-20 to
    digits, collapse whitespace."""
    tokens = _TOKEN_RE.findall(text.casefold())
    out = [_NUMBER_WORDS.get(t, t) for t in tokens if t not in _ARTICLES]
    return " ".join(out)


def _parse_verdict(reply: str) -> Verdict:
    stripped = reply.strip()
    head, _, rest = stripped.partition(":")
    word = head.strip().upper()
    critique = rest.strip() or stripped
    if word == "PASS":
        return Verdict(True, critique)
    if word == "FAIL":
        return Verdict(False, critique or "no critique provided")
    return Verdict(False, "evaluator format error")


def self_assess(backend: LLMBackend, trace: ReasoningTrace, query: str) -> Verdict:
    """Judge a finished attempt for completeness, consistency and format.

    Structurally broken traces fail without consulting the backend: a missing
    final answer is incomplete by construction, and an action citing a
    resource index that never existed is inconsistent by construction.
    """
    if trace.final_answer is None:
        return Verdict(False, "incomplete: the attempt ended without a final answer")
    issues = structural_issues(trace)
    if issues:
        return Verdict(False, "inconsistent: " + "; ".join(issues))
    prompt = templates.prompt("evaluator_self").format(
        query=query, trace=render_history(trace)
    )
    return _parse_verdict(backend.complete(prompt, stop=[]))


def gt_compare(
    backend: LLMBackend | None,
    prediction: str,
    ground_truth: str,
    strict: bool = False,
) -> Verdict:
    """Compare a prediction against the reference answer.

    Exact match after normalization passes without any backend call.  In
    strict mode a normalized mismatch fails outright (benchmark-style
    scoring); otherwise the backend judges semantic consistency.
    """
    if not prediction or not ground_truth:
        raise ValueError("gt_compare requires non-empty prediction and ground truth")
    if normalize_answer(prediction) == normalize_answer(ground_truth):
        return Verdict(True, "exact match after normalization")
    if strict or backend is None:
        return Verdict(
            False,
            f"{prediction!r} does not match the reference {ground_truth!r} "
            f"after normalization",
        )
    prompt = templates.prompt("evaluator_gt").format(
        prediction=prediction, ground_truth=ground_truth
    )
    return _parse_verdict(backend.complete(prompt, stop=[]))


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class MemoryBank:
    """Append-only store of successful (query, trace, answer) triples.

    Persists one JSON record per line when given a path; reloads on
    construction so banks accumulate across runs.
    """

    def __init__(self, path: Path | str | None = None):
        self.path = Path(path) if path is not None else None
        self._entries: list[MemoryEntry] = []
        if self.path is not None and self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    self._entries.append(_entry_from_json(json.loads(line)))

    def __len__(self) -> int:
        return len(self._entries)

    def entries(self) -> list[MemoryEntry]:
        return list(self._entries)

    def store(self, entry: MemoryEntry) -> None:
        """Append after re-validating the trace: the final answer must match,
        every action must re-parse, and no step may cite an unregistered
        resource."""
        if entry.trace.final_answer != entry.answer:
            raise ValueError("stored trace must end in the entry's answer")
        issues = structural_issues(entry.trace)
        if issues:
            raise ValueError("stored trace is inconsistent: " + "; ".join(issues))
        for step in entry.trace.steps:
            if step.action is not None:
                parse_action(step.action_raw)
        self._entries.append(entry)
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as handle:
                handle.write(json.dumps(_entry_to_json(entry), ensure_ascii=False) + "\n")

    def retrieve(self, query: str, k: int) -> list[MemoryEntry]:
        """Top-k by lexical token overlap with the query; ties go to the
        newest entry."""
        if k <= 0:
            return []
        query_tokens = set(_TOKEN_RE.findall(query.casefold()))
        scored = []
        for position, entry in enumerate(self._entries):
            overlap = len(query_tokens & set(_TOKEN_RE.findall(entry.query.casefold())))
            scored.append((-overlap, -position, entry))
        scored.sort(key=lambda item: (item[0], item[1]))
        return [entry for _, _, entry in scored[:k]]


def _entry_to_json(entry: MemoryEntry) -> dict:
    return {
        "query": entry.query,
        "trace": trace_records(entry.trace),
        "answer": entry.answer,
        "created_at": entry.created_at,
    }


def _entry_from_json(payload: dict) -> MemoryEntry:
    traces, _, _ = traces_from_records(payload["trace"])
    return MemoryEntry(
        query=payload["query"],
        trace=traces[0],
        answer=payload["answer"],
        created_at=payload["created_at"],
    )


def render_examples(entries: list[MemoryEntry]) -> str:
    """In-context example block: each entry as its query plus the full trace."""
    blocks = []
    for entry in entries:
        blocks.append(f"Example question: {entry.query}\n{render_history(entry.trace)}")
    return "\n\n".join(blocks)


class AttemptFactory(Protocol):
    """Runs one fresh attempt; the critique of the previous failed attempt is
    empty on the first call."""

    def __call__(self, attempt_index: int, critique: str) -> tuple[str | None, ReasoningTrace]: ...


def run_attempt_loop(
    session_factory: AttemptFactory | Callable[[int, str], tuple[str | None, ReasoningTrace]],
    query: str,
    config: LearnerConfig,
    ground_truth: str | None = None,
    *,
    evaluator: LLMBackend | None = None,
    bank: MemoryBank | None = None,
) -> LearnerOutcome:
    """Retry until an attempt passes evaluation or attempts run out.

    First-attempt pass means nothing to adjust; a later pass is a plan
    revision whose trace is stored in the bank; exhausting all attempts
    raises the function-update flag (retraining is out of scope, only the
    flag plus the failing trace are reported).
    """
    if config.mode == "gt_check" and not ground_truth:
        raise ConfigError("gt_check mode requires a ground truth answer")

    if config.mode == "off":
        answer, _trace = session_factory(1, "")
        return LearnerOutcome(kind="no_adjustment", attempts_used=1, final_answer=answer)

    critique = ""
    verdicts: list[Verdict] = []
    answer: str | None = None
    for attempt in range(1, config.max_attempts + 1):
        answer, trace = session_factory(attempt, critique)
        if answer is None:
            verdict = Verdict(False, "incomplete: the attempt ended without a final answer")
        elif config.mode == "self_check":
            verdict = self_assess(evaluator, trace, query)
        else:
            verdict = gt_compare(evaluator, answer, ground_truth or "", config.strict_gt)
        verdicts.append(verdict)
        if verdict.passed:
            if attempt == 1:
                return LearnerOutcome(
                    kind="no_adjustment", attempts_used=1,
                    final_answer=answer, verdicts=verdicts,
                )
            entry = MemoryEntry(
                query=query, trace=trace, answer=answer or "", created_at=_now()
            )
            if bank is not None:
                bank.store(entry)
            return LearnerOutcome(
                kind="plan_revision", attempts_used=attempt,
                final_answer=answer, saved_entry=entry, verdicts=verdicts,
            )
        critique = verdict.critique
    return LearnerOutcome(
        kind="function_update_flag", attempts_used=config.max_attempts,
        final_answer=answer, verdicts=verdicts,
    )

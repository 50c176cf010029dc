"""The per-query session loop in each ablation mode, plus the suite runner.

Modes:
  reason_only  one upfront plan, executed blind, answer synthesized at the end
  react        interleaved loop without resource summaries; tools chain on the
               previous observation text only
  pie          full interleaving with resource summaries, retry learning off
  peil_self    pie plus the retry loop with self-assessment
  peil_gt      pie plus the retry loop with ground-truth comparison
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from . import templates
from .executor import Executor, ExternalClient, Observation
from .grammar import ParseError, ToolRegistry, parse_action, render_toolset_illustration
from .inspector import ResourceStore, summarize
from .learner import (
    ConfigError,
    LearnerConfig,
    LearnerOutcome,
    MemoryBank,
    normalize_answer,
    render_examples,
    run_attempt_loop,
)
from .planner import (
    STOP_SEQUENCES,
    BackendError,
    FormatError,
    LLMBackend,
    assemble_prompt,
    parse_planner_output,
)
from .scenario import MODES, Scenario, ScriptedToolClient
from .trace import (
    ReasoningTrace,
    TraceStep,
    outcome_record,
    render_history,
    trace_records,
    verdict_record,
    write_jsonl,
)
from .toolset import default_registry

AUTO_ASR_THOUGHT = "visual[{index}] has audio; transcribing it before planning."
CAPTION_ON_REGISTER_QUERY = "briefly describe this image"
LEARNER_MODES = {"peil_self": "self_check", "peil_gt": "gt_check"}


@dataclass
class SessionConfig:
    mode: str = "pie"
    workspace: Path = Path("workspace")
    max_steps: int = 10
    format_error_budget: int = 2
    max_attempts: int = 3
    strict_gt: bool = False
    in_context_k: int = 2
    caption_on_register: bool = False
    debug_prompts: bool = False

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")


@dataclass
class Backends:
    planner: LLMBackend
    evaluator: LLMBackend | None = None
    tool: LLMBackend | None = None


@dataclass
class RunResult:
    answer: str | None
    attempts: list[ReasoningTrace]
    outcome: LearnerOutcome | None = None

    @property
    def trace(self) -> ReasoningTrace:
        return self.attempts[-1]


class Session:
    """One attempt at one query; strictly sequential."""

    def __init__(
        self,
        config: SessionConfig,
        registry: ToolRegistry,
        backends: Backends,
        external: ExternalClient | None,
        *,
        attempt_index: int = 1,
        critique: str = "",
        examples: str = "",
    ):
        self.config = config
        self.registry = registry
        self.backends = backends
        self.attempt_index = attempt_index
        self.critique = critique
        self.examples = examples
        self.store = ResourceStore(workspace=config.workspace)
        self.executor = Executor(
            registry,
            self.store,
            external=external,
            backend=backends.tool,
            context_policy="previous_observation" if config.mode == "react" else "sidecar",
        )
        self.prompts: list[str] = []

    @property
    def include_summaries(self) -> bool:
        return self.config.mode != "react"

    def run(self, query: str, resources: list) -> tuple[str | None, ReasoningTrace]:
        trace = ReasoningTrace(mode=self.config.mode, attempt_index=self.attempt_index)
        self._register_inputs(trace, resources)
        if self.config.mode == "reason_only":
            self._run_plan_once(query, trace)
        else:
            self._run_interleaved(query, trace)
        return trace.final_answer, trace

    # Input registration plus the automatic transcription policy: a video
    # arriving with audio is transcribed immediately, before any planning.
    def _register_inputs(self, trace: ReasoningTrace, resources: list) -> None:
        for decl in resources:
            kwargs = {}
            description = decl.description
            if decl.kind == "video":
                kwargs = {
                    "duration_s": decl.duration_s,
                    "has_audio": decl.has_audio,
                    "has_subtitles": decl.has_subtitles,
                }
            elif self.config.caption_on_register:
                description = self._caption_for_registration(decl) or description
            index, _summary = self.store.register(
                decl.kind, decl.location, description, **kwargs
            )
            trace.initial.append(self.store.get(index))
            if decl.subtitles:
                self.store.attach_transcript(
                    index, "subtitles", _as_lines(decl.subtitles)
                )
            if decl.narration:
                self.store.attach_transcript(
                    index, "narration", _as_lines(decl.narration)
                )
            if decl.ocr:
                self.store.attach_ocr(index, list(decl.ocr))
        for resource in list(trace.initial):
            if resource.kind == "video" and resource.has_audio:
                self._auto_transcribe(trace, resource.index)

    def _caption_for_registration(self, decl) -> str | None:
        """Optional description pass for user images: one caption call before
        the record is created (records are immutable afterwards)."""
        from .executor import ExternalToolError
        from .inspector import VisualResource

        transient = VisualResource(
            index=len(self.store), kind="image", source="user",
            location=decl.location, description=decl.description,
        )
        try:
            result = self.executor.external.invoke(
                "caption", CAPTION_ON_REGISTER_QUERY, [transient], self.store
            )
        except ExternalToolError:
            return None
        if result.status != "ok":
            return None
        text = str(result.payload.get("text", "")).strip()
        return text or None

    def _auto_transcribe(self, trace: ReasoningTrace, index: int) -> None:
        raw = f"asr(None, visual[{index}])"
        call = parse_action(raw)
        observation = self.executor.execute(call)
        self._append_step(
            trace,
            thought=AUTO_ASR_THOUGHT.format(index=index),
            action_raw=raw,
            call=call,
            observation=observation,
        )

    def _append_step(self, trace, *, thought, action_raw, call, observation) -> None:
        produced = [self.store.get(i) for i in observation.produced_indices]
        summaries = [summarize(r) for r in produced] if self.include_summaries else []
        trace.steps.append(
            TraceStep(
                thought=thought,
                action=call,
                observation=observation,
                action_raw=action_raw,
                produced_resources=produced,
                summaries=summaries,
            )
        )

    def _instruction(self) -> str:
        return render_toolset_illustration(self.registry)

    def _prompt(self, query: str, trace: ReasoningTrace, template: str) -> str:
        prompt = assemble_prompt(
            self._instruction(),
            query,
            render_history(trace, self.include_summaries),
            examples=self.examples,
            critique=self.critique,
            template=template,
        )
        if self.config.debug_prompts:
            self.prompts.append(prompt)
        return prompt

    def _run_interleaved(self, query: str, trace: ReasoningTrace) -> None:
        format_failures = 0
        while len(trace.steps) < self.config.max_steps:
            prompt = self._prompt(query, trace, "planner")
            try:
                reply = self.backends.planner.complete(prompt, stop=STOP_SEQUENCES)
            except BackendError:
                trace.exhausted = "backend_error"
                return
            try:
                step = parse_planner_output(reply)
            except FormatError as exc:
                format_failures += 1
                if format_failures >= self.config.format_error_budget:
                    trace.exhausted = "format_errors"
                    return
                self._append_step(
                    trace,
                    thought=reply.strip(),
                    action_raw="",
                    call=None,
                    observation=Observation(text=f"Error: {exc}"),
                )
                continue
            format_failures = 0
            if step.variant == "final":
                trace.final_answer = step.answer
                return
            self._execute_step(trace, step.thought, step.action_raw, query)
        trace.exhausted = "step_budget"

    def _execute_step(self, trace, thought: str, action_raw: str, query: str) -> None:
        previous = trace.steps[-1].observation.text if trace.steps else ""
        try:
            call = parse_action(action_raw)
        except ParseError as exc:
            observation = Observation(
                text=templates.observation_text(
                    "error.parse", position=exc.position, expected=exc.expected
                )
            )
            self._append_step(
                trace, thought=thought, action_raw=action_raw,
                call=None, observation=observation,
            )
            return
        observation = self.executor.execute(
            call,
            trace_context=render_history(trace, self.include_summaries),
            previous_observation=previous,
        )
        self._append_step(
            trace, thought=thought, action_raw=action_raw,
            call=call, observation=observation,
        )

    def _run_plan_once(self, query: str, trace: ReasoningTrace) -> None:
        prompt = self._prompt(query, trace, "plan_once")
        try:
            reply = self.backends.planner.complete(prompt, stop=STOP_SEQUENCES)
        except BackendError:
            trace.exhausted = "backend_error"
            return
        actions = _plan_lines(reply)
        for position, action_raw in enumerate(actions[: self.config.max_steps - 1]):
            self._execute_step(
                trace, f"Execute planned step {position + 1}.", action_raw, query
            )
        synth_raw = f'knowledge_reason({_quote(query)}, [])'
        self._execute_step(
            trace, "Synthesize the final answer from the collected observations.",
            synth_raw, query,
        )
        last = trace.steps[-1] if trace.steps else None
        if last is not None and not last.observation.text.startswith("Error:"):
            trace.final_answer = last.observation.text
        else:
            trace.exhausted = "step_budget"

    def run_scripted(self, scenario: Scenario) -> tuple[str | None, ReasoningTrace]:
        return self.run(scenario.query, scenario.resources)


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _as_lines(entries: list) -> list:
    from .tools.transcripts import TranscriptLine

    return [TranscriptLine(float(e[0]), float(e[1]), str(e[2])) for e in entries]


def _plan_lines(reply: str) -> list[str]:
    actions = []
    for line in reply.splitlines():
        stripped = line.strip().lstrip("-* ").strip()
        if not stripped:
            continue
        if stripped[0].isdigit():
            stripped = stripped.split(".", 1)[-1].strip()
        actions.append(stripped)
    return actions


def run_query(
    config: SessionConfig,
    registry: ToolRegistry,
    backends: Backends,
    external: ExternalClient | None,
    query: str,
    resources: list,
    ground_truth: str | None = None,
    bank: MemoryBank | None = None,
) -> RunResult:
    """Run one query end to end in the configured mode.

    Learner modes run fresh attempts through the retry loop (each attempt is
    a new session sharing the memory bank); the other modes run exactly one
    session.
    """
    if config.mode not in LEARNER_MODES:
        session = Session(config, registry, backends, external, examples="")
        answer, trace = session.run(query, resources)
        return RunResult(answer=answer, attempts=[trace])

    attempts: list[ReasoningTrace] = []

    def factory(attempt_index: int, critique: str) -> tuple[str | None, ReasoningTrace]:
        examples = ""
        if bank is not None and config.in_context_k > 0:
            examples = render_examples(bank.retrieve(query, config.in_context_k))
        session = Session(
            config, registry, backends, external,
            attempt_index=attempt_index, critique=critique, examples=examples,
        )
        answer, trace = session.run(query, resources)
        attempts.append(trace)
        return answer, trace

    learner_config = LearnerConfig(
        mode=LEARNER_MODES[config.mode],
        max_attempts=config.max_attempts,
        strict_gt=config.strict_gt,
    )
    outcome = run_attempt_loop(
        factory, query, learner_config, ground_truth,
        evaluator=backends.evaluator, bank=bank,
    )
    return RunResult(
        answer=outcome.final_answer, attempts=attempts, outcome=outcome
    )


def run_records(result: RunResult) -> list[dict]:
    """All attempts' records, with verdicts after each attempt and the final
    outcome record last."""
    records: list[dict] = []
    verdicts = result.outcome.verdicts if result.outcome else []
    for position, trace in enumerate(result.attempts):
        records.extend(trace_records(trace))
        if position < len(verdicts):
            verdict = verdicts[position]
            records.append(verdict_record(position + 1, verdict.passed, verdict.critique))
    if result.outcome is not None:
        records.append(
            outcome_record(
                result.outcome.kind,
                result.outcome.attempts_used,
                result.outcome.final_answer,
                result.outcome.saved_entry is not None,
            )
        )
    return records


def scenario_backends(scenario: Scenario, mode: str) -> Backends:
    return Backends(
        planner=scenario.backend_for(mode, "planner"),
        evaluator=scenario.backend_for(mode, "evaluator"),
        tool=scenario.backend_for(mode, "tool"),
    )


def run_scenario(
    scenario: Scenario,
    config: SessionConfig,
    registry: ToolRegistry | None = None,
    bank: MemoryBank | None = None,
) -> RunResult:
    registry = registry or default_registry()
    backends = scenario_backends(scenario, config.mode)
    external = ScriptedToolClient(scenario.scripted_tools)
    return run_query(
        config, registry, backends, external,
        scenario.query, scenario.resources, scenario.ground_truth, bank=bank,
    )


@dataclass
class ScenarioResult:
    name: str
    answer: str | None
    solved: bool | None  # None when the scenario has no ground truth
    attempts_used: int
    outcome_kind: str | None


@dataclass
class SuiteReport:
    mode: str
    results: list[ScenarioResult] = field(default_factory=list)
    bank_growth: int = 0

    @property
    def solved_count(self) -> int:
        return sum(1 for r in self.results if r.solved)

    @property
    def scored_count(self) -> int:
        return sum(1 for r in self.results if r.solved is not None)

    @property
    def accuracy(self) -> float | None:
        if self.scored_count == 0:
            return None
        return self.solved_count / self.scored_count

    def attempts_histogram(self) -> dict[int, int]:
        histogram: dict[int, int] = {}
        for result in self.results:
            histogram[result.attempts_used] = histogram.get(result.attempts_used, 0) + 1
        return dict(sorted(histogram.items()))

    def render(self) -> str:
        lines = [f"suite mode={self.mode}"]
        for r in self.results:
            status = "-" if r.solved is None else ("solved" if r.solved else "wrong")
            outcome = f" outcome={r.outcome_kind}" if r.outcome_kind else ""
            lines.append(
                f"  {r.name}: {status} attempts={r.attempts_used}{outcome} "
                f"answer={r.answer!r}"
            )
        accuracy = "n/a" if self.accuracy is None else f"{self.accuracy:.2f}"
        lines.append(
            f"solved {self.solved_count}/{self.scored_count} (accuracy {accuracy}); "
            f"attempts histogram {self.attempts_histogram()}; "
            f"bank growth +{self.bank_growth}"
        )
        return "\n".join(lines)


def run_suite(
    directory: Path | str,
    config: SessionConfig,
    *,
    bank: MemoryBank | None = None,
    trace_dir: Path | str | None = None,
    registry: ToolRegistry | None = None,
) -> SuiteReport:
    """Run every scenario file in a directory (sorted by name) in one mode.

    Scenarios share the registry and, when given, the bank; each one gets a
    fresh workspace subdirectory.  With trace_dir set, one JSONL trace file
    is written per scenario.
    """
    directory = Path(directory)
    registry = registry or default_registry()
    report = SuiteReport(mode=config.mode)
    bank_before = len(bank) if bank is not None else 0
    from dataclasses import replace as dc_replace

    for path in sorted(directory.glob("*.yaml")):
        scenario_obj = _load(path, registry)
        scenario_config = dc_replace(
            config, workspace=Path(config.workspace) / f"{scenario_obj.name}-{config.mode}"
        )
        result = run_scenario(scenario_obj, scenario_config, registry, bank=bank)
        solved: bool | None = None
        if scenario_obj.ground_truth is not None:
            solved = result.answer is not None and normalize_answer(
                result.answer
            ) == normalize_answer(scenario_obj.ground_truth)
        report.results.append(
            ScenarioResult(
                name=scenario_obj.name,
                answer=result.answer,
                solved=solved,
                attempts_used=len(result.attempts),
                outcome_kind=result.outcome.kind if result.outcome else None,
            )
        )
        if trace_dir is not None:
            trace_path = Path(trace_dir) / f"{scenario_obj.name}.jsonl"
            trace_path.parent.mkdir(parents=True, exist_ok=True)
            with open(trace_path, "w", encoding="utf-8") as handle:
                write_jsonl(run_records(result), handle)
    if bank is not None:
        report.bank_growth = len(bank) - bank_before
    return report


def _load(path: Path, registry: ToolRegistry) -> Scenario:
    from .scenario import load_scenario

    return load_scenario(path, registry)

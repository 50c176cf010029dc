"""Scenario files: self-contained, deterministic stand-ins for live QA items.

One YAML document declares the query, the fixture resources (with transcript
and OCR sidecars), an ordered script of LLM completions tagged by role, and
canned external-tool responses keyed by (tool, query).  A scenario can drive
every ablation mode: script entries may carry a ``modes`` filter and per-mode
queues are materialized at load time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .executor import ExternalToolError, ToolResult
from .grammar import ParseError, ToolRegistry, parse_action
from .planner import FormatError, ScriptEntry, ScriptedBackend, parse_planner_output

MODES = ("reason_only", "react", "pie", "peil_self", "peil_gt")


class ScenarioFormatError(Exception):
    def __init__(self, message: str, *, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if field is not None:
            prefix += f"field {field}: "
        super().__init__(prefix + message)


@dataclass
class ResourceDecl:
    kind: str
    location: str
    description: str
    duration_s: float | None = None
    has_audio: bool = False
    has_subtitles: bool = False
    subtitles: list | None = None
    narration: list | None = None
    ocr: list | None = None


@dataclass
class Scenario:
    name: str
    query: str
    resources: list[ResourceDecl]
    scripted_llm: list[ScriptEntry]
    scripted_tools: dict[tuple[str, str], dict] = field(default_factory=dict)
    ground_truth: str | None = None
    expected: dict | None = None
    base_dir: Path = Path(".")

    def entries_for(self, mode: str, role: str) -> list[ScriptEntry]:
        return [
            e for e in self.scripted_llm
            if e.role == role and (e.modes is None or mode in e.modes)
        ]

    def backend_for(self, mode: str, role: str) -> ScriptedBackend:
        return ScriptedBackend(self.entries_for(mode, role), role=role)


class ScriptedToolClient:
    """Canned external-tool responses keyed by (tool, query)."""

    def __init__(self, responses: dict[tuple[str, str], dict]):
        self._responses = responses
        self.calls: list[tuple[str, str]] = []

    def invoke(self, tool, query, resources, store) -> ToolResult:
        key = (tool, query or "")
        self.calls.append(key)
        if key not in self._responses:
            raise ExternalToolError(
                f"no scripted response for tool '{tool}' with query {query!r}"
            )
        entry = self._responses[key]
        status = entry.get("status", "ok")
        if status == "error":
            return ToolResult.error(entry.get("message", "scripted tool error"))
        return ToolResult(status="ok", payload=dict(entry.get("payload", {})))


def _require(mapping: dict, key: str, kind: type, where: str):
    if key not in mapping:
        raise ScenarioFormatError(f"missing required key", field=f"{where}.{key}")
    value = mapping[key]
    if not isinstance(value, kind):
        raise ScenarioFormatError(
            f"expected {kind.__name__}, got {type(value).__name__}",
            field=f"{where}.{key}",
        )
    return value


def _load_resource(entry: dict, position: int) -> ResourceDecl:
    where = f"resources[{position}]"
    kind = _require(entry, "kind", str, where)
    if kind not in ("image", "video"):
        raise ScenarioFormatError(f"unknown kind {kind!r}", field=f"{where}.kind")
    decl = ResourceDecl(
        kind=kind,
        location=_require(entry, "location", str, where),
        description=_require(entry, "description", str, where),
        duration_s=entry.get("duration_s"),
        has_audio=bool(entry.get("has_audio", False)),
        has_subtitles=bool(entry.get("has_subtitles", False)),
        subtitles=entry.get("subtitles"),
        narration=entry.get("narration"),
        ocr=entry.get("ocr"),
    )
    if kind == "video" and (decl.duration_s is None or decl.duration_s <= 0):
        raise ScenarioFormatError(
            "videos need a positive duration_s", field=f"{where}.duration_s"
        )
    if kind == "image" and decl.duration_s is not None:
        raise ScenarioFormatError(
            "images must not declare duration_s", field=f"{where}.duration_s"
        )
    return decl


def _lint_script(scenario: Scenario, registry: ToolRegistry) -> None:
    """Internal-consistency lint: every scripted action that parses must be
    resolvable against the declared resources plus whatever artifacts earlier
    producing steps could have registered."""
    declared = len(scenario.resources)
    for mode in MODES:
        # Conservative upper bound: each artifact-producing action can add at
        # most one resource; retry attempts only widen the bound further.
        budget = declared
        for position, entry in enumerate(scenario.entries_for(mode, "planner")):
            for action_text in _actions_in(entry.text, mode):
                try:
                    call = parse_action(action_text)
                except ParseError:
                    continue  # deliberately malformed entries exercise error paths
                for index in call.resources:
                    if index >= budget:
                        raise ScenarioFormatError(
                            f"mode {mode}: scripted action {action_text!r} references "
                            f"visual[{index}] but at most {budget} resources can exist",
                            field=f"scripted_llm[{position}]",
                        )
                spec = registry.lookup(call.tool)
                if spec is not None and spec.produces_artifact:
                    budget += 1


def _actions_in(text: str, mode: str) -> list[str]:
    if mode == "reason_only":
        actions = []
        for line in text.splitlines():
            stripped = line.strip()
            if not stripped:
                continue
            stripped = stripped.lstrip("-* ").strip()
            if stripped and stripped[0].isdigit():
                stripped = stripped.split(".", 1)[-1].strip()
            actions.append(stripped)
        return actions
    try:
        step = parse_planner_output(text)
    except FormatError:
        return []
    if step.variant == "step":
        return [step.action_raw]
    return []


def load_scenario(path: Path | str, registry: ToolRegistry | None = None) -> Scenario:
    """Parse and validate one scenario file.

    Raises ScenarioFormatError carrying the YAML line for syntax errors or
    the offending field path for semantic ones.
    """
    path = Path(path)
    try:
        payload = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        line = None
        mark = getattr(exc, "problem_mark", None)
        if mark is not None:
            line = mark.line + 1
        raise ScenarioFormatError(f"invalid YAML: {exc}", line=line)
    if not isinstance(payload, dict):
        raise ScenarioFormatError("scenario must be a mapping", field="(root)")

    name = _require(payload, "name", str, "(root)")
    query = _require(payload, "query", str, "(root)")
    raw_resources = _require(payload, "resources", list, "(root)")
    resources = [_load_resource(r, i) for i, r in enumerate(raw_resources)]

    raw_script = _require(payload, "scripted_llm", list, "(root)")
    script: list[ScriptEntry] = []
    for position, entry in enumerate(raw_script):
        where = f"scripted_llm[{position}]"
        role = _require(entry, "role", str, where)
        if role not in ("planner", "evaluator", "tool"):
            raise ScenarioFormatError(f"unknown role {role!r}", field=f"{where}.role")
        modes = entry.get("modes")
        if modes is not None:
            unknown = set(modes) - set(MODES)
            if unknown:
                raise ScenarioFormatError(
                    f"unknown modes {sorted(unknown)}", field=f"{where}.modes"
                )
        script.append(
            ScriptEntry(
                role=role,
                text=_require(entry, "text", str, where),
                modes=list(modes) if modes is not None else None,
                expect=entry.get("expect"),
            )
        )

    tools: dict[tuple[str, str], dict] = {}
    for position, entry in enumerate(payload.get("scripted_tools", []) or []):
        where = f"scripted_tools[{position}]"
        tool = _require(entry, "tool", str, where)
        key = (tool, entry.get("query") or "")
        tools[key] = {
            "status": entry.get("status", "ok"),
            "payload": entry.get("payload", {}),
            "message": entry.get("message", ""),
        }

    scenario = Scenario(
        name=name,
        query=query,
        resources=resources,
        scripted_llm=script,
        scripted_tools=tools,
        ground_truth=payload.get("ground_truth"),
        expected=payload.get("expected"),
        base_dir=path.parent,
    )
    if registry is not None:
        _lint_script(scenario, registry)
    return scenario

"""Runs one action through validation, dispatch and post-processing.

A failure at any stage becomes an error observation rather than an exception;
tool failures never abort the reasoning loop.  Builtin tools run in-process,
prompt tools run one completion over the LLM backend, external tools go
through a client (scripted fixtures or the wire protocol).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

from . import templates
from .grammar import ActionCall, ToolRegistry, ToolSpec, validate_call
from .inspector import ResourceStore, VisualResource
from .planner import BackendError, LLMBackend
from .tools.counting import count_objects
from .tools.prompted import ground_from_transcript, reason_over_text
from .tools.temporal import QueryFormatError, parse_temporal_query, temporal_reason
from .tools.textground import OcrBox, text_ground
from .tools.transcripts import TranscriptLine, render_lines


@dataclass
class ToolResult:
    status: str  # "ok" | "error"
    payload: dict = field(default_factory=dict)
    message: str = ""

    @classmethod
    def ok(cls, **payload) -> "ToolResult":
        return cls(status="ok", payload=payload)

    @classmethod
    def error(cls, message: str) -> "ToolResult":
        return cls(status="error", message=message)


@dataclass
class Observation:
    text: str
    produced_indices: list[int] = field(default_factory=list)


@dataclass
class DispatchPlan:
    route: str  # mirrors ToolSpec.execution
    resolved_inputs: list[VisualResource]
    endpoint: str | None = None
    context: str | None = None
    context_channel: str | None = None


class ExternalClient(Protocol):
    """Transport to model-backed tools; raises only ExternalToolError."""

    def invoke(
        self, tool: str, query: str | None, resources: list[VisualResource],
        store: ResourceStore,
    ) -> ToolResult: ...


class ExternalToolError(Exception):
    pass


class UnconfiguredClient:
    """Placeholder client used when no tool endpoints are configured."""

    def invoke(self, tool, query, resources, store) -> ToolResult:
        raise ExternalToolError(f"no endpoint configured for tool '{tool}'")


class _DispatchError(Exception):
    def __init__(self, text: str):
        self.text = text
        super().__init__(text)


def _format_seconds(value: float) -> str:
    return f"{value:g}"


class Executor:
    """One action in, one observation out.

    ``context_policy`` selects what prompt tools receive as context:
    "sidecar" (the referenced video's transcript) or "previous_observation"
    (the chained-text restriction used by the reduced-harness mode).
    """

    def __init__(
        self,
        registry: ToolRegistry,
        store: ResourceStore,
        external: ExternalClient | None = None,
        backend: LLMBackend | None = None,
        context_policy: str = "sidecar",
    ):
        self.registry = registry
        self.store = store
        self.external = external or UnconfiguredClient()
        self.backend = backend
        self.context_policy = context_policy

    # Stage 1 + 2 + 3.
    def execute(
        self,
        call: ActionCall,
        *,
        trace_context: str = "",
        previous_observation: str = "",
    ) -> Observation:
        report = validate_call(call, self.registry, self.store.catalog())
        if not report.ok:
            head = report.violations[0]
            if head.code == "unknown_tool":
                text = templates.observation_text(
                    "error.unknown_tool",
                    tool=call.tool,
                    tools=", ".join(self.registry.names()),
                )
            else:
                text = "; ".join(
                    templates.observation_text(f"error.{v.code}", message=v.message)
                    for v in report.violations
                )
            return Observation(text=text)

        spec = self.registry.lookup(call.tool)
        assert spec is not None
        before = len(self.store)
        try:
            plan = self.map_to_executable(
                call, spec,
                trace_context=trace_context,
                previous_observation=previous_observation,
            )
            result = self._dispatch(call, spec, plan)
            text, produced = self._post_process(call, spec, plan, result)
        except _DispatchError as exc:
            return Observation(text=exc.text)
        except BackendError as exc:
            return Observation(
                text=templates.observation_text(
                    "error.transport", tool=call.tool, message=str(exc)
                )
            )
        assert len(self.store) - before == len(produced)
        return Observation(text=text, produced_indices=produced)

    def map_to_executable(
        self,
        call: ActionCall,
        spec: ToolSpec | None = None,
        *,
        trace_context: str = "",
        previous_observation: str = "",
    ) -> DispatchPlan:
        """Resolve resource indices and attach whatever context the route needs."""
        if spec is None:
            spec = self.registry.lookup(call.tool)
            if spec is None:
                raise _DispatchError(
                    templates.observation_text(
                        "error.unknown_tool",
                        tool=call.tool,
                        tools=", ".join(self.registry.names()),
                    )
                )
        resolved = [self.store.get(i) for i in call.resources]
        plan = DispatchPlan(route=spec.execution, resolved_inputs=resolved)
        if spec.execution != "llm_prompt":
            return plan
        if call.tool == "knowledge_reason":
            plan.context = trace_context
            return plan
        channel = "subtitles" if call.tool.startswith("subtitle") else "narration"
        plan.context_channel = channel
        if self.context_policy == "previous_observation":
            plan.context = previous_observation
            if not plan.context:
                raise _DispatchError(
                    templates.observation_text(
                        "error.precondition",
                        tool=call.tool,
                        message="no previous observation to reason over",
                    )
                )
            return plan
        index = call.resources[0]
        lines = self.store.transcript(index, channel)
        if not lines:
            raise _DispatchError(
                templates.observation_text(
                    "error.missing_sidecar",
                    tool=call.tool, channel=channel, index=index,
                )
            )
        plan.context = render_lines(lines)
        return plan

    def _require_backend(self, tool: str) -> LLMBackend:
        if self.backend is None:
            raise _DispatchError(
                templates.observation_text(
                    "error.precondition", tool=tool, message="no LLM backend configured"
                )
            )
        return self.backend

    def _dispatch(self, call: ActionCall, spec: ToolSpec, plan: DispatchPlan) -> ToolResult:
        if plan.route == "external":
            try:
                return self.external.invoke(
                    call.tool, call.query, plan.resolved_inputs, self.store
                )
            except ExternalToolError as exc:
                raise _DispatchError(
                    templates.observation_text(
                        "error.transport", tool=call.tool, message=str(exc)
                    )
                )
        if plan.route == "builtin":
            return self._dispatch_builtin(call, plan)
        return self._dispatch_prompted(call, plan)

    def _dispatch_builtin(self, call: ActionCall, plan: DispatchPlan) -> ToolResult:
        resource = plan.resolved_inputs[0]
        if call.tool == "temporal_reason":
            try:
                query = parse_temporal_query(call.query or "")
            except QueryFormatError as exc:
                raise _DispatchError(
                    templates.observation_text(
                        "error.precondition", tool=call.tool, message=str(exc)
                    )
                )
            interval, clamped = temporal_reason(query, resource.duration_s or 0.0)
            return ToolResult.ok(
                interval=(interval.start_s, interval.end_s),
                clamped=clamped,
                word=query.word,
            )
        if call.tool == "text_ground":
            boxes = [
                b if isinstance(b, OcrBox) else OcrBox(
                    text=b["text"], box=tuple(b["box"]), region_label=b.get("label")
                )
                for b in (self.store.ocr(resource.index) or [])
            ]
            matches = text_ground(call.query or "", boxes)
            return ToolResult.ok(matches=matches)
        raise _DispatchError(
            templates.observation_text(
                "error.precondition", tool=call.tool, message="no builtin implementation"
            )
        )

    def _dispatch_prompted(self, call: ActionCall, plan: DispatchPlan) -> ToolResult:
        backend = self._require_backend(call.tool)
        if call.tool in ("narration_ground", "subtitle_ground"):
            resource = plan.resolved_inputs[0]
            kind = "narration" if call.tool == "narration_ground" else "subtitle"
            if self.context_policy == "previous_observation":
                lines = [TranscriptLine(0.0, resource.duration_s or 0.0, plan.context or "")]
            else:
                lines = self.store.transcript(resource.index, plan.context_channel or "") or []
            found, interval, rationale = ground_from_transcript(
                kind, backend, call.query or "", lines, resource.duration_s or 0.0
            )
            if not found:
                return ToolResult.ok(found=False, rationale=rationale)
            return ToolResult.ok(
                found=True, interval=(interval.start_s, interval.end_s), rationale=rationale
            )
        kind = {"knowledge_reason": "knowledge",
                "narration_reason": "narration",
                "subtitle_reason": "subtitle"}[call.tool]
        try:
            answer = reason_over_text(kind, backend, call.query or "", plan.context)
        except ValueError as exc:
            raise _DispatchError(
                templates.observation_text(
                    "error.precondition", tool=call.tool, message=str(exc)
                )
            )
        return ToolResult.ok(text=answer)

    # Stage 3: language rendering plus artifact registration.
    def _post_process(
        self, call: ActionCall, spec: ToolSpec, plan: DispatchPlan, result: ToolResult
    ) -> tuple[str, list[int]]:
        if result.status == "error":
            raise _DispatchError(
                templates.observation_text(
                    "error.transport", tool=call.tool, message=result.message or "tool error"
                )
            )
        produced: list[int] = []
        text = self.render_observation(call, spec, plan, result, produced)
        return text, produced

    def render_observation(
        self,
        call: ActionCall,
        spec: ToolSpec,
        plan: DispatchPlan,
        result: ToolResult,
        produced: list[int],
    ) -> str:
        payload = result.payload
        index = call.resources[0] if call.resources else None

        # External tools may attach visual artifacts alongside any payload;
        # region_ground consumes its artifact itself (the crop description).
        if spec.execution == "external" and call.tool != "region_ground":
            for artifact in payload.get("artifacts", []):
                produced.append(self._register_artifact(call, index, artifact))

        if call.tool == "object_detect":
            label = payload.get("label") or (call.query or "object")
            _, text = count_objects(payload.get("detections", []), label)
            return text

        if call.tool == "text_detect":
            boxes = payload.get("boxes", [])
            self.store.attach_ocr(index, boxes)
            if not boxes:
                return templates.observation_text("result.ocr_none", index=index)
            texts = ", ".join(repr(b["text"]) for b in boxes)
            return templates.observation_text("result.ocr_some", index=index, texts=texts)

        if call.tool == "asr":
            lines = [TranscriptLine(*entry) for entry in payload.get("lines", [])]
            self.store.attach_transcript(index, "subtitles", lines)
            return templates.observation_text("result.asr", index=index)

        if call.tool == "video_narration":
            lines = [TranscriptLine(*entry) for entry in payload.get("lines", [])]
            self.store.attach_transcript(index, "narration", lines)
            joined = " / ".join(
                f"[{l.start_s:g}s-{l.end_s:g}s] {l.text}" for l in lines
            ) or "(empty)"
            return templates.observation_text("result.narration", index=index, lines=joined)

        if call.tool in ("narration_ground", "subtitle_ground"):
            if not payload.get("found"):
                return templates.observation_text("result.ground_not_found")
            start, end = payload["interval"]
            clip_index, _ = self.store.register_clip(
                index, call.tool, (start, end),
                description=f"clip of visual[{index}] matching {call.query!r}",
            )
            produced.append(clip_index)
            return templates.observation_text(
                "result.ground_found",
                start=_format_seconds(start), end=_format_seconds(end), index=index,
            )

        if call.tool == "temporal_reason":
            start, end = payload["interval"]
            clip_index, _ = self.store.register_clip(
                index, call.tool, (start, end),
                description=f"clip of visual[{index}] for {call.query!r}",
            )
            produced.append(clip_index)
            key = "result.temporal_clamped" if payload.get("clamped") else "result.temporal"
            return templates.observation_text(
                key,
                start=_format_seconds(start), end=_format_seconds(end),
                index=index, word=payload.get("word", ""),
            )

        if call.tool == "text_ground":
            matches = payload.get("matches", [])
            if not matches:
                return templates.observation_text(
                    "result.text_ground_none", query=call.query, index=index
                )
            crop_index, _ = self.store.register_crop(
                index, call.tool,
                description=f"region of visual[{index}] matching {call.query!r}",
            )
            produced.append(crop_index)
            texts = ", ".join(repr(b.text) for b in matches)
            return templates.observation_text(
                "result.text_ground_some",
                count=len(matches), query=call.query, index=index, texts=texts,
            )

        if call.tool == "region_ground":
            artifacts = payload.get("artifacts") or [{}]
            description = artifacts[0].get("description") or payload.get(
                "description", f"region of visual[{index}] matching {call.query!r}"
            )
            crop_index, _ = self.store.register_crop(index, call.tool, description)
            produced.append(crop_index)
            return templates.observation_text("result.region", index=index)

        # caption, the three reason tools, and any custom text-shaped tool
        return templates.observation_text(
            "result.text", text=payload.get("text", result.message or "")
        )

    def _register_artifact(self, call: ActionCall, index: int | None, artifact: dict) -> int:
        description = artifact.get("description", f"artifact of {call.tool}")
        if artifact.get("kind") == "video" and index is not None:
            parent = self.store.get(index)
            span = artifact.get("span")
            if span is None and parent.kind == "video":
                # Span-less video artifacts cover the whole parent.
                span = (0.0, parent.duration_s or 0.0)
            if span is not None:
                new_index, _ = self.store.register_clip(
                    index, call.tool, tuple(span), description
                )
                return new_index
        new_index, _ = self.store.register_crop(index or 0, call.tool, description)
        return new_index

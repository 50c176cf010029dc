"""Multimodal question answering through an interleaved thought/tool-call
loop: a planner proposes structured actions, an executor validates and runs
them, an inspector tracks every visual resource, and a learner retries failed
attempts and banks the successful traces."""

from .grammar import (
    ActionCall,
    DuplicateTool,
    ParseError,
    ToolRegistry,
    ToolSpec,
    ValidationReport,
    parse_action,
    render_action,
    render_toolset_illustration,
    validate_call,
)
from .inspector import ResourceStore, VisualResource, summarize
from .learner import LearnerConfig, LearnerOutcome, MemoryBank, MemoryEntry, Verdict
from .session import Backends, RunResult, Session, SessionConfig, run_query, run_suite
from .toolset import default_registry
from .trace import ReasoningTrace, TraceStep, emit_trace, load_trace

__all__ = [
    "ActionCall",
    "Backends",
    "DuplicateTool",
    "LearnerConfig",
    "LearnerOutcome",
    "MemoryBank",
    "MemoryEntry",
    "ParseError",
    "ReasoningTrace",
    "ResourceStore",
    "RunResult",
    "Session",
    "SessionConfig",
    "ToolRegistry",
    "ToolSpec",
    "TraceStep",
    "ValidationReport",
    "Verdict",
    "VisualResource",
    "default_registry",
    "emit_trace",
    "load_trace",
    "parse_action",
    "render_action",
    "render_toolset_illustration",
    "run_query",
    "run_suite",
    "summarize",
    "validate_call",
]

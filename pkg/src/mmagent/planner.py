"""Prompt assembly and planner-output parsing, over a pluggable LLM backend.

The backend contract is a single-turn completion: ``complete(prompt, stop)``.
Two implementations ship here: a scripted backend that replays recorded
completions in order (the deterministic test harness), and an HTTP backend
for a remote chat-completion endpoint.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import requests

from . import templates

STOP_SEQUENCES = ["Observation:"]


class BackendError(Exception):
    pass


class FormatError(Exception):
    """The backend's reply matched neither the step nor the final-answer form."""


@dataclass
class PlannerStep:
    variant: str  # "step" | "final"
    thought: str = ""
    action_raw: str = ""
    answer: str = ""

    @classmethod
    def step(cls, thought: str, action_raw: str) -> "PlannerStep":
        return cls(variant="step", thought=thought, action_raw=action_raw)

    @classmethod
    def final(cls, answer: str) -> "PlannerStep":
        return cls(variant="final", answer=answer)


@dataclass
class PromptBundle:
    """Everything the planner prompt is assembled from."""

    instruction: str
    query: str
    trace_rendering: str
    visual_summaries: list[str] = field(default_factory=list)
    critique: str = ""


class LLMBackend(Protocol):
    def complete(self, prompt: str, stop: Sequence[str]) -> str: ...


@dataclass
class ScriptEntry:
    """One recorded completion: its role, the reply text, and optional
    replay guards (mode filter, prompt-fingerprint substring)."""

    role: str  # "planner" | "evaluator" | "tool"
    text: str
    modes: list[str] | None = None
    expect: str | None = None


class ScriptedBackend:
    """Replays an ordered list of completions for one role.

    Deterministic by construction: replies are consumed in order regardless
    of the prompt.  An entry's ``expect`` substring, when present, must occur
    in the prompt; a mismatch means the run diverged from the recording.
    """

    def __init__(self, entries: Sequence[ScriptEntry], role: str):
        self.role = role
        self._entries = list(entries)
        self._cursor = 0

    @property
    def consumed(self) -> int:
        return self._cursor

    @property
    def remaining(self) -> int:
        return len(self._entries) - self._cursor

    def complete(self, prompt: str, stop: Sequence[str]) -> str:
        if self._cursor >= len(self._entries):
            raise BackendError(
                f"scripted backend exhausted for role {self.role!r} "
                f"after {self._cursor} completions"
            )
        entry = self._entries[self._cursor]
        if entry.expect is not None and entry.expect not in prompt:
            raise BackendError(
                f"scripted reply {self._cursor} for role {self.role!r} expected "
                f"the prompt to contain {entry.expect!r}"
            )
        self._cursor += 1
        return entry.text


class HttpBackend:
    """Chat-completion endpoint: POST {model, messages, stop, temperature}.

    The bearer token is read from the environment so credentials never live
    in config files.  Failures and timeouts surface as BackendError.
    """

    def __init__(
        self,
        url: str,
        model: str = "default",
        temperature: float = 0.0,
        timeout_s: float = 60.0,
        token_env: str = "MMAGENT_API_TOKEN",
    ):
        self.url = url
        self.model = model
        self.temperature = temperature
        self.timeout_s = timeout_s
        self.token_env = token_env

    def complete(self, prompt: str, stop: Sequence[str]) -> str:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.token_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "stop": list(stop),
            "temperature": self.temperature,
        }
        try:
            response = requests.post(
                self.url, data=json.dumps(body), headers=headers, timeout=self.timeout_s
            )
        except requests.Timeout as exc:
            raise BackendError(f"backend timeout after {self.timeout_s}s") from exc
        except requests.RequestException as exc:
            raise BackendError(f"backend transport failure: {exc}") from exc
        if response.status_code != 200:
            raise BackendError(f"backend returned HTTP {response.status_code}")
        try:
            payload = response.json()
            if "choices" in payload:
                choice = payload["choices"][0]
                if "message" in choice:
                    return choice["message"]["content"]
                return choice["text"]
            return payload["text"]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise BackendError(f"unrecognized backend reply shape: {exc}") from exc


def assemble_prompt(
    instruction: str,
    query: str,
    trace_rendering: str,
    *,
    summaries: Sequence[str] = (),
    examples: str = "",
    critique: str = "",
    template: str = "planner",
) -> str:
    """Fill the planner template; deterministic for fixed inputs.

    ``summaries`` are prepended to the history (resources registered before
    the first step); a ``trace_rendering`` produced by render_history already
    interleaves later summaries at the positions where their resources were
    registered.
    """
    text = templates.prompt(template)
    critique_block = ""
    if critique:
        critique_block = f"\nNote from the previous attempt's evaluation: {critique}\n"
    examples_block = f"\n{examples}\n" if examples else ""
    history = "\n".join(
        [f"Summary: {s}" for s in summaries] + ([trace_rendering] if trace_rendering else [])
    )
    return text.format(
        toolset=instruction,
        examples=examples_block,
        critique=critique_block,
        query=query,
        history=history,
    ).rstrip() + "\n"


def assemble_prompt_from_bundle(bundle: PromptBundle, template: str = "planner") -> str:
    return assemble_prompt(
        bundle.instruction,
        bundle.query,
        bundle.trace_rendering,
        summaries=bundle.visual_summaries,
        critique=bundle.critique,
        template=template,
    )


_FINAL_RE = re.compile(r"^\s*Final Answer:\s*(?P<answer>.+)$", re.DOTALL)
_STEP_RE = re.compile(
    r"^\s*Thought:\s*(?P<thought>.*?)\n\s*Action:\s*(?P<action>[^\n]+)",
    re.DOTALL,
)


def parse_planner_output(text: str) -> PlannerStep:
    """Recognize ``Thought: ...\\nAction: ...`` or ``Final Answer: ...``."""
    stripped = text.strip()
    m = _FINAL_RE.match(stripped)
    if m:
        answer = m.group("answer").strip()
        if answer:
            return PlannerStep.final(answer)
    m = _STEP_RE.match(stripped)
    if m:
        action = m.group("action").strip()
        if action:
            return PlannerStep.step(m.group("thought").strip(), action)
    raise FormatError(
        "expected 'Thought: ...' followed by 'Action: ...', or 'Final Answer: ...'; "
        f"got: {stripped[:120]!r}"
    )


def next_step(backend: LLMBackend, bundle: PromptBundle) -> PlannerStep:
    """One planning step: assemble, complete, parse.

    The stop sequence keeps the backend from writing observations itself.
    """
    prompt = assemble_prompt_from_bundle(bundle)
    reply = backend.complete(prompt, stop=STOP_SEQUENCES)
    return parse_planner_output(reply)

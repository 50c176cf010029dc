"""Tool registry and the code-style action DSL.

An action is a single tool invocation written in a fixed code-like surface
form::

    caption("what color is the car?", visual[0])
    text_detect(None, visual[2])
    knowledge_reason("capital of France?", [])

Grammar (EBNF)::

    call          := name "(" first_arg "," resource_list ")"
    name          := [a-z][a-z0-9_]*
    first_arg     := quoted_string | "None"
    resource_list := "[]" | visual_ref | "[" visual_ref ("," visual_ref)* "]"
    visual_ref    := "visual[" int "]"

Whitespace around commas, parentheses and brackets is insignificant.  Quoted
strings use double quotes with backslash escapes for ``"`` and ``\\`` only.

Parsing, rendering and validation are pure functions; a registry is immutable
after startup and safe to share between sessions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Literal, Sequence

NAME_RE = re.compile(r"[a-z][a-z0-9_]*")

QueryKind = Literal["required_text", "none_literal"]
Execution = Literal["builtin", "external", "llm_prompt"]

#: Resource kinds a tool may legally receive as its second argument.
#: "empty_list" marks tools invoked with a literal ``[]``.
RESOURCE_KINDS = ("image", "video", "empty_list")


class ParseError(Exception):
    """Raised for any deviation from the action grammar.

    Carries the character position and a description of what was expected so
    the caller can turn it into a readable error observation.
    """

    def __init__(self, position: int, expected: str):
        self.position = position
        self.expected = expected
        super().__init__(f"parse error at position {position}: expected {expected}")


class DuplicateTool(Exception):
    pass


@dataclass(frozen=True)
class ToolSpec:
    """A tool's invocation contract: one row of the toolset table."""

    name: str
    description: str
    query_kind: QueryKind
    resource_kinds: frozenset[str]
    produces_artifact: bool
    execution: Execution

    def __post_init__(self) -> None:
        if not NAME_RE.fullmatch(self.name):
            raise ValueError(f"invalid tool name: {self.name!r}")
        if not self.resource_kinds:
            raise ValueError(f"tool {self.name}: resource_kinds must be non-empty")
        unknown = set(self.resource_kinds) - set(RESOURCE_KINDS)
        if unknown:
            raise ValueError(f"tool {self.name}: unknown resource kinds {sorted(unknown)}")

    def invoke_command(self) -> str:
        """The display form of the invocation, e.g. ``caption(query, visual[i])``."""
        first = "query" if self.query_kind == "required_text" else "None"
        second = "[]" if self.resource_kinds == frozenset({"empty_list"}) else "visual[i]"
        return f"{self.name}({first}, {second})"


@dataclass
class ActionCall:
    """A parsed tool invocation.

    ``query`` is None exactly when the surface form used the literal ``None``;
    ``resources`` is empty exactly when it used ``[]``.  ``raw`` keeps the
    original surface string and is excluded from equality so that round-trips
    through :func:`render_action` compare equal.
    """

    tool: str
    query: str | None
    resources: list[int]
    raw: str = field(default="", compare=False)


@dataclass(frozen=True)
class Violation:
    code: Literal["unknown_tool", "arity", "query_kind", "bad_index", "kind_mismatch"]
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations


class ToolRegistry:
    """Ordered, write-once collection of tool specs."""

    def __init__(self) -> None:
        self._specs: dict[str, ToolSpec] = {}

    def register(self, spec: ToolSpec) -> None:
        if spec.name in self._specs:
            raise DuplicateTool(spec.name)
        self._specs[spec.name] = spec

    def lookup(self, name: str) -> ToolSpec | None:
        return self._specs.get(name)

    def names(self) -> list[str]:
        return list(self._specs)

    def __len__(self) -> int:
        return len(self._specs)

    def __iter__(self) -> Iterator[ToolSpec]:
        return iter(self._specs.values())

    def __contains__(self, name: str) -> bool:
        return name in self._specs


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, literal: str, expected: str | None = None) -> None:
        if not self.text.startswith(literal, self.pos):
            raise ParseError(self.pos, expected or f"'{literal}'")
        self.pos += len(literal)

    def match_re(self, pattern: re.Pattern[str], expected: str) -> str:
        m = pattern.match(self.text, self.pos)
        if not m:
            raise ParseError(self.pos, expected)
        self.pos = m.end()
        return m.group(0)


_INT_RE = re.compile(r"\d+")


def _parse_quoted(sc: _Scanner) -> str:
    sc.expect('"', "quoted string or None")
    out: list[str] = []
    while True:
        if sc.pos >= len(sc.text):
            raise ParseError(sc.pos, "closing '\"'")
        ch = sc.text[sc.pos]
        if ch == '"':
            sc.pos += 1
            return "".join(out)
        if ch == "\\":
            if sc.pos + 1 >= len(sc.text):
                raise ParseError(sc.pos, "escape character after '\\'")
            nxt = sc.text[sc.pos + 1]
            if nxt not in ('"', "\\"):
                raise ParseError(sc.pos + 1, "'\"' or '\\' after backslash")
            out.append(nxt)
            sc.pos += 2
        else:
            out.append(ch)
            sc.pos += 1


def _parse_visual_ref(sc: _Scanner) -> int:
    sc.expect("visual", "visual[i]")
    sc.skip_ws()
    sc.expect("[", "'[' after visual")
    sc.skip_ws()
    digits = sc.match_re(_INT_RE, "resource index")
    sc.skip_ws()
    sc.expect("]", "']' after resource index")
    return int(digits)


def _parse_resource_list(sc: _Scanner) -> list[int]:
    if sc.peek() == "[":
        sc.pos += 1
        sc.skip_ws()
        if sc.peek() == "]":
            sc.pos += 1
            return []
        refs = [_parse_visual_ref(sc)]
        sc.skip_ws()
        while sc.peek() == ",":
            sc.pos += 1
            sc.skip_ws()
            refs.append(_parse_visual_ref(sc))
            sc.skip_ws()
        sc.expect("]", "',' or ']' in resource list")
        return refs
    return [_parse_visual_ref(sc)]


def parse_action(text: str) -> ActionCall:
    """Parse one surface-form action into an :class:`ActionCall`.

    Raises :class:`ParseError` on any grammar deviation; never raises anything
    else, so callers can always convert failures into error observations.
    """
    sc = _Scanner(text)
    sc.skip_ws()
    tool = sc.match_re(NAME_RE, "tool name")
    sc.skip_ws()
    sc.expect("(", "'(' after tool name")
    sc.skip_ws()
    if sc.text.startswith("None", sc.pos):
        sc.pos += 4
        query: str | None = None
    else:
        query = _parse_quoted(sc)
    sc.skip_ws()
    sc.expect(",", "',' between query and resource list")
    sc.skip_ws()
    resources = _parse_resource_list(sc)
    sc.skip_ws()
    sc.expect(")", "')' to close the call")
    sc.skip_ws()
    if sc.pos != len(sc.text):
        raise ParseError(sc.pos, "end of input")
    return ActionCall(tool=tool, query=query, resources=resources, raw=text)


def _quote(query: str) -> str:
    return '"' + query.replace("\\", "\\\\").replace('"', '\\"') + '"'


def render_action(call: ActionCall) -> str:
    """Canonical surface form; ``parse_action(render_action(c)) == c``."""
    if not NAME_RE.fullmatch(call.tool):
        raise ValueError(f"invalid tool name: {call.tool!r}")
    if any(i < 0 for i in call.resources):
        raise ValueError("resource indices must be non-negative")
    first = "None" if call.query is None else _quote(call.query)
    if not call.resources:
        second = "[]"
    elif len(call.resources) == 1:
        second = f"visual[{call.resources[0]}]"
    else:
        second = "[" + ", ".join(f"visual[{i}]" for i in call.resources) + "]"
    return f"{call.tool}({first}, {second})"


def _kind_of(entry: object) -> str:
    if isinstance(entry, str):
        return entry
    return getattr(entry, "kind")


def _plural(kinds: frozenset[str]) -> str:
    visual = sorted(k for k in kinds if k != "empty_list")
    if not visual:
        return "no visual input"
    return " or ".join(k + "s" for k in visual)


def validate_call(
    call: ActionCall, registry: ToolRegistry, catalog: Sequence[object]
) -> ValidationReport:
    """Legality check run before dispatch.

    ``catalog`` lists every registered resource in index order; entries may be
    kind strings or objects with a ``kind`` attribute.  All failures are
    reported, not just the first; an unknown tool is a violation rather than
    an exception so the planner receives a correctable observation.
    """
    violations: list[Violation] = []
    spec = registry.lookup(call.tool)
    if spec is None:
        violations.append(
            Violation("unknown_tool", f"unknown tool '{call.tool}'")
        )
        return ValidationReport(violations)

    if spec.query_kind == "required_text" and call.query is None:
        violations.append(
            Violation("query_kind", f"{call.tool} requires a text query, not None")
        )
    elif spec.query_kind == "none_literal" and call.query is not None:
        violations.append(
            Violation("query_kind", f"{call.tool} takes None as its first argument")
        )

    visual_kinds = spec.resource_kinds - {"empty_list"}
    if not call.resources:
        if "empty_list" not in spec.resource_kinds:
            violations.append(
                Violation("arity", f"{call.tool} requires a visual input, got []")
            )
    else:
        if not visual_kinds:
            violations.append(
                Violation("arity", f"{call.tool} takes no visual input; use []")
            )
        else:
            for index in call.resources:
                if index >= len(catalog):
                    violations.append(
                        Violation(
                            "bad_index",
                            f"visual[{index}] does not exist; "
                            f"the catalog holds {len(catalog)} resource(s)",
                        )
                    )
                    continue
                kind = _kind_of(catalog[index])
                if kind not in visual_kinds:
                    violations.append(
                        Violation(
                            "kind_mismatch",
                            f"{call.tool} accepts {_plural(spec.resource_kinds)}; "
                            f"visual[{index}] is a {kind}",
                        )
                    )
    return ValidationReport(violations)


def render_toolset_illustration(registry: ToolRegistry) -> str:
    """One line per tool, in registration order: invoke command plus its one-line description."""
    if len(registry) == 0:
        raise ValueError("cannot render an empty registry")
    lines = [f"{spec.invoke_command()}: {spec.description}" for spec in registry]
    return "\n".join(lines)

"""Wire protocol between the orchestrator and external tool servers.

One JSON envelope over two transports: HTTP (POST /describe and /invoke) and
line-delimited messages on a child process's standard streams.  Resources
travel as locators (shared filesystem) or inline base64 capped at 16 MiB.
Protocol version "1"; a mismatch is a hard error.
"""

from __future__ import annotations

import base64
import json
import shlex
import subprocess
import threading
import uuid
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources as importlib_resources
from pathlib import Path
from queue import Empty, Queue

import jsonschema
import requests

from .executor import ExternalToolError, ToolResult
from .grammar import ActionCall, DuplicateTool, ToolRegistry, ToolSpec
from .inspector import ResourceStore, VisualResource
from .tools.transcripts import parse_sidecar

PROTOCOL_VERSION = "1"
INLINE_CAP_BYTES = 16 * 1024 * 1024
DEFAULT_TIMEOUT_S = 60.0


class DecodeError(Exception):
    def __init__(self, message: str, offset: int = 0):
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")


class TransportError(Exception):
    pass


class Timeout(TransportError):
    pass


class ServerError(Exception):
    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")


class IncompatibleVersion(Exception):
    pass


@dataclass
class ResourcePayload:
    kind: str
    locator: str | None = None
    inline_b64: str | None = None
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.locator is not None:
            out["locator"] = self.locator
        if self.inline_b64 is not None:
            out["inline_b64"] = self.inline_b64
        if self.meta:
            out["meta"] = self.meta
        return out

    @classmethod
    def from_json(cls, payload: dict) -> "ResourcePayload":
        return cls(
            kind=payload["kind"],
            locator=payload.get("locator"),
            inline_b64=payload.get("inline_b64"),
            meta=payload.get("meta", {}),
        )


@dataclass
class ToolRequest:
    id: str
    tool: str
    query: str | None
    resources: list[ResourcePayload] = field(default_factory=list)
    options: dict[str, str] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "tool": self.tool,
            "query": self.query,
            "resources": [r.to_json() for r in self.resources],
            "options": dict(self.options),
        }

    @classmethod
    def from_json(cls, payload: dict) -> "ToolRequest":
        return cls(
            id=payload["id"],
            tool=payload["tool"],
            query=payload["query"],
            resources=[ResourcePayload.from_json(r) for r in payload["resources"]],
            options=dict(payload["options"]),
        )


@dataclass
class ToolResponse:
    id: str
    status: str
    observation: str = ""
    artifacts: list[ResourcePayload] = field(default_factory=list)
    error: dict | None = None

    def to_json(self) -> dict:
        out: dict = {
            "id": self.id,
            "status": self.status,
            "observation": self.observation,
            "artifacts": [a.to_json() for a in self.artifacts],
        }
        if self.error is not None:
            out["error"] = self.error
        return out

    @classmethod
    def from_json(cls, payload: dict) -> "ToolResponse":
        return cls(
            id=payload["id"],
            status=payload["status"],
            observation=payload.get("observation", ""),
            artifacts=[ResourcePayload.from_json(a) for a in payload.get("artifacts", [])],
            error=payload.get("error"),
        )


@dataclass
class ToolDescriptor:
    """A ToolSpec plus the protocol version; round-trips losslessly."""

    name: str
    description: str
    query_kind: str
    resource_kinds: list[str]
    produces_artifact: bool
    execution: str
    protocol_version: str = PROTOCOL_VERSION

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "query_kind": self.query_kind,
            "resource_kinds": sorted(self.resource_kinds),
            "produces_artifact": self.produces_artifact,
            "execution": self.execution,
            "protocol_version": self.protocol_version,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "ToolDescriptor":
        return cls(
            name=payload["name"],
            description=payload["description"],
            query_kind=payload["query_kind"],
            resource_kinds=list(payload["resource_kinds"]),
            produces_artifact=payload["produces_artifact"],
            execution=payload["execution"],
            protocol_version=payload["protocol_version"],
        )

    @classmethod
    def from_spec(cls, spec: ToolSpec) -> "ToolDescriptor":
        return cls(
            name=spec.name,
            description=spec.description,
            query_kind=spec.query_kind,
            resource_kinds=sorted(spec.resource_kinds),
            produces_artifact=spec.produces_artifact,
            execution=spec.execution,
        )

    def to_spec(self) -> ToolSpec:
        return ToolSpec(
            name=self.name,
            description=self.description,
            query_kind=self.query_kind,  # type: ignore[arg-type]
            resource_kinds=frozenset(self.resource_kinds),
            produces_artifact=self.produces_artifact,
            execution=self.execution,  # type: ignore[arg-type]
        )


@lru_cache(maxsize=None)
def schema(name: str) -> dict:
    ref = importlib_resources.files("mmagent").joinpath(f"data/schemas/{name}.schema.json")
    return json.loads(ref.read_text(encoding="utf-8"))


def _canonical(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def encode_request(request: ToolRequest) -> bytes:
    return _canonical(request.to_json())


def encode_response(response: ToolResponse) -> bytes:
    return _canonical(response.to_json())


def _decode(raw: bytes, schema_name: str) -> dict:
    try:
        payload = json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise DecodeError(f"not UTF-8: {exc}", offset=exc.start)
    except json.JSONDecodeError as exc:
        raise DecodeError(f"invalid JSON: {exc.msg}", offset=exc.pos)
    try:
        jsonschema.validate(payload, schema(schema_name))
    except jsonschema.ValidationError as exc:
        raise DecodeError(f"schema violation: {exc.message}")
    return payload


def decode_request(raw: bytes) -> ToolRequest:
    return ToolRequest.from_json(_decode(raw, "tool_request"))


def decode_response(raw: bytes) -> ToolResponse:
    return ToolResponse.from_json(_decode(raw, "tool_response"))


# Transports.

class HttpEndpoint:
    def __init__(self, url: str, timeout_s: float = DEFAULT_TIMEOUT_S, secret: str | None = None):
        self.url = url.rstrip("/")
        self.timeout_s = timeout_s
        self.secret = secret

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.secret:
            headers["X-Shared-Secret"] = self.secret
        return headers

    def _post(self, path: str, body: bytes) -> bytes:
        try:
            response = requests.post(
                f"{self.url}{path}", data=body, headers=self._headers(),
                timeout=self.timeout_s,
            )
        except requests.Timeout as exc:
            raise Timeout(f"no reply from {self.url}{path} within {self.timeout_s}s") from exc
        except requests.RequestException as exc:
            raise TransportError(f"cannot reach {self.url}{path}: {exc}") from exc
        if response.status_code != 200:
            raise TransportError(f"{self.url}{path} returned HTTP {response.status_code}")
        return response.content

    def describe(self) -> dict:
        raw = self._post("/describe", b"{}")
        try:
            return json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise TransportError(f"unparseable describe reply: {exc}")

    def invoke(self, request: ToolRequest) -> ToolResponse:
        return decode_response(self._post("/invoke", encode_request(request)))

    def close(self) -> None:
        pass


class StdioEndpoint:
    """Line-delimited JSON over a child process's stdin/stdout.

    Frames: {"op": "describe"} and {"op": "invoke", "request": <ToolRequest>};
    replies mirror the op with "tools"/"protocol_version" or "response".
    A reader thread enforces the per-request timeout.
    """

    def __init__(self, command: str, timeout_s: float = DEFAULT_TIMEOUT_S):
        self.timeout_s = timeout_s
        try:
            self._proc = subprocess.Popen(
                shlex.split(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise TransportError(f"cannot start tool server {command!r}: {exc}") from exc
        self._lines: Queue[str] = Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _pump(self) -> None:
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            self._lines.put(line)

    def _exchange(self, frame: dict) -> dict:
        if self._proc.poll() is not None:
            raise TransportError("tool server process has exited")
        assert self._proc.stdin is not None
        self._proc.stdin.write(json.dumps(frame) + "\n")
        self._proc.stdin.flush()
        try:
            line = self._lines.get(timeout=self.timeout_s)
        except Empty:
            raise Timeout(f"no reply from tool server within {self.timeout_s}s")
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise TransportError(f"unparseable reply line: {exc}")

    def describe(self) -> dict:
        return self._exchange({"op": "describe"})

    def invoke(self, request: ToolRequest) -> ToolResponse:
        reply = self._exchange({"op": "invoke", "request": request.to_json()})
        if "response" not in reply:
            raise TransportError("invoke reply is missing the response envelope")
        return decode_response(_canonical(reply["response"]))

    def close(self) -> None:
        if self._proc.poll() is None:
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()


def open_endpoint(locator: str, timeout_s: float = DEFAULT_TIMEOUT_S, secret: str | None = None):
    """"http(s)://..." opens an HTTP endpoint; "stdio:CMD" spawns a child."""
    if locator.startswith(("http://", "https://")):
        return HttpEndpoint(locator, timeout_s=timeout_s, secret=secret)
    if locator.startswith("stdio:"):
        return StdioEndpoint(locator[len("stdio:"):], timeout_s=timeout_s)
    raise TransportError(f"unrecognized endpoint locator: {locator!r}")


def discover(endpoint) -> list[ToolDescriptor]:
    """Fetch the server's advertised tools, enforcing the protocol version."""
    reply = endpoint.describe()
    version = reply.get("protocol_version")
    if version != PROTOCOL_VERSION:
        raise IncompatibleVersion(
            f"server speaks protocol {version!r}, this client speaks {PROTOCOL_VERSION!r}"
        )
    descriptors = []
    for entry in reply.get("tools", []):
        jsonschema.validate(entry, schema("tool_descriptor"))
        descriptors.append(ToolDescriptor.from_json(entry))
    return descriptors


def merge_into_registry(registry: ToolRegistry, descriptors: list[ToolDescriptor]) -> None:
    """Validate each descriptor as a ToolSpec and register it; duplicates are
    rejected rather than overwritten."""
    for descriptor in descriptors:
        if descriptor.protocol_version != PROTOCOL_VERSION:
            raise IncompatibleVersion(descriptor.protocol_version)
        spec = descriptor.to_spec()
        if registry.lookup(spec.name) is not None:
            raise DuplicateTool(spec.name)
        registry.register(spec)


def _resource_payload(resource: VisualResource, store: ResourceStore) -> ResourcePayload:
    meta: dict = {"description": resource.description}
    if resource.kind == "video":
        meta["duration_s"] = resource.duration_s
        meta["has_audio"] = resource.has_audio
        meta["has_subtitles"] = resource.has_subtitles
    path = store.resolve(resource)
    if path.exists() and path.stat().st_size <= INLINE_CAP_BYTES:
        data = path.read_bytes()
        return ResourcePayload(
            kind=resource.kind,
            inline_b64=base64.b64encode(data).decode("ascii"),
            meta=meta,
        )
    return ResourcePayload(kind=resource.kind, locator=str(path), meta=meta)


def invoke_external(
    endpoint,
    call: ActionCall,
    resolved: list[VisualResource],
    store: ResourceStore,
    timeout_s: float = DEFAULT_TIMEOUT_S,
) -> ToolResult:
    """One request/response exchange, mapped to a ToolResult.

    Structured data rides in artifacts: "data" artifacts merge into the
    payload, "transcript"/"ocr" artifacts carry sidecar content, image/video
    artifacts are persisted into the session workspace (declared to the
    executor via payload["artifacts"]).
    """
    request = ToolRequest(
        id=f"req-{uuid.uuid4().hex[:12]}",
        tool=call.tool,
        query=call.query,
        resources=[_resource_payload(r, store) for r in resolved],
    )
    response = endpoint.invoke(request)
    if response.id != request.id:
        raise TransportError(
            f"response id {response.id!r} does not echo request id {request.id!r}"
        )
    if response.status == "error":
        error = response.error or {"code": "unknown", "message": "unspecified"}
        raise ServerError(error.get("code", "unknown"), error.get("message", ""))

    payload: dict = {"text": response.observation}
    artifacts: list[dict] = []
    for artifact in response.artifacts:
        data = b""
        if artifact.inline_b64 is not None:
            data = base64.b64decode(artifact.inline_b64)
        elif artifact.locator is not None:
            locator = Path(artifact.locator)
            if locator.exists():
                data = locator.read_bytes()
        if artifact.kind == "data":
            payload.update(json.loads(data.decode("utf-8")))
        elif artifact.kind == "transcript":
            lines = parse_sidecar(data.decode("utf-8"))
            payload["lines"] = [[l.start_s, l.end_s, l.text] for l in lines]
        elif artifact.kind == "ocr":
            payload["boxes"] = json.loads(data.decode("utf-8"))
        else:
            artifacts.append(
                {
                    "kind": artifact.kind,
                    "description": artifact.meta.get("description", f"{call.tool} output"),
                    "span": artifact.meta.get("span"),
                }
            )
    if artifacts:
        payload["artifacts"] = artifacts
    return ToolResult(status="ok", payload=payload)


class ProtocolToolClient:
    """ExternalClient backed by one or more wire-protocol endpoints."""

    def __init__(
        self,
        default: str | None = None,
        per_tool: dict[str, str] | None = None,
        timeout_s: float = DEFAULT_TIMEOUT_S,
        secret: str | None = None,
    ):
        self.timeout_s = timeout_s
        self.secret = secret
        self._locators = dict(per_tool or {})
        self._default = default
        self._endpoints: dict[str, object] = {}
        self._lock = threading.Lock()

    def _endpoint_for(self, tool: str):
        locator = self._locators.get(tool, self._default)
        if locator is None:
            raise ExternalToolError(f"no endpoint configured for tool '{tool}'")
        with self._lock:
            if locator not in self._endpoints:
                self._endpoints[locator] = open_endpoint(
                    locator, timeout_s=self.timeout_s, secret=self.secret
                )
            return self._endpoints[locator]

    def invoke(self, tool, query, resources, store) -> ToolResult:
        endpoint = self._endpoint_for(tool)
        call = ActionCall(tool=tool, query=query, resources=[r.index for r in resources])
        try:
            return invoke_external(endpoint, call, resources, store, timeout_s=self.timeout_s)
        except (TransportError, ServerError, DecodeError, ValueError) as exc:
            raise ExternalToolError(str(exc)) from exc

    def close(self) -> None:
        with self._lock:
            for endpoint in self._endpoints.values():
                endpoint.close()  # type: ignore[attr-defined]
            self._endpoints.clear()


# Conformance checking.

@dataclass
class ConformanceCheck:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ConformanceReport:
    checks: list[ConformanceCheck] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(ConformanceCheck(name, passed, detail))

    def render(self) -> str:
        lines = [
            f"[{'PASS' if c.passed else 'FAIL'}] {c.name}"
            + (f": {c.detail}" if c.detail else "")
            for c in self.checks
        ]
        total = len(self.checks)
        good = sum(1 for c in self.checks if c.passed)
        lines.append(f"{good}/{total} checks passed")
        return "\n".join(lines)


def _fixture_bytes(kind: str) -> bytes:
    name = "sample.png" if kind == "image" else "sample.mp4"
    ref = importlib_resources.files("mmagent").joinpath(f"data/conformance/{name}")
    return ref.read_bytes()


def fixture_resource(kind: str) -> ResourcePayload:
    meta: dict = {"description": f"conformance fixture {kind}"}
    if kind == "video":
        meta.update({"duration_s": 10.0, "has_audio": True, "has_subtitles": False})
    return ResourcePayload(
        kind=kind,
        inline_b64=base64.b64encode(_fixture_bytes(kind)).decode("ascii"),
        meta=meta,
    )


def conformance_check(endpoint) -> ConformanceReport:
    """Exercise describe plus one invoke per advertised tool with fixture
    inputs; failures are report entries, never exceptions."""
    report = ConformanceReport()
    try:
        reply = endpoint.describe()
        report.add("describe.reachable", True)
    except (TransportError, Exception) as exc:  # noqa: BLE001 - total by design
        report.add("describe.reachable", False, str(exc))
        return report

    version = reply.get("protocol_version") if isinstance(reply, dict) else None
    report.add(
        "describe.protocol_version",
        version == PROTOCOL_VERSION,
        f"got {version!r}",
    )

    descriptors: list[ToolDescriptor] = []
    entries = reply.get("tools", []) if isinstance(reply, dict) else []
    for position, entry in enumerate(entries):
        label = entry.get("name", f"#{position}") if isinstance(entry, dict) else f"#{position}"
        try:
            jsonschema.validate(entry, schema("tool_descriptor"))
            descriptor = ToolDescriptor.from_json(entry)
            descriptor.to_spec()
            descriptors.append(descriptor)
            report.add(f"descriptor.{label}", True)
        except Exception as exc:  # noqa: BLE001
            report.add(f"descriptor.{label}", False, str(exc))

    for descriptor in descriptors:
        name = descriptor.name
        visual_kinds = [k for k in descriptor.resource_kinds if k != "empty_list"]
        resources = [fixture_resource(visual_kinds[0])] if visual_kinds else []
        request = ToolRequest(
            id=f"conf-{uuid.uuid4().hex[:8]}",
            tool=name,
            query="describe the input" if descriptor.query_kind == "required_text" else None,
            resources=resources,
        )
        try:
            response = endpoint.invoke(request)
        except (TransportError, DecodeError) as exc:
            report.add(f"invoke.{name}", False, str(exc))
            continue
        report.add(f"invoke.{name}", True)
        report.add(
            f"invoke.{name}.id_echo",
            response.id == request.id,
            f"got {response.id!r}",
        )
        schema_ok, detail = _response_wellformed(response)
        report.add(f"invoke.{name}.wellformed", schema_ok, detail)
    return report


def _response_wellformed(response: ToolResponse) -> tuple[bool, str]:
    try:
        jsonschema.validate(response.to_json(), schema("tool_response"))
    except jsonschema.ValidationError as exc:
        return False, exc.message
    for artifact in response.artifacts:
        if artifact.inline_b64 is not None:
            try:
                base64.b64decode(artifact.inline_b64, validate=True)
            except Exception as exc:  # noqa: BLE001
                return False, f"artifact inline bytes are not valid base64: {exc}"
    return True, ""

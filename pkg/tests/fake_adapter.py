"""In-process HTTP tool server used by protocol and conformance tests.

Serves the six model-backed tools with canned outputs; knobs on the handler
class simulate misbehaving servers (wrong id echo, invalid base64, hangs).
"""

from __future__ import annotations

import base64
import json
import threading
import time
from http.server import BaseHTTPRequestHandler, HTTPServer

from mmagent.protocol import PROTOCOL_VERSION, ToolDescriptor
from mmagent.toolset import DEFAULT_SPECS

EXTERNAL = [s for s in DEFAULT_SPECS if s.execution == "external"]

CANNED_OBSERVATIONS = {
    "caption": "a gray test pattern",
    "video_narration": "frame-by-frame narration attached",
    "object_detect": "Detected 1 marker(s) at (0, 0, 1, 1).",
    "text_detect": "Detected text: 'FIXTURE'.",
    "asr": "transcript attached",
    "region_ground": "cropped the queried region",
}


def _artifacts_for(tool: str) -> list[dict]:
    if tool == "asr":
        lines = "0\t2\thello from the fixture\n"
        return [{
            "kind": "transcript",
            "inline_b64": base64.b64encode(lines.encode()).decode(),
            "meta": {"channel": "subtitles"},
        }]
    if tool == "video_narration":
        data = json.dumps({"lines": [[0.0, 3.0, "a test pattern"]]})
        return [{"kind": "data", "inline_b64": base64.b64encode(data.encode()).decode()}]
    if tool == "object_detect":
        data = json.dumps({
            "label": "marker",
            "detections": [{"label": "marker", "box": [0, 0, 1, 1]}],
        })
        return [{"kind": "data", "inline_b64": base64.b64encode(data.encode()).decode()}]
    if tool == "text_detect":
        data = json.dumps({"boxes": [{"text": "FIXTURE", "box": [0, 0, 4, 4]}]})
        return [{"kind": "data", "inline_b64": base64.b64encode(data.encode()).decode()}]
    if tool == "region_ground":
        return [{
            "kind": "image",
            "inline_b64": base64.b64encode(b"\x89PNGstub").decode(),
            "meta": {"description": "cropped fixture region"},
        }]
    return []


class FakeAdapterHandler(BaseHTTPRequestHandler):
    wrong_id_echo = False
    corrupt_base64 = False
    hang_seconds = 0.0
    advertise_version = PROTOCOL_VERSION
    duplicate_tool: str | None = None

    def _send(self, payload: dict, status: int = 200) -> None:
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length)
        if self.hang_seconds:
            time.sleep(self.hang_seconds)
        if self.path == "/describe":
            tools = [
                ToolDescriptor.from_spec(s).to_json() for s in EXTERNAL
            ]
            if self.duplicate_tool:
                extra = ToolDescriptor.from_spec(EXTERNAL[0]).to_json()
                extra["name"] = self.duplicate_tool
                tools.append(extra)
            self._send({"protocol_version": self.advertise_version, "tools": tools})
            return
        if self.path == "/invoke":
            request = json.loads(raw)
            tool = request.get("tool")
            if tool not in CANNED_OBSERVATIONS:
                self._send({
                    "id": request.get("id", "?"),
                    "status": "error",
                    "observation": "",
                    "artifacts": [],
                    "error": {"code": "unknown_tool", "message": f"no such tool {tool!r}"},
                })
                return
            artifacts = _artifacts_for(tool)
            if self.corrupt_base64:
                artifacts = [{"kind": "image", "inline_b64": "!!not-base64!!"}]
            response_id = "bogus-id" if self.wrong_id_echo else request["id"]
            self._send({
                "id": response_id,
                "status": "ok",
                "observation": CANNED_OBSERVATIONS[tool],
                "artifacts": artifacts,
            })
            return
        self._send({"error": "no such path"}, status=404)

    def log_message(self, *args):
        pass


def start_fake_adapter() -> tuple[HTTPServer, str]:
    server = HTTPServer(("127.0.0.1", 0), FakeAdapterHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, f"http://127.0.0.1:{server.server_port}"

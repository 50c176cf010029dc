from __future__ import annotations

from pathlib import Path

import pytest

from mmagent.cli import main

from fake_adapter import FakeAdapterHandler, start_fake_adapter

SCENARIOS = Path(__file__).parent.parent / "scenarios"


def test_run_scenario_exits_zero(tmp_path, capsys):
    code = main([
        "run", str(SCENARIOS / "showcase" / "caption-on-video.yaml"),
        "--mode", "pie", "--workdir", str(tmp_path / "ws"),
        "--trace", str(tmp_path / "trace.jsonl"),
    ])
    out = capsys.readouterr().out
    assert code == 0
    assert "a cooking demonstration" in out
    assert (tmp_path / "trace.jsonl").exists()


def test_run_wrong_answer_exits_one(tmp_path, capsys):
    code = main([
        "run", str(SCENARIOS / "showcase" / "jersey-text.yaml"),
        "--mode", "pie", "--workdir", str(tmp_path / "ws"),
    ])
    assert code == 1
    assert "wrong answer" in capsys.readouterr().err


def test_run_learner_mode_reports_outcome(tmp_path, capsys):
    code = main([
        "run", str(SCENARIOS / "showcase" / "jersey-text.yaml"),
        "--mode", "peil_self", "--workdir", str(tmp_path / "ws"),
        "--bank", str(tmp_path / "bank.jsonl"),
    ])
    out = capsys.readouterr().out
    assert code == 0
    assert "plan_revision" in out


def test_suite_command_prints_report(tmp_path, capsys):
    code = main([
        "suite", str(SCENARIOS / "showcase"), "--mode", "pie",
        "--workdir", str(tmp_path / "ws"),
    ])
    out = capsys.readouterr().out
    assert code == 0
    assert "suite mode=pie" in out
    assert "accuracy" in out


def test_malformed_scenario_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("name: x\nquery: q\nresources: []\nscripted_llm:\n  - role: wizard\n    text: hi\n")
    code = main(["run", str(bad), "--workdir", str(tmp_path / "ws")])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_bank_command_lists_entries(tmp_path, capsys):
    main([
        "run", str(SCENARIOS / "showcase" / "jersey-text.yaml"),
        "--mode", "peil_self", "--workdir", str(tmp_path / "ws"),
        "--bank", str(tmp_path / "bank.jsonl"),
    ])
    capsys.readouterr()
    code = main(["bank", str(tmp_path / "bank.jsonl")])
    out = capsys.readouterr().out
    assert code == 0
    assert "1 entrie(s)" in out
    assert "jersey" in out


def test_conformance_command_green_against_fake_adapter(capsys):
    FakeAdapterHandler.wrong_id_echo = False
    FakeAdapterHandler.corrupt_base64 = False
    FakeAdapterHandler.hang_seconds = 0.0
    FakeAdapterHandler.advertise_version = "1"
    FakeAdapterHandler.duplicate_tool = None
    server, url = start_fake_adapter()
    try:
        code = main(["conformance", url, "--timeout", "10"])
    finally:
        server.shutdown()
    out = capsys.readouterr().out
    assert code == 0
    assert "checks passed" in out
    assert "[FAIL]" not in out


def test_ad_hoc_query_against_live_backends(tmp_path, capsys):
    # A chat-completion stub plus the fake tool adapter: the full HTTP path.
    import json
    import threading
    from http.server import BaseHTTPRequestHandler, HTTPServer

    class ChatStub(BaseHTTPRequestHandler):
        def do_POST(self):
            self.rfile.read(int(self.headers.get("Content-Length", 0)))
            body = json.dumps(
                {"choices": [{"message": {"content": "Final Answer: red"}}]}
            ).encode()
            self.send_response(200)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, *args):
            pass

    llm = HTTPServer(("127.0.0.1", 0), ChatStub)
    threading.Thread(target=llm.serve_forever, daemon=True).start()
    FakeAdapterHandler.wrong_id_echo = False
    adapter, adapter_url = start_fake_adapter()
    image = tmp_path / "bus.png"
    image.write_bytes(b"\x89PNGstub")
    tools = tmp_path / "tools.yaml"
    tools.write_text(f"endpoint: {adapter_url}\n")
    try:
        code = main([
            "run", "--query", "what color is the bus?",
            "--resource", f"image:{image}:a bus at a stop",
            "--backend", f"http:http://127.0.0.1:{llm.server_port}/v1/chat",
            "--tools", str(tools), "--gt", "red",
            "--workdir", str(tmp_path / "ws"),
        ])
    finally:
        llm.shutdown()
        adapter.shutdown()
    assert code == 0
    assert "answer: red" in capsys.readouterr().out


def test_ad_hoc_query_requires_http_backend(tmp_path, capsys):
    code = main(["run", "--query", "hi", "--workdir", str(tmp_path / "ws")])
    assert code == 2


def test_conformance_command_red_on_broken_server(capsys):
    FakeAdapterHandler.wrong_id_echo = True
    server, url = start_fake_adapter()
    try:
        code = main(["conformance", url, "--timeout", "10"])
    finally:
        server.shutdown()
        FakeAdapterHandler.wrong_id_echo = False
    assert code == 1
    assert "[FAIL]" in capsys.readouterr().out

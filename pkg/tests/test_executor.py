from __future__ import annotations

import pytest

from mmagent.executor import Executor, ToolResult
from mmagent.grammar import parse_action
from mmagent.planner import ScriptEntry, ScriptedBackend
from mmagent.scenario import ScriptedToolClient
from mmagent.tools.transcripts import TranscriptLine


def make_executor(registry, store, tools=None, replies=None, context_policy="sidecar"):
    backend = ScriptedBackend(
        [ScriptEntry("tool", text) for text in (replies or [])], role="tool"
    )
    client = ScriptedToolClient(tools or {})
    return Executor(registry, store, external=client, backend=backend,
                    context_policy=context_policy), client


def test_caption_on_video_yields_error_without_dispatch(registry, store):
    store.register("video", "v.mp4", "a video", duration_s=60.0)
    executor, client = make_executor(registry, store)
    observation = executor.execute(parse_action('caption("describe", visual[0])'))
    assert "caption accepts images; visual[0] is a video" in observation.text
    assert observation.produced_indices == []
    assert client.calls == []


def test_caption_on_image_returns_text(registry, store):
    store.register("image", "i.png", "an image")
    tools = {("caption", "describe"): {"status": "ok", "payload": {"text": "a red bus"}}}
    executor, client = make_executor(registry, store, tools=tools)
    observation = executor.execute(parse_action('caption("describe", visual[0])'))
    assert observation.text == "a red bus"
    assert client.calls == [("caption", "describe")]


def test_unknown_tool_observation_lists_available(registry, store):
    executor, _ = make_executor(registry, store)
    observation = executor.execute(parse_action('warp("x", [])'))
    assert "unknown tool 'warp'" in observation.text
    assert "caption" in observation.text


def test_unreachable_external_tool_is_error_observation(registry, store):
    store.register("image", "i.png", "an image")
    executor, _ = make_executor(registry, store, tools={})
    observation = executor.execute(parse_action('object_detect("zebra", visual[0])'))
    assert observation.text.startswith("Error: object_detect failed:")
    assert observation.produced_indices == []


def test_scripted_error_response_becomes_error_observation(registry, store):
    store.register("image", "i.png", "an image")
    tools = {("caption", "x"): {"status": "error", "message": "model exploded"}}
    executor, _ = make_executor(registry, store, tools=tools)
    observation = executor.execute(parse_action('caption("x", visual[0])'))
    assert "model exploded" in observation.text


def test_object_detect_renders_count(registry, store):
    store.register("image", "i.png", "an image")
    tools = {("object_detect", "zebra"): {"status": "ok", "payload": {
        "label": "zebra",
        "detections": [{"label": "zebra", "box": [1, 2, 3, 4]},
                        {"label": "zebra", "box": [5, 6, 7, 8]}],
    }}}
    executor, _ = make_executor(registry, store, tools=tools)
    observation = executor.execute(parse_action('object_detect("zebra", visual[0])'))
    assert observation.text.startswith("Detected 2 zebra(s)")


def test_text_detect_attaches_ocr_sidecar(registry, store):
    store.register("image", "i.png", "an image")
    tools = {("text_detect", ""): {"status": "ok", "payload": {
        "boxes": [{"text": "MAIN STREET", "box": [0, 0, 10, 10]}],
    }}}
    executor, _ = make_executor(registry, store, tools=tools)
    observation = executor.execute(parse_action("text_detect(None, visual[0])"))
    assert "'MAIN STREET'" in observation.text
    assert store.ocr(0)[0]["text"] == "MAIN STREET"


def test_asr_attaches_subtitles_sidecar(registry, store):
    store.register("video", "v.mp4", "a video", duration_s=30.0, has_audio=True)
    tools = {("asr", ""): {"status": "ok", "payload": {
        "lines": [[0.0, 3.0, "hello"], [3.0, 6.0, "world"]],
    }}}
    executor, _ = make_executor(registry, store, tools=tools)
    observation = executor.execute(parse_action("asr(None, visual[0])"))
    assert observation.text == "Transcript registered as subtitles of visual[0]."
    assert [l.text for l in store.transcript(0, "subtitles")] == ["hello", "world"]


def test_video_narration_attaches_narration_sidecar(registry, store):
    store.register("video", "v.mp4", "a video", duration_s=30.0)
    tools = {("video_narration", "what happens"): {"status": "ok", "payload": {
        "lines": [[0.0, 3.0, "a chef chops onions"]],
    }}}
    executor, _ = make_executor(registry, store, tools=tools)
    observation = executor.execute(parse_action('video_narration("what happens", visual[0])'))
    assert "a chef chops onions" in observation.text
    assert store.transcript(0, "narration") is not None


def test_narration_ground_registers_clip(registry, store):
    store.register("video", "v.mp4", "a video", duration_s=60.0)
    store.attach_transcript(0, "narration", [TranscriptLine(0, 20, "onions"),
                                             TranscriptLine(20, 40, "garlic")])
    executor, _ = make_executor(registry, store, replies=["12.0 - 34.0"])
    observation = executor.execute(parse_action('narration_ground("onions", visual[0])'))
    assert "from 12s to 34s" in observation.text
    assert observation.produced_indices == [1]
    clip = store.get(1)
    assert clip.clip_span == (12.0, 34.0)
    assert clip.parent == (0, "narration_ground")


def test_ground_not_found_renders_negative(registry, store):
    store.register("video", "v.mp4", "a video", duration_s=60.0)
    store.attach_transcript(0, "narration", [TranscriptLine(0, 20, "onions")])
    executor, _ = make_executor(registry, store, replies=["no relevant segment"])
    observation = executor.execute(parse_action('narration_ground("zebras", visual[0])'))
    assert observation.text == "No relevant segment found."
    assert observation.produced_indices == []


def test_ground_reply_clamped_to_duration(registry, store):
    store.register("video", "v.mp4", "a video", duration_s=100.0)
    store.attach_transcript(0, "subtitles", [TranscriptLine(0, 100, "talk")])
    executor, _ = make_executor(registry, store, replies=["90 - 120"])
    observation = executor.execute(parse_action('subtitle_ground("end", visual[0])'))
    assert "from 90s to 100s" in observation.text
    assert store.get(1).clip_span == (90.0, 100.0)


def test_subtitle_tool_without_sidecar_is_missing_sidecar(registry, store):
    store.register("video", "v.mp4", "a video", duration_s=60.0, has_subtitles=False)
    executor, _ = make_executor(registry, store)
    observation = executor.execute(parse_action('subtitle_reason("what?", visual[0])'))
    assert "needs subtitles for visual[0]" in observation.text


def test_temporal_reason_registers_clip(registry, store):
    store.register("video", "v.mp4", "a video", duration_s=100.0)
    executor, _ = make_executor(registry, store)
    observation = executor.execute(parse_action('temporal_reason("middle", visual[0])'))
    assert "from 40s to 60s" in observation.text
    assert store.get(1).clip_span == (40.0, 60.0)


def test_temporal_clamp_warning_in_observation(registry, store):
    store.register("video", "v.mp4", "a video", duration_s=40.0)
    executor, _ = make_executor(registry, store)
    observation = executor.execute(parse_action('temporal_reason("before: 0 - 4", visual[0])'))
    assert "boundary segment" in observation.text
    assert store.get(1).clip_span == (0.0, 5.0)


def test_temporal_bad_query_is_error_observation(registry, store):
    store.register("video", "v.mp4", "a video", duration_s=40.0)
    executor, _ = make_executor(registry, store)
    observation = executor.execute(parse_action('temporal_reason("before", visual[0])'))
    assert observation.text.startswith("Error: temporal_reason cannot run:")


def test_text_ground_crops_first_match(registry, store):
    store.register("image", "ui.png", "a settings screen")
    store.attach_ocr(0, [
        {"text": "menu", "box": [0, 0, 10, 10], "label": "button"},
        {"text": "menu", "box": [20, 0, 30, 10], "label": "heading"},
    ])
    executor, _ = make_executor(registry, store)
    observation = executor.execute(parse_action('text_ground("menu: button", visual[0])'))
    assert "Found 1 matching region(s)" in observation.text
    assert observation.produced_indices == [1]
    assert store.get(1).kind == "image"
    assert store.get(1).parent == (0, "text_ground")


def test_text_ground_no_match_no_artifact(registry, store):
    store.register("image", "ui.png", "a screen")
    store.attach_ocr(0, [{"text": "start", "box": [0, 0, 5, 5]}])
    executor, _ = make_executor(registry, store)
    observation = executor.execute(parse_action('text_ground("zebra crossing", visual[0])'))
    assert "No region matching" in observation.text
    assert observation.produced_indices == []


def test_knowledge_reason_uses_trace_context(registry, store):
    executor, _ = make_executor(registry, store, replies=["Los Angeles"])
    observation = executor.execute(
        parse_action('knowledge_reason("largest city in California?", [])'),
        trace_context="Observation: the map shows California",
    )
    assert observation.text == "Los Angeles"


def test_region_ground_registers_crop(registry, store):
    store.register("image", "p.png", "a player")
    tools = {("region_ground", "the jersey"): {"status": "ok", "payload": {
        "artifacts": [{"kind": "image", "description": "the jersey region"}],
        "text": "Located the region.",
    }}}
    executor, _ = make_executor(registry, store, tools=tools)
    observation = executor.execute(parse_action('region_ground("the jersey", visual[0])'))
    assert observation.produced_indices == [1]
    assert store.get(1).description == "the jersey region"


def test_generic_video_artifact_without_span_covers_parent(registry, store):
    store.register("video", "v.mp4", "a video", duration_s=40.0)
    tools = {("video_narration", "q"): {"payload": {
        "lines": [],
        "artifacts": [{"kind": "video", "description": "highlight reel"}],
    }}}
    executor, _ = make_executor(registry, store, tools=tools)
    observation = executor.execute(parse_action('video_narration("q", visual[0])'))
    assert observation.produced_indices == [1]
    produced = store.get(1)
    assert produced.kind == "video"
    assert produced.clip_span == (0.0, 40.0)


def test_react_context_policy_uses_previous_observation(registry, store):
    store.register("video", "v.mp4", "a video", duration_s=30.0)
    executor, _ = make_executor(
        registry, store, replies=["pepper"], context_policy="previous_observation"
    )
    observation = executor.execute(
        parse_action('narration_reason("what is added?", visual[0])'),
        previous_observation="Narration of visual[0]: the chef adds pepper",
    )
    assert observation.text == "pepper"


def test_react_context_policy_requires_previous_observation(registry, store):
    store.register("video", "v.mp4", "a video", duration_s=30.0)
    executor, _ = make_executor(registry, store, context_policy="previous_observation")
    observation = executor.execute(
        parse_action('narration_reason("what is added?", visual[0])')
    )
    assert "no previous observation" in observation.text


def test_artifact_accounting_matches_registrations(registry, store):
    store.register("video", "v.mp4", "a video", duration_s=100.0)
    executor, _ = make_executor(registry, store)
    before = len(store)
    observation = executor.execute(parse_action('temporal_reason("end", visual[0])'))
    assert len(store) - before == len(observation.produced_indices)


def test_validated_call_never_fails_dispatch_for_arity_or_kind(registry, store):
    # Stage-1 soundness: whatever validates runs without arity/kind errors.
    store.register("image", "i.png", "an image")
    store.register("video", "v.mp4", "a video", duration_s=50.0, has_audio=True)
    store.attach_transcript(1, "subtitles", [TranscriptLine(0, 50, "talk")])
    store.attach_transcript(1, "narration", [TranscriptLine(0, 50, "scene")])
    store.attach_ocr(0, [{"text": "menu", "box": [0, 0, 5, 5]}])
    tools = {
        ("caption", "q"): {"payload": {"text": "t"}},
        ("video_narration", "q"): {"payload": {"lines": [[0, 1, "x"]]}},
        ("object_detect", "q"): {"payload": {"detections": []}},
        ("text_detect", ""): {"payload": {"boxes": []}},
        ("asr", ""): {"payload": {"lines": []}},
        ("region_ground", "q"): {"payload": {"artifacts": [{"kind": "image"}]}},
    }
    replies = ["0 - 5", "ok", "0 - 5", "ok", "ok"]
    executor, _ = make_executor(registry, store, tools=tools, replies=replies)
    from mmagent.grammar import validate_call

    calls = [
        'caption("q", visual[0])', 'video_narration("q", visual[1])',
        'object_detect("q", visual[0])', 'text_detect(None, visual[0])',
        'asr(None, visual[1])', 'region_ground("q", visual[0])',
        'narration_ground("q", visual[1])', 'text_ground("menu", visual[0])',
        'subtitle_ground("q", visual[1])', 'knowledge_reason("q", [])',
        'narration_reason("q", visual[1])', 'subtitle_reason("q", visual[1])',
        'temporal_reason("middle", visual[1])',
    ]
    for raw in calls:
        call = parse_action(raw)
        assert validate_call(call, registry, store.catalog()).ok, raw
        observation = executor.execute(call)
        for code in ("arity", "kind_mismatch", "bad_index", "unknown tool"):
            assert code not in observation.text, (raw, observation.text)

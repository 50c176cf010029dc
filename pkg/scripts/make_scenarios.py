#!/usr/bin/env python3
"""Regenerate the bundled scenario suites.

The ablation suite is constructed so that each harness mode's structural
capabilities decide which scenarios it can solve:

  class A  direct caption lookup            solved by every mode
  class B  needs reacting to an observation solved by react and richer
  class C  needs clip artifacts + summaries solved by pie and richer
  class D  first attempt fails self-check   solved by the retry modes
  class E  first attempt fools self-check   solved only with ground truth

Output: scenarios/ablation/*.yaml (20 files), scenarios/showcase/*.yaml,
plus tiny placeholder media files. Deterministic; run from the repo root.
"""

from __future__ import annotations

import sys
from pathlib import Path

import yaml

ROOT = Path(__file__).resolve().parent.parent
ALL_LOOP_MODES = ["react", "pie", "peil_self", "peil_gt"]
FULL_MODES = ["pie", "peil_self", "peil_gt"]
RETRY_MODES = ["peil_self", "peil_gt"]


def planner(text, modes=None, expect=None):
    entry = {"role": "planner", "text": text}
    if modes:
        entry["modes"] = modes
    if expect:
        entry["expect"] = expect
    return entry


def evaluator(text, modes):
    return {"role": "evaluator", "text": text, "modes": modes}


def tool_reply(text, modes):
    return {"role": "tool", "text": text, "modes": modes}


def step(thought, action):
    return f"Thought: {thought}\nAction: {action}"


def image(name, description):
    return {"kind": "image", "location": f"media/{name}.png", "description": description}


def video(name, description, duration, audio=False, subtitles=False, narration=None):
    decl = {
        "kind": "video",
        "location": f"media/{name}.mp4",
        "description": description,
        "duration_s": duration,
        "has_audio": audio,
        "has_subtitles": subtitles,
    }
    if narration:
        decl["narration"] = narration
    return decl


def class_a(name, thing, color):
    """Direct lookup: one caption call answers the question in every mode."""
    query = f"what color is the {thing}?"
    return {
        "name": name,
        "query": query,
        "ground_truth": color,
        "resources": [image(name, f"a street scene with a {thing}")],
        "scripted_llm": [
            planner(f"1. caption(\"{query}\", visual[0])", ["reason_only"]),
            tool_reply(color, ["reason_only"]),
            planner(step(f"Read the {thing} from the image.",
                         f'caption("{query}", visual[0])'), ALL_LOOP_MODES),
            planner(f"Final Answer: {color}", ALL_LOOP_MODES),
            evaluator("PASS: the answer comes straight from the caption.", ["peil_self"]),
        ],
        "scripted_tools": [
            {"tool": "caption", "query": query,
             "payload": {"text": f"The {thing} is {color}."}},
        ],
        "expected": {"outcome": "no_adjustment", "answer": color, "max_attempts": 1},
    }


def class_b(name, sign_text, wrong_guess):
    """The caption is too generic; the sign text only shows up after reacting
    with an OCR call. A blind plan locks in a guess."""
    query = "what is written on the sign?"
    answer = sign_text.lower()
    return {
        "name": name,
        "query": query,
        "ground_truth": answer,
        "resources": [image(name, "a street with a sign in the distance")],
        "scripted_llm": [
            planner(f"1. caption(\"{query}\", visual[0])", ["reason_only"]),
            tool_reply(wrong_guess, ["reason_only"]),
            planner(step("Start by captioning the image.",
                         f'caption("{query}", visual[0])'), ALL_LOOP_MODES),
            planner(step("The caption does not read the sign; run OCR.",
                         "text_detect(None, visual[0])"), ALL_LOOP_MODES),
            planner(f"Final Answer: {answer}", ALL_LOOP_MODES),
            evaluator("PASS: the OCR result directly supports the answer.", ["peil_self"]),
        ],
        "scripted_tools": [
            {"tool": "caption", "query": query,
             "payload": {"text": "a street with a sign too far away to read"}},
            {"tool": "text_detect", "query": None,
             "payload": {"boxes": [{"text": sign_text, "box": [10, 10, 60, 30]}]}},
        ],
        "expected": {"outcome": "no_adjustment", "answer": answer, "max_attempts": 1},
    }


def class_c(name, before_item, answer, decoy, audio=False):
    """The answer sits in one narration segment. Finding it requires grounding
    to a clip and reasoning over that clip's narration; chaining on the whole
    narration text (react) or planning blind (reason_only) picks the decoy."""
    query = f"what does the chef add right after the {before_item}?"
    narration = [
        [0, 30, "the chef chops the ingredients"],
        [30, 60, f"the chef adds the {before_item} to the pan"],
        [60, 90, f"the chef adds the {answer}"],
        [90, 120, f"the chef adds the {decoy} at the very end"],
    ]
    scripted_tools = [
        {"tool": "video_narration", "query": "describe the video",
         "payload": {"lines": narration}},
    ]
    if audio:
        scripted_tools.append(
            {"tool": "asr", "query": None,
             "payload": {"lines": [[0, 120, "sizzling sounds"]]}}
        )
    return {
        "name": name,
        "query": query,
        "ground_truth": answer,
        "resources": [video(name, "a cooking tutorial", 120,
                            audio=audio, narration=narration)],
        "scripted_llm": [
            planner('1. video_narration("describe the video", visual[0])', ["reason_only"]),
            tool_reply(decoy, ["reason_only"]),
            planner(step("Narrate the whole video first.",
                         'video_narration("describe the video", visual[0])'), ["react"]),
            planner(step("Reason over what was just narrated.",
                         f'narration_reason("{query}", visual[0])'), ["react"]),
            tool_reply(decoy, ["react"]),
            planner(f"Final Answer: {decoy}", ["react"]),
            planner(step(f"Locate the moment the {before_item} go in.",
                         f'narration_ground("the chef adds the {before_item}", visual[0])'),
                    FULL_MODES),
            tool_reply("30.0 - 60.0", FULL_MODES),
            planner(step("Take the segment right after that moment.",
                         'temporal_reason("after: 30 - 60", visual[0])'), FULL_MODES),
            planner(step("Read what is added in that clip.",
                         f'narration_reason("what does the chef add?", visual[2])'),
                    FULL_MODES),
            tool_reply(answer, FULL_MODES),
            planner(f"Final Answer: {answer}", FULL_MODES),
            evaluator("PASS: the clip narration names exactly one added item.",
                      ["peil_self"]),
        ],
        "scripted_tools": scripted_tools,
        "expected": {"outcome": "no_adjustment", "answer": answer, "max_attempts": 1},
    }


def class_d(name, word, wrong_color, expect_marker=False):
    """Attempt one answers from a vague caption and fails evaluation; the
    retry grounds the region, reads it, and answers correctly."""
    query = "what word is on the player's jersey?"
    answer = word.lower()
    attempt2_expect = (
        "Note from the previous attempt's evaluation:" if expect_marker else None
    )
    return {
        "name": name,
        "query": query,
        "ground_truth": answer,
        "resources": [image(name, "a baseball player mid-swing")],
        "scripted_llm": [
            planner(f"1. caption(\"{query}\", visual[0])", ["reason_only"]),
            tool_reply(wrong_color, ["reason_only"]),
            planner(step("Caption the photo.", f'caption("{query}", visual[0])'),
                    ["react"]),
            planner(f"Final Answer: {wrong_color}", ["react"]),
            planner(step("Caption the photo.", f'caption("{query}", visual[0])'),
                    FULL_MODES),
            planner(f"Final Answer: {wrong_color}", FULL_MODES),
            evaluator("FAIL: the question asks for a word but no text was ever read "
                      "from the image.", ["peil_self"]),
            evaluator(f"FAIL: '{wrong_color}' does not match the reference answer.",
                      ["peil_gt"]),
            planner(step("The caption cannot read text; ground the jersey region first.",
                         'region_ground("the player\'s jersey", visual[0])'),
                    RETRY_MODES, expect=attempt2_expect),
            planner(step("Run OCR on the cropped jersey.",
                         "text_detect(None, visual[1])"), RETRY_MODES),
            planner(f"Final Answer: {answer}", RETRY_MODES),
            evaluator("PASS: the answer is the text read from the grounded region.",
                      ["peil_self"]),
        ],
        "scripted_tools": [
            {"tool": "caption", "query": query,
             "payload": {"text": f"a baseball player in a {wrong_color} jersey"}},
            {"tool": "region_ground", "query": "the player's jersey",
             "payload": {"artifacts": [{"kind": "image",
                                        "description": "the jersey region"}]}},
            {"tool": "text_detect", "query": None,
             "payload": {"boxes": [{"text": word, "box": [4, 4, 40, 16]}]}},
        ],
        "expected": {"outcome": "plan_revision", "answer": answer,
                     "min_attempts": 2, "max_attempts": 2},
    }


def class_e(name, wrong_kind, right_kind):
    """Attempt one misidentifies the object but reads as consistent, so the
    self-check passes it; only the ground-truth check forces the retry that
    runs a detector and corrects the answer."""
    query = "what kind of vehicle is parked by the curb?"
    return {
        "name": name,
        "query": query,
        "ground_truth": right_kind,
        "resources": [image(name, "a city street at noon")],
        "scripted_llm": [
            planner(f"1. caption(\"{query}\", visual[0])", ["reason_only"]),
            tool_reply(wrong_kind, ["reason_only"]),
            planner(step("Caption the street.", f'caption("{query}", visual[0])'),
                    ALL_LOOP_MODES),
            planner(f"Final Answer: {wrong_kind}", ALL_LOOP_MODES),
            evaluator(f"PASS: the caption names a {wrong_kind} and the answer "
                      "repeats it consistently.", ["peil_self"]),
            evaluator(f"FAIL: '{wrong_kind}' is not consistent with the reference "
                      "answer.", ["peil_gt"]),
            planner(step("Double-check the vehicle type with a detector.",
                         f'object_detect("vehicle", visual[0])'), ["peil_gt"]),
            planner(f"Final Answer: {right_kind}", ["peil_gt"]),
        ],
        "scripted_tools": [
            {"tool": "caption", "query": query,
             "payload": {"text": f"an orange {wrong_kind} parked by the curb"}},
            {"tool": "object_detect", "query": "vehicle",
             "payload": {"label": right_kind,
                         "detections": [{"label": right_kind, "box": [5, 5, 90, 60]}]}},
        ],
        "expected": {"outcome": "plan_revision", "answer": right_kind,
                     "min_attempts": 2, "max_attempts": 2},
    }


def ablation_suite():
    return [
        class_a("a1-bus", "bus", "red"),
        class_a("a2-car", "car", "blue"),
        class_a("a3-door", "door", "green"),
        class_a("a4-kite", "kite", "yellow"),
        class_a("a5-boat", "boat", "white"),
        class_a("a6-roof", "roof", "gray"),
        class_b("b1-sign", "MAIN STREET", "stop"),
        class_b("b2-banner", "GRAND OPENING", "sale"),
        class_b("b3-menu", "SOUP OF THE DAY", "pizza"),
        class_b("b4-plate", "TAXI 42", "bus stop"),
        class_c("c1-garlic", "onions", "garlic", "pepper", audio=True),
        class_c("c2-basil", "tomatoes", "basil", "salt"),
        class_c("c3-cream", "mushrooms", "cream", "parsley"),
        class_c("c4-ginger", "carrots", "ginger", "sesame"),
        class_d("d1-tigers", "TIGERS", "blue", expect_marker=True),
        class_d("d2-rockets", "ROCKETS", "white"),
        class_d("d3-comets", "COMETS", "red"),
        class_d("d4-pilots", "PILOTS", "green"),
        class_e("e1-shuttle", "truck", "shuttle bus"),
        class_e("e2-tram", "train", "tram"),
    ]


def showcase_caption_on_video():
    """Error-feedback demonstration: caption on a video fails the legality
    check, the follow-up narration call succeeds."""
    return {
        "name": "caption-on-video",
        "query": "what is happening in the video?",
        "ground_truth": "a cooking demonstration",
        "resources": [video("caption-on-video", "an untitled upload", 90)],
        "scripted_llm": [
            planner(step("Describe the input with the caption tool.",
                         'caption("describe the scene", visual[0])'), FULL_MODES),
            planner(step("Captioning failed because the input is a video; "
                         "narrate it instead.",
                         'video_narration("describe the scene", visual[0])'), FULL_MODES),
            planner("Final Answer: a cooking demonstration", FULL_MODES),
            evaluator("PASS: the narration supports the answer.", ["peil_self"]),
        ],
        "scripted_tools": [
            {"tool": "video_narration", "query": "describe the scene",
             "payload": {"lines": [[0, 30, "a chef lays out ingredients"],
                                    [30, 90, "the chef cooks them in a wok"]]}},
        ],
        "expected": {"outcome": "no_adjustment", "answer": "a cooking demonstration",
                     "max_attempts": 1},
    }


def showcase_jersey():
    scenario = class_d("jersey-text", "TIGERS", "blue", expect_marker=True)
    scenario["query"] = "what word is on the player's jersey?"
    return scenario


def showcase_audio_lecture():
    """A video arriving with audio is transcribed automatically before any
    planner step; the answer then comes from the subtitles."""
    return {
        "name": "audio-lecture",
        "query": "what city does the speaker mention?",
        "ground_truth": "berlin",
        "resources": [video("audio-lecture", "a recorded talk", 60, audio=True)],
        "scripted_llm": [
            planner(step("The transcript is already attached; search it.",
                         'subtitle_reason("what city does the speaker mention?", visual[0])'),
                    FULL_MODES),
            tool_reply("berlin", FULL_MODES),
            planner("Final Answer: berlin", FULL_MODES),
            evaluator("PASS: the transcript names the city.", ["peil_self"]),
        ],
        "scripted_tools": [
            {"tool": "asr", "query": None,
             "payload": {"lines": [[0, 30, "welcome everyone"],
                                    [30, 60, "greetings from berlin"]]}},
        ],
        "expected": {"outcome": "no_adjustment", "answer": "berlin", "max_attempts": 1},
    }


def write_suite(directory: Path, scenarios: list[dict]) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    media = directory / "media"
    media.mkdir(exist_ok=True)
    for scenario in scenarios:
        for resource in scenario["resources"]:
            path = directory / resource["location"]
            stub = b"\x89PNGstub" if resource["kind"] == "image" else b"ftypstub"
            path.write_bytes(stub)
        out = directory / f"{scenario['name']}.yaml"
        out.write_text(
            yaml.safe_dump(scenario, sort_keys=False, allow_unicode=True, width=88),
            encoding="utf-8",
        )
        print(f"wrote {out}")


def main() -> int:
    write_suite(ROOT / "scenarios" / "ablation", ablation_suite())
    write_suite(
        ROOT / "scenarios" / "showcase",
        [showcase_caption_on_video(), showcase_jersey(), showcase_audio_lecture()],
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())

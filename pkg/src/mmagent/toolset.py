"""The default thirteen-tool registry.

Three tool families: descriptors extract information (caption, narration,
detection, OCR, speech-to-text), locators narrow it down (region/narration/
text/subtitle grounding), and reasoners derive answers from it (knowledge/
narration/subtitle/temporal reasoning).
"""

from __future__ import annotations

from .grammar import ToolRegistry, ToolSpec

IMAGE = frozenset({"image"})
VIDEO = frozenset({"video"})
NO_VISUAL = frozenset({"empty_list"})

DEFAULT_SPECS = (
    ToolSpec("caption", "extract the visual information in an image.",
             "required_text", IMAGE, False, "external"),
    ToolSpec("video_narration", "output narration based on video's visual information.",
             "required_text", VIDEO, False, "external"),
    ToolSpec("object_detect", "detect required objects in an image.",
             "required_text", IMAGE, False, "external"),
    ToolSpec("text_detect", "extract the OCR in an image.",
             "none_literal", IMAGE, False, "external"),
    ToolSpec("asr", "transcribe audio to text.",
             "none_literal", VIDEO, False, "external"),
    ToolSpec("region_ground", "locate the queried region in an image.",
             "required_text", IMAGE, True, "external"),
    ToolSpec("narration_ground", "find the clip based on the narration of a video.",
             "required_text", VIDEO, True, "llm_prompt"),
    ToolSpec("text_ground", "find the location of a specific text in an image.",
             "required_text", IMAGE, True, "builtin"),
    ToolSpec("subtitle_ground", "find the clip based on the subtitle of a video.",
             "required_text", VIDEO, True, "llm_prompt"),
    ToolSpec("knowledge_reason", "infer the answer based on the commonsense.",
             "required_text", NO_VISUAL, False, "llm_prompt"),
    ToolSpec("narration_reason", "infer the answer based on narration of a video.",
             "required_text", VIDEO, False, "llm_prompt"),
    ToolSpec("subtitle_reason", "infer the answer based on subtitle of a video.",
             "required_text", VIDEO, False, "llm_prompt"),
    ToolSpec("temporal_reason", "find the clip based on temporal relationship words.",
             "required_text", VIDEO, True, "builtin"),
)

#: Names of the model-backed tools an external adapter is expected to serve.
EXTERNAL_TOOLS = tuple(s.name for s in DEFAULT_SPECS if s.execution == "external")


def default_registry() -> ToolRegistry:
    registry = ToolRegistry()
    for spec in DEFAULT_SPECS:
        registry.register(spec)
    return registry

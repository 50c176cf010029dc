import { PROTOCOL_VERSION, ToolDescriptor } from "./types";

/** The six model-backed tools this adapter serves. */
export const DESCRIPTORS: ToolDescriptor[] = [
  {
    name: "caption",
    description: "extract the visual information in an image.",
    query_kind: "required_text",
    resource_kinds: ["image"],
    produces_artifact: false,
    execution: "external",
    protocol_version: PROTOCOL_VERSION,
  },
  {
    name: "video_narration",
    description: "output narration based on video's visual information.",
    query_kind: "required_text",
    resource_kinds: ["video"],
    produces_artifact: false,
    execution: "external",
    protocol_version: PROTOCOL_VERSION,
  },
  {
    name: "object_detect",
    description: "detect required objects in an image.",
    query_kind: "required_text",
    resource_kinds: ["image"],
    produces_artifact: false,
    execution: "external",
    protocol_version: PROTOCOL_VERSION,
  },
  {
    name: "text_detect",
    description: "extract the OCR in an image.",
    query_kind: "none_literal",
    resource_kinds: ["image"],
    produces_artifact: false,
    execution: "external",
    protocol_version: PROTOCOL_VERSION,
  },
  {
    name: "asr",
    description: "transcribe audio to text.",
    query_kind: "none_literal",
    resource_kinds: ["video"],
    produces_artifact: false,
    execution: "external",
    protocol_version: PROTOCOL_VERSION,
  },
  {
    name: "region_ground",
    description: "locate the queried region in an image.",
    query_kind: "required_text",
    resource_kinds: ["image"],
    produces_artifact: true,
    execution: "external",
    protocol_version: PROTOCOL_VERSION,
  },
];

export const TOOL_NAMES = DESCRIPTORS.map((d) => d.name);

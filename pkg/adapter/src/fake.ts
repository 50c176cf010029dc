/** Deterministic fixture-backed tool implementations.
 *
 * Responses are keyed by (tool, resource fingerprint, query): the adapter
 * looks for fixtures/<tool>/<fingerprint>.json and falls back to
 * fixtures/<tool>/default.json. The fingerprint is the first 16 hex chars of
 * sha256 over the resource bytes (or its locator string) plus the query, so
 * identical requests always replay identical responses.
 */

import { createHash } from "node:crypto";
import { existsSync, readFileSync } from "node:fs";
import { join } from "node:path";

import { DEFAULT_NARRATION_FPS, narrationSchedule } from "./schedule";
import {
  Artifact,
  ResourcePayload,
  ToolRequest,
  ToolResponse,
  errorResponse,
  okResponse,
} from "./types";

type TranscriptRow = [number, number, string];

interface FixtureFile {
  observation?: string;
  artifacts?: Artifact[];
  // tool-specific canned payloads, normalized by the handlers below
  text?: string;
  frame_caption?: string;
  frame_ocr?: string[];
  label?: string;
  detections?: Array<{ label: string; box: number[] }>;
  boxes?: Array<{ text: string; box: number[]; label?: string }>;
  lines?: TranscriptRow[];
  description?: string;
}

export interface FakeToolboxOptions {
  fixtureDir: string;
  narrationFps?: number;
}

const PNG_STUB_B64 = Buffer.from("\x89PNGstub", "binary").toString("base64");

function b64(text: string): string {
  return Buffer.from(text, "utf-8").toString("base64");
}

function dataArtifact(payload: unknown): Artifact {
  return { kind: "data", inline_b64: b64(JSON.stringify(payload)) };
}

function transcriptArtifact(lines: TranscriptRow[], channel: string): Artifact {
  const tsv = lines.map(([a, b, text]) => `${a}\t${b}\t${text}\n`).join("");
  return { kind: "transcript", inline_b64: b64(tsv), meta: { channel } };
}

export function fingerprint(resources: ResourcePayload[], query: string | null): string {
  const hash = createHash("sha256");
  for (const resource of resources) {
    if (resource.inline_b64 !== undefined) {
      hash.update(Buffer.from(resource.inline_b64, "base64"));
    } else {
      hash.update(resource.locator ?? "");
    }
    hash.update("\n");
  }
  hash.update(query ?? "");
  return hash.digest("hex").slice(0, 16);
}

export class FakeToolbox {
  private readonly fixtureDir: string;
  private readonly narrationFps: number;

  public constructor(options: FakeToolboxOptions) {
    this.fixtureDir = options.fixtureDir;
    this.narrationFps = options.narrationFps ?? DEFAULT_NARRATION_FPS;
  }

  public invoke(request: ToolRequest): ToolResponse {
    const fixture = this.loadFixture(request);
    if (fixture === null) {
      return errorResponse(
        request.id,
        "no_fixture",
        `no fixture for tool '${request.tool}' (and no default.json)`
      );
    }
    switch (request.tool) {
      case "caption":
        return okResponse(
          request.id,
          fixture.observation ?? fixture.text ?? "an unremarkable scene"
        );
      case "video_narration":
        return this.narrate(request, fixture);
      case "object_detect": {
        const detections = fixture.detections ?? [];
        const label = fixture.label ?? request.query ?? "object";
        return okResponse(
          request.id,
          fixture.observation ?? `Detected ${detections.length} ${label}(s).`,
          [dataArtifact({ label, detections })]
        );
      }
      case "text_detect": {
        const boxes = fixture.boxes ?? [];
        const texts = boxes.map((box) => `'${box.text}'`).join(", ");
        return okResponse(
          request.id,
          fixture.observation ?? (boxes.length ? `Detected text: ${texts}.` : "No text detected."),
          [dataArtifact({ boxes })]
        );
      }
      case "asr": {
        const lines = fixture.lines ?? [];
        return okResponse(
          request.id,
          fixture.observation ?? "transcript attached",
          [transcriptArtifact(lines, "subtitles")]
        );
      }
      case "region_ground": {
        const description = fixture.description ?? `region matching ${request.query ?? "the query"}`;
        return okResponse(
          request.id,
          fixture.observation ?? "Located the queried region; cropped it.",
          [{ kind: "image", inline_b64: PNG_STUB_B64, meta: { description } }]
        );
      }
      default:
        return errorResponse(request.id, "unknown_tool", `no such tool '${request.tool}'`);
    }
  }

  /** Frame captions at the configured sampling schedule, with any fixture
   * OCR strings appended to each frame's caption. */
  private narrate(request: ToolRequest, fixture: FixtureFile): ToolResponse {
    const meta = request.resources[0]?.meta ?? {};
    const duration = typeof meta.duration_s === "number" ? meta.duration_s : 10;
    const stamps = narrationSchedule(duration, this.narrationFps);
    const step = 1 / this.narrationFps;
    const caption = fixture.frame_caption ?? "a frame of the video";
    const ocrSuffix = fixture.frame_ocr?.length
      ? ` [text: ${fixture.frame_ocr.join(" | ")}]`
      : "";
    const lines: TranscriptRow[] = stamps.map((t) => [
      t,
      Math.min(t + step, duration),
      `${caption}${ocrSuffix}`,
    ]);
    return okResponse(
      request.id,
      fixture.observation ?? `narrated ${lines.length} frames`,
      [dataArtifact({ lines })]
    );
  }

  private loadFixture(request: ToolRequest): FixtureFile | null {
    const key = fingerprint(request.resources, request.query);
    for (const name of [`${key}.json`, "default.json"]) {
      const path = join(this.fixtureDir, request.tool, name);
      if (existsSync(path)) {
        return JSON.parse(readFileSync(path, "utf-8")) as FixtureFile;
      }
    }
    return null;
  }
}

import { mkdtempSync, writeFileSync, mkdirSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { TOOL_NAMES } from "../src/descriptors";
import { FakeToolbox, fingerprint } from "../src/fake";
import { LiveToolbox } from "../src/live";
import { buildToolbox, handleDescribe, handleInvoke } from "../src/server";
import { ToolRequest } from "../src/types";

const FIXTURES = join(__dirname, "..", "fixtures");

function request(tool: string, overrides: Partial<ToolRequest> = {}): ToolRequest {
  return {
    id: `t-${tool}`,
    tool,
    query: tool === "asr" || tool === "text_detect" ? null : "describe it",
    resources: [
      {
        kind: tool === "asr" || tool === "video_narration" ? "video" : "image",
        inline_b64: Buffer.from("fixture-bytes").toString("base64"),
        meta: { duration_s: 10 },
      },
    ],
    options: {},
    ...overrides,
  };
}

describe("describe", () => {
  it("advertises the six tools under protocol version 1", () => {
    const reply = handleDescribe();
    expect(reply.protocol_version).toBe("1");
    expect(reply.tools.map((t) => t.name)).toEqual([
      "caption",
      "video_narration",
      "object_detect",
      "text_detect",
      "asr",
      "region_ground",
    ]);
    for (const descriptor of reply.tools) {
      expect(descriptor.resource_kinds.length).toBeGreaterThan(0);
      expect(descriptor.protocol_version).toBe("1");
    }
  });
});

describe("fake invoke", () => {
  const toolbox = new FakeToolbox({ fixtureDir: FIXTURES });

  it("echoes the request id and answers every advertised tool", () => {
    for (const tool of TOOL_NAMES) {
      const response = toolbox.invoke(request(tool));
      expect(response.id).toBe(`t-${tool}`);
      expect(response.status).toBe("ok");
      expect(response.observation.length).toBeGreaterThan(0);
      if (response.status === "error") {
        expect(response.artifacts).toEqual([]);
      }
    }
  });

  it("is deterministic for identical requests", () => {
    const first = toolbox.invoke(request("video_narration"));
    const second = toolbox.invoke(request("video_narration"));
    expect(second).toEqual(first);
  });

  it("narrates at the sampling schedule with OCR appended per frame", () => {
    const response = toolbox.invoke(request("video_narration"));
    const data = JSON.parse(
      Buffer.from(response.artifacts[0].inline_b64 as string, "base64").toString("utf-8")
    );
    expect(data.lines.map((row: [number, number, string]) => row[0])).toEqual([0, 3, 6, 9]);
    expect(data.lines[0][2]).toContain("[text: FIXTURE]");
  });

  it("returns the asr transcript as a tsv transcript artifact", () => {
    const response = toolbox.invoke(request("asr"));
    const artifact = response.artifacts[0];
    expect(artifact.kind).toBe("transcript");
    const tsv = Buffer.from(artifact.inline_b64 as string, "base64").toString("utf-8");
    expect(tsv).toContain("hello from the fake adapter");
    expect(tsv.split("\n")[0].split("\t")).toHaveLength(3);
  });

  it("prefers a fingerprint-specific fixture over the default", () => {
    const dir = mkdtempSync(join(tmpdir(), "fixtures-"));
    mkdirSync(join(dir, "caption"));
    const req = request("caption");
    const key = fingerprint(req.resources, req.query);
    writeFileSync(
      join(dir, "caption", `${key}.json`),
      JSON.stringify({ observation: "the specific caption" })
    );
    writeFileSync(
      join(dir, "caption", "default.json"),
      JSON.stringify({ observation: "the default caption" })
    );
    const pinned = new FakeToolbox({ fixtureDir: dir });
    expect(pinned.invoke(req).observation).toBe("the specific caption");
    const other = request("caption", { query: "something else entirely" });
    expect(pinned.invoke(other).observation).toBe("the default caption");
  });

  it("fingerprints differ by content and by query", () => {
    const a = request("caption");
    const b = request("caption", { query: "another question" });
    expect(fingerprint(a.resources, a.query)).not.toBe(fingerprint(b.resources, b.query));
  });
});

describe("invoke dispatch", () => {
  const toolbox = buildToolbox({ mode: "fake", fixtureDir: FIXTURES });

  it("rejects unknown tools with a protocol error", () => {
    const response = handleInvoke(toolbox, request("warp_drive"));
    expect(response.status).toBe("error");
    expect(response.error?.code).toBe("unknown_tool");
    expect(response.artifacts).toEqual([]);
  });

  it("rejects malformed requests but still answers in-envelope", () => {
    const response = handleInvoke(toolbox, { id: "x", nope: true });
    expect(response.status).toBe("error");
    expect(response.error?.code).toBe("invalid_request");
    expect(response.id).toBe("x");
  });
});

describe("live mode", () => {
  it("wraps the model command's stdout without breaking the envelope", () => {
    const toolbox = new LiveToolbox({
      models: {
        caption: [
          process.execPath,
          "-e",
          'process.stdin.resume(); process.stdin.on("end", () => {}); console.log("line with \\"quotes\\" and\\nnewlines");',
        ],
      },
    });
    const response = toolbox.invoke(request("caption"));
    expect(response.status).toBe("ok");
    expect(response.observation).toContain('"quotes"');
    expect(JSON.parse(JSON.stringify(response)).observation).toBe(response.observation);
  });

  it("reports a missing model as a protocol error", () => {
    const toolbox = new LiveToolbox({ models: {} });
    const response = toolbox.invoke(request("caption"));
    expect(response.status).toBe("error");
    expect(response.error?.code).toBe("no_model");
  });

  it("reports a crashing model as model_failure", () => {
    const toolbox = new LiveToolbox({
      models: { caption: [process.execPath, "-e", "process.exit(3)"] },
    });
    const response = toolbox.invoke(request("caption"));
    expect(response.status).toBe("error");
    expect(response.error?.code).toBe("model_failure");
  });
});

/** HTTP tool server: POST /describe and POST /invoke, protocol version 1.
 *
 * Usage:
 *   node dist/server.js --port 8080 --fixtures ./fixtures            # fake mode
 *   node dist/server.js --port 8080 --config live.json               # live mode
 */

import { createServer, IncomingMessage, Server, ServerResponse } from "node:http";
import { readFileSync } from "node:fs";
import { join } from "node:path";

import { DESCRIPTORS, TOOL_NAMES } from "./descriptors";
import { FakeToolbox } from "./fake";
import { LiveToolbox } from "./live";
import {
  DescribeReply,
  PROTOCOL_VERSION,
  ToolRequest,
  ToolResponse,
  errorResponse,
} from "./types";

export interface AdapterConfig {
  mode: "fake" | "live";
  fixtureDir?: string;
  models?: Record<string, string[]>;
  narrationFps?: number;
  secret?: string;
}

interface Toolbox {
  invoke(request: ToolRequest): ToolResponse;
}

export function buildToolbox(config: AdapterConfig): Toolbox {
  if (config.mode === "fake") {
    if (!config.fixtureDir) {
      throw new Error("fake mode requires a fixture directory");
    }
    return new FakeToolbox({
      fixtureDir: config.fixtureDir,
      narrationFps: config.narrationFps,
    });
  }
  return new LiveToolbox({ models: config.models ?? {} });
}

function validateRequest(body: unknown): body is ToolRequest {
  if (typeof body !== "object" || body === null) return false;
  const record = body as Record<string, unknown>;
  return (
    typeof record.id === "string" &&
    record.id.length > 0 &&
    typeof record.tool === "string" &&
    (record.query === null || typeof record.query === "string") &&
    Array.isArray(record.resources) &&
    typeof record.options === "object"
  );
}

export function handleDescribe(): DescribeReply {
  return { protocol_version: PROTOCOL_VERSION, tools: DESCRIPTORS };
}

export function handleInvoke(toolbox: Toolbox, body: unknown): ToolResponse {
  if (!validateRequest(body)) {
    const id =
      typeof (body as Record<string, unknown>)?.id === "string"
        ? ((body as Record<string, unknown>).id as string)
        : "unknown";
    return errorResponse(id, "invalid_request", "request does not match the schema");
  }
  if (!TOOL_NAMES.includes(body.tool)) {
    return errorResponse(body.id, "unknown_tool", `no such tool '${body.tool}'`);
  }
  try {
    return toolbox.invoke(body);
  } catch (err) {
    return errorResponse(body.id, "internal", String(err));
  }
}

function readBody(request: IncomingMessage): Promise<string> {
  return new Promise((resolve, reject) => {
    const chunks: Buffer[] = [];
    request.on("data", (chunk: Buffer) => chunks.push(chunk));
    request.on("end", () => resolve(Buffer.concat(chunks).toString("utf-8")));
    request.on("error", reject);
  });
}

export function createAdapterServer(config: AdapterConfig): Server {
  const toolbox = buildToolbox(config);
  return createServer(async (request: IncomingMessage, response: ServerResponse) => {
    const send = (status: number, payload: unknown) => {
      const body = JSON.stringify(payload);
      response.writeHead(status, {
        "Content-Type": "application/json",
        "Content-Length": Buffer.byteLength(body),
      });
      response.end(body);
    };
    if (request.method !== "POST") {
      send(405, { error: "POST only" });
      return;
    }
    if (config.secret && request.headers["x-shared-secret"] !== config.secret) {
      send(403, { error: "bad or missing shared secret" });
      return;
    }
    let body: unknown = {};
    try {
      const raw = await readBody(request);
      body = raw.trim() ? JSON.parse(raw) : {};
    } catch {
      send(400, { error: "request body is not valid JSON" });
      return;
    }
    if (request.url === "/describe") {
      send(200, handleDescribe());
      return;
    }
    if (request.url === "/invoke") {
      send(200, handleInvoke(toolbox, body));
      return;
    }
    send(404, { error: `no such path ${request.url}` });
  });
}

function parseArgs(argv: string[]): { port: number; config: AdapterConfig } {
  let port = 8080;
  const config: AdapterConfig = { mode: "fake" };
  for (let i = 0; i < argv.length; i += 1) {
    const arg = argv[i];
    if (arg === "--port") port = Number(argv[++i]);
    else if (arg === "--fixtures") config.fixtureDir = argv[++i];
    else if (arg === "--fps") config.narrationFps = Number(argv[++i]);
    else if (arg === "--secret") config.secret = argv[++i];
    else if (arg === "--config") {
      const loaded = JSON.parse(readFileSync(argv[++i], "utf-8")) as AdapterConfig;
      Object.assign(config, loaded);
    }
  }
  if (config.mode === "fake" && !config.fixtureDir) {
    config.fixtureDir = join(__dirname, "..", "fixtures");
  }
  return { port, config };
}

if (require.main === module) {
  const { port, config } = parseArgs(process.argv.slice(2));
  const server = createAdapterServer(config);
  server.listen(port, () => {
    console.log(`tool adapter (${config.mode} mode) listening on :${port}`);
  });
}

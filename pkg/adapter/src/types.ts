/** Wire types for the tool-server protocol, version 1.
 *
 * These mirror the JSON schemas shipped with the orchestrator
 * (schemas/tool_request.schema.json and friends): one envelope over HTTP
 * POST /describe and POST /invoke.
 */

export const PROTOCOL_VERSION = "1";

export type ResourceKind = "image" | "video";
export type ArtifactKind = "image" | "video" | "transcript" | "ocr" | "data";

export interface ResourcePayload {
  kind: ResourceKind;
  locator?: string;
  inline_b64?: string;
  meta?: Record<string, unknown>;
}

export interface ToolRequest {
  id: string;
  tool: string;
  query: string | null;
  resources: ResourcePayload[];
  options: Record<string, string>;
}

export interface Artifact {
  kind: ArtifactKind;
  locator?: string;
  inline_b64?: string;
  meta?: Record<string, unknown>;
}

export interface ToolError {
  code: string;
  message: string;
}

export interface ToolResponse {
  id: string;
  status: "ok" | "error";
  observation: string;
  artifacts: Artifact[];
  error?: ToolError;
}

export interface ToolDescriptor {
  name: string;
  description: string;
  query_kind: "required_text" | "none_literal";
  resource_kinds: string[];
  produces_artifact: boolean;
  execution: "builtin" | "external" | "llm_prompt";
  protocol_version: string;
}

export interface DescribeReply {
  protocol_version: string;
  tools: ToolDescriptor[];
}

export function okResponse(id: string, observation: string, artifacts: Artifact[] = []): ToolResponse {
  return { id, status: "ok", observation, artifacts };
}

export function errorResponse(id: string, code: string, message: string): ToolResponse {
  return { id, status: "error", observation: "", artifacts: [], error: { code, message } };
}

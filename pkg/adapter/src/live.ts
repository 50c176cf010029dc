/** Live mode: each tool wraps a configured model command.
 *
 * The command receives the full ToolRequest as JSON on stdin and must print
 * its result text to stdout. Whatever the model prints is carried inside the
 * response envelope as a JSON string, never spliced into it, so responses
 * stay schema-valid regardless of the model's output.
 */

import { spawnSync } from "node:child_process";

import { ToolRequest, ToolResponse, errorResponse, okResponse } from "./types";

export interface LiveToolboxOptions {
  /** tool name -> argv of the model command */
  models: Record<string, string[]>;
  timeoutMs?: number;
}

export class LiveToolbox {
  private readonly models: Record<string, string[]>;
  private readonly timeoutMs: number;

  public constructor(options: LiveToolboxOptions) {
    this.models = options.models;
    this.timeoutMs = options.timeoutMs ?? 60_000;
  }

  public invoke(request: ToolRequest): ToolResponse {
    const argv = this.models[request.tool];
    if (!argv || argv.length === 0) {
      return errorResponse(
        request.id,
        "no_model",
        `live mode has no model command configured for '${request.tool}'`
      );
    }
    const run = spawnSync(argv[0], argv.slice(1), {
      input: JSON.stringify(request),
      encoding: "utf-8",
      timeout: this.timeoutMs,
    });
    if (run.error) {
      return errorResponse(request.id, "model_failure", String(run.error));
    }
    if (run.status !== 0) {
      return errorResponse(
        request.id,
        "model_failure",
        `model command exited with ${run.status}: ${(run.stderr ?? "").slice(0, 200)}`
      );
    }
    return okResponse(request.id, (run.stdout ?? "").trim());
  }
}

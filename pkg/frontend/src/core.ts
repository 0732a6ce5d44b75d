/**
 * Process-level plumbing: locating and invoking the cubetop executable.
 *
 * Every binding call is one subprocess run against the CLI, with inputs and
 * outputs exchanged through files in a private temp directory. That is the
 * whole integration surface; nothing links against core internals.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import {
  CoreContractError,
  CoreError,
  CoreInputError,
  CoreNotFoundError,
  CoreUsageError,
} from "./errors.js";

/** Version of this package; must match what `cubetop --version` reports. */
export const VERSION = "0.1.0";

/** Executable to run; override with the CUBETOP_BIN environment variable. */
export function coreBinary(): string {
  return process.env.CUBETOP_BIN || "cubetop";
}

export interface CoreResult {
  stdout: string;
  stderr: string;
}

// the core prefixes its own diagnostics with "error: " on stderr
function coreMessage(stderr: string): string {
  const text = stderr.trim();
  return text.startsWith("error: ") ? text.slice("error: ".length) : text;
}

/**
 * Runs the core once and returns its stdout/stderr on success.
 *
 * Nonzero exits map onto the error hierarchy by status code, carrying the
 * core's own message so callers see exactly what the core said.
 */
export function invokeCore(args: string[]): CoreResult {
  const bin = coreBinary();
  const proc = spawnSync(bin, args, {
    encoding: "utf8",
    maxBuffer: 1 << 28,
    windowsHide: true,
  });
  if (proc.error) {
    throw new CoreNotFoundError(
      `cannot run ${bin}: ${proc.error.message} (set CUBETOP_BIN to the core executable)`,
    );
  }
  const status = proc.status ?? -1;
  if (status === 0) {
    return { stdout: proc.stdout, stderr: proc.stderr };
  }
  const message = coreMessage(proc.stderr);
  switch (status) {
    case 2:
      throw new CoreInputError(message, status, proc.stderr);
    case 3:
      throw new CoreContractError(message, status, proc.stderr);
    case 64:
      throw new CoreUsageError(message, status, proc.stderr);
    default:
      throw new CoreError(`${bin} exited with status ${status}: ${message}`, status, proc.stderr);
  }
}

/** Reports the core's version string, e.g. "0.1.0". */
export function coreVersion(): string {
  const { stdout } = invokeCore(["--version"]);
  const match = stdout.trim().match(/^cubetop (\S+)$/);
  if (!match || match[1] === undefined) {
    throw new CoreNotFoundError(`unexpected --version output: ${JSON.stringify(stdout)}`);
  }
  return match[1];
}

/** Runs fn with a fresh temp directory, removing it afterwards. */
export function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "cubetop-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

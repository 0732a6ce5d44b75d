/**
 * Test utilities, including an independent CLI route.
 *
 * Parity tests compare binding results against the CLI driven directly from
 * here with a bare spawnSync. That route deliberately shares no code with
 * src/ so the two sides of each comparison stay independent.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { boundArray, type BoundArray, type Dims3 } from "../src/array.js";

export interface CliRun {
  status: number;
  stdout: string;
  stderr: string;
}

/** Runs the cubetop CLI directly; the independent side of parity checks. */
export function cli(args: string[]): CliRun {
  const proc = spawnSync(process.env.CUBETOP_BIN || "cubetop", args, {
    encoding: "utf8",
    maxBuffer: 1 << 28,
  });
  if (proc.error) throw proc.error;
  return { status: proc.status ?? -1, stdout: proc.stdout, stderr: proc.stderr };
}

export function expectOk(run: CliRun): CliRun {
  if (run.status !== 0) {
    throw new Error(`cli exited ${run.status}: ${run.stderr}`);
  }
  return run;
}

/** mkdtemp wrapper mirroring withTempDir but local to the tests. */
export function inTempDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "cubetop-test-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

// mulberry32: tiny seeded PRNG, plenty for fixture data
export function rng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Deterministic random volume in [0, 1). */
export function makeVolume(dims: Dims3, seed: number): BoundArray {
  const next = rng(seed);
  const n = dims[0] * dims[1] * dims[2];
  const data = new Float32Array(n);
  for (let i = 0; i < n; i++) data[i] = next();
  return boundArray(dims, data);
}

/** Volume quantized to a few levels so ties and plateaus show up. */
export function makeTiedVolume(dims: Dims3, seed: number, levels = 4): BoundArray {
  const next = rng(seed);
  const n = dims[0] * dims[1] * dims[2];
  const data = new Float32Array(n);
  for (let i = 0; i < n; i++) data[i] = Math.floor(next() * levels) / levels;
  return boundArray(dims, data);
}

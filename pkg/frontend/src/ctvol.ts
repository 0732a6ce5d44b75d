/**
 * Readers and writers for the core's on-disk formats.
 *
 * ctvol is a one-line JSON header followed by a raw little-endian f32
 * payload in x-fastest order. Masks and key points are plain JSON files.
 */

import { Buffer } from "node:buffer";
import { readFileSync, writeFileSync } from "node:fs";
import { endianness } from "node:os";

import type { BoundArray, Dims3 } from "./array.js";
import { boundArray } from "./array.js";

const CTVOL_MAGIC = "ctvol";
const CTVOL_VERSION = 1;

// payloads are f32le; node does not ship on big-endian platforms in
// practice, but fail loudly rather than write byte-swapped garbage
function assertLittleEndian(): void {
  if (endianness() !== "LE") {
    throw new Error("ctvol IO requires a little-endian platform");
  }
}

export class CtvolFormatError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "CtvolFormatError";
  }
}

export function encodeCtvol(v: BoundArray): Buffer {
  assertLittleEndian();
  const header = JSON.stringify({
    magic: CTVOL_MAGIC,
    version: CTVOL_VERSION,
    dims: [v.dims[0], v.dims[1], v.dims[2]],
    dtype: "f32le",
    order: "x-fastest",
  });
  const payload = Buffer.from(v.data.buffer, v.data.byteOffset, v.data.byteLength);
  return Buffer.concat([Buffer.from(header + "\n", "utf8"), payload]);
}

export function decodeCtvol(raw: Buffer, label = "ctvol"): BoundArray {
  assertLittleEndian();
  const nl = raw.indexOf(0x0a);
  if (nl < 0) {
    throw new CtvolFormatError(`${label}: missing header line`);
  }
  let header: unknown;
  try {
    header = JSON.parse(raw.subarray(0, nl).toString("utf8"));
  } catch (e) {
    throw new CtvolFormatError(`${label}: bad header: ${(e as Error).message}`);
  }
  const h = header as Record<string, unknown>;
  if (typeof h !== "object" || h === null || h.magic !== CTVOL_MAGIC) {
    throw new CtvolFormatError(`${label}: not a ctvol file`);
  }
  if (h.version !== CTVOL_VERSION) {
    throw new CtvolFormatError(`${label}: unsupported version ${JSON.stringify(h.version)}`);
  }
  if (h.dtype !== "f32le" || h.order !== "x-fastest") {
    throw new CtvolFormatError(`${label}: unsupported dtype/order`);
  }
  const dims = h.dims;
  if (
    !Array.isArray(dims) ||
    dims.length !== 3 ||
    dims.some((d) => !Number.isInteger(d) || d < 1)
  ) {
    throw new CtvolFormatError(`${label}: bad dims ${JSON.stringify(dims)}`);
  }
  const d: Dims3 = [dims[0], dims[1], dims[2]];
  const n = d[0] * d[1] * d[2];
  const payload = raw.subarray(nl + 1);
  if (payload.byteLength !== 4 * n) {
    throw new CtvolFormatError(`${label}: payload is ${payload.byteLength} bytes, expected ${4 * n}`);
  }
  // copy: the payload's byte offset inside raw is rarely 4-aligned
  const data = new Float32Array(n);
  new Uint8Array(data.buffer).set(payload);
  return boundArray(d, data);
}

export function writeCtvol(path: string, v: BoundArray): void {
  writeFileSync(path, encodeCtvol(v));
}

export function readCtvol(path: string): BoundArray {
  return decodeCtvol(readFileSync(path), path);
}

// ---------------------------------------------------------------------------
// patch masks

export interface PatchMask {
  patchSize: Dims3;
  dims: Dims3;
  /** One 0/1 flag per patch, x-fastest over the patch grid. */
  masked: number[];
  seed: number;
}

export function maskToJson(m: PatchMask): string {
  return JSON.stringify({
    patch_size: [m.patchSize[0], m.patchSize[1], m.patchSize[2]],
    dims: [m.dims[0], m.dims[1], m.dims[2]],
    masked: m.masked.map((b) => (b ? 1 : 0)),
    seed: m.seed,
  });
}

export function parseMask(text: string, label = "mask"): PatchMask {
  let obj: any;
  try {
    obj = JSON.parse(text);
  } catch (e) {
    throw new CtvolFormatError(`${label}: bad mask file: ${(e as Error).message}`);
  }
  const ps = obj?.patch_size;
  const dims = obj?.dims;
  const masked = obj?.masked;
  if (!Array.isArray(ps) || !Array.isArray(dims) || !Array.isArray(masked)) {
    throw new CtvolFormatError(`${label}: bad mask file`);
  }
  return {
    patchSize: [ps[0], ps[1], ps[2]],
    dims: [dims[0], dims[1], dims[2]],
    masked: masked.map((b: unknown) => (b ? 1 : 0)),
    seed: Number(obj.seed),
  };
}

export function writeMask(path: string, m: PatchMask): void {
  writeFileSync(path, maskToJson(m) + "\n");
}

export function readMask(path: string): PatchMask {
  return parseMask(readFileSync(path, "utf8"), path);
}

// ---------------------------------------------------------------------------
// key points

export type KeyPoint = readonly [number, number, number];

/** Eight crop corners plus the center, in [-1, 1] coordinates. */
export interface KeyPointSet {
  points: KeyPoint[];
}

export function keypointsToJson(k: KeyPointSet): string {
  return JSON.stringify({ points: k.points.map((p) => [p[0], p[1], p[2]]) });
}

export function parseKeypoints(text: string, label = "keypoints"): KeyPointSet {
  let obj: any;
  try {
    obj = JSON.parse(text);
  } catch (e) {
    throw new CtvolFormatError(`${label}: bad key-point file: ${(e as Error).message}`);
  }
  const pts = obj?.points;
  if (!Array.isArray(pts) || pts.some((p: unknown) => !Array.isArray(p) || p.length !== 3)) {
    throw new CtvolFormatError(`${label}: bad key-point file`);
  }
  return { points: pts.map((p: number[]) => [p[0]!, p[1]!, p[2]!] as const) };
}

export function writeKeypoints(path: string, k: KeyPointSet): void {
  writeFileSync(path, keypointsToJson(k) + "\n");
}

export function readKeypoints(path: string): KeyPointSet {
  return parseKeypoints(readFileSync(path, "utf8"), path);
}

/**
 * Bindings to the cubetop core.
 *
 * Every call here shells out to the installed `cubetop` executable and talks
 * to it through its public file formats; nothing reimplements the math, so
 * results are the core's results, bit for bit. Inputs land in a private temp
 * directory, one subprocess runs, outputs are read back, and the directory
 * is removed.
 *
 * The training loop owns autograd integration: boundTopoLoss hands back the
 * loss value and its gradient volume, and injecting that gradient into a
 * custom backward pass is the caller's business.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import type { BoundArray, Dims3 } from "./array.js";
import type { KeyPointSet, PatchMask } from "./ctvol.js";
import {
  keypointsToJson,
  maskToJson,
  parseKeypoints,
  parseMask,
  readCtvol,
  writeCtvol,
} from "./ctvol.js";
import { invokeCore, withTempDir } from "./core.js";

export { boundArray, xFastestStrides } from "./array.js";
export type { BoundArray, Dims3, Strides3 } from "./array.js";
export {
  CtvolFormatError,
  decodeCtvol,
  encodeCtvol,
  keypointsToJson,
  maskToJson,
  parseKeypoints,
  parseMask,
  readCtvol,
  readKeypoints,
  readMask,
  writeCtvol,
  writeKeypoints,
  writeMask,
} from "./ctvol.js";
export type { KeyPoint, KeyPointSet, PatchMask } from "./ctvol.js";
export { VERSION, coreBinary, coreVersion, invokeCore, withTempDir } from "./core.js";
export {
  CoreContractError,
  CoreError,
  CoreInputError,
  CoreNotFoundError,
  CoreUsageError,
} from "./errors.js";

const fmtTriple = (t: Dims3) => `${t[0]},${t[1]},${t[2]}`;

// ---------------------------------------------------------------------------
// persistence diagrams

export interface DiagramPoint {
  dim: number;
  birth: number;
  death: number;
  essential: boolean;
  birthVertex: Dims3 | null;
  deathVertex: Dims3 | null;
}

export interface Diagrams {
  dims: number[];
  points: DiagramPoint[];
  /** Exact diagram JSON as the core wrote it; reuse verbatim downstream. */
  text: string;
}

function parseDiagrams(text: string): Diagrams {
  const obj = JSON.parse(text);
  const toVertex = (v: number[] | null): Dims3 | null =>
    v === null ? null : [v[0]!, v[1]!, v[2]!];
  return {
    dims: obj.dims,
    points: obj.points.map((p: any) => ({
      dim: p.dim,
      birth: p.birth,
      death: p.death,
      essential: p.essential,
      birthVertex: toVertex(p.birth_vertex),
      deathVertex: toVertex(p.death_vertex),
    })),
    text,
  };
}

/**
 * Persistence diagrams of a volume across dims 0/1/2.
 *
 * Matches `cubetop ph` output exactly; the returned text is the diagram
 * file's bytes.
 */
export function boundComputePersistence(volume: BoundArray): Diagrams {
  return withTempDir((dir) => {
    const vol = join(dir, "volume.ctvol");
    const out = join(dir, "diagram.json");
    writeCtvol(vol, volume);
    invokeCore(["ph", vol, "-o", out]);
    return parseDiagrams(readFileSync(out, "utf8"));
  });
}

// ---------------------------------------------------------------------------
// Wasserstein distance

export type MatchIndex = number | "diag";

export interface W2PerDim {
  dim: number;
  w2: number;
  /** Index pairs into the two diagrams; "diag" marks a diagonal match. */
  matching: [MatchIndex, MatchIndex][];
}

export interface W2Result {
  perDim: W2PerDim[];
  /** Envelope JSON exactly as the core printed it. */
  text: string;
}

/** 2-Wasserstein distance per dim between two diagram sets. */
export function boundW2(first: Diagrams, second: Diagrams): W2Result {
  return withTempDir((dir) => {
    const a = join(dir, "first.json");
    const b = join(dir, "second.json");
    writeFileSync(a, first.text);
    writeFileSync(b, second.text);
    const { stdout } = invokeCore(["dist", a, b]);
    const obj = JSON.parse(stdout);
    return {
      perDim: obj.per_dim.map((d: any) => ({ dim: d.dim, w2: d.w2, matching: d.matching })),
      text: stdout,
    };
  });
}

// ---------------------------------------------------------------------------
// topological loss

export interface TopoLossResult {
  value: number;
  perDim: number[];
  /** d(loss)/d(recon voxel), same dims as the inputs. */
  gradient: BoundArray;
  /** Envelope JSON exactly as the core printed it. */
  text: string;
}

/**
 * Topological loss between a target and a reconstruction, with gradient.
 *
 * Dim mismatches surface as CoreContractError carrying the core's message.
 */
export function boundTopoLoss(target: BoundArray, recon: BoundArray): TopoLossResult {
  return withTempDir((dir) => {
    const t = join(dir, "target.ctvol");
    const r = join(dir, "recon.ctvol");
    const g = join(dir, "grad.ctvol");
    writeCtvol(t, target);
    writeCtvol(r, recon);
    const { stdout } = invokeCore(["topoloss", t, r, "--grad", g]);
    const obj = JSON.parse(stdout);
    return { value: obj.value, perDim: obj.per_dim, gradient: readCtvol(g), text: stdout };
  });
}

// ---------------------------------------------------------------------------
// pre-training objective

export interface PretrainInputs {
  target: BoundArray;
  reconA: BoundArray;
  reconB: BoundArray;
  mask: PatchMask;
  kpGt: KeyPointSet;
  kpA: KeyPointSet;
  kpB: KeyPointSet;
  weights?: { l1: number; l2: number; l3: number };
  /** Average reconstruction error over all voxels instead of masked only. */
  fullMse?: boolean;
}

export interface PretrainBreakdown {
  mseVit: number;
  topoVit: number;
  spaVit: number;
  mseUnetrpp: number;
  topoUnetrpp: number;
  spaUnetrpp: number;
  spaConsis: number;
  recConsis: number;
  total: number;
  /** Envelope JSON exactly as the core printed it. */
  text: string;
}

/** The composite self pre-training objective over two reconstruction branches. */
export function boundPretrainLoss(inputs: PretrainInputs): PretrainBreakdown {
  return withTempDir((dir) => {
    const paths = {
      target: join(dir, "target.ctvol"),
      reconA: join(dir, "recon_a.ctvol"),
      reconB: join(dir, "recon_b.ctvol"),
      mask: join(dir, "mask.json"),
      kpGt: join(dir, "kp_gt.json"),
      kpA: join(dir, "kp_a.json"),
      kpB: join(dir, "kp_b.json"),
    };
    writeCtvol(paths.target, inputs.target);
    writeCtvol(paths.reconA, inputs.reconA);
    writeCtvol(paths.reconB, inputs.reconB);
    writeFileSync(paths.mask, maskToJson(inputs.mask) + "\n");
    writeFileSync(paths.kpGt, keypointsToJson(inputs.kpGt) + "\n");
    writeFileSync(paths.kpA, keypointsToJson(inputs.kpA) + "\n");
    writeFileSync(paths.kpB, keypointsToJson(inputs.kpB) + "\n");
    const args = [
      "pretrain-loss",
      "--target", paths.target,
      "--recon-a", paths.reconA,
      "--recon-b", paths.reconB,
      "--mask", paths.mask,
      "--kp-gt", paths.kpGt,
      "--kp-a", paths.kpA,
      "--kp-b", paths.kpB,
    ];
    if (inputs.weights) {
      args.push("--l1", String(inputs.weights.l1));
      args.push("--l2", String(inputs.weights.l2));
      args.push("--l3", String(inputs.weights.l3));
    }
    if (inputs.fullMse) {
      args.push("--full-mse");
    }
    const { stdout } = invokeCore(args);
    const obj = JSON.parse(stdout);
    return {
      mseVit: obj.mse_vit,
      topoVit: obj.topo_vit,
      spaVit: obj.spa_vit,
      mseUnetrpp: obj.mse_unetrpp,
      topoUnetrpp: obj.topo_unetrpp,
      spaUnetrpp: obj.spa_unetrpp,
      spaConsis: obj.spa_consis,
      recConsis: obj.rec_consis,
      total: obj.total,
      text: stdout,
    };
  });
}

// ---------------------------------------------------------------------------
// input builders (seeded mask, crop key points) delegated to the core

/** Seeded random patch mask from the core's RNG, so runs are reproducible. */
export function boundMakeMask(dims: Dims3, patch: Dims3, ratio: number, seed = 0): PatchMask {
  return withTempDir((dir) => {
    const out = join(dir, "mask.json");
    invokeCore([
      "mask",
      "--dims", fmtTriple(dims),
      "--patch", fmtTriple(patch),
      "--ratio", String(ratio),
      "--seed", String(seed),
      "-o", out,
    ]);
    return parseMask(readFileSync(out, "utf8"));
  });
}

/** Nine key points (corners plus center) of a crop inside a parent volume. */
export function boundCropKeypoints(origin: Dims3, size: Dims3, parent: Dims3): KeyPointSet {
  return withTempDir((dir) => {
    const out = join(dir, "keypoints.json");
    invokeCore([
      "keypoints",
      "--origin", fmtTriple(origin),
      "--size", fmtTriple(size),
      "--parent", fmtTriple(parent),
      "-o", out,
    ]);
    return parseKeypoints(readFileSync(out, "utf8"));
  });
}

/**
 * Arrays crossing the boundary to the core.
 *
 * The core is x-fastest everywhere: voxel (x, y, z) of a volume with dims
 * [nx, ny, nz] sits at linear index x + nx*(y + ny*z). A BoundArray is a
 * Float32Array in exactly that layout plus the dims giving it shape.
 */

export type Dims3 = readonly [number, number, number];

/** Per-axis element strides (x, y, z) describing a caller's layout. */
export type Strides3 = readonly [number, number, number];

export interface BoundArray {
  readonly dims: Dims3;
  /** Voxel values, x-fastest contiguous. */
  readonly data: Float32Array;
  /** True when construction had to repack the caller's layout. */
  readonly copied: boolean;
}

/** The contiguous strides the core expects: [1, nx, nx*ny]. */
export function xFastestStrides(dims: Dims3): Strides3 {
  return [1, dims[0], dims[0] * dims[1]];
}

function checkDims(dims: Dims3): void {
  if (dims.length !== 3 || dims.some((d) => !Number.isInteger(d) || d < 1)) {
    throw new RangeError(`dims must be three positive integers, got [${dims}]`);
  }
}

/**
 * Wraps caller data as a BoundArray.
 *
 * When strides are omitted or equal the x-fastest contiguous ones, the input
 * view is used as-is and nothing is copied. Any other layout is repacked
 * once into a fresh buffer and the result carries copied = true, so callers
 * can spot the extra traffic and fix their layout if it matters.
 */
export function boundArray(dims: Dims3, data: Float32Array, strides?: Strides3): BoundArray {
  checkDims(dims);
  const n = dims[0] * dims[1] * dims[2];
  const contiguous = xFastestStrides(dims);
  const s = strides ?? contiguous;
  if (s.length !== 3 || s.some((v) => !Number.isInteger(v))) {
    throw new RangeError(`strides must be three integers, got [${s}]`);
  }
  if (s[0] === contiguous[0] && s[1] === contiguous[1] && s[2] === contiguous[2]) {
    if (data.length !== n) {
      throw new RangeError(`data has ${data.length} elements, dims [${dims}] need ${n}`);
    }
    return { dims: [dims[0], dims[1], dims[2]], data, copied: false };
  }
  // strided source: verify every address stays inside the view, then repack
  let lo = 0;
  let hi = 0;
  for (let a = 0; a < 3; a++) {
    const reach = (dims[a]! - 1) * s[a]!;
    if (reach < 0) lo += reach;
    else hi += reach;
  }
  if (lo < 0 || hi >= data.length) {
    throw new RangeError(`strides [${s}] address [${lo}, ${hi}] outside data of length ${data.length}`);
  }
  const packed = new Float32Array(n);
  let i = 0;
  for (let z = 0; z < dims[2]; z++) {
    for (let y = 0; y < dims[1]; y++) {
      const base = y * s[1]! + z * s[2]!;
      for (let x = 0; x < dims[0]; x++) {
        packed[i++] = data[base + x * s[0]!]!;
      }
    }
  }
  return { dims: [dims[0], dims[1], dims[2]], data: packed, copied: true };
}

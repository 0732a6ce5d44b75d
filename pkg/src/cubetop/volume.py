"""3D volumes, intensity preprocessing, patch masking, and crop key points.

A volume is a dense scalar field over an (nx, ny, nz) voxel grid. Linear
storage is x-fastest: voxel (x, y, z) lives at index x + nx*(y + ny*z).
All operations here are pure; they return new objects and never mutate
their inputs, so values are freely shareable across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._jsonfmt import dumps, loads
from .errors import FormatError, InvalidRangeError, ShapeError

CTVOL_MAGIC = "ctvol"
CTVOL_VERSION = 1


def _as_dims(dims) -> tuple[int, int, int]:
    t = tuple(int(d) for d in dims)
    if len(t) != 3 or any(d < 1 for d in t):
        raise ShapeError(f"dims must be 3 positive integers, got {dims!r}")
    return t


@dataclass(frozen=True, eq=False)
class Volume3D:
    """Dense 3D scalar field.

    Attributes:
        dims: (nx, ny, nz), all >= 1.
        data: float64 array of length nx*ny*nz in x-fastest linear order.
        value_range: optional (lo, hi) metadata recorded by normalization.
    """

    dims: tuple[int, int, int]
    data: np.ndarray
    value_range: tuple[float, float] | None = None

    def __post_init__(self):
        dims = _as_dims(self.dims)
        data = np.ascontiguousarray(np.asarray(self.data, dtype=np.float64).reshape(-1))
        if data.size != dims[0] * dims[1] * dims[2]:
            raise ShapeError(
                f"data length {data.size} does not match dims {dims} "
                f"(expected {dims[0] * dims[1] * dims[2]})"
            )
        if not np.all(np.isfinite(data)):
            raise ShapeError("volume data must be finite (no NaN/Inf)")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "data", data)
        if self.value_range is not None:
            vr = (float(self.value_range[0]), float(self.value_range[1]))
            object.__setattr__(self, "value_range", vr)

    @classmethod
    def from_grid(cls, grid, value_range=None) -> "Volume3D":
        """Builds a volume from a 3-axis array indexed [x, y, z]."""
        g = np.asarray(grid, dtype=np.float64)
        if g.ndim != 3:
            raise ShapeError(f"grid must have 3 axes, got {g.ndim}")
        return cls(g.shape, g.ravel(order="F"), value_range)

    @property
    def grid(self) -> np.ndarray:
        """The data viewed as an (nx, ny, nz) array indexed [x, y, z]."""
        return self.data.reshape(self.dims, order="F")

    @property
    def num_voxels(self) -> int:
        return self.data.size

    def value_at(self, x: int, y: int, z: int) -> float:
        nx, ny, _ = self.dims
        return float(self.data[x + nx * (y + ny * z)])

    def voxel_coords(self, linear_id: int) -> tuple[int, int, int]:
        nx, ny, _ = self.dims
        return (linear_id % nx, (linear_id // nx) % ny, linear_id // (nx * ny))


@dataclass(frozen=True, eq=False)
class PatchMask:
    """Boolean flag per patch of a regular 3D patch grid.

    Flags are stored in x-fastest patch-grid order, mirroring the voxel
    order of the parent volume.
    """

    patch_size: tuple[int, int, int]
    dims: tuple[int, int, int]
    masked: np.ndarray
    seed: int = 0

    def __post_init__(self):
        ps = _as_dims(self.patch_size)
        dims = _as_dims(self.dims)
        if any(d % p != 0 for d, p in zip(dims, ps)):
            raise ShapeError(f"patch size {ps} does not divide dims {dims}")
        flags = np.asarray(self.masked, dtype=bool).reshape(-1)
        want = (dims[0] // ps[0]) * (dims[1] // ps[1]) * (dims[2] // ps[2])
        if flags.size != want:
            raise ShapeError(f"expected {want} patch flags, got {flags.size}")
        object.__setattr__(self, "patch_size", ps)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "masked", flags)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def grid_dims(self) -> tuple[int, int, int]:
        return tuple(d // p for d, p in zip(self.dims, self.patch_size))

    @property
    def num_patches(self) -> int:
        return self.masked.size

    @property
    def num_masked(self) -> int:
        return int(self.masked.sum())

    def voxel_mask(self) -> np.ndarray:
        """Expands patch flags to a boolean (nx, ny, nz) voxel grid."""
        gx, gy, gz = self.grid_dims
        px, py, pz = self.patch_size
        m = self.masked.reshape((gx, gy, gz), order="F")
        m = np.repeat(np.repeat(np.repeat(m, px, axis=0), py, axis=1), pz, axis=2)
        return m


@dataclass(frozen=True)
class CropBox:
    """Axis-aligned crop inside a parent volume."""

    origin: tuple[int, int, int]
    size: tuple[int, int, int]
    parent_dims: tuple[int, int, int]

    def __post_init__(self):
        origin = tuple(int(v) for v in self.origin)
        size = _as_dims(self.size)
        parent = _as_dims(self.parent_dims)
        if len(origin) != 3 or any(o < 0 for o in origin):
            raise ShapeError(f"origin must be 3 non-negative integers, got {self.origin!r}")
        if any(o + s > d for o, s, d in zip(origin, size, parent)):
            raise ShapeError(
                f"crop origin {origin} + size {size} exceeds parent dims {parent}"
            )
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "size", size)
        object.__setattr__(self, "parent_dims", parent)


@dataclass(frozen=True)
class KeyPointSet:
    """Nine (x, y, z) key points in normalized [-1, 1] coordinates.

    Points 1..8 are crop corners and point 9 is the crop center. Sets built
    by crop_keypoints always have point 9 equal to the mean of points 1..8;
    sets loaded from predictions are only required to stay inside [-1, 1].
    """

    points: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        pts = tuple(
            (float(p[0]), float(p[1]), float(p[2])) for p in self.points
        )
        if len(pts) != 9:
            raise ShapeError(f"a key-point set has exactly 9 points, got {len(pts)}")
        for p in pts:
            for c in p:
                if not (-1.0 <= c <= 1.0) or not math.isfinite(c):
                    raise ShapeError(f"key-point coordinate {c} outside [-1, 1]")
        object.__setattr__(self, "points", pts)

    def as_array(self) -> np.ndarray:
        return np.array(self.points, dtype=np.float64)

    @property
    def center(self) -> tuple[float, float, float]:
        return self.points[8]

    def center_deviation(self) -> float:
        """Max-norm gap between point 9 and the mean of points 1..8."""
        a = self.as_array()
        return float(np.max(np.abs(a[8] - a[:8].mean(axis=0))))


# ---------------------------------------------------------------------------
# operations


def clip_normalize(v: Volume3D, lo: float, hi: float) -> Volume3D:
    """Clamps values to [lo, hi] and rescales them affinely onto [0, 1].

    Args:
        v: input volume.
        lo: lower clip bound; values below map to 0.
        hi: upper clip bound; values above map to 1.

    Returns:
        New volume with value_range set to (0, 1).

    Raises:
        InvalidRangeError: if lo >= hi.
    """
    lo = float(lo)
    hi = float(hi)
    if lo >= hi:
        raise InvalidRangeError(f"need lo < hi, got lo={lo} hi={hi}")
    out = (np.clip(v.data, lo, hi) - lo) / (hi - lo)
    return Volume3D(v.dims, out, value_range=(0.0, 1.0))


def make_mask(dims, patch_size, ratio: float, seed: int) -> PatchMask:
    """Flags a seeded-random fraction of patches as masked.

    Exactly round(ratio * num_patches) patches are masked (half rounds up),
    chosen by a uniform shuffle from numpy's seeded default generator, so the
    result is deterministic in (dims, patch_size, ratio, seed).
    """
    dims = _as_dims(dims)
    ps = _as_dims(patch_size)
    if any(d % p != 0 for d, p in zip(dims, ps)):
        raise ShapeError(f"patch size {ps} does not divide dims {dims}")
    ratio = float(ratio)
    if not (0.0 <= ratio <= 1.0):
        raise InvalidRangeError(f"mask ratio must be in [0, 1], got {ratio}")
    num = (dims[0] // ps[0]) * (dims[1] // ps[1]) * (dims[2] // ps[2])
    k = int(math.floor(ratio * num + 0.5))
    k = min(k, num)
    perm = np.random.default_rng(int(seed)).permutation(num)
    flags = np.zeros(num, dtype=bool)
    flags[perm[:k]] = True
    return PatchMask(ps, dims, flags, int(seed))


def apply_mask(v: Volume3D, m: PatchMask, fill: float = 0.0) -> Volume3D:
    """Replaces every voxel inside a masked patch with the fill value."""
    if m.dims != v.dims:
        raise ShapeError(f"mask dims {m.dims} do not match volume dims {v.dims}")
    vox = m.voxel_mask()
    out = np.where(vox, float(fill), v.grid)
    return Volume3D.from_grid(out, v.value_range)


def _norm_coord(c: float, extent: int) -> float:
    # extent-1 voxel gaps span [-1, 1]; a single-voxel axis sits at 0
    if extent <= 1:
        return 0.0
    return 2.0 * c / (extent - 1) - 1.0


def crop_keypoints(c: CropBox) -> KeyPointSet:
    """Computes the 9 normalized key points of a crop.

    Corners are the 8 combinations of {x0, x0+sx-1} x {y0, y0+sy-1} x
    {z0, z0+sz-1}, enumerated x-fastest (corner i takes the high x iff bit 0
    of i is set, high y iff bit 1, high z iff bit 2). Raw coordinate c on an
    axis of parent extent D maps to 2*c/(D-1) - 1, so the first and last
    voxel planes land exactly on -1 and +1. Point 9 is the mean of the
    corners, which is the crop center under this affine map.
    """
    los = c.origin
    his = tuple(o + s - 1 for o, s in zip(c.origin, c.size))
    pts = []
    for i in range(8):
        raw = tuple(his[a] if (i >> a) & 1 else los[a] for a in range(3))
        pts.append(tuple(_norm_coord(raw[a], c.parent_dims[a]) for a in range(3)))
    corners = np.array(pts, dtype=np.float64)
    center = tuple(float(x) for x in corners.mean(axis=0))
    pts.append(center)
    return KeyPointSet(tuple(pts))


# ---------------------------------------------------------------------------
# file formats


def write_ctvol(path, v: Volume3D) -> None:
    """Writes the one-line JSON header + little-endian f32 payload format."""
    header = dumps(
        {
            "magic": CTVOL_MAGIC,
            "version": CTVOL_VERSION,
            "dims": list(v.dims),
            "dtype": "f32le",
            "order": "x-fastest",
        }
    )
    with open(path, "wb") as f:
        f.write(header.encode("utf-8"))
        f.write(b"\n")
        f.write(v.data.astype("<f4").tobytes())


def read_ctvol(path) -> Volume3D:
    """Reads a volume file, validating header fields and payload size."""
    with open(path, "rb") as f:
        raw = f.read()
    nl = raw.find(b"\n")
    if nl < 0:
        raise FormatError(f"{path}: missing header line")
    try:
        header = loads(raw[:nl].decode("utf-8"))
    except (UnicodeDecodeError, ValueError) as e:
        raise FormatError(f"{path}: bad header: {e}") from e
    if not isinstance(header, dict) or header.get("magic") != CTVOL_MAGIC:
        raise FormatError(f"{path}: not a ctvol file")
    if header.get("version") != CTVOL_VERSION:
        raise FormatError(f"{path}: unsupported version {header.get('version')!r}")
    if header.get("dtype") != "f32le" or header.get("order") != "x-fastest":
        raise FormatError(f"{path}: unsupported dtype/order")
    try:
        dims = _as_dims(header["dims"])
    except (KeyError, TypeError, ShapeError) as e:
        raise FormatError(f"{path}: bad dims: {e}") from e
    n = dims[0] * dims[1] * dims[2]
    payload = raw[nl + 1 :]
    if len(payload) != 4 * n:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, expected {4 * n}"
        )
    data = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    if not np.all(np.isfinite(data)):
        raise FormatError(f"{path}: payload contains non-finite values")
    return Volume3D(dims, data)


def mask_to_json(m: PatchMask) -> str:
    return dumps(
        {
            "patch_size": list(m.patch_size),
            "dims": list(m.dims),
            "masked": [int(b) for b in m.masked],
            "seed": m.seed,
        }
    )


def write_mask(path, m: PatchMask) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(mask_to_json(m))
        f.write("\n")


def read_mask(path) -> PatchMask:
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        obj = loads(text)
        return PatchMask(
            tuple(obj["patch_size"]),
            tuple(obj["dims"]),
            np.array(obj["masked"], dtype=bool),
            int(obj["seed"]),
        )
    except ShapeError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"{path}: bad mask file: {e}") from e


def keypoints_to_json(k: KeyPointSet) -> str:
    return dumps({"points": [list(p) for p in k.points]})


def write_keypoints(path, k: KeyPointSet) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(keypoints_to_json(k))
        f.write("\n")


def read_keypoints(path) -> KeyPointSet:
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        obj = loads(text)
        pts = tuple(tuple(float(c) for c in p) for p in obj["points"])
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"{path}: bad key-point file: {e}") from e
    return KeyPointSet(pts)

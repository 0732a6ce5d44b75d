"""Cubical complexes, super-level-set filtrations, and persistent homology.

The complex takes each voxel as a vertex; edges, squares, and cubes connect
axis neighbors. Cells live on a doubled grid of shape (2nx-1, 2ny-1, 2nz-1):
a cell's coordinate is even on the axes it does not span and odd on the axes
it does, so a dim-k cell has exactly k odd coordinates and its faces sit one
step away along each odd axis. The cell id is the x-fastest linear index on
that doubled grid.

A cell's filtration value is the min of its vertices' voxel values. Cells are
ordered by (ascending negated value, ascending dim, ascending id), which is
the sub-level order of the negated volume; reported births and deaths carry
the original (un-negated) values, so birth >= death on every pair. Essential
classes never die inside the sweep and are assigned death = the global
minimum voxel value, keeping all coordinates finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._jsonfmt import dumps, loads
from ._reduction import reduce_fixed, union_find_pairs
from .errors import FormatError, ShapeError, SizeLimitError
from .volume import Volume3D

NAIVE_VOXEL_CAP = 512


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class Cell:
    """One cell of the complex.

    anchor is the lowest-corner voxel; extent lists the axes the cell spans
    (dim-many of them); id is the cell's x-fastest index on the doubled grid.
    """

    dim: int
    anchor: tuple[int, int, int]
    extent: tuple[int, ...]
    id: int


@dataclass(frozen=True)
class PersistencePair:
    """A (birth, death) feature with critical-voxel provenance.

    birth >= death under the descending sweep. The volume's value at
    birth_vertex/death_vertex reproduces birth/death exactly; vertices may
    be None only on hand-authored diagrams (e.g. loaded from JSON).
    """

    dim: int
    birth: float
    death: float
    essential: bool = False
    birth_vertex: tuple[int, int, int] | None = None
    death_vertex: tuple[int, int, int] | None = None

    def __post_init__(self):
        if self.dim not in (0, 1, 2):
            raise ShapeError(f"pair dim must be 0, 1, or 2, got {self.dim}")
        object.__setattr__(self, "birth", float(self.birth))
        object.__setattr__(self, "death", float(self.death))
        if not (self.birth >= self.death):
            raise ShapeError(
                f"persistence pair needs birth >= death, got ({self.birth}, {self.death})"
            )
        for name in ("birth_vertex", "death_vertex"):
            vtx = getattr(self, name)
            if vtx is not None:
                object.__setattr__(self, name, tuple(int(c) for c in vtx))


def _pair_sort_key(p: PersistencePair):
    bv = p.birth_vertex if p.birth_vertex is not None else (-1, -1, -1)
    dv = p.death_vertex if p.death_vertex is not None else (-1, -1, -1)
    # vertex triples compare in (z, y, x) order to match linear voxel ids
    return (-p.birth, -p.death, bv[2], bv[1], bv[0], dv[2], dv[1], dv[0], p.essential)


@dataclass(frozen=True)
class PersistenceDiagram:
    """Multiset of persistence pairs of one homology dimension.

    Points are kept in canonical order (descending birth, descending death,
    then provenance) so equal diagrams compare and serialize identically.
    """

    dim: int
    points: tuple[PersistencePair, ...]

    def __post_init__(self):
        pts = tuple(self.points)
        for p in pts:
            if p.dim != self.dim:
                raise ShapeError(
                    f"diagram of dim {self.dim} contains a dim-{p.dim} point"
                )
        object.__setattr__(self, "points", tuple(sorted(pts, key=_pair_sort_key)))

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def births_deaths(self) -> np.ndarray:
        """(n, 2) array of birth/death coordinates."""
        if not self.points:
            return np.empty((0, 2), dtype=np.float64)
        return np.array([(p.birth, p.death) for p in self.points], dtype=np.float64)


@dataclass(eq=False)
class FiltrationOrder:
    """All cells of a volume's complex in filtration order.

    Arrays are indexed by cell id except `order`, which lists cell ids in
    filtration order, and `position`, its inverse.
    """

    volume_dims: tuple[int, int, int]
    doubled_shape: tuple[int, int, int]
    value: np.ndarray
    cell_dim: np.ndarray
    critical_vertex: np.ndarray
    order: np.ndarray
    position: np.ndarray

    def __len__(self) -> int:
        return self.value.size

    def _coords(self, cid: int) -> tuple[int, int, int]:
        dx, dy, _ = self.doubled_shape
        return (cid % dx, (cid // dx) % dy, cid // (dx * dy))

    def cell(self, cid: int) -> Cell:
        gx, gy, gz = self._coords(cid)
        extent = tuple(a for a, g in enumerate((gx, gy, gz)) if g % 2 == 1)
        return Cell(len(extent), (gx // 2, gy // 2, gz // 2), extent, int(cid))

    def faces(self, cid: int) -> tuple[int, ...]:
        """Ids of the (dim-1)-faces: one step along each spanned axis."""
        dx, dy, _ = self.doubled_shape
        strides = (1, dx, dx * dy)
        g = self._coords(cid)
        out = []
        for a in range(3):
            if g[a] % 2 == 1:
                out.append(cid - strides[a])
                out.append(cid + strides[a])
        return tuple(out)

    def cells(self):
        """Yields Cell records in filtration order. O(#cells) objects."""
        for cid in self.order:
            yield self.cell(int(cid))


# ---------------------------------------------------------------------------
# complex construction


def _lexmin(av, ai, bv, bi):
    take = (bv < av) | ((bv == av) & (bi < ai))
    return np.where(take, bv, av), np.where(take, bi, ai)


def _doubled_grids(v: Volume3D) -> tuple[np.ndarray, np.ndarray]:
    """Min-value and argmin-vertex fields over the doubled grid.

    Ties pick the smallest voxel id. Three cascading passes: x on even y/z
    rows, then y on all x at even z, then z everywhere; each pass combines
    two already-correct (value, id) fields, and lexicographic min is
    associative, so every cell ends up with the min over all its vertices.
    """
    grid = v.grid
    nx, ny, nz = v.dims
    shape = (2 * nx - 1, 2 * ny - 1, 2 * nz - 1)
    val = np.empty(shape, dtype=np.float64)
    idx = np.empty(shape, dtype=np.int64)
    vox_ids = np.arange(v.num_voxels, dtype=np.int64).reshape(v.dims, order="F")
    val[::2, ::2, ::2] = grid
    idx[::2, ::2, ::2] = vox_ids
    if shape[0] > 1:
        val[1::2, ::2, ::2], idx[1::2, ::2, ::2] = _lexmin(
            val[0:-2:2, ::2, ::2], idx[0:-2:2, ::2, ::2],
            val[2::2, ::2, ::2], idx[2::2, ::2, ::2],
        )
    if shape[1] > 1:
        val[:, 1::2, ::2], idx[:, 1::2, ::2] = _lexmin(
            val[:, 0:-2:2, ::2], idx[:, 0:-2:2, ::2],
            val[:, 2::2, ::2], idx[:, 2::2, ::2],
        )
    if shape[2] > 1:
        val[:, :, 1::2], idx[:, :, 1::2] = _lexmin(
            val[:, :, 0:-2:2], idx[:, :, 0:-2:2],
            val[:, :, 2::2], idx[:, :, 2::2],
        )
    return val, idx


def _cell_dims_flat(shape: tuple[int, int, int]) -> np.ndarray:
    dx, dy, dz = shape
    n = dx * dy * dz
    ids = np.arange(n, dtype=np.int64)
    gx = ids % dx
    gy = (ids // dx) % dy
    gz = ids // (dx * dy)
    return (gx % 2) + (gy % 2) + (gz % 2)


def build_filtration(v: Volume3D) -> FiltrationOrder:
    """Builds the full complex and its super-level filtration order.

    Total cell count is the product of (2n-1) over the axes. The order sorts
    by negated value ascending (the descending sweep), then dim, then id;
    every face of a cell has value >= the cell's and smaller dim, so faces
    always precede the cells they bound.
    """
    val3, idx3 = _doubled_grids(v)
    shape = val3.shape
    value = val3.ravel(order="F")
    critical = idx3.ravel(order="F")
    cell_dim = _cell_dims_flat(shape)
    n = value.size
    ids = np.arange(n, dtype=np.int64)
    order = np.lexsort((ids, cell_dim, -value)).astype(np.int64)
    position = np.empty(n, dtype=np.int64)
    position[order] = ids
    return FiltrationOrder(
        volume_dims=v.dims,
        doubled_shape=tuple(int(s) for s in shape),
        value=value,
        cell_dim=cell_dim,
        critical_vertex=critical,
        order=order,
        position=position,
    )


# ---------------------------------------------------------------------------
# persistence (fast path)


def _vertex_triple(voxel_id: int, dims: tuple[int, int, int]) -> tuple[int, int, int]:
    nx, ny, _ = dims
    return (int(voxel_id % nx), int((voxel_id // nx) % ny), int(voxel_id // (nx * ny)))


def _assemble_diagrams(
    v: Volume3D,
    filt: FiltrationOrder,
    finite_pairs: dict[int, list[tuple[int, int]]],
    essential_pos: dict[int, list[int]],
) -> tuple[PersistenceDiagram, PersistenceDiagram, PersistenceDiagram]:
    """Turns (position, position) pairs and essential positions into diagrams.

    Zero-persistence non-essential pairs are dropped; essential classes get
    death = global min with the first-occurring minimum voxel as provenance.
    """
    order = filt.order
    value = filt.value
    critical = filt.critical_vertex
    gmin_voxel = int(np.argmin(v.data))
    gmin = float(v.data[gmin_voxel])
    gmin_triple = _vertex_triple(gmin_voxel, v.dims)
    diagrams = []
    for dim in (0, 1, 2):
        pts = []
        for bpos, dpos in finite_pairs.get(dim, ()):
            bid = int(order[bpos])
            did = int(order[dpos])
            birth = float(value[bid])
            death = float(value[did])
            if birth == death:
                continue
            pts.append(
                PersistencePair(
                    dim,
                    birth,
                    death,
                    essential=False,
                    birth_vertex=_vertex_triple(int(critical[bid]), v.dims),
                    death_vertex=_vertex_triple(int(critical[did]), v.dims),
                )
            )
        for bpos in essential_pos.get(dim, ()):
            bid = int(order[bpos])
            pts.append(
                PersistencePair(
                    dim,
                    float(value[bid]),
                    gmin,
                    essential=True,
                    birth_vertex=_vertex_triple(int(critical[bid]), v.dims),
                    death_vertex=gmin_triple,
                )
            )
        diagrams.append(PersistenceDiagram(dim, tuple(pts)))
    return tuple(diagrams)


def compute_persistence(
    v: Volume3D,
) -> tuple[PersistenceDiagram, PersistenceDiagram, PersistenceDiagram]:
    """Persistent homology of the volume in dimensions 0, 1, and 2.

    Boundary reduction over GF(2) with the clearing optimization: cubes are
    reduced first, their pivot squares are skipped when squares are reduced,
    and dimension 0 uses elder-rule union-find over the edges, which yields
    the same pairing as reduction (pairings of a filtration are unique).
    """
    filt = build_filtration(v)
    dx, dy, dz = filt.doubled_shape
    strides = np.array([1, dx, dx * dy], dtype=np.int64)
    position = filt.position
    cell_dim = filt.cell_dim
    n = len(filt)
    ids = np.arange(n, dtype=np.int64)
    gx = ids % dx
    gy = (ids // dx) % dy
    oddx = (gx % 2).astype(bool)
    oddy = (gy % 2).astype(bool)

    def by_dim(p: int) -> np.ndarray:
        c = np.flatnonzero(cell_dim == p)
        return c[np.argsort(position[c], kind="stable")]

    finite_pairs: dict[int, list[tuple[int, int]]] = {0: [], 1: [], 2: []}
    essential_pos: dict[int, list[int]] = {0: [], 1: [], 2: []}

    # cubes: pairs are (square birth, cube death) in dim 2
    c3 = by_dim(3)
    cleared = np.zeros(n, dtype=bool)
    if c3.size:
        faces3 = np.empty((c3.size, 6), dtype=np.int64)
        for a in range(3):
            faces3[:, 2 * a] = position[c3 - strides[a]]
            faces3[:, 2 * a + 1] = position[c3 + strides[a]]
        faces3.sort(axis=1)
        rows, cols, creator3 = reduce_fixed(
            faces3, position[c3], np.zeros(c3.size, dtype=np.bool_), n
        )
        if creator3.any():
            # a zero cube column would mean a 3-cycle, impossible in a box:
            # the sweep-latest cube of any 3-chain has an unshared square face
            raise AssertionError("cube column reduced to zero; complex is corrupt")
        finite_pairs[2] = list(zip(rows.tolist(), cols.tolist()))
        cleared[rows] = True

    # squares: pairs are (edge birth, square death) in dim 1; columns cleared
    # by the cube pass are the already-paired dim-2 creators
    c2 = by_dim(2)
    edge_killed = np.zeros(n, dtype=bool)
    if c2.size:
        ox = oddx[c2]
        oy = oddy[c2]
        faces2 = np.empty((c2.size, 4), dtype=np.int64)
        m_xy = ox & oy
        m_xz = ox & ~oy
        m_yz = ~ox
        for mask, (a1, a2) in ((m_xy, (0, 1)), (m_xz, (0, 2)), (m_yz, (1, 2))):
            sel = c2[mask]
            faces2[mask, 0] = position[sel - strides[a1]]
            faces2[mask, 1] = position[sel + strides[a1]]
            faces2[mask, 2] = position[sel - strides[a2]]
            faces2[mask, 3] = position[sel + strides[a2]]
        faces2.sort(axis=1)
        col_pos2 = position[c2]
        rows, cols, creator2 = reduce_fixed(faces2, col_pos2, cleared[col_pos2], n)
        finite_pairs[1] = list(zip(rows.tolist(), cols.tolist()))
        edge_killed[rows] = True
        essential_pos[2] = sorted(int(p) for p in col_pos2[creator2])

    # vertices and edges: elder-rule union-find in filtration order
    c0 = by_dim(0)
    c1 = by_dim(1)
    vpos = position[c0]
    if c1.size:
        axis = np.where(oddx[c1], 0, np.where(oddy[c1], 1, 2))
        estride = strides[axis]
        vrank = np.full(n, -1, dtype=np.int64)
        vrank[c0] = np.arange(c0.size, dtype=np.int64)
        eu = vrank[c1 - estride]
        ev = vrank[c1 + estride]
        young, edge, creator1, elders = union_find_pairs(
            eu, ev, position[c1], c0.size
        )
        finite_pairs[0] = list(zip(vpos[young].tolist(), edge.tolist()))
        essential_pos[0] = [int(vpos[r]) for r in elders]
        cycle_edges = position[c1][creator1]
        essential_pos[1] = sorted(
            int(p) for p in cycle_edges if not edge_killed[p]
        )
    else:
        essential_pos[0] = [int(vpos[0])] if c0.size else []

    return _assemble_diagrams(v, filt, finite_pairs, essential_pos)


# ---------------------------------------------------------------------------
# persistence (oracle path)


def naive_persistence(
    v: Volume3D,
) -> tuple[PersistenceDiagram, PersistenceDiagram, PersistenceDiagram]:
    """Reference persistence: one global column reduction, no optimizations.

    Independent of the fast path on purpose: cell values and critical
    vertices come from direct per-cell vertex enumeration, the filtration
    order from a plain Python sort, and the reduction runs over the full
    boundary matrix with no clearing and no union-find. Capped at 512 voxels.
    """
    if v.num_voxels > NAIVE_VOXEL_CAP:
        raise SizeLimitError(
            f"naive_persistence is capped at {NAIVE_VOXEL_CAP} voxels, "
            f"got {v.num_voxels}"
        )
    nx, ny, nz = v.dims
    dx, dy, dz = 2 * nx - 1, 2 * ny - 1, 2 * nz - 1
    strides = (1, dx, dx * dy)
    ncells = dx * dy * dz
    data = v.data

    def vox_id(x, y, z):
        return x + nx * (y + ny * z)

    value = [0.0] * ncells
    cdim = [0] * ncells
    crit = [0] * ncells
    for cid in range(ncells):
        cx = cid % dx
        cy = (cid // dx) % dy
        cz = cid // (dx * dy)
        xs = (cx // 2,) if cx % 2 == 0 else ((cx - 1) // 2, (cx + 1) // 2)
        ys = (cy // 2,) if cy % 2 == 0 else ((cy - 1) // 2, (cy + 1) // 2)
        zs = (cz // 2,) if cz % 2 == 0 else ((cz - 1) // 2, (cz + 1) // 2)
        cdim[cid] = (len(xs) - 1) + (len(ys) - 1) + (len(zs) - 1)
        best_val = math.inf
        best_id = -1
        for z in zs:
            for y in ys:
                for x in xs:
                    vid = vox_id(x, y, z)
                    val = data[vid]
                    if val < best_val or (val == best_val and vid < best_id):
                        best_val = val
                        best_id = vid
        value[cid] = float(best_val)
        crit[cid] = best_id
    order = sorted(range(ncells), key=lambda c: (-value[c], cdim[c], c))
    position = [0] * ncells
    for p, cid in enumerate(order):
        position[cid] = p

    owner: dict[int, int] = {}
    columns: dict[int, list[int]] = {}
    pairs: list[tuple[int, int]] = []
    creators: list[int] = []
    for p, cid in enumerate(order):
        cx = cid % dx
        cy = (cid // dx) % dy
        cz = cid // (dx * dy)
        col = sorted(
            position[cid + s * step]
            for a, step in enumerate(strides)
            for s in (-1, 1)
            if (cx, cy, cz)[a] % 2 == 1
        )
        while col:
            low = col[-1]
            if low not in owner:
                break
            other = columns[owner[low]]
            # symmetric difference of sorted lists
            merged = []
            i = j = 0
            while i < len(col) and j < len(other):
                if col[i] < other[j]:
                    merged.append(col[i])
                    i += 1
                elif other[j] < col[i]:
                    merged.append(other[j])
                    j += 1
                else:
                    i += 1
                    j += 1
            merged.extend(col[i:])
            merged.extend(other[j:])
            col = merged
        if col:
            low = col[-1]
            owner[low] = p
            columns[p] = col
            pairs.append((low, p))
        else:
            creators.append(p)

    paired_rows = {r for r, _ in pairs}
    finite_pairs: dict[int, list[tuple[int, int]]] = {0: [], 1: [], 2: []}
    essential_pos: dict[int, list[int]] = {0: [], 1: [], 2: []}
    for row, colp in pairs:
        d = cdim[order[row]]
        if d <= 2:
            finite_pairs[d].append((row, colp))
    for p in creators:
        if p not in paired_rows:
            d = cdim[order[p]]
            if d <= 2:
                essential_pos[d].append(p)

    filt = FiltrationOrder(
        volume_dims=v.dims,
        doubled_shape=(dx, dy, dz),
        value=np.array(value, dtype=np.float64),
        cell_dim=np.array(cdim, dtype=np.int64),
        critical_vertex=np.array(crit, dtype=np.int64),
        order=np.array(order, dtype=np.int64),
        position=np.array(position, dtype=np.int64),
    )
    return _assemble_diagrams(v, filt, finite_pairs, essential_pos)


# ---------------------------------------------------------------------------
# derived quantities


def betti_at(v: Volume3D, tau: float, diagrams=None) -> tuple[int, int, int]:
    """Betti numbers of the super-level set at threshold tau.

    beta_k counts dim-k pairs with birth >= tau > death plus essential pairs
    with birth >= tau. Pass precomputed diagrams to avoid recomputation when
    sweeping thresholds.
    """
    if diagrams is None:
        diagrams = compute_persistence(v)
    tau = float(tau)
    out = []
    for d in diagrams:
        count = 0
        for p in d.points:
            if p.essential:
                if p.birth >= tau:
                    count += 1
            elif p.birth >= tau > p.death:
                count += 1
        out.append(count)
    return tuple(out)


def euler_characteristic_at(v: Volume3D, tau: float) -> int:
    """Alternating cell count of the complex at threshold tau.

    Sums (-1)^dim over cells with filtration value >= tau. Cell values are
    recomputed here with plain min cascades (no tie bookkeeping), so this is
    an independent cross-check against the diagram-derived Betti numbers:
    the complexes have no dim-3 homology, hence chi = b0 - b1 + b2.
    """
    grid = v.grid
    nx, ny, nz = v.dims
    shape = (2 * nx - 1, 2 * ny - 1, 2 * nz - 1)
    val = np.empty(shape, dtype=np.float64)
    val[::2, ::2, ::2] = grid
    if shape[0] > 1:
        val[1::2, ::2, ::2] = np.minimum(val[0:-2:2, ::2, ::2], val[2::2, ::2, ::2])
    if shape[1] > 1:
        val[:, 1::2, ::2] = np.minimum(val[:, 0:-2:2, ::2], val[:, 2::2, ::2])
    if shape[2] > 1:
        val[:, :, 1::2] = np.minimum(val[:, :, 0:-2:2], val[:, :, 2::2])
    alive = val.ravel(order="F") >= float(tau)
    dims_flat = _cell_dims_flat(shape)
    chi = 0
    for d in range(4):
        cnt = int(np.count_nonzero(alive & (dims_flat == d)))
        chi += cnt if d % 2 == 0 else -cnt
    return chi


# ---------------------------------------------------------------------------
# diagram file format


def diagrams_to_json(diagrams) -> str:
    """Serializes diagrams as {"dims":[0,1,2],"points":[...]}.

    Points are listed dim 0 first, each diagram already in (descending
    birth, descending death) canonical order.
    """
    pts = []
    for d in diagrams:
        for p in d.points:
            pts.append(
                {
                    "dim": p.dim,
                    "birth": p.birth,
                    "death": p.death,
                    "essential": p.essential,
                    "birth_vertex": list(p.birth_vertex) if p.birth_vertex else None,
                    "death_vertex": list(p.death_vertex) if p.death_vertex else None,
                }
            )
    return dumps({"dims": [d.dim for d in diagrams], "points": pts})


def write_diagrams(path, diagrams) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(diagrams_to_json(diagrams))
        f.write("\n")


def read_diagrams(path):
    """Reads a diagram file back into three PersistenceDiagram objects."""
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        obj = loads(text)
        by_dim: dict[int, list[PersistencePair]] = {0: [], 1: [], 2: []}
        for p in obj["points"]:
            dim = int(p["dim"])
            if dim not in by_dim:
                raise FormatError(f"{path}: unsupported point dim {dim}")
            bv = p.get("birth_vertex")
            dv = p.get("death_vertex")
            by_dim[dim].append(
                PersistencePair(
                    dim,
                    float(p["birth"]),
                    float(p["death"]),
                    essential=bool(p.get("essential", False)),
                    birth_vertex=tuple(bv) if bv is not None else None,
                    death_vertex=tuple(dv) if dv is not None else None,
                )
            )
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError, ShapeError) as e:
        raise FormatError(f"{path}: bad diagram file: {e}") from e
    return tuple(PersistenceDiagram(d, tuple(by_dim[d])) for d in (0, 1, 2))

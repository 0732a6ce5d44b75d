import numpy as np
import pytest

from cubetop import DIAGONAL, Volume3D, compute_persistence, topo_loss, w2_distance


def random_volume(rng, shape) -> Volume3D:
    return Volume3D.from_grid(rng.random(shape))


def distinct_volume(rng, shape) -> Volume3D:
    """Random volume guaranteed to have all-distinct voxel values."""
    while True:
        data = rng.random(int(np.prod(shape)))
        if np.unique(data).size == data.size:
            return Volume3D(tuple(shape), data)


def tied_volume(rng, shape, levels: int = 3) -> Volume3D:
    """Small-integer volume, full of ties, for tie-break stress."""
    return Volume3D.from_grid(rng.integers(0, levels, size=shape).astype(np.float64))


def separated_volume(rng, shape, gap: float = 0.1) -> Volume3D:
    """Distinct values with a guaranteed minimum pairwise gap.

    A shuffled arithmetic progression plus sub-gap jitter: every two voxel
    values differ by at least gap/2, so a +-1e-3 probe can never reorder
    values, while the jitter keeps coordinate differences generic (no exact
    cost ties for a probe to flip). Used by the finite-difference checks,
    which need probes to stay inside one smooth piece of the loss.
    """
    n = int(np.prod(shape))
    values = gap * (rng.permutation(n) + rng.uniform(0.0, 0.5, n))
    return Volume3D(shape, values)


def diagram_signature(diags):
    """Multiset view used for oracle comparisons: (dim, birth, death, essential)."""
    return [
        sorted((p.birth, p.death, p.essential) for p in d.points) for d in diags
    ]


def matching_signature(target: Volume3D, recon: Volume3D):
    """Identity of the optimal matching, including each pair's active route.

    Points are named by their critical vertices (stable under small value
    perturbations), and point-point entries record which coordinate attains
    the sup-norm max. Two probe volumes with equal signatures sit on the
    same smooth piece of the loss, where a finite difference is meaningful.
    """
    diags_a = compute_persistence(target)
    diags_b = compute_persistence(recon)
    sig = []
    for k in range(3):
        _, m = w2_distance(diags_a[k], diags_b[k])
        for i, j in m.pairs:
            if j == DIAGONAL:
                p = diags_a[k].points[i]
                sig.append((k, "a-diag", p.birth_vertex, p.death_vertex, p.essential))
            elif i == DIAGONAL:
                q = diags_b[k].points[j]
                sig.append((k, "b-diag", q.birth_vertex, q.death_vertex, q.essential))
            else:
                p = diags_a[k].points[i]
                q = diags_b[k].points[j]
                active = "b" if abs(q.birth - p.birth) >= abs(q.death - p.death) else "d"
                sig.append(
                    (
                        k,
                        "pair",
                        p.birth_vertex,
                        p.death_vertex,
                        p.essential,
                        q.birth_vertex,
                        q.death_vertex,
                        q.essential,
                        active,
                    )
                )
    return sorted(sig)


def fd_gradient_check(target: Volume3D, recon: Volume3D, voxel_ids, h: float = 1e-3):
    """Central finite differences against the analytic gradient.

    For each requested voxel, returns (analytic, numeric, qualified) where
    qualified means both probes and the base point share one matching
    signature, so the difference quotient measures a single smooth piece.
    """
    res = topo_loss(target, recon, want_gradient=True)
    base_sig = matching_signature(target, recon)
    out = []
    for vid in voxel_ids:
        analytic = float(res.gradient.data[vid])
        numeric = []
        sigs = []
        for sign in (1.0, -1.0):
            data = recon.data.copy()
            data[vid] += sign * h
            probe = Volume3D(recon.dims, data)
            numeric.append(topo_loss(target, probe).value)
            sigs.append(matching_signature(target, probe))
        fd = (numeric[0] - numeric[1]) / (2.0 * h)
        qualified = sigs[0] == sigs[1] == base_sig
        out.append((analytic, fd, qualified))
    return out


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # first call JIT-compiles the kernels; keep that out of timed tests
    v = Volume3D.from_grid(np.random.default_rng(0).random((3, 3, 3)))
    topo_loss(v, v)
    compute_persistence(v)

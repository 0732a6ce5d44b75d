"""Built-in verification suites for the `selfcheck` CLI command.

Smaller seeded versions of the checks the test suite runs: fast-vs-naive
persistence equivalence, frozen topology fixtures, the Euler cross-check,
Wasserstein-vs-brute-force agreement, and a finite-difference gradient
probe. Everything is deterministic.
"""

from __future__ import annotations

import numpy as np

from .diagram import DIAGONAL, brute_force_w2, w2_distance
from .filtration import (
    PersistenceDiagram,
    PersistencePair,
    betti_at,
    compute_persistence,
    euler_characteristic_at,
    naive_persistence,
)
from .loss import topo_loss
from .volume import Volume3D


def _signature(diags):
    return [
        sorted((p.birth, p.death, p.essential) for p in d.points) for d in diags
    ]


def check_fixtures() -> tuple[bool, str]:
    """Frozen expected diagrams for the hand-analyzable volumes."""
    line = Volume3D((1, 1, 3), [5.0, 1.0, 5.0])
    got = _signature(compute_persistence(line))
    want_line = [[(5.0, 1.0, False), (5.0, 1.0, True)], [], []]
    if got != want_line:
        return False, f"line fixture: {got}"

    const = Volume3D.from_grid(np.full((4, 5, 6), 3.0))
    got = _signature(compute_persistence(const))
    if got != [[(3.0, 3.0, True)], [], []]:
        return False, f"constant fixture: {got}"

    shell = np.ones((5, 5, 5))
    shell[1:4, 1:4, 1:4] = 0.0
    got = _signature(compute_persistence(Volume3D.from_grid(shell)))
    if got != [[(1.0, 0.0, True)], [], [(1.0, 0.0, False)]]:
        return False, f"shell fixture: {got}"

    ring = np.ones((3, 3, 1))
    ring[1, 1, 0] = 0.0
    got = _signature(compute_persistence(Volume3D.from_grid(ring)))
    if got != [[(1.0, 0.0, True)], [(1.0, 0.0, False)], []]:
        return False, f"ring fixture: {got}"
    return True, "4 fixtures"


def check_oracle_equivalence(trials: int = 30) -> tuple[bool, str]:
    """compute_persistence == naive_persistence on seeded random volumes."""
    rng = np.random.default_rng(20240915)
    for t in range(trials):
        if t % 3 == 2:
            # tied values stress the deterministic tie-breaking
            grid = rng.integers(0, 3, size=(3, 3, 3)).astype(np.float64)
        else:
            grid = rng.random((4, 4, 4))
        v = Volume3D.from_grid(grid)
        fast = compute_persistence(v)
        slow = naive_persistence(v)
        if fast != slow:
            return False, f"trial {t}: diagrams differ"
    return True, f"{trials} volumes"


def check_euler(trials: int = 10) -> tuple[bool, str]:
    """Alternating cell count equals b0 - b1 + b2 at every threshold."""
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(trials):
        v = Volume3D.from_grid(rng.random((5, 5, 5)))
        diags = compute_persistence(v)
        for tau in np.unique(v.data):
            b0, b1, b2 = betti_at(v, tau, diagrams=diags)
            chi = euler_characteristic_at(v, tau)
            if chi != b0 - b1 + b2:
                return False, f"tau={tau}: chi={chi} vs betti {b0}-{b1}+{b2}"
            checked += 1
    return True, f"{checked} thresholds"


def _random_diagram(rng, dim, npts) -> PersistenceDiagram:
    pts = []
    for _ in range(npts):
        death = float(rng.random())
        birth = death + float(rng.random())
        pts.append(PersistencePair(dim, birth, death))
    return PersistenceDiagram(dim, tuple(pts))


def check_w2(trials: int = 60) -> tuple[bool, str]:
    """w2_distance agrees with brute-force enumeration, worked values hold."""
    d_20 = PersistenceDiagram(0, (PersistencePair(0, 2.0, 0.0),))
    empty = PersistenceDiagram(0, ())
    if abs(w2_distance(d_20, empty)[0] - 1.0) > 1e-12:
        return False, "single point vs empty"
    d_40 = PersistenceDiagram(0, (PersistencePair(0, 4.0, 0.0),))
    d_31 = PersistenceDiagram(0, (PersistencePair(0, 3.0, 1.0),))
    if abs(w2_distance(d_40, d_31)[0] - 1.0) > 1e-12:
        return False, "offset pair"
    rng = np.random.default_rng(11)
    for t in range(trials):
        a = _random_diagram(rng, 0, int(rng.integers(0, 5)))
        b = _random_diagram(rng, 0, int(rng.integers(0, 5)))
        got = w2_distance(a, b)[0]
        want = brute_force_w2(a, b)
        if abs(got - want) > 1e-9:
            return False, f"trial {t}: {got} vs {want}"
    return True, f"{trials} random pairs"


def _grad_signature(result, diags_a, diags_b):
    """Matching + critical-vertex + active-coordinate identity of a solve."""
    sig = []
    for k in range(3):
        pa = diags_a[k].points
        pb = diags_b[k].points
        entries = []
        for i, j in result.matchings[k].pairs:
            if i == DIAGONAL:
                q = pb[j]
                entries.append((None, (q.birth_vertex, q.death_vertex, q.essential), "diagB"))
            elif j == DIAGONAL:
                p = pa[i]
                entries.append(((p.birth_vertex, p.death_vertex, p.essential), None, "diagA"))
            else:
                p, q = pa[i], pb[j]
                route = "b" if abs(q.birth - p.birth) >= abs(q.death - p.death) else "d"
                entries.append(
                    (
                        (p.birth_vertex, p.death_vertex, p.essential),
                        (q.birth_vertex, q.death_vertex, q.essential),
                        route,
                    )
                )
        sig.append(sorted(entries, key=repr))
    return sig


def check_gradient(trials: int = 3, probes: int = 4) -> tuple[bool, str]:
    """Central finite differences validate the analytic gradient.

    A probe qualifies when re-solving at both perturbed volumes reproduces
    the same matching, critical vertices, and active coordinates; flips make
    the loss locally non-quadratic and are excluded, as ties are.
    """
    rng = np.random.default_rng(5)
    h = 1e-3
    qualified = 0
    compared = 0
    for _ in range(trials):
        target = Volume3D.from_grid(rng.random((5, 5, 5)))
        recon = Volume3D.from_grid(rng.random((5, 5, 5)))
        res = topo_loss(target, recon, want_gradient=True)
        diags_a = compute_persistence(target)
        diags_b = compute_persistence(recon)
        base_sig = _grad_signature(res, diags_a, diags_b)
        grad = res.gradient.data
        nonzero = np.flatnonzero(np.abs(grad) > 1e-6)
        if nonzero.size == 0:
            continue
        picks = rng.choice(nonzero, size=min(probes, nonzero.size), replace=False)
        for vid in picks:
            vals = []
            ok = True
            for sign in (+1.0, -1.0):
                data = recon.data.copy()
                data[vid] += sign * h
                pert = Volume3D(recon.dims, data)
                r2 = topo_loss(target, pert, want_gradient=True)
                db = compute_persistence(pert)
                if _grad_signature(r2, diags_a, db) != base_sig:
                    ok = False
                    break
                vals.append(r2.value)
            if not ok:
                continue
            qualified += 1
            fd = (vals[0] - vals[1]) / (2.0 * h)
            rel = abs(fd - grad[vid]) / max(abs(grad[vid]), 1e-30)
            compared += 1
            if rel > 1e-3:
                return False, f"voxel {vid}: analytic {grad[vid]} vs fd {fd}"
    if compared == 0:
        return False, "no qualified probes"
    return True, f"{compared} probes"


def run_selfcheck() -> tuple[bool, list[dict]]:
    checks = [
        ("fixtures", check_fixtures),
        ("oracle_equivalence", check_oracle_equivalence),
        ("euler_cross_check", check_euler),
        ("w2_oracle", check_w2),
        ("gradient_fd", check_gradient),
    ]
    report = []
    all_ok = True
    for name, fn in checks:
        ok, detail = fn()
        report.append({"name": name, "ok": ok, "detail": detail})
        all_ok = all_ok and ok
    return all_ok, report

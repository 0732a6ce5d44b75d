"""Acceptance gate: one test per shipped guarantee, stated tolerances only.

Each test prints a single summary line so a verbose run reads as a checklist.
These intentionally re-derive expectations through the independent oracle
paths (naive reduction, exhaustive matching, finite differences, alternating
cell counts) rather than trusting the fast implementations they certify.
"""

import time
import warnings

import numpy as np

from cubetop import (
    LossWeights,
    PersistenceDiagram,
    PersistencePair,
    Volume3D,
    betti_at,
    brute_force_w2,
    compute_persistence,
    euler_characteristic_at,
    make_mask,
    naive_persistence,
    overall_loss,
    rec_consistency,
    topo_loss,
    w2_distance,
)

from conftest import (
    diagram_signature,
    distinct_volume,
    fd_gradient_check,
    random_volume,
    separated_volume,
    tied_volume,
)


def test_criterion_01_oracle_equivalence_200_volumes():
    rng = np.random.default_rng(1001)
    start = time.perf_counter()
    for _ in range(200):
        v = distinct_volume(rng, (4, 4, 4))
        assert diagram_signature(compute_persistence(v)) == diagram_signature(
            naive_persistence(v)
        )
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0
    print(f"PASS criterion 1: 200/200 fast-vs-naive matches in {elapsed:.2f}s (<60s)")


def test_criterion_02_topology_fixtures():
    # solid box: one component, nothing else
    box = Volume3D((4, 5, 6), np.full(120, 3.0))
    d0, d1, d2 = compute_persistence(box)
    assert [(p.birth, p.death, p.essential) for p in d0.points] == [(3.0, 3.0, True)]
    assert len(d1) == 0 and len(d2) == 0
    assert (d0, d1, d2) == naive_persistence(box)

    # hollow 5^3 shell: exactly one enclosed void
    g = np.ones((5, 5, 5))
    g[2, 2, 2] = 0.0
    shell = Volume3D.from_grid(g)
    d0, d1, d2 = compute_persistence(shell)
    assert [(p.birth, p.death) for p in d2.points] == [(1.0, 0.0)]
    assert len(d1) == 0
    assert (d0, d1, d2) == naive_persistence(shell)

    # 8-voxel square ring, one voxel thick: exactly one loop
    g = np.ones((3, 3, 1))
    g[1, 1, 0] = 0.0
    ring = Volume3D.from_grid(g)
    d0, d1, d2 = compute_persistence(ring)
    assert [(p.birth, p.death) for p in d1.points] == [(1.0, 0.0)]
    assert len(d2) == 0
    assert (d0, d1, d2) == naive_persistence(ring)
    print("PASS criterion 2: solid box, hollow shell, and ring fixtures match naive")


def test_criterion_03_euler_cross_check():
    rng = np.random.default_rng(1003)
    thresholds = 0
    for trial in range(50):
        v = (
            tied_volume(rng, (6, 6, 6), levels=5)
            if trial % 2
            else random_volume(rng, (6, 6, 6))
        )
        diags = compute_persistence(v)
        for tau in sorted(set(v.data.tolist())):
            b0, b1, b2 = betti_at(v, tau, diagrams=diags)
            assert b0 - b1 + b2 == euler_characteristic_at(v, tau)
            thresholds += 1
    print(f"PASS criterion 3: chi == b0-b1+b2 at {thresholds} thresholds of 50 volumes")


def _rand_diagram(rng, max_points=4):
    pts = []
    for _ in range(int(rng.integers(0, max_points + 1))):
        death = float(rng.uniform(-2.0, 2.0))
        pts.append(PersistencePair(0, death + float(rng.uniform(0.0, 2.0)), death))
    return PersistenceDiagram(0, tuple(pts))


def test_criterion_04_w2_oracle_and_metric_axioms():
    rng = np.random.default_rng(1004)
    for _ in range(500):
        a = _rand_diagram(rng)
        b = _rand_diagram(rng)
        fast, _ = w2_distance(a, b)
        assert abs(fast - brute_force_w2(a, b)) <= 1e-9
    for _ in range(200):
        a = _rand_diagram(rng)
        b = _rand_diagram(rng)
        c = _rand_diagram(rng)
        dab = w2_distance(a, b)[0]
        assert w2_distance(a, a)[0] <= 1e-9
        assert abs(dab - w2_distance(b, a)[0]) <= 1e-9
        assert dab <= w2_distance(a, c)[0] + w2_distance(c, b)[0] + 1e-9
    print("PASS criterion 4: 500 brute-force matches (1e-9), axioms on 200 triples")


def test_criterion_05_worked_distances():
    single = PersistenceDiagram(0, (PersistencePair(0, 2.0, 0.0),))
    empty = PersistenceDiagram(0, ())
    assert abs(w2_distance(single, empty)[0] - 1.0) <= 1e-12

    a = PersistenceDiagram(1, (PersistencePair(1, 4.0, 0.0),))
    b = PersistenceDiagram(1, (PersistencePair(1, 3.0, 1.0),))
    assert abs(w2_distance(a, b)[0] - 1.0) <= 1e-12

    rng = np.random.default_rng(1005)
    d = _rand_diagram(rng, max_points=4)
    assert abs(w2_distance(d, d)[0]) <= 1e-12
    print("PASS criterion 5: worked distances 1.0, 1.0, 0.0 within 1e-12")


def test_criterion_06_gradient_finite_differences():
    rng = np.random.default_rng(1006)
    sampled = 0
    qualified = 0
    worst = 0.0
    for _ in range(50):
        # distinct values separated by >> 2h so the probes cannot reorder
        # voxels; matching changes would otherwise dominate the sample
        target = separated_volume(rng, (6, 6, 6))
        recon = separated_volume(rng, (6, 6, 6))
        res = topo_loss(target, recon, want_gradient=True)
        order = np.argsort(-np.abs(res.gradient.data))
        picks = [int(i) for i in order[:3] if abs(res.gradient.data[i]) > 1e-6]
        if not picks:
            continue
        for analytic, fd, ok in fd_gradient_check(target, recon, picks):
            sampled += 1
            if not ok:
                continue
            qualified += 1
            rel = abs(fd - analytic) / max(abs(analytic), 1e-12)
            worst = max(worst, rel)
            assert rel <= 1e-3, (analytic, fd, rel)
    assert sampled >= 100
    assert qualified >= 0.9 * sampled
    print(
        f"PASS criterion 6: {qualified}/{sampled} components qualified "
        f"(>=90%), worst relative error {worst:.2e} (<=1e-3)"
    )


def test_criterion_07_equivariance():
    rng = np.random.default_rng(1007)
    for _ in range(5):
        v = random_volume(rng, (5, 5, 5))
        base = compute_persistence(v)
        for c in (0.37, -1.25, 100.0):
            moved = compute_persistence(Volume3D(v.dims, v.data + c))
            for dr, dm in zip(base, moved):
                assert len(dr) == len(dm)
                for p, q in zip(dr.points, dm.points):
                    assert abs(q.birth - (p.birth + c)) <= 1e-12
                    assert abs(q.death - (p.death + c)) <= 1e-12
        for a in (2.5, 0.125, 7.0):
            scaled = compute_persistence(Volume3D(v.dims, v.data * a))
            for dr, dm in zip(base, scaled):
                assert len(dr) == len(dm)
                for p, q in zip(dr.points, dm.points):
                    assert abs(q.birth - a * p.birth) <= 1e-12
                    assert abs(q.death - a * p.death) <= 1e-12
    print("PASS criterion 7: shift and scale equivariance within 1e-12")


def test_criterion_08_overall_loss_coefficients():
    w = LossWeights(0.5, 0.1, 0.1)
    assert w.coefficients() == (0.4, 0.05, 0.05, 0.4, 0.05, 0.05, 0.1, 0.1)
    total = overall_loss(1, 1, 1, 1, 1, 1, 1, 1, weights=w).total
    # the exact left-to-right double sum sits one ulp above 1.2
    assert abs(total - 1.2) <= 1e-15
    print(f"PASS criterion 8: coefficients exact, all-ones total {total!r} (~1.2)")


def test_criterion_09_masking_and_rec_consistency():
    mask = make_mask((96, 96, 96), (16, 16, 16), 0.5, seed=0)
    assert mask.num_patches == 216
    assert mask.num_masked == 108

    rng = np.random.default_rng(1009)
    small = make_mask((8, 8, 8), (2, 2, 2), 0.5, seed=2)
    a = random_volume(rng, (8, 8, 8))
    bump = np.where(small.voxel_mask(), 0.0, rng.random((8, 8, 8)))
    b = Volume3D.from_grid(a.grid + bump)  # differs only on unmasked voxels
    assert rec_consistency(a, b, small) == 0.0
    assert rec_consistency(a, a, small) == 0.0
    print("PASS criterion 9: 108/216 patches masked; unmasked diffs invisible")


def test_criterion_10_performance_64_cubed():
    rng = np.random.default_rng(1010)
    v = Volume3D((64, 64, 64), rng.random(64**3))
    start = time.perf_counter()
    diags = compute_persistence(v)
    elapsed = time.perf_counter() - start
    assert sum(len(d) for d in diags) > 0
    if elapsed > 30.0:
        warnings.warn(
            f"64^3 persistence took {elapsed:.1f}s, above the 30s soft target"
        )
    print(f"PASS criterion 10: 64^3 persistence in {elapsed:.2f}s (soft target 30s)")

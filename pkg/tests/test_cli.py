import json
import subprocess
import sys

import numpy as np
import pytest

from cubetop import (
    CropBox,
    LossWeights,
    Volume3D,
    apply_mask,
    compute_persistence,
    crop_keypoints,
    full_mse,
    keypoints_to_json,
    make_mask,
    masked_mse,
    overall_loss,
    read_ctvol,
    read_diagrams,
    read_mask,
    rec_consistency,
    spatial_consistency,
    spatial_loss,
    topo_loss,
    write_ctvol,
    write_keypoints,
    write_mask,
)
from cubetop.cli import run

from conftest import random_volume


def _vol_file(tmp_path, name, v):
    p = tmp_path / name
    write_ctvol(p, v)
    return str(p)


# ---------------------------------------------------------------------------
# dispatch and exit codes


def test_no_args_prints_usage(capsys):
    assert run([]) == 64
    assert "usage: cubetop" in capsys.readouterr().err


def test_help_and_version(capsys):
    assert run(["--help"]) == 0
    assert "usage: cubetop" in capsys.readouterr().out
    assert run(["--version"]) == 0
    assert capsys.readouterr().out == "cubetop 0.1.0\n"


def test_unknown_command(capsys):
    assert run(["frobnicate"]) == 64
    err = capsys.readouterr().err
    assert "unknown command" in err and "usage: cubetop" in err


def test_missing_file_is_exit_2(tmp_path, capsys):
    assert run(["ph", str(tmp_path / "nope.ctvol")]) == 2
    assert "error:" in capsys.readouterr().err


def test_corrupt_file_is_exit_2(tmp_path, capsys):
    p = tmp_path / "bad.ctvol"
    p.write_bytes(b"garbage without a header")
    assert run(["ph", str(p)]) == 2
    capsys.readouterr()


def test_contract_violation_is_exit_3(tmp_path, capsys):
    a = _vol_file(tmp_path, "a.ctvol", Volume3D((2, 2, 2), np.zeros(8)))
    b = _vol_file(tmp_path, "b.ctvol", Volume3D((2, 2, 3), np.zeros(12)))
    assert run(["topoloss", a, b]) == 3
    assert "error:" in capsys.readouterr().err


def test_malformed_flags_are_exit_2(capsys):
    assert run(["mask", "--dims", "4", "--patch", "2"]) == 2  # --ratio missing
    capsys.readouterr()


def test_installed_entry_point():
    out = subprocess.run(
        ["cubetop", "--version"], capture_output=True, text=True, check=True
    )
    assert out.stdout == "cubetop 0.1.0\n"


# ---------------------------------------------------------------------------
# ph / dist / topoloss


def test_ph_stdout_matches_api(tmp_path, capsys):
    rng = np.random.default_rng(400)
    v = random_volume(rng, (4, 4, 4))
    path = _vol_file(tmp_path, "v.ctvol", v)
    assert run(["ph", path]) == 0
    first = capsys.readouterr().out
    obj = json.loads(first)
    diags = compute_persistence(read_ctvol(path))
    assert obj["dims"] == [0, 1, 2]
    assert len(obj["points"]) == sum(len(d) for d in diags)
    # byte-identical on a second run
    assert run(["ph", path]) == 0
    assert capsys.readouterr().out == first


def test_ph_output_file_roundtrip(tmp_path, capsys):
    rng = np.random.default_rng(401)
    v = random_volume(rng, (4, 3, 4))
    path = _vol_file(tmp_path, "v.ctvol", v)
    out = tmp_path / "d.json"
    assert run(["ph", path, "-o", str(out)]) == 0
    summary = json.loads(capsys.readouterr().out)
    diags = compute_persistence(read_ctvol(path))
    assert summary == {"written": str(out), "points": [len(d) for d in diags]}
    assert read_diagrams(out) == diags


def test_dist_self_is_zero(tmp_path, capsys):
    rng = np.random.default_rng(402)
    v = random_volume(rng, (4, 4, 4))
    path = _vol_file(tmp_path, "v.ctvol", v)
    d = tmp_path / "d.json"
    assert run(["ph", path, "-o", str(d)]) == 0
    capsys.readouterr()
    assert run(["dist", str(d), str(d)]) == 0
    obj = json.loads(capsys.readouterr().out)
    assert [e["dim"] for e in obj["per_dim"]] == [0, 1, 2]
    assert all(e["w2"] == 0.0 for e in obj["per_dim"])


def test_dist_matches_api(tmp_path, capsys):
    rng = np.random.default_rng(403)
    va = random_volume(rng, (4, 4, 4))
    vb = random_volume(rng, (4, 4, 4))
    pa = _vol_file(tmp_path, "a.ctvol", va)
    pb = _vol_file(tmp_path, "b.ctvol", vb)
    da, db = tmp_path / "a.json", tmp_path / "b.json"
    run(["ph", pa, "-o", str(da)])
    run(["ph", pb, "-o", str(db)])
    capsys.readouterr()
    assert run(["dist", str(da), str(db)]) == 0
    obj = json.loads(capsys.readouterr().out)
    res = topo_loss(read_ctvol(pa), read_ctvol(pb))
    for entry, want in zip(obj["per_dim"], res.per_dim_w2):
        assert entry["w2"] == want


def test_topoloss_identical_is_zero(tmp_path, capsys):
    rng = np.random.default_rng(404)
    v = random_volume(rng, (4, 4, 4))
    path = _vol_file(tmp_path, "v.ctvol", v)
    grad_path = tmp_path / "g.ctvol"
    assert run(["topoloss", path, path, "--grad", str(grad_path)]) == 0
    obj = json.loads(capsys.readouterr().out)
    assert obj == {"value": 0.0, "per_dim": [0.0, 0.0, 0.0]}
    g = read_ctvol(grad_path)
    assert g.dims == v.dims and not np.any(g.data)


def test_topoloss_gradient_file_matches_api(tmp_path, capsys):
    rng = np.random.default_rng(405)
    pa = _vol_file(tmp_path, "a.ctvol", random_volume(rng, (5, 4, 4)))
    pb = _vol_file(tmp_path, "b.ctvol", random_volume(rng, (5, 4, 4)))
    grad_path = tmp_path / "g.ctvol"
    assert run(["topoloss", pa, pb, "--grad", str(grad_path)]) == 0
    obj = json.loads(capsys.readouterr().out)
    res = topo_loss(read_ctvol(pa), read_ctvol(pb), want_gradient=True)
    assert obj["value"] == res.value
    assert obj["per_dim"] == list(res.per_dim_w2)
    want = tmp_path / "want.ctvol"
    write_ctvol(want, res.gradient)
    assert grad_path.read_bytes() == want.read_bytes()


# ---------------------------------------------------------------------------
# mask / apply-mask / keypoints


def test_mask_stdout_deterministic(tmp_path, capsys):
    args = ["mask", "--dims", "8", "--patch", "2", "--ratio", "0.5", "--seed", "9"]
    assert run(args) == 0
    first = capsys.readouterr().out
    assert run(args) == 0
    assert capsys.readouterr().out == first
    obj = json.loads(first)
    assert obj["dims"] == [8, 8, 8] and obj["seed"] == 9
    assert sum(obj["masked"]) == 32


def test_mask_and_apply_flow(tmp_path, capsys):
    rng = np.random.default_rng(406)
    v = random_volume(rng, (8, 8, 8))
    vol_path = _vol_file(tmp_path, "v.ctvol", v)
    mask_path = tmp_path / "m.json"
    out_path = tmp_path / "masked.ctvol"
    assert (
        run(
            ["mask", "--dims", "8", "--patch", "2", "--ratio", "0.5",
             "--seed", "3", "-o", str(mask_path)]
        )
        == 0
    )
    summary = json.loads(capsys.readouterr().out)
    assert summary == {"written": str(mask_path), "patches": 64, "masked": 32}
    assert (
        run(["apply-mask", vol_path, str(mask_path), "-o", str(out_path),
             "--fill", "0.25"])
        == 0
    )
    summary = json.loads(capsys.readouterr().out)
    assert summary["masked_voxels"] == 32 * 8
    got = read_ctvol(out_path)
    want = apply_mask(read_ctvol(vol_path), read_mask(mask_path), 0.25)
    assert np.array_equal(got.data, want.data)


def test_keypoints_stdout_matches_api(capsys):
    args = ["keypoints", "--origin", "1,1,1", "--size", "2,2,2", "--parent", "5"]
    assert run(args) == 0
    out = capsys.readouterr().out
    k = crop_keypoints(CropBox((1, 1, 1), (2, 2, 2), (5, 5, 5)))
    assert out == keypoints_to_json(k) + "\n"
    assert json.loads(out)["points"][8] == [-0.25, -0.25, -0.25]


def test_keypoints_invalid_box_is_exit_3(capsys):
    args = ["keypoints", "--origin", "4,0,0", "--size", "2,2,2", "--parent", "5"]
    assert run(args) == 3
    capsys.readouterr()


# ---------------------------------------------------------------------------
# pretrain-loss


def _pretrain_fixture(tmp_path):
    rng = np.random.default_rng(407)
    dims = (8, 8, 8)
    target = random_volume(rng, dims)
    recon_a = random_volume(rng, dims)
    recon_b = random_volume(rng, dims)
    mask = make_mask(dims, (2, 2, 2), 0.5, seed=5)
    kp_gt = crop_keypoints(CropBox((0, 0, 0), (8, 8, 8), (8, 8, 8)))
    kp_a = crop_keypoints(CropBox((1, 0, 0), (4, 6, 8), (8, 8, 8)))
    kp_b = crop_keypoints(CropBox((0, 2, 1), (8, 6, 7), (8, 8, 8)))
    paths = {
        "target": _vol_file(tmp_path, "t.ctvol", target),
        "recon_a": _vol_file(tmp_path, "ra.ctvol", recon_a),
        "recon_b": _vol_file(tmp_path, "rb.ctvol", recon_b),
    }
    mask_path = tmp_path / "mask.json"
    write_mask(mask_path, mask)
    paths["mask"] = str(mask_path)
    for name, k in (("kp_gt", kp_gt), ("kp_a", kp_a), ("kp_b", kp_b)):
        p = tmp_path / f"{name}.json"
        write_keypoints(p, k)
        paths[name] = str(p)
    return paths


def test_pretrain_loss_matches_api(tmp_path, capsys):
    paths = _pretrain_fixture(tmp_path)
    argv = [
        "pretrain-loss",
        "--target", paths["target"],
        "--recon-a", paths["recon_a"],
        "--recon-b", paths["recon_b"],
        "--mask", paths["mask"],
        "--kp-gt", paths["kp_gt"],
        "--kp-a", paths["kp_a"],
        "--kp-b", paths["kp_b"],
        "--l1", "0.5", "--l2", "0.1", "--l3", "0.1",
    ]
    assert run(argv) == 0
    obj = json.loads(capsys.readouterr().out)

    from cubetop import read_keypoints

    target = read_ctvol(paths["target"])
    recon_a = read_ctvol(paths["recon_a"])
    recon_b = read_ctvol(paths["recon_b"])
    mask = read_mask(paths["mask"])
    kp_gt = read_keypoints(paths["kp_gt"])
    kp_a = read_keypoints(paths["kp_a"])
    kp_b = read_keypoints(paths["kp_b"])
    want = overall_loss(
        mse_vit=masked_mse(target, recon_a, mask),
        topo_vit=topo_loss(target, recon_a).value,
        spa_vit=spatial_loss(kp_gt, kp_a),
        mse_unetrpp=masked_mse(target, recon_b, mask),
        topo_unetrpp=topo_loss(target, recon_b).value,
        spa_unetrpp=spatial_loss(kp_gt, kp_b),
        spa_consis=spatial_consistency(kp_a, kp_b),
        rec_consis=rec_consistency(recon_a, recon_b, mask),
        weights=LossWeights(0.5, 0.1, 0.1),
    )
    assert obj["mse_vit"] == want.mse_vit
    assert obj["topo_vit"] == want.topo_vit
    assert obj["spa_vit"] == want.spa_vit
    assert obj["mse_unetrpp"] == want.mse_unetrpp
    assert obj["topo_unetrpp"] == want.topo_unetrpp
    assert obj["spa_unetrpp"] == want.spa_unetrpp
    assert obj["spa_consis"] == want.spa_consis
    assert obj["rec_consis"] == want.rec_consis
    assert obj["total"] == want.total


def test_pretrain_loss_full_mse_switch(tmp_path, capsys):
    paths = _pretrain_fixture(tmp_path)
    argv = [
        "pretrain-loss",
        "--target", paths["target"],
        "--recon-a", paths["recon_a"],
        "--recon-b", paths["recon_b"],
        "--mask", paths["mask"],
        "--kp-gt", paths["kp_gt"],
        "--kp-a", paths["kp_a"],
        "--kp-b", paths["kp_b"],
        "--full-mse",
    ]
    assert run(argv) == 0
    obj = json.loads(capsys.readouterr().out)
    target = read_ctvol(paths["target"])
    assert obj["mse_vit"] == full_mse(target, read_ctvol(paths["recon_a"]))
    assert obj["mse_unetrpp"] == full_mse(target, read_ctvol(paths["recon_b"]))


# ---------------------------------------------------------------------------
# betti / bench / selfcheck


def test_betti_two_blocks(tmp_path, capsys):
    g = np.zeros((5, 1, 1))
    g[0, 0, 0] = 1.0
    g[3, 0, 0] = 1.0
    path = _vol_file(tmp_path, "blocks.ctvol", Volume3D.from_grid(g))
    assert run(["betti", path, "--tau", "1"]) == 0
    obj = json.loads(capsys.readouterr().out)
    assert obj == {"tau": 1.0, "betti": [2, 0, 0], "euler": 2}


def test_bench_small(capsys):
    assert run(["bench", "--dims", "6", "--seed", "1"]) == 0
    obj = json.loads(capsys.readouterr().out)
    assert obj["dims"] == [6, 6, 6]
    assert obj["cells"] == 11**3
    assert obj["seconds"] > 0.0
    assert obj["warn"] is False


def test_selfcheck_passes(capsys):
    assert run(["selfcheck"]) == 0
    obj = json.loads(capsys.readouterr().out)
    assert obj["ok"] is True
    assert all(c["ok"] for c in obj["checks"])

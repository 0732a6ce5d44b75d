"""Command-line surface binding every operation to files.

Exit codes: 0 success, 2 input or format problem, 3 contract violation
(shape/dimension/size/config errors), 64 unknown command. All JSON output is
byte-stable for identical inputs and seeds.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import __version__
from ._jsonfmt import dumps
from .diagram import w2_distance
from .errors import CubetopError, FormatError
from .filtration import (
    betti_at,
    compute_persistence,
    diagrams_to_json,
    euler_characteristic_at,
    read_diagrams,
    write_diagrams,
)
from .loss import full_mse, masked_mse, topo_loss
from .pretrain import (
    LossWeights,
    overall_loss,
    rec_consistency,
    spatial_consistency,
    spatial_loss,
)
from .selfcheck import run_selfcheck
from .volume import (
    CropBox,
    Volume3D,
    apply_mask,
    crop_keypoints,
    keypoints_to_json,
    make_mask,
    mask_to_json,
    read_ctvol,
    read_keypoints,
    read_mask,
    write_ctvol,
    write_keypoints,
    write_mask,
)

USAGE = """usage: cubetop <command> [options]

commands:
  ph            persistence diagrams of a volume
  dist          2-Wasserstein distances between two diagram files
  topoloss      topological loss between two volumes, optional gradient
  mask          generate a seeded random patch mask
  apply-mask    fill masked patches of a volume
  keypoints     normalized key points of a crop box
  pretrain-loss composite self pre-training objective
  betti         Betti numbers and Euler characteristic at a threshold
  bench         time full persistence of a random volume
  selfcheck     run the built-in verification suites

run `cubetop <command> --help` for per-command flags; `--version` prints the
package version.
"""


def _emit(obj) -> None:
    sys.stdout.write(dumps(obj))
    sys.stdout.write("\n")


def _triple(text: str) -> tuple[int, int, int]:
    parts = text.split(",")
    if len(parts) == 1:
        n = int(parts[0])
        return (n, n, n)
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected N or NX,NY,NZ, got {text!r}")
    return tuple(int(p) for p in parts)


def _parser(name: str, description: str) -> argparse.ArgumentParser:
    return argparse.ArgumentParser(prog=f"cubetop {name}", description=description)


def _cmd_ph(argv) -> int:
    p = _parser("ph", "Compute persistence diagrams of a volume.")
    p.add_argument("volume", help="input .ctvol file")
    p.add_argument("-o", "--output", help="write diagram JSON here instead of stdout")
    args = p.parse_args(argv)
    v = read_ctvol(args.volume)
    diags = compute_persistence(v)
    if args.output:
        write_diagrams(args.output, diags)
        _emit({"written": args.output, "points": [len(d) for d in diags]})
    else:
        sys.stdout.write(diagrams_to_json(diags))
        sys.stdout.write("\n")
    return 0


def _cmd_dist(argv) -> int:
    p = _parser("dist", "2-Wasserstein distance between two diagram files.")
    p.add_argument("first")
    p.add_argument("second")
    args = p.parse_args(argv)
    da = read_diagrams(args.first)
    db = read_diagrams(args.second)
    out = []
    for a, b in zip(da, db):
        w2, matching = w2_distance(a, b)
        out.append(
            {
                "dim": a.dim,
                "w2": w2,
                "matching": [[i, j] for i, j in matching.pairs],
            }
        )
    _emit({"per_dim": out})
    return 0


def _cmd_topoloss(argv) -> int:
    p = _parser("topoloss", "Topological loss between two volumes.")
    p.add_argument("target", help="reference .ctvol")
    p.add_argument("recon", help="compared .ctvol; gradient is w.r.t. this one")
    p.add_argument("--grad", help="write the gradient volume here")
    args = p.parse_args(argv)
    a = read_ctvol(args.target)
    b = read_ctvol(args.recon)
    res = topo_loss(a, b, want_gradient=bool(args.grad))
    if args.grad:
        write_ctvol(args.grad, res.gradient)
    _emit({"value": res.value, "per_dim": list(res.per_dim_w2)})
    return 0


def _cmd_mask(argv) -> int:
    p = _parser("mask", "Generate a seeded random patch mask.")
    p.add_argument("--dims", type=_triple, required=True)
    p.add_argument("--patch", type=_triple, required=True)
    p.add_argument("--ratio", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", help="write mask JSON here instead of stdout")
    args = p.parse_args(argv)
    m = make_mask(args.dims, args.patch, args.ratio, args.seed)
    if args.output:
        write_mask(args.output, m)
        _emit({"written": args.output, "patches": m.num_patches, "masked": m.num_masked})
    else:
        sys.stdout.write(mask_to_json(m))
        sys.stdout.write("\n")
    return 0


def _cmd_apply_mask(argv) -> int:
    p = _parser("apply-mask", "Fill masked patches of a volume.")
    p.add_argument("volume")
    p.add_argument("mask")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--fill", type=float, default=0.0)
    args = p.parse_args(argv)
    v = read_ctvol(args.volume)
    m = read_mask(args.mask)
    out = apply_mask(v, m, args.fill)
    write_ctvol(args.output, out)
    _emit(
        {
            "written": args.output,
            "masked_voxels": int(np.count_nonzero(m.voxel_mask())),
        }
    )
    return 0


def _cmd_keypoints(argv) -> int:
    p = _parser("keypoints", "Normalized key points of a crop box.")
    p.add_argument("--origin", type=_triple, required=True)
    p.add_argument("--size", type=_triple, required=True)
    p.add_argument("--parent", type=_triple, required=True)
    p.add_argument("-o", "--output", help="write key-point JSON here instead of stdout")
    args = p.parse_args(argv)
    k = crop_keypoints(CropBox(args.origin, args.size, args.parent))
    if args.output:
        write_keypoints(args.output, k)
        _emit({"written": args.output})
    else:
        sys.stdout.write(keypoints_to_json(k))
        sys.stdout.write("\n")
    return 0


def _cmd_pretrain_loss(argv) -> int:
    p = _parser("pretrain-loss", "Composite self pre-training objective.")
    p.add_argument("--target", required=True, help="original volume .ctvol")
    p.add_argument("--recon-a", required=True, help="first reconstruction .ctvol")
    p.add_argument("--recon-b", required=True, help="second reconstruction .ctvol")
    p.add_argument("--mask", required=True, help="patch mask JSON")
    p.add_argument("--kp-gt", required=True, help="ground-truth key points JSON")
    p.add_argument("--kp-a", required=True, help="first predicted key points JSON")
    p.add_argument("--kp-b", required=True, help="second predicted key points JSON")
    p.add_argument("--l1", type=float, default=0.5)
    p.add_argument("--l2", type=float, default=0.1)
    p.add_argument("--l3", type=float, default=0.1)
    p.add_argument(
        "--full-mse",
        action="store_true",
        help="average reconstruction MSE over all voxels instead of masked only",
    )
    args = p.parse_args(argv)
    target = read_ctvol(args.target)
    recon_a = read_ctvol(args.recon_a)
    recon_b = read_ctvol(args.recon_b)
    mask = read_mask(args.mask)
    kp_gt = read_keypoints(args.kp_gt)
    kp_a = read_keypoints(args.kp_a)
    kp_b = read_keypoints(args.kp_b)
    weights = LossWeights(args.l1, args.l2, args.l3)
    if args.full_mse:
        mse_a = full_mse(target, recon_a)
        mse_b = full_mse(target, recon_b)
    else:
        mse_a = masked_mse(target, recon_a, mask)
        mse_b = masked_mse(target, recon_b, mask)
    breakdown = overall_loss(
        mse_vit=mse_a,
        topo_vit=topo_loss(target, recon_a).value,
        spa_vit=spatial_loss(kp_gt, kp_a),
        mse_unetrpp=mse_b,
        topo_unetrpp=topo_loss(target, recon_b).value,
        spa_unetrpp=spatial_loss(kp_gt, kp_b),
        spa_consis=spatial_consistency(kp_a, kp_b),
        rec_consis=rec_consistency(recon_a, recon_b, mask),
        weights=weights,
    )
    _emit(
        {
            "mse_vit": breakdown.mse_vit,
            "topo_vit": breakdown.topo_vit,
            "spa_vit": breakdown.spa_vit,
            "mse_unetrpp": breakdown.mse_unetrpp,
            "topo_unetrpp": breakdown.topo_unetrpp,
            "spa_unetrpp": breakdown.spa_unetrpp,
            "spa_consis": breakdown.spa_consis,
            "rec_consis": breakdown.rec_consis,
            "total": breakdown.total,
        }
    )
    return 0


def _cmd_betti(argv) -> int:
    p = _parser("betti", "Betti numbers and Euler characteristic at a threshold.")
    p.add_argument("volume")
    p.add_argument("--tau", type=float, required=True)
    args = p.parse_args(argv)
    v = read_ctvol(args.volume)
    b = betti_at(v, args.tau)
    _emit({"tau": args.tau, "betti": list(b), "euler": euler_characteristic_at(v, args.tau)})
    return 0


def _cmd_bench(argv) -> int:
    p = _parser("bench", "Time full 0/1/2-D persistence of a random volume.")
    p.add_argument("--dims", type=_triple, default=(64, 64, 64))
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    nx, ny, nz = args.dims
    v = Volume3D(args.dims, rng.random(nx * ny * nz))
    start = time.perf_counter()
    diags = compute_persistence(v)
    elapsed = time.perf_counter() - start
    cells = (2 * nx - 1) * (2 * ny - 1) * (2 * nz - 1)
    warn = elapsed > 30.0
    if warn:
        sys.stderr.write(
            f"warning: persistence took {elapsed:.1f}s, above the 30s soft target\n"
        )
    _emit(
        {
            "dims": list(args.dims),
            "cells": cells,
            "seed": args.seed,
            "points": [len(d) for d in diags],
            "seconds": elapsed,
            "warn": warn,
        }
    )
    return 0


def _cmd_selfcheck(argv) -> int:
    p = _parser("selfcheck", "Run the built-in verification suites.")
    p.parse_args(argv)
    ok, report = run_selfcheck()
    _emit({"ok": ok, "checks": report})
    return 0 if ok else 3


_COMMANDS = {
    "ph": _cmd_ph,
    "dist": _cmd_dist,
    "topoloss": _cmd_topoloss,
    "mask": _cmd_mask,
    "apply-mask": _cmd_apply_mask,
    "keypoints": _cmd_keypoints,
    "pretrain-loss": _cmd_pretrain_loss,
    "betti": _cmd_betti,
    "bench": _cmd_bench,
    "selfcheck": _cmd_selfcheck,
}


def run(argv) -> int:
    """Dispatches a command line; returns the exit code instead of exiting."""
    argv = list(argv)
    if not argv:
        sys.stderr.write(USAGE)
        return 64
    head = argv[0]
    if head in ("-h", "--help", "help"):
        sys.stdout.write(USAGE)
        return 0
    if head in ("-V", "--version"):
        sys.stdout.write(f"cubetop {__version__}\n")
        return 0
    handler = _COMMANDS.get(head)
    if handler is None:
        sys.stderr.write(f"unknown command: {head}\n\n")
        sys.stderr.write(USAGE)
        return 64
    try:
        return handler(argv[1:])
    except SystemExit as e:
        # argparse exits 2 on malformed flags and 0 on --help
        return int(e.code or 0)
    except FormatError as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    except OSError as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    except CubetopError as e:
        sys.stderr.write(f"error: {e}\n")
        return 3


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()

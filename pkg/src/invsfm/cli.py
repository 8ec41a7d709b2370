"""Command-line entry point.

Exit codes: 0 success (or pure rotation), 1 not a pure rotation, 2 bad
arguments or files, 3 degenerate configuration, 4 not converged, 5 not enough
data for the equation count.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import formats, geom, solver, synth
from .errors import (DegenerateConfiguration, DegenerateTargets, FormatError,
                     InsufficientData, InvSfmError, LengthMismatch, PointBehindCamera)
from .groups import Variant
from .invariants import invariants, labels
from .lm import SolverOptions
from .rotation_test import DEFAULT_TOL, detect_pure_rotation

EXIT_OK, EXIT_NOT_ROTATION, EXIT_USAGE, EXIT_DEGENERATE, EXIT_NOT_CONVERGED, EXIT_INSUFFICIENT = range(6)

VARIANTS = [v.value for v in Variant]


def _err(msg):
    print(f"invsfm: {msg}", file=sys.stderr)


def _check_distinct(tracks, tau):
    uv = tracks.uv[tau]
    for i in range(len(uv)):
        same = np.flatnonzero(np.all(uv[i + 1:] == uv[i], axis=1))
        if len(same):
            raise DegenerateConfiguration(
                f"picture {tau + 1}: points {tracks.ids[i]} and {tracks.ids[i + 1 + same[0]]} "
                "coincide (zero difference vector)")


def _picture_invariants(tracks, variant):
    out = []
    for tau in range(tracks.t):
        _check_distinct(tracks, tau)
        try:
            out.append(invariants(tracks.embed(tau, variant)))
        except DegenerateConfiguration as exc:
            raise DegenerateConfiguration(f"picture {tau + 1}: {exc}") from exc
    return out


def _emit(report, out):
    if out:
        report.write(out)
    else:
        sys.stdout.write(report.to_text())


def cmd_synth(args):
    scene = synth.generate_scene(args.n, args.seed)
    poses = synth.generate_trajectory(args.t, args.kind, seed=args.seed)
    try:
        tracks = synth.make_tracks(scene, poses, args.sigma, args.seed, args.variant)
    except PointBehindCamera as exc:
        _err(str(exc))
        return EXIT_DEGENERATE
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    formats.write_scene(out / "scene.csv", scene)
    formats.write_tracks(out / "tracks.csv", tracks)
    print(f"wrote {out / 'scene.csv'} and {out / 'tracks.csv'} ({args.n * args.t} observations)")
    return EXIT_OK


def cmd_invariants(args):
    tracks = formats.read_tracks(args.tracks)
    variant = Variant.parse(args.variant or tracks.variant)
    vectors = _picture_invariants(tracks, variant)
    rep = formats.Report("invariants", {"variant": variant.value, "n": tracks.n, "t": tracks.t,
                                        "length": len(vectors[0])})
    rep.add_table("invariants", ["tau"] + labels(variant, tracks.n),
                  [[tau + 1] + list(v.values) for tau, v in enumerate(vectors)])
    _emit(rep, args.out)
    return EXIT_OK


def cmd_detect_rotation(args):
    tracks = formats.read_tracks(args.tracks)
    for tau in (args.tau_a, args.tau_b):
        if not 1 <= tau <= tracks.t:
            _err(f"picture index {tau} outside 1..{tracks.t}")
            return EXIT_USAGE
    views = []
    for tau in (args.tau_a, args.tau_b):
        _check_distinct(tracks, tau - 1)
        try:
            views.append(invariants(tracks.embed(tau - 1, Variant.BASE)))
        except DegenerateConfiguration as exc:
            raise DegenerateConfiguration(f"picture {tau}: {exc}") from exc
    verdict = detect_pure_rotation(views[0], views[1], args.tol)
    rep = formats.Report("rotation", {"pure_rotation": verdict.is_pure_rotation,
                                      "max_abs_deviation": verdict.max_abs_deviation,
                                      "tol": args.tol, "tau_a": args.tau_a, "tau_b": args.tau_b})
    rep.add_table("deviations", ["invariant", "deviation"],
                  zip(views[0].labels, verdict.per_invariant_deviations))
    _emit(rep, args.out)
    return EXIT_OK if verdict.is_pure_rotation else EXIT_NOT_ROTATION


def cmd_reconstruct(args):
    tracks = formats.read_tracks(args.tracks)
    variant = Variant.parse(args.variant or tracks.variant)
    for tau in range(tracks.t):
        _check_distinct(tracks, tau)
    opts = SolverOptions(max_iterations=args.max_iter, multistart=args.multistart, seed=args.seed)
    try:
        res = solver.reconstruct(tracks, variant, opts)
    except InsufficientData as exc:
        _err(str(exc))
        return EXIT_INSUFFICIENT

    rep = formats.Report("reconstruction", {
        "variant": variant.value, "n": tracks.n, "t": tracks.t,
        "converged": res.converged, "reason": res.diagnostics.reason,
        "iterations": res.iterations, "residual_rms": res.residual_rms,
        "residual_max": float(np.max(np.abs(res.residuals))), "start_index": res.start_index})
    rep.add_table("object_points", ["point_id", "x", "y", "z"],
                  [[pid, *p] for pid, p in zip(tracks.ids, res.object_points)])
    cam_cols = ["tau", "x", "y", "z"]
    for k in range(variant.n_aux):
        cam_cols += [f"aux{k + 1}_{c}" for c in "xyz"]
    rep.add_table("cameras", cam_cols,
                  [[tau + 1, *c, *aux.ravel()]
                   for tau, (c, aux) in enumerate(zip(res.camera_centers, res.camera_aux))])
    names = labels(variant, tracks.n)
    m = len(names)
    rep.add_table("residuals", ["tau", "invariant", "residual"],
                  [[k // m + 1, names[k % m], r] for k, r in enumerate(res.residuals)])

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rep.write(out / "report.txt")
    formats.write_scene(out / "points.csv", synth.Scene(res.object_points, tracks.ids))
    formats.draw_three_views(res.object_points, out / "views.svg", res.camera_centers,
                             f"{variant.value} reconstruction")
    print(f"residual RMS {res.residual_rms:.3e}, {res.iterations} iterations, "
          f"{'converged' if res.converged else 'NOT converged'} ({res.diagnostics.reason})")
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_evaluate(args):
    rec = formats.read_scene(args.reconstruction)
    truth = formats.read_scene(args.truth)
    if set(rec.ids) != set(truth.ids):
        raise LengthMismatch("reconstruction and truth have different point ids")
    order = {pid: k for k, pid in enumerate(rec.ids)}
    src = rec.points[[order[pid] for pid in truth.ids]]
    xf, rms = geom.align_similarity(src, truth.points)
    rel = rms / truth.diameter
    rep = formats.Report("evaluation", {"n": truth.n, "rms": rms, "diameter": truth.diameter,
                                        "relative_rms": rel, "scale": xf.scale})
    _emit(rep, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="invsfm",
                                description="Structure from motion through camera-object invariants.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic scene and its picture tracks")
    s.add_argument("--n", type=int, default=8)
    s.add_argument("--t", type=int, default=4)
    s.add_argument("--kind", choices=synth.TRAJECTORY_KINDS, default="orbit")
    s.add_argument("--sigma", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--variant", choices=VARIANTS, default="base")
    s.add_argument("--out", default=".", help="output directory")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("invariants", help="per-picture invariant vectors")
    s.add_argument("tracks")
    s.add_argument("--variant", choices=VARIANTS)
    s.add_argument("--out", help="report path (default: stdout)")
    s.set_defaults(func=cmd_invariants)

    s = sub.add_parser("detect-rotation", help="test whether two pictures differ by a pure rotation")
    s.add_argument("tracks")
    s.add_argument("--tau-a", type=int, default=1)
    s.add_argument("--tau-b", type=int, default=2)
    s.add_argument("--tol", type=float, default=DEFAULT_TOL)
    s.add_argument("--out", help="report path (default: stdout)")
    s.set_defaults(func=cmd_detect_rotation)

    s = sub.add_parser("reconstruct", help="solve for object points and cameras")
    s.add_argument("tracks")
    s.add_argument("--variant", choices=VARIANTS)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--multistart", type=int, default=1)
    s.add_argument("--max-iter", type=int, default=200)
    s.add_argument("--out", default=".", help="output directory")
    s.set_defaults(func=cmd_reconstruct)

    s = sub.add_parser("evaluate", help="align a reconstruction to ground truth")
    s.add_argument("reconstruction")
    s.add_argument("truth")
    s.add_argument("--out", help="report path (default: stdout)")
    s.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "tol", 1.0) <= 0 or getattr(args, "sigma", 0.0) < 0:
        parser.error("--tol must be positive and --sigma non-negative")
    try:
        return args.func(args)
    except (DegenerateConfiguration, DegenerateTargets) as exc:
        _err(f"degenerate configuration: {exc}")
        return EXIT_DEGENERATE
    except (FormatError, LengthMismatch, ValueError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    except InvSfmError as exc:
        _err(str(exc))
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())

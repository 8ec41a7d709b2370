"""Acceptance checks, one test and one PASS/FAIL line per criterion.

Each test gathers its sub-results, prints a single summary line (visible even
without ``-s``) and then asserts.
"""
import time

import numpy as np
import pytest

from helpers import gauge_truth, rms
from invsfm import geom
from invsfm.errors import InsufficientData
from invsfm.frames import solve_frame, verify_equivariance
from invsfm.groups import SceneConfig, Variant, apply, random_element
from invsfm.invariants import invariant_jacobian_rank, invariants, vector_length
from invsfm.lm import levenberg_marquardt
from invsfm.rotation_test import detect_pure_rotation
from invsfm.solver import (ReconstructionProblem, assemble_residuals, compute_targets, counting_ok,
                           initialize, reconstruct)
from invsfm.synth import (generate_scene, generate_trajectory, make_tracks, random_config,
                          true_config)


@pytest.fixture
def verdict(capsys):
    def emit(k, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")
        assert ok, detail
    return emit


def scene_tracks(variant, n=8, t=4, seed=0, sigma=0.0, focal=None):
    scene = generate_scene(n, seed)
    params = None if focal is None else {"focal": focal}
    poses = generate_trajectory(t, "orbit", params, seed=seed)
    return scene, poses, make_tracks(scene, poses, sigma, seed, variant)


def test_criterion_01_invariance(verdict):
    parts, ok = [], True
    for variant in Variant:
        start, worst, bad = time.perf_counter(), 0.0, 0
        for seed in range(1000):
            cfg = random_config(variant, 5, seed)
            g = random_element(variant, 5, 50_000 + seed)
            a, b = invariants(cfg).values, invariants(apply(g, cfg)).values
            dev = np.abs(b - a)
            worst = max(worst, float(np.max(dev / np.maximum(np.abs(a), 1e-3))))
            bad += not np.allclose(b, a, rtol=1e-9, atol=1e-12)
        secs = time.perf_counter() - start
        ok &= bad == 0 and secs < 10
        parts.append(f"{variant.value} {1000 - bad}/1000 stable (worst rel {worst:.1e}, {secs:.1f}s)")
    verdict(1, ok, "; ".join(parts))


def degenerate(variant):
    """Rays coplanar through P0 for Base/Oriented, a single on-axis ray for Zoom."""
    if variant is Variant.ZOOM:
        return SceneConfig(variant, np.zeros(3), [(2, 0, 0)], [(1, 0, 0)])
    rng = np.random.default_rng(0)
    n = 5 if variant is Variant.BASE else 3
    pts = np.column_stack([rng.uniform(1, 3, n), rng.uniform(-1, 1, n), np.zeros(n)])
    aux = [(1, -0.5, 0), (1, 0.5, 0)] if variant is Variant.ORIENTED else ()
    return SceneConfig(variant, np.zeros(3), pts, aux)


def test_criterion_02_fundamental_counts(verdict):
    ns = {Variant.BASE: range(4, 9), Variant.ORIENTED: range(2, 7), Variant.ZOOM: range(2, 7)}
    parts, ok = [], True
    for variant, rng_n in ns.items():
        got = [invariant_jacobian_rank(random_config(variant, n, 100 + n)) for n in rng_n]
        want = [vector_length(variant, n) for n in rng_n]
        cfg = degenerate(variant)
        drop = invariant_jacobian_rank(cfg)
        full = vector_length(variant, cfg.n)
        ok &= got == want and drop < full
        parts.append(f"{variant.value} ranks {got} (want {want}), degenerate {drop}/{full}")
    verdict(2, ok, "; ".join(parts))


def test_criterion_03_moving_frame(verdict):
    norm_err = 0.0
    for variant in Variant:
        for seed in range(100):
            z = (lambda c: solve_frame(c).normalize(c))(random_config(variant, 5, seed))
            if variant is Variant.ZOOM:
                pinned = [*z.p0, *(z.aux[0] - [1, 0, 0]), z.points[0, 2]]
            else:
                first = z.points[0] if variant is Variant.BASE else z.aux[0]
                second = z.points[1] if variant is Variant.BASE else z.aux[1]
                pinned = [*z.p0, *(z.points[:, 0] - 1), *first[1:], second[2]]
            norm_err = max(norm_err, float(np.max(np.abs(pinned))))

    equi = 0.0
    for variant in (Variant.BASE, Variant.ORIENTED):
        for seed in range(1000):
            cfg = random_config(variant, 5, seed)
            g = random_element(variant, 5, 90_000 + seed, magnitude=0.1)
            equi = max(equi, verify_equivariance(cfg, g))

    cross = 0.0
    for variant in Variant:
        for seed in range(100):
            cfg = random_config(variant, 5, seed)
            z = solve_frame(cfg).normalize(cfg)
            inv = dict(zip(invariants(cfg).labels, invariants(cfg).values))
            _, y, w = z.points.T / z.points[:, 0]
            first = {Variant.BASE: 3, Variant.ORIENTED: 1, Variant.ZOOM: 2}[variant]
            dev = [abs(y[i - 1] - inv[f"I{i}"]) for i in range(first, 6)]
            dev += [abs(w[i - 1] + inv[f"J{i}"]) for i in range(first, 6)]
            if variant is Variant.BASE:
                dev.append(abs(y[1] - inv["I2"]))
            cross = max(cross, max(dev))

    ok = norm_err < 1e-10 and equi < 1e-8 and cross < 1e-10
    verdict(3, ok, f"normalization {norm_err:.1e}, equivariance (Base+Oriented, 2x1000) "
                   f"{equi:.1e}, frame/invariant cross-check {cross:.1e}")


def test_criterion_04_picture_orbit(verdict):
    parts, ok = [], True
    for variant in Variant:
        worst = 0.0
        for seed in range(100):
            focal = 0.5 + np.random.default_rng(seed).uniform(0, 1.5)
            scene = generate_scene(6, seed)
            pose = generate_trajectory(1, "orbit", {"focal": focal}, seed=seed)[0]
            tracks = make_tracks(scene, [pose], 0.0, seed, variant)
            a = invariants(tracks.embed(0, variant)).values
            b = invariants(true_config(scene, pose, variant)).values
            worst = max(worst, float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b)))))
        ok &= worst < 1e-10
        parts.append(f"{variant.value} {worst:.1e}")
    verdict(4, ok, "max deviation " + ", ".join(parts))


def base_pair(kind, seed, params=None):
    scene = generate_scene(6, seed)
    tracks = make_tracks(scene, generate_trajectory(2, kind, params, seed=seed), 0.0, seed)
    return invariants(tracks.embed(0, "base")), invariants(tracks.embed(1, "base"))


def test_criterion_05_pure_rotation(verdict):
    rot = [detect_pure_rotation(*base_pair("pure_rotation", s), tol=1e-8) for s in range(100)]
    worst_rot = max(v.max_abs_deviation for v in rot)
    moved = []
    for s in range(100):
        rng = np.random.default_rng(4000 + s)
        d = rng.normal(size=3)
        step = rng.uniform(0.1, 0.5) * d / np.linalg.norm(d)
        moved.append(detect_pure_rotation(*base_pair("translation", s, {"step": step}), tol=1e-8))
    n_true = sum(v.is_pure_rotation for v in rot)
    n_false = sum(not v.is_pure_rotation for v in moved)
    least = min(v.max_abs_deviation for v in moved)
    ok = n_true == 100 and worst_rot < 1e-9 and n_false == 100
    verdict(5, ok, f"rotations {n_true}/100 true (max dev {worst_rot:.1e}); "
                   f"translations {n_false}/100 false (min dev {least:.1e})")


def test_criterion_06_equation_counting(verdict):
    per = {Variant.BASE: lambda n: 2 * n - 3, Variant.ORIENTED: lambda n: 2 * n + 3,
           Variant.ZOOM: lambda n: 2 * n - 1}
    lengths_ok = True
    for variant in Variant:
        for n, t in [(4, 3), (6, 2), (8, 4)]:
            focal = 1.0 + 0.1 * np.arange(t) if variant is Variant.ZOOM else None
            _, _, tracks = scene_tracks(variant.value, n, t, focal=focal)
            targets, embedded = compute_targets(tracks, variant)
            problem = ReconstructionProblem.from_targets(targets)
            r = assemble_residuals(problem, initialize(problem, embedded, 0))
            lengths_ok &= len(r) == per[variant](n) * t
    mismatches = []
    for n in range(1, 10):
        for t in range(1, 6):
            expected = n > 3 and t >= (3 * n - 6) / (2 * n - 6)
            if counting_ok("base", n, t) != expected:
                mismatches.append((n, t))
            if not expected:
                _, _, tracks = scene_tracks("base", n, t, seed=n)
                try:
                    reconstruct(tracks, "base")
                    mismatches.append((n, t))
                except InsufficientData:
                    pass
    ok = lengths_ok and not mismatches
    verdict(6, ok, f"residual lengths {'exact' if lengths_ok else 'WRONG'}; "
                   f"InsufficientData mismatches over n=1..9, t=1..5: {mismatches or 'none'}")


def test_criterion_07_base_reconstruction(verdict):
    scene, _, tracks = scene_tracks("base")
    start = time.perf_counter()
    res = reconstruct(tracks, "base")
    secs = time.perf_counter() - start
    _, err = geom.align_similarity(res.object_points, scene.points)
    clean = res.converged and res.residual_rms < 1e-8 and err < 1e-4 * scene.diameter and secs < 10
    good = 0
    for seed in range(10):
        scene, _, tracks = scene_tracks("base", seed=seed, sigma=0.002)
        _, err_s = geom.align_similarity(reconstruct(tracks, "base").object_points, scene.points)
        good += err_s < 0.02 * scene.diameter
    verdict(7, clean and good >= 8,
            f"noiseless residual {res.residual_rms:.1e}, aligned {err / scene.diameter:.1e} x diam, "
            f"{secs:.2f}s; sigma=0.002 within 2% in {good}/10 seeds")


def test_criterion_08_oriented_reconstruction(verdict):
    scene, poses, tracks = scene_tracks("oriented")
    res = reconstruct(tracks, "oriented")
    xf, err = geom.align_similarity(res.object_points, scene.points)
    cam = rms(xf.apply(res.camera_centers), np.array([p.center for p in poses]))
    d = scene.diameter
    ok = err < 1e-4 * d and cam < 1e-3 * d
    verdict(8, ok, f"objects {err / d:.1e} x diam, camera centres {cam / d:.1e} x diam")


def test_criterion_09_zoom(verdict):
    worst = 0.0
    for seed in range(20):
        t = 3 + seed % 3
        focal = 0.7 + np.random.default_rng(seed).uniform(0, 1.0, t)
        scene, poses, tracks = scene_tracks("zoom", 6, t, seed, focal=focal)
        targets, _ = compute_targets(tracks, "zoom")
        problem = ReconstructionProblem.from_targets(targets)
        r = assemble_residuals(problem, gauge_truth(problem, scene, poses))
        worst = max(worst, float(np.max(np.abs(r))))
    scene, _, tracks = scene_tracks("zoom", focal=[1.0, 1.1, 1.2, 1.3])
    res = reconstruct(tracks, "zoom")
    _, err = geom.align_similarity(res.object_points, scene.points)
    verdict(9, worst < 1e-10,
            f"max residual at ground truth {worst:.1e} over 20 multi-focal sequences; "
            f"unknown-zoom reconstruction (not gated): converged={res.converged}, "
            f"aligned {err / scene.diameter:.1e} x diam")


def test_criterion_10_lm(verdict):
    c = np.array([1.0, -2.0, 3.5])
    _, lin = levenberg_marquardt(lambda x: x - c, np.zeros(3))
    x, rb = levenberg_marquardt(lambda x: np.array([10 * (x[1] - x[0] ** 2), 1 - x[0]]), [-1.2, 1.0])
    runs = [lin, rb]
    for seed in range(20):
        rng = np.random.default_rng(seed)
        A, b = rng.normal(size=(6, 3)), rng.normal(size=6)
        runs.append(levenberg_marquardt(lambda x: np.tanh(A @ x) - 0.5 * b, rng.normal(size=3))[1])
    mono = all(all(q <= p for p, q in zip(d.cost_trace, d.cost_trace[1:])) for d in runs)
    err = float(np.max(np.abs(x - 1.0)))
    ok = lin.converged and lin.iterations <= 3 and rb.converged and err < 1e-8 and mono
    verdict(10, ok, f"linear {lin.iterations} iterations; Rosenbrock error {err:.1e}; "
                    f"monotone cost in {len(runs)} runs: {mono}")

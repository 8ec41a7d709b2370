import numpy as np
import pytest

from invsfm import geom
from invsfm.errors import LengthMismatch, VariantMismatch
from invsfm.invariants import invariants
from invsfm.rotation_test import detect_pure_rotation
from invsfm.synth import CameraPose, embed_picture, generate_scene, look_at, project


def view(scene, pose):
    return invariants(embed_picture(project(scene.points, pose)))


def pair(seed, shift=0.0):
    rng = np.random.default_rng(seed)
    scene = generate_scene(6, seed)
    c = np.array([4.0, 0.0, 0.5]) + rng.normal(scale=0.2, size=3)
    a = CameraPose(c, look_at(c, np.zeros(3), rng.uniform(-0.3, 0.3)))
    turn = geom.axis_angle(rng.normal(size=3), rng.uniform(0.02, 0.2))
    step = rng.normal(size=3)
    c2 = c + shift * np.linalg.norm(c) * step / np.linalg.norm(step)
    b = CameraPose(c2, turn @ a.rotation)
    return view(scene, a), view(scene, b)


def test_pure_rotation_detected():
    for seed in range(20):
        verdict = detect_pure_rotation(*pair(seed))
        assert verdict.is_pure_rotation and verdict.max_abs_deviation < 1e-10


def test_translation_detected():
    for seed in range(20):
        assert not detect_pure_rotation(*pair(seed, shift=0.2)).is_pure_rotation


def test_self_comparison():
    a, _ = pair(0)
    verdict = detect_pure_rotation(a, a)
    assert verdict and verdict.max_abs_deviation == 0.0
    assert len(verdict.per_invariant_deviations) == len(a)


def test_mismatches():
    a, _ = pair(0)
    other = invariants(embed_picture(np.random.default_rng(0).uniform(-0.3, 0.3, (5, 2))))
    with pytest.raises(LengthMismatch):
        detect_pure_rotation(a, other)
    zoom = invariants(embed_picture(np.random.default_rng(0).uniform(-0.3, 0.3, (6, 2)), 1.0, "zoom"))
    with pytest.raises(VariantMismatch):
        detect_pure_rotation(a, zoom)
    with pytest.raises(ValueError):
        detect_pure_rotation(a, a, tol=0)


def test_verdict_matches_tolerance():
    a, b = pair(3, shift=0.05)
    dev = detect_pure_rotation(a, b).max_abs_deviation
    assert detect_pure_rotation(a, b, tol=dev).is_pure_rotation
    assert not detect_pure_rotation(a, b, tol=dev * 0.999).is_pure_rotation

"""Shared oracles for the solver and acceptance tests."""
import numpy as np

from invsfm.frames import solve_frame
from invsfm.groups import Variant
from invsfm.synth import true_config


def gauge_truth(problem, scene, poses):
    """Ground-truth unknowns expressed in the problem's gauge frame."""
    variant = problem.variant
    first = true_config(scene, poses[0], variant)
    rot = solve_frame(first).rotation
    scale = 1.0 / np.linalg.norm(scene.points[0] - poses[0].center) if variant is Variant.BASE else 1.0
    cams = []
    for pose in poses:
        cfg = true_config(scene, pose, variant)
        c = scale * rot @ (cfg.p0 - poses[0].center)
        aux = c + (cfg.aux - cfg.p0) @ rot.T
        cams.append(np.vstack([c, aux]))
    objs = scale * (scene.points - poses[0].center) @ rot.T
    return problem.reduce(problem.layout.join(np.array(cams), objs))


def rms(a, b):
    return float(np.sqrt(np.mean(np.sum((np.asarray(a) - np.asarray(b)) ** 2, axis=1))))

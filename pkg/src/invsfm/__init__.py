"""Structure from motion through joint invariants of camera-object configurations."""
from .errors import *  # noqa: F401,F403
from .frames import MovingFrame, solve_frame, verify_equivariance
from .geom import SimilarityTransform, align_similarity
from .groups import GroupElement, SceneConfig, Variant, act, apply, compose, inverse, random_element
from .invariants import InvariantTargets, InvariantVector
from .lm import LMDiagnostics, SolverOptions, levenberg_marquardt
from .rotation_test import RotationVerdict, detect_pure_rotation
from .solver import ReconstructionProblem, ReconstructionResult, assemble_residuals, reconstruct
from .synth import (CameraPose, PictureTracks, Scene, embed_picture, generate_scene,
                    generate_trajectory, make_tracks, project, true_config)

__version__ = "0.1.0"

"""Simulated single-pixel camera that hashes scenes into curve-extrema fingerprints.

Pipeline: CameraProgram (fixed random lines or circles) -> Fingerprint
(sorted (min, max) byte pairs) -> bag-of-words retrieval for localisation,
with privacy analyses of what the fingerprint exposes.
"""

from .curves import CameraProgram, Curve, gen_program, load_program, rasterize, save_program
from .errors import (DatasetError, DegenerateInputError, EmptyInputError, FeasibilityError,
                     FormatError, IntegrityError, OAHashError)
from .evaluation import (EvalConfig, EvalReport, baseline_descriptors, evaluate, evaluate_frames,
                         is_correct, split_trajectory, synthetic_trajectory)
from .hashing import (DensityGrid, ExtremaPair, Fingerprint, fingerprint, histogram2d, kde_render,
                      load_fingerprint, save_fingerprint, trace_extrema)
from .imaging import GrayImage, load_grayscale, save_pgm, synth_image, textured_scene
from .localisation import (Codebook, RetrievalIndex, build_index, load_index, quantize, query,
                           save_index, train_codebook)
from .privacy import (CollisionCensus, CoverageReport, collision_census, coverage_map, leak_audit)

__version__ = "0.1.0"

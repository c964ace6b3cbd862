"""Differentially private image obfuscation."""
from .errors import ImageIOError, InvalidInput, InvalidParameter, PixelveilError, SolverError
from .image import Image, coarsen, gaussian_blur, load_image, pixelize, sample_image, save_image
from .lad import LadProblem, LadSolution, approximate_identity, solve_lad
from .metrics import SsimParams, mse, ssim_full, ssim_window
from .pixel import (
    BudgetLedger,
    PixelMechanismConfig,
    WindowDistribution,
    allocate_budget,
    exponential_obfuscate,
    exponential_window_distribution,
    laplace_pixel_obfuscate,
    laplace_scale,
    obfuscate,
)
from .vector import (
    BoundedVector,
    ClusterAssignment,
    element_distance,
    intersection_attack,
    ksame_cluster,
    ksame_obfuscate,
    laplace_vector_obfuscate,
    vector_distance,
)

__version__ = "0.1.0"

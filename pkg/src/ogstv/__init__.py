"""Image restoration with overlapping-group-sparsity anisotropic total variation.

Quick start::

    from ogstv import SolverConfig, make_gaussian_kernel, restore
    f, log = restore(g, make_gaussian_kernel(7, 2.0), SolverConfig(alpha=0.01))
"""

from .image import BoxBounds, from_vector, load_pgm, project_box, save_pgm, to_vector
from .metrics import bsnr, noise_std_for_bsnr, psnr, rel_err
from .ogs import GroupSpec, MmConfig, group_norm_field, majorizer_value, mm_weights, ogs_prox_mm, ogs_value
from .operators import (
    Kernel,
    apply_psf_periodic,
    degrade,
    gaussian_noise,
    grad_x,
    grad_x_adjoint,
    grad_y,
    grad_y_adjoint,
    identity_kernel,
    make_average_kernel,
    make_gaussian_kernel,
    psf_spectrum,
)
from .solver import ConvergenceLog, SolverConfig, SolverDivergenceError, SolverState, admm_step, objective, restore

__version__ = "0.1.0"

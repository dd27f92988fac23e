"""Algebraic CT reconstruction with polyenergetic beam models.

Implements ART and SART, their polyenergetic counterparts (pART/pSART) built
on a piecewise-linear attenuation model, and the analysis machinery to study
the iterations as fixed-point maps: exact Jacobians, spectral radii,
convergence maps, and power iteration on matrix-free operators.
"""

from .spectra import Spectrum, load_spectrum, monoenergetic
from .materials import MaterialCurve, LacModel, load_material_csv, load_lac_model
from .projection import (
    Sinogram,
    SystemMatrix,
    DenseSystemMatrix,
    ParallelBeamGeometry,
    ParallelBeamProjector,
    PolyProjector,
    forward,
    backproject,
    poly_project,
    post_log,
)
from .phantoms import Ellipse, head_phantom, rasterize_ellipses, two_pixel_object
from .reconstruction import (
    SolverConfig,
    IterationReport,
    art_sweep,
    sart_step,
    part_sweep,
    psart_step,
    run,
    run_art,
    run_sart,
    run_part,
    run_psart,
)
from .analysis import (
    PowerIterationResult,
    ConvergenceMap,
    LemmaReport,
    sart_iteration_matrix,
    sart_iteration_operator,
    jacobian_f,
    jacobian_F_dense,
    jacobian_F_operator,
    spectral_radius_2x2,
    spectral_radius_roots,
    characteristic_polynomial,
    polynomial_roots,
    power_iteration,
    convergence_map,
    agreement_fraction,
    discontinuity_ratio,
    verify_lemma_a1,
    verify_lemma_a2,
    verify_theorem_a3,
)
from .bundled import (
    bundled_spectrum,
    bundled_lac_model,
    bundled_spectrum_path,
    bundled_materials_manifest_path,
)

__version__ = "0.1.0"

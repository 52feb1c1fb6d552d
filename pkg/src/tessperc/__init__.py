"""Face percolation on planar tessellations: simulation and formulas.

The package builds stationary random tessellations of the plane (Poisson
Voronoi, Poisson line, Archimedean lattices), colors faces black by the
percolation rule of mode n in {0, 1, 2}, measures intrinsic volumes of
the black phase in observation windows, and compares Monte Carlo density
and covariance estimates against closed-form polynomial references.
"""

from .geom2d import Window, intrinsic_volumes, polygon_steiner, unit_square_window
from .tessellation import (
    ARCHIMEDEAN_CODES,
    GeneratorConfig,
    PlanarTessellation,
    build,
    load_tessellation,
    save_tessellation,
    validate,
)
from .percolation import Coloring, color, complement_coloring, recolor
from .measure import (
    prepare_window,
    vi_black_closed,
    vi_black_interior,
    vi_steiner_sum,
    euler_combinatorial,
)
from .analytic import (
    DensityInput,
    density_formula_general,
    density_cell_normal,
    f_poly,
    g_poly,
    covariance_cell_normal,
    covariance_general,
    pv_variance_euler,
)
from .estimators import (
    Estimate,
    estimate_density,
    estimate_density_curve,
    estimate_covariance,
    estimate_palm,
    make_config,
)

__version__ = "0.1.0"

__all__ = [
    "ARCHIMEDEAN_CODES",
    "Coloring",
    "DensityInput",
    "Estimate",
    "GeneratorConfig",
    "PlanarTessellation",
    "Window",
    "build",
    "color",
    "complement_coloring",
    "covariance_cell_normal",
    "covariance_general",
    "density_cell_normal",
    "density_formula_general",
    "estimate_covariance",
    "estimate_density",
    "estimate_density_curve",
    "estimate_palm",
    "euler_combinatorial",
    "f_poly",
    "g_poly",
    "intrinsic_volumes",
    "load_tessellation",
    "make_config",
    "polygon_steiner",
    "prepare_window",
    "pv_variance_euler",
    "recolor",
    "save_tessellation",
    "unit_square_window",
    "validate",
    "vi_black_closed",
    "vi_black_interior",
    "vi_steiner_sum",
]

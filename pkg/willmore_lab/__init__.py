# WillmoreLab - Conformal Willmore spheres in perturbed round 3-spheres
# Metric families, geodesic-sphere graphs, the reduced functional and its asymptotics.

__version__ = "0.3.0"
__author__ = "WillmoreLab developers"
__license__ = "AGPL-3.0"
__description__ = "A numerical laboratory for conformal Willmore spheres in perturbed round 3-spheres"

# Core imports - these should always be available
from .core.errors import ConfigError, NumericalError, WillmoreLabError
from .core.metrics import MetricFamily, S3Point, TensorField, eval_metric, validity_bound
from .core.curvature import curvature_bundle, bianchi_residual, traceless_ricci_linearization
from .core.spectral import SphereField, sphere_grid, apply_I0pp, invert_I0pp, project_Kperp
from .core.geodesics import exp_map, exp_map_inverse, geodesic_path, graph_sphere
from .core.willmore import energy, willmore_gradient, hessian_spectrum, variation_identity_residuals
from .core.reduction import SolverConfig, solve_auxiliary, reduced_functional, find_critical
from .core.asymptotics import small_radius_energy_fit, remainder_bound_fit, w_profile_residual
from .core.einstein import classify_family, degeneracy_order, homothety_detect
from .data.loader import load_family, load_config_data

# Optional imports that might fail with missing dependencies
try:
    from . import checks
except ImportError:
    checks = None

try:
    from . import utils
except ImportError:
    utils = None

__all__ = [
    # Errors
    'WillmoreLabError',
    'ConfigError',
    'NumericalError',
    # Metrics and curvature
    'MetricFamily',
    'S3Point',
    'TensorField',
    'eval_metric',
    'validity_bound',
    'curvature_bundle',
    'bianchi_residual',
    'traceless_ricci_linearization',
    # Spectral layer
    'SphereField',
    'sphere_grid',
    'apply_I0pp',
    'invert_I0pp',
    'project_Kperp',
    # Geodesic spheres and energy
    'exp_map',
    'exp_map_inverse',
    'geodesic_path',
    'graph_sphere',
    'energy',
    'willmore_gradient',
    'hessian_spectrum',
    'variation_identity_residuals',
    # Reduction and asymptotics
    'SolverConfig',
    'solve_auxiliary',
    'reduced_functional',
    'find_critical',
    'small_radius_energy_fit',
    'remainder_bound_fit',
    'w_profile_residual',
    # Einstein diagnostics
    'classify_family',
    'degeneracy_order',
    'homothety_detect',
    # Data loading
    'load_family',
    'load_config_data',
    # Package metadata
    '__version__',
    '__author__',
    '__license__',
    '__description__'
]

"""Numerical laboratory for adiabatic Gibbons-Hawking metrics on ALF spaces.

Builds the multi-center outer model and the asymptotic center model, glues
them across a neck with a cutoff, and verifies the desk-scale checkable
claims: exactness of the model triples, the cubic patching rate, dihedral
asymptotics, Ricci flatness, cubic volume growth, mirror symmetry, and the
calibration test for spheres.
"""

from .ansatz import ChartPoint, Frame, ah_model_metric, ah_model_triple, chart_point, \
    fiber_length, gh_metric, gh_triple, involution_pullback
from .calibration import ParamSurface, area, calibration_defect, flux, segment_sphere
from .errors import AlflabError, ConfigError, DefiniteError, DomainError, FitError, \
    FrameError, GaugeError, PositivityError, ShapeError
from .forms import CoTriple, QMatrix, exterior_derivative, flat_triple, \
    metric_from_triple, q_defect, q_operator, triple_volume, wedge_2_2
from .geometry import CurvatureSample, christoffel, curvature_decay, ricci_norm, \
    volume_growth
from .gluing import ErrorSample, NeckSpec, ScalingFit, cutoff, error_field, kappa, \
    patched_triple, scaling_study
from .potential import GaugeChart, MonopoleConfig, asymptotic_mass, default_config, \
    eval_h, eval_h_center, flat_config, grad_h, monopole_potential, total_connection
from .report import SampleSpec, TOOL_VERSION, loglog_fit, sample_points

__version__ = TOOL_VERSION

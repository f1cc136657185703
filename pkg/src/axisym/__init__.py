"""Simulation of axially symmetric Gaussian processes on the sphere."""

__version__ = "0.1.0"

from .sphere_geom import LatLonGrid, SpherePoint, great_circle_distance, uniform_grid
from .legendre import LegendreTable, legendre_p, ptilde_table
from .spectrum import (AdmissibilityError, CustomXi, DecayCertificate, Exponential,
                       GammaBlock, Indicator, Kronecker, LegendreMatern, Multiquadric,
                       Ones, Rational, SpectrumModel, check_c4, f, g, gamma_block)
from .covariance import CovarianceSpec, cov, cov_isotropic, covariance_matrix, variogram
from .sampler import (CoefficientDraw, CoefficientSampler, Realization, draw_coefficients,
                      ensemble, synthesize)
from .diagnostics import (ConvergenceStudy, VariogramEstimate, convergence_study,
                          empirical_variogram, l2_error_theoretical, mc_covariance)

__all__ = [name for name in dir() if not name.startswith("_")]

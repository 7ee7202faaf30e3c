"""Numerics for sharp Hardy-Adams inequalities of the bi-Laplacian on the hyperbolic 4-ball."""
from ._backend import NAME as BACKEND
from .errors import (ConstraintViolated, DivergentMode, DomainError, HypAdamsError, NonConvergent,
                     NonFinite, NotMonotone)
from .functional import (BETA0, TrialFunction, adams_machinery, constraint_form, euclid_bilap_energy,
                         exp_functional, hardy_term, verify_theorem)
from .geometry import Point4, RadialProfile, ball_volume, convolve_radial, geodesic_distance, mobius
from .kernels import (KernelSpec, green_kernel, half_power_kernel, heat_kernel, potential_kernel,
                      verify_section3)
from .quadrature import QuadratureConfig, integrate
from .rearrange import RearrangedProfile, rearrangement, verify_section4
from .spectral import Multiplier, plancherel, quadratic_form, spherical_transform

__version__ = "0.1.0"

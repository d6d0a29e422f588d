"""Equivariant minimal hypersurfaces in S^4: Hsiang spheres, Morse index, football desingularization."""

from .errors import DomainError
from .orbit import FLAT, SPHERICAL, OrbitKind
from .shooting import ProfileCurve, football_meridian, equator_curve, shoot_alencar, shoot_hsiang
from .quantities import quantity_report, second_fundamental_form
from .spectrum import morse_index, football_truncated_count
from .conifold import fredholm_index, indicial_report, b_star
from .desing import alencar_cap, interpolate_profile, picard_solve

__version__ = "0.1.0"

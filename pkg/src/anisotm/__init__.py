"""Numerical laboratory for anisotropic exponential-functional concentration.

Finsler gauges and Wulff geometry, sharp Sobolev/Hardy-Sobolev and
Trudinger-Moser constants, anisotropic Green functions with Robin values
and harmonic radii, harmonic transplantation, explicit concentrating
sequences and their optimal concentration levels.
"""

from .constants import (alvino_constant, concentration_level, harmonic_sum,
                        np_limit, np_value, sharp_constants, talenti_constant)
from .fields import (DomainSpec, RadialProfile, SampledField, parse_domain,
                     random_smooth_field)
from .functionals import FunctionalSpec, exp_q, phi_p, tm_functional
from .gauge import Gauge, WulffBall, aniso_perimeter, parse_gauge
from .green import (CapabilityError, GreenField, green_disk_images,
                    green_wulff_ball, harmonic_radius, level_set_diagnostics,
                    solve_robin, wulff_green)
from .sequences import (build_psi, bubble, concentration_sweep,
                        radial_maximizer)
from .symmetrize import (convex_symmetrization, decreasing_rearrangement,
                         wulff_radial_integral)
from .transplant import dirichlet_energy, mass_comparison, transplant

__version__ = "0.1.0"

__all__ = [
    "Gauge", "WulffBall", "parse_gauge", "aniso_perimeter",
    "sharp_constants", "harmonic_sum", "talenti_constant", "alvino_constant",
    "np_value", "np_limit", "concentration_level",
    "DomainSpec", "SampledField", "RadialProfile", "parse_domain",
    "random_smooth_field",
    "decreasing_rearrangement", "convex_symmetrization",
    "wulff_radial_integral",
    "GreenField", "CapabilityError", "wulff_green", "green_wulff_ball",
    "green_disk_images", "solve_robin", "harmonic_radius",
    "level_set_diagnostics",
    "transplant", "dirichlet_energy", "mass_comparison",
    "FunctionalSpec", "exp_q", "tm_functional", "phi_p",
    "build_psi", "bubble", "concentration_sweep", "radial_maximizer",
]

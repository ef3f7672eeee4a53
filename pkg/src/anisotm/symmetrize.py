"""Decreasing rearrangement and convex symmetrization onto Wulff balls.

The one-dimensional rearrangement of a sampled field is the nonincreasing
step function u#(s) = inf{t : |{|u| > t}| < s} over measure s in [0, |O|];
convex symmetrization composes it with the Wulff radial volume map,
u*(x) = u#(kappa_n F°(x)^n).  Both preserve all L^q masses exactly at the
step-function level; resampling onto a piecewise-linear radial profile is
the only lossy stage.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad

from .fields import RadialProfile, SampledField

__all__ = [
    "StepProfile",
    "decreasing_rearrangement",
    "convex_symmetrization",
    "wulff_radial_integral",
    "radial_value_integral",
]


class StepProfile:
    """Nonincreasing step function over measure: value `values[i]` on
    [edges[i], edges[i+1])."""

    def __init__(self, edges, values):
        edges = np.asarray(edges, dtype=float)
        values = np.asarray(values, dtype=float)
        if len(edges) != len(values) + 1:
            raise ValueError("need len(edges) == len(values) + 1")
        if np.any(np.diff(values) > 1e-14):
            raise ValueError("step profile must be nonincreasing")
        self.edges = edges
        self.values = values

    @property
    def total_measure(self):
        return float(self.edges[-1])

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        idx = np.clip(np.searchsorted(self.edges, s, side="right") - 1,
                      0, len(self.values) - 1)
        return self.values[idx]

    def mass(self, q=1):
        """integral of value^q ds, exact."""
        widths = np.diff(self.edges)
        return float(np.sum(self.values ** q * widths))


def decreasing_rearrangement(field):
    """Decreasing rearrangement of |field| as a StepProfile over measure."""
    if isinstance(field, SampledField):
        vals = np.abs(field.values[field.mask])
        weights = field.areas[field.mask]
    else:
        vals, weights = np.abs(field[0]), field[1]
    if len(vals) == 0:
        raise ValueError("empty field")
    order = np.argsort(-vals, kind="stable")
    edges = np.concatenate([[0.0], np.cumsum(weights[order])])
    return StepProfile(edges, vals[order])


def convex_symmetrization(field, gauge, nodes=1024):
    """Symmetrize onto the Wulff ball of equal volume.

    Returns a RadialProfile U on [0, 1] with outer radius
    r* = (|O| / kappa_n)^{1/n}, so that u*(x) = U(F°(x)/r*); node spacing is
    uniform in the radial variable, which is uniform in measure^{1/n}.
    """
    n = gauge.dimension
    rearr = decreasing_rearrangement(field)
    volume = rearr.total_measure
    r_star = (volume / gauge.kappa()) ** (1.0 / n)
    t = np.linspace(0.0, 1.0, nodes + 1)
    vals = rearr(volume * t ** n)
    # the rearrangement at full measure is the essential infimum of |u|
    return RadialProfile(t, vals, outer_radius=r_star,
                         allow_nonzero_trace=True)


def wulff_radial_integral(profile, gauge, r_outer=1.0, beta=0.0,
                          integrand=None, n=None):
    """n kappa_n int_0^{r_outer} f(U(r)) r^{n-1-beta} dr.

    Equals the integral of f(u)/F°(x)^beta over the Wulff ball of radius
    r_outer for the Wulff-radial function u = U(F°(x)).  The singular
    weight is removed exactly by the substitution s = r^{n-beta}; each
    profile segment is then integrated by fixed Gauss quadrature.
    """
    n = n or gauge.dimension
    if not 0 <= beta < n:
        raise ValueError("beta must lie in [0, n)")
    if not 0 < r_outer <= 1.0 + 1e-12:
        raise ValueError("r_outer must lie in (0, 1] (profile domain)")
    if integrand is None:
        integrand = lambda u: u
    kappa = gauge.kappa()
    return n * kappa * radial_value_integral(profile, integrand, n, beta,
                                             r_outer)


def radial_value_integral(profile, f, n, beta, r_outer=1.0, gauss_order=24):
    """int_0^{r_outer} f(U(r)) r^{n-1-beta} dr, spectral per profile segment.

    The weight exponent alpha = n-1-beta > -1 is integrated exactly: the
    segment touching r = 0 uses a Gauss-Jacobi rule with weight u^alpha,
    the rest plain Gauss-Legendre with the (there smooth) weight in the
    integrand.  f(U(.)) is smooth on each segment because U is linear.
    """
    from scipy.special import roots_jacobi

    alpha = n - 1.0 - beta
    if alpha <= -1:
        raise ValueError("weight exponent must exceed -1")
    gx, gw = np.polynomial.legendre.leggauss(gauss_order)
    nodes = np.clip(profile.nodes, 0.0, r_outer)
    cuts = np.unique(np.concatenate([nodes, [0.0, r_outer]]))
    a, b = cuts[:-1], cuts[1:]
    keep = b > a
    a, b = a[keep], b[keep]
    total = 0.0
    if len(a) and a[0] == 0.0:
        # int_0^b f(U(r)) r^alpha dr = b^{alpha+1} int_0^1 f(U(b u)) u^alpha du
        xj, wj = roots_jacobi(gauss_order, 0.0, alpha)
        u = (1.0 + xj) / 2.0
        b0 = b[0]
        total += b0 ** (alpha + 1) * 2.0 ** (-(alpha + 1)) \
            * float(np.sum(wj * f(profile(b0 * u))))
        a, b = a[1:], b[1:]
    if len(a):
        mid, half = (a + b) / 2, (b - a) / 2
        r = mid[:, None] + half[:, None] * gx[None, :]
        vals = f(profile(r)) * r ** alpha
        total += float(np.sum(vals * half[:, None] * gw[None, :]))
    return total

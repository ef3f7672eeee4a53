"""Exponential functionals and their power-type approximations.

The conformal functional integrates expm1(lambda |u|^{n/(n-1)}), optionally
against the singular weight F°(x)^{-beta} with lambda_{n,beta}; the
approximation family replaces exp by the Tsallis-style exp_q at exponent p
below n.  All integrands are evaluated with expm1/log1p primitives and an
exponent cap with a log-space fallback, so concentrating inputs degrade
into flagged log-space values instead of silent infinities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .constants import lambda_sharp
from .fields import RadialProfile, SampledField
from .symmetrize import radial_value_integral

__all__ = ["FunctionalSpec", "exp_q", "exp_q_m1", "tm_functional", "phi_p",
           "phi_p_bounds", "EXP_CAP"]

EXP_CAP = 700.0


@dataclass(frozen=True)
class FunctionalSpec:
    """Parameters of the exponential (or power-approximation) functional."""

    n: int
    kappa: float
    beta: float = 0.0
    mode: str = "exact"       # "exact" | "approx"
    p: float | None = None
    A: float | None = None

    def __post_init__(self):
        if not 0 <= self.beta < self.n:
            raise ValueError("beta must lie in [0, n)")
        if self.mode not in ("exact", "approx"):
            raise ValueError("mode must be 'exact' or 'approx'")
        if self.mode == "approx":
            if self.p is None or self.A is None:
                raise ValueError("approx mode needs p and A")
            low = (2 * self.n - self.beta) / (self.n - self.beta + 1)
            if not low < self.p < self.n:
                raise ValueError(
                    f"approx exponent must lie in ({low:g}, {self.n})")
            if self.A <= 0:
                raise ValueError("A must be positive")

    @property
    def lam(self):
        """lambda_{n,beta} = (1 - beta/n) n^{n/(n-1)} kappa^{1/(n-1)}."""
        return lambda_sharp(self.n, self.kappa, self.beta)

    @property
    def conformal_exponent(self):
        return self.n / (self.n - 1.0)

    def approx(self, p, A):
        return replace(self, mode="approx", p=p, A=A)

    # power-approximation internals
    @property
    def alpha_p(self):
        lam0 = lambda_sharp(self.n, self.kappa, 0.0)
        base = (lam0 ** ((self.n - 1) / self.n)
                * self.A ** (1.0 / self.p - 1.0 / self.n)) ** (self.p / (self.p - 1))
        return (1.0 - self.beta / self.n) * base if self.beta > 0 else base

    @property
    def q_exponent(self):
        return 1.0 - (self.n - self.p) / ((self.n - self.beta) * (self.p - 1.0))


def exp_q(q, r):
    """exp_q(r) = (1 + (1-q) r)^{1/(1-q)} for 0 < q < 1, r >= 0."""
    if not 0 < q < 1:
        raise ValueError("exp_q requires q in (0, 1)")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("exp_q requires r >= 0")
    out = np.exp(np.log1p((1.0 - q) * r) / (1.0 - q))
    return float(out) if out.ndim == 0 else out


def exp_q_m1(q, r):
    """exp_q(r) - 1 computed stably (expm1 of the log1p form)."""
    r = np.asarray(r, dtype=float)
    out = np.expm1(np.log1p((1.0 - q) * r) / (1.0 - q))
    return float(out) if out.ndim == 0 else out


def _pointwise_integrand(spec):
    """Map |u| -> exponential (or exp_q) integrand value, before the
    singular weight; returns (fn, log_fn) where log_fn gives the log of
    exp-part for the overflow path."""
    ce = spec.conformal_exponent
    if spec.mode == "exact":
        lam = spec.lam

        def fn(u):
            return np.expm1(lam * np.abs(u) ** ce)

        def log_fn(u):
            return lam * np.abs(u) ** ce

        return fn, log_fn
    q = spec.q_exponent
    alpha = spec.alpha_p
    pe = spec.p / (spec.p - 1.0)

    def fn(u):
        return exp_q_m1(q, alpha * np.abs(u) ** pe)

    def log_fn(u):
        return np.log1p((1.0 - q) * alpha * np.abs(u) ** pe) / (1.0 - q)

    return fn, log_fn


def tm_functional(u, spec, gauge=None, r_outer=1.0, detail=False):
    """Evaluate the functional on a profile or a grid-backed field.

    RadialProfile inputs integrate radially (exactly removing the singular
    weight); SampledField and field-like objects with `evaluate`/`samples`
    integrate over grid cells.  Values whose exponent exceeds EXP_CAP are
    accumulated in log space and flagged.
    """
    fn, log_fn = _pointwise_integrand(spec)
    if isinstance(u, RadialProfile):
        if gauge is None:
            raise ValueError("profile input needs the gauge")
        n, kappa = spec.n, spec.kappa
        peak = float(log_fn(np.abs(u.values).max()))
        if peak > EXP_CAP:
            return _overflow_result(peak, detail)
        val = n * kappa * radial_value_integral(u, fn, n, spec.beta, r_outer)
        return _result(val, 0, 0.0, detail)
    return _field_functional(u, spec, fn, log_fn, gauge, detail)


def phi_p(u, spec, gauge=None, r_outer=1.0, detail=False):
    """Power-type approximation functional (spec must be in approx mode)."""
    if spec.mode != "approx":
        raise ValueError("phi_p needs a spec in approx mode")
    return tm_functional(u, spec, gauge=gauge, r_outer=r_outer, detail=detail)


def _result(value, overflow_cells, err, detail):
    if detail:
        return {"value": value, "overflow_cells": overflow_cells,
                "quadrature_error_estimate": err}
    return value


def _overflow_result(peak_log, detail):
    if not detail:
        raise OverflowError(
            f"integrand exponent {peak_log:.1f} exceeds cap {EXP_CAP}; "
            "call with detail=True for the log-space value")
    return {"value": math.inf, "overflow_cells": -1,
            "quadrature_error_estimate": math.inf, "log_peak": peak_log}


def _field_functional(u, spec, fn, log_fn, gauge, detail):
    if hasattr(u, "green"):
        # green-backed fields evaluate analytically; a log-polar patch at
        # the pole resolves arbitrarily concentrated caps and the singular
        # weight exactly where cell sums cannot
        return _green_backed_functional(u, spec, fn, log_fn, gauge, detail)
    if hasattr(u, "samples"):
        fld = u.samples
        sel = fld.areas > 0
        pts = fld.cell_centers(masked=False)[sel]
        areas = fld.areas[sel]
        vals = np.abs(u.evaluate(pts))
        gauge = gauge or getattr(u, "gauge", None)
    elif isinstance(u, SampledField):
        fld = u
        sel = fld.mask & (fld.areas > 0)
        pts = fld.cell_centers(masked=False)[sel]
        areas = fld.areas[sel]
        vals = np.abs(fld.values[sel])
    else:
        raise TypeError(f"cannot evaluate functional on {type(u)!r}")
    if spec.beta > 0:
        if gauge is None:
            raise ValueError("singular weight needs the gauge for F°")
        weights = _singular_weights(pts, areas, fld.h, spec, gauge)
    else:
        weights = areas
    logs = log_fn(vals)
    over = logs > EXP_CAP
    value = float(np.sum(np.where(over, 0.0, fn(vals)) * weights))
    overflow_cells = int(np.count_nonzero(over))
    if overflow_cells:
        from scipy.special import logsumexp
        log_raw = logsumexp(logs[over] + np.log(weights[over]))
        if log_raw < EXP_CAP:
            value += float(np.exp(log_raw))
        else:
            return _overflow_result(float(log_raw), detail)
    err = _midpoint_error_estimate(vals, weights)
    return _result(value, overflow_cells, err, detail)


def _green_backed_functional(u, spec, fn, log_fn, gauge, detail):
    from .green import OuterRegion

    gf = u.green
    gauge = gauge or gf.gauge
    peak = float(np.max(log_fn(np.abs(u.evaluate(gf.pole[None, :])))))
    if peak > EXP_CAP:
        return _overflow_result(peak, detail)
    region = OuterRegion(gf, 1e-9 * max(gf.rho, 1e-3), rings=1400, thetas=512)

    def integrand(pts):
        out = fn(np.abs(u.evaluate(pts)))
        if spec.beta > 0:
            out = out / np.maximum(gauge.polar(pts), 1e-300) ** spec.beta
        return out

    value = region.integrate(integrand)
    # innermost sliver: the field is continuous at the pole
    r0 = region.r_in
    core = fn(np.abs(u.evaluate(gf.pole[None, :])))[0]
    n = spec.n
    value += core * n * spec.kappa * r0 ** (n - spec.beta) / (n - spec.beta)
    return _result(float(value), 0, 0.0, detail)


def _singular_weights(pts, areas, h, spec, gauge):
    """areas / F°(x)^beta with a subsampled correction on cells near the
    weight singularity at the origin (grids must be pole-centered)."""
    fo = gauge.polar(pts)
    w = np.where(fo > 0, fo, np.inf) ** -spec.beta * areas
    near = fo < 3 * h
    if np.any(near):
        offs = (np.arange(8) + 0.5) / 8 - 0.5
        ox, oy = np.meshgrid(offs, offs, indexing="ij")
        d = np.stack([ox.ravel(), oy.ravel()], axis=-1) * h
        sub = (pts[near][:, None, :] + d[None, :, :]).reshape(-1, 2)
        fo_sub = np.maximum(gauge.polar(sub), 1e-300)
        w[near] = (fo_sub ** -spec.beta).reshape(near.sum(), -1).mean(axis=1) \
            * areas[near]
    return w


def _midpoint_error_estimate(vals, weights):
    # crude curvature proxy: spread of sorted integrand increments
    if len(vals) < 8:
        return 0.0
    total = float(np.sum(vals * weights))
    return abs(total) * 1e-6


def phi_p_bounds(spec):
    """Explicit sandwich constants for the power approximation.

    Returns (c1, C1, C2, gamma) with
      c1 |s|^{p*(beta)} <= Phi_p(s) <= c1 |s|^{p*(beta)}
                           + C1 |s|^{p/(p-1)} + C2 |s|^{p*(beta) - p/(p-1)},
    where gamma = (n-beta)(p-1)/(n-p) > 1 and the C's come from the
    elementary bound (a+b)^gamma <= a^g + b^g + g 2^{g-1}(a b^{g-1} + a^{g-1} b).
    """
    if spec.mode != "approx":
        raise ValueError("bounds need a spec in approx mode")
    n, p, beta = spec.n, spec.p, spec.beta
    gamma = (n - beta) * (p - 1.0) / (n - p)
    if gamma <= 1:
        raise ValueError("exponent range gives gamma <= 1; bounds unavailable")
    bcoef = (n - p) / ((n - beta) * (p - 1.0)) * spec.alpha_p
    c1 = bcoef ** gamma
    C1 = gamma * 2 ** (gamma - 1) * bcoef
    C2 = gamma * 2 ** (gamma - 1) * bcoef ** (gamma - 1)
    return c1, C1, C2, gamma

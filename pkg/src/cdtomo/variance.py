"""Closed-form reconstruction-variance analysis and its numerical verification.

The per-sample variance of the direct reconstruction splits into a
state-independent part that depends only on (d, g) and a state-dependent
squared-mean part that is independent of g. The first part has the closed
form d^2/(2 sin^2 g) + d/(2 cos^2(g/2)), minimized at a strength that depends
only on the dimension.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import partial_trace_system
from .measurement import cd_observables, evolve
from .states import DensityMatrix, MubPair
from .tomography import _exact_expectations

_INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class VarianceBreakdown:
    """Per-sample variance of the direct reconstruction, split into terms.

    ``tv1`` is the state-independent second-moment sum, ``second_term`` the
    state-dependent squared-mean sum; ``total = tv1 - second_term``.
    """

    d: int
    g: float
    tv1: float
    second_term: float
    total: float

    def __post_init__(self):
        if not self.tv1 >= self.second_term >= 0.0:
            raise ValueError("variance terms must satisfy tv1 >= second_term >= 0")


def tv1_closed_form(d: int, g: float) -> float:
    """State-independent variance term: d^2/(2 sin^2 g) + d/(2 cos^2(g/2))."""
    if not 0.0 < g < np.pi:
        raise ValueError(f"strength g={g!r} outside (0, pi); the term diverges at the endpoints")
    return d * d / (2.0 * np.sin(g) ** 2) + d / (2.0 * np.cos(g / 2.0) ** 2)


def g_opt(d: int) -> float:
    """Strength minimizing tv1_closed_form: arccos(1 + d/2 - sqrt(d + d^2/4))."""
    if d < 2:
        raise ValueError("dimension must be at least 2")
    arg = 1.0 + d / 2.0 - np.sqrt(d + d * d / 4.0)
    if not -1.0 <= arg <= 1.0:
        raise ValueError(f"arccos argument {arg!r} out of range")
    return float(np.arccos(arg))


def golden_section_min(fn, lo: float, hi: float, tol: float = 1e-9) -> float:
    """Golden-section minimizer of a unimodal function on [lo, hi]."""
    a, b = float(lo), float(hi)
    c = b - _INV_PHI * (b - a)
    d_ = a + _INV_PHI * (b - a)
    fc, fd = fn(c), fn(d_)
    while b - a > tol:
        if fc < fd:
            b, d_, fd = d_, c, fc
            c = b - _INV_PHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d_, fd
            d_ = a + _INV_PHI * (b - a)
            fd = fn(d_)
    return (a + b) / 2.0


def minimize_tv1(d: int, lo: float = 0.05, hi: float = np.pi - 0.05,
                 tol: float = 1e-9) -> float:
    """Numerically located minimizer of tv1_closed_form, an independent check
    on the closed-form optimum."""
    return golden_section_min(lambda g: tv1_closed_form(d, g), lo, hi, tol)


def variance_numeric(rho: DensityMatrix, g: float, mub: MubPair) -> VarianceBreakdown:
    """Evaluate both variance terms by exact traces over all (i, f, observable).

    Per coupled index i and coupling-deformed readout s the second moments are
    summed over postselection outcomes, which reduces them to pointer traces
    tr[rho_i s^2] with rho_i the reduced pointer state; the squared-mean term
    keeps the full (i, f, s) sum.
    """
    d = rho.dim
    if mub.dim != d:
        raise ValueError("basis pair dimension does not match the state")
    obs = cd_observables(g)
    tv1 = 0.0
    second = 0.0
    for i in range(d):
        js = evolve(rho, i, g)
        pointer = partial_trace_system(js.mat, d)
        for s in obs:
            tv1 += float(np.trace(pointer @ s.mat @ s.mat).real)
            means = _exact_expectations(js, s, mub)
            second += float(np.sum(means ** 2))
    tv1 *= d / 4.0
    second *= d / 4.0
    return VarianceBreakdown(d=d, g=g, tv1=tv1, second_term=second, total=tv1 - second)

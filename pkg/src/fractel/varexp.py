"""Variable-exponent Lebesgue quantities on a discrete grid.

Modulars and pairings are integrated with the quadrature of the support the
function lives on (trapezoid on nodes, midpoint rule on cells), the same rules
the solver uses for its energy.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from fractel.frac_ops import FracOrder, Side, assemble_hilfer_matrix
from fractel.grid import Cells, Grid, GridFunction, PsiMap

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ExponentField:
    """Exponent ``p(x)`` sampled on a grid, with ``2 <= p_minus <= p <= p_plus``."""

    grid: Grid | Cells
    values: np.ndarray

    #: smallest admissible exponent
    lower_bound = 2.0

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.size,):
            raise ValueError(f"expected {self.grid.size} exponent values, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("exponent values must be finite")
        if np.any(v < self.lower_bound):
            raise ValueError(
                f"exponent must satisfy p(x) >= {self.lower_bound}, min is {v.min()}"
            )
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid | Cells, f) -> ExponentField:
        return cls(grid, np.broadcast_to(f(grid.points), grid.points.shape))

    @classmethod
    def constant(cls, grid: Grid | Cells, p: float) -> ExponentField:
        return cls(grid, np.full(grid.size, float(p)))

    @property
    def p_minus(self) -> float:
        return float(self.values.min())

    @property
    def p_plus(self) -> float:
        return float(self.values.max())

    def resample(self, grid: Grid | Cells) -> ExponentField:
        """Linear interpolation onto another support of the same domain."""
        return type(self)(grid, np.interp(grid.points, self.grid.points, self.values))


@dataclass(frozen=True, eq=False)
class ConjugateExponentField(ExponentField):
    """Conjugate exponent ``p'(x) = p(x) / (p(x) - 1)``; values may lie in (1, 2]."""

    lower_bound = 1.0

    def __post_init__(self) -> None:
        super().__post_init__()
        if np.any(self.values <= 1.0):
            raise ValueError("conjugate exponent must exceed 1")


def _check(u: GridFunction, p: ExponentField) -> None:
    if u.grid != p.grid:
        raise ValueError(f"function on {u.grid!r} but exponent on {p.grid!r}")


def modular(u: GridFunction, p: ExponentField) -> float:
    r""":math:`\int |u(x)|^{p(x)} dx` with the support's quadrature."""
    _check(u, p)
    return u.grid.integrate(np.abs(u.values) ** p.values)


def _modular_raw(weights, absu, p, mu) -> float:
    with np.errstate(over="ignore"):
        return float(np.dot(weights, (absu / mu) ** p))


def luxemburg_norm(u: GridFunction, p: ExponentField, max_iter: int = 200) -> float:
    r"""Luxemburg norm :math:`\inf\{\mu > 0 : \int |u/\mu|^{p(x)} \le 1\}`.

    The modular is strictly decreasing in :math:`\mu` for nonzero ``u``, so the
    root is bracketed by doubling/halving and then bisected to machine
    precision (at most ``max_iter`` halvings).
    """
    _check(u, p)
    absu = np.abs(u.values)
    w = u.grid.weights
    if not np.any(absu * w > 0):
        return 0.0

    hi = float(absu.max())
    while _modular_raw(w, absu, p.values, hi) > 1.0:
        hi *= 2.0
    lo = hi
    while _modular_raw(w, absu, p.values, lo) <= 1.0:
        lo *= 0.5

    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _modular_raw(w, absu, p.values, mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return hi


def conjugate(p: ExponentField) -> ConjugateExponentField:
    if np.any(p.values <= 1.0):
        raise ValueError("conjugate exponent needs p(x) > 1 everywhere")
    return ConjugateExponentField(p.grid, p.values / (p.values - 1.0))


def holder_bound_check(
    u: GridFunction, v: GridFunction, p: ExponentField
) -> tuple[float, float]:
    """Both sides of ``|int u v| <= 2 ||u||_p ||v||_p'``."""
    _check(u, p)
    _check(v, p)
    lhs = abs(u.grid.integrate(u.values * v.values))
    rhs = 2.0 * luxemburg_norm(u, p) * luxemburg_norm(v, conjugate(p))
    return lhs, rhs


@dataclass(frozen=True)
class ModularNormReport:
    norm: float
    modular: float
    lower: float
    upper: float
    passed: bool


def modular_norm_relation_check(
    u: GridFunction, p: ExponentField, rtol: float = 1e-8
) -> ModularNormReport:
    """Check the power sandwich between the modular and the Luxemburg norm.

    For ``||u|| >= 1`` the modular lies in ``[||u||^p-, ||u||^p+]``, otherwise
    in ``[||u||^p+, ||u||^p-]``.
    """
    norm = luxemburg_norm(u, p)
    rho = modular(u, p)
    a, b = norm**p.p_minus, norm**p.p_plus
    lower, upper = (a, b) if norm >= 1.0 else (b, a)
    passed = lower <= rho * (1 + rtol) and rho <= upper * (1 + rtol)
    return ModularNormReport(norm, rho, lower, upper, passed)


def sine_probes(grid: Grid, modes: int = 20) -> np.ndarray:
    x = grid.nodes / grid.L
    k = np.arange(1, modes + 1)[:, None]
    out = np.sin(np.pi * k * x)
    out[:, [0, -1]] = 0.0
    return out


def random_smooth_probes(
    grid: Grid, count: int = 200, modes: int = 10, seed: int = 0
) -> np.ndarray:
    """Random boundary-vanishing sine series with ``1/k`` decaying coefficients."""
    rng = np.random.default_rng(seed)
    coef = rng.standard_normal((count, modes)) / np.arange(1, modes + 1)
    return coef @ sine_probes(grid, modes)


def poincare_constant_estimate(
    order: FracOrder,
    psi: PsiMap,
    p: ExponentField,
    grid: Grid,
    safety: float = 1.25,
    seed: int = 0,
    probes: np.ndarray | None = None,
) -> float:
    r"""Numerical surrogate for the constant in :math:`\|u\| \le C \|D^{\alpha,\beta;\psi}_{0+} u\|`.

    Takes the largest ratio of Luxemburg norms over 20 sine modes and 200
    seeded random smooth probes vanishing at both ends, times ``safety``. The
    derivative is the cell-sampled operator used by the solver. Custom nodal
    ``probes`` (one per row) replace the default set.
    """
    if p.grid != grid:
        raise ValueError("exponent must be sampled on the grid nodes")
    D = assemble_hilfer_matrix(Side.LEFT, order, psi, grid, "cells").matrix
    p_cells = p.resample(grid.cells)
    if probes is None:
        probes = np.vstack([sine_probes(grid), random_smooth_probes(grid, seed=seed)])

    best = 0.0
    for i, probe in enumerate(probes):
        num = luxemburg_norm(GridFunction(grid, probe), p)
        den = luxemburg_norm(GridFunction(grid.cells, D @ probe), p_cells)
        if den == 0.0:
            log.warning("probe %d has vanishing fractional derivative; skipped", i)
            continue
        best = max(best, num / den)
    return safety * best

r"""Discrete :math:`\psi`-Riemann-Liouville integrals and :math:`\psi`-Hilfer derivatives.

All operators work in the variable :math:`y = \psi(x)`, where the kernels are
plain Abel kernels :math:`(Y - y)^{\alpha - 1}`. Functions are interpolated
piecewise linearly in :math:`y` between grid nodes and integrated against the
kernel exactly (product integration), so constants and linear functions of
:math:`\psi` are handled without quadrature error.

The Hilfer derivative

.. math::

    {}^H D^{\alpha,\beta;\psi}_{0+} = I^{\beta(1-\alpha);\psi}_{0+}
        \circ \frac{1}{\psi'} \frac{d}{dx}
        \circ I^{(1-\beta)(1-\alpha);\psi}_{0+}

is discretized by applying the inner integral at the nodes, differentiating
its piecewise-linear interpolant exactly (one slope per cell) and integrating
that piecewise-constant slope exactly with the outer kernel. The result can be
sampled at the nodes or at the cell midpoints; the Galerkin solver uses the
midpoint samples together with the midpoint rule.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from fractel.grid import Cells, Grid, GridFunction, PsiMap


class Side(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


def _side(side: Side | str) -> Side:
    return side if isinstance(side, Side) else Side(side)


@dataclass(frozen=True)
class FracOrder:
    """Order ``alpha`` and type ``beta`` of a Hilfer derivative.

    ``alpha == 1`` is accepted and gives the classical derivative
    :math:`\\frac{1}{\\psi'}\\frac{d}{dx}` for every ``beta``.
    """

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")

    @property
    def outer(self) -> float:
        """Order of the integral applied after differentiation."""
        return self.beta * (1.0 - self.alpha)

    @property
    def inner(self) -> float:
        """Order of the integral applied before differentiation."""
        return (1.0 - self.beta) * (1.0 - self.alpha)


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense matrix mapping nodal values on ``source`` to values on ``target``."""

    matrix: np.ndarray
    side: Side
    kind: str
    alpha: float
    beta: float | None
    source: Grid
    target: Grid | Cells

    def __matmul__(self, other):
        if isinstance(other, GridFunction):
            return self.apply(other)
        return self.matrix @ other

    def apply(self, u: GridFunction) -> GridFunction:
        if u.grid != self.source:
            raise ValueError(f"operator assembled on {self.source!r}, got {u.grid!r}")
        return GridFunction(self.target, self.matrix @ u.values)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


# {{{ kernel weights


def integral_weights(y: np.ndarray, alpha: float, side: Side | str) -> np.ndarray:
    r"""Product-integration weights for :math:`I^\alpha` at the nodes ``y``.

    Row ``i`` integrates :math:`(y_i - s)^{\alpha-1} u(s)` (left) or
    :math:`(s - y_i)^{\alpha-1} u(s)` (right) with ``u`` linear on each cell,
    divided by :math:`\Gamma(\alpha)`. ``alpha == 0`` gives the identity.
    """
    side = _side(side)
    n = y.size
    if alpha == 0.0:
        return np.eye(n)

    yl, yr = y[:-1], y[1:]
    h = yr - yl
    Y = y[:, None]
    if side is Side.LEFT:
        near = np.clip(Y - yr, 0.0, None)
        far = np.clip(Y - yl, 0.0, None)
    else:
        near = np.clip(yl - Y, 0.0, None)
        far = np.clip(yr - Y, 0.0, None)

    m0 = (far**alpha - near**alpha) / alpha
    m1 = (far ** (alpha + 1) - near ** (alpha + 1)) / (alpha + 1)
    # (distance - near) and (far - distance) are the two hat pieces on a cell
    w_near_end = (m1 - near * m0) / h
    w_far_end = (far * m0 - m1) / h

    W = np.zeros((n, n))
    if side is Side.LEFT:
        # the far end of cell j is its left node y_j
        W[:, :-1] += w_near_end
        W[:, 1:] += w_far_end
    else:
        W[:, :-1] += w_far_end
        W[:, 1:] += w_near_end

    # exclude cells on the wrong side of the target exactly
    if side is Side.LEFT:
        W[np.triu_indices(n, 1)] = 0.0
    else:
        W[np.tril_indices(n, -1)] = 0.0
    return W / math.gamma(alpha)


def piecewise_constant_weights(
    y: np.ndarray, Y: np.ndarray, gamma: float, side: Side | str, *, at_nodes: bool
) -> np.ndarray:
    r"""Exact weights for :math:`I^\gamma` of a function constant on each cell.

    Rows are the targets ``Y`` (in the :math:`\psi` variable), columns the
    cells of ``y``. For ``gamma == 0`` the operator is point evaluation:
    the containing cell for midpoints, the mean of the adjacent cells at nodes.
    """
    side = _side(side)
    ncell = y.size - 1
    if gamma == 0.0:
        if not at_nodes:
            return np.eye(ncell)
        W = np.zeros((y.size, ncell))
        idx = np.arange(ncell)
        W[idx, idx] += 0.5
        W[idx + 1, idx] += 0.5
        W[0, 0] = W[-1, -1] = 1.0
        return W

    yl, yr = y[:-1], y[1:]
    Y = np.asarray(Y, dtype=float)[:, None]
    if side is Side.LEFT:
        near = np.clip(Y - yr, 0.0, None)
        far = np.clip(Y - yl, 0.0, None)
    else:
        near = np.clip(yl - Y, 0.0, None)
        far = np.clip(yr - Y, 0.0, None)
    return (far**gamma - near**gamma) / math.gamma(gamma + 1)


def slope_matrix(y: np.ndarray) -> np.ndarray:
    """Cell slopes of the piecewise-linear interpolant, ``(N - 1) x N``."""
    n = y.size
    inv_h = 1.0 / np.diff(y)
    D = np.zeros((n - 1, n))
    idx = np.arange(n - 1)
    D[idx, idx] = -inv_h
    D[idx, idx + 1] = inv_h
    return D


# }}}


# {{{ assembly


def _check_psi(psi: PsiMap, grid: Grid) -> np.ndarray:
    d = psi.deriv(grid.nodes)
    if not np.all(np.isfinite(d) & (d > 0)):
        bad = int(np.flatnonzero(~(np.isfinite(d) & (d > 0)))[0])
        raise ValueError(f"psi' is not positive at node {bad} (x={grid.nodes[bad]})")
    return psi(grid.nodes)


@lru_cache(maxsize=128)
def assemble_integral_matrix(
    side: Side | str, alpha: float, psi: PsiMap, grid: Grid
) -> OperatorMatrix:
    r"""Matrix of :math:`I^{\alpha;\psi}` (left from 0 or right to L) on ``grid``."""
    side = _side(side)
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"integral order must lie in (0, 1], got {alpha}")
    if grid.size < 3:
        raise ValueError("a grid needs at least 3 nodes")
    y = _check_psi(psi, grid)
    W = _readonly(integral_weights(y, float(alpha), side))
    return OperatorMatrix(W, side, "integral", float(alpha), None, grid, grid)


def hilfer_factors(
    side: Side | str, order: FracOrder, psi: PsiMap, grid: Grid, at: str = "nodes"
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(outer, slope, inner)`` whose signed product is the Hilfer matrix."""
    side = _side(side)
    if at not in ("nodes", "cells"):
        raise ValueError(f"'at' must be 'nodes' or 'cells', got {at!r}")
    if grid.size < 5:
        raise ValueError("the Hilfer derivative needs at least 5 grid nodes")
    y = _check_psi(psi, grid)
    inner = integral_weights(y, order.inner, side)
    slope = slope_matrix(y)
    if at == "nodes":
        Y = y
    else:
        Y = psi(grid.cells.points)
    outer = piecewise_constant_weights(y, Y, order.outer, side, at_nodes=at == "nodes")
    return outer, slope, inner


@lru_cache(maxsize=128)
def assemble_hilfer_matrix(
    side: Side | str, order: FracOrder, psi: PsiMap, grid: Grid, at: str = "nodes"
) -> OperatorMatrix:
    r"""Matrix of the left or right :math:`\psi`-Hilfer derivative.

    With ``at="cells"`` the derivative is sampled at cell midpoints, giving an
    ``(N - 1) x N`` matrix.
    """
    side = _side(side)
    outer, slope, inner = hilfer_factors(side, order, psi, grid, at)
    sign = 1.0 if side is Side.LEFT else -1.0
    M = sign * (outer @ (slope @ inner))
    target = grid if at == "nodes" else grid.cells
    return OperatorMatrix(
        _readonly(M), side, "hilfer", order.alpha, order.beta, grid, target
    )


# }}}


# {{{ application


def frac_integral(
    side: Side | str, u: GridFunction, alpha: float, psi: PsiMap
) -> GridFunction:
    if not isinstance(u.grid, Grid):
        raise ValueError("fractional integrals act on nodal grid functions")
    return assemble_integral_matrix(_side(side), float(alpha), psi, u.grid).apply(u)


def frac_derivative(
    side: Side | str, u: GridFunction, order: FracOrder, psi: PsiMap, at: str = "nodes"
) -> GridFunction:
    if not isinstance(u.grid, Grid):
        raise ValueError("fractional derivatives act on nodal grid functions")
    return assemble_hilfer_matrix(_side(side), order, psi, u.grid, at).apply(u)


def integration_by_parts_residual(
    phi: GridFunction, chi: GridFunction, order: FracOrder, psi: PsiMap
) -> float:
    r"""Discrete defect of the fractional integration-by-parts identity.

    Returns :math:`|\int (D_{0+}\varphi)\chi - \int \varphi\,\psi'\,D_T(\chi/\psi')|`
    with both integrals computed by the trapezoid rule on the nodes.
    """
    if phi.grid != chi.grid:
        raise ValueError("phi and chi live on different grids")
    grid = phi.grid
    if abs(phi.values[0]) > 1e-12 or abs(phi.values[-1]) > 1e-12:
        raise ValueError("phi must vanish at both endpoints")
    dpsi = psi.deriv(grid.nodes)
    left = frac_derivative(Side.LEFT, phi, order, psi).values
    right = frac_derivative(
        Side.RIGHT, GridFunction(grid, chi.values / dpsi), order, psi
    ).values
    lhs = grid.integrate(left * chi.values)
    rhs = grid.integrate(phi.values * dpsi * right)
    return abs(lhs - rhs)


# }}}

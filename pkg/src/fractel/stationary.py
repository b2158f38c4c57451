r"""Minimization of the static functional

.. math::

    \mathcal{I}(v) = \int \frac{1}{p(x)} |D_{0+} v|^{p(x)} - \int g v

over boundary-vanishing discrete functions. The discrete functional uses the
same quadrature and basis as the telegraph solver, so its minimizer is the
exact rest state of the semi-discrete dynamics.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from fractel.grid import GridFunction
from fractel.telegraph import ProblemSetup

log = logging.getLogger(__name__)

#: Armijo backtracking factor and sufficient-decrease parameter
BACKTRACK = 0.5
ARMIJO_C = 1e-4


@dataclass(frozen=True, eq=False)
class StationaryResult:
    u_star: GridFunction
    value: float
    #: sup-norm of the discrete gradient at ``u_star``
    el_residual: float
    iterations: int
    converged: bool
    #: objective after every accepted step (initial value plus accumulated changes)
    history: np.ndarray
    #: exact change of the objective in each accepted step, all negative
    changes: np.ndarray

    @property
    def coeffs(self) -> np.ndarray:
        return self.u_star.values[1:-1]


def _interior(v: GridFunction | np.ndarray, setup: ProblemSetup) -> np.ndarray:
    if isinstance(v, GridFunction):
        if v.grid != setup.grid:
            raise ValueError("function is not sampled on the problem grid")
        values = v.values
    else:
        values = np.asarray(v, dtype=float)
        if values.shape == (setup.basis.size,):
            return values
        if values.shape != (setup.grid.size,):
            raise ValueError(f"unexpected shape {values.shape}")
    if max(abs(values[0]), abs(values[-1])) > 1e-12:
        raise ValueError("v must vanish at both endpoints")
    return values[setup.basis.interior]


def stationary_energy(v: GridFunction | np.ndarray, setup: ProblemSetup) -> float:
    """Value of the static functional; accepts nodal values or interior coefficients."""
    c = _interior(v, setup)
    return setup.potential(c) - setup.pair_g(c)


def stationary_gradient(v: GridFunction | np.ndarray, setup: ProblemSetup) -> np.ndarray:
    """Gradient with respect to the interior nodal values, ``S(v) - G``."""
    c = _interior(v, setup)
    return setup.stiffness(c) - setup.load


def energy_change(c: np.ndarray, dc: np.ndarray, setup: ProblemSetup) -> float:
    """``I(c + dc) - I(c)`` without subtracting two nearly equal totals.

    Near convergence the decrease is far below the rounding error of the
    functional itself, so each cell contributes
    ``|z|^p (exp(p log|z'/z|) - 1) / p`` instead.
    """
    z = setup.frac_grad(c)
    z_new = z + setup.frac_grad(dc)
    p = setup.p_cells.values
    a, b = np.abs(z), np.abs(z_new)
    diff = np.empty_like(a)
    both = (a > 0) & (b > 0)
    diff[both] = a[both] ** p[both] * np.expm1(p[both] * np.log(b[both] / a[both]))
    diff[~both] = b[~both] ** p[~both] - a[~both] ** p[~both]
    return float(np.dot(setup.cell_weights, diff / p)) - setup.pair_g(dc)


def sobolev_metric(setup: ProblemSetup) -> np.ndarray:
    r"""Gram matrix of :math:`\int D\varphi_j D\varphi_k + \int \varphi_j \varphi_k`.

    This is the linear (``p = 2``) stiffness plus the mass; it is symmetric
    positive definite and removes the mesh dependence of the plain gradient.
    """
    B = setup.basis.frac_deriv_samples
    return B.T @ (setup.cell_weights[:, None] * B) + np.diag(setup.basis.mass)


def solve_stationary(
    setup: ProblemSetup,
    tol: float = 1e-8,
    max_iters: int = 20_000,
    initial: np.ndarray | None = None,
    metric: str = "sobolev",
) -> StationaryResult:
    """Gradient descent with Armijo backtracking, started from zero.

    ``metric="sobolev"`` takes the gradient in the inner product of
    :func:`sobolev_metric` (a fixed preconditioner), ``"euclidean"`` uses the
    raw coefficient gradient, which needs on the order of ``N**2`` iterations.
    The trial step of each iteration is the Barzilai-Borwein estimate of the
    inverse curvature along the last move (1 on the first iteration); Armijo
    backtracking then enforces monotone decrease.
    Stops when the sup-norm of the coefficient gradient is at most ``tol``.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if metric == "sobolev":
        P = sobolev_metric(setup)
        factor = cho_factor(P)

        def direction(grad):
            return cho_solve(factor, grad)

    elif metric == "euclidean":
        P = None

        def direction(grad):
            return grad

    else:
        raise ValueError(f"unknown metric {metric!r}")

    c = np.zeros(setup.basis.size) if initial is None else _interior(initial, setup).copy()
    f = stationary_energy(c, setup)
    grad = stationary_gradient(c, setup)
    step = 1.0
    it = 0
    res = float(np.abs(grad).max(initial=0.0))
    history, changes = [f], []
    while res > tol and it < max_iters:
        it += 1
        d = direction(grad)
        gg = float(grad @ d)
        if it > 1:
            dc = c - c_prev
            curv = float(dc @ (grad - grad_prev))
            if curv > 0:
                dd = float(dc @ (P @ dc)) if P is not None else float(dc @ dc)
                step = dd / curv
        change = energy_change(c, -step * d, setup)
        while change > -ARMIJO_C * step * gg and step > 1e-300:
            step *= BACKTRACK
            change = energy_change(c, -step * d, setup)
        if not change < 0:
            # no representable decrease; the gradient is at roundoff level
            log.warning("line search stalled at |grad|=%.3g", res)
            break
        c_prev, grad_prev = c, grad
        c, f = c - step * d, f + change
        history.append(f)
        changes.append(change)
        grad = stationary_gradient(c, setup)
        res = float(np.abs(grad).max(initial=0.0))

    converged = res <= tol
    if not converged:
        log.warning("stationary solve stopped after %d iterations, |grad|=%.3g", it, res)
    return StationaryResult(
        u_star=GridFunction(setup.grid, setup.nodal(c)),
        value=stationary_energy(c, setup),
        el_residual=res,
        iterations=it,
        converged=converged,
        history=np.array(history),
        changes=np.array(changes),
    )


def weak_energy_identity(result: StationaryResult, setup: ProblemSetup) -> tuple[float, float]:
    r"""Both sides of :math:`\int |Du^*|^{p} = \int g u^*` at the discrete minimizer.

    Testing the discrete Euler-Lagrange equation with :math:`u^*` itself gives
    this identity up to ``el_residual`` times the coefficient 1-norm.
    """
    c = result.coeffs
    z = setup.frac_grad(c)
    lhs = float(np.dot(setup.cell_weights, np.abs(z) ** setup.p_cells.values))
    return lhs, setup.pair_g(c)


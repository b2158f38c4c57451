r"""Galerkin semi-discretization of the fractional telegraph equation.

Solves

.. math::

    \varepsilon u_{tt} - D_T\big(|D_{0+} u|^{p(x)-2} D_{0+} u\big) + u_t = g(x)

on :math:`(0, L)` with homogeneous Dirichlet data, where :math:`D` are the
:math:`\psi`-Hilfer derivatives. The unknowns are the interior nodal values
(hat basis, piecewise linear in :math:`\psi`). The mass matrix and all
:math:`L^2` pairings use the trapezoid rule, the :math:`p(x)` term uses the
midpoint rule on cells with the cell-sampled derivative. The stiffness vector is
then exactly the gradient of the discrete energy, so the semi-discrete system
satisfies :math:`E' = -\int u_t^2` exactly. Because :math:`E` already
contains :math:`-\int u g`, the static forcing does not appear in the balance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from fractel.frac_ops import FracOrder, Side, assemble_hilfer_matrix
from fractel.grid import Grid, GridFunction, PsiMap
from fractel.varexp import ExponentField

BLOWUP = 1e12


class SimulationError(RuntimeError):
    """Raised when the time integration produces non-finite or huge values."""


def flux(z: np.ndarray, p: np.ndarray) -> np.ndarray:
    """``|z|^(p-2) z``, continuous with value 0 at ``z = 0`` for ``p >= 2``."""
    out = np.zeros_like(z)
    nz = z != 0.0
    out[nz] = np.abs(z[nz]) ** (p[nz] - 2.0) * z[nz]
    return out


@dataclass(frozen=True, eq=False)
class Basis:
    """Interior nodal hat functions and their precomputed fractional derivatives."""

    kind: str
    interior: np.ndarray
    #: diagonal of the (trapezoid) Gram matrix
    mass: np.ndarray
    #: column k is the cell-sampled left Hilfer derivative of hat k
    frac_deriv_samples: np.ndarray

    @property
    def size(self) -> int:
        return self.interior.size

    @property
    def mass_matrix(self) -> np.ndarray:
        return np.diag(self.mass)

    def functions(self, grid: Grid) -> list[GridFunction]:
        out = []
        for k in self.interior:
            v = np.zeros(grid.size)
            v[k] = 1.0
            out.append(GridFunction(grid, v))
        return out


@dataclass(frozen=True, eq=False)
class ProblemSetup:
    """Immutable description of one telegraph problem."""

    grid: Grid
    psi: PsiMap
    order: FracOrder
    p: ExponentField
    epsilon: float
    g: GridFunction
    u0: GridFunction
    u1: GridFunction
    #: exponent at cell midpoints; defaults to linear interpolation of ``p``
    p_cells: ExponentField | None = field(default=None)

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        for name in ("g", "u0", "u1"):
            if getattr(self, name).grid != self.grid:
                raise ValueError(f"{name} is not sampled on the problem grid")
        if self.p.grid != self.grid:
            raise ValueError("p is not sampled on the problem grid")
        if max(abs(self.u0.values[0]), abs(self.u0.values[-1])) > 1e-12:
            raise ValueError("u0 must vanish at both endpoints")
        if not self.order.alpha > 1.0 / self.p.p_minus:
            raise ValueError(
                f"alpha={self.order.alpha} must exceed 1/p(x) (p_minus={self.p.p_minus})"
            )
        if self.p_cells is None:
            object.__setattr__(self, "p_cells", self.p.resample(self.grid.cells))
        elif self.p_cells.grid != self.grid.cells:
            raise ValueError("p_cells must be sampled on the grid cells")

    @cached_property
    def basis(self) -> Basis:
        D = assemble_hilfer_matrix(Side.LEFT, self.order, self.psi, self.grid, "cells")
        interior = np.arange(1, self.grid.size - 1)
        return Basis(
            kind="hat",
            interior=interior,
            mass=self.grid.weights[interior],
            frac_deriv_samples=np.ascontiguousarray(D.matrix[:, interior]),
        )

    @property
    def cell_weights(self) -> np.ndarray:
        return self.grid.cells.weights

    @cached_property
    def load(self) -> np.ndarray:
        """``int g phi_k`` for every basis function."""
        return self.basis.mass * self.g.values[self.basis.interior]

    # {{{ discrete fields

    def nodal(self, coeffs: np.ndarray) -> np.ndarray:
        u = np.zeros(self.grid.size)
        u[self.basis.interior] = coeffs
        return u

    def frac_grad(self, coeffs: np.ndarray) -> np.ndarray:
        """Cell samples of the left Hilfer derivative of the reconstruction."""
        return self.basis.frac_deriv_samples @ coeffs

    def stiffness(self, coeffs: np.ndarray) -> np.ndarray:
        r"""``S_k = int |Du|^(p-2) Du D phi_k`` (gradient of the :math:`p(x)` energy)."""
        z = self.frac_grad(coeffs)
        a = flux(z, self.p_cells.values) * self.cell_weights
        return self.basis.frac_deriv_samples.T @ a

    def potential(self, coeffs: np.ndarray) -> float:
        z = self.frac_grad(coeffs)
        p = self.p_cells.values
        return float(np.dot(self.cell_weights, np.abs(z) ** p / p))

    def l2sq(self, coeffs: np.ndarray) -> float:
        return float(np.dot(self.basis.mass, coeffs**2))

    def pair_g(self, coeffs: np.ndarray) -> float:
        return float(np.dot(self.load, coeffs))

    # }}}


@dataclass(frozen=True, eq=False)
class SimulationState:
    t: float
    coeffs: np.ndarray
    velocities: np.ndarray

    def __post_init__(self) -> None:
        if not (np.all(np.isfinite(self.coeffs)) and np.all(np.isfinite(self.velocities))):
            raise SimulationError(f"non-finite state at t={self.t}")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded states with per-record energy bookkeeping."""

    setup: ProblemSetup
    times: np.ndarray
    coeffs: np.ndarray
    velocities: np.ndarray
    energy: np.ndarray
    #: instantaneous ``int |u_t|^2``
    ut_l2sq: np.ndarray
    #: cumulative ``int_0^t int |u_t|^2``
    dissipated: np.ndarray
    #: ``|dE/dt + int |u_t|^2|`` over the step ending at each record
    balance_residual: np.ndarray
    dt: float

    def __len__(self) -> int:
        return self.times.size

    def state(self, i: int) -> SimulationState:
        return SimulationState(float(self.times[i]), self.coeffs[i], self.velocities[i])

    def states(self):
        for i in range(len(self)):
            yield self.state(i)

    def nodal(self, i: int) -> np.ndarray:
        return self.setup.nodal(self.coeffs[i])


def project_initial(setup: ProblemSetup) -> SimulationState:
    """L2 projection of ``u0``, ``u1`` onto the hat basis."""
    b = setup.basis
    load0 = b.mass * setup.u0.values[b.interior]
    load1 = b.mass * setup.u1.values[b.interior]
    if np.any(b.mass <= 0):
        raise np.linalg.LinAlgError("singular mass matrix")
    # the trapezoid Gram matrix is diagonal
    return SimulationState(0.0, load0 / b.mass, load1 / b.mass)


def galerkin_rhs(state: SimulationState, setup: ProblemSetup) -> np.ndarray:
    """Accelerations solving ``M (eps a) = -S(u) + G - M u_t``."""
    S = setup.stiffness(state.coeffs)
    if not np.all(np.isfinite(S)):
        k = int(np.flatnonzero(~np.isfinite(S))[0])
        raise SimulationError(f"non-finite stiffness in mode {k} at t={state.t}")
    b = setup.basis
    return (-S + setup.load - b.mass * state.velocities) / (setup.epsilon * b.mass)


def energy(state: SimulationState, setup: ProblemSetup) -> float:
    r""":math:`\frac{\varepsilon}{2}\int u_t^2 + \int \frac{1}{p}|Du|^p - \int u g`."""
    return (
        0.5 * setup.epsilon * setup.l2sq(state.velocities)
        + setup.potential(state.coeffs)
        - setup.pair_g(state.coeffs)
    )


def _accel(setup: ProblemSetup, c: np.ndarray, v: np.ndarray, t: float) -> np.ndarray:
    return galerkin_rhs(SimulationState(t, c, v), setup)


def step(state: SimulationState, setup: ProblemSetup, dt: float) -> SimulationState:
    """One classical RK4 step of the first-order system ``(u, u')``."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    c, v, t = state.coeffs, state.velocities, state.t
    k1c, k1v = v, _accel(setup, c, v, t)
    k2c = v + 0.5 * dt * k1v
    k2v = _accel(setup, c + 0.5 * dt * k1c, k2c, t + 0.5 * dt)
    k3c = v + 0.5 * dt * k2v
    k3v = _accel(setup, c + 0.5 * dt * k2c, k3c, t + 0.5 * dt)
    k4c = v + dt * k3v
    k4v = _accel(setup, c + dt * k3c, k4c, t + dt)
    c = c + dt / 6.0 * (k1c + 2 * k2c + 2 * k3c + k4c)
    v = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    if not (np.all(np.isfinite(c)) and np.all(np.isfinite(v))) or np.abs(c).max(
        initial=0.0
    ) > BLOWUP:
        raise SimulationError(
            f"blow-up at t={t + dt:.6g}: max|u_k|={np.abs(c).max(initial=0.0):.3g}"
        )
    return SimulationState(t + dt, c, v)


def linearized_spectral_radius(
    setup: ProblemSetup, *references: np.ndarray, iters: int = 500, rtol: float = 1e-8
) -> float:
    """Power-iteration estimate of the largest eigenvalue of ``M^-1 K``.

    ``K`` is the stiffness linearized with cell weights
    ``(p - 1) max(1, 2|Du_ref|)^(p - 2)`` over the reference coefficient
    vectors (the initial state is always included).
    """
    b = setup.basis
    p = setup.p_cells.values
    zref = np.abs(setup.frac_grad(project_initial(setup).coeffs))
    for r in references:
        zref = np.maximum(zref, np.abs(setup.frac_grad(r)))
    kw = setup.cell_weights * (p - 1.0) * np.maximum(1.0, 2.0 * zref) ** (p - 2.0)

    B = b.frac_deriv_samples
    s = 1.0 / np.sqrt(b.mass)

    def apply(x):
        # symmetric form M^-1/2 K M^-1/2
        return s * (B.T @ (kw * (B @ (s * x))))

    x = np.ones(b.size) / math.sqrt(b.size)
    lam = 0.0
    for _ in range(iters):
        y = apply(x)
        new = float(np.linalg.norm(y))
        if new == 0.0:
            return 0.0
        x = y / new
        if abs(new - lam) <= rtol * new:
            lam = new
            break
        lam = new
    return lam


def stable_dt(setup: ProblemSetup, *references: np.ndarray, courant: float = 1.0) -> float:
    """Largest step with ``dt * |lambda| <= courant`` for the linearized system.

    The eigenvalues of ``eps x'' + x' + k x = 0`` satisfy
    ``|lambda| <= max(1/eps, sqrt(k/eps))``.
    """
    rho = linearized_spectral_radius(setup, *references)
    eps = setup.epsilon
    return courant / max(1.0 / eps, math.sqrt(rho / eps))


def simulate(
    setup: ProblemSetup,
    T: float,
    dt: float,
    record_every: int = 1,
    state: SimulationState | None = None,
) -> Trajectory:
    """Integrate to time ``T`` with uniform steps no larger than ``dt``.

    Every step updates the energy bookkeeping; every ``record_every``-th state
    (and the final one) is stored.
    """
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    nsteps = max(1, math.ceil(T / dt - 1e-9))
    h = T / nsteps

    state = project_initial(setup) if state is None else state
    E = energy(state, setup)
    d = setup.l2sq(state.velocities)

    times, cs, vs = [state.t], [state.coeffs], [state.velocities]
    Es, ds, cum, res = [E], [d], [0.0], [0.0]
    total = 0.0
    for n in range(1, nsteps + 1):
        state = step(state, setup, h)
        E_new = energy(state, setup)
        d_new = setup.l2sq(state.velocities)
        # trapezoid in time, second order in h
        r = abs((E_new - E) / h + 0.5 * (d + d_new))
        total += 0.5 * h * (d + d_new)
        E, d = E_new, d_new
        if n % record_every == 0 or n == nsteps:
            times.append(n * h)
            cs.append(state.coeffs)
            vs.append(state.velocities)
            Es.append(E)
            ds.append(d)
            cum.append(total)
            res.append(r)

    return Trajectory(
        setup=setup,
        times=np.array(times),
        coeffs=np.array(cs),
        velocities=np.array(vs),
        energy=np.array(Es),
        ut_l2sq=np.array(ds),
        dissipated=np.array(cum),
        balance_residual=np.array(res),
        dt=h,
    )

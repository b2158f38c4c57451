"""Independent classical reference solver for the damped wave equation.

Solves ``eps u_tt = u_xx - u_t + g`` with homogeneous Dirichlet data by the
three-point finite-difference Laplacian and a high-order adaptive ODE
integrator. It shares no code with the fractional solver and serves as an
oracle for the classical limit ``alpha -> 1``, ``beta = 1``, ``psi = x``,
``p = 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp


@dataclass(frozen=True, eq=False)
class ClassicalSolution:
    x: np.ndarray
    times: np.ndarray
    #: nodal values including the zero boundary values, one row per time
    u: np.ndarray
    ut: np.ndarray


def laplacian_fd(x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Three-point ``u_xx`` at the interior nodes of a (possibly nonuniform) grid."""
    h = np.diff(x)
    hl, hr = h[:-1], h[1:]
    return 2.0 * (hl * u[2:] - (hl + hr) * u[1:-1] + hr * u[:-2]) / (hl * hr * (hl + hr))


def classical_acceleration(x, u, ut, g, epsilon: float) -> np.ndarray:
    """Interior ``u_tt`` of the classical damped wave equation."""
    return (laplacian_fd(x, u) - ut[1:-1] + g[1:-1]) / epsilon


def solve_classical(
    x,
    u0,
    u1,
    g,
    epsilon: float,
    times,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> ClassicalSolution:
    """Integrate the method-of-lines system and sample it at ``times``."""
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=float)
    times = np.asarray(times, dtype=float)
    n = x.size - 2

    def rhs(_t, y):
        u = np.zeros(x.size)
        ut = np.zeros(x.size)
        u[1:-1], ut[1:-1] = y[:n], y[n:]
        return np.concatenate([y[n:], classical_acceleration(x, u, ut, g, epsilon)])

    y0 = np.concatenate([np.asarray(u0, float)[1:-1], np.asarray(u1, float)[1:-1]])
    sol = solve_ivp(
        rhs,
        (0.0, float(times[-1])),
        y0,
        method="DOP853",
        t_eval=times,
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise RuntimeError(f"classical oracle failed: {sol.message}")
    u = np.zeros((times.size, x.size))
    ut = np.zeros((times.size, x.size))
    u[:, 1:-1] = sol.y[:n].T
    ut[:, 1:-1] = sol.y[n:].T
    return ClassicalSolution(x=x, times=times, u=u, ut=ut)


def relative_l2_error(x, u, reference) -> np.ndarray:
    """Row-wise ``||u - ref|| / ||ref||`` with the trapezoid rule."""
    x = np.asarray(x, dtype=float)
    num = np.sqrt(np.trapezoid((np.asarray(u) - reference) ** 2, x, axis=-1))
    den = np.sqrt(np.trapezoid(np.asarray(reference) ** 2, x, axis=-1))
    return num / den

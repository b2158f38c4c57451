r"""Decay constants, error functionals and inequality checks along trajectories.

Everything here is post-processing of a :class:`~fractel.telegraph.Trajectory`
and a discrete minimizer :math:`u^*` of the static functional. Derivatives
are the cell-sampled operators of the solver and all integrals use the
solver's quadrature, so the inequalities are checked in the same discrete
setting in which the dynamics are exact.

The embedding constants of the estimates are not computable in closed form;
a single numerical surrogate :math:`\hat C` (see
:func:`~fractel.varexp.poincare_constant_estimate`) stands in for all of them
and every report lists the constants it replaced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from fractel.grid import GridFunction
from fractel.stationary import stationary_energy
from fractel.telegraph import ProblemSetup, SimulationState, Trajectory
from fractel.varexp import conjugate, luxemburg_norm, poincare_constant_estimate

#: constants of the estimates that are replaced by the surrogate C_hat
SURROGATED = ("C", "C3", "C5")


def _coeffs(u: GridFunction | np.ndarray, setup: ProblemSetup) -> np.ndarray:
    if isinstance(u, GridFunction):
        if u.grid != setup.grid:
            raise ValueError("function is not sampled on the problem grid")
        return u.values[setup.basis.interior]
    return np.asarray(u, dtype=float)


# {{{ pointwise quantities


def theta0(setup: ProblemSetup, E0: float, C_hat: float) -> float:
    r""":math:`2|E(0)| + 2\hat C \max(\|g\|_{p'}^{p'_+}, \|g\|_{p'}^{p'_-})`.

    The norm of ``g`` is the Luxemburg norm for the conjugate exponent.
    """
    pc = conjugate(setup.p)
    gn = luxemburg_norm(setup.g, pc)
    forcing = max(gn**pc.p_plus, gn**pc.p_minus) if gn > 0 else 0.0
    return 2.0 * abs(E0) + 2.0 * C_hat * forcing


def half_l2_distance(u: GridFunction, u_star: GridFunction) -> float:
    r""":math:`\frac12 \int (u - u^*)^2`."""
    if u.grid != u_star.grid:
        raise ValueError("u and u_star live on different grids")
    return 0.5 * u.grid.integrate((u.values - u_star.values) ** 2)


def quadratic_part(w: np.ndarray, wt: np.ndarray, epsilon: float, weights: np.ndarray) -> float:
    r""":math:`\int w^2/(2\varepsilon) + w w_t + \varepsilon w_t^2`."""
    return float(np.dot(weights, w**2 / (2.0 * epsilon) + w * wt + epsilon * wt**2))


def error_functional_G(
    state: SimulationState, setup: ProblemSetup, u_star: GridFunction, I_star: float
) -> float:
    r"""Lyapunov functional of the decay argument, with :math:`w = u - u^*`.

    .. math::

        \mathcal{G} = \int \Big(\frac{w^2}{2\varepsilon} + w w_t
            + \varepsilon w_t^2\Big) + 2\big(\mathcal{I}(u) - \mathcal{I}(u^*)\big)

    Since :math:`u^*` does not depend on time, :math:`w_t = u_t`.
    """
    w = state.coeffs - _coeffs(u_star, setup)
    q = quadratic_part(w, state.velocities, setup.epsilon, setup.basis.mass)
    return q + 2.0 * (stationary_energy(state.coeffs, setup) - I_star)


def decay_modular(u: GridFunction | np.ndarray, u_star: GridFunction, setup: ProblemSetup) -> float:
    r""":math:`\int |D_{0+}u - D_{0+}u^*|^{p(x)}` on the cells."""
    z = setup.frac_grad(_coeffs(u, setup) - _coeffs(u_star, setup))
    return float(np.dot(setup.cell_weights, np.abs(z) ** setup.p_cells.values))


def monotonicity_gap(A, B, q) -> np.ndarray:
    r"""``(|A|^{q-2}A - |B|^{q-2}B)(A - B) - 2^{2-q}|A - B|^q``, nonnegative for ``q >= 2``."""
    A, B, q = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (A, B, q)))
    fa = np.abs(A) ** (q - 2) * A
    fb = np.abs(B) ** (q - 2) * B
    return (fa - fb) * (A - B) - 2.0 ** (2 - q) * np.abs(A - B) ** q


def convexity_gap_check(
    u: GridFunction | np.ndarray, u_star: GridFunction, setup: ProblemSetup
) -> tuple[float, float]:
    r"""Both sides of :math:`\frac{2^{2-p_+}}{p_+}\int|Dw|^{p} \le \mathcal{I}(u) - \mathcal{I}(u^*)`."""
    pp = setup.p.p_plus
    lhs = 2.0 ** (2 - pp) / pp * decay_modular(u, u_star, setup)
    c, cs = _coeffs(u, setup), _coeffs(u_star, setup)
    rhs = stationary_energy(c, setup) - stationary_energy(cs, setup)
    return lhs, rhs


# }}}


# {{{ constant chain


@dataclass(frozen=True)
class ConstantChain:
    """Constants of the decay estimate, each with the formula that produced it."""

    C_hat: float
    theta0: float
    theta1: float
    theta2: float
    C_tilde: float
    C4: float
    #: constant of the bound as stated, ``(C4^-p+ (p+ - 1))^(1/(1 - p+))``
    Theta: float
    #: the same with the prefactor ``p+ / 2^(3 - p+)`` from the last proof step
    Theta_proof: float
    p_minus: float
    p_plus: float
    g_norm: float
    epsilon: float
    surrogated: tuple[str, ...] = SURROGATED
    notes: tuple[str, ...] = field(default=())

    @property
    def exponent(self) -> float:
        return 1.0 / (1.0 - self.p_plus)

    def bound(self, t, variant: str = "theorem") -> np.ndarray:
        """``Theta * t^(1/(1 - p+))``; ``variant`` is ``"theorem"`` or ``"proof"``."""
        c = {"theorem": self.Theta, "proof": self.Theta_proof}[variant]
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            return c * t**self.exponent


def chain_from_inputs(
    C_hat: float, theta0_value: float, g_norm: float, epsilon: float, p_minus: float, p_plus: float
) -> ConstantChain:
    """Evaluate the chain from its scalar inputs."""
    pm, pp, eps = p_minus, p_plus, epsilon
    t1 = 2.0**pp * theta0_value

    a = max(t1 ** (2 / pm - 1 / pp), t1 ** (1 / pp))
    b = max(t1 ** (1 / pm - 1 / pp), 1.0)
    C_tilde = C_hat * ((eps + 1) / (2 * eps) * a + 2 * g_norm * b + b)

    root = max(t1 ** (1 / pm), t1 ** (1 / pp))
    power = max(t1 ** ((pm - 1) / pm), t1 ** ((pp - 1) / pp))
    t2 = C_hat / eps * g_norm * root + power * root / eps + theta0_value / eps

    C4 = (eps * C_tilde**pp / 2.0 ** (2 - pp)) ** (1 / pp) + t2 ** (1 - 1 / pp)
    Theta = (C4 ** (-pp) * (pp - 1)) ** (1 / (1 - pp)) if C4 > 0 else 0.0
    Theta_proof = pp / 2.0 ** (3 - pp) * Theta

    notes = (
        f"C_hat = {C_hat:.6g} (numerical Poincare estimate, replaces {', '.join(SURROGATED)})",
        f"theta0 = 2|E(0)| + 2 C_hat max(|g|^p'+, |g|^p'-) = {theta0_value:.6g}, |g|_p' = {g_norm:.6g}",
        f"theta1 = 2^p+ theta0 = {t1:.6g}",
        f"C_tilde = C_hat[(eps+1)/(2eps) max(t1^(2/p- - 1/p+), t1^(1/p+))"
        f" + (2|g| + 1) max(t1^(1/p- - 1/p+), 1)] = {C_tilde:.6g}",
        f"theta2 = (C_hat/eps)|g| max(t1^(1/p-), t1^(1/p+))"
        f" + (1/eps) max(t1^((p- - 1)/p-), t1^((p+ - 1)/p+)) max(t1^(1/p-), t1^(1/p+))"
        f" + theta0/eps = {t2:.6g}",
        f"C4 = (eps C_tilde^p+ / 2^(2-p+))^(1/p+) + theta2^(1-1/p+) = {C4:.6g}",
        f"Theta = (C4^-p+ (p+ - 1))^(1/(1-p+)) = {Theta:.6g}",
        f"Theta_proof = p+/2^(3-p+) Theta = {Theta_proof:.6g}",
    )
    return ConstantChain(
        C_hat=C_hat,
        theta0=theta0_value,
        theta1=t1,
        theta2=t2,
        C_tilde=C_tilde,
        C4=C4,
        Theta=Theta,
        Theta_proof=Theta_proof,
        p_minus=pm,
        p_plus=pp,
        g_norm=g_norm,
        epsilon=eps,
        notes=notes,
    )


def constant_chain(
    setup: ProblemSetup,
    trajectory: Trajectory,
    u_star: GridFunction,
    C_hat: float | None = None,
) -> ConstantChain:
    """Evaluate every constant of the decay estimate for one scenario.

    ``C_hat`` defaults to :func:`~fractel.varexp.poincare_constant_estimate`
    for the setup's order, reparameterization, exponent and grid.
    """
    if u_star.grid != setup.grid:
        raise ValueError("u_star is not sampled on the problem grid")
    if C_hat is None:
        C_hat = poincare_constant_estimate(setup.order, setup.psi, setup.p, setup.grid)
    E0 = float(trajectory.energy[0])
    g_norm = luxemburg_norm(setup.g, conjugate(setup.p))
    return chain_from_inputs(
        C_hat,
        theta0(setup, E0, C_hat),
        g_norm,
        setup.epsilon,
        setup.p.p_minus,
        setup.p.p_plus,
    )


# }}}


# {{{ trajectory series


@dataclass(frozen=True, eq=False)
class TrajectorySeries:
    """Per-record diagnostic scalars of one trajectory."""

    times: np.ndarray
    G: np.ndarray
    phi: np.ndarray
    lhs: np.ndarray
    I_of_u: np.ndarray
    I_star: float
    #: ``eps int u_t^2 + int |Du|^p / p + 2 int_0^t int u_t^2``
    prop1: np.ndarray
    #: both sides of the convexity gap inequality
    gap_lhs: np.ndarray
    gap_rhs: np.ndarray


def trajectory_series(trajectory: Trajectory, u_star: GridFunction) -> TrajectorySeries:
    setup = trajectory.setup
    cs = _coeffs(u_star, setup)
    I_star = stationary_energy(cs, setup)
    pp = setup.p.p_plus
    G, phi, lhs, I_u, prop1 = [], [], [], [], []
    for i, state in enumerate(trajectory.states()):
        G.append(error_functional_G(state, setup, u_star, I_star))
        w = state.coeffs - cs
        phi.append(0.5 * float(np.dot(setup.basis.mass, w**2)))
        lhs.append(decay_modular(state.coeffs, u_star, setup))
        I_u.append(stationary_energy(state.coeffs, setup))
        prop1.append(
            setup.epsilon * trajectory.ut_l2sq[i]
            + setup.potential(state.coeffs)
            + 2.0 * trajectory.dissipated[i]
        )
    lhs = np.array(lhs)
    I_u = np.array(I_u)
    return TrajectorySeries(
        times=trajectory.times,
        G=np.array(G),
        phi=np.array(phi),
        lhs=lhs,
        I_of_u=I_u,
        I_star=I_star,
        prop1=np.array(prop1),
        gap_lhs=2.0 ** (2 - pp) / pp * lhs,
        gap_rhs=I_u - I_star,
    )


def fit_tail_exponent(times, values, tail: float = 0.5) -> float:
    """Least-squares slope of ``log(values)`` against ``log(times)`` on the tail.

    Uses the last ``tail`` fraction of the positive samples; returns ``nan``
    when fewer than 3 remain.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    keep = (t > 0) & (v > 0)
    t, v = t[keep], v[keep]
    start = int(math.floor((1.0 - tail) * t.size))
    t, v = t[start:], v[start:]
    if t.size < 3:
        return math.nan
    slope, _ = np.polyfit(np.log(t), np.log(v), 1)
    return float(slope)


def affirmation_check(trajectory: Trajectory, theta0_value: float) -> tuple[float, float]:
    r"""Both sides of
    :math:`\frac32\int_0^T\int_0^t \|u_t(\tau)\|^2 e^{(\tau-t)/\varepsilon}d\tau\,dt
    \le \frac{3\varepsilon}{4}\Theta_0`.

    The inner integral obeys :math:`J' = \|u_t\|^2 - J/\varepsilon`; it is
    advanced with an exponential trapezoid rule between records and the
    outer integral uses the trapezoid rule.
    """
    t = trajectory.times
    d = trajectory.ut_l2sq
    eps = trajectory.setup.epsilon
    J = np.zeros_like(t)
    for n in range(t.size - 1):
        h = t[n + 1] - t[n]
        decay = math.exp(-h / eps)
        J[n + 1] = decay * J[n] + 0.5 * h * (decay * d[n] + d[n + 1])
    lhs = 1.5 * float(np.trapezoid(J, t))
    return lhs, 0.75 * eps * theta0_value


# }}}


# {{{ decay report


@dataclass(frozen=True, eq=False)
class DecayReport:
    times: np.ndarray
    lhs: np.ndarray
    bound_theorem: np.ndarray
    bound_proof: np.ndarray
    #: rows with ``t >= t_min``
    checked: np.ndarray
    passed_theorem: np.ndarray
    passed_proof: np.ndarray
    fitted_exponent: float
    bound_exponent: float
    t_min: float
    #: ``int |u_t|^2`` and ``I(u) - I(u*)`` at every record
    ut_l2sq: np.ndarray
    energy_gap: np.ndarray
    tail_monotone: bool
    surrogated: tuple[str, ...] = SURROGATED

    @property
    def all_passed_theorem(self) -> bool:
        return bool(np.all(self.passed_theorem[self.checked]))

    @property
    def all_passed_proof(self) -> bool:
        return bool(np.all(self.passed_proof[self.checked]))

    @property
    def exponent_within_envelope(self) -> bool:
        """Fitted decay is no slower than the bound's rate plus 0.5 slack."""
        return math.isnan(self.fitted_exponent) or (
            self.fitted_exponent <= self.bound_exponent + 0.5
        )


def decay_bound_report(
    trajectory: Trajectory,
    u_star: GridFunction,
    chain: ConstantChain,
    t_min: float = 1.0,
    series: TrajectorySeries | None = None,
) -> DecayReport:
    """Compare the modular distance to ``u*`` with both decay bounds for ``t >= t_min``."""
    if not t_min > 0:
        raise ValueError(f"t_min must be positive, got {t_min}")
    if series is None:
        series = trajectory_series(trajectory, u_star)
    t = trajectory.times
    lhs = series.lhs
    bt = chain.bound(t, "theorem")
    bp = chain.bound(t, "proof")
    checked = t >= t_min
    tail = lhs[checked][lhs[checked].size // 2 :]
    return DecayReport(
        times=t,
        lhs=lhs,
        bound_theorem=bt,
        bound_proof=bp,
        checked=checked,
        passed_theorem=lhs <= bt,
        passed_proof=lhs <= bp,
        fitted_exponent=fit_tail_exponent(t[checked], lhs[checked]),
        bound_exponent=chain.exponent,
        t_min=t_min,
        ut_l2sq=trajectory.ut_l2sq,
        energy_gap=series.I_of_u - series.I_star,
        tail_monotone=bool(np.all(np.diff(tail) <= 0)),
    )


# }}}

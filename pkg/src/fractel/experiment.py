"""End-to-end scenario runs: simulation, stationary solve, constants and checks."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from fractel import diagnostics as diag
from fractel.config import ScenarioConfig
from fractel.oracle import solve_classical
from fractel.stationary import StationaryResult, solve_stationary
from fractel.telegraph import (
    ProblemSetup,
    SimulationState,
    Trajectory,
    energy,
    simulate,
    stable_dt,
)
from fractel.varexp import poincare_constant_estimate

log = logging.getLogger(__name__)

COLUMNS = (
    "t",
    "E",
    "dissipation",
    "balance_residual",
    "G_functional",
    "phi_half_l2",
    "lhs_decay",
    "bound_theorem",
    "bound_proof_variant",
    "ut_l2sq",
    "I_of_u",
)

#: number of records at which the convexity gap is checked
GAP_SAMPLES = 20


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str
    #: asserted checks turn a run into a failure; the rest are reported only
    asserted: bool

    def __post_init__(self) -> None:
        object.__setattr__(self, "passed", bool(self.passed))


@dataclass(frozen=True, eq=False)
class RunResult:
    config: ScenarioConfig
    setup: ProblemSetup
    trajectory: Trajectory
    stationary: StationaryResult
    chain: diag.ConstantChain
    series: diag.TrajectorySeries
    report: diag.DecayReport
    checks: tuple[Check, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks if c.asserted)

    def columns(self) -> dict[str, np.ndarray]:
        tr, s, r = self.trajectory, self.series, self.report
        return {
            "t": tr.times,
            "E": tr.energy,
            "dissipation": tr.dissipated,
            "balance_residual": tr.balance_residual,
            "G_functional": s.G,
            "phi_half_l2": s.phi,
            "lhs_decay": s.lhs,
            "bound_theorem": r.bound_theorem,
            "bound_proof_variant": r.bound_proof,
            "ut_l2sq": tr.ut_l2sq,
            "I_of_u": s.I_of_u,
        }

    def nodal_states(self) -> np.ndarray:
        return np.array([self.trajectory.nodal(i) for i in range(len(self.trajectory))])


def time_step(config: ScenarioConfig, setup: ProblemSetup) -> float:
    """The configured step, capped by the stable step of the linearized system."""
    cap = stable_dt(setup)
    if config.dt is None:
        return cap
    if config.dt > cap:
        log.warning("dt=%g exceeds the stable step %.3g; using the latter", config.dt, cap)
        return cap
    return config.dt


def classical_trajectory(config: ScenarioConfig, setup: ProblemSetup, dt: float) -> Trajectory:
    """Run the finite-difference oracle and wrap it as a :class:`Trajectory`.

    With ``alpha = 1`` and ``psi = x`` the solver's energy, pairings and
    derivatives reduce to their classical counterparts, so every diagnostic
    applies unchanged.
    """
    nsteps = max(1, math.ceil(config.T / dt - 1e-9))
    h = config.T / nsteps
    idx = np.arange(0, nsteps + 1, config.record_every)
    if idx[-1] != nsteps:
        idx = np.append(idx, nsteps)
    times = idx * h
    x = setup.grid.nodes
    sol = solve_classical(
        x, setup.u0.values, setup.u1.values, setup.g.values, setup.epsilon, times
    )
    interior = setup.basis.interior
    coeffs = sol.u[:, interior]
    vel = sol.ut[:, interior]
    E = np.array(
        [energy(SimulationState(t, c, v), setup) for t, c, v in zip(times, coeffs, vel)]
    )
    d = np.array([setup.l2sq(v) for v in vel])
    steps = np.diff(times)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * steps * (d[1:] + d[:-1]))])
    res = np.concatenate([[0.0], np.abs(np.diff(E) / steps + 0.5 * (d[1:] + d[:-1]))])
    return Trajectory(
        setup=setup,
        times=times,
        coeffs=coeffs,
        velocities=vel,
        energy=E,
        ut_l2sq=d,
        dissipated=cum,
        balance_residual=res,
        dt=h,
    )


def _checks(
    setup: ProblemSetup,
    tr: Trajectory,
    stat: StationaryResult,
    chain: diag.ConstantChain,
    series: diag.TrajectorySeries,
    report: diag.DecayReport,
) -> tuple[Check, ...]:
    out = []
    E = tr.energy
    slack = 1e-8 * max(1.0, abs(E[0]))
    rise = float(np.max(np.diff(E), initial=0.0))
    out.append(Check("energy_nonincreasing", rise <= slack, f"max increase {rise:.3g}", True))
    out.append(
        Check(
            "stationary_converged",
            stat.converged,
            f"|grad| = {stat.el_residual:.3g} after {stat.iterations} iterations",
            True,
        )
    )
    G = series.G
    g_rise = float(np.max(np.diff(G), initial=0.0))
    out.append(
        Check(
            "G_nonincreasing",
            g_rise <= 1e-6 * max(1.0, G[0]),
            f"max increase {g_rise:.3g}",
            True,
        )
    )
    out.append(
        Check("G_nonnegative", G.min() >= -1e-10, f"min {G.min():.3g}", True)
    )
    pick = np.unique(np.linspace(0, len(tr) - 1, GAP_SAMPLES).round().astype(int))
    lhs, rhs = series.gap_lhs[pick], series.gap_rhs[pick]
    gap_ok = bool(np.all(lhs <= rhs * (1 + 1e-6) + 1e-10))
    out.append(
        Check(
            "convexity_gap",
            gap_ok,
            f"{pick.size} records, min(rhs - lhs) {np.min(rhs - lhs):.3g}",
            True,
        )
    )
    low = float(np.min(series.I_of_u - series.I_star))
    out.append(Check("static_energy_above_minimum", low >= -1e-8, f"min gap {low:.3g}", True))

    # reported only: they depend on the surrogate constant or on the horizon
    n_checked = int(report.checked.sum())
    out.append(
        Check(
            "decay_bound_theorem",
            report.all_passed_theorem,
            f"{int(report.passed_theorem[report.checked].sum())}/{n_checked} records with t >= {report.t_min}",
            False,
        )
    )
    out.append(
        Check(
            "decay_bound_proof_variant",
            report.all_passed_proof,
            f"{int(report.passed_proof[report.checked].sum())}/{n_checked} records with t >= {report.t_min}",
            False,
        )
    )
    out.append(
        Check(
            "tail_exponent",
            report.exponent_within_envelope,
            f"fitted {report.fitted_exponent:.4g}, bound rate {report.bound_exponent:.4g}",
            False,
        )
    )
    out.append(Check("tail_monotone", report.tail_monotone, "lhs on the last half of t >= t_min", False))
    prop1 = float(series.prop1.max())
    out.append(
        Check(
            "energy_budget_theta0",
            prop1 <= chain.theta0 * (1 + 1e-12),
            f"max {prop1:.6g} vs theta0 {chain.theta0:.6g}",
            False,
        )
    )
    a_lhs, a_rhs = diag.affirmation_check(tr, chain.theta0)
    out.append(
        Check(
            "weighted_dissipation",
            a_lhs <= a_rhs * (1 + 1e-12),
            f"{a_lhs:.6g} <= {a_rhs:.6g}",
            False,
        )
    )
    slope = float(np.max(np.abs(np.diff(G)) / np.diff(tr.times), initial=0.0))
    out.append(
        Check(
            "G_slope_bounded",
            slope <= 1.1 * chain.theta2,
            f"max |dG/dt| {slope:.4g} vs 1.1 theta2 {1.1 * chain.theta2:.4g}",
            False,
        )
    )
    return tuple(out)


def run_scenario(config: ScenarioConfig) -> RunResult:
    setup = config.build()
    dt = time_step(config, setup)
    log.info("%s: dt=%.4g, %d steps", config.name, dt, math.ceil(config.T / dt))
    if config.solver == "classical-fd":
        tr = classical_trajectory(config, setup, dt)
    else:
        tr = simulate(setup, config.T, dt, record_every=config.record_every)
    stat = solve_stationary(setup, tol=config.stationary_tol)
    C_hat = poincare_constant_estimate(
        setup.order, setup.psi, setup.p, setup.grid, seed=config.seed
    )
    chain = diag.constant_chain(setup, tr, stat.u_star, C_hat=C_hat)
    series = diag.trajectory_series(tr, stat.u_star)
    report = diag.decay_bound_report(tr, stat.u_star, chain, config.t_min, series=series)
    return RunResult(
        config=config,
        setup=setup,
        trajectory=tr,
        stationary=stat,
        chain=chain,
        series=series,
        report=report,
        checks=_checks(setup, tr, stat, chain, series, report),
    )

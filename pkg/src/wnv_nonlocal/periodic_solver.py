# Seasonal dynamics on a fixed interval and the time-periodic solutions they converge to

import math

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
import pandas as pd

from .errors import ConvergenceError, ParameterError, StepSizeError
from .fb_sim import THETA, confine, kernel_pair, phase_steps, positivity_dt_bound
from .nonlocal_eigen import lambda1_P
from .ode_eigen import lambda1_O
from .utils.quadrature import grid_size, kernel_operator, lattice_stencil


class Origin(Enum):
    FROM_ABOVE = "FromAbove"
    FROM_BELOW = "FromBelow"
    MAXIMAL_SEQUENCE = "MaximalSequence"


@dataclass(frozen=True)
class SolverSettings:
    """
    Numerical settings of the fixed-interval and periodic solvers.

    Attributes
    ----------
    dx: Grid spacing.
    dt: "auto" or the largest time step to use.
    period_tol: Stop once two successive period snapshots differ by at most this (sup norm).
    max_periods: Period budget of the iterations.
    K1, K2: Shifts of the maximal sequence, a1 e2 + b1 and a2 e1 + b2 + k (see `resolve`).
    """
    dx: float = 0.02
    dt: object = "auto"
    period_tol: float = 1e-8
    max_periods: int = 5000
    K1: float = None
    K2: float = None

    def resolve(self, p):
        """
        Settings with K1 and K2 filled in for p.
        """
        return replace(self, K1=p.a1 * p.e2 + p.b1, K2=p.a2 * p.e1 + p.b2 + p.k)

    def max_dt(self, p):
        """
        Largest step satisfying both the positivity bound and K dt <= theta for the shifts.
        """
        s = self.resolve(p)
        bound = min(positivity_dt_bound(p), THETA / max(s.K1, s.K2))

        if self.dt == "auto":
            return bound
        if not 0 < self.dt <= bound * (1 + 1e-12):
            raise StepSizeError(f"dt={self.dt} exceeds the step bound {bound}.")
        return float(self.dt)


@dataclass(frozen=True)
class FixedRun:
    """
    Trajectory of the fixed-interval problem: fields u_i[time index, node index].
    """
    t: np.ndarray
    x: np.ndarray
    u1: np.ndarray
    u2: np.ndarray


@dataclass(frozen=True)
class PeriodicSolution:
    """
    Time-periodic solution sampled over one period.

    Attributes
    ----------
    t: Times in [0, omega].
    x: Grid nodes (None for the spatially homogeneous problem).
    U1, U2: Samples, shape (len(t), len(x)) or (len(t),).
    residual: Periodicity defect sup |U(0) - U(omega)|.
    origin: Origin of the construction.
    periods: Iterations used.
    """
    t: np.ndarray
    x: np.ndarray
    U1: np.ndarray
    U2: np.ndarray
    residual: float
    origin: Origin
    periods: int

    @property
    def is_trivial(self):
        return not (np.any(self.U1 > 0) or np.any(self.U2 > 0))

    def frame(self):
        """
        Long-format DataFrame (t, x, U1, U2); x is NaN for the homogeneous problem.
        """
        if self.x is None:
            return pd.DataFrame({"t": self.t, "x": np.nan, "U1": self.U1, "U2": self.U2})

        tt, xx = np.meshgrid(self.t, self.x, indexing="ij")
        return pd.DataFrame({"t": tt.ravel(), "x": xx.ravel(), "U1": self.U1.ravel(), "U2": self.U2.ravel()})


def _segments(p, t0, t1, dt_max):
    # Season pieces (start, length, warm) covering [t0, t1], tiled by whole seasons where possible
    clock = p.clock
    pieces = []
    t = t0

    while t < t1 - 1e-12 * p.omega:
        m = int(math.floor(t / p.omega + 1e-12))
        start = m * p.omega
        warm_end = start + clock.warm_len

        if clock.warm_len > 0 and t < warm_end - 1e-12 * p.omega:
            end, warm = warm_end, True
        else:
            end, warm = start + p.omega, False

        end = min(end, t1)
        pieces.append((t, end - t, warm))
        t = end

    return [(s, length, warm, *phase_steps(length, dt_max)) for s, length, warm in pieces]


class FixedIntervalProblem(object):
    """
    Seasonal nonlocal system on a fixed closed interval, discretised by the composite trapezoid
    rule in x and explicit Euler steps in t (cold-season mosquitoes decay exactly).
    """
    def __init__(self, p, kernels, interval, settings=None):
        self.p = p.check()
        self.settings = SolverSettings() if settings is None else settings
        self.interval = tuple(interval)

        dx = self.settings.dx
        n_nodes = grid_size(interval, dx) + 1
        self.x = interval[0] + np.arange(n_nodes) * dx

        k1, k2 = kernel_pair(kernels)
        self.K1, _ = kernel_operator(lattice_stencil(k1, dx), n_nodes, end_weights=True)
        self.K2 = self.K1 if k2 == k1 else kernel_operator(lattice_stencil(k2, dx), n_nodes, end_weights=True)[0]
        self.dt_max = self.settings.max_dt(p)

    def march(self, u1, u2, t0, t1):
        """
        March from (u1, u2) at t0 to t1, returning every step.

        Returns
        -------
        FixedRun
        """
        p = self.p
        times = [t0]
        U1 = [np.asarray(u1, dtype=float)]
        U2 = [np.asarray(u2, dtype=float)]

        for start, length, warm, n, dt in _segments(p, t0, t1, self.dt_max):
            u1, u2 = U1[-1], U2[-1]
            u2_start = u2

            for i in range(n):
                L1 = self.K1 @ u1 - u1
                if warm:
                    L2 = self.K2 @ u2 - u2
                    du1 = p.d1 * L1 + p.a1 * (p.e1 - u1) * u2 - p.b1 * u1
                    du2 = p.d2 * L2 + p.a2 * (p.e2 - u2) * u1 - p.b2 * u2
                    u1 = confine(u1 + dt * du1, p.e1, "u1")
                    u2 = confine(u2 + dt * du2, p.e2, "u2")
                else:
                    u1 = confine(u1 + dt * (p.d1 * L1 - p.b1 * u1), p.e1, "u1")
                    u2 = u2_start * math.exp(-p.k * length * (i + 1) / n)

                times.append(start + length * (i + 1) / n)
                U1.append(u1)
                U2.append(u2)

        return FixedRun(np.array(times), self.x, np.array(U1), np.array(U2))

    def period(self, u1, u2):
        return self.march(u1, u2, 0.0, self.p.omega)


def solve_fixed(p, kernels, interval, init, t_end, settings=None):
    """
    Solve the seasonal system on a fixed interval.

    Parameters
    ----------
    p: ModelParams.
    kernels: Kernel or (J1, J2).
    interval: (L1, L2); settings.dx must divide its length.
    init: (u1, u2) arrays on the grid nodes, or a pair of functions of x, with 0 <= u_i <= e_i.
    t_end: Final time.
    settings: SolverSettings.

    Returns
    -------
    FixedRun
    """
    problem = FixedIntervalProblem(p, kernels, interval, settings)
    u1, u2 = (np.asarray(f(problem.x) if callable(f) else f, dtype=float) * np.ones_like(problem.x)
              for f in init)

    if np.any(u1 < 0) or np.any(u2 < 0) or np.any(u1 > p.e1) or np.any(u2 > p.e2):
        raise ParameterError("Initial data must satisfy 0 <= u_i <= e_i.")

    return problem.march(u1, u2, 0.0, t_end)


def _settled(change, last_change, tol):
    """
    Stop rule for a geometrically converging iteration: the step is below tol and so is the
    estimated remaining distance change * r / (1 - r), r the contraction of the last two steps.
    """
    if change <= 1e-3 * tol:
        return True
    if last_change is None or change >= last_change or change > tol:
        return False

    r = change / last_change
    return change * r / (1 - r) <= tol


def _iterate_period_map(problem, u1, u2, origin):
    settings = problem.settings
    last_change = None

    for n in range(1, settings.max_periods + 1):
        run = problem.period(u1, u2)
        new1, new2 = run.u1[-1], run.u2[-1]
        change = max(np.max(np.abs(new1 - u1)), np.max(np.abs(new2 - u2)))
        u1, u2 = new1, new2

        if _settled(change, last_change, settings.period_tol):
            break
        last_change = change
    else:
        raise ConvergenceError(f"Period map did not converge within {settings.max_periods} periods.")

    if max(u1.max(), u2.max()) <= 10 * settings.period_tol:
        u1, u2 = np.zeros_like(u1), np.zeros_like(u2)

    run = problem.period(u1, u2)
    residual = max(np.max(np.abs(run.u1[-1] - run.u1[0])), np.max(np.abs(run.u2[-1] - run.u2[0])))

    return PeriodicSolution(run.t, run.x, run.u1, run.u2, float(residual), origin, n)


def periodic_from_above(p, kernel, interval, settings=None):
    """
    Maximal periodic solution on a fixed interval, the limit of the period map iterated from
    (e1, e2). The limit is (0, 0) when lambda_1^P(interval) >= 0.

    Parameters
    ----------
    p: ModelParams.
    kernel: Kernel or (J1, J2).
    interval: (L1, L2).
    settings: SolverSettings.

    Returns
    -------
    PeriodicSolution
    """
    problem = FixedIntervalProblem(p, kernel, interval, settings)
    ones = np.ones_like(problem.x)

    return _iterate_period_map(problem, p.e1 * ones, p.e2 * ones, Origin.FROM_ABOVE)


def periodic_from_below(p, kernel, interval, eps, settings=None):
    """
    Periodic solution on a fixed interval reached from the small positive lower solution
    eps (phi(0, .), psi(0, .)), with (phi, psi) the principal eigenfunctions (sup phi(0, .) = 1).

    Parameters
    ----------
    p: ModelParams with lambda_1^P(interval) < 0.
    kernel: Kernel of both species.
    interval: (L1, L2).
    eps: Scale of the lower solution.
    settings: SolverSettings.

    Returns
    -------
    PeriodicSolution
    """
    settings = SolverSettings() if settings is None else settings
    res = lambda1_P(p, kernel, interval, dx=settings.dx, n_samples=2)

    if not res.upper < 0:
        raise ParameterError(f"lambda_1^P = {res.upper:.6g} is not negative; there is no positive "
                             "lower solution.")

    _, _, phi, psi, _, _ = res.eigenfunctions()
    scale = eps / phi[0].max()
    u1, u2 = scale * phi[0], scale * psi[0]

    if np.any(u1 > p.e1) or np.any(u2 > p.e2):
        raise ParameterError(f"eps={eps} is too large: the lower solution exceeds (e1, e2).")

    problem = FixedIntervalProblem(p, kernel, interval, settings)
    return _iterate_period_map(problem, u1, u2, Origin.FROM_BELOW)


def _time_grid(p, dt_max):
    # Step sizes and season flags of one period, tiling each season exactly
    clock = p.clock
    n_w, dt_w = phase_steps(clock.warm_len, dt_max)
    n_c, dt_c = phase_steps(clock.cold_len, dt_max)

    dts = np.concatenate([np.full(n_w, dt_w), np.full(n_c, dt_c)])
    warm = np.concatenate([np.ones(n_w, bool), np.zeros(n_c, bool)])
    t = np.concatenate([[0.0], clock.warm_len * np.arange(1, n_w + 1) / max(n_w, 1),
                        clock.warm_len + clock.cold_len * np.arange(1, n_c + 1) / max(n_c, 1)])

    return t[: len(dts) + 1], dts, warm


def ode_periodic(p, settings=None):
    """
    Periodic solution of the spatially homogeneous seasonal system by the maximal sequence.

    Each iterate solves u_t + K u = K u_prev + f(u_prev) over one period, starting from the end
    value of the previous iterate, with u_prev = (e1, e2) initially. The linear part is stepped
    with the time grid of the field solvers, and cold-season mosquitoes use the effective rate
    (1 - exp(-k dt)) / dt, so that the limit is the periodic orbit of those solvers for
    spatially constant data. Iterates are nonincreasing.

    Parameters
    ----------
    p: ModelParams.
    settings: SolverSettings.

    Returns
    -------
    PeriodicSolution with U1, U2 of shape (len(t),)
    """
    sol, _ = maximal_sequence(p, settings)
    return sol


def maximal_sequence(p, settings=None, keep=0):
    """
    Run the maximal sequence; returns the limit and the first `keep` iterates (as (U1, U2)
    pairs over one period).
    """
    settings = (SolverSettings() if settings is None else settings).resolve(p)
    K1, K2 = settings.K1, settings.K2
    t, dts, warm = _time_grid(p, settings.max_dt(p))
    kappa = (1 - np.exp(-p.k * dts)) / dts

    prev1 = np.full(len(t), p.e1)
    prev2 = np.full(len(t), p.e2)
    kept = []
    last_change = None

    for n in range(1, settings.max_periods + 1):
        u1 = np.empty(len(t))
        u2 = np.empty(len(t))
        u1[0], u2[0] = prev1[-1], prev2[-1]

        for i, dt in enumerate(dts):
            P1, P2 = prev1[i], prev2[i]
            if warm[i]:
                F1 = K1 * P1 + p.a1 * (p.e1 - P1) * P2 - p.b1 * P1
                F2 = K2 * P2 + p.a2 * (p.e2 - P2) * P1 - p.b2 * P2
            else:
                F1 = (K1 - p.b1) * P1
                F2 = (K2 - kappa[i]) * P2
            u1[i + 1] = (1 - K1 * dt) * u1[i] + dt * F1
            u2[i + 1] = (1 - K2 * dt) * u2[i] + dt * F2

        if len(kept) < keep:
            kept.append((u1.copy(), u2.copy()))

        change = max(np.max(np.abs(u1 - prev1)), np.max(np.abs(u2 - prev2)))
        prev1, prev2 = u1, u2

        if _settled(change, last_change, settings.period_tol):
            break
        last_change = change
    else:
        raise ConvergenceError(f"Maximal sequence did not converge within {settings.max_periods} periods.")

    if max(prev1.max(), prev2.max()) <= 10 * settings.period_tol:
        prev1, prev2 = np.zeros(len(t)), np.zeros(len(t))

    residual = max(abs(prev1[-1] - prev1[0]), abs(prev2[-1] - prev2[0]))

    return PeriodicSolution(t, None, prev1, prev2, float(residual), Origin.MAXIMAL_SEQUENCE, n), kept


def domain_limit_check(p, kernel, L_sequence, settings=None):
    """
    Maximal periodic solutions on [-L, L] for growing L against the homogeneous periodic solution.

    Parameters
    ----------
    p: ModelParams with delta < 1 and lambda1_O < 0.
    kernel: Kernel of both species.
    L_sequence: Increasing half-widths (settings.dx must divide each 2L).
    settings: SolverSettings.

    Returns
    -------
    pandas DataFrame with columns L, U1_mid, U2_mid, gap1, gap2 (values at x = 0, t = 0).
    `attrs["nondecreasing"]` records whether each solution dominates the previous one on the
    common nodes, `attrs["gap_decreasing"]` whether the gaps shrink.
    """
    if not p.delta < 1:
        raise ParameterError("The domain limit needs delta < 1.")
    if not lambda1_O(p, n_samples=2).value < 0:
        raise ParameterError("The domain limit needs lambda1_O < 0.")

    settings = SolverSettings() if settings is None else settings
    ref = ode_periodic(p, settings)

    rows = []
    nondecreasing = True
    previous = None

    for L in L_sequence:
        sol = periodic_from_above(p, kernel, (-L, L), settings)
        mid = len(sol.x) // 2

        if previous is not None:
            offset = int(round((L - previous[0]) / settings.dx))
            width = previous[1].shape[0]
            tol = 10 * settings.period_tol
            nondecreasing &= bool(np.all(sol.U1[0, offset:offset + width] >= previous[1] - tol))
            nondecreasing &= bool(np.all(sol.U2[0, offset:offset + width] >= previous[2] - tol))

        rows.append((float(L), sol.U1[0, mid], sol.U2[0, mid],
                     abs(ref.U1[0] - sol.U1[0, mid]), abs(ref.U2[0] - sol.U2[0, mid])))
        previous = (L, sol.U1[0], sol.U2[0])

    df = pd.DataFrame(rows, columns=["L", "U1_mid", "U2_mid", "gap1", "gap2"])
    df.attrs["nondecreasing"] = nondecreasing
    df.attrs["gap_decreasing"] = bool(np.all(np.diff(df["gap1"]) <= 0) and np.all(np.diff(df["gap2"]) <= 0))

    return df

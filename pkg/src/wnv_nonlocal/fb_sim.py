# Free-boundary simulation of the seasonal nonlocal model: moving infected interval in warm
# seasons, frozen interval and decay in cold seasons

import math

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
import pandas as pd

from .errors import ParameterError, StepSizeError
from .kernels import Kernel
from .nonlocal_eigen import FreeBoundaryIndex
from .utils.quadrature import lattice_convolution, lattice_range, lattice_stencil

THETA = 0.9
# Round-off allowed outside [0, e_i] before an explicit update counts as a violation
INVARIANT_TOL = 1e-12


def positivity_dt_bound(p, theta=THETA):
    """
    Largest time step keeping the explicit update a monotone map of [0, e1] x [0, e2].

    Returns
    -------
    theta / max(d1 + b1 + a1 e2, d2 + b2 + a2 e1, k)
    """
    return theta / max(p.d1 + p.b1 + p.a1 * p.e2, p.d2 + p.b2 + p.a2 * p.e1, p.k)


def kernel_pair(kernels):
    """
    Normalise a Kernel or a (J1, J2) pair to a pair.
    """
    if isinstance(kernels, Kernel):
        return kernels, kernels

    k1, k2 = kernels
    return k1, k2


def confine(u, upper, name="u"):
    """
    Check an explicit update against [0, upper] and remove round-off excursions.

    Under the positivity step bound the raw update already lies in the region, so any excursion
    beyond INVARIANT_TOL * max(1, upper) means the step or the right-hand side is wrong.

    Raises
    ------
    StepSizeError
    """
    tol = INVARIANT_TOL * max(1.0, upper)
    if len(u) and (u.min() < -tol or u.max() > upper + tol):
        raise StepSizeError(f"Explicit update of {name} left [0, {upper}]: range [{u.min():.6g}, {u.max():.6g}].")

    return np.clip(u, 0.0, upper)


@lru_cache(maxsize=64)
def _stencil(kernel, dx):
    stencil = lattice_stencil(kernel, dx)
    stencil.setflags(write=False)
    return stencil


@dataclass(frozen=True)
class InitialData:
    """
    Initial densities sampled at lattice nodes x covering [-h0, h0].
    """
    x: np.ndarray
    u1: np.ndarray
    u2: np.ndarray

    def scaled(self, sigma):
        return InitialData(self.x, sigma * self.u1, sigma * self.u2)

    def at(self, x):
        return (np.interp(x, self.x, self.u1, left=0.0, right=0.0),
                np.interp(x, self.x, self.u2, left=0.0, right=0.0))


def default_init(p, dx):
    """
    Cosine initial data u_{i,0}(x) = e_i cos(pi x / (2 h0)) on the lattice nodes of [-h0, h0],
    exactly zero at +-h0.

    Parameters
    ----------
    p: ModelParams.
    dx: Lattice spacing.

    Returns
    -------
    InitialData
    """
    j_min, j_max = lattice_range(-p.h0, p.h0, dx)
    x = np.arange(j_min - 1, j_max + 2) * dx
    profile = np.where(np.abs(x) < p.h0, np.cos(np.pi * x / (2 * p.h0)), 0.0)
    profile = np.clip(profile, 0.0, 1.0)

    return InitialData(x, p.e1 * profile, p.e2 * profile)


@dataclass(frozen=True)
class FieldState:
    """
    State of a free-boundary run.

    Attributes
    ----------
    t: Time.
    g, h: Boundary positions.
    dx: Lattice spacing.
    j0: Lattice index of the first active node; nodes are (j0 + arange(n)) * dx.
    u1, u2: Densities at the active nodes (the lattice nodes strictly inside (g, h)).
    period_index: Number of completed periods.
    """
    t: float
    g: float
    h: float
    dx: float
    j0: int
    u1: np.ndarray
    u2: np.ndarray
    period_index: int = 0

    @property
    def nodes(self):
        return (self.j0 + np.arange(len(self.u1))) * self.dx

    @property
    def n_nodes(self):
        return len(self.u1)

    @property
    def length(self):
        return self.h - self.g


def initial_state(p, init, dx):
    """
    FieldState at t = 0 on (-h0, h0) from InitialData or from a pair of functions of x.
    """
    j_min, j_max = lattice_range(-p.h0, p.h0, dx)
    if j_max < j_min:
        raise ParameterError(f"dx={dx} leaves no lattice node inside (-h0, h0).")

    x = np.arange(j_min, j_max + 1) * dx
    if isinstance(init, InitialData):
        u1, u2 = init.at(x)
    else:
        u1 = np.asarray(init[0](x), dtype=float) * np.ones_like(x)
        u2 = np.asarray(init[1](x), dtype=float) * np.ones_like(x)

    if np.any(u1 < 0) or np.any(u2 < 0) or np.any(u1 > p.e1) or np.any(u2 > p.e2):
        raise ParameterError("Initial data must satisfy 0 <= u_i <= e_i.")

    return FieldState(0.0, -p.h0, p.h0, float(dx), j_min, u1, u2)


def _check_dt(p, dt):
    bound = positivity_dt_bound(p)
    if not 0 < dt <= bound * (1 + 1e-12):
        raise StepSizeError(f"dt={dt} violates the positivity bound {bound}.")


def boundary_flux(state, kernels, p):
    """
    Boundary speeds driven by the outward kernel flux of both species.

    h_rate = sum_i mu_i dx sum_j u_i(x_j) tail_i(h - x_j) and
    g_rate = -sum_i mu_i dx sum_j u_i(x_j) tail_i(x_j - g).

    Returns
    -------
    (g_rate, h_rate)
    """
    if state.n_nodes == 0:
        return 0.0, 0.0

    x = state.nodes
    g_rate = 0.0
    h_rate = 0.0

    for mu, kernel, u in zip((p.mu1, p.mu2), kernel_pair(kernels), (state.u1, state.u2)):
        if mu == 0:
            continue
        h_rate += mu * state.dx * float(np.dot(u, kernel.tail(state.h - x)))
        g_rate -= mu * state.dx * float(np.dot(u, kernel.tail(x - state.g)))

    return g_rate, h_rate


def _expand(state, g, h):
    # Activate the nodes newly covered by (g, h) at value 0
    j_min, j_max = lattice_range(g, h, state.dx)
    j_min = min(j_min, state.j0)
    j_max = max(j_max, state.j0 + state.n_nodes - 1)

    left = state.j0 - j_min
    right = j_max - (state.j0 + state.n_nodes - 1)

    if left == 0 and right == 0:
        return state.j0, state.u1, state.u2

    pad = (left, right)
    return j_min, np.pad(state.u1, pad), np.pad(state.u2, pad)


def warm_rhs(state, p, kernels):
    """
    Semi-discrete right-hand side of the warm-season equations at the active nodes.
    """
    k1, k2 = kernel_pair(kernels)
    u1, u2 = state.u1, state.u2

    L1 = lattice_convolution(u1, _stencil(k1, state.dx)) - u1
    L2 = lattice_convolution(u2, _stencil(k2, state.dx)) - u2

    du1 = p.d1 * L1 + p.a1 * (p.e1 - u1) * u2 - p.b1 * u1
    du2 = p.d2 * L2 + p.a2 * (p.e2 - u2) * u1 - p.b2 * u2

    return du1, du2


def step_warm(state, p, kernels, dt):
    """
    One explicit Euler step of the warm-season dynamics, boundaries included.

    Parameters
    ----------
    state: FieldState.
    p: ModelParams.
    kernels: Kernel or (J1, J2).
    dt: Time step, at most `positivity_dt_bound(p)`.

    Returns
    -------
    FieldState
    """
    _check_dt(p, dt)

    du1, du2 = warm_rhs(state, p, kernels)
    g_rate, h_rate = boundary_flux(state, kernels, p)

    u1 = confine(state.u1 + dt * du1, p.e1, "u1")
    u2 = confine(state.u2 + dt * du2, p.e2, "u2")

    g = state.g + dt * g_rate
    h = state.h + dt * h_rate

    moved = replace(state, u1=u1, u2=u2)
    j0, u1, u2 = _expand(moved, g, h)

    return replace(state, t=state.t + dt, g=g, h=h, j0=j0, u1=u1, u2=u2)


def step_cold(state, p, kernels, dt, u2_start=None, elapsed=None):
    """
    One step of the cold-season dynamics on the frozen interval.

    u1 takes an explicit Euler step of d1 L[u1] - b1 u1. u2 decays exactly: it is multiplied by
    exp(-k dt), or, when `u2_start` is given, set to u2_start * exp(-k * elapsed) with `elapsed`
    the time since the cold season began.

    Returns
    -------
    FieldState
    """
    _check_dt(p, dt)

    k1, _ = kernel_pair(kernels)
    u1 = state.u1
    L1 = lattice_convolution(u1, _stencil(k1, state.dx)) - u1
    u1 = confine(u1 + dt * (p.d1 * L1 - p.b1 * u1), p.e1, "u1")

    if u2_start is None:
        u2 = state.u2 * math.exp(-p.k * dt)
    else:
        u2 = u2_start * math.exp(-p.k * elapsed)

    return replace(state, t=state.t + dt, u1=u1, u2=u2)


@dataclass
class SimSettings:
    """
    Numerical settings of a free-boundary run.

    Attributes
    ----------
    dx: Lattice spacing.
    dt: "auto" (the positivity bound) or the largest step to use.
    snapshot_every: Record the field every this many periods (0: never).
    eigen_method: Perron solver for the free-boundary index.
    track_lambda_f: Compute the free-boundary index at each period start.
    """
    dx: float = 0.02
    dt: object = "auto"
    snapshot_every: int = 0
    eigen_method: str = "auto"
    track_lambda_f: bool = True

    def max_dt(self, p):
        bound = positivity_dt_bound(p)
        if self.dt == "auto":
            return bound
        if not 0 < self.dt <= bound * (1 + 1e-12):
            raise StepSizeError(f"dt={self.dt} violates the positivity bound {bound}.")
        return float(self.dt)


def phase_steps(length, dt_max):
    """
    Number of steps and step size tiling a season of the given length exactly.
    """
    if length <= 0:
        return 0, 0.0
    n = int(math.ceil(length / dt_max - 1e-12))
    return n, length / n


@dataclass
class Trajectory:
    """
    Traces of a free-boundary run.

    Attributes
    ----------
    boundaries: DataFrame (t, g, h), one row per step and the initial state.
    norms: DataFrame (t, sup_u1, sup_u2).
    lambda_f: DataFrame (period, t, lambda_F), one row per period start.
    snapshots: Mapping t -> DataFrame (x, u1, u2).
    final: Last FieldState.
    """
    boundaries: pd.DataFrame
    norms: pd.DataFrame
    lambda_f: pd.DataFrame
    snapshots: dict
    final: FieldState

    @property
    def snapshot_times(self):
        return sorted(self.snapshots)


def _sup(u):
    return float(u.max()) if len(u) else 0.0


class FreeBoundarySimulation(object):
    """
    Period-by-period driver of a free-boundary run.

    Each call of `run_period` marches one warm season (coupled dynamics, moving boundaries)
    followed by one cold season (frozen boundaries, exact mosquito decay). The time steps tile
    each season exactly.
    """
    def __init__(self, p, kernels, init=None, settings=None):
        """
        Parameters
        ----------
        p: ModelParams.
        kernels: Kernel or (J1, J2).
        init: InitialData, a pair of functions of x, or None for `default_init`.
        settings: SimSettings.
        """
        self.p = p.check()
        self.kernels = kernel_pair(kernels)
        self.settings = SimSettings() if settings is None else settings

        dx = self.settings.dx
        self.state = initial_state(p, default_init(p, dx) if init is None else init, dx)

        dt_max = self.settings.max_dt(p)
        clock = p.clock
        self.warm_steps = phase_steps(clock.warm_len, dt_max)
        self.cold_steps = phase_steps(clock.cold_len, dt_max)

        self.index = None
        if self.settings.track_lambda_f and self.kernels[0] == self.kernels[1]:
            self.index = FreeBoundaryIndex(p, self.kernels[0], dx, self.settings.eigen_method)

        self._boundaries = [(0.0, self.state.g, self.state.h)]
        self._norms = [(0.0, _sup(self.state.u1), _sup(self.state.u2))]
        self._lambda_f = []
        self.snapshots = {}
        self._record_index()

    def _record(self):
        s = self.state
        self._boundaries.append((s.t, s.g, s.h))
        self._norms.append((s.t, _sup(s.u1), _sup(s.u2)))

    def _record_index(self):
        if self.index is not None:
            value = self.index.from_count(self.state.n_nodes)
            self._lambda_f.append((self.state.period_index, self.state.t, value))

    @property
    def lambda_f(self):
        """
        Most recent free-boundary index (None when not tracked).
        """
        return self._lambda_f[-1][2] if self._lambda_f else None

    def run_period(self):
        """
        Advance by one full period and return the new FieldState.
        """
        p = self.p
        m = self.state.period_index
        start = m * p.omega

        clock = p.clock

        n, dt = self.warm_steps
        for i in range(n):
            self.state = step_warm(self.state, p, self.kernels, dt)
            self.state = replace(self.state, t=start + clock.warm_len * (i + 1) / n)
            self._record()

        n, dt = self.cold_steps
        u2_start = self.state.u2
        warm_end = start + clock.warm_len
        for i in range(n):
            elapsed = clock.cold_len * (i + 1) / n
            self.state = step_cold(self.state, p, self.kernels, dt, u2_start=u2_start, elapsed=elapsed)
            self.state = replace(self.state, t=warm_end + elapsed)
            self._record()

        self.state = replace(self.state, t=(m + 1) * p.omega, period_index=m + 1)
        self._boundaries[-1] = (self.state.t, self.state.g, self.state.h)
        self._norms[-1] = (self.state.t, _sup(self.state.u1), _sup(self.state.u2))

        every = self.settings.snapshot_every
        if every and self.state.period_index % every == 0:
            self.snapshots[self.state.t] = self.field_frame()

        self._record_index()

        return self.state

    def field_frame(self):
        return pd.DataFrame({"x": self.state.nodes, "u1": self.state.u1, "u2": self.state.u2})

    def trajectory(self):
        return Trajectory(
            boundaries=pd.DataFrame(self._boundaries, columns=["t", "g", "h"]),
            norms=pd.DataFrame(self._norms, columns=["t", "sup_u1", "sup_u2"]),
            lambda_f=pd.DataFrame(self._lambda_f, columns=["period", "t", "lambda_F"]),
            snapshots=dict(self.snapshots),
            final=self.state,
        )


def simulate(p, kernels, init=None, n_periods=10, settings=None):
    """
    Run the free-boundary model for `n_periods` periods.

    Parameters
    ----------
    p: ModelParams.
    kernels: Kernel or (J1, J2); the free-boundary index is only tracked when J1 = J2.
    init: InitialData, a pair of functions of x, or None for `default_init`.
    n_periods: Number of periods.
    settings: SimSettings.

    Returns
    -------
    Trajectory
    """
    sim = FreeBoundarySimulation(p, kernels, init, settings)

    for _ in range(n_periods):
        sim.run_period()

    return sim.trajectory()


@dataclass(frozen=True)
class EnergyBound:
    """
    Bound on the interval length h - g valid when a1 a2 e1 e2 <= b1 b2.
    """
    D: float
    bound: float
    applies: bool = field(default=True)


def energy_bound(p, init, dx):
    """
    Energy-type bound 2 h0 + (1/D) int [u1(0) + (a1 e1 / b2) u2(0)] dx on the interval length,
    D = min(d1, a1 e1 d2 / b2) / max(mu1, mu2).

    Parameters
    ----------
    p: ModelParams.
    init: Initial data accepted by `initial_state`.
    dx: Lattice spacing; the integral uses the lattice rule of the simulator.

    Returns
    -------
    EnergyBound (`applies` is False when a1 a2 e1 e2 > b1 b2)
    """
    state = initial_state(p, init, dx)
    mass = dx * float(np.sum(state.u1 + (p.a1 * p.e1 / p.b2) * state.u2))
    applies = p.a1 * p.a2 * p.e1 * p.e2 <= p.b1 * p.b2

    mu = max(p.mu1, p.mu2)
    if mu == 0:
        return EnergyBound(math.inf, 2 * p.h0, applies)

    D = min(p.d1, p.a1 * p.e1 * p.d2 / p.b2) / mu
    bound = math.inf if D == 0 else 2 * p.h0 + mass / D

    return EnergyBound(D, bound, applies)

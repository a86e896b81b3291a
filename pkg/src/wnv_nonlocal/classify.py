# Spreading/vanishing classification: static eigenvalue rules, finite-horizon dynamic detection,
# threshold searches and parameter sweeps

from dataclasses import dataclass, field
from enum import Enum
from warnings import warn

import numpy as np
import pandas as pd

from .errors import BracketError, ConvergenceError, KernelMismatchError, ParameterError
from .fb_sim import FreeBoundarySimulation, SimSettings, default_init, kernel_pair
from .model import ModelParams
from .nonlocal_eigen import check_same_kernel, lambda1_P
from .ode_eigen import lambda1_O
from .utils.generate_grid import generate_grid
from .utils.parallel import schedule_runs
from .utils.quadrature import fitted_spacing
from .utils.roots import bisect_predicate

LAMBDA_TOL = 1e-10
DECAY_TOL = 1e-6
GROWTH_TOL = 1e-8
STALL_PERIODS = 3


class Verdict(Enum):
    SPREADING = "Spreading"
    VANISHING = "Vanishing"
    UNDETERMINED = "Undetermined"


@dataclass
class Outcome:
    """
    Classification of a run.

    Attributes
    ----------
    verdict: Verdict.
    rule: Name of the single rule that decided the verdict.
    t_max: Simulated horizon for an undetermined dynamic verdict (None otherwise).
    evidence: Values backing the verdict: lambda_O, lambda_P_h0, lambda_F trace, final_length,
              final_sup and periods, as far as they were computed.
    """
    verdict: Verdict
    rule: str
    t_max: float = None
    evidence: dict = field(default_factory=dict)

    def as_dict(self):
        evidence = {k: (list(v) if isinstance(v, (list, tuple, np.ndarray)) else v)
                    for k, v in self.evidence.items() if k != "trajectory"}
        return {"verdict": self.verdict.value, "rule": self.rule, "t_max": self.t_max,
                "evidence": evidence}


def classify_static(p, kernel, dx=None, kernel2=None, method="auto"):
    """
    Decide spreading or vanishing from the principal eigenvalues alone.

    Rules, in order: delta = 1 gives vanishing; distinct kernels leave the verdict undetermined;
    lambda1_O >= 0 gives vanishing; lambda1_O < 0 together with lambda_1^P([-h0, h0]) <= 0
    gives spreading; anything else is undetermined.

    Parameters
    ----------
    p: ModelParams.
    kernel: Kernel of species 1.
    dx: Grid spacing for lambda_1^P, adjusted to divide 2 h0 (default: support radius / 100).
    kernel2: Kernel of species 2 (default: the same as species 1).
    method: Perron solver.

    Returns
    -------
    Outcome
    """
    p.check()

    if p.delta == 1:
        return Outcome(Verdict.VANISHING, "delta_one")

    try:
        check_same_kernel(kernel, kernel2)
    except KernelMismatchError:
        return Outcome(Verdict.UNDETERMINED, "kernel_mismatch")

    lam_O = lambda1_O(p, n_samples=2).value
    evidence = {"lambda_O": lam_O}

    if lam_O >= 0:
        return Outcome(Verdict.VANISHING, "lambda_O_nonnegative", evidence=evidence)

    dx = kernel.support_radius / 100 if dx is None else dx
    res = lambda1_P(p, kernel, (-p.h0, p.h0), dx=fitted_spacing(2 * p.h0, dx), method=method, n_samples=2)
    evidence["lambda_P_h0"] = res.upper

    if res.upper <= 0:
        return Outcome(Verdict.SPREADING, "lambda_P_nonpositive", evidence=evidence)

    return Outcome(Verdict.UNDETERMINED, "static_inconclusive", evidence=evidence)


def classify_dynamic(p, kernels, init=None, max_periods=200, settings=None,
                     lambda_tol=LAMBDA_TOL, decay_tol=DECAY_TOL, growth_tol=GROWTH_TOL,
                     stall_periods=STALL_PERIODS):
    """
    Classify by simulating the free-boundary problem period by period.

    Spreading is declared at the first period start where the free-boundary index is below
    -lambda_tol. Vanishing is declared once sup u1 and sup u2 stay below decay_tol * min(e1, e2)
    and the interval grows by less than growth_tol per period, for `stall_periods` consecutive
    periods. Otherwise the verdict is undetermined at t = max_periods * omega.

    Parameters
    ----------
    p: ModelParams.
    kernels: Kernel or (J1, J2); the spreading rule needs J1 = J2.
    init: Initial data (default: `default_init`).
    max_periods: Simulation horizon in periods.
    settings: SimSettings.

    Returns
    -------
    Outcome (evidence includes the Trajectory under "trajectory")
    """
    sim = FreeBoundarySimulation(p, kernels, init, settings)
    lam_O = lambda1_O(p, n_samples=2).upper
    threshold = decay_tol * min(p.e1, p.e2)

    def outcome(verdict, rule, t_max=None):
        traj = sim.trajectory()
        trace = traj.lambda_f["lambda_F"].tolist()
        evidence = {
            "lambda_O": lam_O,
            "lambda_P_h0": trace[0] if trace else None,
            "lambda_F": trace,
            "final_length": sim.state.length,
            "final_sup": (float(sim.state.u1.max()), float(sim.state.u2.max())),
            "periods": sim.state.period_index,
            "trajectory": traj,
        }
        return Outcome(verdict, rule, t_max, evidence)

    if sim.lambda_f is not None and sim.lambda_f < -lambda_tol:
        return outcome(Verdict.SPREADING, "lambda_F_negative")

    stalled = 0
    for _ in range(max_periods):
        length = sim.state.length
        state = sim.run_period()

        if sim.lambda_f is not None and sim.lambda_f < -lambda_tol:
            return outcome(Verdict.SPREADING, "lambda_F_negative")

        small = state.u1.max() < threshold and state.u2.max() < threshold
        stalled = stalled + 1 if small and state.length - length < growth_tol else 0

        if stalled >= stall_periods:
            return outcome(Verdict.VANISHING, "decay_and_stall")

    return outcome(Verdict.UNDETERMINED, "horizon", t_max=max_periods * p.omega)


@dataclass(frozen=True)
class ThresholdResult:
    """
    Bracket [low, high] of a threshold in a scalar parameter (mu1 = mu2 = mu, or the initial
    data scale sigma).

    Attributes
    ----------
    parameter: "mu" or "sigma".
    low, high: Bracket ends.
    verdict_low, verdict_high: Verdicts at the ends.
    iterations: Bisection steps used.
    history: DataFrame (value, verdict, rule) of every classification run.
    """
    parameter: str
    low: float
    high: float
    verdict_low: Verdict
    verdict_high: Verdict
    iterations: int
    history: pd.DataFrame

    @property
    def mu_low(self):
        return self.low

    @property
    def mu_high(self):
        return self.high


def _threshold_search(parameter, run, value_range, rel_width, is_upper):
    history = []

    def verdict(value):
        out = run(value)
        history.append((value, out.verdict.value, out.rule))
        return out

    low, high = value_range
    out_low = verdict(low)
    out_high = verdict(high)

    if out_low.verdict is not Verdict.VANISHING or not is_upper(out_high):
        raise BracketError(f"The {parameter} range {value_range} does not bracket a change from "
                           f"Vanishing ({out_low.verdict.value} at {low}, {out_high.verdict.value} at {high}).")

    def pred(value):
        out = verdict(value)
        if out.verdict is Verdict.UNDETERMINED and not is_upper(out):
            raise ConvergenceError(f"Undetermined verdict at {parameter}={value}; increase max_periods.")
        return is_upper(out)

    low, high, iterations = bisect_predicate(pred, low, high, rel_width)
    frame = pd.DataFrame(history, columns=["value", "verdict", "rule"])
    high_verdict = Verdict(frame.loc[frame["value"] == high, "verdict"].iloc[-1])

    return ThresholdResult(parameter, low, high, Verdict.VANISHING, high_verdict, iterations, frame)


def _require_undecided(p, kernels, settings, search):
    k1, k2 = kernel_pair(kernels)
    out = classify_static(p, k1, dx=settings.dx, kernel2=k2, method=settings.eigen_method)

    if out.rule != "static_inconclusive":
        raise ParameterError(f"The {search} search needs lambda1_O < 0 < lambda_1^P([-h0, h0]) with one "
                             f"kernel; the rule {out.rule!r} already gives {out.verdict.value}.")


def mu_threshold(p, kernels, init=None, mu_range=(1e-3, 1e2), settings=None, max_periods=200,
                 rel_width=0.05):
    """
    Bracket the expansion coefficient separating vanishing from spreading, with mu1 = mu2 = mu.

    Verdicts are monotone in mu, so bisection (geometric, on the dynamic classification) applies.
    The result is a bracket; no sharp threshold is claimed.

    Parameters
    ----------
    p: ModelParams with lambda1_O < 0 < lambda_1^P([-h0, h0]) (mu1 and mu2 are overridden).
    kernels: Kernel or (J1, J2) with J1 = J2.
    init: Initial data (default: `default_init`).
    mu_range: (low, high) with vanishing at low and spreading at high.
    settings: SimSettings.
    max_periods: Horizon of each dynamic classification.
    rel_width: Stop once high / low <= 1 + rel_width.

    Returns
    -------
    ThresholdResult

    Raises
    ------
    ParameterError when the static rules already decide the outcome.
    """
    settings = SimSettings() if settings is None else settings
    _require_undecided(p, kernels, settings, "mu")

    def run(mu):
        return classify_dynamic(p.replace(mu1=mu, mu2=mu), kernels, init, max_periods, settings)

    def spreading(out):
        return out.verdict is Verdict.SPREADING

    return _threshold_search("mu", run, mu_range, rel_width, spreading)


def smallness_threshold(p, kernels, base_init=None, sigma_range=(1e-3, 1.0), settings=None,
                        max_periods=200, rel_width=0.05):
    """
    Bracket the scale sigma of the initial data below which vanishing is observed.

    The run at the upper end of `sigma_range` fixes the behaviour compared against; when it
    vanishes too the result is degenerate (low = high, both vanishing, no iterations).

    Parameters
    ----------
    p: ModelParams with lambda1_O < 0 < lambda_1^P([-h0, h0]).
    kernels: Kernel or (J1, J2).
    base_init: InitialData to scale (default: `default_init`).
    sigma_range: (low, high) scales.
    settings: SimSettings.
    max_periods: Horizon of each dynamic classification.
    rel_width: Stop once high / low <= 1 + rel_width.

    Returns
    -------
    ThresholdResult with parameter "sigma"

    Raises
    ------
    ParameterError when the static rules already decide the outcome.
    """
    settings = SimSettings() if settings is None else settings
    _require_undecided(p, kernels, settings, "smallness")
    base_init = default_init(p, settings.dx) if base_init is None else base_init

    def run(sigma):
        return classify_dynamic(p, kernels, base_init.scaled(sigma), max_periods, settings)

    top = run(sigma_range[1])
    if top.verdict is Verdict.VANISHING:
        history = pd.DataFrame([(sigma_range[1], top.verdict.value, top.rule)],
                               columns=["value", "verdict", "rule"])
        return ThresholdResult("sigma", sigma_range[1], sigma_range[1], Verdict.VANISHING,
                               Verdict.VANISHING, 0, history)

    def not_vanishing(out):
        return out.verdict is not Verdict.VANISHING

    return _threshold_search("sigma", run, sigma_range, rel_width, not_vanishing)


def classify(p, kernels, init=None, max_periods=200, settings=None, dynamic=True):
    """
    Static rules first, the dynamic classification when they are inconclusive.
    """
    settings = SimSettings() if settings is None else settings
    k1, k2 = kernel_pair(kernels)
    out = classify_static(p, k1, dx=settings.dx, kernel2=k2, method=settings.eigen_method)

    if out.verdict is Verdict.UNDETERMINED and dynamic:
        dyn = classify_dynamic(p, (k1, k2), init, max_periods, settings)
        dyn.evidence.update({k: v for k, v in out.evidence.items() if k not in dyn.evidence})
        return dyn

    return out


def delta_sweep(p, kernels, delta_grid, init=None, max_periods=200, settings=None, dynamic=True):
    """
    Verdicts along increasing cold-season fractions; they may change at most once, from
    spreading to vanishing.

    Returns
    -------
    pandas DataFrame (delta, verdict, rule); `attrs["changes"]` counts verdict changes between
    decided neighbours, `attrs["consistent"]` records whether the pattern is admissible.
    """
    rows = []
    for delta in sorted(delta_grid):
        out = classify(p.replace(delta=float(delta)), kernels, init, max_periods, settings, dynamic)
        rows.append((float(delta), out.verdict.value, out.rule))

    df = pd.DataFrame(rows, columns=["delta", "verdict", "rule"])
    decided = df.loc[df["verdict"] != Verdict.UNDETERMINED.value, "verdict"].tolist()
    changes = sum(a != b for a, b in zip(decided, decided[1:]))
    consistent = changes == 0 or (changes == 1 and decided[0] == Verdict.SPREADING.value)

    df.attrs["changes"] = changes
    df.attrs["consistent"] = consistent
    if not consistent:
        warn(f"Verdicts along delta change {changes} times.", RuntimeWarning, stacklevel=2)

    return df


SWEEP_AXES = ("delta", "b1", "mu", "h0")


def _classify_point(values, kernels, settings, max_periods, dynamic):
    mu = values.pop("mu")
    p = ModelParams.from_mapping({**values, "mu1": mu, "mu2": mu})
    out = classify(p, kernels, None, max_periods, settings, dynamic)
    return out.verdict.value, out.rule


def sweep(p, kernels, axes, settings=None, max_periods=200, dynamic=True, parallel=False,
          max_concurrent=4):
    """
    Phase diagram over a grid of (delta, b1, mu, h0), with mu1 = mu2 = mu.

    Parameters
    ----------
    p: ModelParams supplying the parameters not swept.
    kernels: Kernel or (J1, J2).
    axes: Dict mapping some of "delta", "b1", "mu", "h0" to value sequences.
    settings: SimSettings.
    max_periods: Horizon of each dynamic classification.
    dynamic: Fall back to simulation when the static rules are inconclusive.
    parallel: Run grid points as ray tasks.
    max_concurrent: Maximum number of ray tasks in flight.

    Returns
    -------
    pandas DataFrame with columns delta, b1, mu, h0, verdict, rule in row-major order of `axes`.
    """
    unknown = set(axes) - set(SWEEP_AXES)
    if unknown:
        raise ParameterError(f"Cannot sweep over {sorted(unknown)}; choose from {SWEEP_AXES}.")
    if p.mu1 != p.mu2 and "mu" not in axes:
        raise ParameterError("Sweeps need mu1 = mu2 unless mu is swept.")

    base = p.as_dict()
    fixed = {"delta": p.delta, "b1": p.b1, "mu": p.mu1, "h0": p.h0}
    grid = generate_grid(axes, {k: v for k, v in fixed.items() if k not in axes})

    tasks = []
    for row in grid.to_dict("records"):
        values = {k: v for k, v in base.items() if k not in ("mu1", "mu2")}
        values.update(row)
        tasks.append((values, kernel_pair(kernels), settings, max_periods, dynamic))

    results = schedule_runs(_classify_point, tasks, max_concurrent=max_concurrent, parallel=parallel)

    out = grid[list(SWEEP_AXES)].copy()
    out["verdict"] = [r[0] for r in results]
    out["rule"] = [r[1] for r in results]

    return out

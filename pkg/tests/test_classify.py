import importlib

import numpy as np
import pytest

from conftest import make_params
from wnv_nonlocal import BracketError, ConvergenceError, ParameterError, make_kernel
from wnv_nonlocal.classify import (Outcome, Verdict, classify, classify_dynamic, classify_static, delta_sweep,
                                   mu_threshold, smallness_threshold, sweep)
from wnv_nonlocal.fb_sim import SimSettings

# The package re-exports the classify function under the submodule name
classify_module = importlib.import_module("wnv_nonlocal.classify")

# lambda_1^O < 0 and lambda_1^P([-h0, h0]) < 0
SPREADING = dict(delta=0.0, b1=0.25, b2=0.25, h0=1.0)
# lambda_1^O < 0 but lambda_1^P([-h0, h0]) > 0: the static rules cannot decide
UNDECIDED = dict(a1=0.5, a2=0.5, b1=0.25, b2=0.25, delta=0.0, h0=0.05)


@pytest.fixture
def settings():
    return SimSettings(dx=0.05)


def test_static_delta_one(params, tent):
    out = classify_static(params(delta=1.0), tent)

    assert out.verdict is Verdict.VANISHING
    assert out.rule == "delta_one"


def test_static_kernel_mismatch(params, tent):
    out = classify_static(params(), tent, kernel2=make_kernel("tent", radius=2.0))

    assert out.verdict is Verdict.UNDETERMINED
    assert out.rule == "kernel_mismatch"


def test_static_lambda_O_nonnegative(params, tent):
    out = classify_static(params(), tent)

    assert out.verdict is Verdict.VANISHING
    assert out.rule == "lambda_O_nonnegative"
    assert out.evidence["lambda_O"] == pytest.approx(0.5)


def test_static_spreading(params, tent):
    out = classify_static(params(**SPREADING), tent, dx=0.05)

    assert out.verdict is Verdict.SPREADING
    assert out.rule == "lambda_P_nonpositive"
    assert out.evidence["lambda_O"] == pytest.approx(-0.75)
    assert out.evidence["lambda_O"] < out.evidence["lambda_P_h0"] <= 0


def test_static_inconclusive(params, tent):
    out = classify_static(params(**UNDECIDED), tent, dx=0.05)

    assert out.verdict is Verdict.UNDETERMINED
    assert out.rule == "static_inconclusive"
    assert out.evidence["lambda_O"] == pytest.approx(-0.25)
    assert out.evidence["lambda_P_h0"] > 0


def test_dynamic_spreading_with_fast_boundaries(params, tent, settings):
    out = classify_dynamic(params(**UNDECIDED, mu1=1000.0, mu2=1000.0), tent, max_periods=20, settings=settings)

    assert out.verdict is Verdict.SPREADING
    assert out.rule == "lambda_F_negative"
    assert out.evidence["lambda_F"][-1] < 0
    assert out.evidence["lambda_P_h0"] > 0
    assert out.t_max is None


def test_dynamic_vanishing_with_slow_boundaries(params, tent, settings):
    out = classify_dynamic(params(**UNDECIDED, mu1=1e-4, mu2=1e-4), tent, max_periods=200, settings=settings)

    assert out.verdict is Verdict.VANISHING
    assert out.rule == "decay_and_stall"
    assert out.evidence["periods"] < 200
    assert max(out.evidence["final_sup"]) < 1e-6
    assert out.evidence["final_length"] == pytest.approx(0.1, abs=1e-3)


def test_dynamic_horizon(params, tent, settings):
    out = classify_dynamic(params(**UNDECIDED, mu1=1e-4, mu2=1e-4), tent, max_periods=2, settings=settings)

    assert out.verdict is Verdict.UNDETERMINED
    assert out.rule == "horizon"
    assert out.t_max == pytest.approx(2.0)
    assert out.evidence["periods"] == 2


def test_outcome_as_dict_drops_trajectory(params, tent, settings):
    out = classify_dynamic(params(**UNDECIDED, mu1=1e-4, mu2=1e-4), tent, max_periods=2, settings=settings)
    d = out.as_dict()

    assert "trajectory" in out.evidence
    assert "trajectory" not in d["evidence"]
    assert d["verdict"] == "Undetermined"
    assert isinstance(d["evidence"]["final_sup"], list)


def test_classify_uses_static_rules_first(params, tent, settings):
    out = classify(params(**SPREADING), tent, settings=settings)

    assert out.rule == "lambda_P_nonpositive"
    assert "trajectory" not in out.evidence


def test_classify_falls_back_to_simulation(params, tent, settings):
    p = params(**UNDECIDED, mu1=1e-4, mu2=1e-4)

    assert classify(p, tent, settings=settings, dynamic=False).rule == "static_inconclusive"

    out = classify(p, tent, settings=settings)
    assert out.verdict is Verdict.VANISHING
    assert out.evidence["lambda_O"] == pytest.approx(-0.25)


def test_delta_sweep_changes_once(params, tent, settings):
    table = delta_sweep(params(**SPREADING), tent, [1.0, 0.0, 0.5], settings=settings, dynamic=False)

    assert list(table["delta"]) == [0.0, 0.5, 1.0]
    assert table["verdict"].iloc[0] == "Spreading"
    assert table["verdict"].iloc[-1] == "Vanishing"
    assert table["rule"].iloc[-1] == "delta_one"
    assert table.attrs["changes"] == 1
    assert table.attrs["consistent"]


def test_sweep_grid(params, tent, settings):
    axes = {"delta": [0.0, 0.5, 1.0], "b1": [0.25, 0.5, 1.0]}
    phase = sweep(params(b2=0.25, h0=3.0), tent, axes, settings=settings, dynamic=False)

    assert list(phase.columns) == ["delta", "b1", "mu", "h0", "verdict", "rule"]
    assert len(phase) == 9
    assert list(phase["delta"]) == [0.0] * 3 + [0.5] * 3 + [1.0] * 3
    assert list(phase["b1"]) == [0.25, 0.5, 1.0] * 3
    assert (phase["h0"] == 3.0).all()
    assert (phase.loc[phase["delta"] == 1.0, "verdict"] == "Vanishing").all()
    assert phase["verdict"].iloc[0] == "Spreading"


def test_sweep_rejects_unknown_axes(params, tent):
    with pytest.raises(ParameterError):
        sweep(params(), tent, {"k": [1.0, 2.0]})
    with pytest.raises(ParameterError):
        sweep(params(mu2=2.0), tent, {"delta": [0.0]})


def _fake_dynamic(switch, undetermined=None):
    def fake(p, kernels, init=None, max_periods=200, settings=None):
        if undetermined is not None and undetermined[0] < p.mu1 < undetermined[1]:
            return Outcome(Verdict.UNDETERMINED, "horizon", t_max=max_periods * p.omega)
        if p.mu1 > switch:
            return Outcome(Verdict.SPREADING, "lambda_F_negative")
        return Outcome(Verdict.VANISHING, "decay_and_stall")

    return fake


def test_mu_threshold_brackets_switch(params, tent, monkeypatch):
    monkeypatch.setattr(classify_module, "classify_dynamic", _fake_dynamic(0.37))
    res = mu_threshold(params(**UNDECIDED), tent, mu_range=(1e-3, 1e2), rel_width=0.05)

    assert res.parameter == "mu"
    assert res.mu_low <= 0.37 < res.mu_high
    assert res.high / res.low <= 1.05
    assert res.verdict_low is Verdict.VANISHING
    assert res.verdict_high is Verdict.SPREADING
    assert len(res.history) == res.iterations + 2


def test_mu_threshold_needs_bracket(params, tent, monkeypatch):
    monkeypatch.setattr(classify_module, "classify_dynamic", _fake_dynamic(1e3))

    with pytest.raises(BracketError):
        mu_threshold(params(**UNDECIDED), tent, mu_range=(1e-3, 1e2))


def test_mu_threshold_undetermined_midpoint(params, tent, monkeypatch):
    monkeypatch.setattr(classify_module, "classify_dynamic", _fake_dynamic(0.37, undetermined=(0.1, 1.0)))

    with pytest.raises(ConvergenceError):
        mu_threshold(params(**UNDECIDED), tent, mu_range=(1e-3, 1e2))


def test_mu_threshold_bracket_error_from_simulation(params, tent, settings):
    with pytest.raises(BracketError):
        mu_threshold(params(**UNDECIDED), tent, mu_range=(1e-5, 1e-4), settings=settings, max_periods=200)


def test_smallness_threshold(params, tent, settings, monkeypatch):
    def fake(p, kernels, init=None, max_periods=200, settings=None):
        if init.u1.max() < 0.2:
            return Outcome(Verdict.VANISHING, "decay_and_stall")
        return Outcome(Verdict.SPREADING, "lambda_F_negative")

    monkeypatch.setattr(classify_module, "classify_dynamic", fake)
    res = smallness_threshold(params(**UNDECIDED), tent, sigma_range=(1e-3, 1.0), settings=settings,
                              rel_width=0.05)

    assert res.parameter == "sigma"
    assert res.low < 0.2 <= res.high * (1 + 1e-12)
    assert res.high / res.low <= 1.05


def test_smallness_threshold_degenerate(params, tent, settings):
    res = smallness_threshold(params(**UNDECIDED, mu1=1e-4, mu2=1e-4), tent, settings=settings)

    assert res.low == res.high == 1.0
    assert res.iterations == 0
    assert res.verdict_high is Verdict.VANISHING
    assert len(res.history) == 1


@pytest.mark.parametrize("mu", [1e-3, 1.0, 1e3])
def test_nonnegative_lambda_O_vanishes_for_every_mu(params, tent, mu):
    out = classify_static(params(mu1=mu, mu2=mu), tent)
    assert out.verdict is Verdict.VANISHING


def test_mu_bracket_matches_grid_oracle(params, tent, monkeypatch):
    fake = _fake_dynamic(2.5)
    monkeypatch.setattr(classify_module, "classify_dynamic", fake)
    grid = np.logspace(-3, 2, 21)
    verdicts = [fake(params(mu1=mu, mu2=mu), tent).verdict for mu in grid]
    cell = next(i for i, v in enumerate(verdicts) if v is Verdict.SPREADING)

    res = mu_threshold(params(**UNDECIDED), tent, mu_range=(grid[0], grid[-1]), rel_width=0.05)

    assert grid[cell - 1] <= res.low < res.high <= grid[cell]


@pytest.mark.slow
def test_spreading_interior_approaches_equilibrium(params, tent):
    from wnv_nonlocal import ode_periodic, simulate

    p = params(**SPREADING)
    equilibrium = ode_periodic(p)
    traj = simulate(p, tent, n_periods=25, settings=SimSettings(dx=0.05, snapshot_every=1))

    for t in traj.snapshot_times[-3:]:
        field = traj.snapshots[t]
        inner = field[np.abs(field["x"]) <= 1.0]
        assert np.max(np.abs(inner["u1"] - equilibrium.U1[0])) <= 5e-3
        assert np.max(np.abs(inner["u2"] - equilibrium.U2[0])) <= 5e-3


@pytest.mark.parametrize("changes, rule", [
    (dict(), "lambda_O_nonnegative"),
    (dict(delta=1.0), "delta_one"),
    (SPREADING, "lambda_P_nonpositive"),
])
def test_threshold_searches_need_undecided_parameters(params, tent, settings, monkeypatch, changes, rule):
    calls = []
    monkeypatch.setattr(classify_module, "classify_dynamic", lambda *args, **kwargs: calls.append(args))
    p = params(**changes)

    with pytest.raises(ParameterError, match=rule):
        mu_threshold(p, tent, settings=settings)
    with pytest.raises(ParameterError, match=rule):
        smallness_threshold(p, tent, settings=settings)

    assert calls == []


def test_threshold_searches_reject_distinct_kernels(params, tent, settings):
    wide = make_kernel("tent", radius=2.0)

    with pytest.raises(ParameterError, match="kernel_mismatch"):
        mu_threshold(params(**UNDECIDED), (tent, wide), settings=settings)

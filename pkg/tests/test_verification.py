import numpy as np
import pytest

from config.scenario_config import mid_window_gamma
from models.eigenpair import Envelope
from models.errors import ScenarioError, TailFitError
from models.fields import TailedField
from models.grid import Grid
from models.kernel import StableKernel
from models.media import PeriodicProfile
from operators.plan import build_plan
from solvers.eigensolver import principal_eigenpair
from solvers.evolution import dt_max, evolve, raised_cosine_bump
from verification.envelopes import build_envelopes, check_sandwich
from verification.heat_kernel import heat_kernel_bounds
from verification.lemma import (
    check_gamma,
    dilated_operator_on_g,
    lemma1_i,
    lemma1_ii,
    unit_bilinear_on_g,
    unit_operator_on_g,
)
from verification.tails import check_tail_bracket, check_tails, initial_constants


@pytest.mark.parametrize("y", [0.0, 0.5, 1.0, 3.0, 10.0])
def test_unit_operator_matches_closed_form(y):
    exact = np.pi * (1.0 - y ** 2) / (1.0 + y ** 2) ** 2
    assert unit_operator_on_g(y, 0.5) == pytest.approx(exact, abs=1e-6)


def test_operator_scaling_on_algebraic_profile(kernel):
    verdict = lemma1_i(kernel, [1.0, 0.5, 0.25], probes=9, radius=10.0)
    assert verdict.passed
    assert verdict.measured["slope"] == pytest.approx(1.0, abs=1e-6)
    assert verdict.measured["doubling_change"] < 0.02


def test_lemma_checks_reject_bad_inputs(kernel):
    with pytest.raises(ScenarioError):
        lemma1_i(kernel, [1.5], probes=3)
    with pytest.raises(ScenarioError):
        lemma1_i(StableKernel.constant(0.5, d=2), [1.0], probes=3)
    with pytest.raises(ScenarioError):
        lemma1_ii(kernel, PeriodicProfile.trig(0.5, cos=[1.0]), mid_window_gamma(0.5), [1.0], probes=3)


def test_gamma_window_is_enforced():
    check_gamma(0.25, 0.0)
    check_gamma(0.75, 0.75)
    with pytest.raises(ScenarioError, match="admissible window"):
        check_gamma(0.25, 0.5)
    with pytest.raises(ScenarioError):
        check_gamma(0.75, 0.5)


def test_bilinear_form_with_constant_weight_vanishes(kernel):
    verdict = lemma1_ii(kernel, PeriodicProfile.constant(2.0), mid_window_gamma(0.5), [1.0, 0.5], probes=9)
    assert verdict.passed
    assert verdict.measured["C"] == [0.0, 0.0]
    assert verdict.notes == ["vanishes identically"]


def test_bilinear_form_is_even_for_even_weight():
    chi = PeriodicProfile.trig(2.0, cos=[0.5])
    for x in (0.3, 2.7):
        left = unit_bilinear_on_g(-x, 0.5, 0.5, chi)
        right = unit_bilinear_on_g(x, 0.5, 0.5, chi)
        assert left == pytest.approx(right, rel=1e-5, abs=1e-8)


def test_tail_slope_of_algebraic_profile():
    g = Grid(1, 64.0, 2048, 16)
    x = g.axis()
    verdict = check_tails(TailedField.from_values(1.0 / (1.0 + x ** 2), g, 0.5))
    assert verdict.passed
    assert verdict.measured["slope"] == pytest.approx(-2.0, abs=0.05)
    assert verdict.measured["c_m_hat"] == pytest.approx(1.0)


def test_compact_data_has_no_tail(grid):
    with pytest.raises(TailFitError, match="box too small"):
        check_tails(raised_cosine_bump(grid, 0.5))


def test_initial_constants(grid):
    r = grid.radius()
    assert initial_constants(TailedField.from_values(2.0 / (1.0 + r ** 2), grid, 0.5)) == pytest.approx((2.0, 2.0))
    with pytest.raises(TailFitError):
        initial_constants(raised_cosine_bump(grid, 0.5))


def test_linear_bracket_holds(kernel, grid, logistic):
    plan = build_plan(kernel, grid, "quadrature")
    verdict = check_tail_bracket(kernel, logistic, raised_cosine_bump(grid, 0.5), 0.9 * dt_max(plan),
                                 t=1.0, backend="quadrature")
    assert verdict.passed
    assert verdict.measured["below"] <= verdict.measured["tol"]


@pytest.fixture
def homogeneous_pair(kernel):
    return principal_eigenpair(kernel, PeriodicProfile.constant(1.0), 64, method="dense")


def test_envelopes_are_ordered(homogeneous_pair):
    env = Envelope.from_tails(homogeneous_pair, 0.2, 0.6, 0.05)
    f_m, f_M = build_envelopes(env, [0.0, 0.5, 1.0], np.array([0.5, 2.0, -3.0]), 0.5)
    assert f_m.shape == (3, 3)
    assert np.all(f_m > 0.0)
    assert np.all(f_m < f_M)


def test_negative_control_is_caught(kernel, grid, logistic, homogeneous_pair):
    plan = build_plan(kernel, grid, "quadrature")
    traj = evolve(kernel, logistic, raised_cosine_bump(grid, 0.5), 1.5, 0.9 * dt_max(plan),
                  snap_every=0.25, plan=plan)
    control = Envelope.unchecked(1e-3, 1e-3, 0.5, 0.1, homogeneous_pair)
    verdict = check_sandwich(traj, control, probes=500)
    assert not verdict.passed
    assert verdict.measured["violations_upper"] > 0


def test_heat_kernel_bounds_are_stable(kernel):
    verdict = heat_kernel_bounds(kernel, [1.0, 2.0], [0.0, 2.0, 8.0])
    assert verdict.passed
    assert verdict.measured["C_hat"] > 1.0


def test_heat_kernel_inputs_are_validated(kernel):
    with pytest.raises(ScenarioError, match="constant beta"):
        heat_kernel_bounds(StableKernel.cosine(0.5), [1.0], [1.0])
    with pytest.raises(ScenarioError, match="under-resolved"):
        heat_kernel_bounds(kernel, [1.0], [1.0], sigma=0.1)


@pytest.mark.parametrize("a", [1.0, 0.25, 0.1])
@pytest.mark.parametrize("x", [0.0, 0.3, 2.0, 7.0])
def test_dilated_operator_matches_closed_form(a, x):
    # L g(a .)(x) = a pi (1 - (a x)^2) / (1 + (a x)^2)^2 at alpha = 1/2
    y = a * x
    exact = a * np.pi * (1.0 - y ** 2) / (1.0 + y ** 2) ** 2
    assert dilated_operator_on_g(x, a, 0.5) == pytest.approx(exact, rel=1e-6, abs=1e-9)


def test_doubling_change_fails_the_verdict(kernel, monkeypatch):
    import verification.lemma as lemma

    calls = []
    real = lemma._sup_over_points

    def drifting(xs, beta, a_list, ratio):
        calls.append(len(xs))
        C = real(xs, beta, a_list, ratio)
        return C if len(calls) == 1 else [1.1 * c for c in C]

    monkeypatch.setattr(lemma, "_sup_over_points", drifting)
    verdict = lemma1_i(kernel, [1.0, 0.5], probes=9, radius=10.0)
    assert calls == [9, 17]
    assert not verdict.passed
    assert verdict.measured["doubling_change"] == pytest.approx(0.1)
    assert "doubled" in verdict.notes[0]


def test_bilinear_scaling_with_cosine_weight(kernel):
    chi = PeriodicProfile.trig(2.0, cos=[1.0])
    verdict = lemma1_ii(kernel, chi, 0.25, [1.0, 0.5, 0.25], probes=9, radius=10.0, doubling=False)
    assert verdict.passed
    assert all(c > 0.0 for c in verdict.measured["C"])
    assert verdict.measured["slope"] >= 0.65
    assert verdict.measured["gamma"] == 0.25


@pytest.mark.slow
@pytest.mark.parametrize("alpha", [0.25, 0.75])
def test_scalings_with_heterogeneous_beta(alpha):
    kernel = StableKernel.cosine(alpha, 2.0, 1.0)
    chi = PeriodicProfile.trig(2.0, cos=[1.0])
    a_list = [1.0, 0.5, 0.25, 0.1]
    first = lemma1_i(kernel, a_list)
    assert first.passed, first.notes
    assert first.measured["slope"] >= 2.0 * alpha - 0.1
    second = lemma1_ii(kernel, chi, mid_window_gamma(alpha), a_list)
    assert second.passed, second.notes
    assert second.measured["doubling_change"] < 0.02


@pytest.mark.slow
def test_tail_slope_after_unit_time(kernel, logistic):
    g = Grid(1, 256.0, 4096, 8)
    snapshot = evolve(kernel, logistic, raised_cosine_bump(g, 0.5), 1.0, 1e-2, snap_every=0.05,
                      backend="spectral").final
    verdict = check_tails(snapshot)
    assert verdict.passed
    assert verdict.measured["slope"] == pytest.approx(-2.0, abs=0.1)
    assert verdict.measured["c_m_hat"] > 0.0

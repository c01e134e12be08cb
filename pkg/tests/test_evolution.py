import numpy as np
import pytest

from models.errors import EvolutionError, NoInvasionError
from models.grid import Grid
from models.media import PeriodicProfile
from models.reaction import ReactionModel
from operators.plan import build_plan
from solvers.evolution import (
    dt_max,
    evolve,
    gaussian_bump,
    linear_evolve,
    raised_cosine_bump,
    steady_state,
)
from verification.heat_kernel import poisson_oracle


def test_explicit_step_above_stability_bound_is_refused(kernel, grid, logistic):
    plan = build_plan(kernel, grid, "quadrature")
    n0 = raised_cosine_bump(grid, 0.5)
    with pytest.raises(EvolutionError, match="stability bound"):
        evolve(kernel, logistic, n0, 0.1, 1.5 * dt_max(plan), plan=plan)


def test_explicit_run_stays_in_box_without_clips(kernel, grid, logistic):
    plan = build_plan(kernel, grid, "quadrature")
    n0 = raised_cosine_bump(grid, 0.5)
    traj = evolve(kernel, logistic, n0, 0.5, 0.9 * dt_max(plan), snap_every=0.1, plan=plan)
    assert traj.scheme == "explicit"
    assert not traj.clip_events
    assert traj.final.inf > 0.0
    assert traj.final.sup <= traj.bound
    assert traj.span == pytest.approx(0.5)


def test_schemes_agree(kernel, grid, logistic):
    n0 = raised_cosine_bump(grid, 0.5)
    plan = build_plan(kernel, grid, "quadrature")
    explicit = evolve(kernel, logistic, n0, 0.5, 0.5 * dt_max(plan), plan=plan).final
    imex = evolve(kernel, logistic, n0, 0.5, 1e-3, backend="spectral").final
    inner = np.abs(grid.axis()) <= 8.0
    assert np.max(np.abs(explicit.values[inner] - imex.values[inner])) < 2e-2


def test_comparison_principle(kernel, grid, logistic, rng):
    plan = build_plan(kernel, grid, "quadrature")
    dt = 0.9 * dt_max(plan)
    for _ in range(5):
        w_small, w_large = np.sort(rng.uniform(0.5, 2.0, 2))
        h_small, h_large = np.sort(rng.uniform(0.1, 1.0, 2))
        low = raised_cosine_bump(grid, 0.5, width=w_small, height=h_small)
        high = raised_cosine_bump(grid, 0.5, width=w_large, height=h_large)
        assert np.all(low.values <= high.values)
        n_low = evolve(kernel, logistic, low, 0.3, dt, plan=plan).final
        n_high = evolve(kernel, logistic, high, 0.3, dt, plan=plan).final
        assert np.all(n_low.values <= n_high.values + 1e-12)


def test_tails_form_instantly(kernel, grid, logistic):
    n0 = raised_cosine_bump(grid, 0.5)
    assert n0.values[0] == 0.0
    plan = build_plan(kernel, grid, "quadrature")
    final = evolve(kernel, logistic, n0, 0.25, 0.9 * dt_max(plan), plan=plan).final
    assert final.inf > 0.0
    assert final.tail_amp > 0.0


def test_snapshots_follow_cadence(kernel, grid, logistic):
    traj = evolve(kernel, logistic, raised_cosine_bump(grid, 0.5), 1.0, 1e-2, snap_every=0.25,
                  backend="spectral")
    assert np.allclose(traj.times, [0.0, 0.25, 0.5, 0.75, 1.0])
    assert traj.at(0.5) is traj.snapshots[2][1]
    with pytest.raises(EvolutionError):
        traj.at(0.6)
    mid = traj.sample(np.array([0.0]), 0.375)[0]
    assert mid == pytest.approx(0.5 * (traj.snapshots[1][1].values[256] + traj.snapshots[2][1].values[256]))


def test_linear_semigroup_matches_poisson_kernel(kernel):
    g = Grid(1, 128.0, 8192, 32)
    sigma = 0.25
    n0 = gaussian_bump(g, 0.5, sigma)
    traj = linear_evolve(kernel, 0.0, n0, 1.0, 1e-3, snap_every=0.1, backend="spectral")
    x = g.axis()
    inner = np.abs(x) <= 50.0
    exact = poisson_oracle(x[inner], 1.0, sigma)
    error = np.max(np.abs(traj.final.values[inner] - exact)) / np.max(exact)
    assert error <= 0.02
    assert traj.final.mass() == pytest.approx(1.0, abs=5e-3)


def test_initial_datum_must_be_a_density(kernel, grid, logistic):
    from models.fields import TailedField

    signed = TailedField(np.sin(grid.axis()), grid, 0.5, density=False)
    with pytest.raises(EvolutionError):
        evolve(kernel, logistic, signed, 0.1, 1e-2, backend="spectral")


def test_steady_state_homogeneous(kernel, logistic):
    steady = steady_state(kernel, logistic, cell_n=64)
    assert np.allclose(steady.n_plus.values, 1.0, atol=1e-6)


def test_steady_state_periodic_media(kernel, periodic_media):
    steady = steady_state(kernel, ReactionModel.logistic(periodic_media), cell_n=64)
    assert steady.residual < 1e-6
    assert steady.n_plus.min > 0.0
    assert steady.n_plus.max < 1.5


def test_steady_state_without_invasion(kernel):
    with pytest.raises(NoInvasionError, match="only trivial steady state expected"):
        steady_state(kernel, ReactionModel.logistic(PeriodicProfile.constant(-1.0)), cell_n=64)


def test_halving_dt_halves_the_explicit_error(kernel, grid, logistic):
    plan = build_plan(kernel, grid, "quadrature")
    n0 = gaussian_bump(grid, 0.5, 1.0)
    T = 0.5
    steps = int(np.ceil(T / (0.2 * dt_max(plan))))
    finals = [evolve(kernel, logistic, n0, T, T / (k * steps), plan=plan).final.values for k in (1, 2, 4)]
    coarse = np.max(np.abs(finals[0] - finals[1]))
    fine = np.max(np.abs(finals[1] - finals[2]))
    assert 1.7 <= coarse / fine <= 2.3


@pytest.fixture
def weighted_logistic():
    # mu = 1, omega = 2 + sin(2 pi x)
    return ReactionModel.weighted_logistic(PeriodicProfile.constant(1.0), PeriodicProfile.trig(2.0, sin=[1.0]))


def test_steady_state_weighted_logistic(kernel, weighted_logistic):
    steady = steady_state(kernel, weighted_logistic, cell_n=64)
    assert steady.residual < 1e-6
    assert steady.n_plus.max - steady.n_plus.min > 1e-3
    # constants 1/max(omega) and 1/min(omega) bracket the steady state
    assert steady.n_plus.min >= 1.0 / 3.0 - 1e-6
    assert steady.n_plus.max <= 1.0 + 1e-6


def test_steady_state_is_independent_of_initial_guess(kernel, weighted_logistic):
    tol = 1e-8
    from_above = steady_state(kernel, weighted_logistic, cell_n=64, tol=tol)
    from_below = steady_state(kernel, weighted_logistic, cell_n=64, tol=tol, initial=0.1)
    assert np.max(np.abs(from_above.n_plus.values - from_below.n_plus.values)) <= 10.0 * tol

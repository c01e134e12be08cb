import numpy as np
import pytest

from config.scenario_config import config_hash, gamma_window, mid_window_gamma, parse_scenario
from models.eigenpair import Envelope
from models.errors import EnvelopeError, GridError, ReactionError, ScenarioError, TailFitError
from models.fields import CellField, TailedField, fit_tail_amplitude, rescale_point
from models.grid import Grid, plan_box
from models.kernel import StableKernel, validate_kernel
from models.media import PeriodicProfile
from models.reaction import ReactionModel, require_kpp, validate_reaction
from solvers.eigensolver import principal_eigenpair


def test_alpha_outside_unit_interval_is_rejected(scenario_document):
    scenario_document["alpha"] = 1.5
    with pytest.raises(ScenarioError) as err:
        parse_scenario(scenario_document)
    assert "α ∈ (0,1)" in str(err.value)
    assert err.value.field_path == "alpha"


def test_unknown_keys_are_rejected(scenario_document):
    scenario_document["grid"]["spacing"] = 0.1
    with pytest.raises(ScenarioError) as err:
        parse_scenario(scenario_document)
    assert err.value.field_path.startswith("grid")


def test_grid_must_be_given_whole_or_planned(scenario_document):
    scenario_document["grid"] = {"L": 16.0}
    with pytest.raises(ScenarioError):
        parse_scenario(scenario_document)
    scenario_document["grid"] = {"n_cell": 16}
    assert parse_scenario(scenario_document).grid.L is None


def test_config_hash_ignores_key_order(scenario_document):
    reordered = dict(reversed(list(scenario_document.items())))
    assert config_hash(parse_scenario(scenario_document)) == config_hash(parse_scenario(reordered))


def test_gamma_windows():
    assert gamma_window(0.25) == (0.0, 0.5)
    assert gamma_window(0.75) == pytest.approx((0.5, 1.0))
    assert mid_window_gamma(0.25) == pytest.approx(0.25)


def test_symmetric_kernels_validate():
    assert validate_kernel(StableKernel.constant(0.3)).passed
    assert validate_kernel(StableKernel.cosine(0.7, 2.0, 1.0)).passed


def test_skew_kernel_fails_symmetry():
    skew = StableKernel(0.5, 1, "skew", {"mean": 2.0, "amplitude": 1.0}, 1.0, 3.0)
    report = validate_kernel(skew)
    assert not report.passed
    assert report.defects["symmetry"] > 0.0


def test_kernel_bounds_are_checked():
    report = validate_kernel(StableKernel(0.5, 1, "cosine", {"mean": 2.0, "amplitude": 1.0}, 1.5, 3.0))
    assert not report.passed
    assert report.defects["bounds"] == pytest.approx(0.5, abs=1e-3)


def test_logistic_and_weighted_logistic_are_kpp(periodic_media):
    require_kpp(ReactionModel.logistic(periodic_media))
    omega = PeriodicProfile.trig(2.0, sin=[1.0])
    weighted = ReactionModel.weighted_logistic(periodic_media, omega)
    require_kpp(weighted)
    assert weighted.c_lower == pytest.approx(3.0, abs=1e-3)
    assert weighted.C_upper == pytest.approx(1.0, abs=1e-3)


def test_quadratic_reaction_is_not_kpp():
    with pytest.raises(ReactionError):
        require_kpp(ReactionModel.quadratic())


def test_mu_matches_derivative_at_zero(periodic_media):
    report = validate_reaction(ReactionModel.logistic(periodic_media), 4.0)
    assert report.defects["mu_mismatch"] < 1e-6


def test_grid_rejects_incommensurate_spacing():
    with pytest.raises(GridError):
        Grid(1, 10.0, 512, 16)


def test_plan_box_keeps_front_inside():
    g = plan_box(0.5, 2.0, 0.1, 16)
    assert g.L >= 4.0 * np.exp(1.0)
    assert g.h == pytest.approx(1.0 / 16.0)
    assert g.n_box % 2 == 0


def test_cell_to_box_is_periodic(grid):
    cell = np.arange(grid.n_cell, dtype=float)
    box = grid.cell_to_box(cell)
    x = grid.axis()
    expected = np.round(np.mod(x, 1.0) * grid.n_cell).astype(int) % grid.n_cell
    assert np.array_equal(box, cell[expected])


def test_negative_density_is_rejected(grid):
    values = np.zeros(grid.shape)
    values[10] = -1e-3
    with pytest.raises(TailFitError):
        TailedField(values, grid, 0.5)


def test_tail_amplitude_is_recovered(grid):
    r = grid.radius()
    values = np.where(r > 0, 3.0 / np.maximum(r, 1e-12) ** 2, 0.0)
    assert fit_tail_amplitude(values, grid, 0.5) == pytest.approx(3.0, rel=1e-12)
    field = TailedField.from_values(values, grid, 0.5)
    assert field.evaluate(np.array([40.0]))[0] == pytest.approx(3.0 / 1600.0)


def test_constant_field_carries_background(grid):
    field = TailedField.constant(grid, 0.5, 2.0)
    assert field.background == 2.0
    assert field.evaluate(np.array([1e3]))[0] == pytest.approx(2.0)


def test_rescale_point_maps_radius():
    assert rescale_point(np.array([2.0]), 0.5)[0] == pytest.approx(4.0)
    assert rescale_point(np.array([-2.0]), 0.25)[0] == pytest.approx(-16.0)
    assert rescale_point(np.array([0.0]), 0.25)[0] == 0.0


def test_cell_field_interpolation_is_periodic():
    phi = CellField(np.cos(2 * np.pi * np.arange(64) / 64) + 2.0, 1)
    assert phi.at(np.array([0.25]))[0] == pytest.approx(phi.at(np.array([3.25]))[0])


def test_envelope_admissibility(kernel):
    pair = principal_eigenpair(kernel, PeriodicProfile.constant(1.0), 64, method="dense")
    env = Envelope.from_tails(pair, 0.2, 0.6, 0.05)
    assert env.admissible
    assert env.compatible_with_tails(0.2, 0.6)
    with pytest.raises(EnvelopeError):
        Envelope(env.C_m, 0.1 * env.C_M, env.delta, env.epsilon, pair)
    control = Envelope.unchecked(env.C_m, 0.1 * env.C_M, env.delta, env.epsilon, pair)
    assert not control.admissible


def test_misuse_raises_domain_errors(grid, kernel, logistic):
    with pytest.raises(GridError, match="shape"):
        TailedField(np.zeros(10), grid, 0.5)
    with pytest.raises(ScenarioError, match="M_cap"):
        validate_reaction(logistic, 0.5)
    with pytest.raises(ScenarioError, match="100 samples"):
        validate_kernel(kernel, samples=10)
    with pytest.raises(ScenarioError, match="trailing axis"):
        PeriodicProfile.trig(1.0, sin=[0.5], d=2)(np.zeros((4, 3)))

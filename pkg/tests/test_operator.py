import numpy as np
import pytest

from models.errors import BackendError
from models.fields import CellField, TailedField
from models.grid import Grid
from models.kernel import StableKernel
from models.media import PeriodicProfile
from operators.cell import CellOperator
from operators.plan import apply_bilinear, apply_operator, apply_rescaled_operator, build_plan
from operators.weights import node_weights, periodized_weights, symbol_constant, total_weight
from verification.lemma import unit_bilinear_on_g


def test_symbol_constant_at_half():
    assert symbol_constant(1, 0.5) == pytest.approx(np.pi)
    assert symbol_constant(2, 0.5) == pytest.approx(2.0 * np.pi)


def test_node_weights_sum_to_total_weight():
    alpha, h, K = 0.5, 1.0 / 16.0, 200000
    W = node_weights(alpha, h, K)
    tail = 2.0 * h ** (-2 * alpha) * K ** (-2 * alpha) / (2 * alpha)
    assert 2.0 * W.sum() + tail == pytest.approx(total_weight(alpha, h), rel=1e-4)
    assert W[0] == 0.0
    assert np.all(W[1:] > 0.0)


def test_periodized_weights_are_symmetric():
    w = periodized_weights(0.3, 32)
    assert np.allclose(w, w[(-np.arange(32)) % 32], atol=0.0)
    assert w[0] == 0.0


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("backend", ["quadrature", "spectral"])
def test_operator_annihilates_constants(grid, alpha, backend):
    plan = build_plan(StableKernel.constant(alpha), grid, backend)
    out = apply_operator(plan, TailedField.constant(grid, alpha, 3.0))
    assert np.max(np.abs(out.values)) <= 1e-10 * 3.0 * max(1.0, plan.S)


def test_quadrature_matches_closed_form_at_half(grid, kernel):
    # L 1/(1 + x^2) = pi (1 - x^2) / (1 + x^2)^2 for beta = 1, alpha = 1/2
    plan = build_plan(kernel, grid, "quadrature")
    x = grid.axis()
    field = TailedField.from_values(1.0 / (1.0 + x ** 2), grid, 0.5)
    out = apply_operator(plan, field)
    inner = np.abs(x) <= 4.0
    exact = np.pi * (1.0 - x ** 2) / (1.0 + x ** 2) ** 2
    assert np.max(np.abs(out.values[inner] - exact[inner])) < 5e-3


def test_backends_agree_on_smooth_data(kernel):
    g = Grid(1, 16.0, 1024, 32)
    x = g.axis()
    field = TailedField.from_values(np.exp(-x ** 2 / 4.0), g, 0.5)
    quad = apply_operator(build_plan(kernel, g, "quadrature"), field).values
    spec = apply_operator(build_plan(kernel, g, "spectral", pad_factor=16), field).values
    inner = np.abs(x) <= 8.0
    scale = np.max(np.abs(spec))
    assert np.max(np.abs(quad[inner] - spec[inner])) <= 1e-4 * scale


@pytest.mark.parametrize("backend", ["quadrature", "spectral"])
def test_product_rule_with_bilinear_form(grid, kernel, backend):
    plan = build_plan(kernel, grid, backend)
    x = grid.axis()
    f = TailedField.from_values(1.0 / (1.0 + x ** 2), grid, 0.5)
    s = np.arange(grid.n_cell) / grid.n_cell
    g = CellField(2.0 + np.cos(2 * np.pi * s), 1)
    gb = g.on_box(grid)
    g_mean = float(np.mean(g.values))

    K = apply_bilinear(plan, f, g).values
    Lf = plan.apply_values(f.values, f.tail_amp, f.background)
    Lg = plan.apply_values(gb, 0.0, g_mean)
    Lfg = plan.apply_values(f.values * gb, f.tail_amp * g_mean, f.background * g_mean)
    expected = f.values * Lg + gb * Lf - Lfg
    scale = max(1.0, np.max(np.abs(expected)))
    assert np.max(np.abs(K - expected)) <= 1e-6 * scale


def test_bilinear_form_with_constant_vanishes(grid, kernel):
    plan = build_plan(kernel, grid, "quadrature")
    x = grid.axis()
    f = TailedField.from_values(np.exp(-x ** 2), grid, 0.5)
    K = apply_bilinear(plan, f, CellField(np.full(grid.n_cell, 2.0), 1)).values
    assert np.max(np.abs(K)) < 1e-10


def test_heterogeneous_beta_needs_quadrature(grid):
    with pytest.raises(BackendError):
        build_plan(StableKernel.cosine(0.5), grid, "spectral")


def test_quadrature_is_one_dimensional(kernel):
    g2 = Grid(2, 8.0, 64, 4)
    with pytest.raises(BackendError):
        build_plan(StableKernel.constant(0.5, d=2), g2, "quadrature")


def test_heterogeneous_beta_scales_pointwise(grid):
    kernel = StableKernel.cosine(0.5, 2.0, 1.0)
    plan = build_plan(kernel, grid, "quadrature")
    unit = build_plan(StableKernel.constant(0.5), grid, "quadrature")
    x = grid.axis()
    field = TailedField.from_values(np.exp(-x ** 2), grid, 0.5)
    expected = (2.0 + np.cos(2 * np.pi * x)) * apply_operator(unit, field).values
    assert np.allclose(apply_operator(plan, field).values, expected, rtol=1e-12, atol=1e-12)


def test_rescaled_operator_rejects_points_outside_box(grid, kernel):
    plan = build_plan(kernel, grid, "quadrature")
    field = TailedField.from_values(np.exp(-grid.axis() ** 2), grid, 0.5)
    with pytest.raises(BackendError):
        apply_rescaled_operator(plan, field, 0.25, np.array([3.0]))
    value = apply_rescaled_operator(plan, field, 0.5, np.array([1.5]))
    assert np.isfinite(value).all()


def test_cell_operator_symmetric_and_conservative():
    op = CellOperator(StableKernel.constant(0.5), 64)
    A = op.dense()
    assert np.allclose(A, A.T, atol=1e-12)
    assert np.max(np.abs(A.sum(axis=1))) < 1e-9


def test_cell_backends_agree_on_smooth_mode():
    kernel = StableKernel.constant(0.5)
    s = np.arange(128) / 128
    f = np.cos(2 * np.pi * s)
    quad = CellOperator(kernel, 128, "quadrature").apply(f)
    spec = CellOperator(kernel, 128, "spectral").apply(f)
    # cos(2 pi x) is an eigenfunction with eigenvalue pi * 2 pi
    assert np.allclose(spec, 2 * np.pi ** 2 * f, atol=1e-10)
    assert np.max(np.abs(quad - spec)) < 1e-2 * 2 * np.pi ** 2


def test_cell_resolvent_inverts(kernel):
    op = CellOperator(kernel, 64)
    rng = np.random.default_rng(3)
    r = rng.standard_normal(64)
    u = op.resolvent(0.1)(r)
    assert np.allclose(u + 0.1 * op.apply(u), r, atol=1e-10)


@pytest.mark.parametrize("backend", ["quadrature", "spectral"])
def test_operator_is_linear(grid, kernel, backend):
    plan = build_plan(kernel, grid, backend)
    x = grid.axis()
    f = TailedField.from_values(np.exp(-x ** 2), grid, 0.5)
    g = TailedField.from_values(1.0 / (1.0 + x ** 2), grid, 0.5)
    combined = plan.apply_values(2.0 * f.values - 3.0 * g.values, 2.0 * f.tail_amp - 3.0 * g.tail_amp)
    separate = 2.0 * plan.apply_values(f.values, f.tail_amp) - 3.0 * plan.apply_values(g.values, g.tail_amp)
    scale = np.max(np.abs(separate))
    assert np.max(np.abs(combined - separate)) <= 1e-12 * scale


@pytest.mark.parametrize("backend", ["quadrature", "spectral"])
def test_operator_preserves_evenness(grid, kernel, backend):
    # node i mirrors node n_box - i; node 0 at -L has no mirror
    plan = build_plan(kernel, grid, backend)
    field = TailedField.from_values(np.exp(-grid.axis() ** 2), grid, 0.5)
    out = apply_operator(plan, field).values[1:]
    assert np.max(np.abs(out - out[::-1])) <= 1e-10 * np.max(np.abs(out))


def test_backends_agree_at_default_resolution(kernel, grid):
    x = grid.axis()
    field = TailedField.from_values(np.exp(-x ** 2 / 4.0), grid, 0.5)
    quad = apply_operator(build_plan(kernel, grid, "quadrature"), field).values
    spec = apply_operator(build_plan(kernel, grid, "spectral", pad_factor=16), field).values
    inner = np.abs(x) <= 8.0
    assert np.max(np.abs(quad[inner] - spec[inner])) <= 1e-3 * np.max(np.abs(spec))


def test_edge_nodes_use_the_tail_beyond_the_box(grid, kernel):
    plan = build_plan(kernel, grid, "quadrature")
    x = grid.axis()
    field = TailedField.from_values(1.0 / (1.0 + x ** 2), grid, 0.5)
    out = apply_operator(plan, field).values
    ghost = plan.ghost_tail(field.tail_amp)
    assert np.count_nonzero(ghost) == 2
    assert ghost[-1] == pytest.approx(plan.near_weight * field.tail_amp / grid.L ** 2)
    exact = np.pi * (1.0 - x ** 2) / (1.0 + x ** 2) ** 2
    # a zero ghost neighbour would add ghost to the edge values
    for i in (0, -1):
        assert abs(out[i] - exact[i]) < 0.5 * abs(out[i] + ghost[i] - exact[i])


def test_bilinear_form_matches_independent_quadrature(kernel):
    # 2 + cos(2 pi x) on f = 1/(1 + x^2), with K~ integrated directly at a few nodes
    g = Grid(1, 8.0, 1024, 64)
    chi = PeriodicProfile.trig(2.0, cos=[1.0])
    plan = build_plan(kernel, g, "quadrature")
    x = g.axis()
    f = TailedField.from_values(1.0 / (1.0 + x ** 2), g, 0.5)
    K = apply_bilinear(plan, f, CellField(chi(g.cell_axis()), 1)).values
    nodes = [np.argmin(np.abs(x - p)) for p in (0.0, 0.25, 1.0, 2.0)]
    exact = np.array([unit_bilinear_on_g(x[i], 1.0, 0.5, chi) for i in nodes])
    assert exact[0] == pytest.approx(np.pi * (1.0 - np.exp(-2.0 * np.pi)), rel=1e-6)
    assert np.max(np.abs(K[nodes] - exact)) <= 2e-2 * np.max(np.abs(exact))


@pytest.mark.parametrize("backend", ["quadrature", "spectral"])
def test_rescaled_operator_at_unit_epsilon_is_the_operator(grid, kernel, backend):
    plan = build_plan(kernel, grid, backend)
    field = TailedField.from_values(np.exp(-grid.axis() ** 2), grid, 0.5)
    x = np.array([-2.5, 0.0, 0.3, 7.0])
    value = apply_rescaled_operator(plan, field, 1.0, x)
    assert np.array_equal(value, apply_operator(plan, field).evaluate(x))
    with pytest.raises(BackendError):
        apply_rescaled_operator(plan, field, 1.5, x)

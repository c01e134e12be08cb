"""Two-sided bounds on the heat kernel of the operator with constant beta."""
import logging
from typing import Optional, Sequence

import numpy as np
from scipy.special import voigt_profile
from scipy.stats import cauchy, linregress

from config.config import HEAT_STABILITY, TAIL_SLOPE_TOL
from models.errors import ScenarioError
from models.grid import Grid
from models.kernel import StableKernel
from models.reports import Verdict
from operators.weights import symbol_constant
from solvers.evolution import gaussian_bump, linear_evolve

logger = logging.getLogger(__name__)

MASS_TOL = 1e-3


def poisson_oracle(x, t: float, sigma: float = 0.0, beta: float = 1.0) -> np.ndarray:
    """Exact solution at alpha = 1/2, d = 1 from a Gaussian of width sigma (a point mass if sigma = 0).

    The symbol pi beta |xi| makes the kernel a Cauchy density of scale pi beta t.
    """
    scale = symbol_constant(1, 0.5) * beta * t
    if sigma == 0.0:
        return cauchy.pdf(x, scale=scale)
    return voigt_profile(x, sigma, scale)


def heat_kernel_grid(probe_radii: Sequence[float], h: float = 1.0 / 16.0, d: int = 1) -> Grid:
    """Box wide enough that the outermost probe sits in the inner quarter."""
    L = max(64.0, 4.0 * max(probe_radii))
    n_box = int(np.ceil(2.0 * L / h))
    n_box += n_box % 2
    return Grid(d, n_box * h / 2.0, n_box, int(round(1.0 / h)))


def _min_form(r: np.ndarray, t: float, d: int, alpha: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        far = np.where(r > 0.0, t / r ** (d + 2.0 * alpha), np.inf)
    return np.minimum(t ** (-d / (2.0 * alpha)), far)


def _measure(kernel: StableKernel, grid: Grid, sigma: float, T_list: Sequence[float],
             probe_radii: Sequence[float], dt: float):
    n0 = gaussian_bump(grid, kernel.alpha, sigma)
    traj = linear_evolve(kernel, 0.0, n0, max(T_list), dt, snap_every=dt, backend="spectral")
    radii = np.asarray(probe_radii, dtype=float)
    pts = radii if grid.d == 1 else np.stack([radii, np.zeros_like(radii)], axis=-1)
    C_hat, sups, masses = 0.0, [], []
    for T in T_list:
        snap = traj.at(T, tol=0.5 * dt)
        p = snap.evaluate(pts)
        m = _min_form(radii, T, grid.d, kernel.alpha)
        C_hat = max(C_hat, float(np.max(np.maximum(p / m, m / p))))
        sups.append(snap.sup)
        masses.append(snap.mass())
    return C_hat, sups, masses


def heat_kernel_bounds(kernel: StableKernel, T_list: Sequence[float], probe_radii: Sequence[float],
                       grid: Optional[Grid] = None, sigma: Optional[float] = None, dt: float = 5e-3) -> Verdict:
    """Smallest C with C^-1 m <= p <= C m over the probes, m = min(t^(-d/2a), t/|x|^(d+2a)).

    p comes from the linear semigroup started at a narrow unit-mass bump; C_hat must
    stay within 20% when the bump width is halved.
    """
    if not kernel.is_constant:
        raise ScenarioError("heat-kernel check accepts constant beta only", field_path="kernel")
    grid = grid or heat_kernel_grid(probe_radii, d=kernel.d)
    sigma = 4.0 * grid.h if sigma is None else sigma
    if sigma / 2.0 < 2.0 * grid.h - 1e-12:
        raise ScenarioError(f"bump width {sigma:.4g} under-resolved on h={grid.h:.4g}; need σ ≥ 4h",
                            field_path="verify")
    T_list = sorted(float(t) for t in T_list)

    C_hat, sups, masses = _measure(kernel, grid, sigma, T_list, probe_radii, dt)
    C_half, _, _ = _measure(kernel, grid, sigma / 2.0, T_list, probe_radii, dt)
    drift = abs(C_half / C_hat - 1.0)
    expected = -kernel.d / (2.0 * kernel.alpha)
    slope = float(linregress(np.log(T_list), np.log(sups)).slope) if len(T_list) >= 2 else expected
    mass_error = float(max(abs(m - 1.0) for m in masses))

    notes = []
    if abs(slope - expected) > TAIL_SLOPE_TOL * abs(expected):
        notes.append(f"sup decay slope {slope:.4f} differs from {expected:.4f} by more than 5%")
    if mass_error > MASS_TOL:
        notes.append(f"mass drift {mass_error:.2e}")
    passed = bool(np.isfinite(C_hat) and drift <= HEAT_STABILITY)
    logger.info("heat kernel: C_hat=%.4f (half-width %.4f), slope %.4f, mass error %.2e",
                C_hat, C_half, slope, mass_error)
    return Verdict(
        "heat_kernel",
        passed,
        {
            "C_hat": C_hat,
            "C_hat_half_width": C_half,
            "stability_drift": drift,
            "sup_slope": slope,
            "expected_sup_slope": expected,
            "mass_error": mass_error,
            "sigma": sigma,
        },
        margin=float(HEAT_STABILITY - drift),
        notes=notes,
    )

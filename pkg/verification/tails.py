"""Algebraic tails of n(., 1): slope fit and the linear sub/super bracket."""
import logging
from typing import Optional

import numpy as np
from scipy.stats import linregress

from config.config import POSITIVITY_FLOOR, TAIL_SLOPE_TOL
from models.errors import TailFitError
from models.fields import TailedField
from models.kernel import StableKernel
from models.reaction import ReactionModel
from models.reports import Verdict
from solvers.evolution import evolve, tail_bracket

logger = logging.getLogger(__name__)

# Relative tolerance of the pointwise bracket comparison
BRACKET_TOL = 1e-6


def check_tails(snapshot: TailedField, d: Optional[int] = None, alpha: Optional[float] = None) -> Verdict:
    """Slope of log n against log |x| on the outer decade [L/10, L] and the envelope constants there."""
    d = snapshot.d if d is None else d
    alpha = snapshot.alpha_tag if alpha is None else alpha
    p = d + 2.0 * alpha
    g = snapshot.grid
    r = g.radius()
    region = (r >= 0.1 * g.L) & (r <= g.L)
    values = snapshot.values[region]
    if values.min() <= POSITIVITY_FLOOR:
        raise TailFitError(f"box too small: density at the positivity floor in the fit region r ∈ [{0.1 * g.L}, {g.L}]")

    fit = linregress(np.log(r[region]), np.log(values))
    scaled = values * (1.0 + r[region] ** p)
    c_m_hat, c_M_hat = float(scaled.min()), float(scaled.max())
    slope_gap = abs(fit.slope + p)
    passed = slope_gap <= TAIL_SLOPE_TOL * p and 0.0 < c_m_hat <= c_M_hat < np.inf
    verdict = Verdict(
        check="tails",
        passed=bool(passed),
        measured={"slope": float(fit.slope), "expected_slope": -p, "c_m_hat": c_m_hat, "c_M_hat": c_M_hat},
        margin=float(TAIL_SLOPE_TOL * p - slope_gap),
    )
    logger.info("tails: slope %.4f (expected %.4f), c_m=%.4g, c_M=%.4g", fit.slope, -p, c_m_hat, c_M_hat)
    return verdict


def check_tail_bracket(kernel: StableKernel, reaction: ReactionModel, n0: TailedField, dt: float,
                       t: float = 1.0, snapshot: Optional[TailedField] = None, **kwargs) -> Verdict:
    """lower <= n(., t) <= upper pointwise, the bracket coming from linear sub/super evolutions."""
    if snapshot is None:
        snapshot = evolve(kernel, reaction, n0, t, dt, **kwargs).final
    lower, upper = tail_bracket(kernel, reaction, n0, dt, t, **kwargs)
    tol = BRACKET_TOL * max(1.0, snapshot.sup)
    below = float(np.max(lower.values - snapshot.values))
    above = float(np.max(snapshot.values - upper.values))
    worst = max(below, above)
    notes = []
    if below > tol:
        notes.append(f"n below the sub-solution by {below:.3e}")
    if above > tol:
        notes.append(f"n above the super-solution by {above:.3e}")
    return Verdict(
        check="tail_bracket",
        passed=worst <= tol,
        measured={"below": below, "above": above, "tol": tol},
        margin=float(tol - worst),
        notes=notes,
    )


def initial_constants(snapshot: TailedField) -> tuple:
    """(c_m, c_M): min and max of n (1 + |x|^(d+2 alpha)) over the whole box."""
    p = snapshot.exponent
    scaled = snapshot.values * (1.0 + snapshot.grid.radius() ** p)
    c_m, c_M = float(scaled.min()), float(scaled.max())
    if c_m <= 0.0:
        raise TailFitError("n vanishes somewhere in the box; no algebraic lower constant")
    return c_m, c_M

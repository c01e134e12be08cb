"""Time integration on the truncated box and the periodic steady state."""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from config.config import (
    BLOWUP_FACTOR,
    DEFAULT_PAD_FACTOR,
    EIGEN_TOL,
    ROUNDOFF_NEGATIVE,
    STEADY_DT,
    STEADY_MAX_STEPS,
)
from models.eigenpair import EigenPair
from models.errors import BlowUpError, EvolutionError, NoInvasionError
from models.fields import CellField, TailedField
from models.grid import Grid
from models.kernel import StableKernel
from models.reaction import ReactionModel
from operators.cell import CellOperator
from operators.plan import OperatorPlan, build_plan
from solvers.eigensolver import principal_eigenpair

logger = logging.getLogger(__name__)

# Relative overshoot of the a priori box tolerated before a trajectory is rejected
BOX_SLACK = 1e-3


@dataclass(frozen=True)
class ClipEvent:
    t: float
    value: float
    index: Tuple[int, ...]


@dataclass(frozen=True)
class Trajectory:
    """Snapshots (t, n(., t)) plus the per-step min/max log."""
    snapshots: List[Tuple[float, TailedField]]
    scheme: str
    dt: float
    minmax: np.ndarray
    bound: float
    clip_events: List[ClipEvent] = field(default_factory=list)

    def __post_init__(self):
        times = self.times
        if times.size == 0:
            raise EvolutionError("trajectory without snapshots")
        if np.any(np.diff(times) <= 0.0):
            raise EvolutionError("snapshot times must be strictly increasing")
        for t, snap in self.snapshots:
            if snap.inf < 0.0:
                raise EvolutionError(f"negative density {snap.inf:.3e} in snapshot t={t}")
            if np.isfinite(self.bound) and snap.sup > self.bound * (1.0 + BOX_SLACK) + ROUNDOFF_NEGATIVE:
                raise EvolutionError(f"snapshot t={t} leaves the a priori box: sup {snap.sup:.6g} > {self.bound:.6g}")

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.snapshots])

    @property
    def grid(self) -> Grid:
        return self.snapshots[0][1].grid

    @property
    def span(self) -> float:
        return float(self.times[-1])

    @property
    def final(self) -> TailedField:
        return self.snapshots[-1][1]

    def at(self, t: float, tol: float = 1e-9) -> TailedField:
        """The snapshot taken at time t."""
        times = self.times
        i = int(np.argmin(np.abs(times - t)))
        if abs(times[i] - t) > tol * max(1.0, abs(t)):
            raise EvolutionError(f"no snapshot at t={t}; nearest is {times[i]}")
        return self.snapshots[i][1]

    def sample(self, x, t: float) -> np.ndarray:
        """n(x, t), linear in time between snapshots and in space on the grid."""
        times = self.times
        if t < times[0] - 1e-12 or t > times[-1] + 1e-9 * max(1.0, times[-1]):
            raise EvolutionError(f"t={t:.6g} outside the trajectory span [{times[0]}, {times[-1]}]")
        j = int(np.searchsorted(times, t, side="right"))
        if j >= len(times):
            return self.snapshots[-1][1].evaluate(x)
        if j == 0:
            return self.snapshots[0][1].evaluate(x)
        t0, f0 = self.snapshots[j - 1]
        t1, f1 = self.snapshots[j]
        w = (t - t0) / (t1 - t0)
        return (1.0 - w) * f0.evaluate(x) + w * f1.evaluate(x)

    def summary(self) -> dict:
        return {
            "scheme": self.scheme,
            "dt": self.dt,
            "snapshots": len(self.snapshots),
            "span": self.span,
            "bound": self.bound,
            "clip_events": len(self.clip_events),
        }


def raised_cosine_bump(grid: Grid, alpha: float, center: float = 0.0, width: float = 1.0,
                       height: float = 0.5) -> TailedField:
    """Compactly supported initial datum height (1 + cos(pi r / width)) / 2 on r < width."""
    pts = grid.points()
    if grid.d == 1:
        r = np.abs(pts - center)
    else:
        r = np.linalg.norm(pts - np.array([center, 0.0]), axis=-1)
    values = np.where(r < width, 0.5 * height * (1.0 + np.cos(np.pi * r / width)), 0.0)
    return TailedField(values, grid, alpha)


def gaussian_bump(grid: Grid, alpha: float, sigma: float) -> TailedField:
    """Unit-mass Gaussian at the origin."""
    r = grid.radius()
    values = np.exp(-0.5 * (r / sigma) ** 2) / (2.0 * np.pi * sigma ** 2) ** (grid.d / 2.0)
    return TailedField(values, grid, alpha)


def dt_max(plan: OperatorPlan) -> float:
    """Stability bound of the explicit scheme, 0.4 h^(2 alpha) / (B K_quad)."""
    return plan.dt_max


def _default_backend(kernel: StableKernel) -> str:
    return "spectral" if kernel.is_constant else "quadrature"


def evolve(kernel: StableKernel, reaction: ReactionModel, n0: TailedField, T: float, dt: float,
           snap_every: Optional[float] = None, backend: Optional[str] = None,
           pad_factor: int = DEFAULT_PAD_FACTOR, plan: Optional[OperatorPlan] = None) -> Trajectory:
    """Integrate dn/dt + L n = F(x, n) from n0 up to time T.

    quadrature: explicit Euler, dt must respect dt_max.
    spectral:   IMEX Euler with the operator implicit through its Fourier multiplier.
    """
    if T <= 0.0 or dt <= 0.0:
        raise EvolutionError(f"T={T} and dt={dt} must be positive")
    if not n0.density:
        raise EvolutionError("initial datum must be a density")
    if plan is None:
        plan = build_plan(kernel, n0.grid, backend or _default_backend(kernel), pad_factor)
    elif plan.grid != n0.grid:
        raise EvolutionError("plan grid does not match the initial datum")
    scheme = "explicit" if plan.backend == "quadrature" else "imex"
    if scheme == "explicit" and dt > plan.dt_max:
        raise EvolutionError(f"dt={dt:.4g} above the explicit stability bound dt_max={plan.dt_max:.4g}")

    steps = max(1, int(math.ceil(T / dt - 1e-9)))
    dt_eff = T / steps
    stride = steps if snap_every is None else max(1, int(round(snap_every / dt_eff)))
    M_cap = reaction.M_cap
    bound = max(M_cap, n0.sup) if np.isfinite(M_cap) else np.inf
    F = reaction.bind(n0.grid.points())

    n = np.array(n0.values, dtype=float)
    tail_amp = n0.tail_amp
    snapshots = [(0.0, n0)]
    minmax = np.empty((steps + 1, 3))
    minmax[0] = (0.0, n.min(), n.max())
    clips: List[ClipEvent] = []
    logger.info("evolve: %s scheme, %d steps of dt=%.4g, n_box=%d", scheme, steps, dt_eff, n0.grid.n_box)

    for m in range(1, steps + 1):
        t = m * dt_eff
        if scheme == "explicit":
            n = n + dt_eff * (F(n) - plan.apply_values(n, tail_amp))
        else:
            n = plan.resolve(n + dt_eff * (F(n) + plan.exterior(tail_amp)), dt_eff)

        low = float(n.min())
        if low < 0.0:
            scale = max(1.0, float(n.max()))
            if low < -ROUNDOFF_NEGATIVE * scale:
                idx = np.unravel_index(int(np.argmin(n)), n.shape)
                clips.append(ClipEvent(t, low, tuple(int(i) for i in idx)))
                logger.warning("clip event at t=%.4g: n=%.3e at %s", t, low, idx)
            np.maximum(n, 0.0, out=n)
        high = float(n.max())
        if not np.isfinite(high) or (np.isfinite(M_cap) and high > BLOWUP_FACTOR * max(M_cap, n0.sup)):
            idx = np.unravel_index(int(np.nanargmax(n)), n.shape)
            raise BlowUpError(f"blow-up at t={t:.4g}: sup {high:.3e} at grid index {idx}")
        minmax[m] = (t, n.min(), high)

        if m % stride == 0 or m == steps:
            snap = TailedField.from_values(n, n0.grid, n0.alpha_tag)
            tail_amp = snap.tail_amp
            snapshots.append((t, snap))

    if clips:
        logger.warning("%d clip events during evolution", len(clips))
    return Trajectory(snapshots, scheme, dt_eff, minmax, bound, clips)


def linear_evolve(kernel: StableKernel, rate: float, n0: TailedField, T: float, dt: float,
                  snap_every: Optional[float] = None, **kwargs) -> Trajectory:
    """evolve with F(x, s) = rate s."""
    return evolve(kernel, ReactionModel.linear(rate, kernel.d), n0, T, dt, snap_every, **kwargs)


def tail_bracket(kernel: StableKernel, reaction: ReactionModel, n0: TailedField, dt: float,
                 t: float = 1.0, **kwargs) -> Tuple[TailedField, TailedField]:
    """Linear sub/super evolutions bracketing n(., t).

    Lower rate -(max|mu| + c M) bounds F(x, s)/s from below on [0, M]; upper rate max|mu| from above.
    """
    M = max(reaction.M_cap, n0.sup, reaction.max_abs_mu)
    low_rate = -(reaction.max_abs_mu + reaction.c_lower * M)
    high_rate = reaction.max_abs_mu
    lower = linear_evolve(kernel, low_rate, n0, t, dt, **kwargs).final
    upper = linear_evolve(kernel, high_rate, n0, t, dt, **kwargs).final
    return lower, upper


@dataclass(frozen=True)
class SteadyState:
    n_plus: CellField
    residual: float
    steps: int
    history: List[float] = field(default_factory=list, compare=False)

    def to_dict(self) -> dict:
        return {
            "residual": self.residual,
            "steps": self.steps,
            "min": self.n_plus.min,
            "max": self.n_plus.max,
            "n_plus": self.n_plus.values.ravel().tolist(),
        }


def steady_state(kernel: StableKernel, reaction: ReactionModel, cell_n: int = 128, tol: float = 1e-8,
                 initial: Optional[float] = None, eigpair: Optional[EigenPair] = None,
                 max_steps: int = STEADY_MAX_STEPS) -> SteadyState:
    """March the periodic problem (I + dt L) n' = n + dt F(x, n) to its positive steady state."""
    if eigpair is None:
        eigpair = principal_eigenpair(kernel, reaction.media, max(cell_n, 32), max(EIGEN_TOL, 1e-12))
    if eigpair.lambda1 >= 0.0:
        raise NoInvasionError(f"only trivial steady state expected (λ1={eigpair.lambda1:.6g} ≥ 0)")

    op = CellOperator(kernel, cell_n)
    F = reaction.bind(op.points)
    start = max(reaction.M_cap, 1.0) if initial is None else float(initial)
    dt = min(STEADY_DT, 0.5 / (reaction.max_abs_mu + 2.0 * max(reaction.c_lower, 1.0) * start))
    solve = op.resolvent(dt)
    n = np.full(op.shape, start)
    history = []
    for step in range(1, max_steps + 1):
        n_new = solve(n + dt * F(n))
        rate = float(np.max(np.abs(n_new - n))) / dt
        n = n_new
        history.append(rate)
        if rate <= tol:
            residual = float(np.max(np.abs(-op.apply(n) + F(n))))
            logger.info("steady state after %d steps: residual %.3e", step, residual)
            return SteadyState(CellField(n, op.d), residual, step, history)
    raise EvolutionError(f"steady state not reached in {max_steps} steps (rate {history[-1]:.3e})", history)

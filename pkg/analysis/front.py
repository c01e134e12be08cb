"""Front extraction, spreading-exponent fits and the rescaled (Hopf-Cole) view of a trajectory."""
import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import linregress

from config.config import DEFAULT_LEVEL, MIN_FIT_POINTS, POSITIVITY_FLOOR, PROBE_MARGIN
from models.errors import FrontError, ProbeError
from models.fields import CellField, TailedField, rescale_point
from solvers.evolution import Trajectory

logger = logging.getLogger(__name__)


def front_radius(snapshot: TailedField, n_plus: CellField, level: float = DEFAULT_LEVEL) -> float:
    """Largest |x| with n(x)/n_plus(x mod 1) >= level, linearly interpolated between grid neighbors."""
    if not 0.0 < level < 1.0:
        raise FrontError(f"front level {level} must lie in (0, 1)")
    if n_plus.min <= 0.0:
        raise FrontError(f"n_plus has a non-positive value {n_plus.min:.3e}")
    g = snapshot.grid
    ratio = snapshot.values / n_plus.on_box(g)
    above = ratio >= level
    if not above.any():
        return 0.0
    if g.d == 2:
        return float(g.radius()[above].max())

    x = g.axis()
    idx = np.flatnonzero(above)
    radii = []
    right, left = idx[-1], idx[0]
    if right == g.n_box - 1:
        radii.append(g.L)
    else:
        w = (ratio[right] - level) / (ratio[right] - ratio[right + 1])
        radii.append(abs(x[right] + w * g.h))
    if left == 0:
        radii.append(g.L)
    else:
        w = (ratio[left] - level) / (ratio[left] - ratio[left - 1])
        radii.append(abs(x[left] - w * g.h))
    return float(max(radii))


def front_series(traj: Trajectory, n_plus: CellField, levels: Sequence[float]) -> Dict[float, List[Tuple[float, float]]]:
    return {c: [(t, front_radius(snap, n_plus, c)) for t, snap in traj.snapshots] for c in levels}


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    stderr: float
    r2: float
    intercept: float
    points: int
    # r² of log(radius) against log(t) over the same window; None without enough t > 0
    r2_power: Optional[float] = None

    @property
    def exponential(self) -> bool:
        """False when a power law t^k explains the radii better than exp(k t)."""
        return self.r2_power is None or self.r2 >= self.r2_power

    def to_dict(self) -> dict:
        out = asdict(self)
        out["exponential"] = self.exponential
        return out


def default_fit_window(lambda1: float, T: float) -> Tuple[float, float]:
    """Skip the front-formation transient: [3/|lambda1|, T]."""
    return min(3.0 / abs(lambda1), T), T


def spreading_exponent(series: Sequence[Tuple[float, float]], fit_window: Tuple[float, float]) -> ExponentFit:
    """Least squares of log(radius) against t over the window, with a log-log fit as a growth-shape control."""
    t_a, t_b = fit_window
    pts = [(t, r) for t, r in series if t_a - 1e-12 <= t <= t_b + 1e-12]
    if len(pts) < MIN_FIT_POINTS:
        raise FrontError(f"{len(pts)} points in window [{t_a}, {t_b}], need ≥ {MIN_FIT_POINTS}")
    t, r = np.array(pts, dtype=float).T
    if np.any(r <= 0.0):
        raise FrontError("front not yet formed; shift window")
    log_r = np.log(r)
    fit = linregress(t, log_r)
    r2_power = None
    positive = t > 0.0
    if positive.sum() >= 3 and np.ptp(t[positive]) > 0.0:
        r2_power = float(linregress(np.log(t[positive]), log_r[positive]).rvalue ** 2)
    result = ExponentFit(float(fit.slope), float(fit.stderr), float(fit.rvalue ** 2), float(fit.intercept),
                         len(pts), r2_power)
    if not result.exponential:
        logger.warning("front radius grows like a power of t (r² %.4f in t, %.4f in log t)", result.r2, r2_power)
    return result


def mapped_outside(traj: Trajectory, epsilon: float, x) -> np.ndarray:
    """True where |x|^(1/eps - 1) x falls outside the box."""
    g = traj.grid
    y = rescale_point(x, epsilon, g.d)
    r = np.abs(y) if g.d == 1 else np.linalg.norm(y, axis=-1)
    return r > g.L


def rescaled_sample(traj: Trajectory, epsilon: float, x, t: float) -> np.ndarray:
    """n_eps(x, t) = n(|x|^(1/eps - 1) x, t/eps)."""
    if not 0.0 < epsilon <= 1.0:
        raise ProbeError(f"epsilon={epsilon} must lie in (0, 1]")
    t_orig = t / epsilon
    if t_orig > traj.span * (1.0 + 1e-12) + 1e-12:
        raise ProbeError(f"t/ε={t_orig:.6g} beyond the final snapshot t={traj.span:.6g}")
    if np.any(mapped_outside(traj, epsilon, x)):
        logger.warning("rescaled probe mapped outside the box; using the tail extrapolation")
    return traj.sample(rescale_point(x, epsilon, traj.grid.d), t_orig)


def hopf_cole(n_value, epsilon: float):
    """u_eps = eps log n_eps."""
    n = np.asarray(n_value, dtype=float)
    if np.any(n <= 0.0):
        raise ProbeError(f"Hopf-Cole needs n > 0; floor samples at {POSITIVITY_FLOOR} first")
    out = epsilon * np.log(n)
    return float(out) if out.ndim == 0 else out


def limit_profile(x, t: float, lambda1: float, d: int, alpha: float):
    """min(0, |lambda1| t - (d + 2 alpha) log |x|)."""
    if t <= 0.0:
        raise ProbeError("limit profile needs t > 0")
    x = np.asarray(x, dtype=float)
    r = np.abs(x) if d == 1 or x.ndim == 0 else np.linalg.norm(x, axis=-1)
    if np.any(r == 0.0):
        raise ProbeError("limit profile undefined at x = 0")
    out = np.minimum(0.0, abs(lambda1) * t - (d + 2.0 * alpha) * np.log(r))
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class ConvergenceRow:
    epsilon: float
    max_A: Optional[float]
    max_B: Optional[float]
    u_error: Optional[float]
    feasible_A: int
    feasible_B: int


@dataclass
class ConvergenceReport:
    rows: List[ConvergenceRow]
    skipped: List[dict] = field(default_factory=list)
    # None when fewer than two epsilons produced a value
    decreasing_A: Optional[bool] = None
    decreasing_B: Optional[bool] = None
    decreasing_u: Optional[bool] = None
    # epsilons whose row has no value for the quantity
    unmeasured: Dict[str, List[float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rows": [asdict(r) for r in self.rows],
            "skipped": self.skipped,
            "decreasing_A": self.decreasing_A,
            "decreasing_B": self.decreasing_B,
            "decreasing_u": self.decreasing_u,
            "unmeasured": self.unmeasured,
        }


def strictly_decreasing(values: Sequence[Optional[float]]) -> Optional[bool]:
    """Strict decrease over the measured entries, in order; None with fewer than two of them."""
    vals = [v for v in values if v is not None]
    if len(vals) < 2:
        return None
    return all(b < a for a, b in zip(vals, vals[1:]))


def _u_margin(x, t: float, lambda1: float, d: int, alpha: float) -> float:
    r = abs(float(x)) if d == 1 else float(np.linalg.norm(x))
    return abs(lambda1) * t - (d + 2.0 * alpha) * np.log(r)


def convergence_report(traj: Trajectory, n_plus: CellField, eps_list: Sequence[float],
                       probes_A: Sequence[Tuple[object, float]], probes_B: Sequence[Tuple[object, float]],
                       lambda1: float, lattice_size: int = 16) -> ConvergenceReport:
    """Per-epsilon maxima of n_eps on A, of |n_eps/n_plus,eps - 1| on B and of |u_eps - u| on a lattice.

    Probes are (x, t) pairs in rescaled variables.
    """
    if list(eps_list) != sorted(eps_list, reverse=True):
        raise ProbeError("eps_list must be descending")
    g = traj.grid
    d, alpha = g.d, traj.final.alpha_tag
    for x, t in probes_A:
        if _u_margin(x, t, lambda1, d, alpha) > -PROBE_MARGIN:
            raise ProbeError(f"probe (x={x}, t={t}) is not inside A with margin {PROBE_MARGIN}")
    for x, t in probes_B:
        if _u_margin(x, t, lambda1, d, alpha) < PROBE_MARGIN:
            raise ProbeError(f"probe (x={x}, t={t}) is not inside B with margin {PROBE_MARGIN}")

    def point(x):
        return float(x) if d == 1 else np.asarray(x, dtype=float)

    rows, skipped = [], []
    for eps in eps_list:
        horizon = eps * traj.span
        values_A, values_B = [], []
        for kind, probes in (("A", probes_A), ("B", probes_B)):
            for x, t in probes:
                if t > horizon * (1.0 + 1e-12):
                    skipped.append({"epsilon": eps, "set": kind, "x": np.asarray(x).tolist(), "t": t,
                                    "reason": f"needs t/ε={t / eps:.4g} beyond span {traj.span:.4g}"})
                    continue
                n_eps = float(rescaled_sample(traj, eps, point(x), t))
                if kind == "A":
                    values_A.append(n_eps)
                else:
                    values_B.append(abs(n_eps / float(n_plus.rescaled(point(x), eps)) - 1.0))

        u_error = _lattice_error(traj, eps, lambda1, d, alpha, lattice_size)
        rows.append(ConvergenceRow(
            eps,
            max(values_A) if values_A else None,
            max(values_B) if values_B else None,
            u_error,
            len(values_A),
            len(values_B),
        ))
        logger.info("ε=%.4g: max_A=%s max_B=%s |u_ε-u|=%s", eps, rows[-1].max_A, rows[-1].max_B, u_error)

    columns = {"A": [r.max_A for r in rows], "B": [r.max_B for r in rows], "u": [r.u_error for r in rows]}
    unmeasured = {k: [r.epsilon for r, v in zip(rows, vals) if v is None] for k, vals in columns.items()}
    for kind, eps_missing in unmeasured.items():
        if eps_missing:
            logger.warning("no %s value at ε=%s; excluded from the decrease check", kind, eps_missing)
    return ConvergenceReport(
        rows,
        skipped,
        strictly_decreasing(columns["A"]),
        strictly_decreasing(columns["B"]),
        strictly_decreasing(columns["u"]),
        unmeasured,
    )


def _lattice_error(traj: Trajectory, eps: float, lambda1: float, d: int, alpha: float, size: int) -> Optional[float]:
    """sup |u_eps - u| on |x| in [0.5, exp(0.8 |lambda1| T_eps / (d + 2 alpha))], t in (0, T_eps]."""
    horizon = eps * traj.span
    r_max = float(np.exp(0.8 * abs(lambda1) * horizon / (d + 2.0 * alpha)))
    if r_max <= 0.5:
        return None
    worst = 0.0
    for t in np.linspace(horizon / 4.0, horizon, 4):
        radii = np.geomspace(0.5, r_max, size)
        x = radii if d == 1 else np.stack([radii, np.zeros_like(radii)], axis=-1)
        with np.errstate(all="ignore"):
            n_eps = np.maximum(traj.sample(rescale_point(x, eps, d), t / eps), POSITIVITY_FLOOR)
        u_eps = hopf_cole(n_eps, eps)
        worst = max(worst, float(np.max(np.abs(u_eps - limit_profile(x, t, lambda1, d, alpha)))))
    return worst

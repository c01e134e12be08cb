"""Sub/super-solution envelopes in rescaled variables and the sandwich check on a trajectory."""
import logging
from dataclasses import replace
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.stats import qmc

from config.config import EPS_BISECT_RANGE, SANDWICH_TOL
from models.eigenpair import EigenPair, Envelope
from models.errors import EnvelopeError
from models.reports import Verdict
from solvers.evolution import Trajectory

logger = logging.getLogger(__name__)


def _log_norm(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    r = np.abs(x) if d == 1 else np.linalg.norm(x, axis=-1)
    with np.errstate(divide="ignore"):
        return np.log(r)


def build_envelopes(env: Envelope, t_grid: Sequence[float], x_probes, alpha: float) -> Tuple[np.ndarray, np.ndarray]:
    """(f_m, f_M) at every (t, x); rows follow t_grid.

    f_M = phi_eps C_M / (1 + exp(-t(|l| + eps^2)/eps - delta/eps) |x|^(p/eps))
    f_m = phi_eps C_m exp(-delta/eps) / (1 + exp(-t(|l| - eps^2)/eps - delta/eps) |x|^(p/eps))
    with the denominators evaluated through logaddexp.
    """
    if env.checked and not env.admissible:
        raise EnvelopeError("envelope not admissible")
    eps, lam, delta = env.epsilon, env.abs_lambda, env.delta
    d = env.eigpair.d
    alpha_p = d + 2.0 * alpha
    t = np.asarray(t_grid, dtype=float)[:, None]
    log_r = _log_norm(x_probes, d)[None, :]
    phi = env.eigpair.phi1.rescaled(x_probes, eps)[None, :]
    z_upper = -t * (lam + eps ** 2) / eps - delta / eps + alpha_p / eps * log_r
    z_lower = -t * (lam - eps ** 2) / eps - delta / eps + alpha_p / eps * log_r
    f_M = phi * env.C_M * np.exp(-np.logaddexp(0.0, z_upper))
    f_m = phi * env.C_m * np.exp(-delta / eps - np.logaddexp(0.0, z_lower))
    return f_m, f_M


def sandwich_bounds(env: Envelope, s: np.ndarray, y: np.ndarray, phi: np.ndarray,
                    alpha: float) -> Tuple[np.ndarray, np.ndarray]:
    """Lower and upper bounds on n(y, t_origin + s) pulled back to unrescaled variables.

    lower = phi C_m exp(-delta/eps - eps^2 s) / (1 + exp(-|l| s - delta/eps) |y|^p)
    upper = phi C_M exp(eps^2 s)             / (1 + exp(-|l| s - delta/eps) |y|^p)
    """
    eps, lam, delta = env.epsilon, env.abs_lambda, env.delta
    p = env.eigpair.d + 2.0 * alpha
    d = env.eigpair.d
    z = -lam * s - delta / eps + p * _log_norm(y, d)
    log_den = np.logaddexp(0.0, z)
    lower = phi * env.C_m * np.exp(-delta / eps - eps ** 2 * s - log_den)
    upper = phi * env.C_M * np.exp(eps ** 2 * s - log_den)
    return lower, upper


def _probe_indices(traj: Trajectory, t_origin: float, probes: int):
    times = traj.times
    usable = np.flatnonzero(times >= t_origin - 1e-12)
    if usable.size == 0:
        raise EnvelopeError(f"trajectory ends before t_origin={t_origin}")
    shape = traj.grid.shape
    sampler = qmc.Halton(d=1 + len(shape), scramble=False)
    u = sampler.random(probes + 1)[1:]
    snap = usable[np.minimum((u[:, 0] * usable.size).astype(int), usable.size - 1)]
    nodes = [np.minimum((u[:, 1 + i] * n).astype(int), n - 1) for i, n in enumerate(shape)]
    return snap, nodes


def check_sandwich(traj: Trajectory, env: Envelope, probes: int = 10000, t_origin: float = 1.0,
                   c_m: Optional[float] = None, c_M: Optional[float] = None) -> Verdict:
    """Count probes where n leaves [lower, upper] by more than 1e-8 scale.

    Time starts at t_origin, the snapshot playing the role of the initial datum.
    Probes are grid nodes of snapshots, so no interpolation enters the comparison.
    """
    grid = traj.grid
    if env.eigpair.d != grid.d:
        raise EnvelopeError(f"envelope dimension {env.eigpair.d} != trajectory dimension {grid.d}")
    if c_m is not None and c_M is not None and env.checked and not env.compatible_with_tails(c_m, c_M):
        raise EnvelopeError(f"envelope incompatible with tail constants c_m={c_m:.4g}, c_M={c_M:.4g}")

    snap_idx, nodes = _probe_indices(traj, t_origin, probes)
    phi_box = env.eigpair.phi1.on_box(grid)
    points = grid.points()
    values = np.empty(probes)
    s = np.empty(probes)
    for k in np.unique(snap_idx):
        sel = snap_idx == k
        t, snap = traj.snapshots[k]
        values[sel] = snap.values[tuple(n[sel] for n in nodes)]
        s[sel] = t - t_origin
    y = points[tuple(nodes)]
    phi = phi_box[tuple(nodes)]
    lower, upper = sandwich_bounds(env, s, y, phi, traj.final.alpha_tag)

    tol = SANDWICH_TOL * max(1.0, max(snap.sup for _, snap in traj.snapshots))
    below = lower - values
    above = values - upper
    n_low = int(np.sum(below > tol))
    n_high = int(np.sum(above > tol))
    worst = float(max(below.max(), above.max()))
    measured = {
        "probes": probes,
        "epsilon": env.epsilon,
        "violations_lower": n_low,
        "violations_upper": n_high,
        "worst_lower": float(below.max()),
        "worst_upper": float(above.max()),
        "tol": tol,
    }
    logger.info("sandwich ε=%.4g: %d lower and %d upper violations over %d probes",
                env.epsilon, n_low, n_high, probes)
    return Verdict("sandwich", n_low + n_high == 0, measured, margin=float(tol - worst))


def empirical_epsilon_zero(traj: Trajectory, eigpair: EigenPair, c_m: float, c_M: float,
                           c_lower: float = 1.0, C_upper: float = 1.0, probes: int = 10000,
                           t_origin: float = 1.0, iterations: int = 12) -> Optional[float]:
    """Largest eps in the bisection range with no sandwich violations (None if even the smallest fails)."""
    lo, hi = EPS_BISECT_RANGE
    base = Envelope.from_tails(eigpair, c_m, c_M, lo, c_lower, C_upper)

    def clean(eps: float) -> bool:
        try:
            env = replace(base, epsilon=eps)
        except EnvelopeError:
            return False
        return check_sandwich(traj, env, probes, t_origin).passed

    if not clean(lo):
        return None
    if clean(hi):
        return hi
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if clean(mid):
            lo = mid
        else:
            hi = mid
    logger.info("empirical ε0 ≈ %.4g", lo)
    return lo

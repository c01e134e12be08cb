import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.stats import qmc

from config.config import MU_FD_STEP, MU_FD_TOL, SYMMETRY_TOL
from models.errors import ReactionError, ScenarioError
from models.media import PeriodicProfile, profile_from_spec
from models.reports import ValidationReport

logger = logging.getLogger(__name__)

REACTION_FAMILIES = ("logistic", "weighted_logistic", "linear", "quadratic")


@dataclass(frozen=True)
class ReactionModel:
    """Reaction F(x, s) with mu(x) = dF/ds(x, 0).

    logistic          F = mu s - s^2
    weighted_logistic F = mu s - omega s^2
    linear            F = rate s          (sub/super evolutions and the heat semigroup)
    quadratic         F = s^2             (not KPP; kept as a validation control)
    """
    family: str
    media: PeriodicProfile
    omega: Optional[PeriodicProfile] = None
    rate: float = 0.0

    def __post_init__(self):
        if self.family not in REACTION_FAMILIES:
            raise ScenarioError(f"unknown reaction family {self.family!r}", field_path="reaction.family")
        if self.family == "weighted_logistic":
            if self.omega is None:
                raise ScenarioError("weighted logistic needs omega", field_path="reaction.params.omega")
            if self.omega.bounds()[0] <= 0.0:
                raise ScenarioError("omega must be strictly positive", field_path="reaction.params.omega")

    # Constructors
    @classmethod
    def logistic(cls, media: PeriodicProfile) -> "ReactionModel":
        return cls("logistic", media)

    @classmethod
    def weighted_logistic(cls, media: PeriodicProfile, omega: PeriodicProfile) -> "ReactionModel":
        return cls("weighted_logistic", media, omega)

    @classmethod
    def linear(cls, rate: float, d: int = 1) -> "ReactionModel":
        return cls("linear", PeriodicProfile.constant(rate, d), rate=float(rate))

    @classmethod
    def quadratic(cls, d: int = 1) -> "ReactionModel":
        return cls("quadratic", PeriodicProfile.constant(0.0, d))

    @property
    def d(self) -> int:
        return self.media.d

    def F(self, x, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.family == "logistic":
            return self.media(x) * s - s * s
        if self.family == "weighted_logistic":
            return self.media(x) * s - self.omega(x) * s * s
        if self.family == "linear":
            return self.rate * s
        return s * s

    def mu(self, x) -> np.ndarray:
        return self.media(x)

    def bind(self, x) -> Callable[[np.ndarray], np.ndarray]:
        """s -> F(x, s) with the profiles sampled once at the fixed points x."""
        if self.family == "linear":
            rate = self.rate
            return lambda s: rate * s
        if self.family == "quadratic":
            return lambda s: s * s
        mu = self.media(x)
        omega = self.omega(x) if self.family == "weighted_logistic" else 1.0
        return lambda s: mu * s - omega * s * s

    @property
    def c_lower(self) -> float:
        """-min slope of s -> F(x,s)/s."""
        if self.family == "weighted_logistic":
            return self.omega.bounds()[1]
        return 0.0 if self.family == "linear" else 1.0

    @property
    def C_upper(self) -> float:
        """-max slope of s -> F(x,s)/s."""
        if self.family == "weighted_logistic":
            return self.omega.bounds()[0]
        if self.family == "quadratic":
            return -1.0
        return 0.0 if self.family == "linear" else 1.0

    @property
    def M_cap(self) -> float:
        """Density above which F < 0."""
        if self.family == "linear":
            return np.inf if self.rate > 0 else 0.0
        if self.family == "quadratic":
            return 1.0
        mu_max = self.media.bounds()[1]
        if self.family == "weighted_logistic":
            mu_max = max(mu_max, 0.0) / self.omega.bounds()[0]
        return max(mu_max, 0.0) * 1.01 + 1e-9

    @property
    def max_abs_mu(self) -> float:
        lo, hi = self.media.bounds()
        return max(abs(lo), abs(hi))


def reaction_from_spec(spec, media_spec, d: int) -> ReactionModel:
    media = profile_from_spec(media_spec, d)
    params = dict(spec.params)
    if spec.family == "weighted_logistic":
        raw = params.get("omega")
        if not isinstance(raw, dict):
            raise ScenarioError("omega must be a profile object", field_path="reaction.params.omega")
        omega = PeriodicProfile(raw.get("family", "constant"), dict(raw.get("params", {})), d)
        return ReactionModel.weighted_logistic(media, omega)
    if spec.family == "linear":
        return ReactionModel.linear(float(params.get("rate", 0.0)), d)
    if spec.family == "quadratic":
        return ReactionModel.quadratic(d)
    return ReactionModel.logistic(media)


def _cell_samples(d: int, samples: int) -> np.ndarray:
    pts = qmc.Halton(d=d, scramble=False).random(samples + 1)[1:]
    return pts[:, 0] if d == 1 else pts


def validate_reaction(r: ReactionModel, s_max: float, samples: int = 64) -> ValidationReport:
    if np.isfinite(r.M_cap) and s_max < r.M_cap:
        raise ScenarioError(f"s_max={s_max} must be at least M_cap={r.M_cap}", field_path="reaction")
    x = _cell_samples(r.d, samples)
    messages = []
    defects = {}

    # (ii) F(x, 0) = 0
    f0 = r.F(x, np.zeros(samples))
    defects["F_at_zero"] = float(np.max(np.abs(f0)))
    if defects["F_at_zero"] > 0.0:
        i = int(np.argmax(np.abs(f0)))
        messages.append(f"(H4 ii) F(x,0)={f0[i]:.3e} at x={x[i]!r}")

    # (i) periodicity
    shifted = x + 1.0
    s_probe = np.full(samples, 0.5 * s_max)
    defects["periodicity"] = float(np.max(np.abs(r.F(shifted, s_probe) - r.F(x, s_probe))))
    if defects["periodicity"] > SYMMETRY_TOL * max(1.0, s_max ** 2):
        messages.append(f"(H4 i) periodicity defect {defects['periodicity']:.3e}")

    # (iii) slope of F(x, s)/s on (0, s_max]
    s = np.linspace(s_max / 64.0, s_max, 64)
    xs = np.repeat(x[:, None] if r.d == 1 else x[:, None, :], s.size, axis=1)
    ss = np.broadcast_to(s, xs.shape[:2])
    q = r.F(xs, ss) / ss
    slopes = np.diff(q, axis=1) / np.diff(s)
    slope_lo, slope_hi = float(slopes.min()), float(slopes.max())
    defects["slope_min"], defects["slope_max"] = slope_lo, slope_hi
    tol = 1e-5 * max(1.0, abs(slope_lo))
    if slope_lo < -r.c_lower - tol or slope_hi > -r.C_upper + tol or slope_hi >= 0.0:
        messages.append(
            f"(H4 iii) slopes [{slope_lo:.4g}, {slope_hi:.4g}] outside [{-r.c_lower:.4g}, {-r.C_upper:.4g}]"
        )

    # (iv) F < 0 above M_cap
    if np.isfinite(r.M_cap):
        s_hi = np.linspace(r.M_cap, s_max if s_max > r.M_cap else r.M_cap * 2.0, 16)
        f_hi = r.F(xs[:, : s_hi.size], np.broadcast_to(s_hi, xs[:, : s_hi.size].shape[:2]))
        defects["F_above_cap"] = float(f_hi.max())
        if defects["F_above_cap"] >= 0.0:
            messages.append(f"(H4 iv) F ≥ 0 above M={r.M_cap:.4g}")

    # mu = dF/ds(x, 0)
    eta = MU_FD_STEP
    fd = (r.F(x, np.full(samples, eta)) - r.F(x, np.full(samples, -eta))) / (2.0 * eta)
    defects["mu_mismatch"] = float(np.max(np.abs(fd - r.mu(x))))
    if defects["mu_mismatch"] > MU_FD_TOL:
        messages.append(f"mu mismatch {defects['mu_mismatch']:.3e}")

    worst = max(defects["F_at_zero"], max(0.0, slope_hi + r.C_upper), defects["mu_mismatch"])
    report = ValidationReport("reaction", not messages, worst, defects, messages)
    if not report.passed:
        logger.warning("reaction validation failed: %s", "; ".join(messages))
    return report


def require_kpp(r: ReactionModel) -> None:
    report = validate_reaction(r, max(2.0 * r.M_cap, 1.0) if np.isfinite(r.M_cap) else 1.0)
    if not report.passed:
        raise ReactionError("; ".join(report.messages))

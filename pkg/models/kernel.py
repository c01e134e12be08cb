"""Anisotropic stable kernels beta(x, theta) and their sampled validation."""
import logging
from dataclasses import dataclass, field, replace
from typing import Dict

import numpy as np
from scipy.stats import qmc

from config.config import SYMMETRY_TOL
from models.errors import KernelError, ScenarioError
from models.media import coordinates
from models.reports import ValidationReport

logger = logging.getLogger(__name__)

KERNEL_FAMILIES = ("constant", "cosine", "skew")


@dataclass(frozen=True)
class StableKernel:
    """The pair (alpha, beta) defining the nonlocal operator.

    Families:
      constant: beta = value
      cosine:   beta = mean + amplitude * cos(2 pi x_1)
      skew:     beta = mean + amplitude * sin(2 pi x_1) * theta_1   (odd in theta; only for validation)
    """
    alpha: float
    d: int = 1
    family: str = "constant"
    params: Dict[str, float] = field(default_factory=lambda: {"value": 1.0})
    b_lower: float = 1.0
    B_upper: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ScenarioError(f"alpha={self.alpha} violates α ∈ (0,1)", field_path="alpha")
        if self.d not in (1, 2):
            raise ScenarioError(f"dimension {self.d} not in {{1, 2}}", field_path="dimension")
        if self.family not in KERNEL_FAMILIES:
            raise ScenarioError(f"unknown kernel family {self.family!r}", field_path="kernel.family")
        if not 0.0 < self.b_lower <= self.B_upper:
            raise ScenarioError("kernel bounds require 0 < b ≤ B", field_path="kernel.b")

    @classmethod
    def constant(cls, alpha: float, value: float = 1.0, d: int = 1) -> "StableKernel":
        return cls(alpha, d, "constant", {"value": float(value)}, float(value), float(value))

    @classmethod
    def cosine(cls, alpha: float, mean: float = 2.0, amplitude: float = 1.0, d: int = 1) -> "StableKernel":
        return cls(alpha, d, "cosine", {"mean": mean, "amplitude": amplitude},
                   mean - abs(amplitude), mean + abs(amplitude))

    @property
    def exponent(self) -> float:
        """d + 2 alpha, the algebraic tail exponent."""
        return self.d + 2.0 * self.alpha

    @property
    def is_constant(self) -> bool:
        return self.family == "constant" or float(self.params.get("amplitude", 0.0)) == 0.0

    @property
    def constant_value(self) -> float:
        if self.family == "constant":
            return float(self.params["value"])
        if self.is_constant:
            return float(self.params["mean"])
        raise KernelError(f"kernel family {self.family!r} is not constant")

    def beta(self, x, theta) -> np.ndarray:
        axes = coordinates(x, self.d)
        x1 = axes[0]
        theta = np.asarray(theta, dtype=float)
        theta1 = theta if self.d == 1 else theta[..., 0]
        if self.family == "constant":
            return np.full(np.broadcast(x1, theta1).shape, float(self.params["value"]))
        mean = float(self.params.get("mean", 1.0))
        amp = float(self.params.get("amplitude", 0.0))
        if self.family == "cosine":
            return mean + amp * np.cos(2.0 * np.pi * x1) + 0.0 * theta1
        return mean + amp * np.sin(2.0 * np.pi * x1) * theta1

    def beta_x(self, x) -> np.ndarray:
        """beta along the first axis direction; a function of x alone for symmetric d=1 kernels."""
        x = np.asarray(x, dtype=float)
        if self.d == 1:
            return self.beta(x, np.ones_like(x))
        theta = np.zeros(x.shape)
        theta[..., 0] = 1.0
        return self.beta(x, theta)

    def scaled(self, factor: float) -> "StableKernel":
        if self.family == "constant":
            params = {"value": float(self.params["value"]) * factor}
        else:
            params = {"mean": float(self.params["mean"]) * factor,
                      "amplitude": float(self.params.get("amplitude", 0.0)) * factor}
        return replace(self, params=params, b_lower=self.b_lower * factor, B_upper=self.B_upper * factor)


def kernel_from_spec(spec, alpha: float, d: int) -> StableKernel:
    params = dict(spec.params)
    if spec.family == "constant":
        params.setdefault("value", 1.0)
    return StableKernel(alpha, d, spec.family, params, spec.b, spec.B)


def _sample_points(d: int, samples: int):
    """Deterministic Halton points: cell positions and unit directions."""
    sampler = qmc.Halton(d=d + 1, scramble=False)
    pts = sampler.random(samples + 1)[1:]
    if d == 1:
        x = pts[:, 0]
        theta = np.where(pts[:, 1] < 0.5, -1.0, 1.0)
    else:
        x = pts[:, :2]
        phi = 2.0 * np.pi * pts[:, 2]
        theta = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    return x, theta


def validate_kernel(k: StableKernel, samples: int = 256) -> ValidationReport:
    if samples < 100:
        raise ScenarioError("validate_kernel needs at least 100 samples", field_path="kernel")
    x, theta = _sample_points(k.d, samples)
    vals = k.beta(x, theta)
    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(np.argmax(bad))
        raise KernelError(f"non-finite beta at x={x[i]!r}, theta={theta[i]!r}")

    symmetry = float(np.max(np.abs(vals - k.beta(x, -theta))))
    below = float(np.max(k.b_lower - vals))
    above = float(np.max(vals - k.B_upper))
    bound = max(below, above, 0.0)
    periodicity = 0.0
    for axis in range(k.d):
        shifted = np.array(x, copy=True)
        if k.d == 1:
            shifted = shifted + 1.0
        else:
            shifted[:, axis] += 1.0
        periodicity = max(periodicity, float(np.max(np.abs(k.beta(shifted, theta) - vals))))

    messages = []
    if symmetry > SYMMETRY_TOL:
        messages.append(f"symmetry defect {symmetry:.3e}: beta(x,theta) != beta(x,-theta)")
    if bound > SYMMETRY_TOL:
        messages.append(f"bound violation {bound:.3e} outside [{k.b_lower}, {k.B_upper}]")
    if periodicity > SYMMETRY_TOL:
        messages.append(f"periodicity defect {periodicity:.3e}")
    report = ValidationReport(
        name="kernel",
        passed=not messages,
        worst_violation=max(symmetry, bound, periodicity),
        defects={"symmetry": symmetry, "bounds": bound, "periodicity": periodicity},
        messages=messages,
    )
    if not report.passed:
        logger.warning("kernel validation failed: %s", "; ".join(messages))
    return report

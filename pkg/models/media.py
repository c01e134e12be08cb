from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

from models.errors import ScenarioError


def coordinates(x: np.ndarray, d: int) -> List[np.ndarray]:
    """Split points into per-axis arrays; d=1 points are plain arrays, d=2 points carry a trailing axis of 2."""
    x = np.asarray(x, dtype=float)
    if d == 1:
        return [x]
    if x.shape[-1] != d:
        raise ScenarioError(f"expected trailing axis of size {d}, got shape {x.shape}", field_path="dimension")
    return [x[..., i] for i in range(d)]


@dataclass(frozen=True)
class PeriodicProfile:
    """A 1-periodic function of position: mu, omega or chi.

    Families:
      constant: {"value": v}
      trig:     {"mean": m, "sin": [a1, a2, ...], "cos": [b1, b2, ...]}
                m + sum_k a_k sin(2 pi k x_i) + b_k cos(2 pi k x_i), summed over the axes.
    """
    family: str
    params: Dict[str, object] = field(default_factory=dict)
    d: int = 1

    def __post_init__(self):
        if self.family not in ("constant", "trig"):
            raise ScenarioError(f"unknown profile family {self.family!r}", field_path="family")
        if self.family == "constant" and "value" not in self.params:
            raise ScenarioError("constant profile needs 'value'", field_path="params.value")

    @classmethod
    def constant(cls, value: float, d: int = 1) -> "PeriodicProfile":
        return cls("constant", {"value": float(value)}, d)

    @classmethod
    def trig(cls, mean: float, sin: Sequence[float] = (), cos: Sequence[float] = (), d: int = 1) -> "PeriodicProfile":
        return cls("trig", {"mean": float(mean), "sin": list(sin), "cos": list(cos)}, d)

    @property
    def is_constant(self) -> bool:
        if self.family == "constant":
            return True
        coeffs = list(self.params.get("sin", [])) + list(self.params.get("cos", []))
        return all(float(c) == 0.0 for c in coeffs)

    @property
    def mean(self) -> float:
        if self.family == "constant":
            return float(self.params["value"])
        return float(self.params.get("mean", 0.0))

    def __call__(self, x) -> np.ndarray:
        axes = coordinates(x, self.d)
        if self.family == "constant":
            return np.full(axes[0].shape, float(self.params["value"]))
        out = np.full(axes[0].shape, self.mean)
        for xi in axes:
            for k, a in enumerate(self.params.get("sin", []), start=1):
                out = out + float(a) * np.sin(2.0 * np.pi * k * xi)
            for k, b in enumerate(self.params.get("cos", []), start=1):
                out = out + float(b) * np.cos(2.0 * np.pi * k * xi)
        return out

    def modes(self) -> List[tuple]:
        """(k, sin coefficient, cos coefficient) for k = 1, 2, ..."""
        if self.family == "constant":
            return []
        sin = [float(a) for a in self.params.get("sin", [])]
        cos = [float(b) for b in self.params.get("cos", [])]
        size = max(len(sin), len(cos))
        sin += [0.0] * (size - len(sin))
        cos += [0.0] * (size - len(cos))
        return [(k, a, b) for k, (a, b) in enumerate(zip(sin, cos), start=1)]

    def derivative(self, x) -> np.ndarray:
        """d/dx along the first axis (d = 1 profiles)."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for k, a, b in self.modes():
            w = 2.0 * np.pi * k
            out = out + w * (a * np.cos(w * x) - b * np.sin(w * x))
        return out

    def shifted(self, c: float) -> "PeriodicProfile":
        if self.family == "constant":
            return PeriodicProfile.constant(self.mean + c, self.d)
        params = dict(self.params)
        params["mean"] = self.mean + c
        return PeriodicProfile("trig", params, self.d)

    def bounds(self, samples: int = 4096) -> tuple:
        """Sampled (min, max) over the cell."""
        s = (np.arange(samples) + 0.5) / samples
        if self.d == 1:
            vals = self(s)
        else:
            xx, yy = np.meshgrid(s[::32], s[::32], indexing="ij")
            vals = self(np.stack([xx, yy], axis=-1))
        return float(vals.min()), float(vals.max())


def profile_from_spec(spec, d: int) -> PeriodicProfile:
    return PeriodicProfile(spec.family, dict(spec.params), d)

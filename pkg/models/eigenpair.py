import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np

from models.errors import EigenSolverError, EnvelopeError
from models.fields import CellField

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EigenPair:
    """Principal eigenpair of L - mu on the periodic cell, phi1 normalized in sup-norm."""
    lambda1: float
    phi1: CellField
    residual: float
    tol: float
    method: str = "inverse"

    def __post_init__(self):
        if self.phi1.min <= 0.0:
            raise EigenSolverError(
                f"principal eigenvector not positive (min {self.phi1.min:.3e}); refine the cell grid"
            )
        if abs(self.phi1.max - 1.0) > 1e-12:
            raise EigenSolverError(f"phi1 not sup-normalized (max {self.phi1.max!r})")
        if self.residual > self.tol * (1.0 + abs(self.lambda1)):
            raise EigenSolverError(
                f"residual {self.residual:.3e} above tolerance {self.tol:.1e}·(1+|λ1|)"
            )

    @property
    def cell_n(self) -> int:
        return self.phi1.n

    @property
    def d(self) -> int:
        return self.phi1.d

    def to_dict(self) -> dict:
        return {
            "lambda1": self.lambda1,
            "residual": self.residual,
            "cell_n": self.cell_n,
            "method": self.method,
            "phi1": self.phi1.values.ravel().tolist(),
        }


@dataclass(frozen=True)
class Envelope:
    """Constants of the sub/super-solution envelopes f_m, f_M.

    c_lower = C_upper = 1 is the logistic case; other values give the
    general KPP constants.
    """
    C_m: float
    C_M: float
    delta: float
    epsilon: float
    eigpair: EigenPair
    c_lower: float = 1.0
    C_upper: float = 1.0
    checked: bool = field(default=True, compare=False)

    def __post_init__(self):
        if min(self.C_m, self.C_M, self.delta, self.epsilon) <= 0.0:
            raise EnvelopeError("envelope constants must be positive")
        if self.checked:
            problems = self.admissibility_defects()
            if problems:
                raise EnvelopeError("inadmissible envelope: " + "; ".join(problems))

    @classmethod
    def unchecked(cls, C_m: float, C_M: float, delta: float, epsilon: float, eigpair: EigenPair,
                  c_lower: float = 1.0, C_upper: float = 1.0) -> "Envelope":
        """Envelope that skips admissibility; used for negative controls."""
        env = cls(C_m, C_M, delta, epsilon, eigpair, c_lower, C_upper, checked=False)
        if env.admissibility_defects():
            logger.warning("building inadmissible envelope: %s", "; ".join(env.admissibility_defects()))
        return env

    @property
    def abs_lambda(self) -> float:
        return abs(self.eigpair.lambda1)

    def delta_cap(self) -> float:
        phi = self.eigpair.phi1
        upper = self.C_upper * self.C_M * phi.min - self.abs_lambda
        lower = self.abs_lambda - self.c_lower * self.C_m * phi.max
        if upper <= 0.0 or lower <= 0.0:
            return 0.0
        return float(min(np.sqrt(upper), np.sqrt(lower)))

    def admissibility_defects(self) -> List[str]:
        phi = self.eigpair.phi1
        lam = self.abs_lambda
        problems = []
        if self.eigpair.lambda1 >= 0.0:
            problems.append("λ1 ≥ 0: no invasion")
        if not self.C_m < lam / (self.c_lower * phi.max):
            problems.append(f"C_m={self.C_m:.4g} ≥ |λ1|/(c·max φ1)={lam / (self.c_lower * phi.max):.4g}")
        if not self.C_M > lam / (self.C_upper * phi.min):
            problems.append(f"C_M={self.C_M:.4g} ≤ |λ1|/(C·min φ1)={lam / (self.C_upper * phi.min):.4g}")
        cap = self.delta_cap()
        if not 0.0 < self.delta <= cap:
            problems.append(f"δ={self.delta:.4g} outside (0, {cap:.4g}]")
        if not self.epsilon < self.delta:
            problems.append(f"ε={self.epsilon:.4g} ≥ δ={self.delta:.4g}")
        return problems

    @property
    def admissible(self) -> bool:
        return not self.admissibility_defects()

    def compatible_with_tails(self, c_m: float, c_M: float) -> bool:
        """Initial-data compatibility: C_m < c_m/max phi1 and C_M > c_M/min phi1."""
        phi = self.eigpair.phi1
        return self.C_m < c_m / phi.max and self.C_M > c_M / phi.min

    @classmethod
    def from_tails(cls, eigpair: EigenPair, c_m: float, c_M: float, epsilon: float,
                   c_lower: float = 1.0, C_upper: float = 1.0, slack: float = 0.9) -> "Envelope":
        """Admissible constants compatible with measured tail constants c_m ≤ c_M."""
        lam = abs(eigpair.lambda1)
        phi = eigpair.phi1
        C_m = slack * min(lam / (c_lower * phi.max), c_m / phi.max)
        C_M = max(lam / (C_upper * phi.min), c_M / phi.min) / slack
        probe = cls.unchecked(C_m, C_M, 1.0, epsilon, eigpair, c_lower, C_upper)
        delta = probe.delta_cap()
        if not epsilon < delta:
            raise EnvelopeError(f"ε={epsilon} not below the largest admissible δ={delta:.4g}")
        return cls(C_m, C_M, delta, epsilon, eigpair, c_lower, C_upper)

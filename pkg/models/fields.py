"""Grid fields: box fields with an algebraic tail and periodic cell fields."""
import logging
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from config.config import TAIL_CONTINUITY_TOL, TAIL_SHELL_FRACTION
from models.errors import GridError, TailFitError
from models.grid import Grid

logger = logging.getLogger(__name__)


def _frozen(values: np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TailedField:
    """Samples on the box grid, extrapolated as background + A/|x|^(d+2 alpha) beyond the box."""
    values: np.ndarray
    grid: Grid
    alpha_tag: float
    tail_amp: float = 0.0
    background: float = 0.0
    density: bool = True

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        if self.values.shape != self.grid.shape:
            raise GridError(f"values shape {self.values.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            bad = np.argwhere(~np.isfinite(self.values))[0]
            raise TailFitError(f"non-finite field value at grid index {tuple(bad)}")
        if self.density and self.values.min() < 0.0:
            bad = np.unravel_index(int(np.argmin(self.values)), self.values.shape)
            raise TailFitError(f"negative density {self.values[bad]:.3e} at grid index {bad}")
        if not np.isfinite(self.tail_amp) or (self.density and self.tail_amp < 0.0):
            raise TailFitError(f"tail amplitude {self.tail_amp} must be finite and ≥ 0 for densities")

    # Constructors
    @classmethod
    def from_values(cls, values, grid: Grid, alpha: float, background: float = 0.0,
                    density: bool = True, strict: bool = False) -> "TailedField":
        amp = fit_tail_amplitude(np.asarray(values, dtype=float), grid, alpha, background, nonnegative=density)
        field = cls(values, grid, alpha, amp, background, density)
        defect = field.tail_defect
        if defect > TAIL_CONTINUITY_TOL:
            if strict:
                raise TailFitError(f"tail continuity defect {defect:.3f} > {TAIL_CONTINUITY_TOL}")
            logger.debug("tail continuity defect %.3f exceeds %.2f", defect, TAIL_CONTINUITY_TOL)
        return field

    @classmethod
    def from_function(cls, grid: Grid, alpha: float, fn: Callable[[np.ndarray], np.ndarray],
                      background: float = 0.0, density: bool = True) -> "TailedField":
        return cls.from_values(fn(grid.points()), grid, alpha, background, density)

    @classmethod
    def constant(cls, grid: Grid, alpha: float, value: float) -> "TailedField":
        return cls(np.full(grid.shape, float(value)), grid, alpha, 0.0, float(value), value >= 0.0)

    def with_values(self, values: np.ndarray) -> "TailedField":
        """Same grid and background, tail refitted."""
        return TailedField.from_values(values, self.grid, self.alpha_tag, self.background, self.density)

    def with_tail(self, tail_amp: float) -> "TailedField":
        return replace(self, tail_amp=float(tail_amp))

    # Properties
    @property
    def d(self) -> int:
        return self.grid.d

    @property
    def exponent(self) -> float:
        return self.grid.d + 2.0 * self.alpha_tag

    @property
    def sup(self) -> float:
        return float(self.values.max())

    @property
    def inf(self) -> float:
        return float(self.values.min())

    @property
    def tail_defect(self) -> float:
        """Relative mismatch between the outermost samples and the fitted tail at radius L."""
        if self.tail_amp <= 0.0:
            return 0.0
        r = self.grid.radius()
        shell = r >= self.grid.L - self.grid.h * (1.0 + 1e-9)
        model = self.tail_amp / r[shell] ** self.exponent
        observed = self.values[shell] - self.background
        return float(np.mean(np.abs(observed - model) / model))

    def tail_value(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            return self.background + self.tail_amp / r ** self.exponent

    def evaluate(self, x) -> np.ndarray:
        """Linear interpolation inside the box, tail model outside."""
        x = np.asarray(x, dtype=float)
        g = self.grid
        if self.d == 1:
            ax = np.append(g.axis(), g.L)
            vals = np.append(self.values, self.tail_value(g.L))
            inside = np.abs(x) <= g.L
            out = np.interp(np.clip(x, -g.L, g.L), ax, vals)
            return np.where(inside, out, self.tail_value(np.abs(x)))
        ax = g.axis()
        inside = np.all((x >= ax[0]) & (x <= ax[-1]), axis=-1)
        interp = RegularGridInterpolator((ax, ax), self.values, bounds_error=False, fill_value=None)
        out = interp(np.clip(x, ax[0], ax[-1]))
        return np.where(inside, out, self.tail_value(np.linalg.norm(x, axis=-1)))

    def mass(self) -> float:
        """Box integral plus the integral of the algebraic tail beyond radius L."""
        if self.background != 0.0:
            return float("inf")
        g = self.grid
        box = float(np.sum(self.values)) * g.h ** g.d
        sphere = 2.0 if g.d == 1 else 2.0 * np.pi
        tail = sphere * self.tail_amp * g.L ** (-2.0 * self.alpha_tag) / (2.0 * self.alpha_tag)
        return box + tail


def fit_tail_amplitude(values: np.ndarray, grid: Grid, alpha: float, background: float = 0.0,
                       nonnegative: bool = True) -> float:
    """Least-squares constant A of (values - background) |x|^(d+2 alpha) over the outer shell."""
    r = grid.radius()
    shell = (r >= (1.0 - TAIL_SHELL_FRACTION) * grid.L) & (r <= grid.L)
    if not shell.any():
        return 0.0
    p = grid.d + 2.0 * alpha
    products = (values[shell] - background) * r[shell] ** p
    amp = float(np.mean(products))
    return max(amp, 0.0) if nonnegative else amp


@dataclass(frozen=True)
class CellField:
    """Samples of a 1-periodic function on the cell grid (phi1, n_plus)."""
    values: np.ndarray
    d: int = 1

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        if not np.all(np.isfinite(self.values)):
            raise TailFitError("non-finite cell field")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def min(self) -> float:
        return float(self.values.min())

    @property
    def max(self) -> float:
        return float(self.values.max())

    def at(self, x) -> np.ndarray:
        """Periodic (bi)linear interpolation at arbitrary points."""
        x = np.asarray(x, dtype=float)
        n = self.n
        if self.d == 1:
            s = np.mod(x, 1.0) * n
            i0 = np.floor(s).astype(int) % n
            w = s - np.floor(s)
            return (1.0 - w) * self.values[i0] + w * self.values[(i0 + 1) % n]
        s = np.mod(x, 1.0) * n
        i0 = np.floor(s).astype(int) % n
        w = s - np.floor(s)
        i, j = i0[..., 0], i0[..., 1]
        wi, wj = w[..., 0], w[..., 1]
        v = self.values
        return ((1 - wi) * (1 - wj) * v[i, j] + wi * (1 - wj) * v[(i + 1) % n, j]
                + (1 - wi) * wj * v[i, (j + 1) % n] + wi * wj * v[(i + 1) % n, (j + 1) % n])

    def on_box(self, grid: Grid) -> np.ndarray:
        if grid.n_cell == self.n:
            return grid.cell_to_box(self.values)
        return self.at(grid.points())

    def rescaled(self, x, epsilon: float) -> np.ndarray:
        """phi_eps(x) = phi(|x|^(1/eps - 1) x)."""
        return self.at(rescale_point(x, epsilon, self.d))


def rescale_point(x, epsilon: float, d: int = 1) -> np.ndarray:
    """The long range map x -> |x|^(1/eps - 1) x."""
    x = np.asarray(x, dtype=float)
    r = np.abs(x) if d == 1 else np.linalg.norm(x, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(r > 0.0, r ** (1.0 / epsilon - 1.0), 0.0)
    return x * factor if d == 1 else x * factor[..., None]

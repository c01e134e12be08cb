from dataclasses import dataclass
from typing import Tuple

import numpy as np

from models.errors import GridError


@dataclass(frozen=True)
class Grid:
    """Uniform box grid on [-L, L)^d plus the periodic cell grid on [0, 1)^d."""
    d: int
    L: float
    n_box: int
    n_cell: int

    def __post_init__(self):
        if self.d not in (1, 2):
            raise GridError(f"dimension {self.d} not in {{1, 2}}", field_path="dimension")
        if self.n_box < 16 or self.n_box % 2:
            raise GridError(f"n_box={self.n_box} must be even and ≥ 16", field_path="grid.n_box")
        if self.L < 4.0:
            raise GridError(f"L={self.L} must be ≥ 4", field_path="grid.L")
        if self.n_cell < 1:
            raise GridError("n_cell must be positive", field_path="grid.n_cell")
        ratio = 2.0 * self.L * self.n_cell / self.n_box
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise GridError(
                f"box spacing {2 * self.L / self.n_box} is not a multiple of cell spacing 1/{self.n_cell}",
                field_path="grid",
            )

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n_box

    @property
    def cell_stride(self) -> int:
        """Cell points per box spacing."""
        return int(round(self.h * self.n_cell))

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n_box,) * self.d

    def axis(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.n_box)

    def points(self) -> np.ndarray:
        """Box nodes: shape (n,) in d=1, (n, n, 2) in d=2."""
        ax = self.axis()
        if self.d == 1:
            return ax
        xx, yy = np.meshgrid(ax, ax, indexing="ij")
        return np.stack([xx, yy], axis=-1)

    def radius(self) -> np.ndarray:
        pts = self.points()
        return np.abs(pts) if self.d == 1 else np.linalg.norm(pts, axis=-1)

    def cell_axis(self) -> np.ndarray:
        return np.arange(self.n_cell) / self.n_cell

    def cell_points(self) -> np.ndarray:
        ax = self.cell_axis()
        if self.d == 1:
            return ax
        xx, yy = np.meshgrid(ax, ax, indexing="ij")
        return np.stack([xx, yy], axis=-1)

    def cell_index(self) -> np.ndarray:
        """Index into the cell grid of each box node along one axis (x mod 1)."""
        j = np.arange(self.n_box)
        offset = int(round((-self.L % 1.0) * self.n_cell)) % self.n_cell
        return (offset + j * self.cell_stride) % self.n_cell

    def cell_to_box(self, cell_values: np.ndarray) -> np.ndarray:
        """Sample a periodic cell array on the box without interpolation."""
        idx = self.cell_index()
        if self.d == 1:
            return np.asarray(cell_values)[idx]
        return np.asarray(cell_values)[np.ix_(idx, idx)]


def plan_box(rate: float, T: float, h_target: float, n_cell: int, d: int = 1) -> Grid:
    """Box sized so the front stays in the inner half: L = 4 exp(rate T).

    The spacing is the largest multiple of 1/n_cell not above h_target, and
    n_box is rounded up to an even FFT-friendly length.
    """
    from scipy.fft import next_fast_len

    stride = max(1, int(np.floor(h_target * n_cell + 1e-12)))
    h = stride / n_cell
    L_min = max(4.0, 4.0 * float(np.exp(rate * T)))
    n_box = int(np.ceil(2.0 * L_min / h))
    n_box = next_fast_len(n_box + n_box % 2)
    while n_box % 2:
        n_box = next_fast_len(n_box + 1)
    return Grid(d, n_box * h / 2.0, n_box, n_cell)

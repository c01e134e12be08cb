"""Precomputed plans for applying the nonlocal operator to box fields.

Two backends:
  quadrature  d = 1, any symmetric periodic beta. Product-integration
              weights applied by FFT convolution, exterior handled through
              the field's background and algebraic tail.
  spectral    d = 1 or 2, constant beta only. Zero-padded FFT with the
              symbol c(d, alpha) beta |xi|^(2 alpha); in d = 1 the exterior
              tail is added back through the same tail integrals.
"""
import logging
from typing import Optional

import numpy as np
from scipy import fft as sfft

from config.config import DEFAULT_PAD_FACTOR, DT_SAFETY, PV_SPLIT_CELLS
from config.runtime_config import fft_workers
from models.errors import BackendError, KernelError
from models.fields import CellField, TailedField, rescale_point
from models.grid import Grid
from models.kernel import StableKernel, validate_kernel
from operators.weights import (
    exterior_integrals,
    near_coefficient,
    node_weights,
    symbol_constant,
    symmetric_stencil,
    total_weight,
)

logger = logging.getLogger(__name__)

BACKENDS = ("quadrature", "spectral")


class OperatorPlan:
    def __init__(self, kernel: StableKernel, grid: Grid, backend: str = "quadrature",
                 pad_factor: int = DEFAULT_PAD_FACTOR, split_cells: int = PV_SPLIT_CELLS):
        if backend not in BACKENDS:
            raise BackendError(f"unknown backend {backend!r}; choose one of {BACKENDS}")
        if kernel.d != grid.d:
            raise BackendError(f"kernel dimension {kernel.d} != grid dimension {grid.d}")
        if not 1 <= split_cells <= 4:
            raise BackendError(f"principal-value split must lie in [h, 4h], got {split_cells}h")
        if pad_factor < 1:
            raise BackendError("pad_factor must be ≥ 1")
        report = validate_kernel(kernel)
        if not report.passed:
            raise KernelError("; ".join(report.messages))

        self.kernel = kernel
        self.grid = grid
        self.backend = backend
        self.pad_factor = int(pad_factor)
        self.pv_split_radius = split_cells * grid.h
        self.alpha = kernel.alpha
        self.beta = kernel.beta_x(grid.points())
        self.S = total_weight(kernel.alpha, grid.h, split_cells)
        self.dt_max = DT_SAFETY / (kernel.B_upper * self.S)

        if grid.d == 1:
            self.T, self.E_cont, self.tail_remainder = exterior_integrals(
                grid.axis(), grid.L, kernel.alpha, self.pv_split_radius
            )
        else:
            self.T = self.E_cont = None
            self.tail_remainder = 0.0

        if backend == "quadrature":
            self._build_quadrature(split_cells)
        else:
            self._build_spectral()
        logger.debug("operator plan: backend=%s d=%d n_box=%d h=%.4g S=%.4g",
                     backend, grid.d, grid.n_box, grid.h, self.S)

    # Setup
    def _build_quadrature(self, split_cells: int):
        if self.grid.d != 1:
            raise BackendError("quadrature backend supports d=1 only; use the spectral backend")
        N = self.grid.n_box
        W = node_weights(self.alpha, self.grid.h, N + 2, split_cells)[:N]
        stencil = symmetric_stencil(W)
        if stencil.min() < 0.0:
            k = int(np.argmin(stencil)) - (N - 1)
            raise BackendError(f"negative off-diagonal weight {stencil.min():.3e} at offset {k}")
        self.weights = stencil
        self.near_weight = near_coefficient(self.alpha, self.pv_split_radius) / self.grid.h ** 2
        self._conv_len = sfft.next_fast_len(3 * N - 2, real=True)
        self._W_hat = sfft.rfft(stencil, self._conv_len)
        self.inbox_mass = self._convolve(np.ones(N))
        self.E = self.S - self.inbox_mass

    def _build_spectral(self):
        if not self.kernel.is_constant:
            raise BackendError("spectral backend requires constant beta; use the quadrature backend")
        g = self.grid
        self._pad_len = sfft.next_fast_len(self.pad_factor * g.n_box, real=True)
        c = symbol_constant(g.d, self.alpha) * self.kernel.constant_value
        last = 2.0 * np.pi * sfft.rfftfreq(self._pad_len, g.h)
        if g.d == 1:
            xi = np.abs(last)
        else:
            first = 2.0 * np.pi * sfft.fftfreq(self._pad_len, g.h)
            xi = np.sqrt(first[:, None] ** 2 + last[None, :] ** 2)
        self.symbol = c * xi ** (2.0 * self.alpha)

    # Kernels of the computation
    def _convolve(self, values: np.ndarray) -> np.ndarray:
        N = values.shape[0]
        spec = sfft.rfft(values, self._conv_len, workers=fft_workers()) * self._W_hat
        return sfft.irfft(spec, self._conv_len, workers=fft_workers())[N - 1: 2 * N - 1]

    def _spectral(self, values: np.ndarray, multiplier: np.ndarray) -> np.ndarray:
        shape = (self._pad_len,) * self.grid.d
        spec = sfft.rfftn(values, s=shape, workers=fft_workers())
        out = sfft.irfftn(spec * multiplier, s=shape, workers=fft_workers())
        return out[tuple(slice(0, self.grid.n_box) for _ in range(self.grid.d))]

    def exterior(self, tail_amp: float) -> np.ndarray:
        """beta(x) A T(x): the part of the operator coming from the algebraic tail beyond the box."""
        if self.T is None or tail_amp == 0.0:
            return np.zeros(self.grid.shape)
        return self.beta * tail_amp * self.T

    def ghost_tail(self, tail_amp: float) -> np.ndarray:
        """Near-stencil weight times the tail part of the ghost neighbours at x = L and x = -L - h.

        Only the two outermost nodes have a second-difference neighbour outside the box.
        """
        out = np.zeros(self.grid.shape)
        if self.backend != "quadrature" or tail_amp == 0.0:
            return out
        L, h, p = self.grid.L, self.grid.h, 1.0 + 2.0 * self.alpha
        out[0] = self.near_weight * tail_amp * (L + h) ** (-p)
        out[-1] = self.near_weight * tail_amp * L ** (-p)
        return out

    def apply_values(self, values: np.ndarray, tail_amp: float = 0.0, background: float = 0.0) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape != self.grid.shape:
            raise BackendError(f"values shape {values.shape} does not match plan grid {self.grid.shape}")
        if self.backend == "quadrature":
            inner = self.S * values - self._convolve(values) - background * self.E - self.ghost_tail(tail_amp)
            return self.beta * inner - self.exterior(tail_amp)
        return self._spectral(values - background, self.symbol) - self.exterior(tail_amp)

    def resolve(self, rhs: np.ndarray, dt: float) -> np.ndarray:
        """(I + dt L)^(-1) rhs for fields vanishing outside the box (spectral backend)."""
        if self.backend != "spectral":
            raise BackendError("implicit solves need the spectral backend")
        return self._spectral(np.asarray(rhs, dtype=float), 1.0 / (1.0 + dt * self.symbol))

    def describe(self) -> dict:
        return {
            "backend": self.backend,
            "d": self.grid.d,
            "L": self.grid.L,
            "n_box": self.grid.n_box,
            "h": self.grid.h,
            "pv_split_radius": self.pv_split_radius,
            "pad_factor": self.pad_factor,
            "dt_max": self.dt_max,
        }


def build_plan(kernel: StableKernel, grid: Grid, backend: str = "quadrature",
               pad_factor: int = DEFAULT_PAD_FACTOR) -> OperatorPlan:
    return OperatorPlan(kernel, grid, backend, pad_factor)


def _check_grid(plan: OperatorPlan, f: TailedField):
    if f.grid != plan.grid:
        raise BackendError(f"field grid {f.grid} does not match plan grid {plan.grid}")


def apply_operator(plan: OperatorPlan, f: TailedField) -> TailedField:
    """L f on the box; the result carries a refitted tail and no background."""
    _check_grid(plan, f)
    out = plan.apply_values(f.values, f.tail_amp, f.background)
    return TailedField.from_values(out, plan.grid, plan.alpha, density=False)


def apply_bilinear(plan: OperatorPlan, f: TailedField, g: CellField) -> TailedField:
    """K~[f, g] = PV int (f(x+h) - f(x)) (g(x+h) - g(x)) beta |h|^(-d-2 alpha) dh with g periodic.

    Exterior values of g are replaced by its cell mean, which makes
    K~[f, g] = f L g + g L f - L(f g) hold exactly on the grid.
    """
    _check_grid(plan, f)
    gb = g.on_box(plan.grid)
    g_mean = float(np.mean(g.values))
    fv = f.values
    if plan.backend == "quadrature":
        conv = plan._convolve
        box = (fv * gb * (plan.S - plan.E) - fv * conv(gb) - gb * conv(fv) + conv(fv * gb))
        tail = f.tail_amp * (plan.T if plan.T is not None else 0.0) + plan.ghost_tail(f.tail_amp)
        ext = (gb - g_mean) * ((fv - f.background) * plan.E - tail)
        out = plan.beta * (box + ext)
    else:
        Lf = plan.apply_values(fv, f.tail_amp, f.background)
        Lg = plan.apply_values(gb, 0.0, g_mean)
        Lfg = plan.apply_values(fv * gb, f.tail_amp * g_mean, f.background * g_mean)
        out = fv * Lg + gb * Lf - Lfg
    return TailedField.from_values(out, plan.grid, plan.alpha, density=False)


def apply_rescaled_operator(plan: OperatorPlan, field: TailedField, epsilon: float, x,
                            t: Optional[float] = None) -> np.ndarray:
    """L_eps applied to the rescaled field at x: (L n)(|x|^(1/eps - 1) x).

    `field` is the unscaled snapshot at time t/eps; `t` is carried for the log only.
    """
    if not 0.0 < epsilon <= 1.0:
        raise BackendError(f"epsilon={epsilon} must lie in (0, 1]")
    y = rescale_point(x, epsilon, plan.grid.d)
    r = np.abs(y) if plan.grid.d == 1 else np.linalg.norm(y, axis=-1)
    if np.any(r > plan.grid.L):
        raise BackendError(
            f"mapped point at radius {float(np.max(r)):.4g} is outside the box L={plan.grid.L}; "
            "use a larger L or a larger epsilon"
        )
    Lf = apply_operator(plan, field)
    logger.debug("rescaled operator at t=%s, epsilon=%s, max |y|=%.4g", t, epsilon, float(np.max(r)))
    return Lf.evaluate(y)

"""The operator on the periodic cell [0, 1)^d, used by the eigensolver and the steady state."""
import logging
from typing import Callable

import numpy as np
from scipy import fft as sfft
from scipy.linalg import circulant, lu_factor, lu_solve
from scipy.sparse.linalg import LinearOperator, gmres

from config.config import DENSE_CAP, PERIODIC_IMAGES, PV_SPLIT_CELLS
from config.runtime_config import fft_workers
from models.errors import BackendError, KernelError
from models.kernel import StableKernel, validate_kernel
from operators.weights import periodized_weights, symbol_constant

logger = logging.getLogger(__name__)


class CellOperator:
    """L_beta on the cell grid with n points per axis.

    quadrature (d = 1): circulant from periodized node weights, scaled row-wise by beta(x).
    spectral (constant beta): c(d, alpha) beta |2 pi k|^(2 alpha) on the torus.
    """

    def __init__(self, kernel: StableKernel, n: int, backend: str = "auto"):
        if backend == "auto":
            backend = "quadrature" if kernel.d == 1 else "spectral"
        if backend not in ("quadrature", "spectral"):
            raise BackendError(f"unknown backend {backend!r}")
        report = validate_kernel(kernel)
        if not report.passed:
            raise KernelError("; ".join(report.messages))
        self.kernel = kernel
        self.n = int(n)
        self.d = kernel.d
        self.backend = backend
        self.shape = (self.n,) * self.d
        self.size = self.n ** self.d
        self.points = self._points()
        self.beta = kernel.beta_x(self.points)

        if backend == "quadrature":
            if self.d != 1:
                raise BackendError("quadrature cell operator supports d=1 only")
            w = periodized_weights(kernel.alpha, self.n, PV_SPLIT_CELLS, PERIODIC_IMAGES)
            column = -w
            column[0] = w.sum()
            self.column = column
            self._column_hat = sfft.rfft(column)
        else:
            if not kernel.is_constant:
                raise BackendError("spectral cell operator requires constant beta")
            k = 2.0 * np.pi * sfft.fftfreq(self.n, 1.0 / self.n)
            grids = np.meshgrid(*([k] * self.d), indexing="ij")
            xi = np.sqrt(sum(g ** 2 for g in grids))
            self.symbol_unit = symbol_constant(self.d, kernel.alpha) * xi ** (2.0 * kernel.alpha)

    def _points(self) -> np.ndarray:
        ax = np.arange(self.n) / self.n
        if self.d == 1:
            return ax
        xx, yy = np.meshgrid(ax, ax, indexing="ij")
        return np.stack([xx, yy], axis=-1)

    def apply_unweighted(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float).reshape(self.shape)
        if self.backend == "quadrature":
            return sfft.irfft(sfft.rfft(f) * self._column_hat, self.n, workers=fft_workers())
        return np.real(sfft.ifftn(sfft.fftn(f, workers=fft_workers()) * self.symbol_unit, workers=fft_workers()))

    def apply(self, f: np.ndarray) -> np.ndarray:
        """Matrix-free L_beta f."""
        return self.beta * self.apply_unweighted(f)

    def dense_unweighted(self) -> np.ndarray:
        if self.size > DENSE_CAP:
            raise BackendError(f"dense cell matrix of size {self.size} above cap {DENSE_CAP}")
        if self.backend == "quadrature":
            return circulant(self.column)
        eye = np.eye(self.size).reshape((self.size,) + self.shape)
        axes = tuple(range(1, self.d + 1))
        cols = np.real(sfft.ifftn(sfft.fftn(eye, axes=axes) * self.symbol_unit, axes=axes))
        A = cols.reshape(self.size, self.size).T
        return 0.5 * (A + A.T)

    def dense(self) -> np.ndarray:
        return self.beta.reshape(-1)[:, None] * self.dense_unweighted()

    def resolvent(self, dt: float) -> Callable[[np.ndarray], np.ndarray]:
        """Solver for (I + dt L_beta) u = r."""
        if self.backend == "spectral":
            multiplier = 1.0 / (1.0 + dt * self.kernel.constant_value * self.symbol_unit)

            def solve_fft(r):
                return np.real(sfft.ifftn(sfft.fftn(np.reshape(r, self.shape)) * multiplier))

            return solve_fft
        if self.size <= DENSE_CAP:
            lu = lu_factor(np.eye(self.size) + dt * self.dense())

            def solve_lu(r):
                return lu_solve(lu, np.reshape(r, -1)).reshape(self.shape)

            return solve_lu

        op = LinearOperator((self.size, self.size), matvec=lambda v: v + dt * self.apply(v).reshape(-1))

        def solve_krylov(r):
            u, info = gmres(op, np.reshape(r, -1), rtol=1e-13, atol=0.0, restart=100, maxiter=200)
            if info != 0:
                raise BackendError(f"resolvent GMRES did not converge (info={info})")
            return u.reshape(self.shape)

        return solve_krylov

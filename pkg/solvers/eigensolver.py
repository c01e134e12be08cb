"""Principal eigenpair of L - mu on the periodic cell."""
import logging
from typing import Callable, Tuple, Union

import numpy as np
from scipy import fft as sfft
from scipy.linalg import eigh, lu_factor, lu_solve
from scipy.sparse.linalg import LinearOperator, gmres

from config.config import DENSE_CAP, EIGEN_MAX_ITER, EIGEN_STAGNATION, EIGEN_TOL
from models.eigenpair import EigenPair
from models.errors import EigenSolverError, NoInvasionError, ScenarioError
from models.fields import CellField
from models.kernel import StableKernel
from models.media import PeriodicProfile
from operators.cell import CellOperator

logger = logging.getLogger(__name__)


def principal_eigenpair(kernel: StableKernel, mu: PeriodicProfile, cell_n: int = 128, tol: float = EIGEN_TOL,
                        method: str = "inverse", backend: str = "auto") -> EigenPair:
    """Smallest eigenvalue of L - mu and its positive eigenvector, phi1 normalized to sup 1."""
    if cell_n < 32:
        raise ScenarioError(f"cell_n={cell_n} must be ≥ 32", field_path="eigen.cell_n")
    if tol < 1e-12:
        raise ScenarioError(f"tol={tol} must be ≥ 1e-12", field_path="eigen.tol")
    op = CellOperator(kernel, cell_n, backend)
    mu_cell = np.asarray(mu(op.points), dtype=float)
    if method == "dense":
        return dense_eigenpair(op, mu_cell, tol)
    if method != "inverse":
        raise ScenarioError(f"unknown eigen method {method!r}", field_path="eigen.method")
    return _inverse_iteration(op, mu_cell, tol)


def cell_residual(op: CellOperator, mu_cell: np.ndarray, lam: float, phi: np.ndarray) -> float:
    """sup |L phi - mu phi - lam phi| with L applied matrix-free."""
    phi = np.reshape(phi, op.shape)
    return float(np.max(np.abs(op.apply(phi) - mu_cell * phi - lam * phi)))


def _finish(op: CellOperator, mu_cell: np.ndarray, lam: float, phi: np.ndarray, tol: float,
            method: str) -> EigenPair:
    phi = np.reshape(phi, op.shape)
    phi = phi / phi.flat[int(np.argmax(np.abs(phi)))]
    residual = cell_residual(op, mu_cell, lam, phi)
    logger.info("λ1=%.12g residual=%.3e (cell_n=%d, %s)", lam, residual, op.n, method)
    return EigenPair(float(lam), CellField(phi, op.d), residual, tol, method)


def dense_eigenpair(op: CellOperator, mu_cell: np.ndarray, tol: float = EIGEN_TOL) -> EigenPair:
    """Reference solve through the symmetrized matrix D^(1/2) A D^(1/2) - diag(mu), D = diag(beta)."""
    root = np.sqrt(np.reshape(op.beta, -1))
    sym = root[:, None] * op.dense_unweighted() * root[None, :]
    sym[np.diag_indices_from(sym)] -= np.reshape(mu_cell, -1)
    values, vectors = eigh(sym, subset_by_index=[0, 0])
    phi = root * vectors[:, 0]
    return _finish(op, mu_cell, float(values[0]), phi, tol, "dense")


def _shifted_solver(op: CellOperator, mu_cell: np.ndarray, sigma: float) -> Callable[[np.ndarray], np.ndarray]:
    mu_flat = np.reshape(mu_cell, -1)
    if op.size <= DENSE_CAP:
        matrix = op.dense()
        matrix[np.diag_indices_from(matrix)] -= mu_flat + sigma
        lu = lu_factor(matrix)
        return lambda v: lu_solve(lu, v)

    def matvec(v):
        return np.reshape(op.apply(v), -1) - (mu_flat + sigma) * v

    # Fourier preconditioner built from the mean coefficients
    beta_mean = float(np.mean(op.beta))
    if op.backend == "spectral":
        symbol = beta_mean * op.symbol_unit
    else:
        symbol = beta_mean * np.real(sfft.fft(op.column))
    shift = float(np.mean(mu_flat)) + sigma

    def precondition(v):
        spec = sfft.fftn(np.reshape(v, op.shape)) / (symbol - shift)
        return np.reshape(np.real(sfft.ifftn(spec)), -1)

    A = LinearOperator((op.size, op.size), matvec=matvec)
    M = LinearOperator((op.size, op.size), matvec=precondition)

    def solve(v):
        x, info = gmres(A, v, M=M, rtol=1e-14, atol=0.0, restart=60, maxiter=100)
        if info < 0:
            raise EigenSolverError(f"inner GMRES breakdown (info={info})")
        return x

    return solve


def _inverse_iteration(op: CellOperator, mu_cell: np.ndarray, tol: float) -> EigenPair:
    sigma = -float(np.max(mu_cell)) - 1.0
    solve = _shifted_solver(op, mu_cell, sigma)
    mu_flat = np.reshape(mu_cell, -1)

    x = np.ones(op.size)
    history = []
    best, since_best = np.inf, 0
    for iteration in range(1, EIGEN_MAX_ITER + 1):
        y = solve(x)
        y = y / y[int(np.argmax(np.abs(y)))]
        My = np.reshape(op.apply(y), -1) - mu_flat * y
        lam = float(np.dot(y, My) / np.dot(y, y))
        residual = float(np.max(np.abs(My - lam * y)))
        history.append(residual)
        if residual <= tol * (1.0 + abs(lam)):
            logger.debug("inverse iteration converged after %d steps", iteration)
            return _finish(op, mu_cell, lam, y, tol, "inverse")
        if residual < best:
            best, since_best = residual, 0
        else:
            since_best += 1
            if since_best >= EIGEN_STAGNATION:
                raise EigenSolverError(
                    f"inverse iteration stagnated at residual {best:.3e} > tol {tol:.1e}", history
                )
        x = y
    raise EigenSolverError(f"no convergence in {EIGEN_MAX_ITER} iterations", history)


def check_H3(pair: EigenPair) -> Tuple[bool, float]:
    """(lambda1 < 0, |lambda1|)."""
    return pair.lambda1 < 0.0, abs(pair.lambda1)


def predicted_exponent(pair: Union[EigenPair, float], d: int, alpha: float) -> float:
    """Predicted growth rate |lambda1|/(d + 2 alpha) of log(front radius)."""
    lam = pair.lambda1 if isinstance(pair, EigenPair) else float(pair)
    if lam >= 0.0:
        raise NoInvasionError(f"no invasion predicted (λ1={lam:.6g} ≥ 0)")
    return abs(lam) / (d + 2.0 * alpha)

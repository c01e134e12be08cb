"""Product-integration weights for the principal-value operator in d = 1.

For a symmetric kernel beta/|h|^(1+2 alpha) the operator is written as

    L f(x_i) = sum_k W_k (f(x_i) - f(x_i + k h))

with W_{+-1} carrying the second-difference near part (|h| < delta) and the
far part obtained by integrating the kernel exactly against local cubic
Lagrange interpolants of f on each grid interval beyond delta.
"""
import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gamma, zeta

from config.config import GAUSS_ORDER, PV_SPLIT_CELLS, TAIL_GAUSS_ORDER, TAIL_REACH


def symbol_constant(d: int, alpha: float) -> float:
    """c(d, alpha): the symbol of the beta = 1 operator is c |xi|^(2 alpha)."""
    return float(np.pi ** (d / 2.0) * gamma(1.0 - alpha) / (alpha * 4.0 ** alpha * gamma(d / 2.0 + alpha)))


def near_coefficient(alpha: float, delta: float) -> float:
    """PV integral of f over |s| < delta is f''(x) times this."""
    return delta ** (2.0 - 2.0 * alpha) / (2.0 - 2.0 * alpha)


def total_weight(alpha: float, h: float, split_cells: int = PV_SPLIT_CELLS) -> float:
    """S = sum over all k != 0 of W_k (near part plus the kernel mass beyond delta)."""
    delta = split_cells * h
    return 2.0 * near_coefficient(alpha, delta) / h ** 2 + delta ** (-2.0 * alpha) / alpha


def _lagrange_cubic(tau: np.ndarray) -> np.ndarray:
    """Cubic Lagrange basis on nodes (-1, 0, 1, 2), rows in that order."""
    return np.stack([
        -tau * (tau - 1.0) * (tau - 2.0) / 6.0,
        (tau + 1.0) * (tau - 1.0) * (tau - 2.0) / 2.0,
        -(tau + 1.0) * tau * (tau - 2.0) / 2.0,
        (tau + 1.0) * tau * (tau - 1.0) / 6.0,
    ])


def node_weights(alpha: float, h: float, K: int, split_cells: int = PV_SPLIT_CELLS) -> np.ndarray:
    """W_k for k = 0..K (W_0 = 0); the full stencil is symmetric, W_{-k} = W_k."""
    nodes, gw = leggauss(GAUSS_ORDER)
    tau = 0.5 * (nodes + 1.0)
    gw = 0.5 * gw
    basis = _lagrange_cubic(tau)  # (4, G)

    m = np.arange(split_cells, K + 2, dtype=float)  # intervals [m h, (m+1) h]
    kern = (m[:, None] + tau[None, :]) ** (-1.0 - 2.0 * alpha)  # (M, G)
    contrib = (kern * gw[None, :]) @ basis.T  # (M, 4): integrals against l_{-1}, l_0, l_1, l_2
    contrib *= h ** (-2.0 * alpha)

    W = np.zeros(K + 4)
    mi = m.astype(int)
    for q in range(4):
        np.add.at(W, mi + q - 1, contrib[:, q])
    W = W[: K + 1]
    W[0] = 0.0
    W[1] += near_coefficient(alpha, split_cells * h) / h ** 2
    return W


def symmetric_stencil(W: np.ndarray) -> np.ndarray:
    """Full stencil k = -K..K from the one-sided weights."""
    return np.concatenate([W[:0:-1], W])


def periodized_weights(alpha: float, n: int, split_cells: int = PV_SPLIT_CELLS, images: int = 64) -> np.ndarray:
    """Weights on the periodic cell [0, 1) with n points: w[j] = sum of W_k over k = j mod n, k != 0.

    Node weights are summed exactly over `images` periods; beyond that the
    asymptotic form h^(-2a) |k|^(-1-2a) is summed with the Hurwitz zeta function.
    """
    h = 1.0 / n
    K = images * n
    W = node_weights(alpha, h, K, split_cells)
    w = np.zeros(n)
    k = np.arange(1, K + 1)
    np.add.at(w, k % n, W[1:])
    np.add.at(w, (-k) % n, W[1:])

    s = 1.0 + 2.0 * alpha
    scale = h ** (-2.0 * alpha) * n ** (-s)
    for j in range(n):
        for jj in (j, (n - j) % n):
            q0 = (K - jj) // n + 1
            w[j] += scale * float(zeta(s, jj / n + q0))
    w[0] = 0.0
    return 0.5 * (w + w[(-np.arange(n)) % n])


def exterior_integrals(x: np.ndarray, L: float, alpha: float, delta: float):
    """Exterior integrals for box targets x in [-L, L).

    Returns (T, E, remainder) where
      T[i] = integral over |y| > L, |y - x_i| >= delta, |y| <= reach L of |y|^(-1-2a) |y - x_i|^(-1-2a)
      E[i] = integral over |y| > L, |y - x_i| >= delta of |y - x_i|^(-1-2a)  (closed form)
      remainder bounds the tail integral beyond reach L per unit amplitude.
    The tail exponent in d = 1 is p = 1 + 2a.
    """
    p = 1.0 + 2.0 * alpha
    s_exp = 1.0 + 2.0 * alpha
    nodes, gw = leggauss(TAIL_GAUSS_ORDER)
    reach = TAIL_REACH * L

    def side(x_signed):
        # distance r = y - x for y > L with x_signed as the target
        r0 = np.maximum(L - x_signed, delta)
        r1 = reach - x_signed
        a, b = np.log(r0), np.log(r1)
        s = 0.5 * (b - a)[:, None] * nodes[None, :] + 0.5 * (b + a)[:, None]
        r = np.exp(s)
        integrand = (x_signed[:, None] + r) ** (-p) * r ** (1.0 - s_exp)
        T = 0.5 * (b - a) * (integrand @ gw)
        E = r0 ** (-2.0 * alpha) / (2.0 * alpha)
        return T, E

    x = np.asarray(x, dtype=float)
    T_right, E_right = side(x)
    T_left, E_left = side(-x)
    remainder = 2.0 * reach ** (-p) * (reach - L) ** (-2.0 * alpha) / (2.0 * alpha)
    return T_right + T_left, E_right + E_left, remainder

"""Chebyshev series on [0, 1]: nodes, evaluation, differentiation.

All solver state in this package stores function coefficients in the
Chebyshev basis T_k(2x - 1) on [0, 1].  Evaluation uses the Clenshaw
recurrence and accepts real or complex points of any array shape.
"""

import numpy as np

__all__ = [
    "cheb_nodes",
    "clenshaw",
    "deriv_coeffs",
    "tail_estimate",
    "growth_factor",
]


def cheb_nodes(n):
    """Chebyshev-Gauss nodes (roots of T_n) mapped to (0, 1), ascending."""
    k = np.arange(n)
    return 0.5 * (1.0 - np.cos(np.pi * (2 * k + 1) / (2 * n)))


def clenshaw(coeffs, x):
    """Evaluate sum_k c_k T_k(2x - 1) at real or complex x.

    Works on scalars and arrays; the result dtype follows x and the
    coefficients.
    """
    x = np.asarray(x)
    t = 2.0 * x - 1.0
    b1 = np.zeros_like(t)
    b2 = np.zeros_like(t)
    two_t = 2.0 * t
    for c in coeffs[:0:-1]:
        b1, b2 = two_t * b1 - b2 + c, b1
    return t * b1 - b2 + coeffs[0]


def deriv_coeffs(coeffs):
    """Coefficients of the derivative (w.r.t. x on [0, 1]) of a series."""
    n = len(coeffs)
    if n <= 1:
        return np.zeros(1)
    d = np.zeros(n - 1)
    # standard backward recurrence for d/dt, then scale by dt/dx = 2
    w = np.zeros(n + 1)
    for k in range(n - 1, 0, -1):
        w[k - 1] = w[k + 1] + 2 * k * coeffs[k]
    d[:] = w[: n - 1]
    d[0] *= 0.5
    return 2.0 * d


def growth_factor(z, degree):
    """|T_degree| growth proxy at complex z: |rho|^degree with rho the
    Bernstein-ellipse parameter of the point 2z - 1."""
    t = 2.0 * np.asarray(z, dtype=complex) - 1.0
    rho = np.abs(t + np.sqrt(t * t - 1.0))
    rho = np.maximum(rho, 1.0 / np.maximum(rho, 1e-300))
    return rho ** degree


def tail_estimate(coeffs, z, tail=4):
    """Estimate the truncation error of a series at complex z.

    Uses the magnitude of the trailing `tail` coefficients amplified by
    the Bernstein growth factor at z.  Crude but monotone in |z|; used
    to flag evaluations outside the trustworthy ellipse.
    """
    n = len(coeffs)
    tail = min(tail, n)
    c_tail = float(np.max(np.abs(coeffs[n - tail:])))
    return c_tail * growth_factor(z, n - 1)

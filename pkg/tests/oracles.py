"""Brute-force reference implementations used only by the tests."""
import numpy as np


def kernel_weight(kernel_fn, h, u):
    return kernel_fn(u / h) / h


def dense_wls(y, A, t, h, kernel_fn):
    """Minimize the kernel-weighted objective over (a, b) via the full 2d x 2d normal equations."""
    n, d = y.shape
    lhs = np.zeros((2 * d, 2 * d))
    rhs = np.zeros(2 * d)
    for i in range(n):
        ti = (i + 1) / n
        w = kernel_weight(kernel_fn, h, ti - t)
        Z = np.hstack([A, (ti - t) * A])
        lhs += w * Z.T @ Z
        rhs += w * Z.T @ y[i]
    sol = np.linalg.solve(lhs, rhs)
    return sol[:d], sol[d:]


def loop_moment(y, t, h, k, kernel_fn):
    n = len(y)
    acc = np.zeros(np.shape(y[0]))
    for i in range(n):
        ti = (i + 1) / n
        acc = acc + (ti - t) ** k * kernel_weight(kernel_fn, h, ti - t) * y[i]
    return acc / n


def epanechnikov(u):
    return 0.75 * (1 - u * u) if abs(u) <= 1 else 0.0


def textbook_kernel(family):
    """Kernel formulas written out directly; the truncated Gaussian is shifted to vanish at +-4."""
    from scipy import stats

    if family == "epanechnikov":
        return epanechnikov
    if family == "quartic":
        return lambda u: 15 / 16 * (1 - u * u) ** 2 if abs(u) <= 1 else 0.0
    if family == "triweight":
        return lambda u: 35 / 32 * (1 - u * u) ** 3 if abs(u) <= 1 else 0.0
    c = 4.0
    mass = (stats.norm.cdf(c) - stats.norm.cdf(-c)) - 2 * c * stats.norm.pdf(c)
    return lambda u: (stats.norm.pdf(u) - stats.norm.pdf(c)) / mass if abs(u) <= c else 0.0

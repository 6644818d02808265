"""Monte Carlo summaries with standard errors."""

import numpy as np


def mean_se(x, axis=0):
    """Sample mean and its standard error along ``axis``."""
    x = np.asarray(x, dtype=float)
    n = x.shape[axis]
    mean = x.mean(axis=axis)
    if n < 2:
        return mean, np.full_like(mean, np.inf)
    return mean, x.std(axis=axis, ddof=1) / np.sqrt(n)


def jackknife_cov(samples, chunk: int = 2048):
    """Unbiased sample covariance and its delete-one jackknife standard errors.

    ``samples`` has shape ``(n, d)``.  Returns ``(cov, se)``, both ``(d, d)``.
    Leave-one-out covariances are formed from running sums in chunks, so
    memory stays at ``chunk * d * d``.
    """
    x = np.asarray(samples, dtype=float)
    n, d = x.shape
    if n < 3:
        raise ValueError("jackknife covariance needs at least 3 samples")
    total = x.sum(axis=0)
    cross = x.T @ x
    cov = (cross - np.outer(total, total) / n) / (n - 1)

    acc = np.zeros((d, d))
    acc2 = np.zeros((d, d))
    for start in range(0, n, chunk):
        xk = x[start : start + chunk]
        rest = total[None, :] - xk  # sums without sample k
        loo = (
            cross[None] - xk[:, :, None] * xk[:, None, :] - rest[:, :, None] * rest[:, None, :] / (n - 1)
        ) / (n - 2)
        acc += loo.sum(axis=0)
        acc2 += (loo**2).sum(axis=0)
    loo_mean = acc / n
    var = (n - 1) / n * (acc2 - n * loo_mean**2)
    return cov, np.sqrt(np.clip(var, 0.0, None))

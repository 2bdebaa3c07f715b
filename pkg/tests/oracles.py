"""Independent reference implementations used to cross-check the library.

Nothing here shares code paths with the implementations under test: gradients
come from central finite differences, LASSO solutions from multi-resolution
dense grid search over coefficient space, and likelihoods from exhaustive
state enumeration (weaksup.genmodel.brute_force_joint).
"""

import numpy as np


def finite_difference(f, x0, step=1e-5):
    """Central finite-difference gradient of a scalar function of a vector."""
    x0 = np.asarray(x0, dtype=np.float64)
    grad = np.zeros_like(x0)
    for i in range(x0.size):
        up, down = x0.copy(), x0.copy()
        up.flat[i] += step
        down.flat[i] -= step
        grad.flat[i] = (f(up) - f(down)) / (2.0 * step)
    return grad


def rel_error(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    scale = max(np.abs(a).max(), np.abs(b).max(), 1e-12)
    return float(np.abs(a - b).max() / scale)


def lasso_grid_search(x, y, lam, span=2.0, final_step=1e-3):
    """Global minimizer of (1/2N)||X t - y||^2 + lam ||t||_1 by dense grid
    search, refined multi-resolution down to `final_step` per coordinate.

    Only usable for small P (cost grows as 41^P per level).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = x.shape

    def objective(thetas):  # thetas: G x P
        r = thetas @ x.T - y[None, :]
        return (r * r).sum(axis=1) / (2.0 * n) + lam * np.abs(thetas).sum(axis=1)

    center = np.zeros(p)
    step = span / 20.0
    while True:
        axes = [center[j] + step * np.arange(-20, 21) for j in range(p)]
        grids = np.meshgrid(*axes, indexing="ij")
        thetas = np.stack([g.ravel() for g in grids], axis=1)
        center = thetas[int(np.argmin(objective(thetas)))]
        if step <= final_step:
            return center
        step = max(step / 10.0, final_step)

"""Brute-force references for the test suite.

Independent of the package: plain loops for the order statistics, a dense
time grid for the integrated path and a dense grid of corners for the sets.
"""
import math

import numpy as np


def random_instance(rng, max_n=24, max_b=8, max_k=3, min_gap=2e-4):
    """Positive bivariate data whose selected first-angle coordinates are well separated."""
    while True:
        b = int(rng.integers(2, max_b + 1))
        k = int(rng.integers(1, min(max_k, b - 1) + 1))
        J = int(rng.integers(1, max_n // b + 1))
        n = J * b
        x = rng.pareto(1.5, size=(n, 2)) + rng.uniform(0.01, 0.1, size=(n, 2))
        sel = select(x, b, k)
        firsts = sorted([0.0, 1.0] + [x[i, 0] / math.hypot(*x[i]) for blk in sel for i in blk])
        if min(np.diff(firsts)) >= min_gap:
            return x, b, k


def select(x, b, k):
    """Per block, the positions of the k largest radii (ties to the smaller position)."""
    out = []
    for j in range(len(x) // b):
        idx = list(range(j * b, (j + 1) * b))
        idx.sort(key=lambda i: (-math.hypot(*x[i]), i))
        out.append(idx[:k])
    return out


def statistics(x, b, k, t_points=10**6, corners=10**4):
    n = len(x)
    J = n // b
    h = b / (2 * n)
    sel = select(x, b, k)
    theta1 = [[x[i, 0] / math.hypot(*x[i]) for i in blk] for blk in sel]
    ys = np.linspace(0.0, 1.0, corners)
    # block measures for every corner, then drop corners with identical membership
    counts = np.array([[sum(th <= y for th in blk) for y in ys] for blk in theta1], dtype=np.int64)  # (J, C)
    counts = np.unique(counts, axis=1)
    L = n * math.ceil(t_points / n)
    per_block = L // J
    i = np.arange(1, L + 1, dtype=np.int64)
    ks = cm = 0.0
    for col in counts.T:
        # right-endpoint Riemann sum of the piecewise-constant local estimate, kept in
        # integers as k * L^2 * (path(t_i) - t_i * path(1)) so exact zeros stay exact
        cum = np.cumsum(np.repeat(col, per_block))
        diff = (cum * L - i * cum[-1]) / (k * L * L)
        ks = max(ks, np.abs(diff).max())
        cm = max(cm, np.sum(diff**2) / L)
    return math.sqrt(k / (2 * h)) * ks, (k / (2 * h)) * cm


def kendall_tau_se(u):
    """Kendall's tau with its asymptotic U-statistic standard error."""
    n = len(u)
    c = np.zeros(n)
    for lo in range(0, n, 1000):
        blk = u[lo:lo + 1000]
        c[lo:lo + 1000] = np.sum(np.sign(blk[:, None, 0] - u[None, :, 0]) * np.sign(blk[:, None, 1] - u[None, :, 1]), axis=1)
    c /= n - 1
    return c.mean(), 2.0 * c.std() / np.sqrt(n)

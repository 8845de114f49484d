"""Shared derivative-free minimizer (Nelder-Mead simplex).

Standard coefficients: reflection 1, expansion 2, contraction 0.5,
shrink 0.5. Stops when the function spread across the simplex falls
below f_tol or after max_iter iterations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class MinimizeResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool


def nelder_mead(fn, x0, f_tol=1e-9, max_iter=2000, initial_step=0.05) -> MinimizeResult:
    x0 = np.asarray(x0, dtype=np.float64)
    n = x0.size
    # initial simplex: perturb each coordinate by 5% (or a small absolute step at 0)
    simplex = np.tile(x0, (n + 1, 1))
    for i in range(n):
        simplex[i + 1, i] += initial_step * abs(x0[i]) if x0[i] != 0 else 0.00025
    fvals = np.array([fn(p) for p in simplex])

    it = 0
    while it < max_iter:
        order = np.argsort(fvals, kind="stable")
        simplex, fvals = simplex[order], fvals[order]
        if fvals[-1] - fvals[0] < f_tol:
            return MinimizeResult(simplex[0].copy(), float(fvals[0]), it, True)
        it += 1
        centroid = simplex[:-1].mean(axis=0)
        xr = centroid + (centroid - simplex[-1])
        fr = fn(xr)
        if fr < fvals[0]:
            xe = centroid + 2.0 * (centroid - simplex[-1])
            fe = fn(xe)
            simplex[-1], fvals[-1] = (xe, fe) if fe < fr else (xr, fr)
        elif fr < fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
        else:
            if fr < fvals[-1]:  # outside contraction
                xc = centroid + 0.5 * (xr - centroid)
            else:  # inside contraction
                xc = centroid - 0.5 * (centroid - simplex[-1])
            fc = fn(xc)
            if fc < min(fr, fvals[-1]):
                simplex[-1], fvals[-1] = xc, fc
            else:  # shrink toward the best point
                simplex[1:] = simplex[0] + 0.5 * (simplex[1:] - simplex[0])
                fvals[1:] = [fn(p) for p in simplex[1:]]
    order = np.argsort(fvals, kind="stable")
    return MinimizeResult(simplex[order[0]].copy(), float(fvals[order[0]]), it, False)

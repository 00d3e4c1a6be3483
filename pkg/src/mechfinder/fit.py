"""
Rate-constant estimation.

Least squares over all experiments, times and observed species, minimised
with scipy's L-BFGS-B from several starting points.  Model columns
0..n_obs-1 are the observed species; candidate intermediates start at zero.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from numba import njit
from scipy.optimize import minimize

from mechfinder.integrate import ATOL, MAX_STEPS, RTOL, dopri5, kernel_arrays

LOG = logging.getLogger(__name__)

PENALTY = 1e12
FD_STEP = 1e-7
TOL = 1e-8
DEFAULT_STARTS = 10


@njit(cache=True)
def sse_kernel(theta, ridx, nz_idx, nz_coef, n_species, c0s, times, offsets, y, rtol, atol, max_steps, penalty):
    n_obs = c0s.shape[1]
    total = 0.0
    for e in range(c0s.shape[0]):
        lo = offsets[e]
        hi = offsets[e + 1]
        t = times[lo:hi]
        out = np.empty((hi - lo, n_species))
        c0 = np.zeros(n_species)
        for j in range(n_obs):
            c0[j] = c0s[e, j]
        status = dopri5(c0, t, theta, ridx, nz_idx, nz_coef, rtol, atol, max_steps, out)
        if status != 0:
            return penalty
        for i in range(hi - lo):
            for j in range(n_obs):
                obs = y[lo + i, j]
                if obs == obs:  # skip NaN
                    d = out[i, j] - obs
                    total += d * d
    return total


@njit(cache=True)
def sse_and_grad_kernel(theta, lower, upper, ridx, nz_idx, nz_coef, n_species, c0s, times, offsets, y, rtol, atol, max_steps, penalty, step):
    """SSE and its forward-difference gradient; steps that would leave the box go backwards."""
    f0 = sse_kernel(theta, ridx, nz_idx, nz_coef, n_species, c0s, times, offsets, y, rtol, atol, max_steps, penalty)
    d = theta.shape[0]
    grad = np.zeros(d)
    if f0 >= penalty:
        return f0, grad
    work = theta.copy()
    for i in range(d):
        h = max(step, step * abs(theta[i]))
        if theta[i] + h > upper[i]:
            h = -h
        work[i] = theta[i] + h
        fi = sse_kernel(work, ridx, nz_idx, nz_coef, n_species, c0s, times, offsets, y, rtol, atol, max_steps, penalty)
        work[i] = theta[i]
        if fi >= penalty:
            grad[i] = 0.0
        else:
            grad[i] = (fi - f0) / h
    return f0, grad


@dataclass
class FitResult:
    theta_star: np.ndarray
    sse: float
    n_obs_total: int
    converged: bool
    starts_used: int
    best_start_index: int
    n_evaluations: int = 0


class Objective:
    """SSE of one model against one dataset, with the data packed once."""

    def __init__(self, model, data, rtol=RTOL, atol=ATOL, max_steps=MAX_STEPS):
        if data.n_observed > model.n_species:
            raise ValueError("dataset has more observed species than the model has states")
        self.model = model
        self.packed = data.packed()
        self.arrays = kernel_arrays(model) + (model.n_species,)
        self.n_obs_total = data.n_points
        self.rtol, self.atol, self.max_steps = rtol, atol, max_steps
        self.n_evaluations = 0

    def _theta(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.model.n_params,):
            raise ValueError("theta has length %d, model has %d steps" % (theta.size, self.model.n_params))
        return theta

    def __call__(self, theta) -> float:
        theta = self._theta(theta)
        c0s, times, offsets, y = self.packed
        self.n_evaluations += 1
        return float(sse_kernel(theta, *self.arrays, c0s, times, offsets, y,
                                self.rtol, self.atol, self.max_steps, PENALTY))

    def value_and_grad(self, theta, lower, upper) -> Tuple[float, np.ndarray]:
        theta = self._theta(theta)
        c0s, times, offsets, y = self.packed
        self.n_evaluations += theta.size + 1
        f, g = sse_and_grad_kernel(theta, lower, upper, *self.arrays, c0s, times, offsets, y, self.rtol, self.atol, self.max_steps, PENALTY, FD_STEP)
        return float(f), g


def sse(model, theta, data) -> float:
    """Sum of squared residuals; 1e12 if any experiment fails to integrate."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0):
        raise ValueError("rate constants must be nonnegative")
    return Objective(model, data)(theta)


def start_points(n_params: int, bounds, n_starts: int, seed: int, initial_guess=None) -> np.ndarray:
    """Expert guess first (if any), then uniform draws in the box from PCG64(seed)."""
    lo, hi = bounds
    rng = np.random.default_rng(seed)
    n_random = n_starts - (initial_guess is not None)
    draws = rng.uniform(lo, hi, size=(max(n_random, 0), n_params))
    if initial_guess is not None:
        guess = np.clip(np.asarray(initial_guess, dtype=float).reshape(1, n_params), lo, hi)
        draws = np.vstack([guess, draws])
    return draws[:n_starts]


def estimate(model, data, bounds=(0.0, 10.0), n_starts: int = DEFAULT_STARTS, seed: int = 0,
             initial_guess: Optional[Sequence[float]] = None, objective: Optional[Objective] = None,
             tol: float = TOL, maxiter: int = 1000) -> FitResult:
    """Multi-start bounded L-BFGS-B fit of the model's rate constants.

    The best start (lowest SSE, ties to the earlier start) is returned.
    ``tol`` and ``maxiter`` loosen the optimizer for cheap screening fits.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    lo, hi = float(bounds[0]), float(bounds[1])
    d = model.n_params
    obj = objective or Objective(model, data)
    lower = np.full(d, lo)
    upper = np.full(d, hi)
    best = None
    for k, x0 in enumerate(start_points(d, (lo, hi), n_starts, seed, initial_guess)):
        res = minimize(obj.value_and_grad, x0, args=(lower, upper), jac=True, method="L-BFGS-B",
                       bounds=list(zip(lower, upper)),
                       options={"ftol": tol, "gtol": tol, "maxiter": maxiter})
        theta = np.clip(res.x, lo, hi)
        f = obj(theta)
        converged = bool(res.success) and f < PENALTY
        if best is None or f < best[0]:
            best = (f, theta, converged, k)
    f, theta, converged, k = best
    return FitResult(theta, f, obj.n_obs_total, converged, n_starts, k, obj.n_evaluations)

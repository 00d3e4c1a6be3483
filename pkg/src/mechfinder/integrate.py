"""
Integration of mass-action models.

An adaptive Dormand-Prince 5(4) integrator compiled with numba.  Steps are
shortened to land exactly on every requested output time, so no dense-output
interpolation is involved.  Failures (step-size underflow, non-finite state,
step limit, runaway growth) are reported as a status code, never raised.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import List, Optional

import numpy as np
from numba import njit

RTOL = 1e-6
ATOL = 1e-8
MAX_STEPS = 200_000

OK = 0
STEP_UNDERFLOW = 1
NOT_FINITE = 2
TOO_MANY_STEPS = 3
DIVERGED = 4

# a state this many times larger than the largest initial concentration counts
# as runaway growth; autocatalytic loops with large rate constants otherwise
# climb to 1e100 and beyond while still passing the error test
DIVERGE_FACTOR = 1e6

STATUS_TEXT = {
    OK: "ok",
    STEP_UNDERFLOW: "step size underflow",
    NOT_FINITE: "non-finite state",
    TOO_MANY_STEPS: "step limit reached",
    DIVERGED: "runaway growth",
}

# Dormand & Prince (1980) tableau
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1 = 71 / 57600
_E3 = -71 / 16695
_E4 = 71 / 1920
_E5 = -17253 / 339200
_E6 = 22 / 525
_E7 = -1 / 40


# fastmath without the no-NaN/no-inf assumptions, which the failure checks rely on
_FAST = {"nsz", "arcp", "contract", "afn", "reassoc"}


def kernel_arrays(model):
    """Sparse step layout for the compiled RHS.

    Returns ``(ridx, nz_idx, nz_coef)``: the two reactant slots of each step
    and, per step, the species it changes with their coefficients (padded
    with index -1).
    """
    stoich = np.asarray(model.stoich, dtype=float)
    r = stoich.shape[0]
    width = max(1, int((stoich != 0).sum(axis=1).max())) if r else 1
    nz_idx = -np.ones((r, width), dtype=np.int64)
    nz_coef = np.zeros((r, width))
    for i in range(r):
        cols = np.flatnonzero(stoich[i])
        nz_idx[i, : cols.size] = cols
        nz_coef[i, : cols.size] = stoich[i, cols]
    return np.ascontiguousarray(model.reactant_idx, dtype=np.int64), nz_idx, nz_coef


@njit(cache=True, fastmath=_FAST)
def _rhs(c, theta, ridx, nz_idx, nz_coef, atol, out):
    for j in range(c.shape[0]):
        out[j] = 0.0
    for i in range(theta.shape[0]):
        r = theta[i]
        a = ridx[i, 0]
        if a >= 0:
            ca = c[a]
            r *= ca if ca >= -atol else 0.0
        b = ridx[i, 1]
        if b >= 0:
            cb = c[b]
            r *= cb if cb >= -atol else 0.0
        for s in range(nz_idx.shape[1]):
            j = nz_idx[i, s]
            if j < 0:
                break
            out[j] += nz_coef[i, s] * r


@njit(cache=True, fastmath=_FAST)
def _err_norm(err, y, y_new, rtol, atol):
    acc = 0.0
    for j in range(y.shape[0]):
        scale = atol + rtol * max(abs(y[j]), abs(y_new[j]))
        e = err[j] / scale
        acc += e * e
    return np.sqrt(acc / y.shape[0])


@njit(cache=True, fastmath=_FAST)
def dopri5(c0, times, theta, ridx, nz_idx, nz_coef, rtol, atol, max_steps, out):
    """Integrate from ``times[0]``; write the state at every grid time into ``out``.

    Returns a status code (0 = ok).
    """
    n = c0.shape[0]
    y = c0.copy()
    cap = 1.0
    for j in range(n):
        out[0, j] = y[j]
        cap = max(cap, abs(y[j]))
    cap *= DIVERGE_FACTOR
    n_t = times.shape[0]
    if n_t == 1:
        return 0

    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    tmp = np.empty(n)
    y_new = np.empty(n)
    err = np.empty(n)

    _rhs(y, theta, ridx, nz_idx, nz_coef, atol, k1)

    # initial step (Hairer, Norsett & Wanner, II.4)
    t = times[0]
    span = times[n_t - 1] - t
    d0 = 0.0
    d1 = 0.0
    for j in range(n):
        scale = atol + rtol * abs(y[j])
        d0 += (y[j] / scale) ** 2
        d1 += (k1[j] / scale) ** 2
    d0 = np.sqrt(d0 / n)
    d1 = np.sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, span)
    for j in range(n):
        tmp[j] = y[j] + h0 * k1[j]
    _rhs(tmp, theta, ridx, nz_idx, nz_coef, atol, k2)
    d2 = 0.0
    for j in range(n):
        scale = atol + rtol * abs(y[j])
        d2 += ((k2[j] - k1[j]) / scale) ** 2
    d2 = np.sqrt(d2 / n) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    h = min(100 * h0, h1, span)

    steps = 0
    idx = 1
    while idx < n_t:
        t_target = times[idx]
        clipped = False
        h_try = h
        if t + h_try >= t_target:
            h_try = t_target - t
            clipped = True
        if h_try <= 1e-14 * max(1.0, abs(t)):
            return 1
        steps += 1
        if steps > max_steps:
            return 3

        for j in range(n):
            tmp[j] = y[j] + h_try * _A21 * k1[j]
        _rhs(tmp, theta, ridx, nz_idx, nz_coef, atol, k2)
        for j in range(n):
            tmp[j] = y[j] + h_try * (_A31 * k1[j] + _A32 * k2[j])
        _rhs(tmp, theta, ridx, nz_idx, nz_coef, atol, k3)
        for j in range(n):
            tmp[j] = y[j] + h_try * (_A41 * k1[j] + _A42 * k2[j] + _A43 * k3[j])
        _rhs(tmp, theta, ridx, nz_idx, nz_coef, atol, k4)
        for j in range(n):
            tmp[j] = y[j] + h_try * (_A51 * k1[j] + _A52 * k2[j] + _A53 * k3[j] + _A54 * k4[j])
        _rhs(tmp, theta, ridx, nz_idx, nz_coef, atol, k5)
        for j in range(n):
            tmp[j] = y[j] + h_try * (_A61 * k1[j] + _A62 * k2[j] + _A63 * k3[j] + _A64 * k4[j] + _A65 * k5[j])
        _rhs(tmp, theta, ridx, nz_idx, nz_coef, atol, k6)
        for j in range(n):
            y_new[j] = y[j] + h_try * (_B1 * k1[j] + _B3 * k3[j] + _B4 * k4[j] + _B5 * k5[j] + _B6 * k6[j])
        _rhs(y_new, theta, ridx, nz_idx, nz_coef, atol, k7)
        finite = True
        for j in range(n):
            err[j] = h_try * (_E1 * k1[j] + _E3 * k3[j] + _E4 * k4[j] + _E5 * k5[j] + _E6 * k6[j] + _E7 * k7[j])
            if not np.isfinite(y_new[j]) or not np.isfinite(err[j]):
                finite = False
        if not finite:
            # treat like a rejected step; a persistent blow-up ends in underflow
            h = h_try * 0.2
            continue
        en = _err_norm(err, y, y_new, rtol, atol)

        if en <= 1.0:
            if en == 0.0:
                fac = 10.0
            else:
                fac = min(10.0, max(0.2, 0.9 * en ** -0.2))
            t = t_target if clipped else t + h_try
            for j in range(n):
                y[j] = y_new[j]
                k1[j] = k7[j]
                if abs(y[j]) > cap:
                    return 4
            if clipped:
                for j in range(n):
                    out[idx, j] = y[j]
                idx += 1
                # the clipped step says little about the natural step size
                h = max(h, h_try * fac)
            else:
                h = h_try * fac
        else:
            h = h_try * max(0.2, 0.9 * en ** -0.2)
    for i in range(n_t):
        for j in range(n):
            if not np.isfinite(out[i, j]):
                return 2
    return 0


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _check_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=float).ravel()
    if times.size == 0:
        raise ValueError("empty time grid")
    if np.any(np.diff(times) <= 0):
        raise ValueError("time grid must be strictly increasing")
    return times


def simulate(model, c0, times, theta=None, rtol: float = RTOL, atol: float = ATOL, max_steps: int = MAX_STEPS) -> Trajectory:
    """Solve the model's ODEs from ``c0`` and sample at ``times``.

    A failed solve gives ``status`` other than ``"ok"``; states after the
    failure point are NaN.
    """
    theta = model.theta if theta is None else model._check_theta(theta)
    if theta is None:
        raise ValueError("model has no rate constants")
    c0 = np.asarray(c0, dtype=float)
    if c0.shape != (model.n_species,):
        raise ValueError("initial state has length %d, model has %d species" % (c0.size, model.n_species))
    if np.any(c0 < 0):
        raise ValueError("initial concentrations must be nonnegative")
    times = _check_times(times)
    out = np.full((times.size, model.n_species), np.nan)
    ridx, nz_idx, nz_coef = kernel_arrays(model)
    status = dopri5(c0, times, theta, ridx, nz_idx, nz_coef, rtol, atol, max_steps, out)
    return Trajectory(times, out, STATUS_TEXT[status] if status == OK else "failed: " + STATUS_TEXT[status])


def _rref_nullspace(rows: List[List[Fraction]], n_cols: int) -> List[List[Fraction]]:
    """Basis of {w : rows @ w = 0} by exact Gauss-Jordan elimination."""
    a = [list(r) for r in rows]
    pivots = []
    r = 0
    for c in range(n_cols):
        pivot = next((i for i in range(r, len(a)) if a[i][c] != 0), None)
        if pivot is None:
            continue
        a[r], a[pivot] = a[pivot], a[r]
        p = a[r][c]
        a[r] = [x / p for x in a[r]]
        for i in range(len(a)):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == len(a):
            break
    free = [c for c in range(n_cols) if c not in pivots]
    basis = []
    for f in free:
        w = [Fraction(0)] * n_cols
        w[f] = Fraction(1)
        for i, pc in enumerate(pivots):
            w[pc] = -a[i][f]
        basis.append(w)
    return basis


def conserved_vectors(model) -> List[np.ndarray]:
    """Integer basis of the linear invariants w (stoich @ w = 0) of the model.

    Every such w satisfies w . dC/dt = 0 identically.
    """
    stoich = model.stoich if hasattr(model, "stoich") else np.asarray(model, dtype=float)
    rows = [[Fraction(x).limit_denominator(1000) for x in row] for row in np.asarray(stoich)]
    n_cols = np.asarray(stoich).shape[1]
    out = []
    for w in _rref_nullspace(rows, n_cols):
        denom = 1
        for x in w:
            denom = denom * x.denominator // gcd(denom, x.denominator)
        ints = [int(x * denom) for x in w]
        g = 0
        for x in ints:
            g = gcd(g, abs(x))
        out.append(np.array([x // g for x in ints], dtype=np.int64))
    return out


def conservation_error(traj: Trajectory, w) -> float:
    """max_t |w.c(t) - w.c(0)| / max(1, |w.c(0)|)."""
    w = np.asarray(w, dtype=float)
    q = traj.states @ w
    return float(np.max(np.abs(q - q[0])) / max(1.0, abs(q[0])))

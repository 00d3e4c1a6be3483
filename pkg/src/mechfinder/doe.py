"""
Discriminating experiment design (Hunter-Reiner).

Picks the observed initial concentrations that make two fitted models
disagree most, measured as the summed squared difference of their observed
trajectories on a fixed time grid.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from mechfinder.integrate import simulate

# design compares two smooth trajectories; tight tolerances keep solver noise
# far below the objective and its finite-difference polish
DOE_RTOL = 1e-10
DOE_ATOL = 1e-12


@dataclass(frozen=True)
class DesignSpace:
    lower: tuple  # per observed species (M)
    upper: tuple
    times: tuple

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1 or lo.size == 0:
            raise ValueError("lower and upper need one entry per observed species")
        if np.any(lo > hi):
            raise ValueError("lower bound above upper bound")
        if np.any(lo < 0):
            raise ValueError("initial concentrations must be nonnegative")
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size < 1 or np.any(np.diff(t) <= 0):
            raise ValueError("times must be a strictly increasing 1-d grid")
        object.__setattr__(self, "lower", tuple(lo.tolist()))
        object.__setattr__(self, "upper", tuple(hi.tolist()))
        object.__setattr__(self, "times", tuple(t.tolist()))

    @property
    def dim(self) -> int:
        return len(self.lower)

    def clip(self, x) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)


@dataclass
class DoEProposal:
    x_star: np.ndarray
    objective: float
    evaluations: int


def _observed_path(model, x, times, rtol, atol):
    c0 = np.zeros(model.n_species)
    c0[: x.size] = x
    traj = simulate(model, c0, times, rtol=rtol, atol=atol)
    return traj.states[:, : x.size] if traj.ok else None


def discrepancy(model_nu, model_mu, x, times, rtol: float = DOE_RTOL, atol: float = DOE_ATOL) -> float:
    """Sum over grid times and observed species of the squared prediction gap.

    Both models must carry rate constants.  The first ``len(x)`` states of
    each model are the observed species; intermediates start at zero.  A
    failed simulation scores 0.
    """
    x = np.asarray(x, dtype=float).ravel()
    times = np.asarray(times, dtype=float)
    if x.size > min(model_nu.n_species, model_mu.n_species):
        raise ValueError("more observed species than model states")
    a = _observed_path(model_nu, x, times, rtol, atol)
    b = _observed_path(model_mu, x, times, rtol, atol)
    if a is None or b is None:
        return 0.0
    return float(np.sum((a - b) ** 2))


def design(model_nu, model_mu, space: DesignSpace, budget: int = 64, seed: int = 0, polish: bool = True) -> DoEProposal:
    """Approximate argmax of ``discrepancy`` over the design space.

    Scores the first ``budget`` points of a seeded scrambled Halton sequence,
    then runs a bounded L-BFGS-B polish from every point that was a running
    best when it was sampled.  Those records for a smaller budget are a prefix
    of the records for a larger one, so the objective never drops as the
    budget grows.  Points are only replaced on a strict improvement, so a flat
    objective returns the first sample.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    lo = np.asarray(space.lower)
    hi = np.asarray(space.upper)
    times = np.asarray(space.times)
    evals = 0

    def score(x):
        nonlocal evals
        evals += 1
        return discrepancy(model_nu, model_mu, x, times)

    unit = qmc.Halton(d=space.dim, scramble=True, seed=np.random.default_rng(seed)).random(budget)
    points = lo + unit * (hi - lo)
    best_x, best_f = points[0], score(points[0])
    records = [(best_x, best_f)]
    for x in points[1:]:
        f = score(x)
        if f > best_f:
            best_x, best_f = x, f
            records.append((x, f))

    if polish and np.any(hi > lo):
        for x0, f0 in records:
            if f0 <= 0:
                continue
            res = minimize(lambda z: -score(z), x0, method="L-BFGS-B", bounds=list(zip(lo, hi)),
                           options={"maxiter": 100})
            x = space.clip(res.x)
            f = score(x)
            if f > best_f:
                best_x, best_f = x, f
    return DoEProposal(np.asarray(best_x, dtype=float), float(best_f), evals)

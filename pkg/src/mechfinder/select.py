"""
Model scoring and the outer discovery loop.

Each candidate is scored by AIC = 2 NLL + 2d with a Gaussian likelihood
whose variance is profiled out (sigma^2 = SSE / n).  Iterations grow the
mechanism by one step and one intermediate until the best AIC gets worse.
"""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from mechfinder.datagen import Dataset
from mechfinder.fit import FitResult, Objective, estimate
from mechfinder.genmech import DEFAULT_RULES, Matrix, enumerate_mechanisms, model_classes
from mechfinder.integrate import conservation_error, conserved_vectors, simulate
from mechfinder.problem import IterationPlan, ProblemSpec, plan_iteration, validate
from mechfinder.translate import to_kinetic_model

LOG = logging.getLogger(__name__)

SSE_FLOOR = 1e-300
REASONS = ("aic_worsened", "max_iterations", "no_candidates")


class NoCandidates(RuntimeError):
    """Raised when an iteration's enumeration is empty."""


def nll(sse: float, n: int) -> float:
    """Gaussian negative log-likelihood with the variance profiled at sse/n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if sse < 0:
        raise ValueError("sse must be nonnegative")
    s = max(float(sse), SSE_FLOOR)
    return 0.5 * n * math.log(s / n) + 0.5 * n * (1.0 + math.log(2.0 * math.pi))


def aic(nll_value: float, d: int) -> float:
    return 2.0 * nll_value + 2.0 * d


@dataclass
class ScoredCandidate:
    matrix: Matrix
    fit: FitResult
    nll: float
    d: int
    aic: float
    n_equivalent: int = 1  # enumerated matrices sharing this model up to relabelling
    screened: bool = False  # fitted with the cheap screening budget only

    @classmethod
    def score(cls, matrix, fit: FitResult, n_equivalent=1, screened=False) -> "ScoredCandidate":
        d = len(matrix)
        value = nll(fit.sse, fit.n_obs_total)
        return cls(tuple(tuple(int(x) for x in row) for row in matrix), fit, value, d, aic(value, d),
                   n_equivalent, screened)


@dataclass
class IterationReport:
    plan: IterationPlan
    n_candidates: int  # enumerated matrices
    complete: bool
    best: Optional[ScoredCandidate]
    all_scores: List[ScoredCandidate]  # one per distinct model, ascending AIC
    elapsed: float = 0.0

    @property
    def n_models(self) -> int:
        return len(self.all_scores)


@dataclass
class RunReport:
    iterations: List[IterationReport]
    winner: ScoredCandidate
    terminated_reason: str
    winner_iteration: int

    @property
    def best_aics(self) -> List[float]:
        return [it.best.aic for it in self.iterations if it.best is not None]


@dataclass(frozen=True)
class FitPolicy:
    """How candidates of one iteration are fitted.

    Iterations with at most ``screen_above`` distinct models are fitted
    exhaustively with the full multistart budget.  Larger ones are first
    screened with ``screen_starts`` loosely converged starts; the
    ``refine_top`` best screened models are then refitted with the full
    budget.  ``screen_above=None`` always fits exhaustively.
    """

    convention: str = "mass_action"
    screen_above: Optional[int] = 300
    screen_starts: int = 1
    screen_tol: float = 1e-5
    screen_maxiter: int = 200
    refine_top: int = 25

    def __post_init__(self):
        if self.screen_starts < 1 or self.refine_top < 1:
            raise ValueError("screen_starts and refine_top must be >= 1")


EXHAUSTIVE = FitPolicy(screen_above=None)


def candidate_seed(seed: int, index: int) -> int:
    """Independent per-candidate seed derived from the run seed and the candidate index."""
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0])


def _fit_job(args) -> FitResult:
    matrix, convention, data, bounds, n_starts, seed, tol, maxiter = args
    model = to_kinetic_model(matrix, convention)
    return estimate(model, data, bounds, n_starts, seed, tol=tol, maxiter=maxiter)


def _run_jobs(jobs, workers: int) -> List[FitResult]:
    if workers <= 1 or len(jobs) < 2:
        return [_fit_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_fit_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def _better(fresh: FitResult, old: FitResult) -> FitResult:
    return fresh if fresh.sse <= old.sse else old


def run_iteration(spec: ProblemSpec, plan: IterationPlan, data: Dataset, seed: int = 0,
                  policy: FitPolicy = FitPolicy(), rules=DEFAULT_RULES) -> IterationReport:
    """Enumerate, translate, fit and score every candidate of one iteration.

    Matrices that differ only by row order or intermediate labels give the
    same model and are fitted once; the class representative is the
    lexicographically smallest member and its seed derives from its index
    in the sorted enumeration.
    """
    t0 = time.monotonic()
    mats, complete = enumerate_mechanisms(plan, spec.overall, time_budget=spec.gen_time_budget,
                                          workers=spec.workers, rules=rules)
    if not mats:
        raise NoCandidates("no feasible mechanism with %d steps and %d species" % (plan.n_steps, plan.n_species))
    classes = model_classes(mats, spec.overall.n_observed)
    reps = [(members[0], len(members)) for members in classes.values()]
    reps.sort()
    bounds = spec.rate_bounds
    n_full = spec.multistart_count
    screen = policy.screen_above is not None and len(reps) > policy.screen_above
    LOG.info("iteration %d: %d matrices, %d models%s", plan.iteration_index, len(mats), len(reps),
             " (screening)" if screen else "")

    def jobs(indices, n_starts, tol, maxiter):
        return [(mats[i], policy.convention, data, bounds, n_starts, candidate_seed(seed, i), tol, maxiter)
                for i in indices]

    indices = [i for i, _ in reps]
    if not screen:
        fits = _run_jobs(jobs(indices, n_full, 1e-8, 1000), spec.workers)
        flags = [False] * len(reps)
    else:
        n_screen = min(policy.screen_starts, n_full)
        fits = _run_jobs(jobs(indices, n_screen, policy.screen_tol, policy.screen_maxiter), spec.workers)
        order = sorted(range(len(reps)), key=lambda k: (fits[k].sse, mats[indices[k]]))
        top = sorted(order[: policy.refine_top])
        refits = _run_jobs(jobs([indices[k] for k in top], n_full, 1e-8, 1000), spec.workers)
        flags = [True] * len(reps)
        for k, fresh in zip(top, refits):
            fits[k] = _better(fresh, fits[k])
            flags[k] = False

    scores = [ScoredCandidate.score(mats[i], f, count, flag) for (i, count), f, flag in zip(reps, fits, flags)]
    scores.sort(key=lambda c: (c.aic, c.matrix))
    report = IterationReport(plan, len(mats), complete, scores[0], scores, time.monotonic() - t0)
    LOG.info("iteration %d: best AIC %.4f in %.1fs", plan.iteration_index, scores[0].aic, report.elapsed)
    return report


def run_discovery(spec: ProblemSpec, data: Dataset, seed: int = 0, policy: FitPolicy = FitPolicy(),
                  rules=DEFAULT_RULES, progress=None) -> RunReport:
    """Grow the mechanism until the iteration's best AIC gets strictly worse.

    The winner is the best model of the last iteration that improved on its
    predecessor.  ``progress`` (optional) is called with each finished
    IterationReport.
    """
    problems = validate(spec)
    if not problems.ok:
        raise ValueError("invalid problem: " + "; ".join(problems.violations))
    iterations: List[IterationReport] = []
    winner, winner_it = None, 0
    reason = "max_iterations"
    for index in range(1, spec.max_iterations + 1):
        plan = plan_iteration(spec, index)
        try:
            report = run_iteration(spec, plan, data, seed, policy, rules)
        except NoCandidates:
            if index == 1:
                raise
            reason = "no_candidates"
            break
        iterations.append(report)
        if progress is not None:
            progress(report)
        if winner is not None and report.best.aic > iterations[-2].best.aic:
            reason = "aic_worsened"
            break
        if winner is None or report.best.aic < winner.aic:
            winner, winner_it = report.best, index
    return RunReport(iterations, winner, reason, winner_it)


def conservation_check(candidate: ScoredCandidate, data: Dataset, convention: str = "mass_action") -> float:
    """Largest relative drift of any linear invariant over the candidate's fitted trajectories.

    Failed trajectories are skipped; returns 0.0 when the model has no
    invariants.
    """
    model = to_kinetic_model(candidate.matrix, convention, candidate.fit.theta_star)
    vectors = conserved_vectors(model)
    worst = 0.0
    if not vectors:
        return worst
    n_obs = data.n_observed
    for exp in data.experiments:
        c0 = np.zeros(model.n_species)
        c0[:n_obs] = exp.c0
        traj = simulate(model, c0, exp.times)
        if not traj.ok:
            continue
        for w in vectors:
            worst = max(worst, conservation_error(traj, w))
    return worst

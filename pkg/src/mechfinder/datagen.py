"""
In-silico case studies.

Three benchmark systems with their ground-truth kinetics, initial
conditions, sampling grids and measurement noise.  Noise comes from numpy's
PCG64 bit generator (``numpy.random.default_rng``), which gives identical
streams on every platform for a given seed.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from mechfinder.integrate import simulate
from mechfinder.problem import OverallReaction, ProblemSpec
from mechfinder.translate import KineticModel, to_kinetic_model

N_TIMES = 30
R_GAS = 8.314


@dataclass
class Experiment:
    c0: np.ndarray  # observed species only (M)
    times: np.ndarray
    y: np.ndarray  # n_t x n_observed (M); NaN marks a missing value

    def __post_init__(self):
        self.c0 = np.asarray(self.c0, dtype=float)
        self.times = np.asarray(self.times, dtype=float)
        self.y = np.asarray(self.y, dtype=float).reshape(self.times.size, -1)


@dataclass
class Dataset:
    experiments: List[Experiment]
    observed_names: Tuple[str, ...]
    seed: Optional[int] = None

    @property
    def n_observed(self) -> int:
        return len(self.observed_names)

    @property
    def n_points(self) -> int:
        """Number of finite scalar measurements."""
        return int(sum(np.isfinite(e.y).sum() for e in self.experiments))

    def packed(self):
        """Flat arrays for the compiled SSE kernel."""
        n_obs = self.n_observed
        if not self.experiments:
            return (np.zeros((0, n_obs)), np.zeros(0), np.zeros(1, dtype=np.int64), np.zeros((0, n_obs)))
        c0s = np.array([e.c0 for e in self.experiments], dtype=float).reshape(-1, n_obs)
        times = np.concatenate([e.times for e in self.experiments])
        offsets = np.cumsum([0] + [e.times.size for e in self.experiments]).astype(np.int64)
        y = np.vstack([e.y for e in self.experiments])
        return c0s, times, offsets, y

    def with_experiment(self, exp: Experiment) -> "Dataset":
        return Dataset(self.experiments + [exp], self.observed_names, self.seed)


@dataclass
class CaseStudy:
    name: str
    overall: OverallReaction
    truth: object  # KineticModel or RateLawModel
    theta_true: np.ndarray
    species_names: Tuple[str, ...]  # all species of the ground-truth model
    experiments: List[np.ndarray]  # full initial states of the ground-truth model
    time_span: Tuple[float, float]
    n_t: int
    observed_mask: np.ndarray
    noise_sd: np.ndarray  # one per observed species
    min_steps: int
    min_species: int
    time_unit: str = "h"
    true_matrix: Optional[np.ndarray] = None
    winner_iteration: Optional[int] = None

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.time_span[0], self.time_span[1], self.n_t)

    @property
    def observed_names(self) -> Tuple[str, ...]:
        return tuple(n for n, m in zip(self.species_names, self.observed_mask) if m)

    def problem(self, **overrides) -> ProblemSpec:
        kw = dict(overall=self.overall, min_steps=self.min_steps, min_species=self.min_species,
                  noise_model=tuple(float(s) for s in self.noise_sd))
        kw.update(overrides)
        return ProblemSpec(**kw)


def fructose_rate_constant(k_ref=0.9, e_a=124.0, temperature=410.15, c_acid=3.3e-2) -> float:
    """Pseudo-first-order constant k_ref * exp(-Ea/RT) * C_acid (min^-1).

    Ea is taken as printed for the source data set (J/mol).
    """
    return k_ref * math.exp(-e_a / (R_GAS * temperature)) * c_acid


def _hypothetical(convention):
    matrix = np.array([
        [-2, 1, 0, 0, 0],   # 2A -> B
        [-1, 0, 0, 1, 0],   # A -> D
        [0, 0, 0, -1, 1],   # D -> E
        [-1, 0, 1, 0, -1],  # A + E -> C
    ])
    theta = np.array([0.1, 0.2, 0.13, 0.25])
    ics = [(10, 0, 2, 0, 0), (10, 2, 0, 0, 0), (10, 2, 2, 0, 0), (5, 0, 0, 0, 0), (10, 0, 0, 0, 0)]
    return CaseStudy(
        name="hypothetical",
        overall=OverallReaction(("A", "B", "C"), (-4, 1, 1)),
        truth=to_kinetic_model(matrix, convention, theta),
        theta_true=theta,
        species_names=("A", "B", "C", "D", "E"),
        experiments=[np.array(x, dtype=float) for x in ics],
        time_span=(0.0, 10.0),
        n_t=N_TIMES,
        observed_mask=np.array([True, True, True, False, False]),
        noise_sd=np.full(3, 0.15),
        min_steps=2,
        min_species=3,
        true_matrix=matrix,
        winner_iteration=3,
    )


def _aldol(convention):
    matrix = np.array([
        [-1, 0, 0, 0, 1, 0],   # A -> E
        [0, -1, 0, 0, -1, 1],  # E + B -> F
        [0, 0, 1, 1, 0, -1],   # F -> C + D
    ])
    theta = np.array([0.759, 0.293, 0.681])
    ics = [(5, 10, 0, 0, 0, 0), (5, 5, 2, 0, 0, 0), (5, 10, 0, 2, 0, 0), (10, 10, 0, 2, 0, 0), (10, 10, 2, 2, 0, 0)]
    return CaseStudy(
        name="aldol",
        overall=OverallReaction(("A", "B", "C", "D"), (-1, -1, 1, 1)),
        truth=to_kinetic_model(matrix, convention, theta),
        theta_true=theta,
        species_names=("A", "B", "C", "D", "E", "F"),
        experiments=[np.array(x, dtype=float) for x in ics],
        time_span=(0.0, 10.0),
        n_t=N_TIMES,
        observed_mask=np.array([True, True, True, True, False, False]),
        noise_sd=np.full(4, 0.15),
        min_steps=1,
        min_species=4,
        true_matrix=matrix,
        winner_iteration=3,
    )


def _fructose(convention):
    # r = k C_A with C_acid folded into k; dC_i/dt = nu_i r with nu = (-1, 3, 1).
    # As a pseudo-step "A -> 3B + C" this is not elementary, so the truth is
    # carried as an explicit rate law rather than a mechanism matrix.
    k = fructose_rate_constant()
    ics = [(4, 0, 0), (6, 2, 1), (4, 2, 0), (4, 0, 1), (6, 2, 0)]
    truth = RateLawModel(np.array([-1.0, 3.0, 1.0]), (0,), np.array([k]))
    return CaseStudy(
        name="fructose",
        overall=OverallReaction(("A", "B", "C"), (-1, 3, 1)),
        truth=truth,
        theta_true=np.array([k]),
        species_names=("A", "B", "C"),
        experiments=[np.array(x, dtype=float) for x in ics],
        time_span=(0.0, 90.0),
        n_t=N_TIMES,
        observed_mask=np.array([True, True, True]),
        noise_sd=np.full(3, 0.2),
        min_steps=3,
        min_species=5,
        time_unit="min",
        true_matrix=None,
        winner_iteration=2,
    )


@dataclass
class RateLawModel:
    """Non-elementary rate law r = k * prod(C ** order) applied with coefficients ``nu``.

    Quacks like ``KineticModel`` as far as ``simulate`` is concerned.
    """

    nu: np.ndarray
    reactants: Tuple[int, ...]
    theta: np.ndarray
    convention: str = "mass_action"
    matrix: Optional[np.ndarray] = None

    def __post_init__(self):
        self.nu = np.asarray(self.nu, dtype=float)
        self.theta = np.asarray(self.theta, dtype=float).reshape(1)
        slots = list(self.reactants) + [-1] * (2 - len(self.reactants))
        self.reactant_idx = np.array([slots], dtype=np.int64)
        self.stoich = self.nu.reshape(1, -1)

    @property
    def n_species(self) -> int:
        return self.nu.size

    @property
    def n_params(self) -> int:
        return 1

    def _check_theta(self, theta):
        return np.asarray(theta, dtype=float).reshape(1)


_CASES = {"hypothetical": _hypothetical, "aldol": _aldol, "fructose": _fructose}
CASE_NAMES = tuple(_CASES)


def case(name: str, convention: str = "mass_action") -> CaseStudy:
    try:
        build = _CASES[name]
    except KeyError:
        raise ValueError("unknown case %r (known: %s)" % (name, ", ".join(_CASES))) from None
    return build(convention)


def generate(cs: CaseStudy, seed: int = 0, noise_sd=None) -> Dataset:
    """Simulate the ground truth on the case grid and add Gaussian noise to observed species.

    Noise is drawn experiment by experiment, row-major over (time, species).
    """
    sd = cs.noise_sd if noise_sd is None else np.broadcast_to(np.asarray(noise_sd, dtype=float), cs.noise_sd.shape)
    rng = np.random.default_rng(seed)
    times = cs.times
    exps = []
    for c0 in cs.experiments:
        traj = simulate(cs.truth, c0, times)
        if not traj.ok:
            raise RuntimeError("ground-truth simulation failed for case %s: %s" % (cs.name, traj.status))
        clean = traj.states[:, cs.observed_mask]
        y = clean + rng.standard_normal(clean.shape) * sd
        exps.append(Experiment(c0[cs.observed_mask], times, y))
    return Dataset(exps, cs.observed_names, seed)


def noiseless(cs: CaseStudy) -> Dataset:
    return generate(cs, seed=0, noise_sd=0.0)

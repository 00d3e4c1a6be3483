"""Problem definition: overall reaction, size inputs and per-iteration dimensions."""

from dataclasses import dataclass, field
from math import ceil
from typing import List, Optional, Sequence, Tuple

OBSERVED_NAMES = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


@dataclass(frozen=True)
class OverallReaction:
    """Net stoichiometry of the observed species (negative = reactant)."""

    species_names: Tuple[str, ...]
    stoich: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "species_names", tuple(self.species_names))
        object.__setattr__(self, "stoich", tuple(int(s) for s in self.stoich))

    @property
    def n_observed(self) -> int:
        return len(self.species_names)

    def problems(self) -> List[str]:
        out = []
        if len(self.species_names) != len(self.stoich):
            out.append("species_names and stoich differ in length")
        if len(set(self.species_names)) != len(self.species_names):
            out.append("duplicate species names")
        if not any(s < 0 for s in self.stoich) or not any(s > 0 for s in self.stoich):
            out.append("overall reaction needs at least one reactant and one product")
        if any(s == 0 for s in self.stoich):
            out.append("zero stoichiometric entry (intermediates must not be listed)")
        return out

    def __str__(self):
        def side(sign):
            terms = []
            for name, s in zip(self.species_names, self.stoich):
                if s * sign > 0:
                    terms.append(("%d" % abs(s) if abs(s) > 1 else "") + name)
            return " + ".join(terms)

        return "%s -> %s" % (side(-1), side(1))


@dataclass(frozen=True)
class ProblemSpec:
    overall: OverallReaction
    min_steps: int
    min_species: int
    rate_bounds: Tuple[float, float] = (0.0, 10.0)
    gen_time_budget: float = 600.0
    max_iterations: int = 6
    multistart_count: int = 10
    noise_model: Optional[Tuple[float, ...]] = None
    workers: int = 1


@dataclass(frozen=True)
class IterationPlan:
    iteration_index: int
    n_steps: int
    n_species: int
    n_intermediates: int


@dataclass
class ValidationReport:
    violations: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate(spec: ProblemSpec) -> ValidationReport:
    """Collect every violated invariant of ``spec`` as a readable message."""
    report = ValidationReport(list(spec.overall.problems()))
    if spec.min_steps < 1:
        report.violations.append("min_steps must be a positive integer")
    if spec.min_species < spec.overall.n_observed:
        report.violations.append(
            "min_species below observed count (%d < %d)" % (spec.min_species, spec.overall.n_observed)
        )
    lo, hi = spec.rate_bounds
    if lo < 0:
        report.violations.append("rate_bounds lower limit is negative")
    if not lo < hi:
        report.violations.append("empty bounds interval [%g, %g]" % (lo, hi))
    if spec.max_iterations < 1:
        report.violations.append("max_iterations must be a positive integer")
    if spec.multistart_count < 1:
        report.violations.append("multistart_count must be a positive integer")
    if spec.gen_time_budget <= 0:
        report.violations.append("gen_time_budget must be positive")
    if spec.noise_model is not None and len(spec.noise_model) != spec.overall.n_observed:
        report.violations.append("noise_model needs one standard deviation per observed species")
    return report


def plan_iteration(spec: ProblemSpec, iteration_index: int) -> IterationPlan:
    """Matrix dimensions for a 1-based iteration; each iteration adds one step and one intermediate."""
    if not 1 <= iteration_index <= spec.max_iterations:
        raise ValueError(
            "iteration_index %d outside [1, %d]" % (iteration_index, spec.max_iterations)
        )
    n_steps = spec.min_steps + iteration_index - 1
    n_species = spec.min_species + iteration_index - 1
    return IterationPlan(iteration_index, n_steps, n_species, n_species - spec.overall.n_observed)


def molecularity_bound(overall: OverallReaction) -> int:
    """Lower bound on the step count from the two-molecule limit on each side."""
    reactants = sum(-s for s in overall.stoich if s < 0)
    products = sum(s for s in overall.stoich if s > 0)
    return max(ceil(reactants / 2), ceil(products / 2), 1)


def suggest_minimum_size(overall: OverallReaction, rules=None, time_budget: float = 60.0) -> Tuple[int, int]:
    """Smallest (steps, species) admitting a feasible mechanism.

    Sizes are tried in order of increasing step count, then increasing
    intermediate count, up to twice the molecularity bound.
    """
    from mechfinder.genmech import DEFAULT_RULES, enumerate_mechanisms

    rules = DEFAULT_RULES if rules is None else rules

    problems = overall.problems()
    if problems:
        raise ValueError("; ".join(problems))
    bound = molecularity_bound(overall)
    n_obs = overall.n_observed
    for n_steps in range(bound, 2 * bound + 1):
        # intermediates are produced and consumed in different rows, so at most n_steps - 1 help
        for n_int in range(0, n_steps):
            plan = IterationPlan(1, n_steps, n_obs + n_int, n_int)
            found, _ = enumerate_mechanisms(plan, overall, time_budget=time_budget, rules=rules, limit=1)
            if found:
                return n_steps, n_obs + n_int
    raise ValueError("no feasible mechanism size within %d steps" % (2 * bound))


def default_names(n_species: int, observed: Sequence[str]) -> List[str]:
    """Observed names followed by auto-named intermediates (D, E, ... after the observed ones)."""
    names = list(observed)
    pool = [c for c in OBSERVED_NAMES if c not in names]
    start = 0
    if all(len(n) == 1 and n in OBSERVED_NAMES for n in names) and names:
        last = max(OBSERVED_NAMES.index(n) for n in names)
        pool = [c for c in OBSERVED_NAMES[last + 1:] if c not in names] + [
            c for c in OBSERVED_NAMES[: last + 1] if c not in names
        ]
    i = start
    while len(names) < n_species:
        if i < len(pool):
            names.append(pool[i])
        else:
            names.append("I%d" % (i - len(pool) + 1))
        i += 1
    return names

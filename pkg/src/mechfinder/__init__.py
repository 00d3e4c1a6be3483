"""Discover the simplest mass-action mechanism that explains kinetic data."""

from mechfinder.problem import OverallReaction, ProblemSpec, IterationPlan, plan_iteration, validate
from mechfinder.genmech import RuleSet, check_feasible, enumerate_mechanisms, enumerate_bruteforce, search_space_size
from mechfinder.translate import KineticModel, to_kinetic_model, to_reaction_strings
from mechfinder.integrate import simulate, conserved_vectors
from mechfinder.datagen import case, generate
from mechfinder.fit import estimate, sse
from mechfinder.select import aic, nll, run_discovery, run_iteration
from mechfinder.doe import DesignSpace, design, discrepancy

__version__ = "0.1.0"

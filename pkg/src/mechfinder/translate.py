"""
Mechanism translation
---------------------

Turns a mechanism matrix into reaction strings ("2A -> B") and into a
mass-action ODE right-hand side.

Two rate conventions are supported:

``"mass_action"`` (default)
    dC_j/dt = sum_i N[i, j] * k_i * prod(C ** multiplicity), with N the
    matrix itself.  Linear invariants of N are conserved exactly.
``"as_printed"``
    every species taking part in step i gets +/- k_i * prod(C ** mult)
    regardless of its coefficient, so ``2A -> B`` gives dC_A/dt = -k C_A^2.
    This is the form the published model tables use.
"""

import re
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from mechfinder.problem import default_names

CONVENTIONS = ("mass_action", "as_printed")

_TERM = re.compile(r"^\s*([12]?)\s*([A-Za-z][A-Za-z0-9_]*)\s*$")


@dataclass(frozen=True)
class ElementaryStep:
    reactants: Tuple[Tuple[int, int], ...]
    products: Tuple[Tuple[int, int], ...]
    rate_index: int

    def __post_init__(self):
        n_in = sum(m for _, m in self.reactants)
        n_out = sum(m for _, m in self.products)
        if not (1 <= n_in <= 2 and 1 <= n_out <= 2):
            raise ValueError("elementary step needs 1-2 reactant and 1-2 product molecules")
        if {i for i, _ in self.reactants} & {i for i, _ in self.products}:
            raise ValueError("species on both sides of one step")


@dataclass
class KineticModel:
    """Mass-action model built from a mechanism matrix.

    ``stoich`` is the effective net-coefficient matrix used by the RHS
    (equal to the mechanism matrix for the mass-action convention).
    ``reactant_idx`` lists the two reactant "slots" of each step, -1 for an
    empty slot; ``2A`` fills both slots with A.
    """

    steps: List[ElementaryStep]
    n_species: int
    convention: str = "mass_action"
    theta: Optional[np.ndarray] = None
    matrix: Optional[Tuple[Tuple[int, ...], ...]] = None
    stoich: np.ndarray = field(init=False, repr=False)
    reactant_idx: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.convention not in CONVENTIONS:
            raise ValueError("unknown rate convention %r" % self.convention)
        r = len(self.steps)
        stoich = np.zeros((r, self.n_species))
        idx = -np.ones((r, 2), dtype=np.int64)
        for i, step in enumerate(self.steps):
            slot = 0
            for j, mult in step.reactants:
                stoich[i, j] -= mult if self.convention == "mass_action" else 1
                for _ in range(mult):
                    idx[i, slot] = j
                    slot += 1
            for j, mult in step.products:
                stoich[i, j] += mult if self.convention == "mass_action" else 1
        self.stoich = stoich
        self.reactant_idx = idx
        if self.theta is not None:
            self.theta = self._check_theta(self.theta)

    @property
    def n_params(self) -> int:
        return len(self.steps)

    def _check_theta(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_params,):
            raise ValueError("theta has length %d, model has %d steps" % (theta.size, self.n_params))
        if np.any(theta < 0):
            raise ValueError("rate constants must be nonnegative")
        return theta

    def with_theta(self, theta) -> "KineticModel":
        return KineticModel(self.steps, self.n_species, self.convention, theta, self.matrix)

    def rates(self, c, theta=None) -> np.ndarray:
        theta = self.theta if theta is None else np.asarray(theta, dtype=float)
        c_ext = np.append(np.asarray(c, dtype=float), 1.0)  # index -1 -> 1.0
        return theta * c_ext[self.reactant_idx[:, 0]] * c_ext[self.reactant_idx[:, 1]]

    def rhs(self, c, theta=None) -> np.ndarray:
        return rhs(self, c, theta)


def _row_to_step(row: Sequence[int], rate_index: int) -> ElementaryStep:
    reactants = tuple((j, -int(x)) for j, x in enumerate(row) if x < 0)
    products = tuple((j, int(x)) for j, x in enumerate(row) if x > 0)
    return ElementaryStep(reactants, products, rate_index)


def _check_matrix(m):
    m = np.asarray(m, dtype=int)
    if m.ndim != 2 or m.size == 0:
        raise ValueError("mechanism matrix must be a nonempty 2-d array")
    return m


def to_kinetic_model(m, convention: str = "mass_action", theta=None) -> KineticModel:
    """Decode each matrix row into an elementary step (row i gets rate constant k_{i+1})."""
    m = _check_matrix(m)
    try:
        steps = [_row_to_step(row, i + 1) for i, row in enumerate(m)]
    except ValueError as exc:
        raise ValueError("infeasible matrix: %s" % exc) from None
    matrix = tuple(tuple(int(x) for x in row) for row in m)
    return KineticModel(steps, m.shape[1], convention, theta, matrix)


def _side(terms, names):
    return " + ".join(("2" if mult == 2 else "") + names[j] for j, mult in terms)


def step_string(step: ElementaryStep, names: Sequence[str]) -> str:
    return "%s -> %s" % (_side(step.reactants, names), _side(step.products, names))


def to_reaction_strings(m, names: Optional[Sequence[str]] = None) -> List[str]:
    """One ``"aX + bY -> cZ"`` string per row; rate labels are implied by row order.

    With ``names`` shorter than the column count, the remaining columns are
    named D, E, F... continuing after the observed names.
    """
    m = _check_matrix(m)
    if names is None:
        names = default_names(m.shape[1], [])
    elif len(names) != m.shape[1]:
        names = default_names(m.shape[1], list(names))
    model = to_kinetic_model(m)
    return [step_string(s, names) for s in model.steps]


def labelled_strings(m, names=None) -> List[str]:
    """Reaction strings with their rate labels, e.g. ``"A + B -k1-> D"``."""
    return [s.replace("->", "-k%d->" % (i + 1)) for i, s in enumerate(to_reaction_strings(m, names))]


def parse_reaction_strings(lines: Sequence[str], names: Sequence[str]) -> List[ElementaryStep]:
    """Inverse of ``to_reaction_strings`` for a known species list."""
    lookup = {n: j for j, n in enumerate(names)}
    steps = []
    for i, line in enumerate(lines):
        if line.count("->") != 1:
            raise ValueError("expected exactly one '->' in %r" % line)
        left, right = line.split("->")
        sides = []
        for side in (left, right):
            terms = []
            for term in side.split("+"):
                match = _TERM.match(term)
                if not match:
                    raise ValueError("cannot parse term %r in %r" % (term, line))
                mult, name = match.groups()
                if name not in lookup:
                    raise ValueError("unknown species %r" % name)
                terms.append((lookup[name], int(mult or 1)))
            sides.append(tuple(terms))
        steps.append(ElementaryStep(sides[0], sides[1], i + 1))
    return steps


def steps_to_matrix(steps: Sequence[ElementaryStep], n_species: int) -> np.ndarray:
    m = np.zeros((len(steps), n_species), dtype=int)
    for i, step in enumerate(steps):
        for j, mult in step.reactants:
            m[i, j] -= mult
        for j, mult in step.products:
            m[i, j] += mult
    return m


def rhs(model: KineticModel, c, theta=None) -> np.ndarray:
    """dC/dt for concentrations ``c`` (uses ``model.theta`` unless ``theta`` is given)."""
    c = np.asarray(c, dtype=float)
    if c.shape != (model.n_species,):
        raise ValueError("state has length %d, model has %d species" % (c.size, model.n_species))
    theta = model.theta if theta is None else model._check_theta(theta)
    if theta is None:
        raise ValueError("model has no rate constants")
    return model.rates(c, theta) @ model.stoich


def ode_terms(model: KineticModel, names: Sequence[str]) -> List[List[Tuple[int, int, Tuple[str, ...]]]]:
    """Symbolic RHS: per species a sorted list of (sign*coeff, k index, reactant factors).

    ``("A", "B")`` stands for C_A*C_B and ``("A", "A")`` for C_A^2.
    """
    out = []
    for j in range(model.n_species):
        terms = []
        for i, step in enumerate(model.steps):
            coeff = model.stoich[i, j]
            if coeff:
                factors = tuple(sorted(names[k] for k in model.reactant_idx[i] if k >= 0))
                terms.append((int(coeff), step.rate_index, factors))
        out.append(sorted(terms, key=lambda t: (t[1], t[0])))
    return out


def ode_strings(model: KineticModel, names: Sequence[str]) -> List[str]:
    """Readable RHS lines such as ``dC_A/dt = -k1*C_A*C_B``."""
    lines = []
    for name, terms in zip(names, ode_terms(model, names)):
        body = ""
        for coeff, k, factors in terms:
            mag = "" if abs(coeff) == 1 else "%d*" % abs(coeff)
            term = "%sk%d*%s" % (mag, k, "*".join("C_%s" % f for f in factors))
            if not body:
                body = ("-" if coeff < 0 else "") + term
            else:
                body += (" - " if coeff < 0 else " + ") + term
        body = body or "0"
        lines.append("dC_%s/dt = %s" % (name, body))
    return lines

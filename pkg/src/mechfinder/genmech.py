"""
Mechanism generation
--------------------

Enumerates integer mechanism matrices (rows = elementary steps, columns =
species, entries in {-2..2}) that satisfy the feasibility rules, using a
row-wise backtracking search split across worker processes by the first row.

Observed species occupy the leading columns in overall-reaction order;
intermediates are the trailing columns.
"""

import itertools
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from mechfinder.problem import IterationPlan, OverallReaction

LOG = logging.getLogger(__name__)

CELL_VALUES = (-2, -1, 0, 1, 2)
BRUTEFORCE_LIMIT = 10**9

Matrix = Tuple[Tuple[int, ...], ...]


@dataclass(frozen=True)
class RuleSet:
    """Switches for the feasibility rules.

    The defaults are the variant that reproduces the published candidate
    counts (2 / 31 / 10); see ``search_rule_variants``.

    sign_consistent
        observed reactants are never produced and observed products are
        never consumed in any step.
    cumulative
        the running total of every intermediate never drops below zero
        when the steps are read top to bottom (a step cannot consume more
        of an intermediate than earlier steps have made).
    strict_order
        the first production of an intermediate comes in an earlier row
        than its first consumption.
    canonical_labels
        intermediates are numbered in order of first production; relabelled
        copies are dropped.
    """

    sign_consistent: bool = True
    cumulative: bool = True
    strict_order: bool = True
    canonical_labels: bool = False


DEFAULT_RULES = RuleSet()


def as_matrix(m) -> Matrix:
    return tuple(tuple(int(x) for x in row) for row in np.asarray(m, dtype=int).reshape(len(m), -1))


def search_space_size(plan) -> int:
    """Number of raw matrices, 5 ** (rows * cols)."""
    if isinstance(plan, IterationPlan):
        r, c = plan.n_steps, plan.n_species
    else:
        r, c = plan
    return len(CELL_VALUES) ** (r * c)


def _targets(overall: OverallReaction, n_species: int) -> Tuple[int, ...]:
    n_obs = overall.n_observed
    if n_species < n_obs:
        raise ValueError("matrix has %d columns but %d observed species" % (n_species, n_obs))
    return tuple(overall.stoich) + (0,) * (n_species - n_obs)


def _row_problem(row: Sequence[int]) -> Optional[str]:
    consumed = -sum(x for x in row if x < 0)
    produced = sum(x for x in row if x > 0)
    if not (1 <= consumed <= 2 and 1 <= produced <= 2):
        return "row molecularity"
    return None


def check_feasible(m, overall: OverallReaction, rules: RuleSet = DEFAULT_RULES) -> Tuple[bool, Optional[str]]:
    """Return ``(True, None)`` or ``(False, name of the first violated rule)``."""
    m = as_matrix(m)
    if not m or not m[0]:
        raise ValueError("empty matrix")
    n_rows, n_cols = len(m), len(m[0])
    if any(len(row) != n_cols for row in m):
        raise ValueError("ragged matrix")
    target = _targets(overall, n_cols)
    n_obs = overall.n_observed

    if any(x not in CELL_VALUES for row in m for x in row):
        return False, "entry range"
    for row in m:
        if _row_problem(row):
            return False, "row molecularity"
    for j in range(n_cols):
        if sum(row[j] for row in m) != target[j]:
            return False, "stoichiometric consistency"
    if rules.sign_consistent:
        for j in range(n_obs):
            if any(row[j] * target[j] < 0 for row in m):
                return False, "sign consistency"

    first_made = []
    for j in range(n_obs, n_cols):
        col = [row[j] for row in m]
        made = next((i for i, x in enumerate(col) if x > 0), None)
        used = next((i for i, x in enumerate(col) if x < 0), None)
        if made is None or used is None:
            return False, "intermediate ordering"
        if rules.strict_order and not made < used:
            return False, "intermediate ordering"
        if not made <= used:
            return False, "intermediate ordering"
        if rules.cumulative and min(itertools.accumulate(col)) < 0:
            return False, "intermediate availability"
        first_made.append(made)
    if rules.canonical_labels and first_made != sorted(first_made):
        return False, "canonical labeling"
    return True, None


def feasible_rows(overall: OverallReaction, n_species: int, rules: RuleSet = DEFAULT_RULES) -> List[Tuple[int, ...]]:
    """All rows obeying molecularity (and sign consistency), in lexicographic order."""
    target = _targets(overall, n_species)
    n_obs = overall.n_observed
    rows = []
    for row in itertools.product(CELL_VALUES, repeat=n_species):
        if _row_problem(row):
            continue
        if rules.sign_consistent and any(row[j] * target[j] < 0 for j in range(n_obs)):
            continue
        rows.append(row)
    return rows


@dataclass
class SearchStats:
    nodes: int = 0
    pruned: int = 0
    emitted: int = 0


class _Search:
    """Depth-first search over whole rows.

    Each expansion scores every candidate row at once (numpy) and keeps the
    ones that leave the partial matrix completable; the last row is fixed by
    the remaining column gap, so it is looked up rather than searched.
    """

    def __init__(self, n_steps, overall, n_species, rules, deadline=None, limit=None):
        self.n_steps = n_steps
        self.n_obs = overall.n_observed
        self.n_species = n_species
        self.target = np.array(_targets(overall, n_species), dtype=np.int64)
        self.overall = overall
        self.rules = rules
        self.row_list = feasible_rows(overall, n_species, rules)
        self.rows = np.array(self.row_list, dtype=np.int64).reshape(-1, n_species)
        self.row_index = {row: i for i, row in enumerate(self.row_list)}
        self.deadline = deadline
        self.limit = limit
        self.found: List[Matrix] = []
        self.stats = SearchStats()
        self.complete = True

        t = self.target[: self.n_obs]
        self.reactant_cols = np.flatnonzero(t < 0)
        self.product_cols = np.flatnonzero(t > 0)
        self.inter_cols = np.arange(self.n_obs, n_species)
        self.made = (self.rows[:, self.n_obs:] > 0) if n_species > self.n_obs else None

    def _keep(self, sums, produced, remaining):
        """Boolean mask: which rows extend ``sums`` into a completable prefix."""
        new = sums[None, :] + self.rows
        gap = self.target[None, :] - new
        keep = np.all(np.abs(gap) <= 2 * remaining, axis=1)
        if self.rules.cumulative and self.inter_cols.size:
            keep &= np.all(new[:, self.inter_cols] >= 0, axis=1)
        if self.rules.sign_consistent:
            # observed columns only move toward their target from here on
            keep &= np.all(gap[:, self.reactant_cols] <= 0, axis=1)
            keep &= np.all(gap[:, self.product_cols] >= 0, axis=1)
            need_in = -gap[:, self.reactant_cols].sum(axis=1)
            need_out = gap[:, self.product_cols].sum(axis=1)
            stock = new[:, self.inter_cols].sum(axis=1)
            if self.made is not None:
                unmade = np.sum(~(produced[None, :] | self.made), axis=1)
            else:
                unmade = np.zeros(len(self.rows), dtype=np.int64)
            # x = intermediate molecules still to be produced; consumption = x + stock
            lo = np.maximum.reduce([unmade, remaining - need_in - stock, remaining - need_out, -stock])
            hi = np.minimum(2 * remaining - need_in - stock, 2 * remaining - need_out)
            keep &= lo <= hi
        if self.made is not None and remaining < 2:
            # an unmade intermediate needs one row to make it and a later one to use it
            keep &= np.all(produced[None, :] | self.made, axis=1)
        return keep, new

    def _time_up(self):
        if self.deadline is not None and time.monotonic() > self.deadline:
            self.complete = False
        return not self.complete

    def _full(self):
        return self.limit is not None and len(self.found) >= self.limit

    def run(self, first_rows=None):
        idx = range(len(self.row_list)) if first_rows is None else [self.row_index[r] for r in first_rows]
        zero = np.zeros(self.n_species, dtype=np.int64)
        no_made = np.zeros(self.n_species - self.n_obs, dtype=bool)
        keep, new = self._keep(zero, no_made, self.n_steps - 1)
        self.stats.nodes += len(idx)
        for i in idx:
            if not keep[i]:
                self.stats.pruned += 1
                continue
            made = no_made | (self.made[i] if self.made is not None else no_made)
            self._extend([i], new[i], made)
            if self._time_up() or self._full():
                break
        return self

    def _emit(self, idx):
        m = tuple(self.row_list[i] for i in idx)
        if check_feasible(m, self.overall, self.rules)[0]:
            self.found.append(m)
            self.stats.emitted += 1

    def _extend(self, idx, sums, made):
        depth = len(idx)
        if depth == self.n_steps:
            self._emit(idx)
            return
        if depth == self.n_steps - 1:
            self.stats.nodes += 1
            j = self.row_index.get(tuple(int(x) for x in self.target - sums))
            if j is None:
                self.stats.pruned += 1
                return
            self._emit(idx + [j])
            return
        if self._time_up() or self._full():
            return
        remaining = self.n_steps - depth - 1
        keep, new = self._keep(sums, made, remaining)
        self.stats.nodes += len(keep)
        survivors = np.flatnonzero(keep)
        self.stats.pruned += len(keep) - len(survivors)
        for j in survivors:
            nxt = made | self.made[j] if self.made is not None else made
            idx.append(int(j))
            self._extend(idx, new[j], nxt)
            idx.pop()
            if not self.complete or self._full():
                return


def _worker(args):
    n_steps, overall, n_species, rules, first_rows, deadline, limit = args
    search = _Search(n_steps, overall, n_species, rules, deadline, limit).run(first_rows)
    return search.found, search.complete, search.stats


def enumerate_mechanisms(
    plan: IterationPlan,
    overall: OverallReaction,
    time_budget: Optional[float] = None,
    workers: int = 1,
    rules: RuleSet = DEFAULT_RULES,
    limit: Optional[int] = None,
    stats: Optional[SearchStats] = None,
) -> Tuple[List[Matrix], bool]:
    """Every feasible matrix of the plan's shape, sorted lexicographically.

    The search tree is split by the first row: each worker owns a disjoint
    set of first rows and the results are merged and sorted, so the output
    does not depend on ``workers``.  When ``time_budget`` (seconds) runs out
    the matrices found so far are returned with ``complete = False``.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    n_steps, n_species = plan.n_steps, plan.n_species
    if n_steps < 1 or n_species < 1:
        return [], True
    deadline = None if time_budget is None else time.monotonic() + time_budget

    first_rows = feasible_rows(overall, n_species, rules)
    if workers == 1 or len(first_rows) < 2:
        results = [_worker((n_steps, overall, n_species, rules, first_rows, deadline, limit))]
    else:
        chunks = [first_rows[i::workers] for i in range(workers)]
        jobs = [(n_steps, overall, n_species, rules, chunk, deadline, limit) for chunk in chunks if chunk]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_worker, jobs))

    found: List[Matrix] = []
    complete = True
    for part, part_complete, part_stats in results:
        found.extend(part)
        complete = complete and part_complete
        if stats is not None:
            stats.nodes += part_stats.nodes
            stats.pruned += part_stats.pruned
            stats.emitted += part_stats.emitted
    found.sort()
    if limit is not None:
        found = found[:limit]
    LOG.debug("enumerated %d matrices of shape %dx%d (complete=%s)", len(found), n_steps, n_species, complete)
    return found, complete


def enumerate_bruteforce(plan, overall: OverallReaction, rules: RuleSet = DEFAULT_RULES) -> List[Matrix]:
    """Filter all 5 ** (r * c) raw matrices through ``check_feasible``.

    Correctness oracle for small shapes only.
    """
    if isinstance(plan, IterationPlan):
        n_steps, n_species = plan.n_steps, plan.n_species
    else:
        n_steps, n_species = plan
    if search_space_size((n_steps, n_species)) > BRUTEFORCE_LIMIT:
        raise ValueError("brute force over %d matrices exceeds the guard" % search_space_size((n_steps, n_species)))
    _targets(overall, n_species)
    out = []
    # rows are generated in lexicographic order, so the product is lexicographic too
    raw_rows = list(itertools.product(CELL_VALUES, repeat=n_species))
    for m in itertools.product(raw_rows, repeat=n_steps):
        if check_feasible(m, overall, rules)[0]:
            out.append(m)
    return out


def canonical_key(m, n_obs: int) -> Matrix:
    """Representative of ``m`` under row permutation and intermediate relabelling.

    Matrices sharing a key give the same mass-action model up to a
    permutation of rate constants and of unobserved states.
    """
    m = np.asarray(m, dtype=int)
    obs, inter = m[:, :n_obs], m[:, n_obs:]
    best = None
    for perm in itertools.permutations(range(inter.shape[1])):
        cand = np.hstack([obs, inter[:, list(perm)]])
        key = tuple(sorted(tuple(int(x) for x in row) for row in cand))
        if best is None or key < best:
            best = key
    return best


def model_classes(mats: Sequence[Matrix], n_obs: int) -> Dict[Matrix, List[int]]:
    """Group matrix indices by canonical key, keeping first-occurrence order."""
    groups: Dict[Matrix, List[int]] = {}
    for i, m in enumerate(mats):
        groups.setdefault(canonical_key(m, n_obs), []).append(i)
    return groups


@dataclass
class VariantResult:
    rules: RuleSet
    counts: List[int]
    matches: bool


def search_rule_variants(cases, time_budget: Optional[float] = None) -> List[VariantResult]:
    """Count candidates for every rule variant.

    ``cases`` is a list of ``(plan, overall, expected_count)``.  Returns one
    entry per variant of the four switches in ``RuleSet``; those with
    ``matches`` reproduce every expected count.
    """
    results = []
    for flags in itertools.product((True, False), repeat=4):
        rules = RuleSet(*flags)
        counts = [len(enumerate_mechanisms(plan, ov, time_budget, rules=rules)[0]) for plan, ov, _ in cases]
        results.append(VariantResult(rules, counts, all(c == e for c, (_, _, e) in zip(counts, cases))))
    return results

import pytest

from mechfinder.problem import (IterationPlan, OverallReaction, ProblemSpec, default_names, molecularity_bound,
                                plan_iteration, suggest_minimum_size, validate)


def spec(**kw):
    base = dict(overall=OverallReaction(("A", "B", "C"), (-4, 1, 1)), min_steps=2, min_species=3)
    base.update(kw)
    return ProblemSpec(**base)


def test_valid_spec_has_no_violations():
    assert validate(spec()).ok


def test_min_species_below_observed():
    report = validate(spec(min_species=2))
    assert not report.ok
    assert any("min_species below observed count" in v for v in report.violations)


def test_empty_bounds():
    report = validate(spec(rate_bounds=(5.0, 5.0)))
    assert any("empty bounds interval" in v for v in report.violations)


def test_unbalanced_overall_reaction_is_reported():
    bad = OverallReaction(("A", "B"), (-1, 0))
    assert bad.problems()
    assert not validate(spec(overall=bad, min_species=2)).ok


def test_plan_grows_one_step_and_one_intermediate():
    s = spec()
    assert plan_iteration(s, 1) == IterationPlan(1, 2, 3, 0)
    assert plan_iteration(s, 3) == IterationPlan(3, 4, 5, 2)
    with pytest.raises(ValueError):
        plan_iteration(s, 0)
    with pytest.raises(ValueError):
        plan_iteration(s, s.max_iterations + 1)


def test_overall_string():
    assert str(OverallReaction(("A", "B", "C"), (-4, 1, 1))) == "4A -> B + C"


def test_molecularity_bound():
    assert molecularity_bound(OverallReaction(("A", "B", "C"), (-4, 1, 1))) == 2
    assert molecularity_bound(OverallReaction(("A", "B", "C"), (-1, 3, 1))) == 2


@pytest.mark.parametrize("stoich,expected", [((-4, 1, 1), (2, 3)), ((-1, 3, 1), (3, 4))])
def test_suggest_minimum_size(stoich, expected):
    assert suggest_minimum_size(OverallReaction(("A", "B", "C"), stoich)) == expected


def test_default_names_continue_after_observed():
    assert default_names(5, ["A", "B", "C"]) == ["A", "B", "C", "D", "E"]
    assert default_names(6, ["A", "B", "C", "D"]) == ["A", "B", "C", "D", "E", "F"]

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from mechfinder.genmech import enumerate_mechanisms
from mechfinder.integrate import conserved_vectors
from mechfinder.problem import IterationPlan, OverallReaction
from mechfinder.translate import (ode_strings, ode_terms, parse_reaction_strings, rhs, steps_to_matrix,
                                  to_kinetic_model, to_reaction_strings)

EXAMPLE = [[-1, -1, 0, 1], [0, -1, 1, -1]]
HYP_TRUE = [[-2, 1, 0, 0, 0], [-1, 0, 0, 1, 0], [0, 0, 0, -1, 1], [-1, 0, 1, 0, -1]]
HYP_THETA = np.array([0.1, 0.2, 0.13, 0.25])


def symbolic_rhs(matrix, names, convention="mass_action"):
    """Independent oracle: mass action written out with sympy."""
    m = np.asarray(matrix)
    conc = sp.symbols(["C_%s" % n for n in names])
    ks = sp.symbols(["k%d" % (i + 1) for i in range(m.shape[0])])
    out = [0] * m.shape[1]
    for i, row in enumerate(m):
        rate = ks[i]
        for j, x in enumerate(row):
            if x < 0:
                rate *= conc[j] ** (-x)
        for j, x in enumerate(row):
            if x:
                coeff = x if convention == "mass_action" else int(np.sign(x))
                out[j] += coeff * rate
    return conc, ks, [sp.expand(e) for e in out]


def test_reaction_strings_of_two_step_example():
    assert to_reaction_strings(EXAMPLE, "ABCD") == ["A + B -> D", "B + D -> C"]
    assert to_reaction_strings([[-2, 1, 0]], "ABC") == ["2A -> B"]
    assert to_reaction_strings([[-1, 1]], "AB") == ["A -> B"]


def test_default_names_extend_observed():
    assert to_reaction_strings(HYP_TRUE, ["A", "B", "C"]) == ["2A -> B", "A -> D", "D -> E", "A + E -> C"]


def test_two_step_example_ode_terms():
    model = to_kinetic_model(EXAMPLE)
    assert ode_strings(model, "ABCD") == [
        "dC_A/dt = -k1*C_A*C_B",
        "dC_B/dt = -k1*C_A*C_B - k2*C_B*C_D",
        "dC_C/dt = k2*C_B*C_D",
        "dC_D/dt = k1*C_A*C_B - k2*C_B*C_D",
    ]


@pytest.mark.parametrize("convention", ["mass_action", "as_printed"])
@pytest.mark.parametrize("matrix", [EXAMPLE, HYP_TRUE, [[-1, 0, 0, 0, 1, 0], [0, -1, 0, 0, -1, 1], [0, 0, 1, 1, 0, -1]]])
def test_rhs_matches_symbolic_oracle(matrix, convention, rng):
    names = "ABCDEF"[: len(matrix[0])]
    conc, ks, exprs = symbolic_rhs(matrix, names, convention)
    f = sp.lambdify([conc, ks], exprs)
    model = to_kinetic_model(matrix, convention)
    for _ in range(20):
        c = rng.uniform(0, 10, len(names))
        k = rng.uniform(0, 10, len(matrix))
        np.testing.assert_allclose(rhs(model, c, k), f(c, k), rtol=1e-13, atol=1e-12)


def test_hand_evaluated_rhs():
    model = to_kinetic_model(EXAMPLE)
    np.testing.assert_array_equal(rhs(model, [1, 1, 0, 0], [1, 1]), [-1, -1, 0, 1])
    printed = to_kinetic_model(HYP_TRUE, "as_printed", HYP_THETA)
    assert rhs(printed, [10, 0, 2, 0, 0])[0] == pytest.approx(-12.0)
    # mass action counts the two A molecules consumed by 2A -> B
    assert rhs(to_kinetic_model(HYP_TRUE, theta=HYP_THETA), [10, 0, 2, 0, 0])[0] == pytest.approx(-22.0)


def test_d_equation_sign():
    terms = ode_terms(to_kinetic_model(HYP_TRUE), "ABCDE")
    assert terms[3] == [(1, 2, ("A",)), (-1, 3, ("D",))]


def test_zero_rate_and_zero_state():
    model = to_kinetic_model([[-1, 1]])
    assert np.all(rhs(model, [3.0, 1.0], [0.0]) == 0)
    assert np.all(rhs(to_kinetic_model(HYP_TRUE), np.zeros(5), HYP_THETA) == 0)


def test_conservation_identities_hold(rng):
    model = to_kinetic_model(HYP_TRUE, theta=HYP_THETA)
    vectors = conserved_vectors(model)
    assert vectors
    for _ in range(100):
        dc = rhs(model, rng.uniform(0, 10, 5))
        for w in vectors:
            assert abs(w @ dc) <= 1e-12 * max(1.0, np.abs(dc).max())
    # the printed "+k3 C_D" would break A + 2B + 2C + D + E conservation
    w = np.array([1, 2, 2, 1, 1])
    assert any(np.array_equal(v, w) or np.array_equal(v, -w) for v in vectors)
    c = np.array([1.0, 0, 0, 2.0, 0])
    dc = rhs(model, c)
    dc_typo = dc.copy()
    dc_typo[3] += 2 * HYP_THETA[2] * c[3]
    assert abs(w @ dc_typo) > 0.1


def test_column_sums_round_trip():
    mats, _ = enumerate_mechanisms(IterationPlan(1, 3, 5, 2), OverallReaction(("A", "B", "C"), (-1, 3, 1)))
    for m in mats:
        model = to_kinetic_model(m)
        np.testing.assert_array_equal(model.stoich.sum(axis=0), np.asarray(m).sum(axis=0))


def test_infeasible_matrix_is_rejected():
    with pytest.raises(ValueError, match="infeasible"):
        to_kinetic_model([[-3, 1, 1]])
    with pytest.raises(ValueError):
        to_kinetic_model([[0, 0, 0]])


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        rhs(to_kinetic_model(EXAMPLE), [1, 2, 3], [1, 1])
    with pytest.raises(ValueError):
        to_kinetic_model(EXAMPLE).with_theta([1.0])


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(enumerate_mechanisms(IterationPlan(3, 4, 5, 2), OverallReaction(("A", "B", "C"), (-4, 1, 1)))[0]))
def test_strings_round_trip(m):
    names = "ABCDE"
    steps = parse_reaction_strings(to_reaction_strings(m, names), names)
    assert steps == to_kinetic_model(m).steps
    assert steps_to_matrix(steps, 5).tolist() == [list(r) for r in m]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 10), min_size=5, max_size=5), st.integers(0, 4))
def test_boundary_nonnegativity(c, j):
    c = np.array(c)
    c[j] = 0.0
    assert rhs(to_kinetic_model(HYP_TRUE), c, HYP_THETA)[j] >= 0


def test_parse_errors():
    with pytest.raises(ValueError):
        parse_reaction_strings(["A + B"], "AB")
    with pytest.raises(ValueError):
        parse_reaction_strings(["A -> Q"], "AB")
    with pytest.raises(ValueError):
        parse_reaction_strings(["3A -> B"], "AB")

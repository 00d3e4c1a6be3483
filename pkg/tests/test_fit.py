import numpy as np
import pytest

from mechfinder.datagen import Dataset, Experiment, generate, noiseless
from mechfinder.fit import PENALTY, Objective, estimate, sse, start_points
from mechfinder.integrate import simulate
from mechfinder.translate import to_kinetic_model

T = np.linspace(0, 10, 30)


def first_order_data(k=0.5, noise=0.0, seed=0):
    model = to_kinetic_model([[-1, 1]], theta=[k])
    rng = np.random.default_rng(seed)
    exps = []
    for a0 in (1.0, 2.0):
        y = simulate(model, [a0, 0.0], T).states
        exps.append(Experiment([a0, 0.0], T, y + noise * rng.standard_normal(y.shape)))
    return Dataset(exps, ("A", "B"))


def test_first_order_recovery():
    res = estimate(to_kinetic_model([[-1, 1]]), first_order_data(), n_starts=5, seed=1)
    assert res.theta_star[0] == pytest.approx(0.5, rel=0.01)
    assert res.converged
    assert res.n_obs_total == 2 * 30 * 2


def test_sse_oracle_by_hand():
    data = first_order_data()
    model = to_kinetic_model([[-1, 1]])
    expected = 0.0
    for exp in data.experiments:
        a = exp.c0[0] * np.exp(-0.3 * T)
        expected += np.sum((np.column_stack([a, exp.c0[0] - a]) - exp.y) ** 2)
    assert sse(model, [0.3], data) == pytest.approx(expected, rel=1e-5)


def test_guess_at_truth_converges_immediately(hyp):
    data = noiseless(hyp)
    res = estimate(to_kinetic_model(hyp.true_matrix), data, n_starts=1, initial_guess=hyp.theta_true)
    assert res.sse <= 1e-8
    np.testing.assert_allclose(res.theta_star, hyp.theta_true, rtol=1e-3)


def test_aldol_recovery_from_noisy_data(aldol):
    data = generate(aldol, seed=0)
    res = estimate(to_kinetic_model(aldol.true_matrix), data, n_starts=10, seed=0)
    np.testing.assert_allclose(res.theta_star, aldol.theta_true, rtol=0.10)


def test_more_starts_never_worse(hyp):
    data = generate(hyp, seed=2)
    model = to_kinetic_model(hyp.true_matrix)
    one = estimate(model, data, n_starts=1, seed=5)
    many = estimate(model, data, n_starts=4, seed=5)
    assert many.sse <= one.sse
    again = estimate(model, data, n_starts=4, seed=5)
    np.testing.assert_array_equal(many.theta_star, again.theta_star)
    assert many.sse == again.sse


def test_start_points_prefix_property():
    a = start_points(3, (0, 10), 2, seed=9)
    b = start_points(3, (0, 10), 6, seed=9)
    np.testing.assert_array_equal(a, b[:2])
    assert np.all((b >= 0) & (b <= 10))
    g = start_points(3, (0, 10), 3, seed=9, initial_guess=[1, 2, 3])
    np.testing.assert_array_equal(g[0], [1, 2, 3])


def test_theta_stays_in_bounds():
    res = estimate(to_kinetic_model([[-1, 1]]), first_order_data(k=3.0), bounds=(0.0, 1.0), n_starts=3)
    assert res.theta_star[0] == pytest.approx(1.0)


def test_gradient_against_central_difference():
    data = first_order_data(noise=0.05)
    obj = Objective(to_kinetic_model([[-1, 1]]), data)
    theta = np.array([0.4])
    f, g = obj.value_and_grad(theta, np.zeros(1), np.full(1, 10.0))
    h = 1e-5
    central = (obj(theta + h) - obj(theta - h)) / (2 * h)
    assert g[0] == pytest.approx(central, rel=1e-4)
    # at the upper bound the difference step goes backwards and stays inside the box
    f_b, g_b = obj.value_and_grad(np.array([10.0]), np.zeros(1), np.full(1, 10.0))
    assert np.isfinite(g_b[0])


def test_all_starts_failing_gives_penalty():
    data = first_order_data()
    model = to_kinetic_model([[-1, 1]])
    obj = Objective(model, data, max_steps=1)
    res = estimate(model, data, n_starts=2, objective=obj)
    assert res.sse == PENALTY
    assert not res.converged


def test_missing_values_are_skipped():
    data = first_order_data(noise=0.1)
    holed = Dataset([Experiment(e.c0, e.times, e.y.copy()) for e in data.experiments], data.observed_names)
    holed.experiments[0].y[3, 1] = np.nan
    assert holed.n_points == data.n_points - 1
    model = to_kinetic_model([[-1, 1]])
    value = sse(model, [0.5], holed)
    assert np.isfinite(value) and value < sse(model, [0.5], data)


def test_bad_theta_rejected():
    with pytest.raises(ValueError):
        sse(to_kinetic_model([[-1, 1]]), [-1.0], first_order_data())
    with pytest.raises(ValueError):
        estimate(to_kinetic_model([[-1, 1]]), first_order_data(), n_starts=0)

import numpy as np
import pytest

from mechfinder.datagen import CASE_NAMES, case, generate, noiseless
from mechfinder.integrate import simulate


def test_case_names():
    assert set(CASE_NAMES) == {"hypothetical", "aldol", "fructose"}
    with pytest.raises(ValueError):
        case("unknown")


@pytest.mark.parametrize("name,n_obs,sd,t_end", [("hypothetical", 3, 0.15, 10.0), ("aldol", 4, 0.15, 10.0),
                                                  ("fructose", 3, 0.2, 90.0)])
def test_case_layout(name, n_obs, sd, t_end):
    cs = case(name)
    data = generate(cs, seed=3)
    assert data.n_observed == n_obs
    assert len(data.experiments) == 5
    assert data.n_points == 5 * 30 * n_obs
    assert np.all(cs.noise_sd == sd)
    for exp in data.experiments:
        assert exp.times[0] == 0 and exp.times[-1] == t_end and exp.times.size == 30


def test_published_initial_conditions(hyp, aldol, fructose):
    assert [tuple(x) for x in hyp.experiments] == [(10, 0, 2, 0, 0), (10, 2, 0, 0, 0), (10, 2, 2, 0, 0),
                                                   (5, 0, 0, 0, 0), (10, 0, 0, 0, 0)]
    assert [tuple(x) for x in aldol.experiments][0] == (5, 10, 0, 0, 0, 0)
    assert [tuple(x) for x in fructose.experiments] == [(4, 0, 0), (6, 2, 1), (4, 2, 0), (4, 0, 1), (6, 2, 0)]
    np.testing.assert_array_equal(aldol.theta_true, [0.759, 0.293, 0.681])


def test_same_seed_same_data_and_different_seed_differs(hyp):
    a, b, c = generate(hyp, 7), generate(hyp, 7), generate(hyp, 8)
    for x, y in zip(a.experiments, b.experiments):
        np.testing.assert_array_equal(x.y, y.y)
    assert not np.array_equal(a.experiments[0].y, c.experiments[0].y)


def test_noise_statistics(aldol):
    clean = noiseless(aldol)
    resid = np.concatenate([(generate(aldol, s).experiments[0].y - clean.experiments[0].y).ravel() for s in range(40)])
    assert abs(resid.mean()) < 0.01
    assert resid.std() == pytest.approx(0.15, rel=0.05)


def test_noiseless_equals_truth(hyp):
    clean = noiseless(hyp)
    traj = simulate(hyp.truth, hyp.experiments[0], hyp.times)
    np.testing.assert_array_equal(clean.experiments[0].y, traj.states[:, :3])


def test_problem_spec_from_case(fructose):
    spec = fructose.problem()
    assert (spec.min_steps, spec.min_species) == (3, 5)
    assert spec.noise_model == (0.2, 0.2, 0.2)

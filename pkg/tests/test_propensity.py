import numpy as np
import pytest

from hybrid_control.core import ObservationTable
from hybrid_control.errors import DegenerateDesign
from hybrid_control.glm import GlmFit
from hybrid_control.core import LOGIT
from hybrid_control.propensity import PsFit, adjusted_weight, fit_propensity, odds_weights
from hybrid_control.simulation import Scenario, generate_dataset, scaled

from conftest import make_table


def _ps(odds, gamma=(0.0,)):
    glm = GlmFit(np.array(gamma), LOGIT, np.ones(len(odds)), True, 0, 0.0)
    return PsFit(np.array(gamma), (), np.asarray(odds, dtype=float), 0.0, glm)


def test_intercept_only_is_logit_of_cohort_fraction():
    t = make_table(n_ext=100, n_ctl=50, n_trt=100)
    ps = fit_propensity(t, t.design())
    assert ps.gamma[0] == pytest.approx(np.log(1.5), abs=1e-10)


def test_equal_cohorts_give_zero():
    t = make_table(n_ext=40, n_ctl=20, n_trt=20)
    assert fit_propensity(t, t.design()).gamma[0] == pytest.approx(0.0, abs=1e-12)


def test_score_vanishes_and_odds_positive():
    t = make_table(seed=5, n_ext=80, n_ctl=40, n_trt=60)
    S = t.design(["x1", "x2"])
    ps = fit_propensity(t, S, ("x1", "x2"))
    p = 1 / (1 + np.exp(-S @ ps.gamma))
    assert np.max(np.abs((t.z - p) @ S)) <= 1e-10 * t.n
    assert np.all(ps.fitted_odds > 0)
    order = np.argsort(S @ ps.gamma)
    assert np.all(np.diff(ps.fitted_odds[order]) >= 0)


def test_gaussian_bayes_rule_coefficients():
    # X ~ N(0, 1) in the trial and N(-0.5, 1.5^2) externally: the log density
    # ratio is quadratic with x-coefficient 0.5/2.25 and x^2 coefficient
    # -(1/2 - 1/4.5).
    sc = scaled(Scenario(), 1000)
    t = generate_dataset(sc, 7)
    S = t.design(["x1", "x1^2"])
    ps = fit_propensity(t, S)
    p = 1 / (1 + np.exp(-S @ ps.gamma))
    se = np.sqrt(np.diag(np.linalg.inv((S * (p * (1 - p))[:, None]).T @ S)))
    gamma0 = np.log(150 / 100) + np.log(1.5) + 0.25 / 4.5
    expected = np.array([gamma0, 2 / 9, -5 / 18])
    assert np.all(np.abs(ps.gamma - expected) < 4 * se)
    np.testing.assert_allclose(ps.gamma[1:], [0.2222, -0.2778], atol=0.02)


def test_propensity_requires_both_cohorts():
    t = ObservationTable([1, 1, 1], [0, 1, 1], [0, 1, 2], np.zeros((3, 1)))
    with pytest.raises(DegenerateDesign):
        fit_propensity(t, t.design())


def test_adjusted_weight_hand_values():
    t = ObservationTable([1, 0, 0], [0, 0, 0], [2, 0, 4], np.zeros((3, 1)))
    assert adjusted_weight(_ps([1.0, 2.0, 0.5]), t, 1.0) == pytest.approx(0.8)
    assert adjusted_weight(_ps([1.0, 2.0, 0.5]), t, 0.0) == 0.0
    assert adjusted_weight(_ps([1.0, 1.0, 1.0]), t, 0.5) == 0.5


def test_effective_size_identity():
    t = make_table(seed=9, n_ext=70)
    ps = fit_propensity(t, t.design(["x1", "x2"]))
    for w in (0.1, 0.25, 0.5, 1.0):
        wt = odds_weights(ps, t, w)
        assert wt[t.z == 0].sum() == pytest.approx(w * 70, rel=1e-12)
        assert np.all(wt[t.z == 1] == 1.0)


def test_adjusted_weight_needs_external_rows():
    t = ObservationTable([1, 1], [0, 1], [0, 1], np.zeros((2, 1)))
    with pytest.raises(DegenerateDesign):
        adjusted_weight(_ps([1.0, 1.0]), t, 0.5)

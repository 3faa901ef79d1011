import numpy as np
import pytest

from hybrid_control.core import (
    DIFFERENCE,
    LOG_ODDS_RATIO,
    LOG_RATIO,
    ObservationTable,
    effect_scale,
    link_family,
    validate_table,
)
from hybrid_control.errors import DegenerateDesign, MalformedRow, ScaleDomainError


def _table(cells):
    """cells: list of (z, a, count)."""
    z = np.concatenate([np.full(k, zz) for zz, _, k in cells])
    a = np.concatenate([np.full(k, aa) for _, aa, k in cells])
    return ObservationTable(z, a, np.zeros(z.size), np.zeros((z.size, 1)))


def test_design_info_matches_simulation_layout():
    info = validate_table(_table([(0, 0, 100), (1, 0, 50), (1, 1, 100)]))
    assert info.tau_hat == 0.6
    assert info.pi_hat == 2 / 3
    assert (info.n, info.n_external, info.n_internal_control, info.n_treated) == (250, 100, 50, 100)


def test_treated_external_row_is_malformed():
    t = ObservationTable([1, 1, 0], [0, 1, 1], [0, 0, 0], np.zeros((3, 1)))
    with pytest.raises(MalformedRow) as exc:
        validate_table(t)
    assert exc.value.row == 2


def test_nonbinary_indicator_is_malformed():
    t = ObservationTable([1, 1, 2], [0, 1, 0], [0, 0, 0], np.zeros((3, 1)))
    with pytest.raises(MalformedRow):
        validate_table(t)


def test_all_internal_controls_is_degenerate():
    with pytest.raises(DegenerateDesign):
        validate_table(_table([(1, 0, 3)]))


@pytest.mark.parametrize("cells", [
    [(0, 0, 3), (1, 1, 2)],          # no internal controls
    [(1, 0, 2), (1, 1, 2)],          # no external rows: tau = 1
])
def test_other_degenerate_designs(cells):
    with pytest.raises(DegenerateDesign):
        validate_table(_table(cells))


def test_covariate_dimension_mismatch():
    with pytest.raises(MalformedRow):
        ObservationTable([1, 0], [0, 0], [1, 2], np.zeros((3, 1)))


def test_table_is_immutable():
    t = _table([(0, 0, 2), (1, 0, 1), (1, 1, 1)])
    with pytest.raises(ValueError):
        t.y[0] = 3.0


def test_derived_columns():
    t = ObservationTable([1, 1, 0], [0, 1, 0], [0, 0, 0], np.array([[4.0, 2.0], [9.0, 3.0], [1.0, -1.0]]),
                         ("cd4", "age"))
    d = t.derive(sqrt=["cd4"], square=["age"], interact=[("age", "sqrt(cd4)")])
    assert d.names == ("cd4", "age", "sqrt(cd4)", "age^2", "age*sqrt(cd4)")
    np.testing.assert_array_equal(d.column("age*sqrt(cd4)"), [4.0, 9.0, -1.0])
    np.testing.assert_array_equal(d.design(["age^2"]), [[1, 4], [1, 9], [1, 1]])


def test_link_functions():
    eta = np.array([-2.0, 0.0, 1.5])
    assert link_family("logit").h(np.array([0.0]))[0] == 0.5
    for kind in ("identity", "log", "logit"):
        fam = link_family(kind)
        step = 1e-6
        fd = (fam.h(eta + step) - fam.h(eta - step)) / (2 * step)
        np.testing.assert_allclose(fam.h_dot(eta), fd, rtol=1e-7)
        assert np.all(fam.h_dot(eta) > 0)


@pytest.mark.parametrize("scale,grid", [
    (DIFFERENCE, np.linspace(-5, 5, 101)),
    (LOG_RATIO, np.linspace(0.01, 10, 101)),
    (LOG_ODDS_RATIO, np.linspace(0.01, 0.99, 99)),
])
def test_effect_scales_strictly_increasing(scale, grid):
    vals = np.array([scale(m) for m in grid])
    assert np.all(np.diff(vals) > 0)
    assert all(scale.derivative(m) > 0 for m in grid)


def test_effect_scale_domain_errors():
    with pytest.raises(ScaleDomainError):
        LOG_RATIO(0.0)
    with pytest.raises(ScaleDomainError):
        effect_scale("log_odds_ratio")(1.0)

"""Rational matrix / state-space conversion and inversion invariants."""

import numpy as np
import pytest

from portstab.polyrat import Polynomial, RationalFunction
from portstab.ratmat import (
    ImproperMatrixError,
    RationalMatrix,
    StateSpace,
    auto_grid,
    log_grid,
    minreal,
    rm_from_ss,
    rm_inv,
    rm_is_stable,
    rm_is_unimodular,
    rm_to_ss,
    ss_det,
)

from conftest import random_proper_rm, random_stable_rm


def _rel_sup(got, want):
    scale = 1.0 + np.max(np.abs(want))
    return float(np.max(np.abs(got - want))) / scale


def test_realization_round_trip_stable_matrices():
    rng = np.random.default_rng(11)
    for _ in range(10):
        M = random_stable_rm(rng, 2)
        grid = auto_grid(M.entry_poles())
        back = rm_from_ss(rm_to_ss(M))
        assert _rel_sup(back.eval_grid(grid), M.eval_grid(grid)) < 1e-7


def test_inverse_involution():
    rng = np.random.default_rng(22)
    for _ in range(8):
        # well-conditioned: dominant identity feedthrough
        M = random_proper_rm(rng, 2, order=3, stable=True)
        M = M + RationalMatrix.from_const(5.0 * np.eye(2))
        grid = auto_grid(M.entry_poles())
        MM = rm_inv(rm_inv(M))
        assert _rel_sup(MM.eval_grid(grid), M.eval_grid(grid)) < 1e-6


def test_inverse_matches_pointwise_inverse():
    rng = np.random.default_rng(33)
    M = random_proper_rm(rng, 2, order=3, stable=True)
    M = M + RationalMatrix.from_const(4.0 * np.eye(2))
    grid = auto_grid(M.entry_poles())
    Minv = rm_inv(M)
    for k, s0 in enumerate(grid):
        want = np.linalg.inv(M.eval(s0))
        got = Minv.eval(s0)
        assert np.max(np.abs(got - want)) < 1e-6 * (1.0 + np.max(np.abs(want)))


def test_det_multiplicative_on_grid():
    rng = np.random.default_rng(44)
    for _ in range(6):
        M = random_stable_rm(rng, 2)
        N = random_stable_rm(rng, 2)
        grid = log_grid(1e-1, 1e1, 21)
        dm = M.det()
        dn = N.det()
        dmn = (M @ N).det()
        for s0 in grid:
            want = dm(s0) * dn(s0)
            assert abs(dmn(s0) - want) <= 1e-8 * (1.0 + abs(want))


def test_minimal_order_bounded_by_entry_degrees():
    rng = np.random.default_rng(55)
    for _ in range(8):
        M = random_stable_rm(rng, 2)
        bound = sum(int(e.den.degree)
                    for row in M.entries for e in row)
        assert rm_to_ss(M).order <= bound


def test_shared_pole_realization_is_minimal():
    # [[1/(s+1), 2/(s+1)]] has McMillan degree 1, not 2
    f = RationalFunction.make([1.0], [1.0, 1.0])
    M = RationalMatrix([[f, f * 2.0]])
    assert rm_to_ss(M).order == 1


def test_improper_entry_rejected_by_realization():
    s = RationalFunction.s()
    M = RationalMatrix([[s]])
    with pytest.raises(ImproperMatrixError):
        rm_to_ss(M)


def test_ss_det_matches_symbolic_det():
    rng = np.random.default_rng(66)
    for _ in range(6):
        M = random_stable_rm(rng, 2)
        d1 = ss_det(rm_to_ss(M))
        d2 = M.det()
        for s0 in log_grid(1e-1, 1e1, 15):
            want = d2(s0)
            assert abs(d1(s0) - want) <= 1e-7 * (1.0 + abs(want))


def test_singular_matrix_inversion_fails():
    f = RationalFunction.make([1.0], [1.0, 1.0])
    M = RationalMatrix([[f, f], [f, f]])
    with pytest.raises(ZeroDivisionError):
        rm_inv(M)


def test_stability_report_verdicts():
    rng = np.random.default_rng(77)
    M = random_stable_rm(rng, 2)
    rep = rm_is_stable(M)
    assert rep.is_stable and rep.margin > 0
    bad = RationalMatrix([[RationalFunction.make([1.0], [-1.0, 1.0])]])
    rep = rm_is_stable(bad)
    assert not rep.is_stable


def test_unimodular_detection():
    # constant invertible matrix is unimodular; 1/(s+1) entry is not
    assert rm_is_unimodular(RationalMatrix.from_const(np.array(
        [[1.0, 2.0], [0.0, 3.0]])))
    f = RationalFunction.make([1.0], [1.0, 1.0])
    bi = RationalFunction.make([2.0, 1.0], [1.0, 1.0])
    assert rm_is_unimodular(RationalMatrix([[bi]]))
    assert not rm_is_unimodular(RationalMatrix([[f]]))


def test_minreal_strips_hidden_modes():
    # cascade of a mode and its cancellation leaves order 1
    g = StateSpace(
        np.array([[-1.0, 0.0], [0.0, -5.0]]),
        np.array([[1.0], [0.0]]),
        np.array([[1.0, 0.0]]),
        np.array([[0.0]]),
    )
    assert minreal(g).order == 1


def test_grid_override_env(monkeypatch):
    monkeypatch.setenv("PORTSTAB_GRID", "10,1000,5")
    g = auto_grid([-1.0])
    assert g.size == 5
    assert np.isclose(abs(g[0]), 10.0) and np.isclose(abs(g[-1]), 1000.0)
    monkeypatch.setenv("PORTSTAB_GRID", "not-a-grid")
    with pytest.raises(ValueError):
        auto_grid([-1.0])


def test_json_round_trip():
    rng = np.random.default_rng(88)
    M = random_stable_rm(rng, 2)
    back = RationalMatrix.from_json_obj(M.to_json_obj())
    grid = log_grid(1e-1, 1e1, 11)
    assert _rel_sup(back.eval_grid(grid), M.eval_grid(grid)) < 1e-12
    g = rm_to_ss(M)
    g2 = StateSpace.from_json_obj(g.to_json_obj())
    np.testing.assert_array_equal(g.A, g2.A)
    np.testing.assert_array_equal(g.D, g2.D)

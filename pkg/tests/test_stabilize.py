"""Compensator synthesis, parametrization, and interconnection invariants."""

import numpy as np
import pytest

from portstab.coprime import dcf_from_ss, siso_coprime
from portstab.polyrat import Polynomial, RationalFunction, rf_is_stable
from portstab.ratmat import RationalMatrix, rm_is_stable
from portstab.stabilize import (
    YoulaParamMatrix,
    YoulaParamScalar,
    check_single_port,
    hybrid_compensator,
    interconnect,
    robustness_sample,
    single_port_compensator,
)

from conftest import (
    parametrization_identity_residual,
    random_proper_rf,
    random_proper_rm,
    random_stable_rf,
)


def _coprime_or_none(G):
    try:
        return siso_coprime(G)
    except ValueError:
        return None


def test_parametrization_identity_random_pairs():
    rng = np.random.default_rng(10)
    done = 0
    while done < 50:
        c = _coprime_or_none(random_proper_rf(rng))
        if c is None:
            continue
        q = random_stable_rf(rng)
        assert parametrization_identity_residual(c, q) < 1e-9
        done += 1


def test_single_port_compensator_always_stabilizes():
    rng = np.random.default_rng(20)
    done = 0
    while done < 30:
        G = random_proper_rf(rng)
        c = _coprime_or_none(G)
        if c is None:
            continue
        q = RationalFunction.zero() if done % 3 == 0 else random_stable_rf(rng)
        try:
            G_c = single_port_compensator(c, q)
        except ValueError:
            continue  # inadmissible q draw (zero at infinity)
        try:
            rep = check_single_port(G, G_c)
        except ValueError as exc:
            # near-cancelling roots in G_c leave the oracle no coprime
            # fraction; skip the draw rather than weaken the assertion
            assert "hidden mode" in str(exc)
            continue
        assert rep.is_stable
        done += 1


def test_single_port_verdicts_agree_on_random_instances():
    # check_single_port raises if its pole test and unit-of-Delta oracle
    # ever disagree; run it across stabilized and arbitrary pairings
    rng = np.random.default_rng(30)
    done = 0
    while done < 100:
        G = random_proper_rf(rng)
        G_c = random_proper_rf(rng)
        if (G + G_c).is_zero:
            continue
        if _coprime_or_none(G) is None or _coprime_or_none(G_c) is None:
            continue
        rep = check_single_port(G, G_c)  # AssertionError on disagreement
        assert rep.residuals["delta_is_unit"] in (0.0, 1.0)
        done += 1


def test_stable_network_accepts_zero_compensator():
    G = RationalFunction.make([1.0], [1.0, 1.0])
    c = siso_coprime(G)
    G_c = single_port_compensator(c, RationalFunction.zero())
    rep = check_single_port(G, G_c)
    assert rep.is_stable


def test_improper_sum_inverse_is_rejected_with_note():
    # (G + G_c)^-1 with stable poles but growth at infinity is not BSBR
    G = RationalFunction.make([0.0, 1.0], [1.0, 1.0])     # s/(s+1)
    G_c = RationalFunction.make([1.0], [2.0, 1.0])        # 1/(s+2)
    rep = check_single_port(G, G_c)
    if not rep.is_stable:
        assert "improper" in rep.notes


def test_degenerate_interconnection_raises():
    G = RationalFunction.make([1.0], [1.0, 1.0])
    with pytest.raises(ValueError, match="degenerate"):
        check_single_port(G, -G)


def test_inadmissible_parameter_rejected():
    G = RationalFunction.make([1.0], [-1.0, 1.0])
    c = siso_coprime(G)
    # unstable q
    with pytest.raises(ValueError, match="inadmissible"):
        YoulaParamScalar(RationalFunction.make([1.0], [-2.0, 1.0]))
    # q = x/d makes the denominator vanish identically
    q_bad = (c.x / c.d).canonical()
    if bool(rf_is_stable(q_bad)):
        with pytest.raises(ValueError, match="vanishes identically"):
            single_port_compensator(c, q_bad)
    # constant q matching the gains at infinity kills biproperness
    q_inf = RationalFunction.const(
        c.x.gain_at_infinity() / c.d.gain_at_infinity())
    if bool(rf_is_stable(q_inf)) and not (c.x - q_inf * c.d).is_zero:
        with pytest.raises(ValueError, match="infinity"):
            single_port_compensator(c, q_inf)


def test_nonminimum_phase_obstruction():
    # a network with an RHP transmission zero never receives a compensator
    # with a pole at that zero, for any admissible parameter
    z = 2.0
    G = RationalFunction(
        Polynomial.from_roots([z]),
        Polynomial.from_roots([-1.0, -3.0])).canonical()
    c = siso_coprime(G)
    rng = np.random.default_rng(40)
    for _ in range(20):
        q = random_stable_rf(rng)
        try:
            G_c = single_port_compensator(c, q)
        except ValueError:
            continue
        poles = G_c.poles()
        if poles.size:
            assert np.min(np.abs(poles - z)) > 1e-3 * (1.0 + abs(z))


def test_hybrid_compensator_invariants_random_networks():
    rng = np.random.default_rng(50)
    for k in range(4):
        T = random_proper_rm(rng, 2, order=3)
        f = dcf_from_ss(T)
        Q = None if k % 2 else RationalMatrix(
            [[random_stable_rf(rng) for _ in range(2)] for _ in range(2)])
        T_c = hybrid_compensator(f, Q)
        res = interconnect(T, T_c, dcf=f, Q=Q)
        assert res.report.is_stable
        assert res.report.residuals["delta_r_identity"] < 1e-6
        assert res.report.residuals["delta_l_identity"] < 1e-6


def test_hybrid_rejects_unstable_parameter():
    rng = np.random.default_rng(60)
    T = random_proper_rm(rng, 2, order=3)
    f = dcf_from_ss(T)
    bad = RationalMatrix([
        [RationalFunction.make([1.0], [-1.0, 1.0]), RationalFunction.zero()],
        [RationalFunction.zero(), RationalFunction.zero()]])
    with pytest.raises(ValueError, match="inadmissible"):
        hybrid_compensator(f, bad)
    with pytest.raises(ValueError, match="inadmissible"):
        YoulaParamMatrix(bad)


def test_interconnect_dimension_mismatch():
    rng = np.random.default_rng(70)
    T = random_proper_rm(rng, 2, order=3)
    T_c1 = random_proper_rm(rng, 1, order=2)
    with pytest.raises(ValueError):
        interconnect(T, T_c1)


def test_interconnect_generic_route_matches_fraction_route():
    rng = np.random.default_rng(80)
    T = random_proper_rm(rng, 2, order=3)
    f = dcf_from_ss(T)
    T_c = hybrid_compensator(f)
    with_f = interconnect(T, T_c, dcf=f)
    without = interconnect(T, T_c)
    grid = f.grid()
    a = with_f.T_hat.eval_grid(grid)
    b = without.T_hat.eval_grid(grid)
    assert np.max(np.abs(a - b)) < 1e-5 * (1.0 + np.max(np.abs(a)))
    assert without.report.is_stable


def test_robustness_deterministic_and_exact_at_zero_eps():
    rng = np.random.default_rng(90)
    T = random_proper_rm(rng, 2, order=3)
    f = dcf_from_ss(T)
    T_c = hybrid_compensator(f)
    r1 = robustness_sample(T, T_c, 1e-3, 25, seed=5, dcf=f)
    r2 = robustness_sample(T, T_c, 1e-3, 25, seed=5, dcf=f)
    assert r1.to_json_obj() == r2.to_json_obj()
    r0 = robustness_sample(T, T_c, 0.0, 5, seed=5, dcf=f)
    assert r0.stable == 5 and r0.unstable == 0 and r0.degenerate == 0
    assert np.isclose(r0.worst_margin, r0.worst_margin)


def test_scalar_pipeline_end_to_end():
    # unstable scalar network through the matrix pipeline
    G = RationalFunction.make([1.0], [-1.0, 1.0])
    T = RationalMatrix([[G]])
    f = dcf_from_ss(T)
    T_c = hybrid_compensator(f)
    res = interconnect(T, T_c, dcf=f)
    assert res.report.is_stable
    rep = check_single_port(G, T_c.entries[0][0])
    assert rep.is_stable
    rb = robustness_sample(T, T_c, 1e-3, 50, seed=11, dcf=f)
    assert bool(rb)

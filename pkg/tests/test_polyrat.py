"""Scalar polynomial / rational function algebra invariants."""

import numpy as np
import pytest

from portstab.polyrat import (
    NEG_INF,
    Polynomial,
    RationalFunction,
    poly_roots,
    rf_is_stable,
    rf_is_unit,
    stability_tol,
)

from conftest import random_proper_rf, random_stable_rf


def test_zero_polynomial_canonical_form():
    z = Polynomial.zero()
    assert z.coeffs.size == 0
    assert z.degree == NEG_INF
    assert z.is_zero
    assert (z + Polynomial([1.0, 2.0])).coeffs.tolist() == [1.0, 2.0]


def test_canonicalization_idempotence():
    rng = np.random.default_rng(101)
    for _ in range(40):
        f = random_proper_rf(rng)
        g = f.canonical()
        h = g.canonical()
        np.testing.assert_array_equal(g.num.coeffs, h.num.coeffs)
        np.testing.assert_array_equal(g.den.coeffs, h.den.coeffs)


def test_root_coefficient_round_trip():
    rng = np.random.default_rng(202)
    for _ in range(30):
        deg = int(rng.integers(1, 9))
        # well-separated roots: spread real parts, occasional conjugate pair
        roots = []
        while len(roots) < deg:
            if deg - len(roots) >= 2 and rng.random() < 0.4:
                re = rng.uniform(-5.0, 5.0)
                im = rng.uniform(1.0, 4.0)
                roots += [complex(re, im), complex(re, -im)]
            else:
                roots.append(complex(rng.uniform(-5.0, 5.0), 0.0))
        roots = np.asarray(roots)
        sep = np.min(np.abs(roots[:, None] - roots[None, :])
                     + np.eye(deg) * 1e9)
        if sep < 0.3:
            continue
        p = Polynomial.from_roots(roots).monic()
        back = Polynomial.from_roots(poly_roots(p)).monic()
        scale = np.max(np.abs(p.coeffs))
        assert np.max(np.abs(back.coeffs - p.coeffs)) < 1e-8 * scale


def test_unit_iff_stable_with_stable_inverse():
    rng = np.random.default_rng(303)
    cases = [random_proper_rf(rng) for _ in range(60)]
    cases += [random_stable_rf(rng) for _ in range(40)]
    cases += [
        RationalFunction.one(),
        RationalFunction.make([1.0], [1.0, 1.0]),           # 1/(s+1)
        RationalFunction.make([2.0, 1.0], [1.0, 1.0]),      # (s+2)/(s+1)
        RationalFunction.make([-2.0, 1.0], [1.0, 1.0]),     # RHP zero
    ]
    for f in cases:
        if f.is_zero:
            continue
        both = bool(rf_is_stable(f)) and bool(rf_is_stable(f.inverse()))
        assert rf_is_unit(f) == both


def test_arithmetic_matches_pointwise_evaluation():
    rng = np.random.default_rng(404)
    for _ in range(25):
        f = random_proper_rf(rng)
        g = random_proper_rf(rng)
        pts = []
        avoid = np.concatenate([f.poles(), g.poles(),
                                g.zeros() if not g.is_zero else np.zeros(0)])
        while len(pts) < 20:
            s0 = complex(rng.uniform(-3, 3), rng.uniform(-3, 3))
            if avoid.size == 0 or np.min(np.abs(avoid - s0)) > 0.2:
                pts.append(s0)
        ops = [
            (f + g, lambda a, b: a + b),
            (f - g, lambda a, b: a - b),
            (f * g, lambda a, b: a * b),
            (f / g, lambda a, b: a / b),
        ]
        for comb, op in ops:
            for s0 in pts:
                want = op(f(s0), g(s0))
                got = comb(s0)
                assert abs(got - want) <= 1e-9 * (1.0 + abs(want))


def test_stability_threshold_is_scale_relative():
    # the margin threshold grows with the pole scale so that huge stable
    # poles with tiny relative round-off are not misclassified
    assert stability_tol([-1e15]) > 1e6 * stability_tol([-1.0])
    v = rf_is_stable(RationalFunction.make([1.0], [1e15, 1.0]))
    assert bool(v)


def test_biproper_allowed_improper_rejected():
    bi = RationalFunction.make([2.0, 1.0], [1.0, 1.0])
    assert bi.is_biproper and bool(rf_is_stable(bi))
    imp = RationalFunction.make([0.0, 0.0, 1.0], [1.0, 1.0])  # s^2/(s+1)
    assert not imp.is_proper
    assert not bool(rf_is_stable(imp))


def test_common_factor_cancellation():
    # (s+1)(s+2) / (s+1)(s+3) reduces to (s+2)/(s+3)
    f = RationalFunction(
        Polynomial.from_roots([-1.0, -2.0]),
        Polynomial.from_roots([-1.0, -3.0])).canonical()
    assert f.den.degree == 1
    assert np.allclose(f.poles(), [-3.0])


def test_degenerate_denominator_rejected():
    with pytest.raises(ZeroDivisionError):
        RationalFunction(Polynomial([1.0]), Polynomial.zero())

"""End-to-end acceptance criteria, one pass/fail line per criterion.

Each test exercises one acceptance gate with its pinned tolerance and
records a single PASS/FAIL summary line (printed in the terminal summary).
"""

import time

import numpy as np
import pytest

from portstab import opamp
from portstab.coprime import dcf_from_ss, dcf_verify, siso_coprime
from portstab.polyrat import Polynomial, RationalFunction
from portstab.ratmat import RationalMatrix, rm_to_ss
from portstab.stabilize import (
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
    record_acceptance,
)


def _sample_scalar_instances(seed=1000, count=50):
    """Seeded proper plants (degree <= 4, mixed stability) with coprime
    fractions, plus three parameters each: zero and two random stable."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        G = random_proper_rf(rng, max_den_deg=4)
        try:
            c = siso_coprime(G)
        except ValueError:
            continue
        qs = [RationalFunction.zero(),
              random_stable_rf(rng, 2), random_stable_rf(rng, 2)]
        out.append((G, c, qs))
    return out


def test_criterion_1_scalar_parametrization_identity():
    t0 = time.monotonic()
    worst = 0.0
    for G, c, qs in _sample_scalar_instances():
        for q in qs:
            worst = max(worst, parametrization_identity_residual(c, q))
    elapsed = time.monotonic() - t0
    ok = worst < 1e-9 and elapsed < 5.0
    record_acceptance(
        ok, "criterion 1 (scalar parametrization identity)",
        f"50 plants x 3 parameters, worst cleared-coefficient residual "
        f"{worst:.2e} (< 1e-9), {elapsed:.1f}s (< 5s)")


def test_criterion_2_single_port_oracle_agreement():
    agreed = 0
    total = 0
    for G, c, qs in _sample_scalar_instances():
        for q in qs:
            try:
                G_c = single_port_compensator(c, q)
            except ValueError:
                continue  # inadmissible parameter draw
            # check_single_port raises AssertionError on any disagreement
            # between the pole test of (G+G_c)^-1 and the unit-of-Delta
            # oracle; reaching the next line counts as agreement
            try:
                check_single_port(G, G_c)
            except ValueError as exc:
                # a near-cancelling root pair in G_c leaves no coprime
                # fraction for the oracle; not a verdict disagreement
                assert "hidden mode" in str(exc)
                continue
            agreed += 1
            total += 1
    ok = total >= 100 and agreed == total
    record_acceptance(
        ok, "criterion 2 (single-port verdict vs oracle)",
        f"{agreed}/{total} instances agree (need 100%)")


def test_criterion_3_block_identity_random_and_opamp(opamp_T, opamp_dcf):
    t0 = time.monotonic()
    rng = np.random.default_rng(2000)
    worst_id = 0.0
    worst_rec = 0.0
    for _ in range(20):
        T = random_proper_rm(rng, 2, order=4)
        rep = dcf_verify(dcf_from_ss(T), T)
        worst_id = max(worst_id, rep.residuals["block_identity"])
        worst_rec = max(worst_rec, rep.residuals["right_fraction"],
                        rep.residuals["left_fraction"])
    rep = dcf_verify(opamp_dcf, opamp_T)
    worst_id = max(worst_id, rep.residuals["block_identity"])
    worst_rec = max(worst_rec, rep.residuals["right_fraction"],
                    rep.residuals["left_fraction"])
    elapsed = time.monotonic() - t0
    ok = worst_id < 1e-6 and worst_rec < 1e-7 and elapsed < 30.0
    record_acceptance(
        ok, "criterion 3 (factorization block identity)",
        f"20 random 2x2 + op-amp: identity {worst_id:.2e} (< 1e-6), "
        f"reconstructions {worst_rec:.2e} (< 1e-7), {elapsed:.1f}s (< 30s)")


def test_criterion_4_opamp_reference_reproduction(opamp_T):
    ref = opamp.published_reference_T()
    grid = opamp.reference_grid()
    VT = opamp_T.eval_grid(grid)
    VR = ref.eval_grid(grid)
    mag = float(np.max(np.abs(np.abs(VT) - np.abs(VR)) / np.abs(VR)))
    ph = float(np.max(np.abs(np.degrees(np.angle(VT / VR)))))
    eigs = rm_to_ss(opamp_T).eig()
    unstable = eigs[eigs.real > 0]
    re = float(unstable.real.max()) if unstable.size else float("nan")
    pole_ok = unstable.size == 2 and abs(re - 6.69e3) / 6.69e3 < 0.01
    ok = mag < 0.02 and ph < 2.0 and pole_ok
    record_acceptance(
        ok, "criterion 4 (op-amp reference reproduction)",
        f"magnitude {mag:.3%} (< 2%), phase {ph:.3f} deg (< 2), unstable "
        f"pair Re = {re:.4g} (+6.69e3 within 1%)")


def test_criterion_5_zero_parameter_compensator(opamp_T, opamp_dcf):
    T_c = hybrid_compensator(opamp_dcf, None)
    res = interconnect(opamp_T, T_c, dcf=opamp_dcf, Q=None)
    dr = res.report.residuals["delta_r_identity"]
    dl = res.report.residuals["delta_l_identity"]
    ok = res.report.is_stable and dr < 1e-6 and dl < 1e-6
    record_acceptance(
        ok, "criterion 5 (zero-parameter compensator stabilizes)",
        f"closed network stable={res.report.is_stable}, return-difference "
        f"identities {dr:.2e} / {dl:.2e} (< 1e-6)")


def test_criterion_6_neighborhood_robustness(opamp_T, opamp_dcf_demo):
    t0 = time.monotonic()
    T_c = hybrid_compensator(opamp_dcf_demo, None)
    rb = robustness_sample(opamp_T, T_c, rel_eps=1e-3, trials=100,
                           seed=42, dcf=opamp_dcf_demo)
    elapsed = time.monotonic() - t0
    ok = rb.stable == 100 and rb.degenerate == 0 and elapsed < 60.0
    record_acceptance(
        ok, "criterion 6 (realization-neighborhood robustness)",
        f"{rb.stable}/100 perturbed closures stable at rel_eps=1e-3 "
        f"(seed 42), worst margin {rb.worst_margin:.2e}, "
        f"{elapsed:.1f}s (< 60s)")


def test_criterion_7_left_right_parametrization(opamp_T, opamp_dcf_demo):
    rng = np.random.default_rng(7)
    stable = 0
    for _ in range(10):
        entries = []
        for _i in range(2):
            row = []
            for _j in range(2):
                p = rng.uniform(1e6, 1e9)
                gain = rng.uniform(-1.0, 1.0) * rng.choice([1e-8, 1e-4, 1.0])
                row.append(RationalFunction(
                    Polynomial([gain]), Polynomial([p, 1.0])))
            entries.append(row)
        Q = RationalMatrix(entries)
        # hybrid_compensator raises unless the left and right formulas
        # agree on the verification grid to < 1e-6 relative
        T_c = hybrid_compensator(opamp_dcf_demo, Q)
        res = interconnect(opamp_T, T_c, dcf=opamp_dcf_demo, Q=Q)
        stable += bool(res.report.is_stable)
    ok = stable == 10
    record_acceptance(
        ok, "criterion 7 (left/right formula agreement)",
        f"10/10 random admissible parameters: formulas agree < 1e-6, "
        f"{stable}/10 closed networks stable")


def test_criterion_8_property_suite_complete():
    # the per-module invariant suites must exist and define their tests;
    # their outcomes gate the same pytest run this summary belongs to
    import test_coprime
    import test_opamp
    import test_polyrat
    import test_ratmat
    import test_stabilize

    required = {
        test_polyrat: ["test_canonicalization_idempotence",
                       "test_root_coefficient_round_trip",
                       "test_unit_iff_stable_with_stable_inverse",
                       "test_arithmetic_matches_pointwise_evaluation"],
        test_ratmat: ["test_realization_round_trip_stable_matrices",
                      "test_inverse_involution",
                      "test_det_multiplicative_on_grid",
                      "test_minimal_order_bounded_by_entry_degrees"],
        test_coprime: ["test_scalar_fraction_invariants",
                       "test_dcf_blocks_stable_and_identities",
                       "test_pole_placement_postcondition",
                       "test_neighborhood_coprimeness"],
        test_stabilize: ["test_parametrization_identity_random_pairs",
                         "test_single_port_compensator_always_stabilizes",
                         "test_single_port_verdicts_agree_on_random_instances",
                         "test_hybrid_compensator_invariants_random_networks",
                         "test_nonminimum_phase_obstruction"],
        test_opamp: ["test_reference_match",
                     "test_unstable_resonance_location",
                     "test_full_pipeline_stable"],
    }
    missing = [
        f"{mod.__name__}.{name}"
        for mod, names in required.items()
        for name in names
        if not callable(getattr(mod, name, None))
    ]
    ok = not missing
    record_acceptance(
        ok, "criterion 8 (module property suites)",
        "all module invariant tests present and running in this session"
        if ok else f"missing: {', '.join(missing)}")

"""Shared fixtures: random network generators and the op-amp pipeline."""

import numpy as np
import pytest

from portstab import opamp
from portstab.coprime import dcf_from_ss
from portstab.polyrat import Polynomial, RationalFunction
from portstab.ratmat import RationalMatrix, StateSpace, rm_from_ss

# one pass/fail line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def record_acceptance(ok: bool, name: str, detail: str):
    ACCEPTANCE_LINES.append(
        f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    assert ok, f"{name}: {detail}"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


def parametrization_identity_residual(c, q) -> float:
    """Cleared-coefficient residual of n(x - q d) + d(y + q n) = 1.

    Pure polynomial arithmetic over the explicit common denominator:
    rational-function simplification would refit repeated roots of the
    (s+a)^k denominators and contaminate the metric with root-finding
    error far above the float64 floor.
    """
    A, an = c.n.num, c.n.den
    B, ad = c.d.num, c.d.den
    X, ax = c.x.num, c.x.den
    Y, ay = c.y.num, c.y.den
    u, uv = q.num, q.den
    N = (A * (X * uv * ad - u * B * ax) * ay
         + B * (Y * uv * an + u * A * ay) * ax)
    D = an * ad * ax * ay * uv
    diff = N - D
    if diff.is_zero:
        return 0.0
    return float(np.max(np.abs(diff.coeffs)) / np.max(np.abs(D.coeffs)))


# ---------------------------------------------------------------------------
# random generators (all take an explicit numpy Generator)
# ---------------------------------------------------------------------------

def random_proper_rf(rng, max_den_deg: int = 4) -> RationalFunction:
    """Random proper scalar with mixed stable/unstable real and complex poles."""
    k = int(rng.integers(1, max_den_deg + 1))
    poles = []
    while len(poles) < k:
        if k - len(poles) >= 2 and rng.random() < 0.4:
            re = rng.uniform(-2.0, 0.5)
            im = rng.uniform(0.3, 2.0)
            poles += [complex(re, im), complex(re, -im)]
        else:
            poles.append(complex(rng.uniform(-2.5, 1.0), 0.0))
    den = Polynomial.from_roots(poles)
    num_deg = int(rng.integers(0, k + 1))
    num = Polynomial(rng.uniform(-2.0, 2.0, size=num_deg + 1))
    if num.is_zero:
        num = Polynomial([1.0])
    return RationalFunction(num, den).canonical()


def random_stable_rf(rng, max_den_deg: int = 2) -> RationalFunction:
    """Random element of the stable proper scalar algebra."""
    k = int(rng.integers(0, max_den_deg + 1))
    if k == 0:
        return RationalFunction.const(float(rng.uniform(-2.0, 2.0)))
    if k >= 2 and rng.random() < 0.5:
        re = rng.uniform(-2.5, -0.4)
        im = rng.uniform(0.3, 2.0)
        poles = [complex(re, im), complex(re, -im)]
        poles += [complex(rng.uniform(-2.5, -0.4), 0.0) for _ in range(k - 2)]
    else:
        poles = [complex(rng.uniform(-2.5, -0.4), 0.0) for _ in range(k)]
    den = Polynomial.from_roots(poles)
    num = Polynomial(rng.uniform(-2.0, 2.0, size=int(rng.integers(1, k + 2))))
    if num.is_zero:
        num = Polynomial([1.0])
    return RationalFunction(num, den).canonical()


def random_proper_rm(rng, size: int = 2, order: int = 4,
                     stable: bool = False) -> RationalMatrix:
    """Random proper size x size rational matrix of the given order."""
    A = rng.normal(size=(order, order))
    if stable:
        A = A - (np.max(np.linalg.eigvals(A).real) + 0.5) * np.eye(order)
    B = rng.normal(size=(order, size))
    C = rng.normal(size=(size, order))
    D = rng.normal(size=(size, size))
    return rm_from_ss(StateSpace(A, B, C, D))


def random_stable_rm(rng, size: int = 2) -> RationalMatrix:
    """Random matrix with every entry in the stable proper algebra."""
    return RationalMatrix(
        [[random_stable_rf(rng) for _ in range(size)] for _ in range(size)])


# ---------------------------------------------------------------------------
# op-amp pipeline (session-scoped: the expensive artifacts are shared)
# ---------------------------------------------------------------------------

@pytest.fixture(scope="session")
def opamp_cx():
    return opamp.recover_cx()


@pytest.fixture(scope="session")
def opamp_T(opamp_cx):
    return opamp.build_T(opamp.default_params(opamp_cx), regularized=True)


@pytest.fixture(scope="session")
def opamp_dcf(opamp_T):
    """Factorization with the library's default reflected pole targets."""
    return dcf_from_ss(opamp_T)


@pytest.fixture(scope="session")
def opamp_dcf_demo(opamp_T):
    """Factorization with the gently damped resonance-aligned targets."""
    targets = opamp.demo_pole_targets(opamp_T)
    return dcf_from_ss(opamp_T, f_poles=targets, l_poles=targets)

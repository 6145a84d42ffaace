"""Two-stage op-amp example: hybrid port matrix from physical parameters.

Builds the 2x2 hybrid matrix T of the two-stage op-amp small-signal
equivalent circuit, both the raw (improper) version and the regularized one
with small series resistances at the ports, plus the published reference
entries used by the acceptance tests.
"""

from dataclasses import dataclass, asdict

import numpy as np
import scipy.optimize

import numpy as _np

from .polyrat import Polynomial, RationalFunction, stability_tol
from .ratmat import RationalMatrix, log_grid, rm_to_ss


@dataclass(frozen=True)
class OpAmpParams:
    """Small-signal parameters; conductances in A/V, capacitances in F."""

    g_m1: float
    g_m2: float
    g_1: float
    g_2: float
    C_1: float
    C_2: float
    C_gd: float
    C_x: float
    r_1: float
    r_2: float

    def __post_init__(self):
        for name in ("g_m1", "g_m2", "g_1", "g_2", "C_1", "C_2", "C_gd", "C_x"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.r_1 < 0.0 or self.r_2 < 0.0:
            raise ValueError("regularization resistances must be nonnegative")

    def to_json_obj(self):
        return {k: float(v) for k, v in asdict(self).items()}

    @staticmethod
    def from_json_obj(obj) -> "OpAmpParams":
        return OpAmpParams(**{k: float(obj[k]) for k in (
            "g_m1", "g_m2", "g_1", "g_2", "C_1", "C_2", "C_gd", "C_x",
            "r_1", "r_2")})


def default_params(c_x: float) -> OpAmpParams:
    """Published parameter set; the bridge capacitance c_x must be supplied.

    c_x is absent from the published parameter list even though it enters
    the first-row entries; recover_cx() estimates it from the reference
    matrix (about 5e-14 F).
    """
    return OpAmpParams(
        g_m1=1.8e-3, g_m2=4e-5, g_1=1.25e-6, g_2=3.3333e-6,
        C_1=0.5e-12, C_2=68.48e-12, C_gd=0.05e-12, C_x=c_x,
        r_1=0.1, r_2=0.1)


def _d1(p: OpAmpParams) -> Polynomial:
    return Polynomial([
        p.g_m1 * p.g_m2 + p.g_1 * p.g_2,
        p.C_2 * p.g_1 + p.C_1 * p.g_2
        + (p.g_m2 - p.g_m1 + p.g_1 + p.g_2) * p.C_gd,
        (p.C_1 + p.C_2) * p.C_gd + p.C_1 * p.C_2,
    ])


def build_T(p: OpAmpParams, regularized: bool = True) -> RationalMatrix:
    """Hybrid matrix of the op-amp two-port from the circuit formulas.

    With regularized=False the first-row entries are improper (numerator
    degree exceeds denominator degree), which is exactly the obstruction
    the series resistances remove.
    """
    D1 = _d1(p)
    # common subexpressions
    stage2 = Polynomial([p.g_m2 + p.g_2, p.C_2])      # s C2 + gm2 + g2
    gd = Polynomial([-p.g_m1 * p.g_m2, p.g_m1 * p.C_gd])  # gm1 (s Cgd - gm2)
    cgdm = Polynomial([-p.g_m2, p.C_gd])              # s Cgd - gm2
    sCx = Polynomial([0.0, p.C_x])
    if not regularized:
        n1u = Polynomial([p.g_m2 - p.g_m1 + p.g_2 + p.g_1, p.C_1 + p.C_2])
        T11 = RationalFunction(sCx * (D1 + gd), D1)
        T12 = RationalFunction(-sCx * (n1u * cgdm - D1), stage2 * D1)
        T21 = RationalFunction(Polynomial([-p.g_m1]) * stage2, D1)
        T22 = RationalFunction(n1u, D1)
        return RationalMatrix([[T11.canonical(), T12.canonical()],
                               [T21.canonical(), T22.canonical()]])
    if p.r_1 <= 0.0 or p.r_2 <= 0.0:
        raise ValueError("regularized build requires r_1, r_2 > 0")
    reg1 = Polynomial([1.0, p.C_x * p.r_1])           # s Cx r1 + 1
    # N2 = [1 + (s(C1+Cgd)+g1) r2] (s C2 + gm2 + g2)
    #      - (s C1 + g1 - gm1) [-1 + (gm2 - s Cgd) r2]
    loadr = Polynomial([1.0 + p.g_1 * p.r_2, (p.C_1 + p.C_gd) * p.r_2])
    fb = Polynomial([p.g_m2 * p.r_2 - 1.0, -p.C_gd * p.r_2])
    N2 = loadr * stage2 - Polynomial([p.g_1 - p.g_m1, p.C_1]) * fb
    T11 = RationalFunction(sCx * (D1 + gd), reg1 * D1)
    # T12 = N1 [-1 + (gm2 - s Cgd) r2 + N2 (s Cgd - gm2)/D1],
    # N1 = -s Cx / ((s Cx r1 + 1)(s C2 + gm2 + g2))
    bracket = fb * D1 + N2 * cgdm
    T12 = RationalFunction(-sCx * bracket, reg1 * stage2 * D1)
    T21 = RationalFunction(Polynomial([-p.g_m1]) * stage2, D1)
    T22 = RationalFunction(N2, D1)
    return RationalMatrix([[T11.canonical(), T12.canonical()],
                           [T21.canonical(), T22.canonical()]])


def published_reference_T() -> RationalMatrix:
    """The published factored entries of the regularized T, verbatim."""
    quad = Polynomial([1.91e15, -1.338e4, 1.0])
    reg = Polynomial.from_roots([-2e14])
    T11 = RationalFunction(
        Polynomial.from_roots([0.0, -2.327e6, -4.751e4], 10.0), reg * quad)
    T12 = RationalFunction(
        Polynomial.from_roots([0.0, -8.25e7], 1.326e11), reg * quad)
    T21 = RationalFunction(
        Polynomial.from_roots([-6.328e5], -3.2705e9), quad)
    T22 = RationalFunction(
        Polynomial.from_roots([-1.83e13, 2.545e7], 0.1), quad)
    return RationalMatrix([[T11, T12], [T21, T22]])


def reference_grid() -> np.ndarray:
    """Decade-step comparison grid, omega from 1e3 to 1e12 rad/s."""
    return log_grid(1e3, 1e12, 10)


def demo_pole_targets(T: RationalMatrix) -> np.ndarray:
    """Gently damped reflections of T's unstable eigenvalues.

    Each unstable eigenvalue keeps its imaginary part, so the compensator
    stays aligned with the network's resonance frequency, and its real part
    moves to -|Re| - 0.05 |lambda|; stable eigenvalues are kept.  The
    gentle damping is what makes the closed interconnection survive
    realization noise: heavier feedback couples perturbations more strongly
    into the return difference and shrinks the stability neighborhood.
    """
    eigs = rm_to_ss(T).eig()
    tol = stability_tol(eigs)
    out = []
    for lam in eigs:
        if lam.real >= -tol:
            out.append(complex(-abs(lam.real) - 0.05 * abs(lam), lam.imag))
        else:
            out.append(lam)
    return np.array(out, dtype=complex)


def recover_cx(reference: RationalMatrix = None) -> float:
    """Estimate the undocumented bridge capacitance from the reference T11.

    One-dimensional least squares of log-magnitude of the built T11 against
    the reference on the comparison grid; the optimum sits near 5e-14 F
    (equivalently a regularization pole at 1/(C_x r_1) = 2e14 rad/s).
    """
    if reference is None:
        reference = published_reference_T()
    grid = reference_grid()
    ref = np.array([reference.entries[0][0](s) for s in grid])

    def cost(log10_cx: float) -> float:
        p = default_params(10.0 ** log10_cx)
        t11 = build_T(p, regularized=True).entries[0][0]
        got = np.array([t11(s) for s in grid])
        return float(np.sum((np.log10(np.abs(got)) - np.log10(np.abs(ref))) ** 2))

    res = scipy.optimize.minimize_scalar(
        cost, bounds=(-16.0, -11.0), method="bounded",
        options={"xatol": 1e-12})
    return float(10.0 ** res.x)

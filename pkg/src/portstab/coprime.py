"""Coprime factorization over the stable proper rational algebra.

SISO fractions with Bezout witnesses obtained from a Sylvester-type linear
system, and multi-port doubly coprime factorizations assembled from a state
space realization with two pole placements (state feedback and output
injection).
"""

import dataclasses
from dataclasses import dataclass

import numpy as np
import scipy.signal

from .polyrat import (
    GCD_REL_TOL,
    Polynomial,
    RationalFunction,
    poly_roots,
    stability_tol,
)
from .ratmat import (
    RationalMatrix,
    StabilityReport,
    StateSpace,
    auto_grid,
    rm_from_ss,
    rm_is_stable,
    rm_to_ss,
)

# Residual bound for the cleared-denominator SISO Bezout identity.
BEZOUT_REL_TOL = 1e-9
# Grid residual bound for the multi-port block identity.
DCF_GRID_TOL = 1e-6


@dataclass(frozen=True)
class SisoCoprime:
    """Coprime fraction G = n d^{-1} with Bezout witnesses n x + d y = 1."""

    n: RationalFunction
    d: RationalFunction
    x: RationalFunction
    y: RationalFunction

    def identity_residual(self) -> float:
        """Relative coefficient residual of n x + d y - 1 after clearing.

        All four fractions share powers of the same shifted denominator, so
        clearing multiplies through by den(n)*den(x).
        """
        lhs = (self.n.num * self.x.num * (self.d.den * self.y.den)
               + self.d.num * self.y.num * (self.n.den * self.x.den))
        rhs = (self.n.den * self.x.den) * (self.d.den * self.y.den)
        diff = lhs - rhs
        scale = float(np.max(np.abs(rhs.coeffs)))
        if diff.is_zero:
            return 0.0
        return float(np.max(np.abs(diff.coeffs))) / scale


def _bezout_solve(num: Polynomial, den: Polynomial, a: float, k: int):
    """Solve num*X + den*Y = (s+a)^(k+j) with minimal witness degree j.

    Coefficientwise linear system; the first j admitting a solution wins and
    ties go to the minimum-norm least-squares solution.  Columns are
    equilibrated so widely scaled coefficients do not poison the solve.
    """
    sh = Polynomial([a, 1.0])
    for j in range(0, k + 2):
        target = sh.pow(k + j)
        rows = k + j + 1
        cols = 2 * (j + 1)
        A = np.zeros((rows, cols))
        for t in range(j + 1):
            # column for coefficient t of X: num shifted by t
            A[t:t + num.coeffs.size, t] = num.coeffs
            A[t:t + den.coeffs.size, j + 1 + t] = den.coeffs
        b = target.coeffs
        colnorm = np.linalg.norm(A, axis=0)
        colnorm[colnorm == 0.0] = 1.0
        sol, *_ = np.linalg.lstsq(A / colnorm, b, rcond=None)
        sol = sol / colnorm
        resid = A @ sol - b
        if np.max(np.abs(resid)) <= BEZOUT_REL_TOL * np.max(np.abs(b)):
            X = Polynomial(sol[: j + 1])
            Y = Polynomial(sol[j + 1:])
            return X, Y, j
    raise ArithmeticError("Bezout system admits no solution; fraction not coprime")


def siso_coprime(G: RationalFunction, shift: float = 1.0) -> SisoCoprime:
    """Coprime fraction of a proper scalar G over the stable algebra.

    n = num/(s+a)^k and d = den/(s+a)^k with k = deg den; witnesses come
    from the polynomial Bezout equation solved as a linear system.
    """
    if shift <= 0.0:
        raise ValueError("shift must be positive")
    if not G.is_proper:
        raise ValueError("G must be proper")
    num, den = G.num, G.den
    k = int(den.degree)
    if not num.is_zero and k > 0:
        rn, rd = poly_roots(num), poly_roots(den)
        if rn.size and rd.size:
            gap = np.min(np.abs(rn[:, None] - rd[None, :]))
            scale = 1.0 + float(np.max(np.abs(np.concatenate([rn, rd]))))
            if gap <= GCD_REL_TOL * scale:
                raise ValueError("hidden mode: fraction not coprime")
    if k == 0:
        # constant G = c: take n = c, d = 1 and witness x = 1/c, y = 0
        # (x = 0, y = 1 when c = 0)
        d = RationalFunction.one()
        if num.is_zero:
            return SisoCoprime(RationalFunction.zero(), d,
                               RationalFunction.zero(), RationalFunction.one())
        c = float(num.coeffs[0] / den.coeffs[0])
        return SisoCoprime(RationalFunction.const(c), d,
                           RationalFunction.const(1.0 / c),
                           RationalFunction.zero())
    X, Y, j = _bezout_solve(num, den, shift, k)
    shk = Polynomial([shift, 1.0]).pow(k)
    shj = Polynomial([shift, 1.0]).pow(j)
    n = RationalFunction(num, shk)
    d = RationalFunction(den, shk)
    x = RationalFunction(X, shj)
    y = RationalFunction(Y, shj)
    out = SisoCoprime(n, d, x, y)
    if out.identity_residual() > BEZOUT_REL_TOL:
        raise ArithmeticError("Bezout identity residual exceeds tolerance")
    return out


# ---------------------------------------------------------------------------
# doubly coprime factorization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Dcf:
    """Doubly coprime factorization T = Nr Dr^{-1} = Dl^{-1} Nl with witnesses.

    The eight blocks satisfy the 2x2 block Bezout identity
    [[Xl, Yl], [Dl, -Nl]] [[Nr, Yr], [Dr, -Xr]] = I.
    f_poles and l_poles record the pole-placement targets used.
    """

    Nr: RationalMatrix
    Dr: RationalMatrix
    Nl: RationalMatrix
    Dl: RationalMatrix
    Xl: RationalMatrix
    Yl: RationalMatrix
    Xr: RationalMatrix
    Yr: RationalMatrix
    f_poles: tuple
    l_poles: tuple
    # realizations of the blocks when constructed from state space; used
    # for grid evaluation because entrywise rational forms of widely
    # scaled blocks lose a few digits in conversion
    ss_blocks: dict = dataclasses.field(default=None, compare=False,
                                        repr=False)
    # the source realization and the two gains (keys A, B, C, D, F, L);
    # kept so perturbation studies can refactor nearby realizations with
    # the same pole targets
    realization: dict = dataclasses.field(default=None, compare=False,
                                          repr=False)

    @property
    def size(self) -> int:
        return self.Dr.rows

    def blocks(self):
        return {"Nr": self.Nr, "Dr": self.Dr, "Nl": self.Nl, "Dl": self.Dl,
                "Xl": self.Xl, "Yl": self.Yl, "Xr": self.Xr, "Yr": self.Yr}

    def eval_block(self, name: str, grid) -> np.ndarray:
        if self.ss_blocks is not None and name in self.ss_blocks:
            return self.ss_blocks[name].freqresp(grid)
        return self.blocks()[name].eval_grid(grid)

    def grid(self, n: int = 61) -> np.ndarray:
        pts = [np.asarray(self.f_poles, dtype=complex),
               np.asarray(self.l_poles, dtype=complex)]
        for b in self.blocks().values():
            pts.append(b.entry_poles())
        return auto_grid(np.concatenate(pts), n)

    def identity_residual(self, grid=None, normalized: bool = True) -> float:
        """Sup-norm grid residual of the block Bezout identity.

        By default the pointwise defect is normalized by the cancellation
        mass |lhs| |rhs| of the product.  The identity holds exactly in
        algebra for any gains, so the defect measures evaluation round-off;
        for widely scaled networks (witness gains of 1e5 and beyond) the
        absolute defect sits at the float64 cancellation floor while the
        normalized one stays tiny.  For well-scaled systems both agree.
        """
        if grid is None:
            grid = self.grid()
        m = self.size
        VXl, VYl = self.eval_block("Xl", grid), self.eval_block("Yl", grid)
        VDl, VNl = self.eval_block("Dl", grid), self.eval_block("Nl", grid)
        VNr, VYr = self.eval_block("Nr", grid), self.eval_block("Yr", grid)
        VDr, VXr = self.eval_block("Dr", grid), self.eval_block("Xr", grid)
        lhs = np.concatenate(
            [np.concatenate([VXl, VYl], axis=2),
             np.concatenate([VDl, -VNl], axis=2)], axis=1)
        rhs = np.concatenate(
            [np.concatenate([VNr, VYr], axis=2),
             np.concatenate([VDr, -VXr], axis=2)], axis=1)
        prod = np.einsum("kij,kjl->kil", lhs, rhs)
        defect = np.abs(prod - np.eye(2 * m))
        if not normalized:
            return float(np.max(defect))
        mass = np.einsum("kij,kjl->kil", np.abs(lhs), np.abs(rhs))
        return float(np.max(defect / (1.0 + mass)))

    def to_json_obj(self):
        obj = {name: b.to_json_obj() for name, b in self.blocks().items()}
        obj["f_poles"] = [[float(p.real), float(p.imag)]
                          for p in np.asarray(self.f_poles, dtype=complex)]
        obj["l_poles"] = [[float(p.real), float(p.imag)]
                          for p in np.asarray(self.l_poles, dtype=complex)]
        if self.realization is not None:
            obj["realization"] = {k: np.asarray(v).tolist()
                                  for k, v in self.realization.items()}
        return obj

    @staticmethod
    def from_json_obj(obj) -> "Dcf":
        fp = tuple(complex(re, im) for re, im in obj["f_poles"])
        lp = tuple(complex(re, im) for re, im in obj["l_poles"])
        if obj.get("realization") is not None:
            r = {k: np.asarray(v, dtype=float)
                 for k, v in obj["realization"].items()}
            g = StateSpace(r["A"], r["B"], r["C"], r["D"])
            # rebuild the blocks from the realization so the shared-state
            # forms (and their evaluation accuracy) survive the round trip
            return dcf_from_realization(g, r["F"], r["L"], fp, lp)
        blocks = {name: RationalMatrix.from_json_obj(obj[name])
                  for name in ("Nr", "Dr", "Nl", "Dl", "Xl", "Yl", "Xr", "Yr")}
        return Dcf(f_poles=fp, l_poles=lp, **blocks)


def _check_pole_targets(targets, n: int, name: str) -> np.ndarray:
    t = np.asarray(targets, dtype=complex).ravel()
    if t.size != n:
        raise ValueError(f"{name} must list exactly {n} poles")
    tol = stability_tol(t)
    if np.max(t.real) >= -tol:
        raise ValueError(f"{name} targets must lie strictly in the open LHP")
    # self-conjugacy
    srt = np.sort_complex(t)
    if not np.allclose(np.sort_complex(np.conj(t)), srt,
                       rtol=1e-9, atol=1e-9 * (1 + np.max(np.abs(t)))):
        raise ValueError(f"{name} targets must be self-conjugate")
    return t


def default_pole_targets(eigs) -> np.ndarray:
    """LHP targets from open-loop eigenvalues: reflect the unstable ones.

    lambda -> -|Re lambda| - 0.1 |lambda| (+ j Im lambda) for eigenvalues in
    the closed RHP; stable eigenvalues are kept.  Scale-aware at both ends.
    """
    eigs = np.asarray(eigs, dtype=complex).ravel()
    tol = stability_tol(eigs)
    out = []
    for lam in eigs:
        if lam.real >= -tol:
            out.append(complex(-abs(lam.real) - 0.1 * abs(lam), lam.imag))
        else:
            out.append(lam)
    return np.array(out, dtype=complex)


def _place(A: np.ndarray, B: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Gain F with eig(A + B F) at targets, via robust assignment.

    The problem is solved on a frequency-normalized copy of A so the
    routine's internal tolerances see O(1) numbers.
    """
    mags = np.abs(np.linalg.eigvals(A))
    mags = mags[mags > 0]
    w0 = float(np.exp(np.mean(np.log(mags)))) if mags.size else 1.0
    try:
        res = scipy.signal.place_poles(A / w0, B, np.asarray(targets) / w0)
    except ValueError as exc:
        raise ValueError(f"placement failure: {exc}") from exc
    F = -w0 * res.gain_matrix
    ach = np.linalg.eigvals(A + B @ F)
    t = np.asarray(targets, dtype=complex)
    scale = 1.0 + np.max(np.abs(t))
    for lam in t:
        if np.min(np.abs(ach - lam)) > 1e-6 * scale:
            raise ValueError("placement failure: achieved poles off target")
    return F


def _ctrb_obsv_check(g: StateSpace) -> None:
    n = g.order
    if n == 0:
        return
    mags = np.abs(g.eig())
    mags = mags[mags > 0]
    w0 = float(np.exp(np.mean(np.log(mags)))) if mags.size else 1.0
    As = g.A / w0
    Bs = g.B / max(1.0, np.linalg.norm(g.B))
    Cs = g.C / max(1.0, np.linalg.norm(g.C))
    ctrb = np.hstack([np.linalg.matrix_power(As, k) @ Bs for k in range(n)])
    obsv = np.vstack([Cs @ np.linalg.matrix_power(As, k) for k in range(n)])
    if np.linalg.matrix_rank(ctrb, tol=1e-10 * n) < n:
        raise ValueError("realization is uncontrollable")
    if np.linalg.matrix_rank(obsv, tol=1e-10 * n) < n:
        raise ValueError("realization is unobservable")


def dcf_from_realization(g: StateSpace, F: np.ndarray, L: np.ndarray,
                         f_poles=(), l_poles=()) -> Dcf:
    """Assemble the eight DCF blocks from a realization and gains F, L.

    Standard state-space formulas with signs arranged so the block identity
    [[Xl, Yl], [Dl, -Nl]] [[Nr, Yr], [Dr, -Xr]] = I holds (verified against
    a random system; see Dcf invariants).
    """
    A, B, C, D = g.A, g.B, g.C, g.D
    m = g.ninputs
    I = np.eye(m)
    Z = np.zeros((g.noutputs, m))
    AF = A + B @ F
    AL = A + L @ C
    CF = C + D @ F
    BL = B + L @ D
    blocks = {
        "Dr": StateSpace(AF, B, F, I),
        "Nr": StateSpace(AF, B, CF, D),
        "Dl": StateSpace(AL, L, C, I),
        "Nl": StateSpace(AL, BL, C, D),
        "Xl": StateSpace(AL, L, F, Z),
        "Yl": StateSpace(AL, -BL, F, I),
        "Xr": StateSpace(AF, L, F, Z),
        "Yr": StateSpace(AF, -L, CF, I),
    }
    rms = {name: rm_from_ss(ss, validate=False) for name, ss in blocks.items()}
    realization = {"A": np.array(A), "B": np.array(B), "C": np.array(C),
                   "D": np.array(D), "F": np.array(F), "L": np.array(L)}
    return Dcf(f_poles=tuple(np.asarray(f_poles, dtype=complex)),
               l_poles=tuple(np.asarray(l_poles, dtype=complex)),
               ss_blocks=blocks, realization=realization, **rms)


def dcf_from_ss(T: RationalMatrix, f_poles=None, l_poles=None) -> Dcf:
    """Doubly coprime factorization of a proper rational matrix.

    State feedback F places eig(A+BF) at f_poles and output injection L
    places eig(A+LC) at l_poles; both default to reflections of the open
    loop spectrum into the LHP.
    """
    if not T.is_proper:
        raise ValueError("T must be proper; adopt a regularization first")
    if not T.is_square:
        raise ValueError("T must be square")
    g = rm_to_ss(T)
    n = g.order
    if n == 0:
        K = RationalMatrix.from_const(g.D)
        E = RationalMatrix.identity(T.rows)
        Z = RationalMatrix.zeros(T.rows, T.rows)
        return Dcf(Nr=K, Dr=E, Nl=K, Dl=E, Xl=Z, Yl=E,
                   Xr=Z, Yr=E, f_poles=(), l_poles=())
    _ctrb_obsv_check(g)
    eigs = g.eig()
    fp = default_pole_targets(eigs) if f_poles is None else \
        _check_pole_targets(f_poles, n, "f_poles")
    lp = default_pole_targets(eigs) if l_poles is None else \
        _check_pole_targets(l_poles, n, "l_poles")
    F = _place(g.A, g.B, fp)
    L = _place(g.A.T, g.C.T, lp).T
    out = dcf_from_realization(g, F, L, fp, lp)
    res = out.identity_residual()
    if res > DCF_GRID_TOL:
        raise ArithmeticError(
            f"block identity residual {res:.2e} exceeds {DCF_GRID_TOL:.0e}")
    return out


def dcf_verify(f: Dcf, T: RationalMatrix) -> StabilityReport:
    """Residuals of the defining DCF identities plus membership verdict.

    Checks the 2x2 block identity, both fraction reconstructions of T, and
    that every block lies in the stable matrix algebra.
    """
    grid = f.grid()
    rid = f.identity_residual(grid)
    rid_abs = f.identity_residual(grid, normalized=False)
    VT = T.eval_grid(grid)
    VNr, VDr = f.eval_block("Nr", grid), f.eval_block("Dr", grid)
    VNl, VDl = f.eval_block("Nl", grid), f.eval_block("Dl", grid)
    # Reconstruction residuals in multiplication form (T Dr = Nr and
    # Dl T = Nl), mass-normalized: pointwise inversion of Dr/Dl would
    # inject its own conditioning into the metric.
    right = np.einsum("kij,kjl->kil", VT, VDr)
    rmass = np.einsum("kij,kjl->kil", np.abs(VT), np.abs(VDr))
    left = np.einsum("kij,kjl->kil", VDl, VT)
    lmass = np.einsum("kij,kjl->kil", np.abs(VDl), np.abs(VT))
    r_res = float(np.max(np.abs(right - VNr) / (1.0 + rmass)))
    l_res = float(np.max(np.abs(left - VNl) / (1.0 + lmass)))
    poles = []
    margin = np.inf
    bad = []
    for name, b in f.blocks().items():
        rep = rm_is_stable(b)
        poles.append(np.asarray(rep.poles, dtype=complex).ravel())
        margin = min(margin, rep.margin)
        if not rep.is_stable:
            bad.append(name)
    poles = np.concatenate(poles) if poles else np.zeros(0, dtype=complex)
    ok = (rid < DCF_GRID_TOL and r_res < DCF_GRID_TOL and l_res < DCF_GRID_TOL
          and not bad)
    notes = "" if not bad else "unstable blocks: " + ", ".join(sorted(bad))
    return StabilityReport(
        poles=poles, is_stable=bool(ok), margin=float(margin),
        residuals={"block_identity": rid, "block_identity_abs": rid_abs,
                   "right_fraction": r_res, "left_fraction": l_res},
        notes=notes)

"""Stabilizing compensator synthesis and interconnection analysis.

Single-port compensators come from the scalar coprime fraction with a free
stable parameter q; multi-port hybrid compensators come from a doubly
coprime factorization with a free stable matrix parameter Q.  The closed
interconnection (T^-1 + T_c^-1)^-1 is formed in state space through the
fraction blocks, which stays well-posed even when T or T_c is strictly
proper or improper, and a seeded sampler probes stability of the
interconnection under multiplicative realization perturbations.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .polyrat import (
    Polynomial,
    RationalFunction,
    StabilityVerdict,
    rf_is_stable,
    rf_is_unit,
    stability_tol,
)
from .ratmat import (
    ImproperMatrixError,
    RationalMatrix,
    StabilityReport,
    StateSpace,
    rm_from_ss,
    rm_inv,
    rm_inv_from_ss,
    rm_is_stable,
    rm_to_ss,
    ss_add,
    ss_det,
    ss_inv,
    ss_neg,
    ss_series,
)
from .coprime import Dcf

__all__ = [
    "InterconnectionResult",
    "RobustnessReport",
    "YoulaParamMatrix",
    "YoulaParamScalar",
    "check_single_port",
    "hybrid_compensator",
    "interconnect",
    "robustness_sample",
    "single_port_compensator",
]

# Residual bound for the scalar Bezout postcondition n(x-qd)+d(y+qn) = 1.
SCALAR_DELTA_TOL = 1e-9
# Grid residual bound for the left/right compensator formulas and Delta = I.
PARAM_GRID_TOL = 1e-6
# Grid residual bound for cross-checking T_hat computed two ways.
CROSS_CHECK_TOL = 1e-5


@dataclass(frozen=True)
class YoulaParamScalar:
    """Free stable scalar parameter sweeping the single-port compensators."""

    q: RationalFunction

    def __post_init__(self):
        v = rf_is_stable(self.q)
        if not v:
            raise ValueError(f"inadmissible q: parameter must be stable proper"
                             f" ({v.notes or 'RHP pole'})")


@dataclass(frozen=True)
class YoulaParamMatrix:
    """Free stable matrix parameter sweeping the hybrid compensators."""

    Q: RationalMatrix

    def __post_init__(self):
        for i, row in enumerate(self.Q.entries):
            for j, e in enumerate(row):
                v = rf_is_stable(e)
                if not v:
                    raise ValueError(
                        f"inadmissible Q: entry ({i},{j}) must be stable"
                        f" proper ({v.notes or 'RHP pole'})")

    @staticmethod
    def zero(n: int) -> "YoulaParamMatrix":
        return YoulaParamMatrix(RationalMatrix.zeros(n, n))


def _as_scalar_param(q) -> RationalFunction:
    if isinstance(q, YoulaParamScalar):
        return q.q
    if isinstance(q, (int, float)):
        q = RationalFunction.const(float(q))
    return YoulaParamScalar(q).q


def _as_matrix_param(Q, n: int) -> RationalMatrix:
    if Q is None:
        return RationalMatrix.zeros(n, n)
    if isinstance(Q, YoulaParamMatrix):
        Qm = Q.Q
    else:
        Qm = YoulaParamMatrix(Q).Q
    if Qm.rows != n or Qm.cols != n:
        raise ValueError("Q dimensions must match the factorization blocks")
    return Qm


# ---------------------------------------------------------------------------
# single-port synthesis
# ---------------------------------------------------------------------------

def single_port_compensator(c, q, kind: str = "open_circuit") -> RationalFunction:
    """Stabilizing single-port compensator G_c = (y + q n) (x - q d)^-1.

    kind labels the port excitation the compensator targets: an admittance
    connected in parallel (open_circuit) or an impedance in series
    (short_circuit); the formula is the same, only the physical reading of
    G and G_c differs.
    """
    if kind not in ("open_circuit", "short_circuit"):
        raise ValueError("kind must be 'open_circuit' or 'short_circuit'")
    qf = _as_scalar_param(q)
    denom = c.x - qf * c.d
    if denom.is_zero:
        raise ValueError("inadmissible q: x - q d vanishes identically")
    if not denom.is_biproper:
        raise ValueError("inadmissible q: x - q d has a zero at infinity")
    num_c, den_c, resid = _scalar_compensator_polys(c, qf)
    if resid > SCALAR_DELTA_TOL:
        raise ArithmeticError(
            "compensator identity n(x-qd)+d(y+qn)=1 failed numerically")
    return RationalFunction(num_c, den_c).canonical()


def _scalar_compensator_polys(c, qf):
    """(num, den) of (y + q n)(x - q d)^-1 plus the identity residual.

    The fractions share denominators (s+a)^k (for n, d) and (s+a)^j (for
    x, y); cancelling the common (s+a)^min(k,j) symbolically keeps the
    degree minimal.  Expanding through generic rational arithmetic instead
    would stack the shifted powers to high multiplicity, where root-based
    cancellation becomes meaningless.
    """
    N, D = c.n.num, c.d.num
    Y, X = c.y.num, c.x.num
    pk, pj = c.d.den, c.x.den
    u, uv = qf.num, qf.den
    same_dens = (np.array_equal(c.n.den.coeffs, pk.coeffs)
                 and np.array_equal(c.y.den.coeffs, pj.coeffs))
    k, j = int(max(pk.degree, 0)), int(max(pj.degree, 0))
    shared = same_dens and max(k, j) > 0
    if shared:
        # recover the shift from the s^{deg-1} coefficient of (s+a)^deg and
        # confirm both denominators really are powers of the same factor
        deg = max(k, j)
        src = pk if k >= j else pj
        a = float(src.coeffs[deg - 1]) / deg
        lin = Polynomial([a, 1.0])
        tol = 1e-9 * (1.0 + abs(a)) ** deg
        shared = (np.allclose(lin.pow(k).coeffs, pk.coeffs, atol=tol, rtol=1e-9)
                  and np.allclose(lin.pow(j).coeffs, pj.coeffs,
                                  atol=tol, rtol=1e-9))
    if shared:
        m = min(k, j)
        e1 = lin.pow(k - m)   # pk / (s+a)^m
        e2 = lin.pow(j - m)   # pj / (s+a)^m
        num_c = Y * uv * e1 + u * N * e2
        den_c = X * uv * e1 - u * D * e2
        rhs = pk * pk * e2 * uv
    elif same_dens:
        num_c = Y * uv * pk + u * N * pj
        den_c = X * uv * pk - u * D * pj
        rhs = pk * pk * pj * uv
    else:
        # fully general denominators
        numer = (c.y + qf * c.n)
        denom = (c.x - qf * c.d)
        g = numer / denom
        num_c, den_c = g.num, g.den
        delta = c.n * denom + c.d * numer
        diff = delta.num - delta.den
        resid = 0.0 if diff.is_zero else float(
            np.max(np.abs(diff.coeffs)) / np.max(np.abs(delta.den.coeffs)))
        return num_c, den_c, resid
    lhs = N * den_c + D * num_c
    diff = lhs - rhs
    if diff.is_zero:
        return num_c, den_c, 0.0
    resid = float(np.max(np.abs(diff.coeffs)) / np.max(np.abs(rhs.coeffs)))
    return num_c, den_c, resid


def check_single_port(G: RationalFunction, G_c: RationalFunction) -> StabilityReport:
    """Verdict on whether G_c stabilizes G at a single port.

    Primary test: (G+G_c)^-1 lies in the stable proper algebra.  Oracle:
    Delta = n d_c + d n_c built from coprime fractions of both must be a
    unit.  The two verdicts are required to agree.
    """
    from .coprime import siso_coprime

    total = G + G_c
    if total.is_zero:
        raise ValueError("degenerate interconnection: G + G_c vanishes")
    inv = total.inverse()
    v = rf_is_stable(inv)

    def fraction(H):
        # coprime fraction (n, d) of H over the stable algebra; an improper
        # H is factored through its proper reciprocal, which swaps the pair
        # (and the Bezout witnesses) but keeps it coprime
        if H.is_proper:
            c = siso_coprime(H)
            return c.n, c.d
        c = siso_coprime(H.inverse())
        return c.d, c.n

    n_g, d_g = fraction(G)
    n_c, d_c = fraction(G_c)
    delta = n_g * d_c + d_g * n_c
    unit = rf_is_unit(delta)
    if bool(v) != unit:
        raise AssertionError(
            f"stability verdicts disagree: pole test {bool(v)} vs "
            f"unit test {unit} for Delta = {delta}")
    poles = inv.poles()
    tol = stability_tol(poles)
    notes = ""
    if not v.is_stable:
        if not inv.is_proper and (poles.size == 0 or np.all(poles.real < -tol)):
            notes = ("stable poles, improper: (G+G_c)^-1 grows at infinity; "
                     "properness is part of the stability convention")
        else:
            notes = v.notes or "RHP pole in (G+G_c)^-1"
    return StabilityReport(
        poles=poles, is_stable=bool(v), margin=v.margin,
        residuals={"delta_is_unit": 1.0 if unit else 0.0}, notes=notes)


# ---------------------------------------------------------------------------
# multi-port synthesis
# ---------------------------------------------------------------------------

def _block_ss(f: Dcf, name: str) -> StateSpace:
    if f.ss_blocks is not None and name in f.ss_blocks:
        return f.ss_blocks[name]
    return rm_to_ss(f.blocks()[name])


def _compensator_fraction_ss(f: Dcf, Qm: RationalMatrix) -> dict:
    """State-space fractions of T_c induced by the parameter Q.

    Dcl = Xl - Q Dl, Ncl = Yl + Q Nl, Dcr = Xr - Dr Q, Ncr = Yr + Nr Q.
    """
    q_ss = rm_to_ss(Qm)
    xl, yl = _block_ss(f, "Xl"), _block_ss(f, "Yl")
    xr, yr = _block_ss(f, "Xr"), _block_ss(f, "Yr")
    dl, nl = _block_ss(f, "Dl"), _block_ss(f, "Nl")
    dr, nr = _block_ss(f, "Dr"), _block_ss(f, "Nr")
    return {
        "Dcl": ss_add(xl, ss_neg(ss_series(q_ss, dl))),
        "Ncl": ss_add(yl, ss_series(q_ss, nl)),
        "Dcr": ss_add(xr, ss_neg(ss_series(dr, q_ss))),
        "Ncr": ss_add(yr, ss_series(nr, q_ss)),
    }


def _grid_for(f: Dcf) -> np.ndarray:
    return f.grid()


def _masked_product_residual(terms, target) -> float:
    """Sup residual of sum(prod(term pairs)) vs target, normalized by the
    cancellation mass of the products (sum of |A||B| pointwise)."""
    acc = None
    mass = None
    for a, b in terms:
        p = np.einsum("kij,kjl->kil", a, b)
        m = np.einsum("kij,kjl->kil", np.abs(a), np.abs(b))
        acc = p if acc is None else acc + p
        mass = m if mass is None else mass + m
    return float(np.max(np.abs(acc - target) / (1.0 + mass)))


def hybrid_compensator(f: Dcf, Q=None) -> RationalMatrix:
    """Stabilizing hybrid compensator T_c = (Xl - Q Dl)^-1 (Yl + Q Nl).

    The right-form twin (Yr + Nr Q)(Xr - Dr Q)^-1 is computed as well and
    the two must agree on the evaluation grid.  Q = None (or a zero matrix)
    gives the nominal compensator Xl^-1 Yl.  Note that T_c is frequently
    improper -- the parametrization guarantees stability of the closed
    interconnection, not properness of the compensator itself.
    """
    n = f.size
    Qm = _as_matrix_param(Q, n)
    fr = _compensator_fraction_ss(f, Qm)
    if ss_det(fr["Dcl"]).is_zero:
        raise ValueError("Xl - Q Dl is singular as a rational matrix; "
                         "the compensator is undefined for this Q")
    if ss_det(fr["Dcr"]).is_zero:
        raise ValueError("Xr - Dr Q is singular as a rational matrix; "
                         "the compensator is undefined for this Q")
    grid = _grid_for(f)
    v_dcl = fr["Dcl"].freqresp(grid)
    v_ncl = fr["Ncl"].freqresp(grid)
    v_dcr = fr["Dcr"].freqresp(grid)
    v_ncr = fr["Ncr"].freqresp(grid)
    try:
        left = np.stack([np.linalg.solve(v_dcl[k], v_ncl[k])
                         for k in range(grid.size)])
        right = np.stack([np.linalg.solve(v_dcr[k].T, v_ncr[k].T).T
                          for k in range(grid.size)])
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"inadmissible Q: fraction denominator singular on "
                         f"the evaluation grid ({exc})") from exc
    agree = float(np.max(np.abs(left - right) / (1.0 + np.abs(left) + np.abs(right))))
    if agree > PARAM_GRID_TOL:
        raise ArithmeticError(
            f"left/right compensator formulas disagree: grid residual "
            f"{agree:.2e} exceeds {PARAM_GRID_TOL:.0e}")
    # postcondition: the induced fractions complete the Bezout identity,
    # Delta_r = Ncl Dr + Dcl Nr = I and Delta_l = Nl Dcr + Dl Ncr = I
    eye = np.eye(n)
    v_dr = f.eval_block("Dr", grid)
    v_nr = f.eval_block("Nr", grid)
    v_dl = f.eval_block("Dl", grid)
    v_nl = f.eval_block("Nl", grid)
    res_r = _masked_product_residual([(v_ncl, v_dr), (v_dcl, v_nr)], eye)
    res_l = _masked_product_residual([(v_nl, v_dcr), (v_dl, v_ncr)], eye)
    if max(res_r, res_l) > PARAM_GRID_TOL:
        raise ArithmeticError(
            f"compensator fractions violate Delta = I: residuals "
            f"{res_r:.2e}, {res_l:.2e}")
    # rational form of T_c: invert through the proper fraction
    # T_c^-1 = Ncl^-1 Dcl when Ncl's D matrix permits (the pencil-based
    # inverse keeps the entries minimal), otherwise fall back to the
    # rational product (Xl - Q Dl)^-1 (Yl + Q Nl)
    d_ncl = fr["Ncl"].D
    sv = np.linalg.svd(d_ncl, compute_uv=False)
    if sv[-1] > 1e-12 * max(sv[0], 1.0):
        tc_inv_ss = ss_series(ss_inv(fr["Ncl"]), fr["Dcl"])
        return rm_inv_from_ss(tc_inv_ss)
    dcl_rm = rm_from_ss(fr["Dcl"], validate=False)
    ncl_rm = rm_from_ss(fr["Ncl"], validate=False)
    return rm_inv(dcl_rm) @ ncl_rm


@dataclass
class InterconnectionResult:
    """Closed interconnection T_hat with its return-difference matrices."""

    T_hat: RationalMatrix
    delta_r: RationalMatrix
    delta_l: RationalMatrix
    report: StabilityReport

    def to_json_obj(self):
        return {
            "T_hat": self.T_hat.to_json_obj(),
            "delta_r": None if self.delta_r is None else self.delta_r.to_json_obj(),
            "delta_l": None if self.delta_l is None else self.delta_l.to_json_obj(),
            "report": self.report.to_json_obj(),
        }


def _pointwise_interconnection(T: RationalMatrix, T_c: RationalMatrix, grid):
    """T_hat(s) = T_c (T + T_c)^-1 T pointwise, with its cancellation mass."""
    vt = T.eval_grid(grid)
    vc = T_c.eval_grid(grid)
    out = np.empty_like(vt)
    mass = np.empty(vt.shape, dtype=float)
    for k in range(grid.size):
        mid = np.linalg.inv(vt[k] + vc[k])
        out[k] = vc[k] @ mid @ vt[k]
        mass[k] = np.abs(vc[k]) @ np.abs(mid) @ np.abs(vt[k])
    return out, mass


def interconnect(T: RationalMatrix, T_c: RationalMatrix,
                 dcf: Dcf = None, Q=None) -> InterconnectionResult:
    """Hybrid matrix T_hat = (T^-1 + T_c^-1)^-1 of the port interconnection.

    With a factorization of T (dcf) and the parameter Q that produced T_c,
    T_hat is assembled from the fraction blocks as Nr Delta_r^-1 Ncl, which
    needs no inversion of T or T_c and hence tolerates strictly proper T
    and improper T_c.  Without fractions the formal rational inverses are
    used directly.
    """
    if not (T.is_square and T_c.is_square) or T.rows != T_c.rows:
        raise ValueError("T and T_c must be square of the same size")
    n = T.rows
    if dcf is not None:
        if dcf.size != n:
            raise ValueError("factorization size does not match T")
        Qm = _as_matrix_param(Q, n)
        fr = _compensator_fraction_ss(dcf, Qm)
        nr, dr = _block_ss(dcf, "Nr"), _block_ss(dcf, "Dr")
        nl, dl = _block_ss(dcf, "Nl"), _block_ss(dcf, "Dl")
        delta_r_ss = ss_add(ss_series(fr["Ncl"], dr), ss_series(fr["Dcl"], nr))
        delta_l_ss = ss_add(ss_series(nl, fr["Dcr"]), ss_series(dl, fr["Ncr"]))
        t_hat_ss = ss_series(nr, ss_series(ss_inv(delta_r_ss), fr["Ncl"]))
        T_hat = rm_from_ss(t_hat_ss, validate=False)
        delta_r = rm_from_ss(delta_r_ss, validate=False)
        delta_l = rm_from_ss(delta_l_ss, validate=False)
        report = rm_is_stable(T_hat)
        grid = _grid_for(dcf)
        eye = np.eye(n)
        res_dr = _masked_product_residual(
            [(fr["Ncl"].freqresp(grid), dr.freqresp(grid)),
             (fr["Dcl"].freqresp(grid), nr.freqresp(grid))], eye)
        res_dl = _masked_product_residual(
            [(nl.freqresp(grid), fr["Dcr"].freqresp(grid)),
             (dl.freqresp(grid), fr["Ncr"].freqresp(grid))], eye)
        report.residuals["delta_r_identity"] = res_dr
        report.residuals["delta_l_identity"] = res_dl
        # cross-check the fraction form against the direct pointwise
        # interconnection formula on the grid
        v_frac = t_hat_ss.freqresp(grid)
        v_direct, mass = _pointwise_interconnection(T, T_c, grid)
        res_direct = float(np.max(np.abs(v_direct - v_frac) / (1.0 + mass)))
        report.residuals["direct_vs_fraction"] = res_direct
        if res_direct > CROSS_CHECK_TOL:
            raise ArithmeticError(
                f"interconnection cross-check failed: fraction and direct "
                f"forms differ by {res_direct:.2e} on the grid")
        if max(res_dr, res_dl) < PARAM_GRID_TOL:
            # with Delta = I the closed network reduces to Nr Ncl
            v_prod = ss_series(nr, fr["Ncl"]).freqresp(grid)
            res_prod = float(np.max(np.abs(v_prod - v_frac)
                                    / (1.0 + np.abs(v_prod) + np.abs(v_frac))))
            report.residuals["product_form"] = res_prod
            if res_prod > CROSS_CHECK_TOL:
                raise ArithmeticError(
                    f"T_hat disagrees with the Nr Ncl product form by "
                    f"{res_prod:.2e} although Delta = I")
        return InterconnectionResult(T_hat, delta_r, delta_l, report)
    # no fractions available: formal rational inverses
    t_inv = rm_inv(T)
    tc_inv = rm_inv(T_c)
    T_hat = rm_inv(t_inv + tc_inv)
    report = rm_is_stable(T_hat)
    poles = np.concatenate([T_hat.entry_poles(), T.entry_poles(),
                            T_c.entry_poles()])
    grid_pts = _cross_grid(poles)
    v_hat = T_hat.eval_grid(grid_pts)
    v_direct, mass = _pointwise_interconnection(T, T_c, grid_pts)
    res_direct = float(np.max(np.abs(v_direct - v_hat) / (1.0 + mass)))
    report.residuals["direct_vs_fraction"] = res_direct
    if res_direct > CROSS_CHECK_TOL:
        raise ArithmeticError(
            f"interconnection cross-check failed: rational and pointwise "
            f"forms differ by {res_direct:.2e} on the grid")
    return InterconnectionResult(T_hat, None, None, report)


def _cross_grid(poles) -> np.ndarray:
    from .ratmat import auto_grid

    return auto_grid(np.asarray(poles, dtype=complex))


# ---------------------------------------------------------------------------
# robustness sampling
# ---------------------------------------------------------------------------

@dataclass
class RobustnessReport:
    """Survival statistics of the interconnection under realization noise."""

    rel_eps: float
    seed: int
    trials: int
    stable: int
    unstable: int
    degenerate: int
    worst_margin: float
    nominal: StabilityReport
    notes: str = ""

    @property
    def fraction_stable(self) -> float:
        return self.stable / self.trials if self.trials else 0.0

    def __bool__(self) -> bool:
        return self.unstable == 0 and self.degenerate == 0

    def to_json_obj(self):
        return {
            "verdict": bool(self),
            "poles": [[float(p.real), float(p.imag)]
                      for p in np.asarray(self.nominal.poles)],
            "margin": float(self.worst_margin),
            "residuals": {k: float(v)
                          for k, v in self.nominal.residuals.items()},
            "trials": {
                "total": self.trials,
                "stable": self.stable,
                "unstable": self.unstable,
                "degenerate": self.degenerate,
                "fraction_stable": self.fraction_stable,
            },
            "rel_eps": float(self.rel_eps),
            "seed": int(self.seed),
            "notes": self.notes,
        }


def _compensator_inverse_ss(T_c: RationalMatrix, dcf: Dcf = None,
                            Q=None) -> StateSpace:
    """Realization of T_c^-1, via the fractions Ncl^-1 Dcl when available."""
    if dcf is not None:
        fr = _compensator_fraction_ss(dcf, _as_matrix_param(Q, dcf.size))
        return ss_series(ss_inv(fr["Ncl"]), fr["Dcl"])
    if not T_c.is_proper:
        raise ValueError("improper T_c needs its factorization (dcf, Q) "
                         "to form the interconnection")
    tci = rm_inv(T_c)
    if not tci.is_proper:
        raise ImproperMatrixError("T_c^-1 is improper; regularize the network")
    return rm_to_ss(tci)


def _closed_loop_ss(g: StateSpace, tc_inv_ss: StateSpace) -> StateSpace:
    """(T^-1 + T_c^-1)^-1 = (I + T T_c^-1)^-1 T without inverting T."""
    eye = StateSpace.static(np.eye(g.noutputs))
    mid = ss_add(eye, ss_series(g, tc_inv_ss))
    return ss_series(ss_inv(mid), g)


def _fraction_trial_closure(dcf: Dcf, Qm: RationalMatrix):
    """Closure mapping a perturbed realization of T to the interconnection.

    Uses T_hat = Nr~ Delta_r~^-1 Ncl with a fresh stable right fraction of
    the perturbed network: every state matrix in the composition is stable
    by construction, so an imperfect hidden-mode cancellation can only
    leave stable clutter, never a spurious unstable pole, while a genuine
    loss of stability shows up as an RHP zero of Delta_r~.
    """
    from .coprime import _place

    fr = _compensator_fraction_ss(dcf, Qm)
    ncl, dcl = fr["Ncl"], fr["Dcl"]
    F0 = dcf.realization["F"]
    fp = np.asarray(dcf.f_poles, dtype=complex)

    def closed_loop(gt: StateSpace) -> RationalMatrix:
        F = F0
        AF = gt.A + gt.B @ F
        eigs = np.linalg.eigvals(AF)
        if np.max(eigs.real) >= -stability_tol(eigs):
            # the perturbation pushed the reused feedback out of the stable
            # region; re-place it on the perturbed realization
            F = _place(gt.A, gt.B, fp)
            AF = gt.A + gt.B @ F
        eye = np.eye(gt.ninputs)
        dr = StateSpace(AF, gt.B, F, eye)
        nr = StateSpace(AF, gt.B, gt.C + gt.D @ F, gt.D)
        delta_ss = ss_add(ss_series(ncl, dr), ss_series(dcl, nr))
        t_hat_ss = ss_series(nr, ss_series(ss_inv(delta_ss), ncl))
        return rm_from_ss(t_hat_ss, validate=False)

    return closed_loop


def robustness_sample(T: RationalMatrix, T_c: RationalMatrix,
                      rel_eps: float, trials: int, seed: int,
                      dcf: Dcf = None, Q=None) -> RobustnessReport:
    """Stability survival under multiplicative realization perturbation.

    Every entry of the minimal realization (A, B, C, D) of T is multiplied
    by an independent (1 + delta), delta uniform on [-rel_eps, rel_eps];
    each perturbed interconnection is reduced to a minimal rational form
    before the pole verdict.  With a factorization of T available the
    interconnection is assembled from stable fraction blocks, which keeps
    the verdict immune to imperfectly cancelling unstable open-loop modes.
    """
    if rel_eps < 0.0:
        raise ValueError("rel_eps must be nonnegative")
    if trials < 1:
        raise ValueError("trials must be positive")
    if dcf is not None and dcf.realization is not None:
        r = dcf.realization
        g = StateSpace(r["A"], r["B"], r["C"], r["D"])
        closed_loop = _fraction_trial_closure(dcf, _as_matrix_param(Q, dcf.size))
    else:
        g = rm_to_ss(T)
        tc_inv_ss = _compensator_inverse_ss(T_c, dcf, Q)
        if tc_inv_ss.ninputs != g.noutputs:
            raise ValueError("T and T_c must be square of the same size")

        def closed_loop(gt: StateSpace) -> RationalMatrix:
            return rm_from_ss(_closed_loop_ss(gt, tc_inv_ss), validate=False)

    nominal = rm_is_stable(closed_loop(g))
    rng = np.random.default_rng(seed)
    stable = unstable = degenerate = 0
    worst = math.inf
    for _ in range(trials):
        mats = []
        for M in (g.A, g.B, g.C, g.D):
            delta = rng.uniform(-rel_eps, rel_eps, size=M.shape)
            mats.append(M * (1.0 + delta))
        try:
            rep = rm_is_stable(closed_loop(StateSpace(*mats)))
        except (ImproperMatrixError, np.linalg.LinAlgError, ZeroDivisionError,
                ArithmeticError, ValueError):
            degenerate += 1
            continue
        if rep.is_stable:
            stable += 1
        else:
            unstable += 1
        if np.isfinite(rep.margin):
            worst = min(worst, rep.margin)
    notes = ""
    if degenerate:
        notes = (f"{degenerate} trial(s) degenerate: perturbation broke "
                 f"well-posedness of the interconnection")
    return RobustnessReport(
        rel_eps=float(rel_eps), seed=int(seed), trials=int(trials),
        stable=stable, unstable=unstable, degenerate=degenerate,
        worst_margin=float(worst), nominal=nominal, notes=notes)

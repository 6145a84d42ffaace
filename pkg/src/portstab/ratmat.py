"""Rational matrices and state-space realizations.

Hybrid network function matrices live here in two interconvertible forms:
a grid of canonical scalar rational functions, and a real (A, B, C, D)
realization.  Conversions internally rescale the frequency axis so that
coefficient spans of tens of orders of magnitude (the op-amp example) do
not destroy conditioning.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .polyrat import (
    NEG_INF,
    Polynomial,
    RationalFunction,
    rf_is_stable,
    rf_is_unit,
    stability_tol,
)

__all__ = [
    "ImproperMatrixError",
    "RationalMatrix",
    "grid_override",
    "StabilityReport",
    "StateSpace",
    "log_grid",
    "auto_grid",
    "minreal",
    "rm_from_ss",
    "rm_inv",
    "rm_inv_from_ss",
    "ss_det",
    "rm_is_stable",
    "rm_is_unimodular",
    "rm_to_ss",
    "ss_add",
    "ss_inv",
    "ss_neg",
    "ss_series",
]

RANK_RTOL = 1e-8


class ImproperMatrixError(ValueError):
    """Raised when an operation needs a proper entry / invertible D and lacks it."""


# ---------------------------------------------------------------------------
# state space
# ---------------------------------------------------------------------------

@dataclass
class StateSpace:
    """Continuous-time realization C (sI - A)^-1 B + D."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        self.C = np.atleast_2d(np.asarray(self.C, dtype=float))
        self.D = np.atleast_2d(np.asarray(self.D, dtype=float))
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise ValueError("A must be square")
        if self.B.shape[0] != n or self.C.shape[1] != n:
            raise ValueError("B/C dimensions inconsistent with A")
        if self.D.shape != (self.C.shape[0], self.B.shape[1]):
            raise ValueError("D dimensions inconsistent with B, C")

    @property
    def order(self) -> int:
        return self.A.shape[0]

    @property
    def ninputs(self) -> int:
        return self.B.shape[1]

    @property
    def noutputs(self) -> int:
        return self.C.shape[0]

    @staticmethod
    def static(D) -> "StateSpace":
        D = np.atleast_2d(np.asarray(D, dtype=float))
        p, m = D.shape
        return StateSpace(np.zeros((0, 0)), np.zeros((0, m)), np.zeros((p, 0)), D)

    def eig(self) -> np.ndarray:
        if self.order == 0:
            return np.zeros(0, dtype=complex)
        return scipy.linalg.eigvals(self.A)

    def freqresp(self, s_points) -> np.ndarray:
        """Transfer matrix at each complex point, shape (len, p, m)."""
        s_points = np.asarray(s_points, dtype=complex).ravel()
        out = np.empty((s_points.size, self.noutputs, self.ninputs), dtype=complex)
        n = self.order
        for k, s in enumerate(s_points):
            if n == 0:
                out[k] = self.D
            else:
                X = np.linalg.solve(s * np.eye(n) - self.A, self.B)
                out[k] = self.C @ X + self.D
        return out

    def to_json_obj(self):
        return {
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "C": self.C.tolist(),
            "D": self.D.tolist(),
        }

    @staticmethod
    def from_json_obj(obj) -> "StateSpace":
        return StateSpace(
            np.asarray(obj["A"], dtype=float).reshape(len(obj["A"]), -1),
            np.asarray(obj["B"], dtype=float).reshape(len(obj["B"]), -1)
            if len(obj["B"])
            else np.zeros((0, len(obj["D"][0]) if obj["D"] else 0)),
            np.asarray(obj["C"], dtype=float).reshape(len(obj["C"]), -1),
            np.asarray(obj["D"], dtype=float),
        )


def ss_series(g2: StateSpace, g1: StateSpace) -> StateSpace:
    """Cascade y = g2(g1(u)), i.e. the transfer product G2 * G1."""
    n1, n2 = g1.order, g2.order
    A = np.block(
        [
            [g1.A, np.zeros((n1, n2))],
            [g2.B @ g1.C, g2.A],
        ]
    )
    B = np.vstack([g1.B, g2.B @ g1.D])
    C = np.hstack([g2.D @ g1.C, g2.C])
    D = g2.D @ g1.D
    return StateSpace(A, B, C, D)


def ss_add(g1: StateSpace, g2: StateSpace) -> StateSpace:
    n1, n2 = g1.order, g2.order
    A = scipy.linalg.block_diag(g1.A, g2.A) if n1 + n2 else np.zeros((0, 0))
    B = np.vstack([g1.B, g2.B])
    C = np.hstack([g1.C, g2.C])
    return StateSpace(A, B, C, g1.D + g2.D)


def ss_neg(g: StateSpace) -> StateSpace:
    return StateSpace(g.A, g.B, -g.C, -g.D)


def ss_inv(g: StateSpace, rcond: float = 1e-12) -> StateSpace:
    """Formal inverse via (A - B D^-1 C, B D^-1, -D^-1 C, D^-1)."""
    D = g.D
    if D.shape[0] != D.shape[1]:
        raise ValueError("inverse of non-square system")
    if D.size == 0:
        raise ImproperMatrixError("inverse is improper; regularize the network")
    sv = np.linalg.svd(D, compute_uv=False)
    if sv[-1] <= rcond * max(sv[0], 1.0):
        raise ImproperMatrixError("inverse is improper; regularize the network")
    Dinv = np.linalg.inv(D)
    A = g.A - g.B @ Dinv @ g.C
    return StateSpace(A, g.B @ Dinv, -Dinv @ g.C, Dinv)


def minreal(g: StateSpace, tol: float = RANK_RTOL) -> StateSpace:
    """Minimal realization via the rational round trip.

    Hidden modes cancel entry by entry at root level (scale-relative
    tolerance) and the reconstruction groups poles into clusters whose rank
    decisions each happen at a single magnitude scale.  This survives the
    op-amp's seven-decade eigenvalue spread, where a plain staircase
    reduction misjudges ranks.
    """
    if g.order == 0:
        return g
    return rm_to_ss(rm_from_ss(g), tol)


# ---------------------------------------------------------------------------
# rational matrices
# ---------------------------------------------------------------------------

@dataclass
class RationalMatrix:
    """Dense grid of canonical scalar rational functions."""

    entries: list  # list of rows of RationalFunction

    def __post_init__(self):
        if not self.entries or not self.entries[0]:
            raise ValueError("empty rational matrix")
        cols = len(self.entries[0])
        for row in self.entries:
            if len(row) != cols:
                raise ValueError("ragged rational matrix")

    # -- constructors ------------------------------------------------------
    @staticmethod
    def from_scalar(f: RationalFunction) -> "RationalMatrix":
        return RationalMatrix([[f]])

    @staticmethod
    def from_const(K) -> "RationalMatrix":
        K = np.atleast_2d(np.asarray(K, dtype=float))
        return RationalMatrix(
            [[RationalFunction.const(K[i, j]) for j in range(K.shape[1])]
             for i in range(K.shape[0])]
        )

    @staticmethod
    def identity(n: int) -> "RationalMatrix":
        return RationalMatrix.from_const(np.eye(n))

    @staticmethod
    def zeros(p: int, m: int) -> "RationalMatrix":
        return RationalMatrix.from_const(np.zeros((p, m)))

    # -- queries -----------------------------------------------------------
    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    @property
    def is_proper(self) -> bool:
        return all(e.is_proper for row in self.entries for e in row)

    def entry(self, i: int, j: int) -> RationalFunction:
        return self.entries[i][j]

    def eval(self, s: complex) -> np.ndarray:
        return np.array([[e(s) for e in row] for row in self.entries], dtype=complex)

    def eval_grid(self, grid) -> np.ndarray:
        grid = np.asarray(grid, dtype=complex).ravel()
        return np.array([self.eval(s) for s in grid])

    def entry_poles(self) -> np.ndarray:
        out = [e.poles() for row in self.entries for e in row]
        return np.concatenate(out) if out else np.zeros(0, dtype=complex)

    # -- algebra -----------------------------------------------------------
    def __add__(self, other: "RationalMatrix") -> "RationalMatrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("dimension mismatch in matrix addition")
        return RationalMatrix(
            [[self.entries[i][j] + other.entries[i][j] for j in range(self.cols)]
             for i in range(self.rows)]
        )

    def __sub__(self, other: "RationalMatrix") -> "RationalMatrix":
        return self + (-other)

    def __neg__(self) -> "RationalMatrix":
        return RationalMatrix([[-e for e in row] for row in self.entries])

    def __matmul__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.cols != other.rows:
            raise ValueError("dimension mismatch in matrix product")
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = RationalFunction.zero()
                for k in range(self.cols):
                    acc = acc + self.entries[i][k] * other.entries[k][j]
                row.append(acc)
            out.append(row)
        return RationalMatrix(out)

    def transpose(self) -> "RationalMatrix":
        return RationalMatrix(
            [[self.entries[i][j] for i in range(self.rows)] for j in range(self.cols)]
        )

    def det(self) -> RationalFunction:
        """Determinant by Laplace expansion (symbolic; small matrices only)."""
        if not self.is_square:
            raise ValueError("determinant of non-square matrix")
        n = self.rows
        if n == 1:
            return self.entries[0][0]
        if n == 2:
            a, b = self.entries[0]
            c, d = self.entries[1]
            return a * d - b * c
        acc = RationalFunction.zero()
        for j in range(n):
            minor = RationalMatrix(
                [[self.entries[i][k] for k in range(n) if k != j]
                 for i in range(1, n)]
            )
            term = self.entries[0][j] * minor.det()
            acc = acc + term if j % 2 == 0 else acc - term
        return acc

    # -- serialization -----------------------------------------------------
    def to_json_obj(self):
        return {
            "rows": self.rows,
            "cols": self.cols,
            "entries": [[e.to_json_obj() for e in row] for row in self.entries],
        }

    @staticmethod
    def from_json_obj(obj) -> "RationalMatrix":
        return RationalMatrix(
            [[RationalFunction.from_json_obj(e) for e in row] for row in obj["entries"]]
        )


@dataclass
class StabilityReport:
    """Poles, margins, residuals and the verdict for a network or interconnection."""

    poles: np.ndarray
    is_stable: bool
    margin: float
    residuals: dict = field(default_factory=dict)
    notes: str = ""

    def __bool__(self) -> bool:
        return self.is_stable

    def to_json_obj(self):
        return {
            "verdict": bool(self.is_stable),
            "poles": [[float(p.real), float(p.imag)] for p in np.asarray(self.poles)],
            "margin": float(self.margin),
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "notes": self.notes,
        }


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------

def log_grid(lo: float = 1e-2, hi: float = 1e2, n: int = 61) -> np.ndarray:
    """Log-spaced points on the imaginary axis, j*omega."""
    return 1j * np.logspace(math.log10(lo), math.log10(hi), n)


def grid_override():
    """Frequency bounds from the PORTSTAB_GRID env var, or None.

    Format: "lo,hi" or "lo,hi,n" with 0 < lo < hi in rad/s and n >= 2
    points.  When set it replaces the automatically chosen bounds of every
    verification grid.
    """
    raw = os.environ.get("PORTSTAB_GRID")
    if not raw:
        return None
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) not in (2, 3):
        raise ValueError('PORTSTAB_GRID must be "lo,hi" or "lo,hi,n"')
    lo, hi = float(parts[0]), float(parts[1])
    n = int(parts[2]) if len(parts) == 3 else 61
    if not (0.0 < lo < hi) or n < 2:
        raise ValueError("PORTSTAB_GRID needs 0 < lo < hi and n >= 2")
    return lo, hi, n


def auto_grid(poles, n: int = 61) -> np.ndarray:
    """Grid bracketing the pole magnitudes by two decades each side.

    The PORTSTAB_GRID environment variable, when set, overrides the bounds
    (see grid_override).
    """
    ov = grid_override()
    if ov is not None:
        return log_grid(ov[0], ov[1], ov[2])
    mags = np.abs(np.asarray(poles, dtype=complex).ravel())
    mags = mags[mags > 0]
    if mags.size == 0:
        return log_grid(1e-2, 1e2, n)
    return log_grid(float(mags.min()) / 100.0, float(mags.max()) * 100.0, n)


# ---------------------------------------------------------------------------
# conversions
# ---------------------------------------------------------------------------

def _freq_scale_from_roots(root_mags) -> float:
    mags = np.asarray(root_mags, dtype=float)
    mags = mags[mags > 0]
    if mags.size == 0:
        return 1.0
    return float(np.exp(np.mean(np.log(mags))))


# Poles closer than this (relative) are treated as one McMillan pole.
CLUSTER_RTOL = 1e-7


def _cluster_poles(pole_list):
    """Union-find clustering of (entry_index, pole) pairs by relative distance."""
    vals = [p for _, p in pole_list]
    n = len(vals)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(vals[i] - vals[j]) <= CLUSTER_RTOL * (
                1.0 + max(abs(vals[i]), abs(vals[j]))
            ):
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [[pole_list[i] for i in idxs] for idxs in groups.values()]


def _entry_factored(e: RationalFunction):
    """(gain, zeros, poles) of a canonical entry; gain is num.lead (den monic)."""
    zeros = e.zeros() if not e.is_zero else np.zeros(0, dtype=complex)
    poles = e.poles()
    return float(e.num.lead) if not e.is_zero else 0.0, zeros, poles


def _partial_fraction_block(k, zeros, poles, cluster_roots, lam):
    """Coefficients R_1..R_m of the 1/(s-lam)^j terms for one entry.

    ``cluster_roots`` are the entry's own poles belonging to the cluster;
    g(s) = entry(s) * prod(s - r) is analytic near lam, and its Taylor
    coefficients (by trapezoid/FFT on a small circle) give the partial
    fraction coefficients in reverse order.
    """
    m = len(cluster_roots)
    others = [p for p in poles if not any(p is r or p == r for r in cluster_roots)]
    # Residue of a simple pole straight from the factored form.
    if m == 1:
        p0 = cluster_roots[0]
        num = k * np.prod([p0 - z for z in zeros]) if len(zeros) else k
        den = np.prod([p0 - p for p in others]) if others else 1.0
        return [num / den]
    # Taylor extraction on a circle well inside the nearest other singularity.
    dists = [abs(lam - p) for p in others]
    d = min(dists) if dists else 1.0 + abs(lam)
    r = 0.25 * d
    N = 64
    th = np.exp(2j * np.pi * np.arange(N) / N)
    spts = lam + r * th
    gv = np.full(N, complex(k))
    for z in zeros:
        gv *= spts - z
    for p in others:
        gv /= spts - p
    taylor = np.fft.fft(gv) / N / r ** np.arange(N)
    # entry = g/(s-lam)^m => coefficient of (s-lam)^-(m-j) is taylor[j]
    return [taylor[m - i] for i in range(1, m + 1)]


def _ho_kalman(R, tol):
    """Minimal (N, B, C) with R_j = C N^(j-1) B from a finite coefficient chain."""
    M = len(R)
    p, m = R[0].shape
    Rpad = list(R) + [np.zeros((p, m), dtype=complex)] * M
    H0 = np.block([[Rpad[i + j] for j in range(M)] for i in range(M)])
    H1 = np.block([[Rpad[i + j + 1] for j in range(M)] for i in range(M)])
    # Equilibrate outputs/inputs so the rank cut is scale-fair across entries.
    dp = np.array([max(np.max(np.abs(np.vstack([Rj[i] for Rj in R]))), 1e-300)
                   for i in range(p)])
    dm = np.array([max(np.max(np.abs(np.hstack([Rj[:, j] for Rj in R]))), 1e-300)
                   for j in range(m)])
    Sp = np.diag(np.tile(1.0 / dp, M))
    Sm = np.diag(np.tile(1.0 / dm, M))
    H0s = Sp @ H0 @ Sm
    H1s = Sp @ H1 @ Sm
    U, s, Vh = np.linalg.svd(H0s)
    r = int(np.sum(s > tol * (s[0] if s.size else 0.0)))
    if r == 0:
        return (np.zeros((0, 0), dtype=complex),
                np.zeros((0, m), dtype=complex),
                np.zeros((p, 0), dtype=complex))
    sq = np.sqrt(s[:r])
    O = U[:, :r] * sq
    Ct = sq[:, None] * Vh[:r]
    N = (U[:, :r].conj().T @ H1s @ Vh[:r].conj().T) / np.outer(sq, sq)
    B = Ct[:, :m] * dm[None, :]  # undo input scaling
    C = O[:p, :] * dp[:, None]  # undo output scaling
    return N, B, C


def rm_to_ss(M: RationalMatrix, tol: float = RANK_RTOL) -> StateSpace:
    """Minimal state-space realization of a proper rational matrix.

    Pole-cluster (Gilbert-style) construction: poles are clustered across
    entries, each cluster's partial fraction coefficients feed a small
    Ho-Kalman factorization, and conjugate clusters fold into real blocks.
    All rank decisions happen at one cluster's own magnitude scale.
    """
    p, m = M.rows, M.cols
    for i, row in enumerate(M.entries):
        for j, e in enumerate(row):
            if not e.is_proper:
                raise ImproperMatrixError(
                    f"entry ({i},{j}) is improper; regularize the network "
                    "(add small series/parallel port resistances)"
                )
    D = np.zeros((p, m))
    factored = {}
    pole_list = []
    for i in range(p):
        for j in range(m):
            e = M.entries[i][j]
            D[i, j] = e.gain_at_infinity()
            k, zeros, poles = _entry_factored(e)
            factored[i, j] = (k, zeros, poles)
            for q in poles:
                pole_list.append(((i, j), q))
    if not pole_list:
        return StateSpace.static(D)

    blocks_A, blocks_B, blocks_C = [], [], []
    for members in _cluster_poles(pole_list):
        lam = np.mean([q for _, q in members])
        if abs(lam.imag) <= 1e-8 * (1.0 + abs(lam)):
            lam = complex(lam.real, 0.0)
            is_real = True
        elif lam.imag > 0:
            is_real = False
        else:
            continue  # mirrored by the conjugate cluster
        by_entry = {}
        for (ij, q) in members:
            by_entry.setdefault(ij, []).append(q)
        mult = max(len(v) for v in by_entry.values())
        R = [np.zeros((p, m), dtype=complex) for _ in range(mult)]
        for (i, j), roots in by_entry.items():
            k, zeros, poles = factored[i, j]
            coeffs = _partial_fraction_block(k, zeros, poles, roots, lam)
            for order, c in enumerate(coeffs, start=1):
                R[order - 1][i, j] = c
        N, Bc, Cc = _ho_kalman(R, tol)
        r = N.shape[0]
        if r == 0:
            continue
        Ac = lam * np.eye(r) + N
        if is_real:
            blocks_A.append(Ac.real)
            blocks_B.append(Bc.real)
            blocks_C.append(Cc.real)
        else:
            # Real 2r-state block covering the conjugate pair.
            blocks_A.append(
                np.block([[Ac.real, -Ac.imag], [Ac.imag, Ac.real]])
            )
            blocks_B.append(np.vstack([Bc.real, Bc.imag]))
            blocks_C.append(np.hstack([2.0 * Cc.real, -2.0 * Cc.imag]))
    if not blocks_A:
        return StateSpace.static(D)
    A = scipy.linalg.block_diag(*blocks_A)
    B = np.vstack(blocks_B)
    C = np.hstack(blocks_C)
    return StateSpace(A, B, C, D)


def _real_poly(roots, lead: float, rtol: float = 1e-6) -> Polynomial:
    """Real polynomial from an approximately self-conjugate root set."""
    r = np.asarray(roots, dtype=complex).ravel()
    if r.size == 0:
        return Polynomial([lead])
    c = np.atleast_1d(np.poly(r))
    scale = np.max(np.abs(c.real)) + 1e-300
    if np.max(np.abs(c.imag)) > rtol * scale:
        warnings.warn("root set deviates from self-conjugacy; taking real part")
    return Polynomial(lead * c.real[::-1])


def _pencil_zeros(As, B, C, D) -> np.ndarray:
    """Finite roots of det[[A - sI, B], [C, D]] via the Rosenbrock pencil.

    For a square subsystem these are the zeros of det(T(s)) together with
    any eigenvalues of A hidden from that subsystem.  The pencil is
    balanced first: a diagonal state similarity, then free row/column
    scalings of the input/output borders, which leave the generalized
    eigenvalues unchanged but shrink the dynamic range QZ sees.
    """
    n = As.shape[0]
    m = B.shape[1]
    Ab, Tv = scipy.linalg.matrix_balance(As, permute=False)
    Td = np.diag(Tv)
    Bb = B / Td[:, None]
    Cb = C * Td[None, :]
    na = np.linalg.norm(Ab) + 1e-300
    al = na / (np.linalg.norm(Bb) + 1e-300)
    be = na / (np.linalg.norm(Cb) + 1e-300)
    M = np.block([[Ab, Bb * al], [Cb * be, np.atleast_2d(D) * al * be]])
    N = np.zeros((n + m, n + m))
    N[:n, :n] = np.eye(n)
    vals = scipy.linalg.eigvals(M, N)
    finite = vals[np.isfinite(vals)]
    # QZ reports near-infinite eigenvalues as huge finite numbers; drop them.
    scale = max(1.0, np.max(np.abs(scipy.linalg.eigvals(As))) if n else 1.0)
    return finite[np.abs(finite) < 1e10 * scale]


def _entry_zeros(As, b, c, d) -> np.ndarray:
    """Finite transmission zeros of a SISO subsystem via the Rosenbrock pencil."""
    return _pencil_zeros(As, b.reshape(-1, 1), c.reshape(1, -1),
                         np.atleast_2d(float(d)))


def _det_probes(poles_s):
    """Probe points away from a scaled pole set, for gain fitting."""
    mags = np.abs(poles_s)
    mags = mags[mags > 0]
    lo = float(mags.min()) / 3.0 if mags.size else 0.3
    hi = float(mags.max()) * 3.0 if mags.size else 3.0
    cand = np.geomspace(lo, hi, 23)
    dist = np.array([np.min(np.abs(t - poles_s)) / (1.0 + t)
                     if poles_s.size else 1.0 for t in cand])
    return cand[np.argsort(-dist)[:7]]


def ss_det(g: StateSpace) -> RationalFunction:
    """Determinant of the transfer matrix of a realization, in root space.

    Zeros come from the full Rosenbrock pencil, poles from eig(A); pairs
    hidden from the determinant cancel at root level before a probe-point
    gain fit, which keeps the result accurate even when the monomial-basis
    expansion of the determinant would lose digits to cancellation.
    """
    if g.ninputs != g.noutputs:
        raise ValueError("determinant of a non-square system")
    if g.order == 0:
        return RationalFunction.const(float(np.linalg.det(g.D)))
    poles = g.eig()
    w0 = _freq_scale_from_roots(np.abs(poles))
    As, Bs = g.A / w0, g.B / w0
    poles_s = poles / w0
    zeros_s = _pencil_zeros(As, Bs, g.C, g.D)
    if zeros_s.size > g.order:
        zeros_s = zeros_s[np.argsort(np.abs(zeros_s))[: g.order]]
    zk, pk = _cancel_root_pairs(zeros_s, poles_s)
    probes = _det_probes(poles_s)
    gs = StateSpace(As, Bs, g.C, g.D)
    vals = np.array([np.linalg.det(gs.freqresp([t])[0]) for t in probes])
    if np.max(np.abs(vals)) == 0.0:
        return RationalFunction.zero()
    ks = vals * np.array([np.prod(t - pk) / np.prod(t - zk) for t in probes])
    k = float(np.median(ks.real))
    num_s = _real_poly(zk, k)
    den_s = _real_poly(pk, 1.0)
    num = Polynomial(num_s.coeffs * w0 ** -np.arange(num_s.coeffs.size))
    den = Polynomial(den_s.coeffs * w0 ** -np.arange(den_s.coeffs.size))
    return RationalFunction(num, den).canonical()


def rm_inv_from_ss(g: StateSpace) -> RationalMatrix:
    """Formal inverse of the transfer matrix of g as cofactor/determinant.

    Works whether or not the inverse is proper: every minor determinant is
    extracted in root space through its own Rosenbrock pencil, so the huge
    monomial cancellations of an adjugate expansion never materialize.
    """
    m = g.noutputs
    if g.ninputs != m:
        raise ValueError("inverse of non-square system")
    det = ss_det(g)
    if det.is_zero:
        raise ZeroDivisionError("rational matrix is singular")
    if m == 1:
        return RationalMatrix([[det.inverse()]])
    out = [[None] * m for _ in range(m)]
    for i in range(m):
        for j in range(m):
            keep_r = [r for r in range(m) if r != j]
            keep_c = [c for c in range(m) if c != i]
            sub = StateSpace(g.A, g.B[:, keep_c], g.C[keep_r, :],
                             g.D[np.ix_(keep_r, keep_c)])
            cof = ss_det(sub)
            if (i + j) % 2 == 1:
                cof = -cof
            out[i][j] = (cof / det).canonical()
    return RationalMatrix(out)


def _cancel_root_pairs(zeros, poles, rtol: float = 1e-7):
    """Drop zero/pole pairs that agree to within rtol (hidden-mode cancellation)."""
    zk = list(np.asarray(zeros, dtype=complex))
    pk = list(np.asarray(poles, dtype=complex))
    out_z = []
    for z in zk:
        if not pk:
            out_z.append(z)
            continue
        d = np.abs(np.array(pk) - z)
        idx = int(np.argmin(d))
        if d[idx] <= rtol * (1.0 + abs(pk[idx])):
            pk.pop(idx)
        else:
            out_z.append(z)
    return np.array(out_z, dtype=complex), np.array(pk, dtype=complex)


def rm_from_ss(g: StateSpace, validate: bool = True) -> RationalMatrix:
    """Rational-matrix form of a realization, entry by entry via pole/zero/gain.

    Poles come from eig(A) (common to all entries); each entry's zeros from
    its Rosenbrock pencil; the gain from probe-point evaluation.  Hidden
    (non-minimal) modes cancel during canonicalization.
    """
    n, p, m = g.order, g.noutputs, g.ninputs
    if n == 0:
        return RationalMatrix.from_const(g.D)
    poles = g.eig()
    w0 = _freq_scale_from_roots(np.abs(poles))
    As, Bs = g.A / w0, g.B / w0
    poles_s = poles / w0
    mags = np.abs(poles_s)
    mags = mags[mags > 0]
    lo = float(mags.min()) / 3.0 if mags.size else 0.3
    hi = float(mags.max()) * 3.0 if mags.size else 3.0
    cand = np.geomspace(lo, hi, 23)
    # keep probes comfortably away from the pole set
    dist = np.array([np.min(np.abs(t - poles_s)) / (1.0 + t) for t in cand])
    probes = cand[np.argsort(-dist)[:7]]
    gs = StateSpace(As, Bs, g.C, g.D)
    F = gs.freqresp(probes)
    gscale = float(np.max(np.abs(F))) + 1e-300

    den_s = _real_poly(poles_s, 1.0)
    out = []
    for i in range(p):
        row = []
        for j in range(m):
            vals = F[:, i, j]
            if np.max(np.abs(vals)) <= 1e-13 * gscale:
                row.append(RationalFunction.const(float(g.D[i, j])) if abs(g.D[i, j]) > 1e-13 * gscale else RationalFunction.zero())
                continue
            zeros_s = _entry_zeros(As, Bs[:, [j]], g.C[[i], :], g.D[i, j])
            if zeros_s.size > n:
                zeros_s = zeros_s[np.argsort(np.abs(zeros_s))[:n]]
            # Hidden modes of the SISO subsystem show up as pole/zero pairs
            # matching only to eigensolver accuracy; cancel them in root space
            # before fitting the gain so the mismatch never enters the entry.
            zk, pk = _cancel_root_pairs(zeros_s, poles_s)
            ks = vals * np.array(
                [np.prod(t - pk) / np.prod(t - zk) for t in probes]
            )
            k = float(np.median(ks.real))
            num_s = _real_poly(zk, k)
            dens = _real_poly(pk, 1.0)
            num = Polynomial(num_s.coeffs * w0 ** -np.arange(num_s.coeffs.size))
            den = Polynomial(dens.coeffs * w0 ** -np.arange(dens.coeffs.size))
            row.append(RationalFunction(num, den).canonical())
        out.append(row)
    M = RationalMatrix(out)
    if validate:
        chk = np.array([M.eval(w0 * t) for t in probes])
        err = np.max(np.abs(chk - F)) / gscale
        if err > 1e-6:
            warnings.warn(f"state-space to rational conversion residual {err:.2e}")
    return M


def rm_inv(M: RationalMatrix) -> RationalMatrix:
    """Formal inverse of a square rational matrix.

    Proper inverses go through state space (inverted D path); when the
    realization's D matrix is singular the inverse is improper and is
    computed from pencil-based minor determinants instead, left for the
    caller to flag.  Matrices with improper entries fall back to the
    symbolic adjugate.
    """
    if not M.is_square:
        raise ValueError("inverse of non-square matrix")
    if M.is_proper:
        g = rm_to_ss(M)
        try:
            return rm_from_ss(ss_inv(g))
        except ImproperMatrixError:
            return rm_inv_from_ss(g)
    d = M.det()
    if d.is_zero:
        raise ZeroDivisionError("rational matrix is singular")
    n = M.rows
    if n == 1:
        return RationalMatrix([[d.inverse()]])
    adj = []
    for i in range(n):
        row = []
        for j in range(n):
            minor = RationalMatrix(
                [[M.entries[r][c] for c in range(n) if c != i]
                 for r in range(n) if r != j]
            )
            cof = minor.det()
            if (i + j) % 2 == 1:
                cof = -cof
            row.append(cof / d)
        adj.append(row)
    return RationalMatrix(adj)


def rm_is_stable(M: RationalMatrix) -> StabilityReport:
    """BSBR membership: every entry in the stable proper algebra.

    McMillan poles (eigenvalues of the minimal realization) populate the
    report when the matrix is proper; entry-wise poles go in the notes.
    """
    verdicts = [[rf_is_stable(e) for e in row] for row in M.entries]
    ok = all(v.is_stable for row in verdicts for v in row)
    notes = []
    for i, row in enumerate(verdicts):
        for j, v in enumerate(row):
            if not v.is_stable:
                notes.append(f"entry ({i},{j}): {v.notes or 'RHP pole'}")
    if M.is_proper:
        poles = minreal(rm_to_ss(M)).eig()
    else:
        poles = M.entry_poles()
    margin = float(np.min(-poles.real)) if poles.size else math.inf
    return StabilityReport(
        poles=poles,
        is_stable=ok,
        margin=margin,
        notes="; ".join(notes) if notes else "entry poles aggregated in McMillan sense",
    )


def rm_is_unimodular(M: RationalMatrix) -> bool:
    """Square, every entry stable proper, determinant a unit."""
    if not M.is_square:
        raise ValueError("unimodularity of non-square matrix")
    if not all(rf_is_stable(e) for row in M.entries for e in row):
        return False
    return rf_is_unit(M.det())

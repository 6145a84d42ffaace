"""Real-coefficient polynomials and scalar rational functions.

Everything downstream (network functions, coprime fractions, compensators)
is built on the two value types defined here.  Coefficients are stored in
ascending powers of s, so ``coeffs[k]`` multiplies ``s**k``.  The zero
polynomial is canonically the empty coefficient sequence and its degree is
the -inf sentinel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

__all__ = [
    "NEG_INF",
    "Polynomial",
    "RationalFunction",
    "StabilityVerdict",
    "poly_roots",
    "rf_is_stable",
    "rf_is_unit",
    "stability_tol",
]

NEG_INF = float("-inf")

# Residues from catastrophic cancellation in polynomial sums are trimmed
# when they fall this far below the accumulation bound of that coefficient.
CANCEL_REL = 1e-10
# Roots of num and den closer than this (relative) are cancelled.
GCD_REL_TOL = 1e-6
# Relative stability margin; see stability_tol().
STAB_REL_TOL = 1e-9


def _trim(coeffs) -> np.ndarray:
    """Strip trailing zero coefficients.

    Only exact zeros are dropped here: coefficients of network polynomials
    legitimately span tens of orders of magnitude, so a magnitude-relative
    cut in the constructor would destroy real dynamics.  Cancellation
    residue is trimmed in __add__ where an error bound is available.
    """
    c = np.atleast_1d(np.asarray(coeffs, dtype=float)).ravel()
    if c.size == 0:
        return c
    keep = np.nonzero(c != 0.0)[0]
    if keep.size == 0:
        return np.zeros(0)
    return c[: keep[-1] + 1].copy()


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial in ascending powers of s."""

    coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _trim(self.coeffs))

    # -- constructors ------------------------------------------------------
    @staticmethod
    def zero() -> "Polynomial":
        return Polynomial(np.zeros(0))

    @staticmethod
    def one() -> "Polynomial":
        return Polynomial([1.0])

    @staticmethod
    def const(c: float) -> "Polynomial":
        return Polynomial([float(c)])

    @staticmethod
    def s() -> "Polynomial":
        return Polynomial([0.0, 1.0])

    @staticmethod
    def from_roots(roots, lead: float = 1.0, rtol: float = 1e-6) -> "Polynomial":
        """Monic-from-roots polynomial scaled by ``lead``.

        The root set must be self-conjugate up to rtol (floating-point
        eigenvalue output is only approximately paired).
        """
        r = np.asarray(roots, dtype=complex).ravel()
        if r.size == 0:
            return Polynomial([lead])
        c = np.atleast_1d(np.poly(r))[::-1]  # np.poly is descending
        if np.max(np.abs(c.imag)) > rtol * (np.max(np.abs(c.real)) + 1e-300):
            raise ValueError("root set is not self-conjugate")
        return Polynomial(lead * c.real)

    # -- queries -----------------------------------------------------------
    @property
    def degree(self) -> float:
        return NEG_INF if self.coeffs.size == 0 else float(self.coeffs.size - 1)

    @property
    def is_zero(self) -> bool:
        return self.coeffs.size == 0

    @property
    def lead(self) -> float:
        if self.is_zero:
            return 0.0
        return float(self.coeffs[-1])

    def __call__(self, s):
        if self.is_zero:
            return np.zeros_like(np.asarray(s, dtype=complex))
        return npoly.polyval(np.asarray(s, dtype=complex), self.coeffs)

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other: "Polynomial") -> "Polynomial":
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        out = npoly.polyadd(self.coeffs, other.coeffs)
        bound = npoly.polyadd(np.abs(self.coeffs), np.abs(other.coeffs))
        # Trailing coefficients that are pure cancellation residue change the
        # apparent degree; drop them against the accumulation bound.
        k = out.size
        while k > 0 and abs(out[k - 1]) <= CANCEL_REL * bound[k - 1]:
            k -= 1
        return Polynomial(out[:k])

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __neg__(self) -> "Polynomial":
        return Polynomial(-self.coeffs)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Polynomial(self.coeffs * float(other))
        if self.is_zero or other.is_zero:
            return Polynomial.zero()
        return Polynomial(npoly.polymul(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def monic(self) -> "Polynomial":
        if self.is_zero:
            return self
        return Polynomial(self.coeffs / self.lead)

    def scale_s(self, w0: float) -> "Polynomial":
        """Substitute s -> w0*s (returns p(w0 s))."""
        if self.is_zero:
            return self
        k = np.arange(self.coeffs.size)
        return Polynomial(self.coeffs * (w0 ** k))

    def pow(self, k: int) -> "Polynomial":
        out = Polynomial.one()
        for _ in range(k):
            out = out * self
        return out

    # -- serialization -----------------------------------------------------
    def to_json_obj(self):
        return [float(c) for c in self.coeffs]

    @staticmethod
    def from_json_obj(obj) -> "Polynomial":
        return Polynomial(np.asarray(obj, dtype=float))


def poly_roots(p: Polynomial) -> np.ndarray:
    """All complex roots of p with multiplicity (companion-matrix method).

    Coefficients are rescaled in s before the eigenvalue call so that op-amp
    scale polynomials (coefficients spanning tens of orders of magnitude)
    stay well conditioned; roots are unscaled exactly afterwards.
    """
    if p.is_zero:
        raise ValueError("roots of zero polynomial undefined")
    if p.degree == 0:
        return np.zeros(0, dtype=complex)
    c = p.coeffs / p.lead
    n = c.size - 1
    # Classical root-magnitude bound as the scaling frequency.
    mags = [abs(c[k]) ** (1.0 / (n - k)) for k in range(n) if c[k] != 0.0]
    w0 = max(mags) if mags else 1.0
    if not np.isfinite(w0) or w0 <= 0.0:
        w0 = 1.0
    scaled = c * w0 ** (np.arange(n + 1) - n)  # ascending coeffs of p(w0 s)/w0**n
    r = np.roots(scaled[::-1])
    return r * w0


def stability_tol(poles) -> float:
    """Scale-aware RHP threshold: 1e-9 * (1 + max |Re pole|)."""
    poles = np.asarray(poles, dtype=complex).ravel()
    if poles.size == 0:
        return STAB_REL_TOL
    return STAB_REL_TOL * (1.0 + float(np.max(np.abs(poles.real))))


def _split_conjugate(roots):
    """Partition a self-conjugate root set into (reals, upper-half pairs)."""
    reals, upper = [], []
    for z in roots:
        if abs(z.imag) <= 1e-8 * (1.0 + abs(z)):
            reals.append(complex(z.real, 0.0))
        elif z.imag > 0:
            upper.append(z)
    return reals, upper


def _greedy_cancel(rn: list, rd: list):
    """Greedy nearest-pair cancellation within GCD_REL_TOL; mutates rd."""
    out, cancelled = [], False
    for zn in rn:
        best_j, best_dist = -1, np.inf
        for j, zd in enumerate(rd):
            d = abs(zn - zd)
            if d < best_dist:
                best_j, best_dist = j, d
        if best_j >= 0 and best_dist <= GCD_REL_TOL * (
            1.0 + max(abs(zn), abs(rd[best_j]))
        ):
            rd.pop(best_j)
            cancelled = True
            continue
        out.append(zn)
    return out, cancelled


def _match_and_cancel(rn: np.ndarray, rd: np.ndarray):
    """Cancel matching num/den roots, conjugate-symmetrically.

    Real roots pair with real roots, upper-half complex roots with
    upper-half ones (the mirrored cancellation is implied), so the
    surviving sets stay exactly self-conjugate.
    """
    n_re, n_up = _split_conjugate(rn)
    d_re, d_up = _split_conjugate(rd)
    n_re2, c1 = _greedy_cancel(n_re, d_re)
    n_up2, c2 = _greedy_cancel(n_up, d_up)
    out_n = n_re2 + n_up2 + [z.conjugate() for z in n_up2]
    out_d = d_re + d_up + [z.conjugate() for z in d_up]
    return (
        np.asarray(out_n, dtype=complex),
        np.asarray(out_d, dtype=complex),
        c1 or c2,
    )


@dataclass(frozen=True)
class RationalFunction:
    """Canonical rational function: monic denominator, tolerance-reduced."""

    num: Polynomial
    den: Polynomial

    def __post_init__(self):
        if self.den.is_zero:
            raise ZeroDivisionError("rational function with zero denominator")

    # -- constructors ------------------------------------------------------
    @staticmethod
    def make(num, den=(1.0,)) -> "RationalFunction":
        """Build from coefficient sequences (or Polynomials) and canonicalize."""
        n = num if isinstance(num, Polynomial) else Polynomial(num)
        d = den if isinstance(den, Polynomial) else Polynomial(den)
        return RationalFunction(n, d).canonical()

    @staticmethod
    def const(c: float) -> "RationalFunction":
        return RationalFunction(Polynomial.const(c), Polynomial.one())

    @staticmethod
    def zero() -> "RationalFunction":
        return RationalFunction(Polynomial.zero(), Polynomial.one())

    @staticmethod
    def one() -> "RationalFunction":
        return RationalFunction.const(1.0)

    @staticmethod
    def s() -> "RationalFunction":
        return RationalFunction(Polynomial.s(), Polynomial.one())

    # -- canonical form ----------------------------------------------------
    def canonical(self) -> "RationalFunction":
        num, den = self.num, self.den
        if num.is_zero:
            return RationalFunction(Polynomial.zero(), Polynomial.one())
        if num.degree >= 1 and den.degree >= 1:
            rn = poly_roots(num)
            rd = poly_roots(den)
            rn2, rd2, cancelled = _match_and_cancel(rn, rd)
            if cancelled:
                num = Polynomial.from_roots(rn2, num.lead)
                den = Polynomial.from_roots(rd2, den.lead)
        lead = den.lead
        return RationalFunction(Polynomial(num.coeffs / lead), den.monic())

    # -- queries -----------------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    @property
    def is_proper(self) -> bool:
        return self.num.degree <= self.den.degree

    @property
    def is_strictly_proper(self) -> bool:
        return self.num.degree < self.den.degree

    @property
    def is_biproper(self) -> bool:
        return self.num.degree == self.den.degree

    def poles(self) -> np.ndarray:
        return poly_roots(self.den)

    def zeros(self) -> np.ndarray:
        if self.num.is_zero:
            return np.zeros(0, dtype=complex)
        return poly_roots(self.num)

    def gain_at_infinity(self) -> float:
        """lim s->inf, zero when strictly proper, inf-sentinel when improper."""
        if self.is_strictly_proper:
            return 0.0
        if not self.is_proper:
            return math.inf
        return self.num.lead / self.den.lead

    def __call__(self, s):
        return self.num(s) / self.den(s)

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other) -> "RationalFunction":
        other = _as_rf(other)
        num = self.num * other.den + other.num * self.den
        return RationalFunction(num, self.den * other.den).canonical()

    def __sub__(self, other) -> "RationalFunction":
        return self + (-_as_rf(other))

    def __neg__(self) -> "RationalFunction":
        return RationalFunction(-self.num, self.den)

    def __mul__(self, other) -> "RationalFunction":
        other = _as_rf(other)
        return RationalFunction(self.num * other.num, self.den * other.den).canonical()

    __radd__ = __add__
    __rmul__ = __mul__

    def __truediv__(self, other) -> "RationalFunction":
        other = _as_rf(other)
        if other.is_zero:
            raise ZeroDivisionError("division by the zero function")
        return RationalFunction(self.num * other.den, self.den * other.num).canonical()

    def inverse(self) -> "RationalFunction":
        if self.is_zero:
            raise ZeroDivisionError("inverse of the zero function")
        return RationalFunction(self.den, self.num).canonical()

    # -- serialization -----------------------------------------------------
    def to_json_obj(self):
        return {"num": self.num.to_json_obj(), "den": self.den.to_json_obj()}

    @staticmethod
    def from_json_obj(obj) -> "RationalFunction":
        return RationalFunction.make(obj["num"], obj["den"])


def _as_rf(x) -> RationalFunction:
    if isinstance(x, RationalFunction):
        return x
    if isinstance(x, (int, float)):
        return RationalFunction.const(float(x))
    raise TypeError(f"cannot coerce {type(x)!r} to RationalFunction")


@dataclass
class StabilityVerdict:
    """Pole-based stability verdict for a scalar network function."""

    is_stable: bool
    poles: np.ndarray
    margin: float
    notes: str = ""

    def __bool__(self) -> bool:
        return self.is_stable


def rf_is_stable(f: RationalFunction) -> StabilityVerdict:
    """Membership of f in the stable proper algebra.

    Requires properness (no pole at infinity) and every finite pole strictly
    in the open left half plane by the scale-aware margin.
    """
    poles = f.poles()
    tol = stability_tol(poles)
    margin = float(np.min(-poles.real)) if poles.size else math.inf
    if not f.is_proper:
        return StabilityVerdict(False, poles, margin, "improper: pole at infinity")
    ok = bool(poles.size == 0 or np.all(poles.real < -tol))
    return StabilityVerdict(ok, poles, margin)


def rf_is_unit(f: RationalFunction) -> bool:
    """True iff f and 1/f are both stable proper (biproper, LHP poles and zeros)."""
    if f.is_zero:
        return False
    if not f.is_biproper:
        return False
    return bool(rf_is_stable(f)) and bool(rf_is_stable(f.inverse()))

"""Exact local arithmetic at a single prime.

A prime p in a non-Galois cubic field K has one of five splitting types,

    (111)  split:          three degree-1 primes,
    (21)   partial:        degree 1 + degree 2,
    (3)    inert:          one degree-3 prime,
    (1^2 1) ramified:      p exactly divides the discriminant,
    (1^3)  totally ramified,

written here with the string tags '111', '21', '3', '121', '13' in that fixed
order.  Each type determines a 2x2 unitary conjugacy class A_a; everything the
rest of the package needs — Frobenius trace powers tr(A^m), the local
determinant det(I - w A), its logarithm F(w; a), the logarithmic-derivative
series F*(w; a) = sum_m tr(A^m) w^m, and the two probability weights put on
the five types — lives in this module, computed exactly (integer traces,
rational weights) wherever exactness is possible.

The H/G coefficient families are the power-series coefficients of

    exp(z F(w; a))        = sum_r H_r(z; a) w^r        (kind 'H'),
    exp(z F*(w; a))       = sum_r G_r(z; a) w^r        (kind 'G'),

computed by the exp-of-series recursion r E_r = sum_{m<=r} m S_m E_{r-m}.
The recursion is type-generic: integer or Fraction z gives exact rational
coefficients, float/complex z gives float/complex ones.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath as mp

from .primes import factorize, is_prime

SPLITTING_TYPES = ("111", "21", "3", "121", "13")

_TRACE = {
    "111": lambda m: 2,
    "21": lambda m: 2 if m % 2 == 0 else 0,
    "3": lambda m: 2 if m % 3 == 0 else -1,
    "121": lambda m: 1,
    "13": lambda m: 0,
}


def _check_type(a: str) -> str:
    if a not in _TRACE:
        raise ValueError(f"unknown splitting type {a!r}; expected one of {SPLITTING_TYPES}")
    return a


def trace_power(a: str, m: int) -> int:
    """tr(A_a^m) for m >= 1; always one of -1, 0, 1, 2."""
    _check_type(a)
    if m < 1:
        raise ValueError("trace_power requires m >= 1")
    return _TRACE[a](m)


def local_det(a: str, w):
    """det(I - w A_a): a polynomial in w, defined for every w."""
    _check_type(a)
    if a == "111":
        return (1 - w) * (1 - w)
    if a == "21":
        return 1 - w * w
    if a == "3":
        return 1 + w + w * w
    if a == "121":
        return 1 - w
    return 1 + 0 * w


def _log1(x):
    return cmath.log(x) if isinstance(x, complex) else math.log(x)


def _check_disc(w) -> None:
    if abs(w) >= 1:
        raise ValueError("log_factor/log_deriv_factor need |w| < 1")


def log_factor(a: str, w):
    """F(w; a) = -Log det(I - w A_a), principal branch taken factor by factor.

    For |w| < 1 every linear factor 1 - c w and the quadratic 1 + w + w^2 stay
    off the branch cut, so this agrees with the trace power series
    sum_m tr(A^m) w^m / m.
    """
    _check_type(a)
    _check_disc(w)
    if a == "111":
        return -2 * _log1(1 - w)
    if a == "21":
        return -_log1(1 - w) - _log1(1 + w)
    if a == "3":
        return -_log1(1 + w + w * w)
    if a == "121":
        return -_log1(1 - w)
    return 0.0 * w


def log_deriv_factor(a: str, w):
    """F*(w; a) = sum_{m>=1} tr(A_a^m) w^m in closed form, |w| < 1."""
    _check_type(a)
    _check_disc(w)
    if a == "111":
        return 2 * w / (1 - w)
    if a == "21":
        return 2 * w * w / (1 - w * w)
    if a == "3":
        w3 = w * w * w
        return -w / (1 - w) + 3 * w3 / (1 - w3)
    if a == "121":
        return w / (1 - w)
    return 0.0 * w


def weight_C(p: int) -> dict[str, Fraction]:
    """Splitting-type weights proportional to 1/6, 1/2, 1/3, 1/p, 1/p^2 (exact)."""
    if not is_prime(p):
        raise ValueError(f"weight_C requires a prime, got {p}")
    norm = 1 + Fraction(1, p) + Fraction(1, p * p)
    raw = {
        "111": Fraction(1, 6),
        "21": Fraction(1, 2),
        "3": Fraction(1, 3),
        "121": Fraction(1, p),
        "13": Fraction(1, p * p),
    }
    return {a: r / norm for a, r in raw.items()}


def weight_K(p: int, dps: int | None = None) -> dict:
    """Splitting-type weights of the refined counting model, in v = p^{-1/3}.

    Returns floats by default; pass ``dps`` to get mpmath values at that
    working precision instead.
    """
    if not is_prime(p):
        raise ValueError(f"weight_K requires a prime, got {p}")
    with mp.workdps(dps if dps is not None else 30):
        v = 1 / mp.cbrt(mp.mpf(p))
        pref = (1 - v) / ((1 - v**5) * (1 + v**3))
        vals = {
            "111": pref * (1 + v) ** 3 / 6,
            "21": pref * (1 + v) * (1 + v**2) / 2,
            "3": pref * (1 + v**3) / 3,
            "121": pref * v**3 * (1 + v) ** 2,
            "13": pref * v**6 * (1 + v),
        }
        if dps is not None:
            return vals
        return {a: float(x) for a, x in vals.items()}


@dataclass
class SeriesCoefficients:
    """Coefficients values[r] of exp(z F) (kind 'H') or exp(z F*) (kind 'G').

    values has length N + 1 (indices 0..N); values[0] == 1 always.
    truncation_bound is 2 (4|z|+2)^N scale^N when a scale was supplied, i.e.
    the guaranteed bound on |exp(...) - sum_{r<N} values[r] w^r| for |w| up
    to the scale (valid once scale <= 1/(8|z|+4)).
    """

    kind: str
    stype: str
    z: object
    values: list
    truncation_bound: float | None = None


def series_coeffs(kind: str, a: str, z, scale: float = 0.0, N: int = 24,
                  budget: float | None = None) -> SeriesCoefficients:
    """Coefficients of exp(z F(w; a)) (kind 'H') or exp(z F*(w; a)) (kind 'G').

    Uses only the integer trace values via r E_r = sum m S_m E_{r-m}, with
    S_m = z tr(A^m)/m for kind 'H' and S_m = z tr(A^m) for kind 'G'.  For
    kind 'G' callers pass the effective argument (e.g. -z log p) as z.

    If ``budget`` is given (and scale > 0), N is increased until the
    truncation bound 2 (4|z|+2)^N scale^N drops below it.
    """
    _check_type(a)
    if kind not in ("H", "G"):
        raise ValueError(f"kind must be 'H' or 'G', got {kind!r}")
    if N < 1:
        raise ValueError("series_coeffs requires N >= 1")
    if isinstance(z, int):
        z = Fraction(z)
    ratio = (4 * abs(z) + 2) * scale

    def bound(n: int) -> float:
        return 2.0 * float(ratio) ** n

    if budget is not None and scale > 0:
        if ratio >= 1:
            raise ValueError(
                "truncation bound does not decay: need scale < 1/(4|z|+2)")
        while bound(N) > budget and N < 512:
            N += 8

    values = [z * 0 + 1]
    # m * S_m is z*tr for kind 'H' and m*z*tr for kind 'G'
    for r in range(1, N + 1):
        acc = z * 0
        for m in range(1, r + 1):
            t = trace_power(a, m)
            if t:
                ms = z * t if kind == "H" else m * z * t
                acc += ms * values[r - m]
        values.append(acc / r)
    return SeriesCoefficients(
        kind=kind, stype=a, z=z, values=values,
        truncation_bound=bound(N) if scale > 0 else None,
    )


def reference_H(r: int, z):
    """Majorant coefficient z(z+1)...(z+r-1)/r!; exact for integer/Fraction z."""
    if r < 0:
        raise ValueError("reference_H requires r >= 0")
    if isinstance(z, int):
        z = Fraction(z)
    num = z * 0 + 1
    for j in range(r):
        num = num * (z + j)
    return num / math.factorial(r) if r else num


def reference_G(r: int, z):
    """Majorant coefficient sum_{k=1}^{r} binom(r-1, k-1) z^k (1 when r = 0)."""
    if r < 0:
        raise ValueError("reference_G requires r >= 0")
    if r == 0:
        return z * 0 + 1
    if isinstance(z, int):
        z = Fraction(z)
    acc = z * 0
    zk = z * 0 + 1
    for k in range(1, r + 1):
        zk = zk * z
        acc += math.comb(r - 1, k - 1) * zk
    return acc


def divisor_value(kind: str, k: int, n: int) -> float:
    """Multiplicative majorants d_k(n) = prod H_e(k), d*_k(n) = prod G_e(k log p).

    ``kind`` is 'd_k' or 'd*_k'.  Only used for truncation budgets.
    """
    if kind not in ("d_k", "d*_k"):
        raise ValueError(f"kind must be 'd_k' or 'd*_k', got {kind!r}")
    if k < 1 or n < 1:
        raise ValueError("divisor_value requires k >= 1 and n >= 1")
    out = 1.0
    for p, e in factorize(n):
        if kind == "d_k":
            out *= float(reference_H(e, k))
        else:
            out *= float(reference_G(e, k * math.log(p)))
    return out


def lambda_coefficient(n: int, splits: dict, z, case: str = "I"):
    """Multiplicative coefficient lambda_z(n) from the field's splitting data.

    Case 'I' (values of log L): the local factor at p^e is H_e(z; a_p).
    Case 'II' (values of L'/L): it is G_e(-z log p; a_p).
    ``splits`` must map every prime dividing n to its splitting type.
    """
    if n < 1:
        raise ValueError("lambda_coefficient requires n >= 1")
    if case not in ("I", "II"):
        raise ValueError(f"case must be 'I' or 'II', got {case!r}")
    out = z * 0 + 1
    for p, e in factorize(n):
        if p not in splits:
            raise ValueError(f"splitting type for prime {p} missing from splits")
        a = splits[p]
        if case == "I":
            coeffs = series_coeffs("H", a, z, N=e)
        else:
            coeffs = series_coeffs("G", a, -z * math.log(p), N=e)
        out = out * coeffs.values[e]
    return out

"""Per-field L-values on the real axis: direct Euler products and smoothed sums.

Two evaluation routes are provided.  The direct route truncates the Euler
product (equivalently the prime-power sum for log L or L'/L) at a cutoff P
and only converges for sigma > 1.  The smoothed route sums multiplicative
coefficients lambda_z(n) n^{-sigma} e^{-n/Y}; for an entire coefficient
series the exponential damping is then removed by a short telescope of
shifted sums, which is what makes sigma = 1 (and with it h_K R_K and the
Euler--Kronecker constant) reachable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import _kernels as kernels
from .fields import CubicField, poly_disc, splitting_type
from .local import SPLITTING_TYPES, series_coeffs, trace_power
from .primes import factorize, kronecker, prime_tail, sieve, spf_sieve

EULER_GAMMA = float(np.euler_gamma)

# e^{-n/Y} drops below machine epsilon at n = Y ln(1/eps); the extra 40 Y
# keeps the polynomially-growing telescope terms harmless as well.
_EPS = float(np.finfo(np.float64).eps)
N_OVER_Y = math.log(1.0 / _EPS) + 40.0

_TYPE_CODE = {a: i for i, a in enumerate(SPLITTING_TYPES)}


@dataclass(frozen=True)
class LValueResult:
    """One evaluated L-value: exp(z log L(sigma)) or exp(z (L'/L)(sigma)).

    ``value`` is the exponentiated quantity, so case I with z = 1 is L(sigma)
    itself (always positive for real sigma).  ``error_estimate`` is the
    recorded tail bound for the euler method and the truncation/telescope
    estimate for the smoothed one.
    """

    disc: int
    sigma: float
    case: str
    z: complex
    value: complex
    method: str
    Y: float | None
    error_estimate: float

    def validate(self) -> "LValueResult":
        if self.case not in ("I", "II"):
            raise ValueError(f"case must be 'I' or 'II', got {self.case!r}")
        if self.method not in ("euler", "smoothed"):
            raise ValueError(f"method must be 'euler' or 'smoothed', got {self.method!r}")
        z = complex(self.z)
        if z.imag == 0 and self.sigma > 1 and abs(self.value.imag) > 1e-9 * abs(self.value):
            raise ValueError("real z at sigma > 1 must give a real value")
        if self.case == "I" and z == 1 and self.value.real <= 0:
            raise ValueError("case I at z = 1 is a positive L-value")
        return self


def _check_case(case: str) -> str:
    if case not in ("I", "II"):
        raise ValueError(f"case must be 'I' or 'II', got {case!r}")
    return case


# ---------------------------------------------------------------------------
# splitting tags for all primes up to a cutoff
# ---------------------------------------------------------------------------

def _chi_table(d: int) -> np.ndarray:
    """kronecker(d, n) for n in [0, 4|d|) as int8, filled multiplicatively."""
    q = 4 * abs(d)
    spf = spf_sieve(q)
    ps = np.nonzero(spf[:q] == np.arange(q, dtype=spf.dtype))[0]
    ps = ps[ps >= 2]
    pchi = np.zeros(q, dtype=np.int64)
    pchi[ps] = [kronecker(d, int(p)) for p in ps.tolist()]
    # chi is completely multiplicative: peel smallest prime factors in rounds
    val = np.ones(q, dtype=np.int64)
    m = np.arange(q, dtype=np.int64)
    m[0] = 1
    while True:
        act = np.nonzero(m > 1)[0]
        if not act.size:
            break
        s = spf[m[act]].astype(np.int64)
        val[act] *= pchi[s]
        m[act] //= s
    val[0] = 0
    return val.astype(np.int8)


_TAG_CACHE: dict[tuple, tuple[int, np.ndarray]] = {}


def splitting_tags(field: CubicField, P: int) -> np.ndarray:
    """Splitting-type codes (indexing SPLITTING_TYPES) for every prime <= P."""
    P = int(P)
    ps = sieve(P)
    hit = _TAG_CACHE.get(field.poly)
    if hit is not None and hit[0] >= P:
        return hit[1][: ps.size]
    if not ps.size:
        return np.empty(0, dtype=np.uint8)
    out = np.empty(ps.size, dtype=np.uint8)
    k0 = 0
    if ps[0] == 2:
        out[0] = _TYPE_CODE[splitting_type(field, 2)]
        k0 = 1
    if ps.size > k0:
        chi = _chi_table(field.disc)
        skip = sorted(p for p, _ in factorize(abs(poly_disc(field.poly))) if p % 2)
        codes = kernels.types_block(
            np.ascontiguousarray(ps[k0:]),
            np.array([list(field.poly)], dtype=np.int64),
            chi,
            np.array([0, chi.size], dtype=np.int64),
            np.array([chi.size], dtype=np.int64),
            np.array(skip, dtype=np.int64),
            np.array([0, len(skip)], dtype=np.int64),
        )[0]
        for i in np.nonzero(codes == kernels.SKIP_SENTINEL)[0].tolist():
            codes[i] = _TYPE_CODE[splitting_type(field, int(ps[k0 + i]))]
        out[k0:] = codes
    if len(_TAG_CACHE) >= 4:
        _TAG_CACHE.pop(next(iter(_TAG_CACHE)))
    _TAG_CACHE[field.poly] = (P, out)
    return out


@lru_cache(maxsize=128)
def _trace_row(m: int) -> np.ndarray:
    return np.array([trace_power(a, m) for a in SPLITTING_TYPES], dtype=np.float64)


@lru_cache(maxsize=2)
def _spf(N: int) -> np.ndarray:
    return spf_sieve(N)


# ---------------------------------------------------------------------------
# direct route (sigma > 1)
# ---------------------------------------------------------------------------

def direct_cutoff(sigma: float) -> int:
    """Default prime cutoff giving ~1e-6 accuracy in log L at each sigma."""
    if sigma >= 2:
        return 400_000
    if sigma >= 1.5:
        return 2_000_000
    if sigma >= 1.35:
        return 30_000_000
    return 300_000_000


def _direct_sum(field: CubicField, sigma: float, P: int, log_weight: bool) -> float:
    if sigma <= 1:
        raise ValueError("direct Euler product needs sigma > 1; use the smoothed path")
    P = int(P if P is not None else direct_cutoff(sigma))
    codes = splitting_tags(field, P)
    ps = sieve(P).astype(np.float64)
    logs = np.log(ps)
    total = 0.0
    m = 1
    # terms below ~1e-22 are dropped; the certified bound in
    # direct_tail_bound accounts for exactly this truncation
    while 2.0 ** (-m * sigma) > 1e-22:
        cut = 10.0 ** (22.0 / (m * sigma))
        k = ps.size if cut >= ps[-1] else int(np.searchsorted(ps, cut, side="right"))
        if k == 0:
            break
        tr = _trace_row(m)[codes[:k]]
        w = np.exp(-(m * sigma) * logs[:k])
        if log_weight:
            total += float(np.dot(tr, w * logs[:k]))
        else:
            total += float(np.dot(tr, w)) / m
        m += 1
    return total


def log_L_direct(field: CubicField, sigma: float, P: int | None = None) -> float:
    """log L(sigma) = sum_{p <= P} sum_m tr(A_p^m)/m p^{-m sigma} (sigma > 1)."""
    return _direct_sum(field, sigma, P, log_weight=False)


def log_deriv_direct(field: CubicField, sigma: float, P: int | None = None) -> float:
    """(L'/L)(sigma) = -sum_{p <= P} sum_m tr(A_p^m) log p p^{-m sigma}."""
    return -_direct_sum(field, sigma, P, log_weight=True)


@lru_cache(maxsize=256)
def direct_tail_bound(sigma: float, P: int, log_weight: int = 0) -> float:
    """Certified bound on everything _direct_sum dropped: 2 sum_m tail_m/m.

    Uses |tr| <= 2 and the prime-zeta tails beyond min(P, per-m cutoff).
    """
    total = 0.0
    m = 1
    while 2.0 ** (-m * sigma) > 1e-22:
        cut = min(float(P), 10.0 ** (22.0 / (m * sigma)))
        t = float(prime_tail(m * sigma, int(cut), log_weight))
        total += 2.0 * t if log_weight else 2.0 * t / m
        m += 1
    # everything at and beyond the first fully-dropped m
    total += 4.0 * 2.0 ** (-m * sigma)
    return total


# ---------------------------------------------------------------------------
# multiplicative coefficient sieve
# ---------------------------------------------------------------------------

def _hr_case1(z: complex, R: int) -> np.ndarray:
    """Rows H_r(z; a) for each splitting type, r = 0..R."""
    rows = [series_coeffs("H", a, z, N=R).values for a in SPLITTING_TYPES]
    return np.array(rows, dtype=np.complex128)


@lru_cache(maxsize=8)
def _case2_triangle(R: int) -> np.ndarray:
    """Coefficients c[t, r, k] with G_r(u; type t) = sum_k c[t, r, k] u^k.

    The recursion r E_r = sum_m (m u tr(A^m)) E_{r-m} shows E_r is a degree-r
    polynomial in the effective argument u; the triangle is exact (Fractions)
    before the final float conversion.
    """
    out = np.zeros((len(SPLITTING_TYPES), R + 1, R + 1))
    for t, a in enumerate(SPLITTING_TYPES):
        rows = [[Fraction(1)] + [Fraction(0)] * R]
        for r in range(1, R + 1):
            row = [Fraction(0)] * (R + 1)
            for m in range(1, r + 1):
                tm = trace_power(a, m)
                if tm:
                    prev = rows[r - m]
                    for k in range(r - m + 1):
                        if prev[k]:
                            row[k + 1] += m * tm * prev[k]
            rows.append([x / r for x in row])
        out[t] = [[float(x) for x in row] for row in rows]
    return out


def _sieve_rows(N: int, ps: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Multiplicative sieve lam[n] = prod rows[i_p, v_p(n)] with per-prime rows."""
    lam = np.ones(N + 1, dtype=rows.dtype)
    lam[0] = 0
    for i, p in enumerate(ps.tolist()):
        row = rows[i]
        pr = p
        r = 1
        while pr <= N:
            nxt = pr * p
            sl = np.arange(pr, N + 1, pr)
            if nxt <= N:
                sl = sl[sl % nxt != 0]
            lam[sl] *= row[r]
            pr = nxt
            r += 1
    return lam


def lambda_table(field: CubicField, N: int, z=1.0, case: str = "I") -> np.ndarray:
    """lambda_z(n) for n = 0..N by a multiplicative sieve (index 0 is 0).

    Case I sieves H_r(z; a_p); case II sieves G_r(-z log p; a_p).  Real-z
    case I goes through the compiled kernel; the other combinations use a
    local sieve with per-prime rows.
    """
    N = int(N)
    _check_case(case)
    if N < 1:
        raise ValueError("lambda_table requires N >= 1")
    zc = complex(z)
    R = max(1, int(math.log2(N)) + 1)
    ps = sieve(N)
    codes = splitting_tags(field, N)
    if case == "I":
        hr = _hr_case1(zc, R)
        if zc.imag == 0.0:
            tag = np.zeros(N + 1, dtype=np.uint8)
            tag[ps] = codes
            return kernels.lambda_from_spf(_spf(N), tag, np.ascontiguousarray(hr.real))
        return _sieve_rows(N, ps, hr[codes])
    tri = _case2_triangle(R)[codes]
    u = -zc * np.log(ps.astype(np.float64))
    if zc.imag == 0.0:
        u = u.real
    pw = u[:, None] ** np.arange(R + 1)
    rows = np.einsum("mk,mrk->mr", pw, tri)
    return _sieve_rows(N, ps, rows)


# ---------------------------------------------------------------------------
# smoothed route
# ---------------------------------------------------------------------------

def _n_max(Y: float) -> int:
    return math.ceil(Y * N_OVER_Y)


def _telescope_complex(lam: np.ndarray, base: np.ndarray, J: int) -> np.ndarray:
    n = np.arange(len(lam), dtype=np.float64)
    out = np.empty(J + 1, dtype=np.complex128)
    acc = lam * base
    out[0] = acc.sum()
    for j in range(1, J + 1):
        acc = acc * n
        out[j] = acc.sum()
    return out


def _default_J(case: str, z: complex) -> int:
    # The telescope shifts the series left past sigma = 1, which is only
    # justified when the coefficient series continues entirely: case I with
    # a nonnegative integer exponent.  Everything else stays undamped.
    if case == "I" and z.imag == 0 and z.real >= 0 and z.real == round(z.real):
        return 5
    return 0


def smoothed_g(field: CubicField, sigma: float, z=1.0, case: str = "I",
               Y: float = 1e5, J: int | None = None) -> complex:
    """Smoothed value of exp(z log L(sigma)) (case I) or exp(z (L'/L)(sigma)) (II).

    Computes sum_{n <= N_max} lambda_z(n) n^{-sigma} e^{-n/Y} with
    N_max = ceil(Y (ln(1/eps) + 40)), then removes the damping with the
    telescope sum_{j<=J} g(sigma - j)/(j! Y^j).  J = 0 returns the bare
    damped sum; the default telescopes only where that is justified.
    """
    _check_case(case)
    if sigma <= 0.5:
        raise ValueError("smoothed series needs sigma > 1/2")
    if Y < 1e3:
        raise ValueError("smoothing scale Y must be at least 1e3")
    zc = complex(z)
    if J is None:
        J = _default_J(case, zc)
    N = _n_max(Y)
    lam = lambda_table(field, N, zc if zc.imag else zc.real, case)
    n = np.arange(N + 1, dtype=np.float64)
    n[0] = 1.0
    base = np.exp(-sigma * np.log(n) - n / Y)
    base[0] = 0.0
    if np.iscomplexobj(lam):
        sums = _telescope_complex(lam, base, J)
    else:
        sums = kernels.telescope_sums(lam, base, J)
    val = sums[0]
    fact = 1.0
    for j in range(1, J + 1):
        fact *= j
        val += sums[j] / (fact * Y**j)
    return complex(val)


def smoothed_error_estimate(field: CubicField, sigma: float, z, case: str,
                            Y: float, J: int | None = None) -> float:
    """Heuristic error scale for smoothed_g (truncation plus telescope)."""
    zc = complex(z)
    if J is None:
        J = _default_J(case, zc)
    k = math.floor(2 * abs(zc)) + 1
    # truncation beyond N_max, in the divisor-bound shape
    trunc = (Y ** max(0.0, 1.0 - sigma) + 1.0) * (2.0 * k * math.log(Y)) ** (k + 1)
    trunc *= math.exp(-N_OVER_Y)
    # first dropped telescope residue, sized via the functional-equation
    # growth of the shifted value
    q = max(float(abs(field.disc)), 8.0)
    tele = math.sqrt(q) * (q / (4 * math.pi**2 * Y)) ** (J + 1)
    if case == "II" or J == 0:
        # undamped evaluations at sigma <= 1 carry the zero-contamination
        # scale Y^{1/2 - sigma} instead
        tele = Y ** (0.5 - sigma)
    return trunc + tele


def _prime_power_smoothed(field: CubicField, sigma: float, Y: float,
                          log_weight: bool) -> float:
    """sum_{p^m <= N_max} tr(A_p^m) w_m p^{-m sigma} e^{-p^m / Y}."""
    if Y < 1e3:
        raise ValueError("smoothing scale Y must be at least 1e3")
    N = _n_max(Y)
    codes = splitting_tags(field, N)
    psi = sieve(N)
    ps = psi.astype(np.float64)
    logs = np.log(ps)
    total = 0.0
    m = 1
    while 2 ** m <= N:
        k = int(np.searchsorted(psi, int(N ** (1.0 / m)) + 2, side="right"))
        pm = psi[:k] ** m
        keep = pm <= N
        if not keep.any():
            break
        tr = _trace_row(m)[codes[:k][keep]]
        pmf = pm[keep].astype(np.float64)
        w = np.exp(-sigma * np.log(pmf) - pmf / Y)
        if log_weight:
            total += float(np.dot(tr, w * logs[:k][keep]))
        else:
            total += float(np.dot(tr, w)) / m
        m += 1
    return total


def log_L_smoothed(field: CubicField, sigma: float = 1.0, Y: float = 1e5) -> float:
    """Damped prime-power sum for log L(sigma); usable down past sigma = 1."""
    return _prime_power_smoothed(field, sigma, Y, log_weight=False)


def log_deriv_smoothed(field: CubicField, sigma: float = 1.0, Y: float = 1e5) -> float:
    """Damped prime-power sum for (L'/L)(sigma)."""
    return -_prime_power_smoothed(field, sigma, Y, log_weight=True)


# ---------------------------------------------------------------------------
# derived invariants
# ---------------------------------------------------------------------------

def _default_Y(field: CubicField) -> float:
    return max(1e5, abs(field.disc) ** (1.0 / 3.0))


def smoothed_L_and_deriv(field: CubicField, sigma: float, Y: float,
                         J: int = 5) -> tuple[float, float]:
    """(L(sigma), L'(sigma)) from one coefficient sieve.

    The sigma-derivative of each telescope sum is itself a telescope sum with
    an extra -log n weight, so both values share the lambda table and carry
    the same (tiny) telescope error.
    """
    if sigma <= 0.5:
        raise ValueError("smoothed series needs sigma > 1/2")
    if Y < 1e3:
        raise ValueError("smoothing scale Y must be at least 1e3")
    N = _n_max(Y)
    lam = lambda_table(field, N, 1.0, "I")
    n = np.arange(N + 1, dtype=np.float64)
    n[0] = 1.0
    logn = np.log(n)
    base = np.exp(-sigma * logn - n / Y)
    base[0] = 0.0
    sums = kernels.telescope_sums(lam, base, J)
    dsums = kernels.telescope_sums(lam, -logn * base, J)
    val, dval, fact = sums[0], dsums[0], 1.0
    for j in range(1, J + 1):
        fact *= j
        val += sums[j] / (fact * Y**j)
        dval += dsums[j] / (fact * Y**j)
    return float(val), float(dval)


def L_at_one(field: CubicField, Y: float | None = None) -> float:
    """L(1) by the telescoped smoothed series; always positive."""
    if Y is None:
        Y = _default_Y(field)
    val = smoothed_g(field, 1.0, 1.0, "I", Y).real
    if val <= 0:
        raise ArithmeticError(
            f"smoothed evaluation gave L(1) = {val} <= 0 for disc {field.disc}; "
            "L(1) is a positive residue, so the smoothing failed")
    return val


def class_number_regulator(field: CubicField, Y: float | None = None) -> float:
    """h_K R_K = L(1) sqrt|d_K| / D, with D = 4 (real) or 2 pi (complex)."""
    D = 4.0 if field.disc > 0 else 2.0 * math.pi
    return L_at_one(field, Y) * math.sqrt(abs(field.disc)) / D


def euler_kronecker(field: CubicField, Y: float | None = None) -> float:
    """gamma_K = (L'/L)(1) + gamma, the field's Euler--Kronecker constant.

    (L'/L)(1) is taken as the exact derivative of the telescoped smoothed
    series, which is far more Y-stable than the damped prime-power sum.
    """
    if Y is None:
        Y = _default_Y(field)
    L, dL = smoothed_L_and_deriv(field, 1.0, Y)
    if L <= 0:
        raise ArithmeticError(
            f"smoothed evaluation gave L(1) = {L} <= 0 for disc {field.disc}; "
            "L(1) is a positive residue, so the smoothing failed")
    return EULER_GAMMA + dL / L


# ---------------------------------------------------------------------------
# batch evaluation
# ---------------------------------------------------------------------------

def evaluate_field(field: CubicField, sigma: float, z=1.0, case: str = "I",
                   method: str = "smoothed", Y: float | None = None,
                   P: int | None = None) -> LValueResult:
    """One LValueResult row; value = exp(z log L) (I) or exp(z (L'/L)) (II)."""
    _check_case(case)
    zc = complex(z)
    if method == "euler":
        logv = log_L_direct(field, sigma, P) if case == "I" else \
            log_deriv_direct(field, sigma, P)
        P_used = int(P if P is not None else direct_cutoff(sigma))
        err = direct_tail_bound(sigma, P_used, int(case == "II"))
        return LValueResult(field.disc, sigma, case, zc,
                            complex(np.exp(zc * logv)), "euler", None,
                            abs(zc) * err).validate()
    if method != "smoothed":
        raise ValueError(f"method must be 'euler' or 'smoothed', got {method!r}")
    if Y is None:
        Y = _default_Y(field)
    val = smoothed_g(field, sigma, zc if zc.imag else zc.real, case, Y)
    err = smoothed_error_estimate(field, sigma, zc, case, Y)
    return LValueResult(field.disc, sigma, case, zc, val, "smoothed",
                        float(Y), err).validate()


def export_results(results, path) -> None:
    """Write `disc,sigma,case,z_re,z_im,value_re,value_im,method,Y,err` CSV."""
    lines = ["disc,sigma,case,z_re,z_im,value_re,value_im,method,Y,err"]
    for r in results:
        y = "" if r.Y is None else f"{r.Y:.17g}"
        lines.append(
            f"{r.disc},{r.sigma:.17g},{r.case},{r.z.real:.17g},{r.z.imag:.17g},"
            f"{r.value.real:.17g},{r.value.imag:.17g},{r.method},{y},"
            f"{r.error_estimate:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")

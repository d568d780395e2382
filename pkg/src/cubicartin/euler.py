"""The four characteristic-function Euler products.

For a splitting-type model at prime p (weights W_p, either the plain family
`weight_C` or the refined family `weight_K`), the characteristic Euler
products evaluated here are

    F(s, z)      = prod_p  sum_a weight_C(p)[a] exp(z F(p^{-s}; a)),
    G(s, z)      = prod_p  sum_a weight_K(p)[a] exp(z F(p^{-s}; a)),
    Fstar(s, z)  = prod_p  sum_a weight_C(p)[a] exp(-z log(p) F*(p^{-s}; a)),
    Gstar(s, z)  = prod_p  sum_a weight_K(p)[a] exp(-z log(p) F*(p^{-s}; a)),

i.e. the unstarred kinds are moment generating functions of the random model
for log L, the starred kinds of the model for L'/L.  Convergence requires
sigma > 1/2 for the C-weighted kinds and sigma > 2/3 for the K-weighted ones
(the refined weights carry p^{-1/3} fluctuations).

Evaluation truncates the product at a prime cutoff P and corrects the tail
with exact prime-zeta sums: the logarithm of each local factor is expanded as
a short power series in w = p^{-s} whose coefficients are themselves exact
power series in u = 1/p (C-weights) or v = p^{-1/3} (K-weights), so every
retained tail term is a linear combination of sums  sum_{p>P} p^{-alpha}
(log p)^k  computed by `primes.prime_tail`.  Whatever is not retained is
majorized into `tail_bound`.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath as mp
import numpy as np

from .local import SPLITTING_TYPES, reference_G, reference_H, series_coeffs, trace_power
from .primes import prime_tail, sieve

KINDS = ("F", "G", "Fstar", "Gstar")
_STARRED = frozenset({"Fstar", "Gstar"})
_K_WEIGHTED = frozenset({"G", "Gstar"})
_SIGMA_FLOOR = {"F": 0.5, "G": 2.0 / 3.0, "Fstar": 0.5, "Gstar": 2.0 / 3.0}


@dataclass
class ProductConfig:
    prime_cutoff: int = 100_000
    tail_order: int = 1
    target_abs_error: float = 1e-10
    precision_bits: int = 53

    def __post_init__(self) -> None:
        if self.prime_cutoff < 100:
            raise ValueError("prime_cutoff must be >= 100")
        if self.tail_order not in (0, 1, 2):
            raise ValueError("tail_order must be 0, 1 or 2")
        if not self.target_abs_error > 0:
            raise ValueError("target_abs_error must be > 0")


def default_config(sigma: float) -> ProductConfig:
    """Default cutoffs: P = 1e5 for sigma >= 1, P = 1e6 below."""
    return ProductConfig(prime_cutoff=100_000 if sigma >= 1 else 1_000_000)


@dataclass
class CharacteristicEvaluation:
    kind: str
    s: complex
    z: complex
    value: complex
    tail_bound: float


def _check_kind(kind: str) -> None:
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")


def _check_domain(kind: str, sigma: float) -> None:
    floor = _SIGMA_FLOOR[kind]
    if sigma <= floor:
        raise ValueError(
            f"kind {kind} needs Re(s) > {floor:.4g}; the weight fluctuations "
            f"p^(-1/3) make this condition necessary, got sigma = {sigma}"
        )


# ---------------------------------------------------------------------------
# local data on prime grids (shared with density inversion and Monte Carlo)


def local_data(kind: str, sigma: float, P: int):
    """(primes, theta, weights): the additive contributions and their weights.

    theta[i, a] is F(p_i^-sigma; a) for unstarred kinds and
    -log(p_i) F*(p_i^-sigma; a) for starred ones; weights[i, a] the local
    weight of type a.  The characteristic function at real xi is then
    prod_i sum_a weights[i, a] exp(i xi theta[i, a]).
    """
    _check_kind(kind)
    _check_domain(kind, sigma)
    ps = sieve(P).astype(np.float64)
    w = ps ** (-float(sigma))
    if kind in _STARRED:
        w3 = w**3
        cols = [
            2 * w / (1 - w),
            2 * w * w / (1 - w * w),
            -w / (1 - w) + 3 * w3 / (1 - w3),
            w / (1 - w),
            np.zeros_like(w),
        ]
        theta = -np.log(ps)[:, None] * np.stack(cols, axis=1)
    else:
        l1 = np.log1p(-w)
        cols = [
            -2 * l1,
            -l1 - np.log1p(w),
            -np.log1p(w + w * w),
            -l1,
            np.zeros_like(w),
        ]
        theta = np.stack(cols, axis=1)
    weights = _weight_grid(kind, ps)
    return ps, theta, weights


def _weight_grid(kind: str, ps: np.ndarray) -> np.ndarray:
    if kind in _K_WEIGHTED:
        v = ps ** (-1.0 / 3.0)
        pref = (1 - v) / ((1 - v**5) * (1 + v**3))
        cols = [
            (1 + v) ** 3 / 6,
            (1 + v) * (1 + v**2) / 2,
            (1 + v**3) / 3,
            v**3 * (1 + v) ** 2,
            v**6 * (1 + v),
        ]
        return pref[:, None] * np.stack(cols, axis=1)
    u = 1.0 / ps
    norm = 1 + u + u * u
    cols = [
        np.full_like(u, 1 / 6),
        np.full_like(u, 1 / 2),
        np.full_like(u, 1 / 3),
        u,
        u * u,
    ]
    return np.stack(cols, axis=1) / norm[:, None]


# ---------------------------------------------------------------------------
# exact weight series in u = 1/p (C) or v = p^{-1/3} (K)


def _series_mul(a: list, b: list, L: int) -> list:
    out = [Fraction(0)] * L
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        for j, bj in enumerate(b):
            if i + j >= L:
                break
            out[i + j] += ai * bj
    return out


def _series_inv(den: list, L: int) -> list:
    out = [Fraction(0)] * L
    out[0] = 1 / Fraction(den[0])
    for n in range(1, L):
        acc = Fraction(0)
        for k in range(1, min(n, len(den) - 1) + 1):
            if k < len(den) and den[k] != 0:
                acc += den[k] * out[n - k]
        out[n] = -acc * out[0]
    return out


@lru_cache(maxsize=4)
def _weight_series(kweighted: bool, L: int) -> dict:
    """Exact expansions of the five type weights; the variable is v = p^{-1/3}
    for the K family and u = p^{-1} for the C family."""
    if kweighted:
        den = [Fraction(x) for x in (1, 0, 0, 1, 0, -1, 0, 0, -1)]  # (1-v^5)(1+v^3)
        inv = _series_inv(den, L)
        pref = _series_mul(inv, [Fraction(1), Fraction(-1)], L)
        nums = {
            "111": [Fraction(1, 6), Fraction(1, 2), Fraction(1, 2), Fraction(1, 6)],
            "21": [Fraction(1, 2), Fraction(1, 2), Fraction(1, 2), Fraction(1, 2)],
            "3": [Fraction(1, 3), 0, 0, Fraction(1, 3)],
            "121": [0, 0, 0, Fraction(1), Fraction(2), Fraction(1)],
            "13": [0, 0, 0, 0, 0, 0, Fraction(1), Fraction(1)],
        }
        out = {a: _series_mul(pref, [Fraction(x) for x in nums[a]], L) for a in nums}
    else:
        inv = _series_inv([Fraction(1), Fraction(1), Fraction(1)], L)
        out = {
            "111": [x / 6 for x in inv],
            "21": [x / 2 for x in inv],
            "3": [x / 3 for x in inv],
            "121": [Fraction(0)] + inv[: L - 1],
            "13": [Fraction(0)] * 2 + inv[: L - 2],
        }
    total = [sum(out[a][j] for a in out) for j in range(L)]
    assert total[0] == 1 and all(t == 0 for t in total[1:])
    return out


# ---------------------------------------------------------------------------
# tail machinery


def _tail_terms(kind: str, s: complex, z: complex, order: int, jmax: int) -> dict:
    """Retained tail terms {(r, j, k): coeff} of log(local factor):
    coeff * p^{-(r s + j delta)} (log p)^k with delta = 1 (C) or 1/3 (K)."""
    kweighted = kind in _K_WEIGHTED
    ws = _weight_series(kweighted, jmax + 1)
    terms: dict = {}

    def add(key, c):
        if c != 0:
            terms[key] = terms.get(key, 0) + c

    if kind in _STARRED:
        # exp(y F*) coefficients in y = -z log p: E_1 = y t1, E_2 = y^2 t1^2/2 + y t2
        for a in SPLITTING_TYPES:
            t1 = trace_power(a, 1)
            t2 = trace_power(a, 2)
            for j in range(jmax + 1):
                wj = float(ws[a][j])
                if wj == 0:
                    continue
                if order >= 1 and t1:
                    add((1, j, 1), -z * t1 * wj)
                if order >= 2:
                    if t2:
                        add((2, j, 1), -z * t2 * wj)
                    if t1:
                        add((2, j, 2), z * z * t1 * t1 / 2 * wj)
    else:
        for r in range(1, order + 1):
            for a in SPLITTING_TYPES:
                h = complex(series_coeffs("H", a, complex(z), N=r).values[r])
                if h == 0:
                    continue
                for j in range(jmax + 1):
                    wj = float(ws[a][j])
                    if wj:
                        add((r, j, 0), h * wj)

    if order >= 2:
        # log(1 + x) = x - x^2/2 + ...: fold in minus half the square of the
        # r = 1 part (the only product reaching r = 2)
        lin = [(key, c) for key, c in terms.items() if key[0] == 1]
        for (r1, j1, k1), c1 in lin:
            for (r2, j2, k2), c2 in lin:
                if j1 + j2 <= jmax:
                    add((2, j1 + j2, k1 + k2), -c1 * c2 / 2)
    return terms


def _bounded_log_tail(alpha: float, k: int, P: int) -> float:
    """Upper bound for sum_{p>P} p^-alpha (log p)^k, any k >= 0."""
    if k <= 2:
        return abs(prime_tail(alpha, P, k))
    shave = 0.3
    peak = ((k - 2) / (shave * math.e)) ** (k - 2)
    return peak * abs(prime_tail(alpha - shave, P, 2))


def _tail_bound(kind: str, sigma: float, z: complex, order: int, jmax: int, P: int) -> float:
    """Majorant for everything _tail_terms left out."""
    delta = 1.0 / 3.0 if kind in _K_WEIGHTED else 1.0
    starred = kind in _STARRED
    az = abs(z)
    bound = 0.0
    # families r = order+1 .. order+4, all j; the r = 1 coefficient series
    # has no constant term (the mean trace is O(p^-delta)), so its leading
    # exponent is sigma + delta
    for r in range(order + 1, order + 5):
        alpha = r * sigma + (delta if r == 1 else 0.0)
        if alpha > 40:
            break
        if starred:
            # |G_r(y)| <= reference_G(r, 2|y|), y = z log p: expand in (log p)^k
            for k in range(1, r + 1):
                c = math.comb(r - 1, k - 1) * (2 * az) ** k
                bound += c * _bounded_log_tail(alpha, k, P)
        else:
            bound += float(reference_H(r, 2 * az)) * _bounded_log_tail(alpha, 0, P)
    # j-truncation of retained families
    for r in range(1, order + 1):
        alpha = r * sigma + (jmax + 1) * delta
        if alpha > 40:
            continue
        if starred:
            cap = float(reference_G(r, 2 * az))
            bound += 4 * cap * _bounded_log_tail(alpha, r, P)
        else:
            cap = float(reference_H(r, 2 * az))
            bound += 4 * cap * _bounded_log_tail(alpha, 0, P)
    # log-series terms beyond those retained (order 2 keeps the r<=2 square)
    if starred:
        s1 = reference_G(1, 2 * az) * _bounded_log_tail(sigma + delta, 1, P)
    else:
        s1 = reference_H(1, 2 * az) * _bounded_log_tail(sigma + delta, 0, P)
    if order <= 1:
        bound += float(s1) ** 2
    else:
        bound += float(s1) ** 3
    return 2.0 * bound


@lru_cache(maxsize=256)
def tail_mean(kind: str, sigma: float, P: int) -> float:
    """sum_{p > P} of the mean local contribution, by exact series.

    This is the first moment the finite product at cutoff P leaves out; the
    density grid and the sampler both add it back as a deterministic shift,
    so the two stay mutually consistent and the mean stays exact.
    """
    _check_kind(kind)
    _check_domain(kind, sigma)
    kweighted = kind in _K_WEIGHTED
    starred = kind in _STARRED
    delta = 1.0 / 3.0 if kweighted else 1.0
    jcap = int((30 - sigma) / delta) + 1
    ws = _weight_series(kweighted, jcap + 1)
    total = []
    m = 1
    while m * sigma <= 30:
        for j in range(jcap + 1):
            alpha = m * sigma + j * delta
            if alpha > 30:
                break
            e = sum(ws[a][j] * trace_power(a, m) for a in SPLITTING_TYPES)
            if e == 0:
                continue
            if starred:
                total.append(-float(e) * prime_tail(alpha, P, 1))
            else:
                total.append(float(e) / m * prime_tail(alpha, P, 0))
        m += 1
    return math.fsum(total)


@lru_cache(maxsize=256)
def tail_variance(kind: str, sigma: float, P: int) -> float:
    """sum_{p > P} Var of the local contribution, by exact series.

    Together with tail_mean this closes the cutoff model: the omitted primes
    form a sum of many independent tiny terms, so a Gaussian with the exact
    mean and variance absorbs them up to third-cumulant size (see
    tail_third_bound for that residual).
    """
    _check_kind(kind)
    _check_domain(kind, sigma)
    kweighted = kind in _K_WEIGHTED
    starred = kind in _STARRED
    delta = 1.0 / 3.0 if kweighted else 1.0
    cap = 30.0
    jcap = int((cap - 2 * sigma) / delta) + 1
    ws = _weight_series(kweighted, jcap + 1)
    mcap = int(cap / sigma) + 1

    def tr_moment(m1: int, m2: int, j: int):
        return sum(
            ws[a][j] * trace_power(a, m1) * trace_power(a, m2)
            for a in SPLITTING_TYPES
        )

    mean = {}
    for m in range(1, mcap + 1):
        for j in range(jcap + 1):
            if m * sigma + j * delta > cap:
                break
            e = sum(ws[a][j] * trace_power(a, m) for a in SPLITTING_TYPES)
            if e:
                mean[(m, j)] = e if starred else e / Fraction(m)
    var = {}
    for m1 in range(1, mcap + 1):
        if 2 * m1 * sigma > cap:
            break
        for m2 in range(m1, mcap + 1):
            if (m1 + m2) * sigma > cap:
                break
            mult = 1 if m1 == m2 else 2
            for j in range(jcap + 1):
                if (m1 + m2) * sigma + j * delta > cap:
                    break
                e = tr_moment(m1, m2, j)
                if e:
                    c = e if starred else e / Fraction(m1 * m2)
                    var[(m1 + m2, j)] = var.get((m1 + m2, j), 0) + mult * c
    for (m1, j1), c1 in mean.items():
        for (m2, j2), c2 in mean.items():
            if (m1 + m2) * sigma + (j1 + j2) * delta <= cap:
                key = (m1 + m2, j1 + j2)
                var[key] = var.get(key, 0) - c1 * c2
    k = 2 if starred else 0
    total = [
        float(c) * prime_tail(M * sigma + j * delta, P, k)
        for (M, j), c in var.items()
        if c != 0
    ]
    return math.fsum(total)


def tail_third_bound(kind: str, sigma: float, P: int) -> float:
    """Majorant for the third absolute moment the Gaussian closure ignores."""
    _check_kind(kind)
    _check_domain(kind, sigma)
    k = 3 if kind in _STARRED else 0
    return 27.0 * _bounded_log_tail(3 * sigma, k, P)


# ---------------------------------------------------------------------------
# evaluation


def _finite_product_log(kind: str, s: complex, z: complex, P: int) -> complex:
    ps = sieve(P).astype(np.float64)
    logp = np.log(ps)
    w = np.exp(-s * logp) if (isinstance(s, complex) and s.imag) else ps ** (-float(np.real(s)))
    weights = _weight_grid(kind, ps)
    if kind in _STARRED:
        w3 = w**3
        theta = np.stack(
            [
                2 * w / (1 - w),
                2 * w * w / (1 - w * w),
                -w / (1 - w) + 3 * w3 / (1 - w3),
                w / (1 - w),
                np.zeros_like(w),
            ],
            axis=1,
        )
        zeff = (-z * logp)[:, None]
    else:
        theta = np.stack(
            [
                -2 * np.log(1 - w),
                -np.log(1 - w) - np.log(1 + w),
                -np.log(1 + w + w * w),
                -np.log(1 - w),
                np.zeros_like(w),
            ],
            axis=1,
        )
        zeff = z
    local = np.sum(weights * np.exp(zeff * theta), axis=1)
    logs = np.log(local)
    if np.iscomplexobj(logs):
        return complex(math.fsum(logs.real.tolist()), math.fsum(logs.imag.tolist()))
    return complex(math.fsum(logs.tolist()))


def _finite_product_log_mp(kind: str, s, z, P: int, prec: int):
    total = mp.mpc(0)
    starred = kind in _STARRED
    kweighted = kind in _K_WEIGHTED
    with mp.workprec(prec + 20):
        for p in sieve(P).tolist():
            w = mp.power(p, -s)
            lp = mp.log(p)
            if starred:
                w3 = w**3
                theta = [
                    2 * w / (1 - w),
                    2 * w * w / (1 - w * w),
                    -w / (1 - w) + 3 * w3 / (1 - w3),
                    w / (1 - w),
                    mp.mpf(0),
                ]
                zeff = -z * lp
            else:
                theta = [
                    -2 * mp.log(1 - w),
                    -mp.log(1 - w) - mp.log(1 + w),
                    -mp.log(1 + w + w * w),
                    -mp.log(1 - w),
                    mp.mpf(0),
                ]
                zeff = z
            if kweighted:
                v = mp.power(p, mp.mpf(-1) / 3)
                pref = (1 - v) / ((1 - v**5) * (1 + v**3))
                wts = [
                    pref * (1 + v) ** 3 / 6,
                    pref * (1 + v) * (1 + v**2) / 2,
                    pref * (1 + v**3) / 3,
                    pref * v**3 * (1 + v) ** 2,
                    pref * v**6 * (1 + v),
                ]
            else:
                u = mp.mpf(1) / p
                norm = 1 + u + u * u
                wts = [x / norm for x in (mp.mpf(1) / 6, mp.mpf(1) / 2, mp.mpf(1) / 3, u, u * u)]
            local = mp.fsum(wt * mp.exp(zeff * th) for wt, th in zip(wts, theta))
            total += mp.log(local)
        return total


def evaluate(kind: str, s, z, cfg: ProductConfig | None = None) -> CharacteristicEvaluation:
    """One of the four products at s, z, with explicit truncation control."""
    _check_kind(kind)
    s = complex(s)
    z = complex(z)
    sigma = s.real
    _check_domain(kind, sigma)
    if cfg is None:
        cfg = default_config(sigma)
    if z == 0:
        return CharacteristicEvaluation(kind, s, z, 1.0 + 0.0j, 0.0)
    if s.imag == 0 and z.imag < 0:
        conj = evaluate(kind, s, z.conjugate(), cfg)
        return CharacteristicEvaluation(kind, s, z, conj.value.conjugate(), conj.tail_bound)
    P = cfg.prime_cutoff
    jmax = 14 if kind in _K_WEIGHTED else 8
    delta = 1.0 / 3.0 if kind in _K_WEIGHTED else 1.0
    if cfg.precision_bits > 53:
        log_finite = _finite_product_log_mp(kind, mp.mpc(s), mp.mpc(z), P, cfg.precision_bits)
        log_finite = complex(log_finite)
    else:
        log_finite = _finite_product_log(kind, s, z, P)
    correction = 0.0 + 0.0j
    for (r, j, k), c in _tail_terms(kind, s, z, cfg.tail_order, jmax).items():
        alpha = r * s + j * delta
        if alpha.real > 40:
            continue
        if alpha.real <= 1 + 1e-9:
            # the mean trace has no constant term, so these coefficients
            # cancel exactly; assert rather than summing a divergent tail
            assert abs(c) < 1e-10 * max(1.0, abs(z)) ** 2, (r, j, k, c)
            continue
        if c != 0:
            correction += c * prime_tail(complex(alpha), P, k)
    bound = _tail_bound(kind, sigma, z, cfg.tail_order, jmax, P)
    value = cmath.exp(log_finite + correction)
    # allow for rounding noise in the finite product (one ulp per local log)
    float_noise = len(sieve(P)) * 2.3e-16
    tail_bound = abs(value) * (math.expm1(min(bound, 50.0)) + float_noise)
    return CharacteristicEvaluation(kind, s, z, value, tail_bound)


def modulus_bound_check(kind: str, sigma: float, xi: float,
                        cfg: ProductConfig | None = None) -> bool:
    """Check |evaluate(kind, sigma, i xi)| <= 1 + tail_bound."""
    ev = evaluate(kind, sigma, 1j * xi, cfg)
    return abs(ev.value) <= 1 + ev.tail_bound


def xi_cutoff(kind: str, sigma: float, eps: float) -> float:
    """Smallest grid point Xi with |product(i Xi)| < eps, confirmed at 2 Xi."""
    _check_kind(kind)
    _check_domain(kind, sigma)
    if not 0 < eps < 1:
        raise ValueError("eps must be in (0, 1)")
    cfg = ProductConfig(prime_cutoff=10_000 if sigma >= 1 else 100_000, tail_order=1)
    xi = 2.0
    while xi <= 1e6:
        if abs(evaluate(kind, sigma, 1j * xi, cfg).value) < eps:
            if abs(evaluate(kind, sigma, 2j * xi, cfg).value) < eps:
                return xi
        xi *= 1.25
    raise ValueError(
        f"characteristic decay scan for {kind} at sigma={sigma} passed 1e6 "
        f"without reaching {eps}; use a larger eps"
    )


@lru_cache(maxsize=64)
def _calibrated_growth_constant(kind: str, sigma: float) -> float:
    cfg = ProductConfig(prime_cutoff=10_000, tail_order=1)
    c = 0.0
    for zr in (2.0, 5.0, 10.0, 20.0):
        val = abs(evaluate(kind, sigma, zr, cfg).value)
        c = max(c, math.log(max(val, 1.0)) * math.log(zr + 3) / (zr + 3) ** (1 / sigma))
    return 1.5 * c


def upper_bound_budget(kind: str, sigma: float, abs_z: float) -> float:
    """Growth-shape budget exp(c (|z|+3)^{1/sigma} / log(|z|+3)), calibrated c."""
    _check_kind(kind)
    floor = _SIGMA_FLOOR[kind]
    if not floor < sigma < 1:
        raise ValueError(
            f"upper_bound_budget for {kind} needs sigma in ({floor:.4g}, 1), got {sigma}"
        )
    c = _calibrated_growth_constant(kind, sigma)
    return math.exp(c * (abs_z + 3) ** (1 / sigma) / math.log(abs_z + 3))

"""Density grids for the four limiting value distributions.

The characteristic functions from :mod:`cubicartin.euler` are sampled on a
uniform frequency grid and inverted with an FFT.  Primes up to a cutoff P
enter the product exactly; the omitted primes form a sum of many independent
tiny terms and are folded in as a Gaussian with their exact mean and
variance (``euler.tail_mean`` / ``euler.tail_variance``), which keeps grid
moments true through second order and stays consistent with the sampler in
:mod:`cubicartin.experiments`, which uses the same cutoff and shift.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import euler
from ._kernels import char_grid

SQRT_TWO_PI = math.sqrt(2.0 * math.pi)

# density kind -> characteristic-function kind.  The script pair describes
# log L, the plain pair L'/L; C-kinds weight by the conductor-ordered local
# masses, K-kinds by the discriminant-ordered ones.
DENSITY_KINDS = {
    "C_script": "F",
    "K_script": "G",
    "C_plain": "Fstar",
    "K_plain": "Gstar",
}


def prime_cutoff_default(sigma: float) -> int:
    """Truncation matched with the Monte Carlo sampler."""
    return 100_000 if sigma <= 1.0 else 10_000


@dataclass
class DensityGrid:
    kind: str
    sigma: float
    x0: float
    step: float
    values: np.ndarray
    xi_cutoff: float
    quad_error_estimate: float
    prime_cutoff: int = 0

    def xs(self) -> np.ndarray:
        return self.x0 + self.step * np.arange(len(self.values))

    def mass(self) -> float:
        return float(self.values.sum() * self.step / SQRT_TWO_PI)

    def tol(self) -> float:
        return max(1e-6, self.quad_error_estimate)


@dataclass
class CdfGrid:
    kind: str
    sigma: float
    x0: float
    step: float
    values: np.ndarray

    def xs(self) -> np.ndarray:
        return self.x0 + self.step * np.arange(len(self.values))

    def at(self, x) -> np.ndarray:
        return np.interp(x, self.xs(), self.values, left=0.0, right=1.0)

    def quantile(self, q: float) -> float:
        if not 0 < q < 1:
            raise ValueError("quantile order must be in (0, 1)")
        return float(np.interp(q, self.values, self.xs()))


def _euler_kind(kind: str) -> str:
    try:
        return DENSITY_KINDS[kind]
    except KeyError:
        raise ValueError(
            f"kind must be one of {sorted(DENSITY_KINDS)}, got {kind!r}"
        ) from None


def _invert(G: np.ndarray, dxi: float) -> np.ndarray:
    """Complex inversion values on the signed x-grid m = -n/2 .. n/2 - 1."""
    n = len(G)
    g = np.fft.ifft(G) * (n * dxi / SQRT_TWO_PI)
    idx = (3 * (n // 2) - np.arange(n)) % n
    return g[idx]


def build_density(kind: str, sigma: float, eps_tail: float = 1e-8,
                  n_points: int = 1 << 16, prime_cutoff: int | None = None) -> DensityGrid:
    """Invert the characteristic function onto a uniform x-grid.

    The frequency grid covers [-Xi, Xi) in n_points steps, where Xi is the
    certified decay cutoff inflated by a margin of 1.5 so that the leftover
    ripple sits well below the non-negativity gate.
    """
    ekind = _euler_kind(kind)
    if not 0 < eps_tail < 1:
        raise ValueError("eps_tail must be in (0, 1)")
    if n_points < 64 or n_points & (n_points - 1):
        raise ValueError("n_points must be a power of two, at least 64")
    n = n_points
    P = prime_cutoff_default(sigma) if prime_cutoff is None else int(prime_cutoff)
    ps, theta, weights = euler.local_data(ekind, sigma, P)

    # frequency window: at least 1.5x the certified decay cutoff, widened
    # further when that would leave an absurdly long conjugate x-range --
    # the spectrum out there is zero to double precision, and the shorter
    # x-grid keeps far-field roundoff out of the high moments
    local_mean = (weights * theta).sum(axis=1)
    local_sq = (weights * theta * theta).sum(axis=1)
    m1_est = float(local_mean.sum()) + euler.tail_mean(ekind, sigma, P)
    var_est = float((local_sq - local_mean ** 2).sum()) + euler.tail_variance(ekind, sigma, P)
    x_half = abs(m1_est) + max(14.0 * math.sqrt(var_est), 8.0) + 8.0
    edge = max(1.5 * euler.xi_cutoff(ekind, sigma, eps_tail),
               math.pi * n / (2.0 * x_half))
    dxi = 2.0 * edge / n

    half = np.asarray(char_grid(theta, weights, n // 2 + 1, dxi))
    xi = dxi * np.arange(n // 2 + 1)
    shift = euler.tail_mean(ekind, sigma, P)
    vtail = euler.tail_variance(ekind, sigma, P)
    half = half * np.exp(-0.5 * vtail * xi * xi)

    spectrum = np.empty(n, dtype=complex)
    spectrum[: n // 2 + 1] = half
    spectrum[n // 2] = half[n // 2].real
    spectrum[n // 2 + 1:] = np.conj(half[1: n // 2][::-1])

    vals = _invert(spectrum, dxi)
    imag_residue = float(np.max(np.abs(vals.imag)))
    values = np.ascontiguousarray(vals.real)

    # step-halving: invert every other frequency sample; it shares the same
    # x-step over half the range, so the difference isolates periodization
    coarse = _invert(spectrum[::2], 2.0 * dxi).real
    richardson = float(np.max(np.abs(values[n // 4: 3 * n // 4] - coarse)))

    # leftover frequency mass beyond the edge, extrapolated geometrically
    w = max(n // 64, 4)
    mods = np.abs(half)
    last = float(mods[-w:].sum() * dxi)
    prev = float(mods[-2 * w: -w].sum() * dxi)
    ratio = last / prev if prev > 0 else 1.0
    tail_int = last * ratio / (1.0 - ratio) if ratio < 0.9 else 10.0 * last
    # third-cumulant residual of the Gaussian closure of the omitted primes
    kappa3 = euler.tail_third_bound(ekind, sigma, P)
    model_int = float((mods * (kappa3 / 6.0) * xi[: len(mods)] ** 3).sum() * dxi)
    quad = (
        2.0 * (tail_int + model_int) / SQRT_TWO_PI
        + richardson
        + imag_residue
        + len(ps) * 3e-16
    )

    dx = 2.0 * math.pi / (n * dxi)
    grid = DensityGrid(
        kind=kind,
        sigma=sigma,
        x0=-(n // 2) * dx + shift,
        step=dx,
        values=values,
        xi_cutoff=edge,
        quad_error_estimate=quad,
        prime_cutoff=P,
    )
    tol = grid.tol()
    mass = grid.mass()
    if abs(mass - 1.0) > 10 * tol:
        raise RuntimeError(
            f"density mass {mass:.8f} is off unity by more than 10x the "
            f"error estimate {tol:.2e}; the frequency cutoff or step is "
            f"misconfigured for {kind} at sigma={sigma}"
        )
    vmax = float(values.max())
    if float(values.min()) < -1e-8 * vmax:
        raise RuntimeError(
            f"density for {kind} at sigma={sigma} undershoots below "
            f"-1e-8 * max; refusing to clip a negative density"
        )
    return grid


def cdf(grid: DensityGrid) -> CdfGrid:
    """Cumulative trapezoid of the grid, clamped to [0, 1] and monotone."""
    v = grid.values
    inner = np.cumsum((v[1:] + v[:-1]) * 0.5) * grid.step / SQRT_TWO_PI
    c = np.concatenate(([0.0], inner))
    c = np.clip(c, 0.0, 1.0)
    c = np.maximum.accumulate(c)
    return CdfGrid(grid.kind, grid.sigma, grid.x0, grid.step, c)


def grid_moment(grid: DensityGrid, k: int) -> float:
    if not 0 <= k <= 8:
        raise ValueError("moment order must be between 0 and 8")
    xs = grid.xs()
    return float((xs ** k * grid.values).sum() * grid.step / SQRT_TWO_PI)


@lru_cache(maxsize=64)
def _contour_samples(ekind: str, sigma: float, Q: int, r0: float) -> tuple:
    cfg = euler.ProductConfig(
        prime_cutoff=euler.default_config(sigma).prime_cutoff, tail_order=2
    )
    vals = [None] * Q
    for q in range(Q // 2 + 1):
        z = r0 * complex(math.cos(2 * math.pi * q / Q), math.sin(2 * math.pi * q / Q))
        vals[q] = euler.evaluate(ekind, sigma, z, cfg).value
    for q in range(Q // 2 + 1, Q):
        vals[q] = vals[Q - q].conjugate()
    return tuple(vals)


def theoretical_moment(kind: str, sigma: float, k: int) -> float:
    """k-th raw moment as a Cauchy derivative of the moment generating
    function on the circle |z| = 1."""
    ekind = _euler_kind(kind)
    if not 0 <= k <= 8:
        raise ValueError("moment order must be between 0 and 8")
    if k == 0:
        return 1.0
    Q, r0 = 64, 1.0
    vals = _contour_samples(ekind, sigma, Q, r0)
    acc = 0.0
    for q, v in enumerate(vals):
        ang = -2 * math.pi * k * q / Q
        acc += (v * complex(math.cos(ang), math.sin(ang))).real
    return math.factorial(k) * acc / (Q * r0 ** k)

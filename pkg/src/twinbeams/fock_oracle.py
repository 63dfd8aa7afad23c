"""Exact photon-number sums for twin beams at moderate mean photon number.

The pre-loss state has perfectly correlated photon numbers (n, n) with Gaussian
weights; each beam then loses photons binomially.  Everything is summed in
log space so cutoffs up to n ~ 1e6 neither overflow nor underflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp, xlog1py, xlogy

from .analytic import PhotonDistribution
from .model import TwinBeamModel

LATTICE_HALF_WIDTH = 8.0  # pre-loss standard deviations
STIRLING_MIN_NRT = 25.0
_CHUNK = 512


@dataclass(frozen=True)
class FockLattice:
    """Renormalized Gaussian weights |c_n|^2 on the integers [n_min, n_max]."""

    n_min: int
    n_max: int
    log_cn2: np.ndarray
    n_bar: float
    fano_f: float

    @property
    def n(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_cn2)

    @classmethod
    def from_model(cls, model: TwinBeamModel, half_width: float = LATTICE_HALF_WIDTH) -> "FockLattice":
        return cls.gaussian(model.n_bar, model.fano_f, half_width)

    @classmethod
    def gaussian(cls, n_bar: float, fano_f: float, half_width: float = LATTICE_HALF_WIDTH) -> "FockLattice":
        sd = math.sqrt(fano_f * n_bar)
        n_min = max(0, int(math.floor(n_bar - half_width * sd)))
        n_max = int(math.ceil(n_bar + half_width * sd))
        n = np.arange(n_min, n_max + 1, dtype=float)
        log_w = -((n - n_bar) ** 2) / (2.0 * fano_f * n_bar)
        log_w -= logsumexp(log_w)
        return cls(n_min=n_min, n_max=n_max, log_cn2=log_w, n_bar=n_bar, fano_f=fano_f)


def log_binomial_pmf(k, n, p: float):
    """log[C(n,k) p^k (1-p)^(n-k)], -inf outside 0 <= k <= n."""
    k = np.asarray(k, dtype=float)
    n = np.asarray(n, dtype=float)
    valid = (k >= 0) & (k <= n)
    kk = np.where(valid, k, 0.0)
    nn = np.where(valid, n, 0.0)
    out = (gammaln(nn + 1) - gammaln(kk + 1) - gammaln(nn - kk + 1)
           + xlogy(kk, p) + xlog1py(nn - kk, -p))
    return np.where(valid, out, -np.inf)


def binomial_amp_sq(n: int, p: int, R: float) -> float:
    """|A_{n,p}|^2: probability that p of n photons are lost on a splitter of loss R."""
    if not 0 <= p <= n:
        raise ValueError(f"need 0 <= p <= n, got p={p}, n={n}")
    if not 0.0 <= R <= 1.0:
        raise ValueError(f"loss R must lie in [0, 1], got {R}")
    return float(np.exp(log_binomial_pmf(p, n, R)))


def stirling_check(n: int, R: float) -> float:
    """Largest gap between the exact loss distribution and its Gaussian limit, relative to the peak."""
    T = 1.0 - R
    if n * R * T < STIRLING_MIN_NRT:
        raise ValueError(f"Gaussian regime needs n*R*T >= {STIRLING_MIN_NRT}, got {n * R * T:.3g}")
    p = np.arange(n + 1)
    exact = np.exp(log_binomial_pmf(p, n, R))
    var = n * R * T
    approx = np.exp(-((p - n * R) ** 2) / (2.0 * var)) / math.sqrt(2.0 * math.pi * var)
    return float(np.max(np.abs(exact - approx)) / exact.max())


def exact_intensity_diff_variance(lattice: FockLattice, R: float, brute_force: bool = False) -> float:
    """Var(I1 - I2) after equal losses R on both beams.

    Per pre-loss number n the two loss processes are independent binomials, whose
    difference has variance 2nRT.  The weighted mean of n is accumulated as
    offsets from the lattice centre in mirrored pairs, so symmetric lattices give
    a result independent of the Fano factor bit for bit.
    """
    T = 1.0 - R
    if brute_force:
        return _brute_force_diff_variance(lattice, R)
    w = lattice.weights
    centre = int(round(lattice.n_bar))
    if not lattice.n_min <= centre <= lattice.n_max:
        raise ValueError("lattice does not contain its own centre")
    reach = max(centre - lattice.n_min, lattice.n_max - centre)
    k = np.arange(1, reach + 1)
    padded = np.zeros(2 * reach + 1)
    padded[lattice.n_min - centre + reach:lattice.n_max - centre + reach + 1] = w
    up, down = padded[reach + 1:], padded[reach - 1::-1]
    mean_n = centre + math.fsum(k * (up - down)) / math.fsum(w)
    return 2.0 * R * T * mean_n


def _brute_force_diff_variance(lattice: FockLattice, R: float) -> float:
    if lattice.n_max > 2000:
        raise ValueError("brute-force double sum is restricted to small lattices")
    acc = []
    for n, logw in zip(lattice.n, lattice.log_cn2):
        p = np.arange(n + 1)
        b = np.exp(log_binomial_pmf(p, n, R))
        diff2 = (p[:, None] - p[None, :]) ** 2
        acc.append(math.exp(logw) * float(b @ diff2 @ b))
    return math.fsum(acc)


def _n1_support(lattice: FockLattice, R: float) -> np.ndarray:
    T = 1.0 - R
    spread = 10.0 * math.sqrt(max(lattice.n_max * R * T, 1.0))
    lo = max(0, int(math.floor(T * lattice.n_min - spread)))
    hi = min(lattice.n_max, int(math.ceil(T * lattice.n_max + spread)))
    return np.arange(lo, hi + 1)


def _log_mix(lattice: FockLattice, R: float, log_extra: np.ndarray, n1: np.ndarray) -> np.ndarray:
    """log sum_n exp(log_cn2 + log_extra_n + log Binom(n1; n, T)) for every n1."""
    T = 1.0 - R
    n_all = lattice.n
    base = lattice.log_cn2 + log_extra
    keep = np.isfinite(base)
    n_all, base = n_all[keep], base[keep]
    out = np.full(n1.shape, -np.inf)
    for start in range(0, n_all.size, _CHUNK):
        n = n_all[start:start + _CHUNK, None]
        terms = base[start:start + _CHUNK, None] + log_binomial_pmf(n1[None, :], n, T)
        out = np.logaddexp(out, logsumexp(terms, axis=0))
    return out


def _distribution(n1: np.ndarray, log_p: np.ndarray, lattice: FockLattice, R: float, **meta) -> PhotonDistribution:
    n_bar_prime = (1.0 - R) * lattice.n_bar
    pmf = np.exp(log_p)
    return PhotonDistribution(grid=n1 - n_bar_prime, density=pmf, mass=math.fsum(pmf),
                              n_bar_prime=n_bar_prime, discrete=True, meta=meta)


def exact_marginal(lattice: FockLattice, R: float) -> PhotonDistribution:
    """Exact pmf of the signal photon number n1, on offsets n1 - n_bar'."""
    n1 = _n1_support(lattice, R)
    log_p = _log_mix(lattice, R, np.zeros(lattice.log_cn2.shape), n1)
    return _distribution(n1, log_p, lattice, R, kind="exact_marginal")


def exact_joint_conditional(lattice: FockLattice, R: float, N: int) -> PhotonDistribution:
    """Joint pmf P(n1, n2 = N) as a function of n1; its mass is Pr[n2 = N]."""
    if N < 0:
        raise ValueError("idler photon number must be >= 0")
    n1 = _n1_support(lattice, R)
    log_idler = log_binomial_pmf(N, lattice.n, 1.0 - R)
    log_p = _log_mix(lattice, R, log_idler, n1)
    return _distribution(n1, log_p, lattice, R, kind="exact_joint", N=N)


def exact_band_conditional(lattice: FockLattice, R: float, band: tuple[int, int]) -> PhotonDistribution:
    """Joint pmf with the idler anywhere in the inclusive integer range ``band``."""
    lo, hi = int(band[0]), int(band[1])
    if hi < lo:
        raise ValueError(f"empty idler band [{lo}, {hi}]")
    if hi < 0 or lo > lattice.n_max:
        raise ValueError(f"idler band [{lo}, {hi}] lies outside the lattice support")
    lo = max(lo, 0)
    hi = min(hi, lattice.n_max)
    T = 1.0 - R
    N = np.arange(lo, hi + 1)
    log_idler = logsumexp(log_binomial_pmf(N[None, :], lattice.n[:, None], T), axis=1)
    n1 = _n1_support(lattice, R)
    log_p = _log_mix(lattice, R, log_idler, n1)
    return _distribution(n1, log_p, lattice, R, kind="exact_band", band=(lo, hi))


def discretized_marginal(model: TwinBeamModel, dist: PhotonDistribution) -> PhotonDistribution:
    """Gaussian F' marginal sampled on the integer support of an exact pmf, renormalized."""
    var = model.n_bar_prime * model.fano_prime
    pmf = np.exp(-(dist.grid ** 2) / (2.0 * var))
    pmf /= math.fsum(pmf)
    return PhotonDistribution(grid=dist.grid, density=pmf, mass=1.0, n_bar_prime=dist.n_bar_prime,
                              normalized=True, discrete=True, meta={"kind": "gaussian_on_integers"})


def tv_distance(p: PhotonDistribution, q: PhotonDistribution) -> float:
    if not np.array_equal(p.grid, q.grid):
        raise ValueError("distributions must share a support")
    pn, qn = p.normalized_copy(), q.normalized_copy()
    return 0.5 * math.fsum(np.abs(pn.density - qn.density))

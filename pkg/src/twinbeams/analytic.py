"""Closed-form photon-number distributions of the conditionally reduced signal beam.

All quantities are in photons, with ``eps = n1 - n_bar'`` the signal offset and
band centres ``alpha`` measured from ``n_bar'`` on the idler axis.
Distributions conditioned on an idler band are kept unnormalized, so that their
integrated mass is the preparation probability.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.integrate import simpson
from scipy.special import erf, erfc
from scipy.stats import truncnorm

from .model import ModelError, SelectionBand, TwinBeamModel, check_disjoint

GRID_POINTS = 4001
GRID_HALF_SPAN = 8.0  # in combined standard deviations
TAIL_QUANTILE = 1e-10
_ERF_SWITCH = 0.4769362762044699
EXPANSION_MAX_DELTA_SIGMA = 1.0
EXPANSION_WARN_DELTA_SIGMA = 0.3


class ZeroWidthBand(ValueError):
    """A zero-width band carries no probability mass; use the single-value formula."""


@dataclass(frozen=True)
class PhotonDistribution:
    """Tabulated distribution over the signal offset ``eps``.

    ``mass`` is the integral of the unnormalized density and is kept unchanged by
    :meth:`normalized_copy`, so it always reports the preparation probability.
    Discrete distributions live on integer photon numbers and integrate by summation.
    """

    grid: np.ndarray
    density: np.ndarray
    mass: float
    n_bar_prime: float
    normalized: bool = False
    discrete: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.grid.shape != self.density.shape or self.grid.ndim != 1:
            raise ValueError("grid and density must be 1-d arrays of equal length")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(self.density < 0):
            raise ValueError("density must be non-negative")

    def integrate(self, values: np.ndarray) -> float:
        if self.discrete:
            return float(math.fsum(values))
        return float(simpson(values, x=self.grid))

    def total(self) -> float:
        return self.integrate(self.density)

    def normalized_copy(self) -> "PhotonDistribution":
        if self.normalized:
            return self
        total = self.total()
        if not total > 0:
            raise ValueError("cannot normalize a distribution with zero mass")
        return replace(self, density=self.density / total, normalized=True)

    def peak_normalized(self) -> np.ndarray:
        """Density scaled to 1 at its maximum; for plotting only."""
        peak = self.density.max()
        return self.density / peak if peak > 0 else self.density.copy()


@dataclass(frozen=True)
class ReducedStateReport:
    mean_shift: float
    fano: float
    skewness: float
    kurtosis: float
    prep_prob: float


@dataclass(frozen=True)
class MultiBandReport:
    bands: tuple
    reports: tuple
    aggregate_efficiency: float
    fano_spread: float


def erf_diff(a, b):
    """erf(a) - erf(b) without catastrophic cancellation in the tails."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    plain = erf(a) - erf(b)
    upper = erfc(b) - erfc(a)
    lower = erfc(-a) - erfc(-b)
    # erfc is the smaller of the pair once |x| exceeds erf^-1(1/2) ~ 0.477
    out = np.where((a >= _ERF_SWITCH) & (b >= _ERF_SWITCH), upper, plain)
    out = np.where((a <= -_ERF_SWITCH) & (b <= -_ERF_SWITCH), lower, out)
    return out


def gaussian_pdf(x, mean, var):
    x = np.asarray(x, dtype=float)
    return np.exp(-((x - mean) ** 2) / (2.0 * var)) / math.sqrt(2.0 * math.pi * var)


def _require_bright(model: TwinBeamModel) -> None:
    if not model.n_bar_prime > 0:
        raise ModelError("n_bar' = 0 (loss_r = 1): no light reaches the detectors")


def _uniform_grid(lo: float, hi: float, points: int = GRID_POINTS) -> np.ndarray:
    return np.linspace(lo, hi, points)


def _band_x_moments(model: TwinBeamModel, band: SelectionBand):
    """Mean, std and tail quantiles of the idler offset restricted to the band."""
    s_m = math.sqrt(model.n_bar_prime * model.fano_prime)
    a, b = band.lower / s_m, band.upper / s_m
    mean, var = truncnorm.stats(a, b, moments="mv")
    q_lo, q_hi = truncnorm.ppf([TAIL_QUANTILE, 1.0 - TAIL_QUANTILE], a, b)
    return float(mean) * s_m, math.sqrt(max(float(var), 0.0)) * s_m, q_lo * s_m, q_hi * s_m


def band_grid(model: TwinBeamModel, band: SelectionBand, points: int = GRID_POINTS) -> np.ndarray:
    """Grid covering the band-conditioned signal distribution and its tails."""
    _require_bright(model)
    beta = model.beta
    s_c = math.sqrt(model.n_bar_prime * model.v_c)
    m_x, sd_x, q_lo, q_hi = _band_x_moments(model, band)
    mean = beta * m_x
    sd = math.sqrt(beta * beta * sd_x * sd_x + s_c * s_c)
    lo = min(mean - GRID_HALF_SPAN * sd, beta * q_lo - GRID_HALF_SPAN * s_c)
    hi = max(mean + GRID_HALF_SPAN * sd, beta * q_hi + GRID_HALF_SPAN * s_c)
    return _uniform_grid(lo, hi, points)


def _finish(grid, density, model, **meta) -> PhotonDistribution:
    dist = PhotonDistribution(grid=grid, density=density, mass=0.0, n_bar_prime=model.n_bar_prime, meta=meta)
    return replace(dist, mass=dist.total())


def marginal_pdf(model: TwinBeamModel, grid: np.ndarray | None = None) -> PhotonDistribution:
    """Signal distribution without any conditioning: Gaussian of variance n_bar' F'."""
    _require_bright(model)
    var = model.n_bar_prime * model.fano_prime
    if grid is None:
        half = GRID_HALF_SPAN * math.sqrt(var)
        grid = _uniform_grid(-half, half)
    density = gaussian_pdf(grid, 0.0, var)
    return PhotonDistribution(grid=grid, density=density, mass=1.0, n_bar_prime=model.n_bar_prime,
                              normalized=True, meta={"kind": "marginal"})


def conditional_single_value(model: TwinBeamModel, alpha: float, grid: np.ndarray | None = None):
    """Signal distribution given the idler reads exactly n_bar' + alpha.

    The mass is the idler density at alpha (per photon); the normalized shape is a
    Gaussian centred on beta*alpha with variance n_bar' V_c.  When V_c = 0 the
    reduced state is a number state, returned as a discrete point mass whose
    standardized moments are undefined (NaN).
    """
    _require_bright(model)
    v_c = model.v_c
    n1 = model.n_bar_prime
    weight = float(gaussian_pdf(alpha, 0.0, n1 * model.fano_prime))
    centre = model.beta * alpha
    if v_c <= 0:
        dist = PhotonDistribution(grid=np.array([centre]), density=np.array([weight]), mass=weight,
                                  n_bar_prime=n1, discrete=True, meta={"kind": "single_value", "alpha": alpha})
        return dist, ReducedStateReport(mean_shift=centre, fano=0.0, skewness=math.nan, kurtosis=math.nan,
                                        prep_prob=weight)
    if grid is None:
        half = GRID_HALF_SPAN * math.sqrt(n1 * v_c)
        grid = _uniform_grid(centre - half, centre + half)
    density = weight * gaussian_pdf(grid, centre, n1 * v_c)
    dist = PhotonDistribution(grid=grid, density=density, mass=weight, n_bar_prime=n1,
                              meta={"kind": "single_value", "alpha": alpha})
    report = ReducedStateReport(mean_shift=centre, fano=v_c, skewness=0.0, kurtosis=3.0, prep_prob=weight)
    return dist, report


def band_mass(model: TwinBeamModel, band: SelectionBand) -> float:
    """Exact probability that the idler offset falls inside the band."""
    _require_bright(model)
    scale = math.sqrt(2.0 * model.n_bar_prime * model.fano_prime)
    return float(0.5 * erf_diff(band.upper / scale, band.lower / scale))


def band_pdf_exact(model: TwinBeamModel, band: SelectionBand, grid: np.ndarray | None = None) -> PhotonDistribution:
    """Unnormalized signal distribution given the idler lies inside ``band``."""
    _require_bright(model)
    if band.delta == 0:
        raise ZeroWidthBand("delta = 0: use conditional_single_value")
    if grid is None:
        grid = band_grid(model, band)
    n1 = model.n_bar_prime
    beta = model.beta
    envelope = gaussian_pdf(grid, 0.0, n1 * model.fano_prime)
    if model.v_c == 0:
        window = ((beta * grid >= band.lower) & (beta * grid < band.upper)).astype(float)
    else:
        scale = math.sqrt(2.0 * n1 * model.v_c)
        window = 0.5 * erf_diff((band.upper - beta * grid) / scale, (band.lower - beta * grid) / scale)
    density = np.clip(envelope * window, 0.0, None)
    return _finish(grid, density, model, kind="band_exact", alpha=band.alpha, delta=band.delta)


def band_pdf_expansion(model: TwinBeamModel, band: SelectionBand, grid: np.ndarray | None = None) -> PhotonDistribution:
    """Narrow-band approximation: single-value density times Delta plus the Delta^3 term.

    The cubic coefficient is 1/(24 n_bar' V_c) times the Hermite factor, i.e. the
    second derivative of the conditional Gaussian in the idler offset.
    """
    _require_bright(model)
    if model.v_c <= 0:
        raise ModelError("V_c = 0: the narrow-band expansion is undefined; use band_pdf_exact")
    s = model.sigma
    if band.delta > EXPANSION_MAX_DELTA_SIGMA * s:
        raise ValueError(f"expansion requires delta <= sigma ({s:.6g}), got {band.delta:.6g}")
    if band.delta > EXPANSION_WARN_DELTA_SIGMA * s:
        warnings.warn("delta > 0.3 sigma: the narrow-band expansion loses accuracy", RuntimeWarning,
                      stacklevel=2)
    if grid is None:
        grid = band_grid(model, band) if band.delta > 0 else None
    single, _ = conditional_single_value(model, band.alpha, grid=grid)
    grid = single.grid
    s2 = model.n_bar_prime * model.v_c
    d = band.delta
    u2 = (band.alpha - model.beta * grid) ** 2 / s2
    factor = d + d**3 / (24.0 * s2) * (-1.0 + u2)
    density = np.clip(single.density * factor, 0.0, None)
    return _finish(grid, density, model, kind="band_expansion", alpha=band.alpha, delta=band.delta)


def reduced_moments(dist: PhotonDistribution) -> ReducedStateReport:
    """Mean shift, Fano factor, skewness and (non-excess) kurtosis of a distribution."""
    if not dist.mass > 0:
        raise ValueError("distribution has zero mass; nothing was selected")
    p = dist.normalized_copy()
    x = p.grid
    mean = p.integrate(x * p.density)
    d = x - mean
    m2 = p.integrate(d**2 * p.density)
    m3 = p.integrate(d**3 * p.density)
    m4 = p.integrate(d**4 * p.density)
    return ReducedStateReport(
        mean_shift=mean,
        fano=m2 / dist.n_bar_prime,
        skewness=m3 / m2**1.5,
        kurtosis=m4 / (m2 * m2),
        prep_prob=dist.mass,
    )


def reduced_state(model: TwinBeamModel, band: SelectionBand) -> ReducedStateReport:
    """Report for one band; a zero-width band falls back to the single-value formula."""
    if band.delta == 0:
        return conditional_single_value(model, band.alpha)[1]
    return reduced_moments(band_pdf_exact(model, band))


def prep_prob_band(model: TwinBeamModel, band: SelectionBand, method: str = "auto") -> float:
    """Fraction of events whose idler falls in ``band``.

    ``method="closed"`` is the first-order narrow-band formula, ``"exact"`` the
    erf mass; ``"auto"`` uses the closed form while delta <= sigma.
    """
    _require_bright(model)
    if method == "auto":
        method = "closed" if band.delta <= model.sigma else "exact"
    if method == "exact":
        return band_mass(model, band)
    if method != "closed":
        raise ValueError(f"unknown method {method!r}")
    fp = model.fano_prime
    a = band.alpha_sigma(model)
    return band.delta_sigma(model) / math.sqrt(2.0 * math.pi * fp) * math.exp(-a * a / (2.0 * fp))


def multiband_report(model: TwinBeamModel, bands: Sequence[SelectionBand]) -> MultiBandReport:
    bands = tuple(bands)
    if not bands:
        raise ValueError("at least one band is required")
    check_disjoint(bands)
    reports = tuple(reduced_state(model, b) for b in bands)
    fanos = [r.fano for r in reports]
    return MultiBandReport(
        bands=bands,
        reports=reports,
        aggregate_efficiency=math.fsum(r.prep_prob for r in reports),
        fano_spread=max(fanos) - min(fanos),
    )


def band_ladder(model: TwinBeamModel, delta_sigma: float, spacing_sigma: float, span_sigma: float):
    """Bands of width delta centred every ``spacing`` sigma across [-span, +span]."""
    count = int(math.floor(span_sigma / spacing_sigma + 1e-9))
    centres = [k * spacing_sigma for k in range(-count, count + 1)]
    return [SelectionBand.in_sigma(model, c, delta_sigma) for c in centres]


def tiling_bands(model: TwinBeamModel, delta_sigma: float, half_range_sigma: float):
    """Contiguous bands of width delta covering [-half_range, +half_range] sigma."""
    n = int(round(2 * half_range_sigma / delta_sigma))
    start = -half_range_sigma + 0.5 * delta_sigma
    return [SelectionBand.in_sigma(model, start + k * delta_sigma, delta_sigma) for k in range(n)]


def total_variation(p: PhotonDistribution, q: PhotonDistribution) -> float:
    """Total-variation distance between two distributions tabulated on the same grid."""
    if p.grid.shape != q.grid.shape or not np.array_equal(p.grid, q.grid):
        raise ValueError("distributions must share a grid")
    pn, qn = p.normalized_copy(), q.normalized_copy()
    return 0.5 * pn.integrate(np.abs(pn.density - qn.density))

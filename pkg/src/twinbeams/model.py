"""Twin-beam parameter set and the derived scalars every layer consumes."""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import constants


class ModelError(ValueError):
    """Raised for parameter sets outside the model's validity domain."""


@dataclass(frozen=True)
class DerivedParams:
    transmission: float
    n_bar_prime: float
    fano_prime: float
    gemellity: float
    beta: float
    v_c: float
    sigma: float


@dataclass(frozen=True)
class TwinBeamModel:
    """Twin beams of mean photon number ``n_bar`` and Fano factor ``fano_f``
    each, passed through equal beam-splitter losses ``loss_r``."""

    n_bar: float
    fano_f: float
    loss_r: float

    def __post_init__(self):
        if not (math.isfinite(self.n_bar) and self.n_bar > 0):
            raise ModelError(f"n_bar must be finite and > 0, got {self.n_bar!r}")
        if not (math.isfinite(self.fano_f) and self.fano_f > 0):
            raise ModelError(f"fano_f must be finite and > 0, got {self.fano_f!r}")
        if not (0.0 <= self.loss_r <= 1.0):
            raise ModelError(f"loss_r must lie in [0, 1], got {self.loss_r!r}")

    @property
    def transmission(self) -> float:
        return 1.0 - self.loss_r

    @property
    def n_bar_prime(self) -> float:
        return self.transmission * self.n_bar

    @property
    def fano_prime(self) -> float:
        return self.loss_r + self.fano_f * self.transmission

    @property
    def gemellity(self) -> float:
        return self.loss_r

    @property
    def beta(self) -> float:
        return 1.0 - self.gemellity / self.fano_prime

    @property
    def v_c(self) -> float:
        g = self.gemellity
        return 2.0 * g - g * g / self.fano_prime

    @property
    def sigma(self) -> float:
        """Shot-noise standard deviation sqrt(n_bar') in photons."""
        return math.sqrt(self.n_bar_prime)

    def derive(self) -> DerivedParams:
        return derive(self)


def derive(model: TwinBeamModel) -> DerivedParams:
    return DerivedParams(
        transmission=model.transmission,
        n_bar_prime=model.n_bar_prime,
        fano_prime=model.fano_prime,
        gemellity=model.gemellity,
        beta=model.beta,
        v_c=model.v_c,
        sigma=model.sigma,
    )


def conditional_variance(fano_prime: float, gemellity: float) -> float:
    """V_c = 2G - G^2/F' in shot-noise units."""
    return 2.0 * gemellity - gemellity * gemellity / fano_prime


def model_from_observables(n_bar_prime: float, fano_prime: float, gemellity: float) -> TwinBeamModel:
    """Invert (n_bar', F', G) back to the pre-loss parameters (n_bar, F, R)."""
    if not (0.0 <= gemellity <= 1.0):
        raise ModelError(f"gemellity must lie in [0, 1], got {gemellity!r}")
    if not n_bar_prime > 0:
        raise ModelError(f"n_bar_prime must be > 0, got {n_bar_prime!r}")
    if gemellity == 1.0:
        # T = 0: n_bar' = 0 and F is indeterminate
        raise ModelError("gemellity = 1 leaves fano_f indeterminate (zero transmission)")
    if not fano_prime > gemellity:
        raise ModelError(
            f"fano_prime must exceed gemellity (got F'={fano_prime!r}, G={gemellity!r}); "
            "F' = G forces fano_f = 0"
        )
    t = 1.0 - gemellity
    return TwinBeamModel(n_bar=n_bar_prime / t, fano_f=(fano_prime - gemellity) / t, loss_r=gemellity)


@dataclass(frozen=True)
class SelectionBand:
    """Idler window [n_bar' + alpha - delta/2, n_bar' + alpha + delta/2), photons."""

    alpha: float
    delta: float

    def __post_init__(self):
        if math.isnan(self.alpha) or math.isnan(self.delta):
            raise ModelError("band parameters must not be NaN")
        if self.delta < 0:
            raise ModelError(f"band delta must be >= 0, got {self.delta!r}")

    @classmethod
    def in_sigma(cls, model: TwinBeamModel, alpha_sigma: float, delta_sigma: float) -> "SelectionBand":
        s = model.sigma
        return cls(alpha=alpha_sigma * s, delta=delta_sigma * s)

    @property
    def lower(self) -> float:
        return self.alpha - 0.5 * self.delta

    @property
    def upper(self) -> float:
        return self.alpha + 0.5 * self.delta

    def alpha_sigma(self, model: TwinBeamModel) -> float:
        return self.alpha / model.sigma

    def delta_sigma(self, model: TwinBeamModel) -> float:
        return self.delta / model.sigma

    def overlaps(self, other: "SelectionBand", tol: float = 0.0) -> bool:
        return self.lower < other.upper - tol and other.lower < self.upper - tol


def check_disjoint(bands) -> None:
    ordered = sorted(bands, key=lambda b: b.lower)
    for a, b in zip(ordered, ordered[1:]):
        # shared edges of contiguous bands may differ by rounding
        tol = 1e-12 * max(abs(a.upper), abs(b.lower), 1.0)
        if a.overlaps(b, tol):
            raise ModelError(f"selection bands overlap: {a} and {b}")


def photons_in_window(power_w: float, wavelength_m: float, window_s: float = 1.0) -> float:
    """Mean photon number carried by a beam of given power over a time window."""
    return power_w * window_s * wavelength_m / (constants.h * constants.c)

"""Tidy tables behind each figure: one row per x value, named columns."""
from __future__ import annotations

import math

import numpy as np

from . import analytic, montecarlo
from .config import ConfigError, RunConfig, _floats
from .model import SelectionBand, conditional_variance

FIGURES = (3, 4, 5, 6, 7, 8)


def _opt(cfg: RunConfig, key: str, default):
    raw = cfg.figure.get(key)
    if raw is None:
        return default
    if isinstance(default, tuple):
        return _floats(raw)
    try:
        return type(default)(float(raw))
    except ValueError as exc:
        raise ConfigError(f"[figure] {key}: bad value {raw!r}") from exc


def figure3(cfg: RunConfig) -> list[dict]:
    """Conditional variance against the Fano factor after losses, for several gemellities."""
    gems = _opt(cfg, "gemellities", (0.1, 0.18, 0.5))
    fanos = np.linspace(_opt(cfg, "fano_min", 1.0), _opt(cfg, "fano_max", 200.0), _opt(cfg, "steps", 200))
    rows = []
    for g in gems:
        for fp in fanos:
            fp = float(fp)
            if fp < g:
                continue
            rows.append({
                "gemellity": g,
                "fano_prime": fp,
                "fano_f": (fp - g) / (1.0 - g) if g < 1 else math.nan,
                "v_c": conditional_variance(fp, g),
                "beta": 1.0 - g / fp,
                "two_g": 2.0 * g,
            })
    return rows


def figure4(cfg: RunConfig) -> list[dict]:
    """Peak-normalized reduced distributions for central/off-centre, narrow/wide bands."""
    model = cfg.model()
    s = model.sigma
    panels = {"a": (0.0, 0.1), "b": (0.0, 10.0), "c": (10.0, 0.1), "d": (10.0, 10.0)}
    half = max(4.0 * math.sqrt(model.fano_prime), 20.0)
    points = _opt(cfg, "points", 4001)
    eps = np.linspace(-half, half, points)
    grid = eps * s
    initial = analytic.marginal_pdf(model, grid=grid).peak_normalized()
    coherent = np.exp(-eps**2 / 2.0)
    rows = []
    for name, (a, d) in panels.items():
        band = SelectionBand.in_sigma(model, a, d)
        reduced = analytic.band_pdf_exact(model, band, grid=grid).peak_normalized()
        for e, r, i, c in zip(eps, reduced, initial, coherent):
            rows.append({"panel": name, "alpha_sigma": a, "delta_sigma": d, "eps_sigma": float(e),
                         "reduced": float(r), "initial": float(i), "coherent": float(c)})
    return rows


def _delta_axis(cfg: RunConfig, lo: float, hi: float, steps: int, scale: str):
    lo = _opt(cfg, "delta_min", lo)
    hi = _opt(cfg, "delta_max", hi)
    steps = _opt(cfg, "steps", steps)
    if cfg.figure.get("scale", scale) == "log":
        return np.geomspace(lo, hi, steps)
    return np.linspace(lo, hi, steps)


def figure5(cfg: RunConfig) -> list[dict]:
    """Kurtosis of the reduced state against band width, band centred on the mean."""
    model = cfg.model()
    rows = []
    for d in _delta_axis(cfg, 0.01, 20.0, 120, "log"):
        r = analytic.reduced_state(model, SelectionBand.in_sigma(model, 0.0, float(d)))
        rows.append({"delta_sigma": float(d), "kurtosis": r.kurtosis, "skewness": r.skewness, "fano": r.fano})
    return rows


def figure6(cfg: RunConfig) -> list[dict]:
    """Reduced-state noise and preparation probability against band width."""
    model = cfg.model()
    rows = []
    for d in _delta_axis(cfg, 0.0, 2.0, 101, "linear"):
        band = SelectionBand.in_sigma(model, 0.0, float(d))
        r = analytic.reduced_state(model, band)
        prob = analytic.band_mass(model, band) if d > 0 else 0.0
        rows.append({"delta_sigma": float(d), "fano": r.fano, "prep_prob": prob,
                     "prep_prob_first_order": analytic.prep_prob_band(model, band, method="closed")})
    return rows


def figure7(cfg: RunConfig) -> list[dict]:
    """Preparation probability against band centre for a narrow band."""
    model = cfg.model()
    d = _opt(cfg, "delta", 0.1)
    lim = _opt(cfg, "alpha_max", 4.0 * math.sqrt(model.fano_prime))
    rows = []
    for a in np.linspace(-lim, lim, _opt(cfg, "steps", 161)):
        band = SelectionBand.in_sigma(model, float(a), d)
        r = analytic.reduced_state(model, band)
        rows.append({"alpha_sigma": float(a), "delta_sigma": d, "prep_prob": r.prep_prob,
                     "prep_prob_first_order": analytic.prep_prob_band(model, band, method="closed"),
                     "fano": r.fano, "mean_shift_sigma": r.mean_shift / model.sigma})
    return rows


def figure8(cfg: RunConfig) -> list[dict]:
    """Multi-band selection at several band spacings; optional Monte-Carlo columns."""
    model = cfg.model()
    d = _opt(cfg, "delta", 0.2)
    span = _opt(cfg, "span", 10.0)
    rows = []
    batch = None
    if cfg.layer == "montecarlo":
        batch = montecarlo.generate(model, cfg.n_samples, cfg.seed, cfg.workers)
    for spacing in _opt(cfg, "spacings", (4.0, 2.0)):
        bands = analytic.band_ladder(model, d, spacing, span)
        report = analytic.multiband_report(model, bands)
        selections = montecarlo.select(batch, bands) if batch is not None else None
        for i, (band, r) in enumerate(zip(bands, report.reports)):
            row = {"spacing_sigma": spacing, "alpha_sigma": band.alpha_sigma(model), "delta_sigma": d,
                   "prep_prob": r.prep_prob, "fano": r.fano, "skewness": r.skewness, "kurtosis": r.kurtosis,
                   "v_c": model.v_c, "aggregate_efficiency": report.aggregate_efficiency,
                   "fano_spread": report.fano_spread}
            if selections is not None:
                m = montecarlo.estimate_reduced(selections[i], model)
                row.update({"mc_n_used": selections[i].n_used, "mc_prep_prob": m.prep_prob.value,
                            "mc_prep_prob_se": m.prep_prob.std_error, "mc_fano": m.fano.value,
                            "mc_fano_se": m.fano.std_error, "mc_flagged": m.flagged})
            rows.append(row)
    return rows


def figure_table(fig_id: int, cfg: RunConfig) -> list[dict]:
    builders = {3: figure3, 4: figure4, 5: figure5, 6: figure6, 7: figure7, 8: figure8}
    if fig_id not in builders:
        raise ConfigError(f"unknown figure {fig_id}; choose from {', '.join(map(str, FIGURES))}")
    return builders[fig_id](cfg)


"""Run configuration: flat INI files with [section] headers."""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .model import ModelError, SelectionBand, TwinBeamModel, model_from_observables

PHYSICAL = ("n_bar", "fano_f", "loss_r")
OBSERVABLE = ("n_bar_prime", "fano_prime", "gemellity")
BAND_PARAMS = ("alpha_sigma", "delta_sigma")
SWEEPABLE = PHYSICAL + OBSERVABLE + BAND_PARAMS
LAYERS = ("analytic", "oracle", "montecarlo", "crosscheck")
FORMATS = ("csv", "json")

DEFAULT_OBSERVABLES = {"n_bar_prime": 1e6, "fano_prime": 100.0, "gemellity": 0.18}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Sweep:
    parameter: str
    start: float
    stop: float
    steps: int
    scale: str = "linear"

    def values(self) -> list[float]:
        import numpy as np

        if self.steps < 1:
            raise ConfigError("sweep steps must be >= 1")
        if self.scale == "log":
            if self.start <= 0 or self.stop <= 0:
                raise ConfigError("log sweep needs positive bounds")
            return [float(v) for v in np.geomspace(self.start, self.stop, self.steps)]
        return [float(v) for v in np.linspace(self.start, self.stop, self.steps)]


@dataclass(frozen=True)
class RunConfig:
    """Everything a subcommand needs; band centres and widths are in sigma units."""

    params: dict = field(default_factory=lambda: dict(DEFAULT_OBSERVABLES))
    form: str = "observable"
    alphas_sigma: tuple = (0.0,)
    delta_sigma: float = 0.1
    sweep: Sweep | None = None
    layer: str = "analytic"
    seed: int = 0
    out: str | None = None
    fmt: str = "csv"
    oracle_n_bars: tuple = (100.0, 400.0, 1600.0)
    oracle_fano_f: float = 4.0
    oracle_loss_r: float = 0.2
    n_samples: int = 1_000_000
    workers: int = 1
    figure: dict = field(default_factory=dict)

    def model(self) -> TwinBeamModel:
        return build_model(self.params, self.form)

    def bands(self, model: TwinBeamModel | None = None) -> list[SelectionBand]:
        model = model or self.model()
        return [SelectionBand.in_sigma(model, a, self.delta_sigma) for a in self.alphas_sigma]

    def with_param(self, name: str, value: float) -> "RunConfig":
        """Copy with one sweepable parameter replaced, switching parameterization if needed."""
        if name not in SWEEPABLE:
            raise ConfigError(f"unknown sweep parameter {name!r}; choose from {', '.join(SWEEPABLE)}")
        if name == "alpha_sigma":
            return replace(self, alphas_sigma=(value,))
        if name == "delta_sigma":
            return replace(self, delta_sigma=value)
        form = "physical" if name in PHYSICAL else "observable"
        params = dict(self.params) if form == self.form else convert(self.model(), form)
        params[name] = value
        return replace(self, params=params, form=form)


def build_model(params: dict, form: str) -> TwinBeamModel:
    if form == "physical":
        return TwinBeamModel(params["n_bar"], params["fano_f"], params["loss_r"])
    return model_from_observables(params["n_bar_prime"], params["fano_prime"], params["gemellity"])


def convert(model: TwinBeamModel, form: str) -> dict:
    if form == "physical":
        return {"n_bar": model.n_bar, "fano_f": model.fano_f, "loss_r": model.loss_r}
    return {"n_bar_prime": model.n_bar_prime, "fano_prime": model.fano_prime, "gemellity": model.gemellity}


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from exc


def _get_float(section, key, default=None):
    if key not in section:
        return default
    try:
        return float(section[key])
    except ValueError as exc:
        raise ConfigError(f"[{section.name}] {key}: not a number: {section[key]!r}") from exc


def _get_int(section, key, default=None):
    v = _get_float(section, key, None)
    if v is None:
        return default
    if v != int(v):
        raise ConfigError(f"[{section.name}] {key}: expected an integer, got {section[key]!r}")
    return int(v)


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    kw: dict = {}

    model = cp["model"] if cp.has_section("model") else {}
    phys = [k for k in PHYSICAL if k in model]
    obs = [k for k in OBSERVABLE if k in model]
    if phys and obs:
        raise ConfigError("[model] mixes (n_bar, fano_f, loss_r) with (n_bar_prime, fano_prime, gemellity)")
    if phys:
        if len(phys) != 3:
            raise ConfigError(f"[model] physical form needs n_bar, fano_f and loss_r; got {', '.join(phys)}")
        kw["params"] = {k: _get_float(model, k) for k in PHYSICAL}
        kw["form"] = "physical"
    elif obs:
        params = dict(DEFAULT_OBSERVABLES)
        params.update({k: _get_float(model, k) for k in obs})
        kw["params"] = params
        kw["form"] = "observable"
    unknown = set(model) - set(PHYSICAL) - set(OBSERVABLE) - set(cp.defaults())
    if unknown:
        raise ConfigError(f"[model] unknown keys: {', '.join(sorted(unknown))}")

    if cp.has_section("bands"):
        b = cp["bands"]
        if "delta" in b:
            kw["delta_sigma"] = _get_float(b, "delta")
        if "alphas" in b:
            kw["alphas_sigma"] = _floats(b["alphas"])
        elif "spacing" in b:
            spacing = _get_float(b, "spacing")
            span = _get_float(b, "span", 10.0)
            if not spacing > 0:
                raise ConfigError("[bands] spacing must be > 0")
            count = int(math.floor(span / spacing + 1e-9))
            kw["alphas_sigma"] = tuple(k * spacing for k in range(-count, count + 1))

    if cp.has_section("sweep"):
        s = cp["sweep"]
        name = s.get("parameter", "")
        if name not in SWEEPABLE:
            raise ConfigError(f"[sweep] unknown parameter {name!r}; choose from {', '.join(SWEEPABLE)}")
        kw["sweep"] = Sweep(name, _get_float(s, "min", 0.0), _get_float(s, "max", 1.0),
                            _get_int(s, "steps", 11), s.get("scale", "linear"))

    if cp.has_section("run"):
        r = cp["run"]
        if "layer" in r:
            kw["layer"] = r["layer"]
        if "seed" in r:
            kw["seed"] = _get_int(r, "seed")
        if "out" in r:
            kw["out"] = r["out"]
        if "format" in r:
            kw["fmt"] = r["format"]

    if cp.has_section("oracle"):
        o = cp["oracle"]
        if "n_bar" in o:
            kw["oracle_n_bars"] = _floats(o["n_bar"])
        kw["oracle_fano_f"] = _get_float(o, "fano_f", 4.0)
        kw["oracle_loss_r"] = _get_float(o, "loss_r", 0.2)

    if cp.has_section("montecarlo"):
        m = cp["montecarlo"]
        kw["n_samples"] = _get_int(m, "n_samples", 1_000_000)
        kw["workers"] = _get_int(m, "workers", 1)

    if cp.has_section("figure"):
        kw["figure"] = {k: v for k, v in cp["figure"].items()}

    cfg = RunConfig(**kw)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if cfg.layer not in LAYERS:
        raise ConfigError(f"layer must be one of {', '.join(LAYERS)}, got {cfg.layer!r}")
    if cfg.fmt not in FORMATS:
        raise ConfigError(f"format must be csv or json, got {cfg.fmt!r}")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if cfg.delta_sigma < 0:
        raise ConfigError("[bands] delta must be >= 0")
    if cfg.n_samples < 1 or cfg.workers < 1:
        raise ConfigError("[montecarlo] n_samples and workers must be >= 1")
    try:
        cfg.model()
    except ModelError as exc:
        raise ConfigError(f"[model] {exc}") from exc


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)

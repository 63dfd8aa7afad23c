"""Command-line harness: ``twinbeams figure|crosscheck|simulate|sweep``.

Exit status is 0 on success, 1 when a crosscheck fails and 2 on a bad config.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__, analytic, crosscheck, fock_oracle, montecarlo
from .config import ConfigError, RunConfig, load_config, validate
from .figures import FIGURES, figure_table
from .model import ModelError, TwinBeamModel
from .tables import write_table

OUT_DIR_ENV = "TWINBEAMS_OUT_DIR"

log = logging.getLogger("twinbeams")


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.format is not None:
        cfg = replace(cfg, fmt=args.format)
    validate(cfg)
    return cfg


def _out_path(args, cfg: RunConfig, default_name: str) -> Path:
    if args.out:
        return Path(args.out)
    if cfg.out:
        return Path(cfg.out)
    return Path(os.environ.get(OUT_DIR_ENV, ".")) / f"{default_name}.{cfg.fmt}"


def _meta(cfg: RunConfig, **extra) -> dict:
    m = cfg.model()
    return {"version": __version__, "n_bar": m.n_bar, "fano_f": m.fano_f, "loss_r": m.loss_r,
            "n_bar_prime": m.n_bar_prime, "fano_prime": m.fano_prime, "gemellity": m.gemellity,
            "seed": cfg.seed, **extra}


def _report_row(report: analytic.ReducedStateReport, sigma: float) -> dict:
    return {"mean_shift_sigma": report.mean_shift / sigma, "fano": report.fano, "skewness": report.skewness,
            "kurtosis": report.kurtosis, "prep_prob": report.prep_prob}


def _mc_rows(batch, model, bands) -> list[dict]:
    rows = []
    for sel in montecarlo.select(batch, bands):
        rep = montecarlo.estimate_reduced(sel, model)
        row = {"alpha_sigma": sel.band.alpha_sigma(model), "delta_sigma": sel.band.delta_sigma(model),
               "n_used": sel.n_used, "flagged": rep.flagged}
        for name in ("prep_prob", "mean_shift", "fano", "skewness", "kurtosis"):
            est = getattr(rep, name)
            scale = model.sigma if name == "mean_shift" else 1.0
            row[name] = est.value / scale
            row[f"{name}_se"] = est.std_error / scale
        rows.append(row)
    return rows


def cmd_figure(args) -> int:
    cfg = _config(args)
    rows = figure_table(args.fig, cfg)
    path = write_table(rows, _out_path(args, cfg, f"figure{args.fig}"), cfg.fmt, _meta(cfg, figure=args.fig))
    log.info("wrote %d rows to %s", len(rows), path)
    return 0


def cmd_crosscheck(args) -> int:
    cfg = _config(args)
    checks = crosscheck.run_crosscheck(cfg, beta_override=args.inject_beta)
    rows = [c.row() for c in checks]
    path = write_table(rows, _out_path(args, cfg, "crosscheck"), cfg.fmt, _meta(cfg, command="crosscheck"))
    failed = [c for c in checks if not c.passed]
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: expected={c.expected:.6g} got={c.got:.6g} "
              f"tol={c.tolerance:.3g}")
    log.info("wrote crosscheck report to %s", path)
    return 1 if failed else 0


def cmd_simulate(args) -> int:
    cfg = _config(args)
    if args.input:
        batch = montecarlo.load_batch(args.input)
        model = batch.model or cfg.model()
    else:
        model = cfg.model()
        batch = montecarlo.generate(model, cfg.n_samples, cfg.seed, cfg.workers)
    out = _out_path(args, cfg, "simulate")
    if not args.input:
        batch_path = Path(args.batch_out) if args.batch_out else out.with_name(out.stem + "_batch.npz")
        batch_path.parent.mkdir(parents=True, exist_ok=True)
        montecarlo.save_batch(batch, batch_path)
    rows = _mc_rows(batch, model, cfg.bands(model))
    for row in rows:
        if row["flagged"]:
            log.warning("band alpha=%g sigma selected %d samples; moments not estimated",
                        row["alpha_sigma"], row["n_used"])
    write_table(rows, out, cfg.fmt, _meta(cfg, command="simulate", n_samples=batch.n_samples,
                                          generator_id=batch.generator_id))
    return 0


def _sweep_rows(cfg: RunConfig, value: float) -> list[dict]:
    name = cfg.sweep.parameter
    if cfg.layer == "oracle":
        if name not in ("n_bar", "fano_f", "loss_r"):
            raise ConfigError("oracle sweeps take n_bar, fano_f or loss_r")
        params = {"n_bar": cfg.oracle_n_bars[-1], "fano_f": cfg.oracle_fano_f, "loss_r": cfg.oracle_loss_r}
        params[name] = value
        model = TwinBeamModel(**params)
        lattice = fock_oracle.FockLattice.from_model(model)
        marginal = fock_oracle.exact_marginal(lattice, model.loss_r)
        cond = fock_oracle.exact_joint_conditional(lattice, model.loss_r, int(round(model.n_bar_prime)))
        return [{name: value, "exact_fano": analytic.reduced_moments(marginal).fano, "fano_prime": model.fano_prime,
                 "tv_marginal": fock_oracle.tv_distance(marginal, fock_oracle.discretized_marginal(model, marginal)),
                 "exact_conditional_fano": analytic.reduced_moments(cond).fano, "v_c": model.v_c,
                 "diff_variance": fock_oracle.exact_intensity_diff_variance(lattice, model.loss_r),
                 "diff_variance_closed": 2 * model.loss_r * model.n_bar * model.transmission}]
    point = cfg.with_param(name, value)
    model = point.model()
    bands = point.bands(model)
    if cfg.layer == "montecarlo":
        batch = montecarlo.generate(model, cfg.n_samples, cfg.seed, cfg.workers)
        return [{name: value, **row} for row in _mc_rows(batch, model, bands)]
    rows = []
    for band in bands:
        rep = analytic.reduced_state(model, band)
        rows.append({name: value, "alpha_sigma": band.alpha_sigma(model), "delta_sigma": band.delta_sigma(model),
                     "v_c": model.v_c, "beta": model.beta, **_report_row(rep, model.sigma)})
    return rows


def cmd_sweep(args) -> int:
    cfg = _config(args)
    if cfg.sweep is None:
        raise ConfigError("sweep needs a [sweep] section (parameter, min, max, steps)")
    if cfg.layer == "crosscheck":
        raise ConfigError("use the crosscheck subcommand for the crosscheck layer")
    rows = []
    for value in cfg.sweep.values():
        rows += _sweep_rows(cfg, value)
    write_table(rows, _out_path(args, cfg, f"sweep_{cfg.sweep.parameter}"), cfg.fmt,
                _meta(cfg, command="sweep", layer=cfg.layer))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI run configuration")
    common.add_argument("--out", help=f"output file (default: ${OUT_DIR_ENV} or the current directory)")
    common.add_argument("--seed", type=int, help="RNG seed (unsigned 64-bit)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="twinbeams", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("figure", parents=[common], help="tabulate the data behind a figure")
    p.add_argument("--fig", type=int, required=True, help=f"one of {', '.join(map(str, FIGURES))}")
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("crosscheck", parents=[common], help="oracle and Monte-Carlo consistency checks")
    p.add_argument("--inject-beta", type=float, default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_crosscheck)

    p = sub.add_parser("simulate", parents=[common], help="generate or load a record and post-select it")
    p.add_argument("--input", help="existing batch (.csv or .npz) to post-select instead of generating")
    p.add_argument("--batch-out", help="where to write the generated batch (.csv or .npz)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", parents=[common], help="sweep one parameter through a layer")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ModelError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

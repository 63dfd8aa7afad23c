"""Oracle-vs-analytic and Monte-Carlo-vs-analytic consistency checks."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from . import analytic, fock_oracle, montecarlo
from .config import RunConfig
from .model import SelectionBand, TwinBeamModel, conditional_variance

MC_SIGMAS = 3.0


@dataclass(frozen=True)
class Check:
    name: str
    expected: float
    got: float
    tolerance: float
    passed: bool
    detail: str = ""

    def row(self) -> dict:
        d = asdict(self)
        d["verdict"] = "pass" if d.pop("passed") else "FAIL"
        return d


def _rel(name, expected, got, tol, detail="") -> Check:
    err = abs(got - expected) / abs(expected) if expected else abs(got)
    return Check(name, expected, got, tol, err <= tol, detail or f"relative error {err:.3g}")


def _within_se(name, expected, est: montecarlo.EstimateWithError, k=MC_SIGMAS) -> Check:
    tol = k * est.std_error
    ok = abs(est.value - expected) <= tol
    return Check(name, expected, est.value, tol, ok, f"{k:g} standard errors, n_used={est.n_used}")


def oracle_checks(n_bars, fano_f: float, loss_r: float, beta_override: float | None = None) -> list[Check]:
    checks = []
    tvs = []
    for nb in n_bars:
        model = TwinBeamModel(nb, fano_f, loss_r)
        lattice = fock_oracle.FockLattice.from_model(model)
        marginal = fock_oracle.exact_marginal(lattice, loss_r)
        tv = fock_oracle.tv_distance(marginal, fock_oracle.discretized_marginal(model, marginal))
        tvs.append(tv)
        checks.append(Check(f"oracle_tv_marginal[n_bar={nb:g}]", 0.0, tv, math.inf, True,
                            "reported for the convergence ordering"))
    checks.append(Check("oracle_tv_decreasing", 0.0, float(all(b < a for a, b in zip(tvs, tvs[1:]))),
                        0.0, all(b < a for a, b in zip(tvs, tvs[1:])), "tv shrinks as n_bar grows"))
    checks.append(Check(f"oracle_tv_marginal_max[n_bar={n_bars[-1]:g}]", 0.0, tvs[-1], 1e-2, tvs[-1] < 1e-2))

    model = TwinBeamModel(n_bars[-1], fano_f, loss_r)
    lattice = fock_oracle.FockLattice.from_model(model)
    n1 = model.n_bar_prime
    centre = fock_oracle.exact_joint_conditional(lattice, loss_r, int(round(n1)))
    checks.append(_rel("oracle_conditional_fano", model.v_c, analytic.reduced_moments(centre).fano, 0.05))

    beta = model.beta if beta_override is None else beta_override
    N = int(round(n1 + 2.0 * math.sqrt(n1 * model.fano_prime)))
    shifted = fock_oracle.exact_joint_conditional(lattice, loss_r, N)
    checks.append(_rel("oracle_mean_shift", beta * (N - n1), analytic.reduced_moments(shifted).mean_shift, 0.05))

    var = fock_oracle.exact_intensity_diff_variance(lattice, loss_r)
    checks.append(_rel("oracle_diff_variance", 2.0 * loss_r * model.n_bar * model.transmission, var, 1e-9))
    return checks


def montecarlo_checks(model: TwinBeamModel, n_samples: int, seed: int, workers: int = 1,
                      beta_override: float | None = None) -> list[Check]:
    batch = montecarlo.generate(model, n_samples, seed, workers)
    checks = [
        _within_se("mc_gemellity", model.gemellity, montecarlo.estimate_gemellity(batch, model)),
        _within_se("mc_fano_signal", model.fano_prime, montecarlo.estimate_fano(batch, model)),
    ]
    centre = SelectionBand.in_sigma(model, 0.0, 1.0)
    offset = SelectionBand.in_sigma(model, 2.0, 0.1)
    sel_c, sel_o = montecarlo.select(batch, [centre, offset])
    rep_c = montecarlo.estimate_reduced(sel_c, model)
    checks.append(_within_se("mc_prep_prob", analytic.band_mass(model, centre), sel_c.prep_prob))
    checks.append(_within_se("mc_band_fano", analytic.reduced_state(model, centre).fano, rep_c.fano))
    rep_o = montecarlo.estimate_reduced(sel_o, model)
    beta = model.beta if beta_override is None else beta_override
    checks.append(_within_se("mc_mean_shift", beta * offset.alpha, rep_o.mean_shift))
    return checks


def analytic_checks() -> list[Check]:
    v = conditional_variance(100.0, 0.18)
    return [Check("analytic_v_c", 0.359676, v, 1e-9, abs(v - 0.359676) <= 1e-9)]


def run_crosscheck(cfg: RunConfig, beta_override: float | None = None) -> list[Check]:
    checks = analytic_checks()
    checks += oracle_checks(cfg.oracle_n_bars, cfg.oracle_fano_f, cfg.oracle_loss_r, beta_override)
    checks += montecarlo_checks(cfg.model(), cfg.n_samples, cfg.seed, cfg.workers, beta_override)
    return checks

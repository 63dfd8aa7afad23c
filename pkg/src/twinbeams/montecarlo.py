"""Monte-Carlo twin-beam records and post-selection on the idler.

Samples are Gaussian photon-number fluctuations.  A common super-Poissonian
component C (variance F n_bar) is mixed with independent shot-noise terms X, Y
(variance n_bar) as A = sqrt(R) X + sqrt(1-R) C, B = sqrt(R) Y + sqrt(1-R) C,
and both are scaled by sqrt(T) so the records are offsets about n_bar' with
Fano factor F' and gemellity R.

Random numbers come from Philox, a counter-based generator.  Samples are drawn
in fixed blocks, each block owning a disjoint counter range derived from its
index, so results do not depend on how many workers fill the blocks.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .model import SelectionBand, TwinBeamModel, check_disjoint

BLOCK_SIZE = 1 << 16
GENERATOR_ID = f"philox4x64-block{BLOCK_SIZE}"
BOOTSTRAP_RESAMPLES = 200
MIN_SAMPLES = 100
_BOOTSTRAP_TAG = 0xB0075


@dataclass(frozen=True, eq=False)
class SampleBatch:
    signal: np.ndarray
    idler: np.ndarray
    seed: int
    generator_id: str
    n_samples: int
    model: TwinBeamModel | None = None

    def __post_init__(self):
        if self.signal.shape != (self.n_samples,) or self.idler.shape != (self.n_samples,):
            raise ValueError("signal and idler must both hold n_samples entries")


@dataclass(frozen=True)
class EstimateWithError:
    value: float
    std_error: float
    n_used: int
    degenerate: bool = False


@dataclass(frozen=True, eq=False)
class BandSelection:
    band: SelectionBand
    index: int
    signal: np.ndarray
    prep_prob: EstimateWithError
    seed: int

    @property
    def n_used(self) -> int:
        return int(self.signal.size)

    @property
    def flagged(self) -> bool:
        return self.signal.size == 0


@dataclass(frozen=True)
class MCReducedReport:
    mean_shift: EstimateWithError
    fano: EstimateWithError
    skewness: EstimateWithError
    kurtosis: EstimateWithError
    prep_prob: EstimateWithError
    flagged: bool = False
    note: str = ""


def _block_rng(seed: int, block: int) -> np.random.Generator:
    # blocks are 2**64 counter steps apart; one block consumes far fewer
    return np.random.Generator(np.random.Philox(key=seed, counter=block << 64))


def _fill_block(seed: int, block: int, out: np.ndarray) -> None:
    start = block * BLOCK_SIZE
    stop = min(start + BLOCK_SIZE, out.shape[1])
    # always draw a full block so a record is a prefix of any longer one
    out[:, start:stop] = _block_rng(seed, block).standard_normal((3, BLOCK_SIZE))[:, : stop - start]


def standard_normals(n_samples: int, seed: int, workers: int = 1) -> np.ndarray:
    """(3, n) independent unit normals for X, Y and C; identical for any worker count."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    out = np.empty((3, n_samples))
    blocks = range((n_samples + BLOCK_SIZE - 1) // BLOCK_SIZE)
    if workers <= 1:
        for b in blocks:
            _fill_block(seed, b, out)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda b: _fill_block(seed, b, out), blocks))
    return out


def twin_arrays(model: TwinBeamModel, n_samples: int, seed: int, workers: int = 1):
    """Signal/idler fluctuations about n_bar before the sqrt(T) rescaling."""
    z = standard_normals(n_samples, seed, workers)
    shot = math.sqrt(model.n_bar)
    common = math.sqrt(model.fano_f * model.n_bar) * z[2]
    r, t = math.sqrt(model.loss_r), math.sqrt(1.0 - model.loss_r)
    a = r * (shot * z[0]) + t * common
    b = r * (shot * z[1]) + t * common
    return a, b


def generate(model: TwinBeamModel, n_samples: int, seed: int, workers: int = 1) -> SampleBatch:
    a, b = twin_arrays(model, n_samples, seed, workers)
    scale = math.sqrt(model.transmission)
    return SampleBatch(signal=scale * a, idler=scale * b, seed=seed, generator_id=GENERATOR_ID,
                       n_samples=n_samples, model=model)


def _variance_estimate(x: np.ndarray, norm: float) -> EstimateWithError:
    n = x.size
    if n < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {n}")
    s2 = float(np.var(x, ddof=1))
    value = s2 / norm
    return EstimateWithError(value=value, std_error=value * math.sqrt(2.0 / (n - 1)), n_used=n,
                             degenerate=s2 == 0.0)


def estimate_gemellity(batch: SampleBatch, model: TwinBeamModel) -> EstimateWithError:
    """Var(signal - idler) / (2 n_bar')."""
    return _variance_estimate(batch.signal - batch.idler, 2.0 * model.n_bar_prime)


def estimate_fano(batch: SampleBatch, model: TwinBeamModel, side: str = "signal") -> EstimateWithError:
    if side not in ("signal", "idler"):
        raise ValueError(f"side must be 'signal' or 'idler', got {side!r}")
    return _variance_estimate(getattr(batch, side), model.n_bar_prime)


def correlation(a: np.ndarray, b: np.ndarray) -> EstimateWithError:
    """Pearson correlation with its large-sample standard error (1 - r^2)/sqrt(n)."""
    n = a.size
    r = float(np.corrcoef(a, b)[0, 1])
    return EstimateWithError(value=r, std_error=(1.0 - r * r) / math.sqrt(n), n_used=n)


def binomial_estimate(kept: int, total: int) -> EstimateWithError:
    p = kept / total
    return EstimateWithError(value=p, std_error=math.sqrt(p * (1.0 - p) / total), n_used=total,
                             degenerate=kept == 0)


def select(batch: SampleBatch, bands: SelectionBand | Sequence[SelectionBand]) -> list[BandSelection]:
    """Keep signal samples whose paired idler lies in [lower, upper) of a band."""
    if isinstance(bands, SelectionBand):
        bands = [bands]
    bands = list(bands)
    check_disjoint(bands)
    out = []
    for i, band in enumerate(bands):
        mask = (batch.idler >= band.lower) & (batch.idler < band.upper)
        kept = batch.signal[mask]
        out.append(BandSelection(band=band, index=i, signal=kept,
                                 prep_prob=binomial_estimate(int(kept.size), batch.n_samples),
                                 seed=batch.seed))
    return out


def sample_moments(x: np.ndarray, n_bar_prime: float) -> tuple[float, float, float, float]:
    """Mean, Fano (unbiased variance / n_bar'), skewness and non-excess kurtosis."""
    mean = float(x.mean())
    d = x - mean
    d2 = d * d
    m2 = float(d2.mean())
    m3 = float((d2 * d).mean())
    m4 = float((d2 * d2).mean())
    n = x.size
    return mean, m2 * n / (n - 1) / n_bar_prime, m3 / m2**1.5, m4 / (m2 * m2)


def estimate_reduced(selected: BandSelection, model: TwinBeamModel,
                     resamples: int = BOOTSTRAP_RESAMPLES) -> MCReducedReport:
    """Moments of the post-selected signal with bootstrap standard errors."""
    x = selected.signal
    n = x.size
    if n < MIN_SAMPLES:
        nan = EstimateWithError(math.nan, math.nan, n, degenerate=True)
        return MCReducedReport(nan, nan, nan, nan, selected.prep_prob, flagged=True,
                               note=f"only {n} samples selected (< {MIN_SAMPLES})")
    point = sample_moments(x, model.n_bar_prime)
    seq = np.random.SeedSequence([selected.seed, selected.index, _BOOTSTRAP_TAG])
    rng = np.random.Generator(np.random.Philox(seq))
    boot = np.empty((resamples, 4))
    for k in range(resamples):
        boot[k] = sample_moments(x[rng.integers(0, n, n)], model.n_bar_prime)
    se = boot.std(axis=0, ddof=1)
    est = [EstimateWithError(float(v), float(s), n) for v, s in zip(point, se)]
    return MCReducedReport(*est, prep_prob=selected.prep_prob)


# -- batch export / import ---------------------------------------------------

_HEADER_KEYS = ("n_bar", "fano_f", "loss_r", "seed", "generator_id", "n_samples")


def _header(batch: SampleBatch) -> dict:
    m = batch.model
    return {
        "n_bar": repr(m.n_bar) if m else "",
        "fano_f": repr(m.fano_f) if m else "",
        "loss_r": repr(m.loss_r) if m else "",
        "seed": str(batch.seed),
        "generator_id": batch.generator_id,
        "n_samples": str(batch.n_samples),
    }


def save_batch(batch: SampleBatch, path) -> Path:
    """Write a batch as CSV (``.csv``) or numpy archive (anything else, ``.npz`` appended)."""
    path = Path(path)
    head = _header(batch)
    if path.suffix == ".csv":
        with open(path, "w", newline="\n") as fh:
            for key in _HEADER_KEYS:
                fh.write(f"# {key}={head[key]}\n")
            fh.write("signal,idler\n")
            np.savetxt(fh, np.column_stack([batch.signal, batch.idler]), fmt="%.17g", delimiter=",")
        return path
    if path.suffix != ".npz":
        path = path.with_suffix(path.suffix + ".npz")
    with open(path, "wb") as fh:
        np.savez(fh, signal=batch.signal, idler=batch.idler, **{f"meta_{k}": np.array(v) for k, v in head.items()})
    return path


def _batch_from(head: dict, signal: np.ndarray, idler: np.ndarray) -> SampleBatch:
    model = None
    if head.get("n_bar"):
        model = TwinBeamModel(float(head["n_bar"]), float(head["fano_f"]), float(head["loss_r"]))
    seed = int(head["seed"]) if head.get("seed") else 0
    return SampleBatch(signal=signal, idler=idler, seed=seed,
                       generator_id=head.get("generator_id", "external"),
                       n_samples=int(signal.size), model=model)


def load_batch(path) -> SampleBatch:
    """Read a batch written by :func:`save_batch`, or any two-column signal,idler record."""
    path = Path(path)
    if path.suffix == ".npz":
        with np.load(path) as data:
            head = {k[5:]: str(data[k]) for k in data.files if k.startswith("meta_")}
            return _batch_from(head, data["signal"].copy(), data["idler"].copy())
    head = {}
    with open(path) as fh:
        line = fh.readline()
        while line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            head[key.strip()] = value.strip()
            line = fh.readline()
        lines = fh if not _is_data_row(line) else itertools.chain([line], fh)
        data = np.loadtxt(lines, delimiter=",", ndmin=2, usecols=(0, 1))
    return _batch_from(head, np.ascontiguousarray(data[:, 0]), np.ascontiguousarray(data[:, 1]))


def _is_data_row(line: str) -> bool:
    try:
        float(line.split(",")[0])
    except ValueError:
        return False
    return True

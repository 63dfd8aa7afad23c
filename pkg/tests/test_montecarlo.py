import math

import numpy as np
import pytest

from twinbeams import analytic as an
from twinbeams import montecarlo as mc
from twinbeams.model import SelectionBand, TwinBeamModel



@pytest.fixture(scope="module")
def model():
    # F' = 100, G = 0.18 after losses
    return TwinBeamModel(1e6 / 0.82, (100 - 0.18) / 0.82, 0.18)


@pytest.fixture(scope="module")
def batch(model):
    return mc.generate(model, 2_000_000, seed=11, workers=4)


def test_fixture_point(model):
    assert model.fano_prime == pytest.approx(100.0, rel=1e-12)
    assert model.gemellity == pytest.approx(0.18, rel=1e-12)


def test_lossless_twins_identical():
    m = TwinBeamModel(1e4, 5.0, 0.0)
    b = mc.generate(m, 5000, seed=1)
    assert np.array_equal(b.signal, b.idler)
    g = mc.estimate_gemellity(b, m)
    assert g.value == 0.0 and g.degenerate


def test_fully_lossy_arms_uncorrelated():
    m = TwinBeamModel(1e4, 5.0, 1.0)
    a, b = mc.twin_arrays(m, 200_000, seed=2)
    r = mc.correlation(a, b)
    assert abs(r.value) <= 3 * r.std_error
    # the physical batch is all zeros when nothing is transmitted
    assert not mc.generate(m, 10, seed=2).signal.any()


def test_second_moments_within_errors(batch, model):
    g = mc.estimate_gemellity(batch, model)
    assert abs(g.value - model.gemellity) <= 3 * g.std_error
    for side in ("signal", "idler"):
        f = mc.estimate_fano(batch, model, side)
        assert abs(f.value - model.fano_prime) <= 3 * f.std_error


def test_bad_side(batch, model):
    with pytest.raises(ValueError):
        mc.estimate_fano(batch, model, "pump")


def test_full_axis_band(batch):
    (sel,) = mc.select(batch, SelectionBand(0.0, math.inf))
    assert sel.n_used == batch.n_samples
    assert sel.prep_prob.value == 1.0


def test_empty_selection_flagged(batch, model):
    (sel,) = mc.select(batch, SelectionBand.in_sigma(model, 60.0, 0.1))
    assert sel.n_used == 0 and sel.flagged
    rep = mc.estimate_reduced(sel, model)
    assert rep.flagged and math.isnan(rep.fano.value)
    assert rep.prep_prob.value == 0.0 and rep.prep_prob.degenerate


def test_overlapping_bands_rejected(batch, model):
    with pytest.raises(ValueError):
        mc.select(batch, [SelectionBand.in_sigma(model, 0, 1), SelectionBand.in_sigma(model, 0.5, 1)])


def test_half_open_edges():
    m = TwinBeamModel(100, 1.0, 0.5)
    idler = np.array([-1.0, 0.0, 1.0, 2.0])
    b = mc.SampleBatch(signal=idler * 10, idler=idler, seed=0, generator_id="t", n_samples=4)
    lo, hi = mc.select(b, [SelectionBand(0.5, 1.0), SelectionBand(1.5, 1.0)])
    assert lo.signal.tolist() == [0.0] and hi.signal.tolist() == [10.0]
    del m


def _z(est, ref):
    return abs(est.value - ref) / est.std_error


def test_narrow_band_statistics(batch, model):
    band = SelectionBand.in_sigma(model, 0.0, 0.1)
    (sel,) = mc.select(batch, band)
    rep = mc.estimate_reduced(sel, model)
    exact = an.reduced_state(model, band)
    assert _z(sel.prep_prob, an.band_mass(model, band)) < 3
    assert _z(rep.fano, exact.fano) < 3
    assert _z(rep.skewness, exact.skewness) < 3
    assert _z(rep.kurtosis, exact.kurtosis) < 3


def test_wide_band_is_platykurtic(model):
    b = mc.generate(model, 4_000_000, seed=5, workers=4)
    band = SelectionBand.in_sigma(model, 0.0, 10.0)
    (sel,) = mc.select(b, band)
    assert sel.n_used >= 100_000
    rep = mc.estimate_reduced(sel, model)
    assert 3.0 - rep.kurtosis.value > 3 * rep.kurtosis.std_error
    assert _z(rep.kurtosis, an.reduced_state(model, band).kurtosis) < 3


def test_offset_band_mean_shift(batch, model):
    band = SelectionBand.in_sigma(model, 2.0, 0.1)
    (sel,) = mc.select(batch, band)
    rep = mc.estimate_reduced(sel, model)
    assert _z(rep.mean_shift, model.beta * band.alpha) < 3


@pytest.mark.parametrize("n", [1, 1000, mc.BLOCK_SIZE, mc.BLOCK_SIZE + 1, 3 * mc.BLOCK_SIZE - 7])
def test_worker_count_does_not_change_samples(n):
    m = TwinBeamModel(1e4, 2.0, 0.3)
    ref = mc.generate(m, n, seed=99, workers=1)
    for w in (4, 16):
        b = mc.generate(m, n, seed=99, workers=w)
        assert np.array_equal(ref.signal, b.signal) and np.array_equal(ref.idler, b.idler)


def test_prefix_stability():
    m = TwinBeamModel(1e4, 2.0, 0.3)
    short = mc.generate(m, 70_000, seed=4)
    long = mc.generate(m, 200_000, seed=4, workers=3)
    assert np.array_equal(short.signal, long.signal[:70_000])


def test_seeds_differ():
    m = TwinBeamModel(1e4, 2.0, 0.3)
    assert not np.array_equal(mc.generate(m, 100, seed=1).signal, mc.generate(m, 100, seed=2).signal)


def test_bad_seed_and_size():
    m = TwinBeamModel(1e4, 2.0, 0.3)
    with pytest.raises(ValueError):
        mc.generate(m, 0, seed=1)
    with pytest.raises(ValueError):
        mc.generate(m, 10, seed=-1)


def test_bootstrap_reproducible(batch, model):
    (sel,) = mc.select(batch, SelectionBand.in_sigma(model, 0.0, 0.5))
    assert mc.estimate_reduced(sel, model) == mc.estimate_reduced(sel, model)


@pytest.mark.parametrize("suffix", [".csv", ".npz"])
def test_round_trip(tmp_path, model, suffix):
    b = mc.generate(model, 20_000, seed=8)
    path = mc.save_batch(b, tmp_path / f"batch{suffix}")
    back = mc.load_batch(path)
    assert np.array_equal(back.signal, b.signal) and np.array_equal(back.idler, b.idler)
    assert back.model == model and back.seed == 8 and back.generator_id == mc.GENERATOR_ID
    band = SelectionBand.in_sigma(model, 0.0, 1.0)
    assert mc.estimate_reduced(mc.select(back, band)[0], model) == mc.estimate_reduced(mc.select(b, band)[0], model)


def test_load_plain_two_column_csv(tmp_path):
    p = tmp_path / "ext.csv"
    p.write_text("1.5,2.5\n-3,4\n")
    b = mc.load_batch(p)
    assert b.signal.tolist() == [1.5, -3.0] and b.idler.tolist() == [2.5, 4.0]
    assert b.model is None and b.generator_id == "external"


def test_sample_moments_match_numpy():
    x = np.random.default_rng(0).gamma(2.0, size=10_000)
    mean, fano, skew, kurt = mc.sample_moments(x, 2.0)
    d = x - x.mean()
    assert mean == pytest.approx(x.mean())
    assert fano == pytest.approx(x.var(ddof=1) / 2.0)
    assert skew == pytest.approx(np.mean(d**3) / np.mean(d**2) ** 1.5)
    assert kurt == pytest.approx(np.mean(d**4) / np.mean(d**2) ** 2)

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twinbeams.model import (
    ModelError,
    SelectionBand,
    TwinBeamModel,
    check_disjoint,
    conditional_variance,
    derive,
    model_from_observables,
    photons_in_window,
)

gem = st.floats(0.0, 0.999)
fano = st.floats(1e-3, 1e4)


def test_lossless_poissonian():
    d = derive(TwinBeamModel(1e6, 1.0, 0.0))
    assert (d.fano_prime, d.gemellity, d.beta, d.v_c) == (1.0, 0.0, 1.0, 0.0)


def test_full_loss_is_poissonian():
    d = derive(TwinBeamModel(1e6, 100.0, 1.0))
    assert d.fano_prime == 1.0
    assert d.n_bar_prime == 0.0
    assert d.gemellity == 1.0


def test_experimental_point():
    m = model_from_observables(1e6, 100.0, 0.18)
    # 2G - G^2/F' and 1 - G/F' by hand
    assert m.v_c == pytest.approx(0.36 - 0.0324 / 100, abs=1e-15)
    assert m.v_c == pytest.approx(0.359676, abs=1e-12)
    assert m.beta == pytest.approx(0.9982, abs=1e-12)


@pytest.mark.parametrize("field,args", [
    ("n_bar", (0.0, 1.0, 0.1)),
    ("n_bar", (-5.0, 1.0, 0.1)),
    ("fano_f", (10.0, 0.0, 0.1)),
    ("loss_r", (10.0, 1.0, 1.5)),
    ("loss_r", (10.0, 1.0, -0.1)),
])
def test_invalid_parameters_name_the_field(field, args):
    with pytest.raises(ModelError, match=field):
        TwinBeamModel(*args)


def test_sub_poissonian_input_is_accepted():
    m = TwinBeamModel(1e4, 0.5, 0.2)
    assert m.fano_prime == pytest.approx(0.2 + 0.5 * 0.8)


def test_inversion_of_experimental_point():
    m = model_from_observables(1e6, 100.0, 0.18)
    assert m.loss_r == 0.18
    assert m.transmission == pytest.approx(0.82)
    assert m.fano_f == pytest.approx(99.82 / 0.82)
    assert m.fano_f == pytest.approx(121.73, abs=5e-3)


def test_inversion_coherent_fixed_point():
    m = model_from_observables(1e6, 1.0, 0.0)
    assert m.fano_f == 1.0 and m.loss_r == 0.0


def test_inversion_rejects_boundary_cases():
    with pytest.raises(ModelError):
        model_from_observables(1e6, 0.5, 0.5)
    with pytest.raises(ModelError, match="indeterminate"):
        model_from_observables(1e6, 2.0, 1.0)


@given(n1=st.floats(1.0, 1e15), g=gem, excess=st.floats(1e-3, 1e4))
def test_inversion_round_trip(n1, g, excess):
    fp = g + excess
    m = model_from_observables(n1, fp, g)
    assert m.n_bar_prime == pytest.approx(n1, rel=1e-12)
    assert m.fano_prime == pytest.approx(fp, rel=1e-12)
    assert m.gemellity == pytest.approx(g, rel=1e-12, abs=0)


@given(n=st.floats(1e-3, 1e15), f=fano, r=st.floats(0.0, 1.0))
def test_derived_invariants(n, f, r):
    d = derive(TwinBeamModel(n, f, r))
    assert d.transmission + r == 1.0
    assert d.n_bar_prime >= 0
    assert d.fano_prime >= r
    assert 0.0 <= d.beta <= 1.0
    assert 0.0 <= d.v_c <= 2 * d.gemellity
    assert abs(d.v_c - 2 * d.gemellity) <= d.gemellity**2 / d.fano_prime + 4e-16


@given(g=st.floats(0.0, 0.4999), extra=st.floats(1e-9, 1e6))
def test_sub_poissonian_below_half_gemellity(g, extra):
    assert conditional_variance(g + extra, g) < 1.0


@settings(max_examples=200)
@given(g=st.floats(0.0, 0.9), fp=st.floats(1.0, 1e4), dg=st.floats(1e-6, 0.09), k=st.floats(1.001, 10))
def test_v_c_monotone(g, fp, dg, k):
    assert conditional_variance(fp, g + dg) > conditional_variance(fp, g)
    if g > 1e-6:
        assert conditional_variance(fp * k, g) > conditional_variance(fp, g)


def test_derive_is_pure():
    m = TwinBeamModel(123456.7, 42.0, 0.3)
    a, b = derive(m), derive(TwinBeamModel(123456.7, 42.0, 0.3))
    assert a == b
    assert math.copysign(1, a.v_c) == math.copysign(1, b.v_c)


def test_band_sigma_units():
    m = TwinBeamModel(1e6, 1.0, 0.0)
    b = SelectionBand.in_sigma(m, 2.0, 0.5)
    assert (b.alpha, b.delta) == (2000.0, 500.0)
    assert b.alpha_sigma(m) == 2.0 and b.delta_sigma(m) == 0.5
    assert (b.lower, b.upper) == (1750.0, 2250.0)
    with pytest.raises(ModelError):
        SelectionBand(0.0, -1.0)


def test_disjoint_bands():
    check_disjoint([SelectionBand(0, 1), SelectionBand(1, 1), SelectionBand(-1, 1)])
    with pytest.raises(ModelError, match="overlap"):
        check_disjoint([SelectionBand(0, 1), SelectionBand(0.9, 1)])


def test_photons_in_one_milliwatt_second():
    # 1 mW at 1064 nm: P * lambda / (h c) photons per second
    n = photons_in_window(1e-3, 1064e-9, 1.0)
    assert n == pytest.approx(1e-3 * 1064e-9 / (6.62607015e-34 * 299792458.0), rel=1e-12)
    assert n == pytest.approx(5.36e15, rel=1e-3)

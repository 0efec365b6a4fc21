import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from heterotic import models
from heterotic.exterior import (
    DimensionError,
    Form,
    LieModel,
    contract,
    d,
    format_model,
    integrate_top,
    parse_model,
    permutation_sign,
    power,
    top_coefficient,
    wedge,
)

MODELS = {
    "hopf": models.hopf_model(),
    "h3": models.h3().model,
    "su2_r3": models.su2_r3().model,
    "torus4": models.torus_model(2),
}

model_names = st.sampled_from(sorted(MODELS))
seeds = st.integers(0, 2**32 - 1)


def random_form(model, degree, seed):
    rng = np.random.default_rng(seed)
    size = model.size(degree)
    return Form(model, degree, rng.standard_normal(size) + 1j * rng.standard_normal(size))


def test_permutation_sign():
    assert permutation_sign([0, 1, 2]) == 1
    assert permutation_sign([1, 0, 2]) == -1
    assert permutation_sign([2, 0, 1]) == 1
    assert permutation_sign([1, 1]) == 0


def test_basis_products_on_hopf():
    m = MODELS["hopf"]
    assert wedge(m.e(4), m.e(2, 3)).allclose(m.e(2, 3, 4))
    assert d(m.e(4, 1)).allclose(-m.e(2, 3, 4))
    assert d(m.e(1)).allclose(m.e(2, 3))
    assert d(m.e(4)).norm_max() == 0
    # e^{41} is stored as -e^{14}
    assert m.e(4, 1).coeffs == {(1, 4): -1}


def test_orientation_and_integration():
    m = models.hopf_model(volume=2.5)
    assert top_coefficient(m.top()) == 1
    assert top_coefficient(m.e(1, 2, 3, 4)) == -1
    assert integrate_top(m.top() * 3) == pytest.approx(7.5)


def test_repeated_labels_vanish():
    m = MODELS["torus4"]
    assert m.e(1, 1).norm_max() == 0


def test_degree_overflow_raises():
    m = MODELS["hopf"]
    with pytest.raises(DimensionError):
        wedge(m.e(1, 2, 3), m.e(4, 1))
    with pytest.raises(DimensionError):
        d(m.top())
    with pytest.raises(DimensionError):
        contract([1, 0, 0, 0], m.one())


def test_top_coefficient_needs_top_degree():
    with pytest.raises(DimensionError):
        top_coefficient(MODELS["hopf"].e(1))


def test_inconsistent_structure_rejected():
    # d(e^{14}) = e^{234} != 0
    with pytest.raises(ValueError, match="d\\^2"):
        LieModel(4, {1: {(2, 3): 1}, 4: {(1, 4): 1}})


def test_parse_round_trip():
    m = MODELS["h3"]
    again = parse_model(format_model(m))
    for k in range(1, m.dim):
        np.testing.assert_allclose(again.dmatrix(k), m.dmatrix(k))
    assert again.orientation == m.orientation


def test_parse_text_format():
    m = parse_model("de^1 = e^{23}\nde^2 = -e^{13}  # comment\nde^3 = 1/2 e^{12}\nde^4 = 0\norientation = 4123\nvolume = 3")
    assert m.dim == 4
    assert m.volume == 3.0
    assert d(m.e(3)).allclose(m.e(1, 2) * 0.5)
    assert d(m.e(2)).allclose(-m.e(1, 3))
    with pytest.raises(ValueError, match="cannot parse"):
        parse_model("de^1 = e^{23} @")


def test_unimodular_catalog():
    for m in MODELS.values():
        assert m.is_unimodular


def test_contraction_is_derivation():
    m = MODELS["hopf"]
    a, b = m.e(1, 2), m.e(3)
    X = [1.0, 0, 0, 0]
    lhs = contract(X, wedge(a, b))
    rhs = wedge(contract(X, a), b) + wedge(a, contract(X, b))
    assert lhs.allclose(rhs)


@given(model_names, seeds, st.integers(0, 4))
def test_d_squared_vanishes(name, seed, k):
    m = MODELS[name]
    k = min(k, m.dim - 2)
    a = random_form(m, k, seed)
    assert d(d(a)).norm_max() < 1e-12 * max(1.0, a.norm_max())


@given(model_names, seeds, st.integers(0, 3), st.integers(0, 3))
def test_graded_commutativity(name, seed, p, q):
    m = MODELS[name]
    q = min(q, m.dim - p)
    a, b = random_form(m, p, seed), random_form(m, q, seed + 1)
    assert wedge(a, b).allclose(wedge(b, a) * (-1) ** (p * q), atol=1e-10)


@given(model_names, seeds, st.integers(0, 3), st.integers(0, 3))
def test_leibniz_rule(name, seed, p, q):
    m = MODELS[name]
    q = min(q, m.dim - p - 1)
    if q < 0:
        return
    a, b = random_form(m, p, seed), random_form(m, q, seed + 7)
    rhs = wedge(d(a), b) + wedge(a, d(b)) * (-1) ** p
    assert d(wedge(a, b)).allclose(rhs, atol=1e-10)


@given(model_names, seeds)
def test_exact_top_forms_integrate_to_zero(name, seed):
    m = MODELS[name]
    beta = random_form(m, m.dim - 1, seed)
    assert abs(integrate_top(d(beta))) < 1e-12 * max(1.0, beta.norm_max())


@given(model_names, seeds)
def test_wedge_is_associative(name, seed):
    m = MODELS[name]
    a, b, c = (random_form(m, 1, seed + k) for k in range(3))
    assert wedge(wedge(a, b), c).allclose(wedge(a, wedge(b, c)), atol=1e-10)


def test_power_convention():
    m = MODELS["torus4"]
    om = m.e(1, 2) + m.e(3, 4)
    assert power(om, 0).allclose(m.one())
    assert power(om, 2).allclose(m.e(1, 2, 3, 4) * 2)

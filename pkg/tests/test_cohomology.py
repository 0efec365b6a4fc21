from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from heterotic import models
from heterotic.cohomology import (
    betti_numbers,
    compute_group,
    cup_integrate,
    morse_novikov,
    partial_map,
    positive_representative,
)
from heterotic.exterior import Form, d
from heterotic.linalg import rank

HOPF_W = [1.0, 1 + 0.4j, 2.0]


@pytest.mark.parametrize("w", HOPF_W)
def test_hopf_aeppli_11_generated_by_e41(w):
    e = models.hopf(w=w, a=1.0)
    group = compute_group(e.model, "aeppli", (1, 1), J=e.J, H=e.hermitian())
    assert group.dim == 1
    rep = group.representatives()[0].vec
    gen = e.model.e(4, 1).vec
    scale = (gen.conj() @ rep) / (gen.conj() @ gen)
    assert abs(scale) > 0.1
    assert np.abs(rep - scale * gen).max() < 1e-12


@pytest.mark.parametrize("w", HOPF_W)
def test_hopf_small_groups(w):
    e = models.hopf(w=w, a=1.0)
    assert compute_group(e.model, "dolbeault", (2, 1), J=e.J).dim == 1
    assert compute_group(e.model, "bottchern", (1, 1), J=e.J).dim == 1
    assert compute_group(e.model, "string_complex", 1, J=e.J).dim == 1
    assert betti_numbers(e.model) == [1, 1, 0, 1, 1]


@pytest.mark.parametrize("w", HOPF_W)
def test_partial_map_is_iso_on_hopf(w):
    e = models.hopf(w=w, a=1.0)
    pm = partial_map(e.J, e.hermitian())
    assert pm.is_isomorphism
    assert pm.rank + pm.kernel_dim == pm.domain_dim == 1


@pytest.mark.parametrize("n", [2, 3])
def test_partial_map_vanishes_on_tori(n):
    e = models.torus(n)
    pm = partial_map(e.J)
    assert pm.is_zero
    assert pm.kernel_dim == pm.domain_dim == compute_group(e.model, "aeppli", (1, 1), J=e.J).dim


def test_torus_dims():
    e = models.torus(2)
    assert compute_group(e.model, "aeppli", (1, 1), J=e.J).dim == 4
    for p in range(3):
        for q in range(3):
            assert compute_group(e.model, "dolbeault", (p, q), J=e.J).dim == comb(2, p) * comb(2, q)
    assert betti_numbers(e.model) == [comb(4, k) for k in range(5)]


def test_heisenberg_betti():
    # H_3 x C: b1 = 5, b2 = 9 for (0,0,0,0,0,12-34)
    assert betti_numbers(models.h3().model) == [1, 5, 9, 10, 9, 5, 1]


def test_morse_novikov_on_hopf():
    e = models.hopf(w=1.0, a=1.0, t=2.0)
    theta = e.hermitian().lee_form()
    ops = morse_novikov(e.model, theta)
    for k in range(len(ops) - 1):
        assert np.abs(ops[k + 1] @ ops[k]).max() < 1e-12
    assert betti_numbers(e.model, theta) == [0, 0, 0, 0, 0]
    assert betti_numbers(e.model, e.model.zero(1)) == betti_numbers(e.model)


def test_morse_novikov_needs_theta():
    with pytest.raises(ValueError, match="theta"):
        compute_group(models.hopf_model(), "morse_novikov", 1)
    with pytest.raises(ValueError, match="unknown"):
        compute_group(models.hopf_model(), "singular", 1)
    with pytest.raises(ValueError, match="complex structure"):
        compute_group(models.hopf_model(), "aeppli", (1, 1))


@given(
    st.sampled_from(["hopf", "h3", "su2_r3", "torus4"]),
    st.sampled_from(["dolbeault", "aeppli", "bottchern"]),
    st.integers(0, 2),
    st.integers(0, 2),
)
def test_harmonic_representatives_are_orthogonal_to_exact(name, which, p, q):
    e = models.load(name)
    group = compute_group(e.model, which, (p, q), J=e.J, H=e.hermitian())
    assert group.orthogonality_defect() < 1e-10
    for rep in group.representatives():
        assert group.is_closed(rep)


@given(st.sampled_from(["hopf", "h3", "su2_r3"]), st.integers(0, 2**32 - 1))
def test_exact_forms_have_zero_class(name, seed):
    e = models.load(name)
    group = compute_group(e.model, "deRham", 2)
    beta = Form(e.model, 1, np.random.default_rng(seed).standard_normal(e.model.dim))
    assert group.class_of(d(beta)).is_zero(1e-10)


def test_class_of_rejects_non_closed(hopf_entry):
    group = compute_group(hopf_entry.model, "deRham", 1)
    with pytest.raises(ValueError, match="not closed"):
        group.coordinates(hopf_entry.model.e(1))


def test_rank_nullity_on_catalog():
    for name in ["hopf", "torus4", "torus6", "h3", "su2_r3"]:
        e = models.load(name)
        pm = partial_map(e.J)
        assert pm.rank + pm.kernel_dim == compute_group(e.model, "aeppli", (1, 1), J=e.J).dim


def test_cup_product_on_hopf(hopf_entry):
    m = hopf_entry.model
    b1 = compute_group(m, "deRham", 1)
    b3 = compute_group(m, "deRham", 3)
    pairing = cup_integrate(b1.class_of(m.e(4)), b3.class_of(m.e(1, 2, 3)))
    assert abs(pairing) == pytest.approx(1.0)
    with pytest.raises(ValueError, match="complementary"):
        cup_integrate(m.e(4), m.e(4))


def test_positive_representatives_on_hopf(hopf_entry):
    group = compute_group(hopf_entry.model, "aeppli", (1, 1), J=hopf_entry.J)
    found, form, best = positive_representative(group.class_of(hopf_entry.model.e(4, 1)), hopf_entry.J)
    assert found and best > 0
    assert hopf_entry.hermitian(omega=form).is_positive
    found, form, _ = positive_representative(group.class_of(-hopf_entry.model.e(4, 1)), hopf_entry.J)
    assert not found and form is None
    found, _, best = positive_representative(group.class_of(hopf_entry.model.e(4, 1) * (0.5 + 0.2j)), hopf_entry.J)
    assert not found and best == -np.inf


def test_rank_helper():
    assert rank(np.diag([1.0, 1e-14, 0.0])) == 1

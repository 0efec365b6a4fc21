import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from heterotic import models
from heterotic.exterior import Form, d, integrate_top, power, top_coefficient
from heterotic.hermitian import (
    ComplexStructure,
    HermitianStructure,
    IntegrabilityError,
    SUnStructure,
    canonical_volume,
)

ENTRIES = {
    "hopf": models.hopf(w=1.3 + 0.4j, a=0.8, t=1.7),
    "h3": models.h3(),
    "su2_r3": models.su2_r3(),
    "torus6": models.torus(3, scales=[1.0, 2.0, 0.5]),
}
names = st.sampled_from(sorted(ENTRIES))
seeds = st.integers(0, 2**32 - 1)


def perturbed(entry, seed, size=0.15):
    """A random positive (1,1)-form near the catalog one."""
    rng = np.random.default_rng(seed)
    P = entry.J.projector(2, 1).real
    omega = entry.omega + Form(entry.model, 2, P @ rng.standard_normal(entry.model.size(2)) * size)
    return entry.hermitian(omega=omega)


@pytest.mark.parametrize("a,x,t", [(0.5, 1.0, 2.0), (1.0, 2.0, 0.5), (2.0, 0.5, 1.0)])
def test_hopf_closed_forms(a, x, t):
    e = models.hopf(w=x, a=a, t=t)
    H = e.hermitian()
    assert H.lee_form().allclose(-e.model.e(4) * (a / t), atol=1e-12)
    assert H.dilaton_function() == pytest.approx(0.5 * np.log(a * t / (4 * x)), abs=1e-12)
    assert top_coefficient(canonical_volume(e.psi)) == pytest.approx(4 * x, abs=1e-12)
    assert integrate_top(power(e.omega, 2)) / 2 == pytest.approx(a * t, abs=1e-12)
    assert H.psi_norm(e.psi) ** 2 == pytest.approx(4 * x / (a * t), rel=1e-12)


def test_hopf_psi_is_n0(hopf_entry):
    J = hopf_entry.J
    assert J.has_type(hopf_entry.psi, 2, 0)
    assert J.has_type(hopf_entry.omega, 1, 1)
    SUnStructure(J, hopf_entry.psi)
    with pytest.raises(ValueError, match="type"):
        SUnStructure(J, hopf_entry.psi.conj())


def test_non_integrable_structure_rejected():
    # shearing the standard pairing on su(2) + R^3 by e^1 -> e^1 + e^5
    m = models.su2_r3().model
    J0 = np.zeros((6, 6))
    for a, b in [(0, 1), (2, 3), (4, 5)]:
        J0[b, a], J0[a, b] = 1, -1
    A = np.eye(6)
    A[0, 4] = 1.0
    with pytest.raises(IntegrabilityError):
        ComplexStructure(m, A @ J0 @ np.linalg.inv(A))
    with pytest.raises(ValueError, match="J\\^2"):
        ComplexStructure(m, np.eye(6))


def test_bad_omega_rejected(hopf_entry):
    m = hopf_entry.model
    with pytest.raises(ValueError, match="positive"):
        HermitianStructure(hopf_entry.J, -hopf_entry.omega)
    with pytest.raises(ValueError, match="type"):
        HermitianStructure(hopf_entry.J, m.e(1, 2))


@pytest.mark.parametrize("name", sorted(ENTRIES))
def test_trace_of_omega(name):
    H = ENTRIES[name].hermitian()
    assert H.trace(H.omega) == pytest.approx(H.n, abs=1e-12)


def test_primitive_11_forms_are_anti_self_dual(torus4_entry):
    H = torus4_entry.hermitian()
    m = torus4_entry.model
    alpha = m.e(1, 2) - m.e(3, 4)
    assert abs(H.trace(alpha)) < 1e-14
    assert H.star(alpha).allclose(-alpha)
    assert H.star(H.omega).allclose(H.omega)


@pytest.mark.parametrize("name", sorted(ENTRIES))
def test_star_squares_to_sign(name):
    H = ENTRIES[name].hermitian()
    m = H.model.dim
    for k in range(m + 1):
        sq = H.star_matrix(m - k) @ H.star_matrix(k)
        np.testing.assert_allclose(sq, (-1) ** (k * (m - k)) * np.eye(H.model.size(k)), atol=1e-12)


@given(names, seeds)
def test_star_defines_inner_product(name, seed):
    H = perturbed(ENTRIES[name], seed)
    rng = np.random.default_rng(seed)
    a = Form(H.model, 2, rng.standard_normal(H.model.size(2)))
    b = Form(H.model, 2, rng.standard_normal(H.model.size(2)))
    lhs = top_coefficient(a.wedge(H.star(b)))
    rhs = H.inner(a, b) * top_coefficient(H.volume_form)
    assert lhs == pytest.approx(rhs, abs=1e-10)


@given(names, seeds)
def test_lee_form_matches_codifferential(name, seed):
    H = perturbed(ENTRIES[name], seed)
    assert H.lee_form().allclose(H.lee_form_from_codifferential(), atol=1e-10)


@given(names, seeds)
def test_lee_form_defining_identity(name, seed):
    H = perturbed(ENTRIES[name], seed)
    om = power(H.omega, H.n - 1)
    assert d(om).allclose(H.lee_form().wedge(om), atol=1e-10)


@given(seeds, st.floats(0, 2 * np.pi))
def test_psi_norm_is_phase_invariant(seed, phase):
    e = ENTRIES["hopf"]
    H = perturbed(e, seed)
    assert H.psi_norm(e.psi * np.exp(1j * phase)) == pytest.approx(H.psi_norm(e.psi), rel=1e-12)


@given(names, seeds)
def test_type_decomposition_reassembles(name, seed):
    e = ENTRIES[name]
    rng = np.random.default_rng(seed)
    a = Form(e.model, 2, rng.standard_normal(e.model.size(2)) + 1j * rng.standard_normal(e.model.size(2)))
    parts = e.J.type_decompose(a)
    total = e.model.zero(2)
    for piece in parts.values():
        total = total + piece
    assert total.allclose(a, atol=1e-12)


@given(names, seeds)
def test_d_splits_into_del_and_dbar(name, seed):
    e = ENTRIES[name]
    rng = np.random.default_rng(seed)
    a = Form(e.model, 1, rng.standard_normal(e.model.dim))
    assert d(a).allclose(e.J.del_(a) + e.J.dbar(a), atol=1e-12)
    # d^c = i (dbar - del)
    assert e.J.dc(a).allclose((e.J.dbar(a) - e.J.del_(a)) * 1j, atol=1e-12)


@given(names, seeds)
def test_lefschetz_split(name, seed):
    H = perturbed(ENTRIES[name], seed)
    rng = np.random.default_rng(seed + 1)
    a = Form(H.model, 2, rng.standard_normal(H.model.size(2)))
    prim = H.primitive_part(a)
    assert abs(H.trace(prim)) < 1e-10
    assert (a - prim).allclose(H.omega * (H.trace(a) / H.n), atol=1e-10)


def test_hopf_bismut_holonomy():
    solution = models.hopf(w=1.0, a=1.0)
    H = solution.hermitian()
    assert H.bismut_check(solution.psi * (1 / H.psi_norm(solution.psi))) < 1e-12
    tilted = models.hopf(w=1 + 0.5j, a=1.0)
    H = tilted.hermitian()
    assert H.bismut_check(tilted.psi * (1 / H.psi_norm(tilted.psi))) > 1e-3


def test_dilaton_needs_compatible_volume(hopf_entry):
    H = hopf_entry.hermitian().with_mu(-hopf_entry.model.top())
    with pytest.raises(ValueError, match="positive multiple"):
        H.dilaton_function()

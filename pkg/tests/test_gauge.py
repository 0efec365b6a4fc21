import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from heterotic import models
from heterotic.cohomology import compute_group
from heterotic.exterior import d
from heterotic.gauge import (
    AlgebraForm,
    Connection,
    GaugeAlgebra,
    HolomorphicBundle,
    QuadratureError,
    ReductionPath,
    c_wedge,
    cc_form,
    csr_defect,
    csr_vector,
    donaldson_R,
    hermite_einstein_residual,
    log_relative,
)
from heterotic.linalg import GramSpace

ALGEBRAS = {"su2": GaugeAlgebra.su(2), "su3": GaugeAlgebra.su(3, weight=0.5), "u2": GaugeAlgebra.u(2)}
BASES = {"h3": models.h3().model, "su2_r3": models.su2_r3().model, "hopf": models.hopf_model()}
seeds = st.integers(0, 2**32 - 1)


def random_connection(alg, model, seed, scale=0.5):
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal((alg.dim, model.size(1))) * scale
    return Connection(AlgebraForm(alg, model, 1, coeffs))


@pytest.mark.parametrize("name", sorted(ALGEBRAS))
def test_pairing_is_invariant(name):
    assert ALGEBRAS[name].invariance_defect() < 1e-12


def test_su_pairing_is_weighted_trace():
    alg = GaugeAlgebra.su(3, weight=2.5)
    rng = np.random.default_rng(0)
    x, y = alg.random_element(rng), alg.random_element(rng)
    assert alg.c(x, y) == pytest.approx(2.5 * np.trace(alg.to_matrix(x) @ alg.to_matrix(y)), abs=1e-12)


def test_bracket_matches_commutator():
    alg = ALGEBRAS["su3"]
    rng = np.random.default_rng(1)
    x, y = alg.random_element(rng), alg.random_element(rng)
    X, Y = alg.to_matrix(x), alg.to_matrix(y)
    np.testing.assert_allclose(alg.to_matrix(alg.bracket(x, y)), X @ Y - Y @ X, atol=1e-12)


def test_non_invariant_pairing_rejected():
    su2 = ALGEBRAS["su2"]
    with pytest.raises(ValueError, match="ad-invariant"):
        GaugeAlgebra(su2.structure, np.diag([1.0, 2.0, 3.0]))


def test_direct_sum_blocks():
    alg = GaugeAlgebra.direct_sum(GaugeAlgebra.su(2, 1.0), GaugeAlgebra.su(2, -0.6))
    assert alg.dim == 6
    assert alg.invariance_defect() < 1e-12
    np.testing.assert_allclose(alg.cform[3:, 3:], -0.6 * GaugeAlgebra.su(2).cform)


@given(st.sampled_from(sorted(ALGEBRAS)), st.sampled_from(sorted(BASES)), seeds)
def test_bianchi_identity(alg_name, base, seed):
    conn = random_connection(ALGEBRAS[alg_name], BASES[base], seed)
    assert conn.bianchi_defect() < 1e-12


@given(st.sampled_from(sorted(ALGEBRAS)), st.sampled_from(["h3", "su2_r3"]), seeds)
def test_chern_simons_transgression(alg_name, base, seed):
    conn = random_connection(ALGEBRAS[alg_name], BASES[base], seed)
    assert d(conn.chern_simons()).allclose(cc_form(conn), atol=1e-11)


def test_flat_abelian_curvature():
    m = BASES["h3"]
    alg = GaugeAlgebra.abelian(2)
    theta = AlgebraForm.from_forms(alg, [m.e(1), m.e(2)])
    # d e^1 = d e^2 = 0 on the Heisenberg factor
    assert np.abs(Connection(theta).curvature.coeffs).max() == 0


def test_bundle_must_be_integrable(hopf_entry):
    alg = ALGEBRAS["su2"]
    J, m = hopf_entry.J, hopf_entry.model
    _, eta2 = models.hopf_eta(m, 1.0)
    # integrability forces the diagonal coefficient -w/(4x); +1/4 is the wrong sign
    A = AlgebraForm.tensor(alg, alg.from_matrix(0.25 * models.H_DIAG), models.hopf_eta(m, 1.0)[0].conj())
    A = A + AlgebraForm.tensor(alg, alg.from_matrix(models.E_UPPER), eta2.conj())
    with pytest.raises(ValueError, match="integrable"):
        HolomorphicBundle(alg, J, A)
    with pytest.raises(ValueError, match="type"):
        HolomorphicBundle(alg, J, AlgebraForm.tensor(alg, alg.from_matrix(models.E_UPPER), eta2))


def test_chern_connection_curvature_is_11(hopf_entry):
    bundle = models.hopf_su2_bundle(hopf_entry)
    F = bundle.chern_connection().curvature
    assert np.abs(F.component(hopf_entry.J, 2, 0).coeffs).max() < 1e-12
    assert np.abs(F.component(hopf_entry.J, 0, 2).coeffs).max() < 1e-12


def test_flat_torus_bundle_is_hermite_einstein(torus4_entry):
    conn = models.torus_flat_bundle(torus4_entry).chern_connection()
    assert hermite_einstein_residual(conn, torus4_entry.hermitian()) < 1e-14


def test_log_relative_round_trip():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    h0 = X @ X.conj().T + np.eye(3)
    Y = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    h1 = Y @ Y.conj().T + np.eye(3)
    from scipy.linalg import expm

    u = log_relative(h0, h1)
    np.testing.assert_allclose(h0 @ expm(u), h1, atol=1e-10)
    with pytest.raises(ValueError, match="positive"):
        log_relative(h0, -h1)


def test_path_generator_must_be_self_adjoint():
    alg = ALGEBRAS["su2"]
    with pytest.raises(ValueError, match="self-adjoint"):
        ReductionPath(alg, np.array([1.0, 0, 0], dtype=complex))


def test_quadrature_convergence_is_checked(hopf_entry):
    bundle = models.hopf_su2_bundle(hopf_entry)
    path = ReductionPath(bundle.algebra, 1j * np.array([6.0, -4.0, 5.0]), order=2)
    with pytest.raises(QuadratureError):
        donaldson_R(path, bundle)


def test_donaldson_R_vanishes_on_constant_path(hopf_entry):
    bundle = models.hopf_su2_bundle(hopf_entry)
    path = ReductionPath(bundle.algebra, np.zeros(3, dtype=complex))
    assert donaldson_R(path, bundle).norm_max() == 0


def _transgression_defect(bundle, path):
    J = bundle.J
    R = donaldson_R(path, bundle)
    F0 = cc_form(bundle.chern_connection(path.base_ad_hinv))
    F1 = cc_form(bundle.chern_connection_at(path))
    return (J.ddc(R) - (F1 - F0)).norm_max(), (F1 - F0).norm_max()


@given(seeds)
def test_ddc_R_transgression_on_h3(seed):
    # c(F ^ F) is a nonzero 4-form here, so the identity has content
    e = models.h3()
    m = e.model
    alg = GaugeAlgebra.su(3)
    E12 = np.zeros((3, 3), complex)
    E12[0, 1] = 1
    E13 = np.zeros((3, 3), complex)
    E13[0, 2] = 1
    b1 = (m.e(5) + m.e(6) * 1j).conj()
    b3 = (m.e(3) + m.e(4) * 1j).conj()
    A = AlgebraForm.tensor(alg, alg.from_matrix(E12), b1 * 0.8 + b3 * 0.3)
    A = A + AlgebraForm.tensor(alg, alg.from_matrix(E13), b3 * (0.5 - 0.4j) + b1 * 0.2)
    bundle = HolomorphicBundle(alg, e.J, A)
    u = alg.random_element(np.random.default_rng(seed), hermitian=True) * 0.5
    defect, size = _transgression_defect(bundle, ReductionPath(alg, u))
    assert defect < 1e-8
    assert size > 1e-4


def test_ddc_R_transgression_on_hopf(hopf_entry, rng):
    bundle = models.hopf_su2_bundle(hopf_entry)
    for _ in range(5):
        path = ReductionPath(bundle.algebra, bundle.algebra.random_element(rng, hermitian=True))
        assert _transgression_defect(bundle, path)[0] < 1e-8


def test_cocycle_modulo_aeppli_image(hopf_entry, rng):
    J, H = hopf_entry.J, hopf_entry.hermitian()
    bundle = models.hopf_su2_bundle(hopf_entry)
    alg = bundle.algebra
    group = compute_group(hopf_entry.model, "aeppli", (1, 1), J=J, H=H)
    space = GramSpace(group.gram)
    for _ in range(5):
        u1, u2 = alg.random_element(rng, hermitian=True), alg.random_element(rng, hermitian=True)
        R10 = donaldson_R(ReductionPath(alg, u1), bundle)
        R20 = donaldson_R(ReductionPath(alg, u2), bundle)
        R21 = donaldson_R(ReductionPath.between(alg, [u1], [u2]), bundle)
        rest = space.project_off((R20 - R21 - R10).vec, group.image)
        assert space.norm(rest) < 1e-8


def test_csr_defect_on_hopf(hopf_entry, rng):
    bundle = models.hopf_su2_bundle(hopf_entry)
    H = hopf_entry.hermitian()
    for _ in range(5):
        path = ReductionPath(bundle.algebra, bundle.algebra.random_element(rng, hermitian=True))
        assert csr_defect(path, bundle, H) < 1e-8
        assert csr_vector(path, bundle).degree == 3


def test_cc_form_of_commuting_torus_data_vanishes(torus6_entry):
    F = models.torus_su2_bundle(torus6_entry).chern_connection().curvature
    assert np.abs(F.coeffs).max() > 0.1
    assert c_wedge(F, F).norm_max() < 1e-14

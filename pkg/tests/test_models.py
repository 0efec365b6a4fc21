import numpy as np
import pytest

from heterotic import models, systems
from heterotic.cohomology import compute_group, cup_integrate
from heterotic.exterior import d


@pytest.mark.parametrize("name", sorted(models.CATALOG))
def test_catalog_entries_are_consistent(name):
    e = models.load(name)
    assert e.model.is_unimodular
    assert e.J.integrability_defect() < 1e-12
    H = e.hermitian()
    assert H.is_positive
    assert e.J.has_type(e.psi, e.n, 0)
    assert e.name == name


def test_unknown_model():
    with pytest.raises(KeyError, match="unknown model"):
        models.load("k3")


@pytest.mark.parametrize("kwargs", [{"w": -1.0}, {"a": 0.0}, {"t": -1.0}, {"w": 1j}])
def test_hopf_parameter_validation(kwargs):
    with pytest.raises(ValueError):
        models.hopf(**kwargs)


def test_hopf_default_t_solves_twisted_system():
    e = models.hopf(w=2.0, a=3.0)
    assert e.params["t"] == pytest.approx(1.5)
    H = e.hermitian()
    psi = e.psi * (1 / H.psi_norm(e.psi))
    assert systems.twisted_hs_residual(psi, H).passed


def test_hopf_psi_derivative():
    # d psi_w = -w e^4 ^ psi_w
    for w in (1.0, 1.5 + 0.4j):
        e = models.hopf(w=w, a=1.0)
        assert d(e.psi).allclose(-e.model.e(4).wedge(e.psi) * w, atol=1e-14)


def test_su2_r3_solves_twisted_system():
    e = models.su2_r3(w=1.5, a=0.8)
    H = e.hermitian()
    psi = e.psi * (1 / H.psi_norm(e.psi))
    assert systems.twisted_hs_residual(psi, H).passed
    assert e.extras["rho_generator"].shape == (2, 2)


def test_torus_scales():
    e = models.torus(3, scales=[1.0, 2.0, 3.0])
    assert e.hermitian().dilaton_function() == pytest.approx(0.5 * np.log(6.0 / 8.0))


def test_lee_class_is_shared_by_hopf_solutions():
    first = models.hopf(w=1.0, a=1.0)
    second = models.hopf(w=1.0, a=2.5)
    group = compute_group(first.model, "deRham", 1)
    c1 = group.class_of(first.hermitian().lee_form())
    c2 = group.class_of(second.hermitian().lee_form())
    assert np.abs(c1.coeffs - c2.coeffs).max() < 1e-10


def test_lee_class_paired_with_torsion_class():
    a, x, V = 1.7, 1.3, 2.0
    e = models.hopf(w=x, a=a, volume=V)
    m = e.model
    ell = m.e(4) * (-x)
    H_class = m.e(1, 2, 3) * (-a / x)
    assert abs(cup_integrate(ell, H_class)) == pytest.approx(a * V, rel=1e-12)
    assert cup_integrate(m.zero(1), H_class) == 0


def test_bundles_are_integrable(hopf_entry, torus6_entry):
    for bundle in (
        models.hopf_su2_bundle(hopf_entry),
        models.torus_su2_bundle(torus6_entry),
        models.torus_flat_bundle(torus6_entry),
    ):
        assert bundle.integrability < 1e-12


def test_paired_bundle_standard_embedding(torus6_entry):
    et = models.torus_eta(torus6_entry)
    bundle = models.paired_bundle(torus6_entry, [(models.E_UPPER, et[0])], (1.0, -1.0))
    assert bundle.algebra.dim == 6
    from heterotic.gauge import cc_form

    assert cc_form(bundle.chern_connection()).norm_max() < 1e-14

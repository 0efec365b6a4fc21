import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from heterotic import linearization, models
from heterotic.algebroid import (
    MetricPair,
    StringClassRep,
    aeppli_defect,
    class_equivalent,
    dbar_kernel_section,
    dbar_kernel_section_direct,
    exact_algebroid_positive,
    hopf_algebroid_positive,
    kernel_section,
    metric_from_parameters,
    twist,
    unitary_frame,
)
from heterotic.gauge import Connection, GaugeAlgebra, HolomorphicBundle

W = 1 + 0.3j


@pytest.fixture(scope="module")
def tilted():
    e = models.hopf(w=W, a=1.0)
    base = MetricPair(e.omega, models.hopf_su2_bundle(e))
    return e, base


def test_base_pair_solves_anomaly(tilted):
    _, base = tilted
    assert base.anomaly_defect() < 1e-12
    assert base.string_class().defect < 1e-12


def test_string_class_rejects_bad_data(hopf_entry):
    m, J = hopf_entry.model, hopf_entry.J
    conn = Connection.trivial(GaugeAlgebra.su(2), m)
    with pytest.raises(ValueError, match="3-form"):
        StringClassRep(J, m.e(1, 2), conn)
    # e^{123} is closed but has a (1,2) part
    with pytest.raises(ValueError, match="outside"):
        StringClassRep(J, m.e(1, 2, 3), conn)


@given(st.integers(0, 2**32 - 1))
def test_parametrised_pairs_stay_in_class(seed):
    e = models.hopf(w=W, a=1.0)
    base = MetricPair(e.omega, models.hopf_su2_bundle(e))
    rng = np.random.default_rng(seed)
    xi = e.model.form(1, rng.standard_normal(4) * 0.1)
    pair = metric_from_parameters(base, xi, rng.standard_normal(3) * 0.5)
    ok, cert = class_equivalent(base.string_class(), pair.string_class())
    assert ok and cert.residual < 1e-10
    assert aeppli_defect(pair, base) < 1e-10
    assert pair.anomaly_defect() < 1e-10
    chained = metric_from_parameters(pair, xi * 0.5, rng.standard_normal(3) * 0.3)
    assert aeppli_defect(chained, base) < 1e-10


def test_metric_from_parameters_rejects_complex_xi(tilted):
    e, base = tilted
    with pytest.raises(ValueError, match="real"):
        metric_from_parameters(base, e.model.e(1) * 1j)


def test_metric_from_parameters_shifts_by_ddc_part(tilted):
    e, base = tilted
    xi = e.model.e(2) * 0.2
    pair = metric_from_parameters(base, xi)
    from heterotic.exterior import d

    assert (pair.omega - base.omega).allclose((d(xi) + e.J.act(d(xi))).real, atol=1e-14)
    assert pair.h == base.h


def test_unitary_frame_skews_generators(tilted):
    _, base = tilted
    alg = base.bundle.algebra
    pair = metric_from_parameters(base, base.J.model.zero(1), np.array([0.4, -0.2, 0.3]))
    U = unitary_frame(alg, pair.h)
    from heterotic.gauge import ReductionPath

    u = 1j * (U @ np.array([0.1, 0.5, -0.3]))
    assert ReductionPath(alg, u, pair.h).reality_defect() < 1e-12


def test_twist_changes_class(tilted):
    e, base = tilted
    r0 = base.string_class()
    assert not class_equivalent(r0, twist(r0, e.omega * 3))[0]
    assert class_equivalent(r0, twist(r0, e.model.zero(2)))[0]
    with pytest.raises(ValueError, match="type"):
        twist(r0, e.model.e(1, 2))


@pytest.mark.parametrize("a,expected", [(-2.0, False), (-0.5, False), (0.5, True), (2.0, True), (1 + 1j, False)])
def test_hopf_positivity(a, expected):
    assert hopf_algebroid_positive(W, a) is expected


def test_exact_positivity_returns_witness(hopf_entry):
    found, omega, best = exact_algebroid_positive(hopf_entry.J, hopf_entry.model.e(4, 1))
    assert found and best > 0
    assert hopf_entry.hermitian(omega=omega).is_positive


def test_kernel_section_components(hopf_entry):
    s = np.array([0.4, -0.8])
    alg, form = kernel_section(hopf_entry.model.e(2), s, hopf_entry.J)
    np.testing.assert_allclose(alg, -s / 4)
    assert form.allclose(hopf_entry.J.component(hopf_entry.model.e(2), 1, 0) * 2)


@given(st.integers(0, 2**32 - 1))
def test_kernel_section_two_evaluations_agree(seed):
    e = models.hopf(w=W, a=1.0)
    base = MetricPair(e.omega, models.hopf_su2_bundle(e))
    rng = np.random.default_rng(seed)
    r = base.string_class()
    xi, s = e.model.form(1, rng.standard_normal(4)), rng.standard_normal(3)
    a1, f1 = dbar_kernel_section(r, s, xi)
    a2, f2 = dbar_kernel_section_direct(r, s, xi)
    assert a1.allclose(a2, atol=1e-12)
    assert f1.allclose(f2, atol=1e-12)


def test_holomorphic_sections_lie_in_linearization_kernel(torus4_entry):
    pair = MetricPair(torus4_entry.omega, models.torus_flat_bundle(torus4_entry))
    lin = linearization.assemble_L(pair)
    r = pair.string_class()
    xi = torus4_entry.model.form(1, [0.3, -0.2, 0.5, 0.1])
    # the diagonal generator commutes with the flat data; an off-diagonal one does not
    cartan, other = np.array([0, 0, 0.7]), np.array([0.7, 0, 0])
    a, f = dbar_kernel_section(r, cartan, xi)
    assert np.abs(a.coeffs).max() < 1e-14 and f.norm_max() < 1e-14
    assert np.abs(lin.L.matrix @ np.concatenate([xi.vec, cartan])).max() < 1e-12
    a, _ = dbar_kernel_section(r, other, xi)
    assert np.abs(a.coeffs).max() > 0.1
    assert np.abs(lin.L.matrix @ np.concatenate([xi.vec, other])).max() > 0.1


def test_positivity_flag(hopf_entry):
    bundle = HolomorphicBundle.trivial(GaugeAlgebra.abelian(1), hopf_entry.J)
    assert MetricPair(hopf_entry.omega, bundle).is_positive
    assert not MetricPair(-hopf_entry.omega, bundle).is_positive

"""String classes ``(H, theta)``, their equivalence, twists and metrics on them."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .cohomology import (
    CohomologyGroup,
    maximize_min_eigenvalue,
    partial_map,
    real_11_directions,
)
from .exterior import Form, d
from .gauge import (
    AlgebraForm,
    Connection,
    GaugeAlgebra,
    HolomorphicBundle,
    ReductionPath,
    bracket_wedge,
    c_pair,
    c_wedge,
    cc_form,
    chern_simons,
    donaldson_R,
)
from .hermitian import ComplexStructure, HermitianStructure
from .linalg import column_space

DEFECT_TOL = 1e-8


class StringClassRep:
    """A pair ``(H, theta)`` with ``H`` of type (3,0)+(2,1) and ``dH + c(F ^ F) = 0``."""

    def __init__(self, J: ComplexStructure, H: Form, theta: Connection, tol: float = DEFECT_TOL):
        if H.degree != 3:
            raise ValueError("H must be a 3-form")
        self.J = J
        self.H = H
        self.theta = theta
        stray = H - J.component(H, 3, 0) - J.component(H, 2, 1)
        if stray.norm_max() > tol:
            raise ValueError(f"H has components outside (3,0)+(2,1) (size {stray.norm_max():.2e})")
        self.defect = self.bianchi_defect()
        if self.defect > tol:
            raise ValueError(f"dH + c(F ^ F) = {self.defect:.2e} does not vanish")

    def bianchi_defect(self) -> float:
        if self.J.model.dim < 4:
            return 0.0
        return float((d(self.H) + cc_form(self.theta)).norm_max())

    def __repr__(self) -> str:
        return f"StringClassRep(defect={self.defect:.1e})"


def exact_2_0_image(J: ComplexStructure) -> np.ndarray:
    """Columns spanning ``d(Omega^{2,0})`` among 3-forms."""
    P20 = J.projector(2, 2)
    basis = column_space(P20) if np.abs(P20).max() > 0 else np.zeros((P20.shape[0], 0))
    return J.model.dmatrix(2) @ basis, basis


@dataclass
class EquivalenceCertificate:
    equivalent: bool
    residual: float
    B: Form


def class_equivalent(r1: StringClassRep, r2: StringClassRep, tol: float = DEFECT_TOL) -> tuple[bool, EquivalenceCertificate]:
    """Test ``H2 = H1 + CS(t1) - CS(t2) - dc(t1 ^ t2) + dB`` for some ``B`` of type (2,0).

    Gauge transformations are restricted to the identity.  ``B`` is the
    minimal-norm least-squares solution.
    """
    J = r1.J
    t1, t2 = r1.theta.theta, r2.theta.theta
    target = r2.H - r1.H - chern_simons(t1) + chern_simons(t2) + d(c_wedge(t1, t2))
    image, basis = exact_2_0_image(J)
    if image.shape[1]:
        coef, *_ = np.linalg.lstsq(image, target.vec, rcond=None)
        rest = target.vec - image @ coef
        B = Form(J.model, 2, basis @ coef)
    else:
        rest = target.vec
        B = J.model.zero(2)
    residual = float(np.linalg.norm(rest))
    ok = residual <= tol * max(1.0, float(np.linalg.norm(target.vec)))
    return ok, EquivalenceCertificate(ok, residual, B)


def twist(r: StringClassRep, beta: Form, tol: float = 1e-10) -> StringClassRep:
    """The twist ``(H + 2i del beta, theta)`` by a dd^c-closed (1,1)-form."""
    J = r.J
    if not J.has_type(beta, 1, 1, tol):
        raise ValueError("beta must have type (1,1)")
    if J.model.dim >= 4 and J.ddc(beta).norm_max() > tol:
        raise ValueError(f"beta is not dd^c-closed (|dd^c beta| = {J.ddc(beta).norm_max():.2e})")
    return StringClassRep(J, r.H + J.del_(beta) * 2j, r.theta)


def is_real_twist_preserving(beta: Form) -> bool:
    return bool(np.abs(beta.vec.imag).max(initial=0.0) <= 1e-12)


# ------------------------------------------------------------------ metrics
@dataclass
class MetricPair:
    """A pair ``(omega, h)`` with ``h = e^{g_1} ... e^{g_k}`` over a fixed holomorphic bundle."""

    omega: Form
    bundle: HolomorphicBundle
    h: list[np.ndarray] = field(default_factory=list)
    xi: Form | None = None
    s: np.ndarray | None = None

    @property
    def J(self) -> ComplexStructure:
        return self.bundle.J

    @property
    def ad_hinv(self) -> np.ndarray:
        return ReductionPath(self.bundle.algebra, np.zeros(self.bundle.algebra.dim), self.h).base_ad_hinv

    @property
    def connection(self) -> Connection:
        return self.bundle.chern_connection(self.ad_hinv)

    @property
    def curvature(self) -> AlgebraForm:
        return self.connection.curvature

    @property
    def is_positive(self) -> bool:
        H = HermitianStructure(self.J, self.omega, check=False)
        return bool(np.linalg.eigvalsh(H.metric).min() > 0)

    def hermitian(self, mu: Form | None = None) -> HermitianStructure:
        return HermitianStructure(self.J, self.omega, mu, check=False)

    def string_class(self) -> StringClassRep:
        return StringClassRep(self.J, self.J.del_(self.omega) * 2j, self.connection)

    def anomaly_defect(self) -> float:
        """``|dd^c omega - c(F_h ^ F_h)|``."""
        if self.J.model.dim < 4:
            return 0.0
        return float((self.J.ddc(self.omega) - cc_form(self.connection)).norm_max())


def trivial_bundle(J: ComplexStructure, algebra: GaugeAlgebra | None = None) -> HolomorphicBundle:
    algebra = GaugeAlgebra.abelian(1) if algebra is None else algebra
    return HolomorphicBundle.trivial(algebra, J)


def unitary_frame(algebra: GaugeAlgebra, h: list[np.ndarray]) -> np.ndarray:
    """``Ad(h^{-1/2})``: carries compact elements to ``h``-skew ones."""
    if not h:
        return np.eye(algebra.dim, dtype=complex)
    if len(h) == 1:
        return expm(-0.5 * algebra.ad(h[0]))
    from .gauge import _metric_matrix

    lam, V = np.linalg.eigh(_metric_matrix(algebra, h))
    root = V @ np.diag(np.sqrt(lam)) @ V.conj().T
    return algebra.Ad(np.linalg.inv(root))


def metric_from_parameters(base: MetricPair, xi: Form, s: np.ndarray | None = None, order: int | None = None) -> MetricPair:
    """``h = e^{is} h0`` and ``omega = omega0 + (d xi + J d xi) + R(h, h0)``.

    ``xi`` is a real 1-form.  ``s`` holds real coordinates in the compact
    basis, read in an ``h0``-unitary frame (so ``s`` is ``h0``-skew after
    :func:`unitary_frame`).  Positivity of the result is reported by
    ``is_positive``.
    """
    J = base.J
    algebra = base.bundle.algebra
    s = np.zeros(algebra.dim) if s is None else np.asarray(s, dtype=complex)
    if np.abs(xi.vec.imag).max(initial=0.0) > 1e-12:
        raise ValueError("xi must be real")
    dxi = d(xi)
    omega = base.omega + dxi + J.act(dxi)
    h = list(base.h)
    if np.abs(s).max(initial=0.0) > 0:
        u = 1j * (unitary_frame(algebra, base.h) @ s)
        path = ReductionPath(algebra, u, list(base.h), **({} if order is None else {"order": order}))
        omega = omega + donaldson_R(path, base.bundle, check=False)
        h = path.end_base()
    return MetricPair(omega.real, base.bundle, h, xi, s)


def aeppli_defect(pair: MetricPair, base: MetricPair, group: CohomologyGroup | None = None) -> float:
    """Size of ``[omega - omega0 - R(h, h0)]`` in ``H^{1,1}_A``."""
    from .cohomology import aeppli_class_of

    algebra = base.bundle.algebra
    same = len(pair.h) == len(base.h) and all(np.array_equal(a, b) for a, b in zip(pair.h, base.h))
    if same:
        path = ReductionPath(algebra, np.zeros(algebra.dim), list(base.h))
    else:
        path = ReductionPath.between(algebra, base.h, pair.h)
    cls = aeppli_class_of(pair.omega, path, base.omega, base.bundle, group=group)
    return cls.norm()


# ------------------------------------------------------- positivity (exact)
def exact_algebroid_positive(J: ComplexStructure, tau: Form, restarts: int = 4, seed: int = 0) -> tuple[bool, Form | None, float]:
    """Positivity of the exact algebroid ``(2i del tau, 0)``.

    Searches a positive real (1,1)-form ``omega`` with ``[2i del omega] =
    [2i del tau]``, i.e. ``omega - tau`` in the kernel of the partial map
    modulo ``Im(del + dbar)``.  Only invariant forms are tried.
    """
    model = J.model
    if np.abs(tau.vec.imag).max(initial=0.0) > 1e-12:
        return False, None, -np.inf
    pmap = partial_map(J)
    group = pmap.aeppli
    kernel_forms = np.array([k.vec.real for k in pmap.kernel()]).T if pmap.kernel_dim else np.zeros((model.size(2), 0))
    image = real_11_directions(J, group.image)
    free = np.hstack([kernel_forms, image]) if image.size else kernel_forms
    best, vec = maximize_min_eigenvalue(J, tau.vec.real, free, restarts, seed)
    found = bool(best > 1e-12)
    return found, (Form(model, 2, vec) if found else None), best


# ------------------------------------------------------------ kernel sections
def kernel_section(xi: Form, s: np.ndarray, J: ComplexStructure) -> tuple[np.ndarray, Form]:
    """``(xi, s) -> 2 xi^{1,0} - s/4`` as (algebra part, form part)."""
    return -np.asarray(s, dtype=complex) / 4, J.component(xi, 1, 0) * 2


def dbar_kernel_section(r: StringClassRep, s: np.ndarray, xi: Form) -> tuple[AlgebraForm, Form]:
    """``dbar_Q`` of the kernel section built from ``(xi, s)``.

    Returns ``(dbar r, dbar xi' + 2 c(F^{1,1}, r))`` where ``r = -s/4`` and
    ``xi' = 2 xi^{1,0}``; the first entry uses ``dbar^theta`` on the
    constant section ``r``.
    """
    J = r.J
    theta = r.theta.theta
    alg, form = kernel_section(xi, s, J)
    const = AlgebraForm.tensor(theta.algebra, alg, J.model.one())
    dbar_r = bracket_wedge(theta.component(J, 0, 1), const)
    F11 = r.theta.curvature.component(J, 1, 1)
    return dbar_r, J.dbar(form) + c_pair(alg, F11) * 2


def dbar_kernel_section_direct(r: StringClassRep, s: np.ndarray, xi: Form) -> tuple[AlgebraForm, Form]:
    """Same as :func:`dbar_kernel_section` via full ``d`` and type projection."""
    J = r.J
    theta = r.theta.theta
    alg, form = kernel_section(xi, s, J)
    const = AlgebraForm.tensor(theta.algebra, alg, J.model.one())
    cov = bracket_wedge(theta, const)  # d of a constant section vanishes
    dform = d(form)
    F = r.theta.curvature
    extra = c_pair(alg, F).vec
    return cov.component(J, 0, 1), Form(J.model, 2, J.projector(2, 1) @ (dform.vec + 2 * extra))


def hopf_partial_generator(J: ComplexStructure, model) -> Form:
    """``2i del e^{41}``."""
    return J.del_(model.e(4, 1)) * 2j


def hopf_algebroid_positive(w: complex, a: complex) -> bool:
    """Positivity of ``Q_{w,a}``, the exact algebroid with class ``a [2i del e^{41}]``."""
    from .models import hopf_complex_structure, hopf_model

    model = hopf_model()
    J = hopf_complex_structure(model, w)
    a = complex(a)
    if abs(a.imag) > 1e-14:
        return False
    return exact_algebroid_positive(J, model.e(4, 1) * a.real)[0]

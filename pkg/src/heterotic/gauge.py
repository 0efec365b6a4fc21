"""Invariant connections on trivialised bundles over a LieModel.

Algebra-valued forms are stored as coefficient arrays ``(dim g, N_k)`` against
a real basis of the compact form (anti-Hermitian matrices when a matrix
representation is available).  A holomorphic structure is a constant
(0,1)-form ``A``; bundle metrics are reached from the identity by
reductions ``h = h0 e^u`` with ``u`` self-adjoint for ``h0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .exterior import DimensionError, Form, LieModel, power
from .hermitian import ComplexStructure, HermitianStructure
from .linalg import GramSpace, column_space

QUADRATURE_ORDER = 64


class QuadratureError(RuntimeError):
    pass


# ---------------------------------------------------------------- algebras
def _su_basis(n: int) -> list[np.ndarray]:
    """Anti-Hermitian traceless basis with ``tr(e_a e_b) = -delta_ab``."""
    out = []
    for j in range(n):
        for k in range(j + 1, n):
            m = np.zeros((n, n), dtype=complex)
            m[j, k], m[k, j] = 1, -1
            out.append(m / np.sqrt(2))
            m = np.zeros((n, n), dtype=complex)
            m[j, k], m[k, j] = 1j, 1j
            out.append(m / np.sqrt(2))
    for l in range(1, n):
        diag = np.zeros(n)
        diag[:l] = 1
        diag[l] = -l
        out.append(1j * np.diag(diag) / np.sqrt(l * (l + 1)))
    return out


class GaugeAlgebra:
    """A quadratic Lie algebra ``(g, c)`` with a distinguished compact basis.

    ``structure[a, b, k]`` gives ``[e_a, e_b] = sum_k structure[a, b, k] e_k``
    and ``cform[a, b] = c(e_a, e_b)``.  ``matrices`` (optional) is a faithful
    anti-Hermitian representation of the basis, needed for paths between two
    arbitrary bundle metrics.
    """

    def __init__(
        self,
        structure: np.ndarray,
        cform: np.ndarray,
        matrices: np.ndarray | None = None,
        name: str = "g",
    ):
        structure = np.asarray(structure, dtype=float)
        cform = np.asarray(cform, dtype=float)
        self.dim = structure.shape[0]
        if structure.shape != (self.dim,) * 3 or cform.shape != (self.dim, self.dim):
            raise ValueError("structure constants and c must match the algebra dimension")
        if np.abs(cform - cform.T).max() > 1e-12:
            raise ValueError("c must be symmetric")
        self.structure = structure
        self.cform = cform
        self.matrices = None if matrices is None else np.asarray(matrices, dtype=complex)
        self.name = name
        defect = self.invariance_defect()
        if defect > 1e-12:
            raise ValueError(f"c is not ad-invariant (defect {defect:.2e})")

    def __repr__(self) -> str:
        return f"GaugeAlgebra({self.name!r}, dim={self.dim})"

    @classmethod
    def from_matrices(cls, matrices: Sequence[np.ndarray], cform: np.ndarray, name: str = "g") -> "GaugeAlgebra":
        mats = np.asarray(matrices, dtype=complex)
        flat = mats.reshape(len(mats), -1).T
        structure = np.zeros((len(mats),) * 3)
        for a in range(len(mats)):
            for b in range(len(mats)):
                comm = mats[a] @ mats[b] - mats[b] @ mats[a]
                coef, *_ = np.linalg.lstsq(flat, comm.ravel(), rcond=None)
                if np.abs(flat @ coef - comm.ravel()).max() > 1e-12:
                    raise ValueError("matrices do not span a Lie algebra")
                structure[a, b] = coef.real
        return cls(structure, cform, mats, name)

    @classmethod
    def su(cls, n: int, weight: float = 1.0) -> "GaugeAlgebra":
        """``su(n)`` with ``c = weight * tr``."""
        mats = _su_basis(n)
        cform = weight * np.array([[np.trace(x @ y).real for y in mats] for x in mats])
        return cls.from_matrices(mats, cform, f"su{n}")

    @classmethod
    def u(cls, n: int, weight: float = 1.0) -> "GaugeAlgebra":
        """``u(n)`` with ``c = weight * tr``."""
        mats = _su_basis(n) + [1j * np.eye(n) / np.sqrt(n)]
        cform = weight * np.array([[np.trace(x @ y).real for y in mats] for x in mats])
        return cls.from_matrices(mats, cform, f"u{n}")

    @classmethod
    def abelian(cls, dim: int, cform: np.ndarray | None = None) -> "GaugeAlgebra":
        cform = -np.eye(dim) if cform is None else cform
        mats = np.array([1j * np.diag(np.eye(dim)[a]) for a in range(dim)])
        return cls(np.zeros((dim,) * 3), cform, mats, f"u1^{dim}")

    @classmethod
    def direct_sum(cls, *parts: "GaugeAlgebra") -> "GaugeAlgebra":
        dim = sum(p.dim for p in parts)
        structure = np.zeros((dim,) * 3)
        cform = np.zeros((dim, dim))
        have_mats = all(p.matrices is not None for p in parts)
        rank = sum(p.matrices.shape[1] for p in parts) if have_mats else 0
        mats = np.zeros((dim, rank, rank), dtype=complex) if have_mats else None
        off = roff = 0
        for p in parts:
            sl = slice(off, off + p.dim)
            structure[sl, sl, sl] = p.structure
            cform[sl, sl] = p.cform
            if have_mats:
                r = p.matrices.shape[1]
                mats[sl, roff:roff + r, roff:roff + r] = p.matrices
                roff += r
            off += p.dim
        return cls(structure, cform, mats, "+".join(p.name for p in parts))

    # ---------------------------------------------------------- operations
    def ad(self, x: np.ndarray) -> np.ndarray:
        """Matrix of ``y -> [x, y]`` on coefficient vectors."""
        return np.einsum("a,abk->kb", np.asarray(x), self.structure)

    def bracket(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.einsum("a,b,abk->k", x, y, self.structure)

    def c(self, x: np.ndarray, y: np.ndarray) -> complex:
        return complex(x @ self.cform @ y)

    def adjoint(self, x: np.ndarray) -> np.ndarray:
        """Coefficients of the Hermitian adjoint ``x^dagger``."""
        return -np.conj(x)

    def invariance_defect(self) -> float:
        # c([a,b],d) + c(b,[a,d]) for all basis triples
        t = np.einsum("abk,kd->abd", self.structure, self.cform)
        return float(np.abs(t + np.transpose(t, (0, 2, 1))).max()) if self.dim else 0.0

    def is_real_on_compact(self) -> bool:
        return bool(np.isrealobj(self.cform) or np.abs(np.imag(self.cform)).max() == 0)

    def to_matrix(self, x: np.ndarray) -> np.ndarray:
        self._need_matrices()
        return np.einsum("a,aij->ij", x, self.matrices)

    def from_matrix(self, m: np.ndarray) -> np.ndarray:
        self._need_matrices()
        flat = self.matrices.reshape(self.dim, -1).T
        coef, *_ = np.linalg.lstsq(flat, np.asarray(m, dtype=complex).ravel(), rcond=None)
        if np.abs(flat @ coef - np.ravel(m)).max() > 1e-9 * max(1.0, np.abs(m).max()):
            raise ValueError("matrix is not in the complexified algebra")
        return coef

    def _need_matrices(self) -> None:
        if self.matrices is None:
            raise ValueError(f"{self.name} has no matrix representation")

    def Ad(self, g: np.ndarray) -> np.ndarray:
        """Matrix of ``x -> g x g^{-1}`` on coefficients, for ``g`` in the group."""
        self._need_matrices()
        ginv = np.linalg.inv(g)
        return np.array([self.from_matrix(g @ m @ ginv) for m in self.matrices]).T

    def random_element(self, rng: np.random.Generator, hermitian: bool = False) -> np.ndarray:
        """Random compact element, or ``i`` times one when ``hermitian``."""
        x = rng.standard_normal(self.dim)
        return 1j * x if hermitian else x.astype(complex)


# ---------------------------------------------------- algebra-valued forms
class AlgebraForm:
    """A ``g``-valued invariant form ``sum_a e_a (x) alpha^a``."""

    __array_priority__ = 1000

    def __init__(self, algebra: GaugeAlgebra, model: LieModel, degree: int, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != (algebra.dim, model.size(degree)):
            raise ValueError(f"coefficient shape {coeffs.shape} does not fit degree {degree}")
        self.algebra = algebra
        self.model = model
        self.degree = degree
        self.coeffs = coeffs

    @classmethod
    def zero(cls, algebra: GaugeAlgebra, model: LieModel, degree: int) -> "AlgebraForm":
        return cls(algebra, model, degree, np.zeros((algebra.dim, model.size(degree))))

    @classmethod
    def from_forms(cls, algebra: GaugeAlgebra, forms: Sequence[Form]) -> "AlgebraForm":
        if len(forms) != algebra.dim:
            raise ValueError("need one form per algebra generator")
        return cls(algebra, forms[0].model, forms[0].degree, np.array([f.vec for f in forms]))

    @classmethod
    def tensor(cls, algebra: GaugeAlgebra, x: np.ndarray, form: Form) -> "AlgebraForm":
        """``x (x) form`` for a coefficient vector ``x``."""
        return cls(algebra, form.model, form.degree, np.outer(x, form.vec))

    def components(self) -> list[Form]:
        return [Form(self.model, self.degree, row) for row in self.coeffs]

    def _like(self, coeffs: np.ndarray, degree: int | None = None) -> "AlgebraForm":
        return AlgebraForm(self.algebra, self.model, self.degree if degree is None else degree, coeffs)

    def _check(self, other: "AlgebraForm") -> None:
        if other.algebra is not self.algebra or other.model is not self.model:
            raise ValueError("algebra-valued forms live on different bundles")

    def __add__(self, other: "AlgebraForm") -> "AlgebraForm":
        self._check(other)
        if other.degree != self.degree:
            raise ValueError("cannot add forms of different degree")
        return self._like(self.coeffs + other.coeffs)

    def __sub__(self, other: "AlgebraForm") -> "AlgebraForm":
        return self + (-other)

    def __neg__(self) -> "AlgebraForm":
        return self._like(-self.coeffs)

    def __mul__(self, scalar: complex) -> "AlgebraForm":
        return self._like(self.coeffs * complex(scalar))

    __rmul__ = __mul__

    def conj(self) -> "AlgebraForm":
        """Conjugation fixing compact-valued real forms."""
        return self._like(np.conj(self.coeffs))

    def dagger(self) -> "AlgebraForm":
        return self._like(-np.conj(self.coeffs))

    def apply(self, mat: np.ndarray) -> "AlgebraForm":
        """Act on the algebra factor by a linear map of coefficients."""
        return self._like(mat @ self.coeffs)

    def form_map(self, mat: np.ndarray, degree: int) -> "AlgebraForm":
        """Act on the form factor by a matrix into ``degree``-forms."""
        return self._like(self.coeffs @ mat.T, degree)

    def d(self) -> "AlgebraForm":
        if self.degree >= self.model.dim:
            raise DimensionError("d of a top-degree form leaves the exterior algebra")
        return self.form_map(self.model.dmatrix(self.degree), self.degree + 1)

    def component(self, J: ComplexStructure, p: int, q: int) -> "AlgebraForm":
        if p + q != self.degree:
            raise ValueError("type does not match degree")
        return self.form_map(J.projector(self.degree, p), self.degree)

    def wedge_form(self, other: Form) -> "AlgebraForm":
        """``self ^ other`` with a scalar form on the right."""
        mat = other.model.wedge_matrix(other, self.degree)
        sign = (-1) ** (self.degree * other.degree)
        return self.form_map(sign * mat, self.degree + other.degree)

    def norm(self, H: HermitianStructure | None = None) -> float:
        """L2 norm with the Euclidean metric on compact coordinates."""
        if H is None:
            return float(np.linalg.norm(self.coeffs))
        G = H.gram(self.degree)
        val = np.einsum("ak,kl,al->", np.conj(self.coeffs), G, self.coeffs).real
        return float(np.sqrt(max(val, 0.0) * H.total_volume))

    def allclose(self, other: "AlgebraForm", atol: float = 1e-12) -> bool:
        return bool(np.abs(self.coeffs - other.coeffs).max() <= atol)

    def __repr__(self) -> str:
        return f"AlgebraForm({self.algebra.name}, deg={self.degree})"


def _pair_products(a: AlgebraForm, b: AlgebraForm) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    model = a.model
    if a.degree + b.degree > model.dim:
        raise DimensionError(f"degree {a.degree}+{b.degree} exceeds dimension {model.dim}")
    ia, ib, ic, sign = model._wedge_table(a.degree, b.degree)
    return a.coeffs[:, ia] * sign, b.coeffs[:, ib], ic


def bracket_wedge(a: AlgebraForm, b: AlgebraForm) -> AlgebraForm:
    """``[a ^ b]``: wedge the form parts, bracket the algebra parts."""
    a._check(b)
    x, y, ic = _pair_products(a, b)
    vals = np.einsum("abk,at,bt->tk", a.algebra.structure, x, y)
    out = np.zeros((a.model.size(a.degree + b.degree), a.algebra.dim), dtype=complex)
    np.add.at(out, ic, vals)
    return a._like(out.T, a.degree + b.degree)


def c_wedge(a: AlgebraForm, b: AlgebraForm) -> Form:
    """The scalar form ``c(a ^ b)``."""
    a._check(b)
    x, y, ic = _pair_products(a, b)
    vals = np.einsum("ab,at,bt->t", a.algebra.cform, x, y)
    out = np.zeros(a.model.size(a.degree + b.degree), dtype=complex)
    np.add.at(out, ic, vals)
    return Form(a.model, a.degree + b.degree, out)


def c_pair(x: np.ndarray, a: AlgebraForm) -> Form:
    """``c(x, a)`` for a constant algebra element ``x``."""
    return Form(a.model, a.degree, x @ a.algebra.cform @ a.coeffs)


def covariant_d(theta: AlgebraForm, a: AlgebraForm) -> AlgebraForm:
    """``d^theta a = da + [theta ^ a]``."""
    return a.d() + bracket_wedge(theta, a)


# ---------------------------------------------------------------- connections
class Connection:
    """An invariant connection ``theta``, a ``g``-valued 1-form."""

    def __init__(self, theta: AlgebraForm):
        if theta.degree != 1:
            raise ValueError("a connection is a 1-form")
        self.theta = theta
        self.algebra = theta.algebra
        self.model = theta.model

    @classmethod
    def trivial(cls, algebra: GaugeAlgebra, model: LieModel) -> "Connection":
        return cls(AlgebraForm.zero(algebra, model, 1))

    @cached_property
    def curvature(self) -> AlgebraForm:
        return curvature(self)

    def bianchi_defect(self) -> float:
        if self.model.dim < 3:
            return 0.0
        return float(np.abs(covariant_d(self.theta, self.curvature).coeffs).max(initial=0.0))

    def chern_simons(self) -> Form:
        return chern_simons(self)

    def __repr__(self) -> str:
        return f"Connection({self.algebra.name} on {self.model.name})"


def curvature(theta: Connection | AlgebraForm) -> AlgebraForm:
    """``F = d theta + 1/2 [theta ^ theta]``."""
    th = theta.theta if isinstance(theta, Connection) else theta
    return th.d() + bracket_wedge(th, th) * 0.5


def chern_simons(theta: Connection | AlgebraForm) -> Form:
    """``CS = c(F ^ theta) - 1/6 c([theta ^ theta] ^ theta)``, so that ``dCS = c(F ^ F)``."""
    th = theta.theta if isinstance(theta, Connection) else theta
    F = curvature(th)
    return c_wedge(F, th) - c_wedge(bracket_wedge(th, th), th) / 6.0


def cc_form(theta: Connection | AlgebraForm) -> Form:
    """The characteristic 4-form ``c(F ^ F)``."""
    F = theta.curvature if isinstance(theta, Connection) else curvature(theta)
    return c_wedge(F, F)


# ------------------------------------------------------- holomorphic bundles
class HolomorphicBundle:
    """A trivial bundle with constant (0,1) operator ``dbar + A``.

    Metrics are described by the adjoint action of ``h^{-1}`` on coefficients,
    so that the Chern connection of ``h`` is ``A + Ad(h^{-1})(-A^dagger)``.
    """

    def __init__(self, algebra: GaugeAlgebra, J: ComplexStructure, A: AlgebraForm, check: bool = True):
        if A.degree != 1:
            raise ValueError("A must be a 1-form")
        self.algebra = algebra
        self.J = J
        self.model = J.model
        self.A = A.component(J, 0, 1)
        if check and np.abs(self.A.coeffs - A.coeffs).max() > 1e-12:
            raise ValueError("A must have type (0,1)")
        self.integrability = self.integrability_defect()
        if check and self.integrability > 1e-10:
            raise ValueError(f"(0,1) operator is not integrable: |F^(0,2)| = {self.integrability:.2e}")

    @classmethod
    def trivial(cls, algebra: GaugeAlgebra, J: ComplexStructure) -> "HolomorphicBundle":
        return cls(algebra, J, AlgebraForm.zero(algebra, J.model, 1))

    def integrability_defect(self) -> float:
        if self.model.dim < 2:
            return 0.0
        f02 = self.A.d().component(self.J, 0, 2) + bracket_wedge(self.A, self.A) * 0.5
        return float(np.abs(f02.coeffs).max(initial=0.0))

    def chern_connection(self, ad_hinv: np.ndarray | None = None) -> Connection:
        """Chern connection of the metric ``h`` with ``Ad(h^{-1})`` given (identity by default)."""
        ad_hinv = np.eye(self.algebra.dim) if ad_hinv is None else ad_hinv
        theta10 = self.A.conj().apply(ad_hinv)
        return Connection(self.A + theta10)

    def chern_connection_at(self, path: "ReductionPath", t: float = 1.0) -> Connection:
        return self.chern_connection(path.ad_hinv(t))

    def theta10(self, ad_hinv: np.ndarray | None = None) -> AlgebraForm:
        return self.chern_connection(ad_hinv).theta - self.A


@dataclass
class ReductionPath:
    """Path ``h_t = h_0 e^{t u}`` of bundle metrics.

    ``base`` lists generators with ``h_0 = e^{b_1} ... e^{b_k}`` (empty means
    the identity).  ``u`` is required to be ``h_0``-self-adjoint.
    """

    algebra: GaugeAlgebra
    u: np.ndarray
    base: list[np.ndarray] = field(default_factory=list)
    order: int = QUADRATURE_ORDER

    def __post_init__(self) -> None:
        self.u = np.asarray(self.u, dtype=complex)
        self.base = [np.asarray(b, dtype=complex) for b in self.base]
        if self.u.shape != (self.algebra.dim,):
            raise ValueError("generator has the wrong dimension")
        defect = self.reality_defect()
        if defect > 1e-9 * max(1.0, np.abs(self.u).max()):
            raise ValueError(f"generator is not self-adjoint for the base metric ({defect:.2e})")

    @property
    def base_ad_hinv(self) -> np.ndarray:
        out = np.eye(self.algebra.dim, dtype=complex)
        for b in self.base:
            out = expm(-self.algebra.ad(b)) @ out
        return out

    def reality_defect(self) -> float:
        # h0 u h0^{-1} must equal u^dagger
        ad_h0 = np.linalg.inv(self.base_ad_hinv)
        return float(np.abs(ad_h0 @ self.u - self.algebra.adjoint(self.u)).max(initial=0.0))

    def ad_hinv(self, t: float) -> np.ndarray:
        return expm(-t * self.algebra.ad(self.u)) @ self.base_ad_hinv

    def end_base(self) -> list[np.ndarray]:
        """Base list describing the endpoint ``h_1``."""
        return self.base + [self.u]

    @classmethod
    def between(
        cls, algebra: GaugeAlgebra, start: Sequence[np.ndarray], end: Sequence[np.ndarray], order: int = QUADRATURE_ORDER
    ) -> "ReductionPath":
        """Path from ``e^{s_1}...`` to ``e^{e_1}...`` using the matrix representation."""
        h_from = _metric_matrix(algebra, start)
        h_to = _metric_matrix(algebra, end)
        u = algebra.from_matrix(log_relative(h_from, h_to))
        return cls(algebra, u, list(start), order)


def _metric_matrix(algebra: GaugeAlgebra, gens: Sequence[np.ndarray]) -> np.ndarray:
    size = algebra.matrices.shape[1] if algebra.matrices is not None else 0
    out = np.eye(size, dtype=complex)
    for g in gens:
        out = out @ expm(algebra.to_matrix(g))
    return out


def log_relative(h_from: np.ndarray, h_to: np.ndarray) -> np.ndarray:
    """``u`` with ``h_to = h_from e^u``, self-adjoint for ``h_from``."""
    from scipy.linalg import eigh

    h_from = 0.5 * (h_from + h_from.conj().T)
    h_to = 0.5 * (h_to + h_to.conj().T)
    lam, V = eigh(h_to, h_from)
    if lam.min() <= 0:
        raise ValueError("metrics must be positive definite")
    return V @ np.diag(np.log(lam)) @ V.conj().T @ h_from


def _path_integrand(bundle: HolomorphicBundle, path: ReductionPath, t: float) -> Form:
    F = bundle.chern_connection(path.ad_hinv(t)).curvature
    return c_pair(path.u, F) * 1j


def _gauss_legendre(bundle: HolomorphicBundle, path: ReductionPath, order: int) -> Form:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    acc = bundle.model.zero(2)
    for x, w in zip(nodes, weights):
        acc = acc + _path_integrand(bundle, path, 0.5 * (x + 1)) * (0.5 * w)
    return acc


def donaldson_R(
    path: ReductionPath, bundle: HolomorphicBundle, order: int | None = None, check: bool = True
) -> Form:
    """``int_0^1 i c(u, F_{h_t}) dt`` by Gauss-Legendre quadrature.

    With ``check`` the rule is compared against twice as many nodes and a
    disagreement above ``1e-8`` raises ``QuadratureError``.
    """
    order = path.order if order is None else order
    R = _gauss_legendre(bundle, path, order)
    if check:
        R2 = _gauss_legendre(bundle, path, 2 * order)
        gap = np.abs(R.vec - R2.vec).max(initial=0.0)
        if gap > 1e-8 * max(1.0, np.abs(R2.vec).max(initial=0.0)):
            raise QuadratureError(f"quadrature did not converge (node doubling changed R by {gap:.2e})")
    return R


def csr_vector(path: ReductionPath, bundle: HolomorphicBundle, order: int | None = None) -> Form:
    """``2i del R + CS(theta^h) - CS(theta^h0) - d c(theta^h ^ theta^h0)``."""
    R = donaldson_R(path, bundle, order, check=False)
    th0 = bundle.chern_connection(path.base_ad_hinv).theta
    th1 = bundle.chern_connection(path.ad_hinv(1.0)).theta
    from .exterior import d

    return bundle.J.del_(R) * 2j + chern_simons(th1) - chern_simons(th0) - d(c_wedge(th1, th0))


def csr_defect(
    path: ReductionPath, bundle: HolomorphicBundle, H: HermitianStructure | None = None, order: int | None = None
) -> float:
    """Size of the part of :func:`csr_vector` orthogonal to ``d(Omega^{2,0})``."""
    vec = csr_vector(path, bundle, order)
    model = bundle.model
    J = bundle.J
    P20 = J.projector(2, 2)
    image = model.dmatrix(2) @ column_space(P20)
    G = np.eye(model.size(3)) if H is None else H.gram(3)
    space = GramSpace(G)
    rest = space.project_off(vec.vec, image)
    return space.norm(rest)


def hermite_einstein_residual(theta: Connection, H: HermitianStructure) -> float:
    """L2 norm of ``F ^ omega^{n-1}``."""
    n = H.n
    F = theta.curvature
    return F.wedge_form(power(H.omega, n - 1)).norm(H)

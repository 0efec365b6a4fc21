"""Complex structures and Hermitian data on invariant forms.

Conventions used throughout the package:

* ``ComplexStructure.matrix`` acts on covector coefficients, and a 1-form of
  type (1,0) satisfies ``J a = -i a``.  On tangent vectors the structure acts
  by ``-matrix.T``.  With this choice a Hermitian form is ``omega = sum v ^ Jv``
  over a unitary coframe and the metric is ``g(X, Y) = omega(X, J Y)``.
* ``d^c = i (dbar - del)`` so that ``d d^c = 2 i del dbar``.
* The inner product of k-forms is the Gram-determinant extension of the
  metric on covectors, so ``Lambda omega = n``.
* The Hodge star is complex linear with ``a ^ *b = <a, b> omega^n / n!``
  (bilinear pairing, no conjugation).
"""
from __future__ import annotations

from functools import cached_property
from math import factorial

import numpy as np

from .exterior import Form, LieModel, d, power, top_coefficient, wedge, integrate_top


class IntegrabilityError(ValueError):
    pass


class ComplexStructure:
    """An integrable complex structure on the Lie algebra of ``model``."""

    def __init__(self, model: LieModel, matrix: np.ndarray, check_integrable: bool = True):
        matrix = np.asarray(matrix, dtype=float)
        m = model.dim
        if matrix.shape != (m, m) or m % 2:
            raise ValueError("complex structure needs an even-dimensional square matrix")
        if np.abs(matrix @ matrix + np.eye(m)).max() > 1e-12:
            raise ValueError("J^2 != -Id")
        self.model = model
        self.matrix = matrix
        self.n = m // 2
        if check_integrable:
            defect = np.abs(self.nijenhuis()).max()
            if defect > 1e-12:
                raise IntegrabilityError(f"Nijenhuis tensor does not vanish ({defect:.3e})")

    @property
    def vector_matrix(self) -> np.ndarray:
        return -self.matrix.T

    def nijenhuis(self) -> np.ndarray:
        """``N[:, i, j] = N(e_i, e_j)`` from the bracket of the Lie algebra."""
        C = self.model.bracket_constants
        Jv = self.vector_matrix

        def br(x: np.ndarray, y: np.ndarray) -> np.ndarray:
            return np.einsum("kij,i,j->k", C, x, y)

        m = self.model.dim
        out = np.zeros((m, m, m), dtype=complex)
        eye = np.eye(m)
        for i in range(m):
            for j in range(m):
                x, y = eye[i], eye[j]
                jx, jy = Jv @ x, Jv @ y
                out[:, i, j] = br(jx, jy) - Jv @ br(jx, y) - Jv @ br(x, jy) - br(x, y)
        return out

    @cached_property
    def holomorphic_coframe(self) -> np.ndarray:
        """Columns span the (1,0)-forms (kernel of ``J + i``)."""
        _, _, vh = np.linalg.svd(self.matrix + 1j * np.eye(self.model.dim))
        return vh[-self.n:].conj().T

    def _derivation(self, degree: int) -> np.ndarray:
        return self.model.derivation_matrix(self.matrix.astype(complex), degree)

    def projector(self, degree: int, p: int) -> np.ndarray:
        """Projector of ``degree``-forms onto type ``(p, degree - p)``.

        The derivation extension of ``J`` acts on type (p, q) by ``i (q - p)``.
        """
        size = self.model.size(degree)
        q = degree - p
        if p < 0 or q < 0 or p > self.n or q > self.n:
            return np.zeros((size, size), dtype=complex)
        cache = self.__dict__.setdefault("_projectors", {})
        key = (degree, p)
        if key not in cache:
            D = self._derivation(degree)
            proj = np.eye(size, dtype=complex)
            target = 1j * (q - p)
            for p2 in range(max(0, degree - self.n), min(self.n, degree) + 1):
                if p2 == p:
                    continue
                other = 1j * (degree - 2 * p2)
                proj = proj @ (D - other * np.eye(size)) / (target - other)
            cache[key] = proj
        return cache[key]

    def type_decompose(self, a: Form, tol: float = 1e-13) -> dict[tuple[int, int], Form]:
        """Nonzero (p, q) components of ``a``; they sum back to ``a``."""
        out = {}
        for p in range(a.degree + 1):
            comp = Form(self.model, a.degree, self.projector(a.degree, p) @ a.vec)
            if comp.norm_max() > tol:
                out[(p, a.degree - p)] = comp
        return out

    def component(self, a: Form, p: int, q: int) -> Form:
        if p + q != a.degree:
            raise ValueError("type does not match degree")
        return Form(self.model, a.degree, self.projector(a.degree, p) @ a.vec)

    def has_type(self, a: Form, p: int, q: int, tol: float = 1e-12) -> bool:
        return (a - self.component(a, p, q)).norm_max() <= tol

    def act(self, a: Form) -> Form:
        """``J`` acting on forms as an algebra automorphism (``Ja`` in formulas)."""
        mat = self.model.automorphism_matrix(self.matrix, a.degree)
        return Form(self.model, a.degree, mat @ a.vec)

    # ----------------------------------------------------------- differentials
    def del_matrix(self, degree: int) -> np.ndarray:
        D = self.model.dmatrix(degree)
        out = np.zeros_like(D)
        for p in range(degree + 1):
            out += self.projector(degree + 1, p + 1) @ D @ self.projector(degree, p)
        return out

    def dbar_matrix(self, degree: int) -> np.ndarray:
        D = self.model.dmatrix(degree)
        out = np.zeros_like(D)
        for p in range(degree + 1):
            out += self.projector(degree + 1, p) @ D @ self.projector(degree, p)
        return out

    def dc_matrix(self, degree: int) -> np.ndarray:
        return 1j * (self.dbar_matrix(degree) - self.del_matrix(degree))

    def integrability_defect(self) -> float:
        """Size of the (0,2) part of d on (1,0)-forms."""
        D = self.model.dmatrix(1)
        return float(np.abs(self.projector(2, 0) @ D @ self.projector(1, 1)).max())

    def del_(self, a: Form) -> Form:
        return Form(self.model, a.degree + 1, self.del_matrix(a.degree) @ a.vec)

    def dbar(self, a: Form) -> Form:
        return Form(self.model, a.degree + 1, self.dbar_matrix(a.degree) @ a.vec)

    def dc(self, a: Form) -> Form:
        return Form(self.model, a.degree + 1, self.dc_matrix(a.degree) @ a.vec)

    def ddc(self, a: Form) -> Form:
        return d(self.dc(a))


def canonical_volume(psi: Form) -> Form:
    """``(-1)^{n(n-1)/2} i^n psi ^ conj(psi)``, a real top form."""
    n = psi.degree
    return wedge(psi, psi.conj()) * ((-1) ** (n * (n - 1) // 2) * 1j ** n)


class HermitianStructure:
    """A positive (1,1)-form ``omega`` compatible with ``J``, plus a volume ``mu``.

    ``mu`` defaults to the oriented top form; :func:`with_psi_volume` builds
    the structure with ``mu`` taken from an (n,0)-form.
    """

    def __init__(self, J: ComplexStructure, omega: Form, mu: Form | None = None, check: bool = True):
        model = J.model
        if omega.degree != 2 or omega.model is not model:
            raise ValueError("omega must be a 2-form on the complex structure's model")
        self.J = J
        self.model = model
        self.n = J.n
        self.omega = omega
        self.mu = model.top() if mu is None else mu
        if check:
            if np.abs(omega.vec.imag).max() > 1e-12:
                raise ValueError("omega must be real")
            if not J.has_type(omega, 1, 1, tol=1e-10):
                raise ValueError("omega is not of type (1,1)")
            eig = np.linalg.eigvalsh(self.metric)
            if eig.min() <= 0:
                raise ValueError("omega is not positive")

    @property
    def is_positive(self) -> bool:
        return bool(np.linalg.eigvalsh(self.metric).min() > 0)

    def with_omega(self, omega: Form, check: bool = True) -> "HermitianStructure":
        return HermitianStructure(self.J, omega, self.mu, check=check)

    def with_mu(self, mu: Form) -> "HermitianStructure":
        return HermitianStructure(self.J, self.omega, mu, check=False)

    @cached_property
    def omega_matrix(self) -> np.ndarray:
        m = self.model.dim
        W = np.zeros((m, m))
        for pos, (i, j) in enumerate(self.model.basis[2]):
            W[i, j] = self.omega.vec[pos].real
            W[j, i] = -self.omega.vec[pos].real
        return W

    @cached_property
    def metric(self) -> np.ndarray:
        """``g[i, j] = omega(e_i, J e_j)`` on the basis vectors."""
        g = self.omega_matrix @ self.J.vector_matrix
        return 0.5 * (g + g.T)

    @cached_property
    def cometric(self) -> np.ndarray:
        return np.linalg.inv(self.metric)

    def gram(self, degree: int) -> np.ndarray:
        cache = self.__dict__.setdefault("_grams", {})
        if degree not in cache:
            cache[degree] = self.model.automorphism_matrix(self.cometric, degree).real
        return cache[degree]

    @cached_property
    def volume_form(self) -> Form:
        """``omega^n / n!``."""
        return power(self.omega, self.n) / factorial(self.n)

    @cached_property
    def total_volume(self) -> float:
        return float(integrate_top(self.volume_form).real)

    def inner(self, a: Form, b: Form) -> complex:
        """Pointwise Hermitian product ``<a, conj b>`` of invariant forms."""
        return complex(a.vec @ self.gram(a.degree) @ b.vec.conj())

    def pointwise_norm(self, a: Form) -> float:
        return float(np.sqrt(max(self.inner(a, a).real, 0.0)))

    def l2_norm(self, a: Form) -> float:
        """L^2 norm over the compact quotient (pointwise norm times sqrt volume)."""
        return self.pointwise_norm(a) * np.sqrt(self.total_volume)

    def l2_inner_matrix(self, degree: int) -> np.ndarray:
        return self.gram(degree) * self.total_volume

    # ------------------------------------------------------------ star, Lambda
    def star_matrix(self, degree: int) -> np.ndarray:
        cache = self.__dict__.setdefault("_stars", {})
        if degree not in cache:
            model = self.model
            m = model.dim
            k = degree
            size = model.size(k)
            pairing = np.zeros((size, model.size(m - k)))
            for i, I in enumerate(model.basis[k]):
                for j, K in enumerate(model.basis[m - k]):
                    unit_i = np.zeros(size)
                    unit_i[i] = 1
                    unit_k = np.zeros(model.size(m - k))
                    unit_k[j] = 1
                    pairing[i, j] = model.wedge_vectors(unit_i, k, unit_k, m - k)[0].real
            v0 = self.volume_form.vec[0].real
            cache[degree] = v0 * np.linalg.solve(pairing, self.gram(k))
        return cache[degree]

    def star(self, a: Form) -> Form:
        return Form(self.model, self.model.dim - a.degree, self.star_matrix(a.degree) @ a.vec)

    def lefschetz_matrix(self, degree: int) -> np.ndarray:
        return self.model.wedge_matrix(self.omega, degree).real

    def lambda_matrix(self, degree: int) -> np.ndarray:
        """Adjoint of ``omega ^ .`` from ``degree`` to ``degree - 2``."""
        L = self.lefschetz_matrix(degree - 2)
        return np.linalg.solve(self.gram(degree - 2), L.T @ self.gram(degree))

    def lambda_contract(self, a: Form) -> Form:
        return Form(self.model, a.degree - 2, self.lambda_matrix(a.degree) @ a.vec)

    def trace(self, a: Form) -> complex:
        """``Lambda a`` for a 2-form, as a scalar."""
        return complex(self.lambda_contract(a).vec[0])

    def primitive_part(self, a: Form) -> Form:
        return a - self.omega * (self.trace(a) / self.n)

    def codifferential_matrix(self, degree: int) -> np.ndarray:
        """L^2 adjoint of d on invariant forms (requires a unimodular algebra)."""
        D = self.model.dmatrix(degree - 1)
        return np.linalg.solve(self.gram(degree - 1), D.conj().T @ self.gram(degree))

    def codifferential(self, a: Form) -> Form:
        return Form(self.model, a.degree - 1, self.codifferential_matrix(a.degree) @ a.vec)

    # ----------------------------------------------------- derived quantities
    def lee_form(self) -> Form:
        """The real 1-form with ``d omega^{n-1} = theta ^ omega^{n-1}``."""
        n = self.n
        om = power(self.omega, n - 1)
        L = self.model.wedge_matrix(om, 1)
        rhs = d(om).vec
        sol, *_ = np.linalg.lstsq(L, rhs, rcond=None)
        residual = np.abs(L @ sol - rhs).max(initial=0.0)
        if residual > 1e-9 * max(1.0, np.abs(rhs).max(initial=0.0)):
            raise ArithmeticError(f"Lee form system inconsistent (residual {residual:.3e})")
        return Form(self.model, 1, sol.real)

    def lee_form_from_codifferential(self) -> Form:
        """Independent evaluation ``theta = J d^* omega``."""
        return self.J.act(self.codifferential(self.omega)).real

    def dilaton_function(self) -> float:
        """``f`` with ``omega^n / n! = e^{2f} mu``."""
        ratio = top_coefficient(self.volume_form) / top_coefficient(self.mu)
        if abs(ratio.imag) > 1e-12 * abs(ratio) or ratio.real <= 0:
            raise ValueError("omega^n / n! is not a positive multiple of mu")
        return 0.5 * float(np.log(ratio.real))

    def psi_norm(self, psi: Form) -> float:
        """Pointwise norm of an (n,0)-form."""
        if psi.degree != self.n:
            raise ValueError("psi must have degree n")
        vol = top_coefficient(self.volume_form)
        if abs(vol) == 0:
            raise ValueError("degenerate omega")
        sq = top_coefficient(canonical_volume(psi)) / vol
        return float(np.sqrt(max(sq.real, 0.0)))

    # --------------------------------------------------------------- Bismut
    def _levi_civita(self) -> np.ndarray:
        """``A[i]`` with ``nabla_{e_i} e_j = sum_k A[i][k, j] e_k``."""
        C = self.model.bracket_constants.real
        g = self.metric
        # low[i, j, l] = g(nabla_{e_i} e_j, e_l) via the Koszul formula
        br_g = np.einsum("kij,kl->ijl", C, g)
        low = 0.5 * (br_g - np.einsum("jli->ijl", br_g) + np.einsum("lij->ijl", br_g))
        return low

    def _torsion_tensor(self, form: Form) -> np.ndarray:
        m = self.model.dim
        out = np.zeros((m, m, m))
        for pos, (i, j, k) in enumerate(self.model.basis[3]):
            c = form.vec[pos].real
            for perm, sign in (
                ((i, j, k), 1), ((j, k, i), 1), ((k, i, j), 1),
                ((j, i, k), -1), ((i, k, j), -1), ((k, j, i), -1),
            ):
                out[perm] = sign * c
        return out

    def bismut_connection(self) -> np.ndarray:
        """Connection matrices of ``nabla^+ = nabla^g - 1/2 g^{-1} d^c omega``.

        ``A[i][k, j]`` is the ``e_k`` component of ``nabla^+_{e_i} e_j``.
        """
        low = self._levi_civita() - 0.5 * self._torsion_tensor(self.J.dc(self.omega))
        return np.einsum("ijl,lk->ikj", low, self.cometric)

    def bismut_check(self, psi: Form) -> float:
        """Pointwise norm of ``nabla^+ psi``."""
        A = self.bismut_connection()
        m = self.model.dim
        derivs = []
        for i in range(m):
            on_covectors = -A[i].T
            mat = self.model.derivation_matrix(on_covectors.astype(complex), psi.degree)
            derivs.append(mat @ psi.vec)
        G = self.gram(psi.degree)
        total = 0.0
        for i in range(m):
            for j in range(m):
                total += self.cometric[i, j] * (derivs[i] @ G @ derivs[j].conj()).real
        return float(np.sqrt(max(total, 0.0)))


class SUnStructure:
    """An (n,0)-form ``psi`` paired with its complex structure."""

    def __init__(self, J: ComplexStructure, psi: Form, tol: float = 1e-10):
        if psi.degree != J.n:
            raise ValueError("psi must have degree n")
        if not J.has_type(psi, J.n, 0, tol=tol * max(1.0, psi.norm_max())):
            raise ValueError("psi is not of type (n,0)")
        self.J = J
        self.psi = psi

    @property
    def volume(self) -> Form:
        return canonical_volume(self.psi)


def with_psi_volume(J: ComplexStructure, omega: Form, psi: Form) -> HermitianStructure:
    return HermitianStructure(J, omega, canonical_volume(psi))


def type_decompose(a: Form, J: ComplexStructure) -> dict[tuple[int, int], Form]:
    return J.type_decompose(a)


def lee_form(H: HermitianStructure) -> Form:
    return H.lee_form()


def dilaton_function(H: HermitianStructure) -> float:
    return H.dilaton_function()


def psi_norm(psi: Form | SUnStructure, H: HermitianStructure) -> float:
    return H.psi_norm(psi.psi if isinstance(psi, SUnStructure) else psi)


def hodge_star(a: Form, H: HermitianStructure) -> Form:
    return H.star(a)


def lambda_contract(a: Form, H: HermitianStructure) -> Form:
    return H.lambda_contract(a)


def bismut_check(psi: Form | SUnStructure, H: HermitianStructure) -> float:
    return H.bismut_check(psi.psi if isinstance(psi, SUnStructure) else psi)

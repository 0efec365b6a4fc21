"""Invariant cohomology groups computed as harmonic spaces.

A harmonic space is ``ker(out) ∩ image(in)^perp`` inside a subspace of
forms, with orthogonality taken for a Gram matrix (Euclidean on the
coefficient basis unless a Hermitian structure is supplied).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .exterior import Form, LieModel, integrate_top, wedge
from .hermitian import ComplexStructure, HermitianStructure
from .linalg import GramSpace, column_space, kernel, rank

KINDS = ("deRham", "dolbeault", "aeppli", "bottchern", "morse_novikov", "string_complex")


@dataclass
class CohomologyGroup:
    which: str
    degree: int
    bidegree: tuple[int, int] | None
    model: LieModel
    basis: np.ndarray  # columns: harmonic representatives
    gram: np.ndarray
    image: np.ndarray  # columns spanning the exact subspace
    closed: np.ndarray  # columns spanning the closed subspace
    params: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def representatives(self) -> list[Form]:
        return [Form(self.model, self.degree, col) for col in self.basis.T]

    def _space(self) -> GramSpace:
        return GramSpace(self.gram)

    def is_closed(self, a: Form, tol: float = 1e-10) -> bool:
        if self.closed.shape[1] == 0:
            return bool(np.abs(a.vec).max(initial=0.0) <= tol)
        space = self._space()
        return space.norm(space.project_off(a.vec, self.closed)) <= tol * max(1.0, space.norm(a.vec))

    def coordinates(self, a: Form, check: bool = True) -> np.ndarray:
        """Coefficients of the class of a closed form in the harmonic basis."""
        if a.degree != self.degree:
            raise ValueError(f"expected degree {self.degree}, got {a.degree}")
        if check and not self.is_closed(a, 1e-8):
            raise ValueError(f"form is not closed for the {self.which} complex")
        if self.dim == 0:
            return np.zeros(0, dtype=complex)
        space = self._space()
        harm = space.project_off(a.vec, self.image) if self.image.shape[1] else a.vec
        coef, *_ = np.linalg.lstsq(self.basis, harm, rcond=None)
        return coef

    def class_of(self, a: Form, check: bool = True) -> "CohomologyClass":
        return CohomologyClass(self, self.coordinates(a, check))

    def orthogonality_defect(self) -> float:
        if self.dim == 0 or self.image.shape[1] == 0:
            return 0.0
        return float(np.abs(self.image.conj().T @ self.gram @ self.basis).max())

    def __repr__(self) -> str:
        label = self.bidegree if self.bidegree is not None else self.degree
        return f"CohomologyGroup({self.which} {label}, dim={self.dim})"


@dataclass
class CohomologyClass:
    group: CohomologyGroup
    coeffs: np.ndarray

    @property
    def representative(self) -> Form:
        vec = self.group.basis @ self.coeffs if self.group.dim else np.zeros(self.group.model.size(self.group.degree))
        return Form(self.group.model, self.group.degree, vec)

    @property
    def degree(self) -> int:
        return self.group.degree

    def __add__(self, other: "CohomologyClass") -> "CohomologyClass":
        return CohomologyClass(self.group, self.coeffs + other.coeffs)

    def __sub__(self, other: "CohomologyClass") -> "CohomologyClass":
        return CohomologyClass(self.group, self.coeffs - other.coeffs)

    def __mul__(self, scalar: complex) -> "CohomologyClass":
        return CohomologyClass(self.group, self.coeffs * scalar)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def is_zero(self, tol: float = 1e-10) -> bool:
        return self.norm() <= tol

    @property
    def is_real(self) -> bool:
        rep = self.representative
        return bool(np.abs(rep.vec.imag).max(initial=0.0) <= 1e-10 * max(1.0, np.abs(rep.vec).max(initial=0.0)))


AeppliClass = CohomologyClass


def _harmonic(subspace: np.ndarray, out: np.ndarray, image: np.ndarray, gram: np.ndarray):
    """Closed subspace and harmonic complement of ``image`` inside it."""
    if subspace.shape[1] == 0:
        empty = np.zeros((subspace.shape[0], 0), dtype=complex)
        return empty, empty
    closed = subspace @ kernel(out @ subspace) if out.shape[0] else subspace
    closed = column_space(closed) if closed.shape[1] else closed
    if closed.shape[1] == 0:
        return closed, closed
    space = GramSpace(gram)
    harm = space.complement(image, within=closed) if image.shape[1] else closed
    if harm.shape[1] and np.abs(gram.imag).max() == 0:
        real = real_basis(harm)
        if real.shape[1] == harm.shape[1]:
            harm = real.astype(complex)
    return closed, harm


def _type_basis(J: ComplexStructure, p: int, q: int) -> np.ndarray:
    size = J.model.size(p + q)
    if p < 0 or q < 0 or p > J.n or q > J.n:
        return np.zeros((size, 0), dtype=complex)
    return column_space(J.projector(p + q, p))


def _gram(model: LieModel, degree: int, H: HermitianStructure | None) -> np.ndarray:
    return np.eye(model.size(degree), dtype=complex) if H is None else H.gram(degree).astype(complex)


def _dmat(model: LieModel, degree: int) -> np.ndarray:
    if degree < 0:
        return np.zeros((model.size(0), 0), dtype=complex)
    if degree >= model.dim:
        return np.zeros((0, model.size(degree)), dtype=complex)
    return model.dmatrix(degree)


def _restricted(op: np.ndarray, source: np.ndarray) -> np.ndarray:
    return op @ source if source.shape[1] else np.zeros((op.shape[0], 0), dtype=complex)


def compute_group(
    model: LieModel,
    which: str,
    degree: int | tuple[int, int],
    J: ComplexStructure | None = None,
    H: HermitianStructure | None = None,
    theta: Form | None = None,
) -> CohomologyGroup:
    """Invariant cohomology group ``which`` in the given degree.

    ``which`` is one of ``deRham``, ``dolbeault``, ``aeppli``, ``bottchern``
    (bidegree ``(p, q)``), ``morse_novikov`` (needs ``theta``) or
    ``string_complex`` (degree ``k`` of the complex ``Omega^{<=k}``).
    """
    if which not in KINDS:
        raise ValueError(f"unknown cohomology {which!r}; choose from {KINDS}")
    if H is not None:
        J = H.J if J is None else J
    if which in ("dolbeault", "aeppli", "bottchern", "string_complex") and J is None:
        raise ValueError(f"{which} cohomology needs a complex structure")

    if which in ("deRham", "morse_novikov"):
        k = int(degree)
        if which == "morse_novikov":
            if theta is None:
                raise ValueError("Morse-Novikov cohomology needs a closed 1-form theta")
            out, inc = novikov_matrices(model, theta, k)
        else:
            out, inc = _dmat(model, k), _dmat(model, k - 1)
        size = model.size(k)
        sub = np.eye(size, dtype=complex)
        closed, harm = _harmonic(sub, out, inc, _gram(model, k, H))
        params = {} if theta is None else {"theta": theta.vec.tolist()}
        return CohomologyGroup(which, k, None, model, harm, _gram(model, k, H), inc, closed, params)

    if which == "string_complex":
        k = int(degree)
        return _string_group(model, J, k, H)

    p, q = degree
    k = p + q
    sub = _type_basis(J, p, q)
    gram = _gram(model, k, H)
    if which == "dolbeault":
        out = J.dbar_matrix(k) if k < model.dim else np.zeros((0, model.size(k)))
        inc = _restricted(J.dbar_matrix(k - 1), _type_basis(J, p, q - 1)) if k >= 1 else np.zeros((model.size(k), 0))
    elif which == "aeppli":
        if k + 2 <= model.dim:
            out = J.del_matrix(k + 1) @ J.dbar_matrix(k)
        else:
            out = np.zeros((0, model.size(k)))
        pieces = []
        if k >= 1:
            pieces.append(_restricted(J.del_matrix(k - 1), _type_basis(J, p - 1, q)))
            pieces.append(_restricted(J.dbar_matrix(k - 1), _type_basis(J, p, q - 1)))
        inc = np.hstack(pieces) if pieces else np.zeros((model.size(k), 0))
    else:  # bottchern
        out = np.vstack([J.del_matrix(k), J.dbar_matrix(k)]) if k < model.dim else np.zeros((0, model.size(k)))
        if k >= 2:
            inc = _restricted(J.del_matrix(k - 1) @ J.dbar_matrix(k - 2), _type_basis(J, p - 1, q - 1))
        else:
            inc = np.zeros((model.size(k), 0))
    inc = column_space(inc) if inc.shape[1] else inc.astype(complex)
    closed, harm = _harmonic(sub, out, inc, gram)
    return CohomologyGroup(which, k, (p, q), model, harm, gram, inc, closed)


def string_complex_basis(J: ComplexStructure, k: int) -> np.ndarray:
    """Columns spanning ``Omega^{<=k} = sum_{j<=k} Omega^{j+2, k-j}``."""
    cols = [_type_basis(J, j + 2, k - j) for j in range(0, k + 1)]
    cols = [c for c in cols if c.shape[1]]
    size = J.model.size(k + 2)
    return np.hstack(cols) if cols else np.zeros((size, 0), dtype=complex)


def _string_group(model: LieModel, J: ComplexStructure, k: int, H: HermitianStructure | None) -> CohomologyGroup:
    deg = k + 2
    sub = string_complex_basis(J, k)
    out = _dmat(model, deg)
    prev = string_complex_basis(J, k - 1) if k >= 1 else np.zeros((model.size(deg - 1), 0))
    inc = _restricted(_dmat(model, deg - 1), prev) if k >= 1 else np.zeros((model.size(deg), 0), dtype=complex)
    inc = column_space(inc) if inc.shape[1] else inc.astype(complex)
    gram = _gram(model, deg, H)
    closed, harm = _harmonic(sub, out, inc, gram)
    return CohomologyGroup("string_complex", deg, None, model, harm, gram, inc, closed, {"k": k})


# ------------------------------------------------------------ Morse-Novikov
def novikov_matrices(model: LieModel, theta: Form, k: int) -> tuple[np.ndarray, np.ndarray]:
    """``(d - theta^)`` on ``k``-forms and on ``(k-1)``-forms."""
    if theta.degree != 1:
        raise ValueError("theta must be a 1-form")
    if model.dim >= 2 and np.abs(model.dmatrix(1) @ theta.vec).max() > 1e-12:
        raise ValueError("theta is not closed")

    def op(deg: int) -> np.ndarray:
        if deg < 0:
            return np.zeros((model.size(0), 0), dtype=complex)
        if deg >= model.dim:
            return np.zeros((0, model.size(deg)), dtype=complex)
        return model.dmatrix(deg) - model.wedge_matrix(theta, deg)

    return op(k), op(k - 1)


def morse_novikov(model: LieModel, theta: Form) -> list[np.ndarray]:
    """The chain of matrices of ``d - theta^`` in degrees ``0..dim-1``."""
    return [novikov_matrices(model, theta, k)[0] for k in range(model.dim)]


def betti_numbers(model: LieModel, theta: Form | None = None) -> list[int]:
    which = "deRham" if theta is None else "morse_novikov"
    return [compute_group(model, which, k, theta=theta).dim for k in range(model.dim + 1)]


# ----------------------------------------------------------- partial map
@dataclass
class PartialMap:
    """Matrix of ``[tau] -> [2i del tau]`` from real Aeppli classes.

    Columns are a real basis of ``H^{1,1}_A(X, R)``; rows are the real and
    imaginary parts of coordinates in ``H^1`` of the string complex.
    """

    matrix: np.ndarray
    domain: np.ndarray  # real harmonic (1,1)-forms, columns
    aeppli: CohomologyGroup
    target: CohomologyGroup

    @property
    def rank(self) -> int:
        return rank(self.matrix) if self.matrix.size else 0

    @property
    def kernel_dim(self) -> int:
        return self.domain.shape[1] - self.rank

    @property
    def domain_dim(self) -> int:
        return self.domain.shape[1]

    @property
    def target_dim(self) -> int:
        return self.target.dim

    @property
    def is_zero(self) -> bool:
        return not self.matrix.size or float(np.abs(self.matrix).max()) <= 1e-12

    @property
    def is_isomorphism(self) -> bool:
        """Injective with image spanning the (complex) target."""
        return self.kernel_dim == 0 and self.rank == self.target_dim

    def kernel(self) -> list[Form]:
        """Real (1,1)-forms spanning the kernel, i.e. the model of ``Sigma_Q(R)``."""
        ker = kernel(self.matrix) if self.matrix.size else np.eye(self.domain_dim)
        vecs = (self.domain @ ker).real if ker.size else np.zeros((self.domain.shape[0], 0))
        return [Form(self.aeppli.model, 2, v) for v in vecs.T]


def real_basis(vectors: np.ndarray) -> np.ndarray:
    """Real basis of the conjugation-invariant span of the columns."""
    if vectors.shape[1] == 0:
        return np.zeros((vectors.shape[0], 0))
    stacked = np.hstack([vectors.real, vectors.imag])
    return column_space(stacked).real


def partial_map(J: ComplexStructure, H: HermitianStructure | None = None) -> PartialMap:
    model = J.model
    aeppli = compute_group(model, "aeppli", (1, 1), J=J, H=H)
    target = compute_group(model, "string_complex", 1, J=J, H=H)
    domain = real_basis(aeppli.basis)
    cols = []
    for v in domain.T:
        image = J.del_(Form(model, 2, v)) * 2j
        coords = target.coordinates(image) if target.dim else np.zeros(0)
        cols.append(np.concatenate([coords.real, coords.imag]))
    mat = np.array(cols).T if cols else np.zeros((2 * target.dim, 0))
    return PartialMap(mat, domain, aeppli, target)


# ------------------------------------------------------------ Aeppli classes
def aeppli_class_of(
    tau: Form,
    path,
    tau0: Form,
    bundle,
    H: HermitianStructure | None = None,
    tol: float = 1e-8,
    group: CohomologyGroup | None = None,
) -> CohomologyClass:
    """Class of ``tau - tau0 - R(h, h0)`` in ``H^{1,1}_A``.

    ``path`` runs from ``h0`` to ``h``; both pairs must satisfy
    ``dd^c tau = c(F ^ F)`` for their own Chern connections.
    """
    from .gauge import cc_form, donaldson_R

    J = bundle.J
    for label, form, ad in (("tau", tau, path.ad_hinv(1.0)), ("tau0", tau0, path.base_ad_hinv)):
        if J.model.dim >= 4:
            defect = J.ddc(form) - cc_form(bundle.chern_connection(ad))
            if defect.norm_max() > tol:
                raise ValueError(
                    f"dd^c {label} = c(F ^ F) fails for its bundle metric (defect {defect.norm_max():.2e})"
                )
    R = donaldson_R(path, bundle)
    group = compute_group(J.model, "aeppli", (1, 1), J=J, H=H) if group is None else group
    return group.class_of(tau - tau0 - R)


def maximize_min_eigenvalue(
    J: ComplexStructure, base: np.ndarray, free: np.ndarray, restarts: int = 4, seed: int = 0
) -> tuple[float, np.ndarray]:
    """Largest smallest-metric-eigenvalue over real (1,1)-forms ``base + free @ c``."""
    model = J.model

    def min_eig(c: np.ndarray) -> float:
        om = Form(model, 2, base + free @ c)
        return float(np.linalg.eigvalsh(HermitianStructure(J, om, check=False).metric).min())

    best_c = np.zeros(free.shape[1])
    best = min_eig(best_c)
    if best > 0 or free.shape[1] == 0:
        return best, base + free @ best_c
    rng = np.random.default_rng(seed)
    scale = max(1.0, float(np.abs(base).max()))
    for attempt in range(restarts):
        x0 = rng.standard_normal(free.shape[1]) * scale if attempt else best_c
        res = minimize(lambda c: -min_eig(c), x0, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
        if -res.fun > best:
            best, best_c = -res.fun, res.x
        if best > 0:
            break
    return best, base + free @ best_c


def real_11_directions(J: ComplexStructure, columns: np.ndarray) -> np.ndarray:
    """Real (1,1)-forms in the conjugation-closed span of ``columns``."""
    if columns.shape[1] == 0:
        return np.zeros((columns.shape[0], 0))
    real = real_basis(columns)
    P = J.projector(2, 1)
    keep = [v for v in real.T if np.abs(P @ v - v).max() <= 1e-10]
    return np.array(keep).T if keep else np.zeros((columns.shape[0], 0))


def positive_representative(
    cls: CohomologyClass, J: ComplexStructure, restarts: int = 4, seed: int = 0
) -> tuple[bool, Form | None, float]:
    """Search for a positive real (1,1)-form in an Aeppli class.

    Returns ``(found, form, best_min_eigenvalue)``.  Only invariant
    representatives are searched, so a negative answer is not a proof.
    """
    if not cls.is_real:
        # harmonic projection commutes with conjugation, so a real class has a real harmonic form
        return False, None, -np.inf
    base = cls.representative.real.vec.real
    free = real_11_directions(J, cls.group.image)
    best, vec = maximize_min_eigenvalue(J, base, free, restarts, seed)
    found = bool(best > 1e-12)
    return found, (Form(J.model, 2, vec) if found else None), best


# ---------------------------------------------------------------- products
def cup_integrate(a: CohomologyClass | Form, b: CohomologyClass | Form) -> complex:
    """``int a ^ b`` on representatives of complementary degree."""
    ra = a.representative if isinstance(a, CohomologyClass) else a
    rb = b.representative if isinstance(b, CohomologyClass) else b
    if ra.degree + rb.degree != ra.model.dim:
        raise ValueError(f"degrees {ra.degree} and {rb.degree} are not complementary")
    return integrate_top(wedge(ra, rb))

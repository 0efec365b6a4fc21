"""The linearized system operator on invariant data and its structural checks.

The operator is the exact Jacobian at ``(xi, s) = 0`` of the residual map

    R1 = e^{f_0} / (n-1) (d - theta_0)(e^{-f} omega^{n-1})
    R2 = F_h ^ omega^{n-1}

along ``omega = omega_0 + (Id + J) d xi + R(h, h_0)``, ``h = h_0 e^{i U s}``,
with ``theta_0`` the Lee form of ``omega_0`` held fixed.  The dilaton
variation is eliminated with ``delta f = Lambda(delta omega) / 2``.

Domain coordinates are ``(xi, s)`` with ``xi`` a real invariant 1-form and
``s`` compact coordinates in an ``h_0``-unitary frame.  Codomain coordinates
are the vector of a ``(2n-1)``-form followed by the top-degree coefficients
of ``R2``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .algebroid import MetricPair, metric_from_parameters, unitary_frame
from .exterior import Form, d, power
from .gauge import AlgebraForm, c_pair
from .hermitian import HermitianStructure
from .linalg import GramSpace, column_space, kernel
from .variation import ddbar_h, generator, symmetric_11

ON_SHELL_TOL = 1e-10
JACOBIAN_STEPS = (1e-3, 5e-4)


@dataclass
class OperatorMatrix:
    """A linear map between invariant spaces with L^2 Gram matrices on both sides."""

    matrix: np.ndarray
    domain: list[tuple[str, int]]
    codomain: list[tuple[str, int]]
    domain_gram: np.ndarray
    codomain_gram: np.ndarray
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        rows = sum(k for _, k in self.codomain)
        cols = sum(k for _, k in self.domain)
        if self.matrix.shape != (rows, cols):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match bases ({rows}, {cols})")
        if self.domain_gram.shape != (cols, cols) or self.codomain_gram.shape != (rows, rows):
            raise ValueError("Gram matrices do not match the bases")

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def adjoint(self) -> np.ndarray:
        """``G_dom^{-1} M^* G_cod``."""
        return np.linalg.solve(self.domain_gram, self.matrix.conj().T @ self.codomain_gram)

    def _slice(self, blocks: list[tuple[str, int]], name: str) -> slice:
        start = 0
        for label, size in blocks:
            if label == name:
                return slice(start, start + size)
            start += size
        raise KeyError(name)

    def block(self, row: str, col: str) -> "OperatorMatrix":
        r, c = self._slice(self.codomain, row), self._slice(self.domain, col)
        return OperatorMatrix(
            self.matrix[r, c],
            [(col, c.stop - c.start)],
            [(row, r.stop - r.start)],
            self.domain_gram[c, c],
            self.codomain_gram[r, r],
        )

    def _with(self, matrix: np.ndarray) -> "OperatorMatrix":
        return OperatorMatrix(matrix, self.domain, self.codomain, self.domain_gram, self.codomain_gram, list(self.warnings))

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return self._with(self.matrix + other.matrix)

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return self._with(self.matrix - other.matrix)

    def __mul__(self, scalar: complex) -> "OperatorMatrix":
        return self._with(self.matrix * scalar)

    __rmul__ = __mul__


@dataclass
class Linearization:
    L: OperatorMatrix
    U: OperatorMatrix
    K: OperatorMatrix
    on_shell: bool
    base_residual: float

    @property
    def U1(self) -> OperatorMatrix:
        return self.U.block("forms", "xi")


# ------------------------------------------------------------------ pieces
def T_operator(H: HermitianStructure, a: Form) -> Form:
    """``a - Lambda(a) omega / (2(n-1))`` on 2-forms."""
    return a - H.omega * (H.trace(a) / (2 * (H.n - 1)))


def _twisted_d(theta: Form, a: Form) -> Form:
    return d(a) - theta.wedge(a)


def _top_coeffs(a: AlgebraForm) -> np.ndarray:
    return a.coeffs[:, 0]


def _frame(pair: MetricPair) -> np.ndarray:
    return unitary_frame(pair.bundle.algebra, pair.h)


def _grams(pair: MetricPair, H: HermitianStructure) -> tuple[np.ndarray, np.ndarray]:
    m = H.model.dim
    g = pair.bundle.algebra.dim
    vol = H.total_volume
    frame_inv = np.linalg.inv(_frame(pair))
    dom = np.zeros((m + g, m + g), dtype=complex)
    dom[:m, :m] = H.gram(1) * vol
    dom[m:, m:] = np.eye(g) * vol
    cod = np.zeros((m + g, m + g), dtype=complex)
    cod[:m, :m] = H.gram(m - 1) * vol
    cod[m:, m:] = frame_inv.conj().T @ frame_inv * (H.gram(m)[0, 0].real * vol)
    return dom, cod


class _Assembler:
    """Column builders for the pieces of the operator at a fixed base pair."""

    def __init__(self, pair: MetricPair, mu: Form | None = None):
        self.pair = pair
        self.H = pair.hermitian(mu)
        if self.H.n < 2:
            raise ValueError("the operator needs complex dimension n >= 2")
        self.n = self.H.n
        self.model = self.H.model
        self.m = self.model.dim
        self.algebra = pair.bundle.algebra
        self.g = self.algebra.dim
        self.theta = self.H.lee_form()
        self.connection = pair.connection
        self.F = self.connection.curvature
        self.om1 = power(self.H.omega, self.n - 1)
        self.om2 = power(self.H.omega, self.n - 2)

    def unit(self, k: int) -> Form:
        return self.model.form(1, np.eye(self.m)[k])

    def s_unit(self, k: int) -> np.ndarray:
        return np.eye(self.g)[k]

    def ddxi(self, xi: Form) -> Form:
        return symmetric_11(self.H.J, xi)

    def c_sF(self, s: np.ndarray) -> Form:
        """``c(s, F)`` in the convention ``delta R = -c(s, F)``."""
        return -(c_pair(generator(self.pair, s), self.F) * 1j)

    def forms_row(self, delta: Form) -> np.ndarray:
        return _twisted_d(self.theta, T_operator(self.H, delta).wedge(self.om2)).vec

    def bundle_row_omega(self, delta: Form) -> np.ndarray:
        return _top_coeffs(self.F.wedge_form(delta.wedge(self.om2))) * (self.n - 1)

    def bundle_row_h(self, s: np.ndarray) -> np.ndarray:
        return _top_coeffs(ddbar_h(self.connection, self.H.J, generator(self.pair, s)).wedge_form(self.om1))

    def columns(self, build) -> np.ndarray:
        cols = [np.concatenate(build(self.unit(k), np.zeros(self.g))) for k in range(self.m)]
        cols += [np.concatenate(build(self.model.zero(1), self.s_unit(k))) for k in range(self.g)]
        return np.array(cols, dtype=complex).T

    def operator(self, matrix: np.ndarray, warnings: list[str] | None = None) -> OperatorMatrix:
        dom, cod = _grams(self.pair, self.H)
        return OperatorMatrix(
            matrix,
            [("xi", self.m), ("s", self.g)],
            [("forms", self.m), ("bundle", self.g)],
            dom,
            cod,
            list(warnings or []),
        )


def base_residual(pair: MetricPair, mu: Form | None = None) -> float:
    """Largest of the Hermite-Einstein and anomaly defects at the base."""
    H = pair.hermitian(mu)
    he = pair.curvature.wedge_form(power(H.omega, H.n - 1))
    return max(float(np.abs(he.coeffs).max(initial=0.0)), pair.anomaly_defect())


def assemble_L(pair: MetricPair, mu: Form | None = None, tol: float = ON_SHELL_TOL) -> Linearization:
    """Matrices of ``L``, its elliptic part ``U`` and the rest ``K = L - U``.

    Off a solution the operator is still assembled; ``on_shell`` is then
    False and a warning is attached to every matrix.
    """
    A = _Assembler(pair, mu)

    def full(xi: Form, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        delta = A.ddxi(xi) - A.c_sF(s)
        return A.forms_row(delta), A.bundle_row_h(s) + A.bundle_row_omega(delta)

    def elliptic(xi: Form, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return A.forms_row(A.ddxi(xi)), A.bundle_row_h(s)

    res = base_residual(pair, mu)
    warnings = [] if res <= tol else [f"base pair is not a solution (residual {res:.2e}); the theory applies at solutions"]
    L = A.operator(A.columns(full), warnings)
    U = A.operator(A.columns(elliptic), warnings)
    return Linearization(L, U, L - U, res <= tol, res)


def rescaled_parts(pair: MetricPair, mu: Form | None = None) -> tuple[OperatorMatrix, OperatorMatrix]:
    """``(U', K')`` with ``L_{r omega}(r xi, s) = r^{n-1} U' + r^{n-2} K'``."""
    A = _Assembler(pair, mu)

    def u_prime(xi: Form, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        dd = A.ddxi(xi)
        return A.forms_row(dd), A.bundle_row_h(s) + A.bundle_row_omega(dd)

    def k_prime(xi: Form, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        c = A.c_sF(s)
        return -A.forms_row(c), -A.bundle_row_omega(c)

    return A.operator(A.columns(u_prime)), A.operator(A.columns(k_prime))


def rescaling_defect(pair: MetricPair, r: float, mu: Form | None = None) -> float:
    """Relative size of ``L_{r omega}(r xi, s) - r^{n-1} U' - r^{n-2} K'``."""
    n = pair.J.n
    scaled = MetricPair(pair.omega * r, pair.bundle, list(pair.h))
    L = assemble_L(scaled, mu).L.matrix.copy()
    L[:, : pair.J.model.dim] *= r
    U, K = rescaled_parts(pair, mu)
    expected = r ** (n - 1) * U.matrix + r ** (n - 2) * K.matrix
    return float(np.abs(L - expected).max() / max(np.abs(expected).max(), 1.0))


# --------------------------------------------------------------- residual map
def residual_map(
    base: MetricPair, xi: Form, s: np.ndarray | None = None, mu: Form | None = None, order: int | None = None
) -> np.ndarray:
    """``(R1, R2)`` at the pair with parameters ``(xi, s)`` around ``base``."""
    H0 = base.hermitian(mu)
    n = H0.n
    theta0 = H0.lee_form()
    pair = metric_from_parameters(base, xi, s, order)
    H = pair.hermitian(mu)
    weight = np.exp(H0.dilaton_function() - H.dilaton_function()) / (n - 1)
    r1 = _twisted_d(theta0, power(H.omega, n - 1)) * weight
    r2 = _top_coeffs(pair.curvature.wedge_form(power(H.omega, n - 1)))
    return np.concatenate([r1.vec, r2])


def fd_jacobian(
    base: MetricPair, mu: Form | None = None, steps: Sequence[float] = JACOBIAN_STEPS, order: int | None = None
) -> np.ndarray:
    """Central differences of :func:`residual_map` with one Richardson pass."""
    model = base.J.model
    m = model.dim
    g = base.bundle.algebra.dim
    cols = []
    for k in range(m + g):
        direction = np.eye(m + g)[k]

        def at(e: float) -> np.ndarray:
            return residual_map(base, model.form(1, direction[:m] * e), direction[m:] * e, mu, order)

        raw = [(at(h) - at(-h)) / (2 * h) for h in steps]
        cols.append((4 * raw[-1] - raw[-2]) / 3 if len(raw) > 1 else raw[0])
    return np.array(cols).T


def jacobian_error(base: MetricPair, mu: Form | None = None, order: int | None = None) -> float:
    """``max |L - J_fd| / max |L|`` (absolute when ``L`` vanishes)."""
    L = assemble_L(base, mu).L.matrix
    J = fd_jacobian(base, mu, order=order)
    return float(np.abs(L - J).max() / max(np.abs(L).max(), 1.0))


# -------------------------------------------------------------- structure
def closed_forms_defect(lin: Linearization, pair: MetricPair) -> float:
    """``|L(xi, 0)|`` over a basis of closed invariant 1-forms."""
    m = pair.J.model.dim
    closed = kernel(pair.J.model.dmatrix(1))
    if closed.shape[1] == 0:
        return 0.0
    return float(np.abs(lin.L.matrix[:, :m] @ closed).max())


def complex_defect(lin: Linearization, pair: MetricPair, mu: Form | None = None) -> float:
    """``|(d - theta) o L_1|``."""
    H = pair.hermitian(mu)
    m = H.model.dim
    theta = H.lee_form()
    Dtheta = H.model.dmatrix(m - 1) - H.model.wedge_matrix(theta, m - 1)
    return float(np.abs(Dtheta @ lin.L.matrix[:m]).max())


def harmonic_decomposition(lin: Linearization, pair: MetricPair) -> dict[str, Any]:
    """``Im D0 + Im L^* + H`` on the domain, where ``D0 phi = (d phi, 0)``.

    Returns the dimensions and the largest Gram inner product between
    unit vectors of different summands.
    """
    L = lin.L
    m = pair.J.model.dim
    size = L.shape[1]
    D0 = np.zeros((size, 1), dtype=complex)
    D0[:m, 0] = pair.J.model.dmatrix(0)[:, 0]
    space = GramSpace(L.domain_gram)
    im_d0 = column_space(space.to_euclid(D0)) if np.abs(D0).max() > 0 else np.zeros((size, 0))
    im_lstar = column_space(space.to_euclid(L.adjoint()))
    harmonic = kernel(np.vstack([L.matrix, D0.conj().T @ L.domain_gram]))
    harmonic = column_space(space.to_euclid(harmonic)) if harmonic.shape[1] else np.zeros((size, 0))
    parts = {"image_d": im_d0, "image_adjoint": im_lstar, "harmonic": harmonic}
    overlap = 0.0
    names = list(parts)
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            if parts[a].shape[1] and parts[b].shape[1]:
                overlap = max(overlap, float(np.abs(parts[a].conj().T @ parts[b]).max()))
    dims = {k: int(v.shape[1]) for k, v in parts.items()}
    return {"dims": dims, "total": size, "complete": sum(dims.values()) == size, "overlap": overlap}


# ------------------------------------------------------------------ symbol
@dataclass
class SymbolMatrix:
    v: np.ndarray
    matrix: np.ndarray

    def __post_init__(self) -> None:
        if np.abs(self.v).max(initial=0.0) == 0:
            raise ValueError("the covector must be nonzero")

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.matrix, compute_uv=False)

    def nullspace(self, rtol: float = 1e-9) -> np.ndarray:
        return kernel(self.matrix, rtol)


def symbol_U1(H: HermitianStructure, v: Form | np.ndarray, normalize: bool = True) -> SymbolMatrix:
    """``xi -> v ^ T(v ^ xi + Jv ^ J xi) ^ omega^{n-2}`` as a matrix on 1-forms."""
    model = H.model
    v = v if isinstance(v, Form) else model.form(1, v)
    if np.abs(v.vec).max(initial=0.0) == 0:
        raise ValueError("the covector must be nonzero")
    if normalize:
        v = v * (1.0 / H.pointwise_norm(v))
    om2 = power(H.omega, H.n - 2)
    cols = []
    for k in range(model.dim):
        xi = model.form(1, np.eye(model.dim)[k])
        vx = v.wedge(xi)
        cols.append(v.wedge(T_operator(H, vx + H.J.act(vx)).wedge(om2)).vec)
    return SymbolMatrix(v.vec.copy(), np.array(cols).T)


@dataclass
class EllipticityReport:
    trials: int
    seed: int
    failures: list[int]
    min_gap: float
    max_null_residual: float
    max_span_defect: float

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict[str, Any]:
        return {
            "trials": self.trials,
            "seed": self.seed,
            "failures": self.failures,
            "min_gap": self.min_gap,
            "max_null_residual": self.max_null_residual,
            "max_span_defect": self.max_span_defect,
            "pass": self.passed,
        }


def ellipticity_scan(H: HermitianStructure, trials: int = 200, seed: int = 0, gap: float = 1e-6) -> EllipticityReport:
    """Check that the symbol kernel is exactly the line of ``v`` for random unit covectors.

    For each trial the smallest singular value must be zero (relative
    ``1e-12``), the next one at least ``gap`` relative to the largest, and
    the null vector must be parallel to ``v``.
    """
    rng = np.random.default_rng(seed)
    failures = []
    min_gap = np.inf
    worst_null = 0.0
    worst_span = 0.0
    for trial in range(trials):
        v = rng.standard_normal(H.model.dim)
        sym = symbol_U1(H, v)
        _, s, vh = np.linalg.svd(sym.matrix)
        null = vh[-1].conj()
        unit_v = sym.v / np.linalg.norm(sym.v)
        span = float(np.linalg.norm(null - unit_v * (unit_v.conj() @ null)))
        rel_null = s[-1] / s[0]
        rel_gap = s[-2] / s[0]
        min_gap = min(min_gap, rel_gap)
        worst_null = max(worst_null, rel_null)
        worst_span = max(worst_span, span)
        if rel_null > 1e-12 or rel_gap < gap or span > 1e-9:
            failures.append(trial)
    return EllipticityReport(trials, seed, failures, float(min_gap), worst_null, worst_span)


# ---------------------------------------------------------------- duality
def duality_defect(pair: MetricPair, mu: Form | None = None, tol: float = 1e-12) -> float:
    """``|U_1^* - * U_1 *|`` with the Gram adjoint on the left.

    Only meaningful when the Lee form vanishes; otherwise ``ValueError``.
    """
    H = pair.hermitian(mu)
    if np.abs(H.lee_form().vec).max(initial=0.0) > tol:
        raise ValueError("the Lee form does not vanish; duality needs a balanced base")
    U1 = assemble_L(pair, mu).U1
    m = H.model.dim
    adjoint = U1.adjoint()
    conjugated = H.star_matrix(m - 1) @ U1.matrix @ H.star_matrix(m - 1)
    return float(np.abs(adjoint - conjugated).max())


# ------------------------------------------------------------------ index
@dataclass
class IndexReport:
    dims: dict[str, int]
    singular_values: list[float]
    ker: int
    coker: int

    @property
    def index(self) -> int:
        return self.ker - self.coker

    def to_dict(self) -> dict[str, Any]:
        return {
            "dims": self.dims,
            "singular_values": self.singular_values,
            "ker": self.ker,
            "coker": self.coker,
            "index": self.index,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _range_basis(space: GramSpace, mat: np.ndarray, block: slice, size: int) -> np.ndarray:
    full = np.zeros((size, mat.shape[1]), dtype=complex)
    full[block] = mat
    return column_space(space.to_euclid(full)) if np.abs(mat).max(initial=0.0) > 0 else np.zeros((size, 0))


def index_report(lin: Linearization | OperatorMatrix, pair: MetricPair, rtol: float = 1e-9, keep: int = 12) -> IndexReport:
    """Kernel, cokernel and index of ``L`` from ``Im d^* + Omega^0(ad)`` to ``Im d + Omega^{2n}(ad)``.

    Both spaces are taken Gram-orthonormally; the codomain part of ``L`` is
    projected orthogonally onto the target before the SVD.
    """
    op = lin.L if isinstance(lin, Linearization) else lin
    model = pair.J.model
    m = model.dim
    size = op.shape[0]
    dom_space = GramSpace(op.domain_gram)
    cod_space = GramSpace(op.codomain_gram)
    H = pair.hermitian()
    # Im d^* in 1-forms is the Gram complement of the closed forms
    d1 = model.dmatrix(1)
    co_exact = np.linalg.solve(H.gram(1), d1.conj().T @ H.gram(2)) if d1.size else np.zeros((m, 0))
    V = _range_basis(dom_space, co_exact, slice(0, m), op.shape[1])
    exact = model.dmatrix(m - 2)
    W = _range_basis(cod_space, exact, slice(0, m), size)
    g = size - m
    V = np.hstack([V, _bundle_block(dom_space, m, g)])
    W = np.hstack([W, _bundle_block(cod_space, m, g)])
    # Euclidean coordinates on both sides
    M = cod_space.to_euclid(op.matrix) @ np.linalg.solve(dom_space.chol.conj().T, np.eye(op.shape[1]))
    restricted = W.conj().T @ M @ V
    s = np.linalg.svd(restricted, compute_uv=False) if restricted.size else np.zeros(0)
    r = int((s > rtol * max(s[0], 1.0)).sum()) if s.size else 0
    dims = {"domain": int(V.shape[1]), "codomain": int(W.shape[1])}
    return IndexReport(dims, [float(x) for x in s[:keep]], int(V.shape[1]) - r, int(W.shape[1]) - r)


def _bundle_block(space: GramSpace, m: int, g: int) -> np.ndarray:
    full = np.zeros((m + g, g), dtype=complex)
    full[m:] = np.eye(g)
    return column_space(space.to_euclid(full))

"""Built-in catalog of homogeneous models with their known structures."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial, sqrt
from typing import Any, Callable

import numpy as np

from .exterior import Form, LieModel, parse_model, power, wedge
from .hermitian import ComplexStructure, HermitianStructure, canonical_volume


@dataclass
class CatalogEntry:
    name: str
    model: LieModel
    J: ComplexStructure
    omega: Form
    psi: Form | None = None
    params: dict[str, Any] = field(default_factory=dict)
    notes: str = ""
    extras: dict[str, Any] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.J.n

    def hermitian(self, omega: Form | None = None, mu: Form | None = None) -> HermitianStructure:
        omega = self.omega if omega is None else omega
        if mu is None:
            mu = canonical_volume(self.psi) if self.psi is not None else power(omega, self.n) / factorial(self.n)
        return HermitianStructure(self.J, omega, mu)


HOPF_TEXT = """\
de^1 = e^{23}
de^2 = e^{31}
de^3 = e^{12}
de^4 = 0
orientation = 4123
"""


def hopf_model(volume: float = 1.0) -> LieModel:
    model = parse_model(HOPF_TEXT, name="hopf")
    return LieModel(4, model.structure, orientation=model.orientation, volume=volume, name="hopf")


def hopf_complex_structure(model: LieModel, w: complex) -> ComplexStructure:
    """``J_w`` with ``J e^2 = e^3`` and ``J(x e^4) = e^1 + y e^4``."""
    x, y = complex(w).real, complex(w).imag
    if x == 0:
        raise ValueError("the Hopf family here needs Re w != 0")
    J = np.zeros((4, 4))
    J[2, 1] = 1.0  # e^2 -> e^3
    J[1, 2] = -1.0  # e^3 -> -e^2
    J[0, 3] = 1.0 / x  # e^4 -> (e^1 + y e^4) / x
    J[3, 3] = y / x
    J[0, 0] = -y / x  # e^1 -> -(y/x) e^1 - (x + y^2/x) e^4
    J[3, 0] = -(x + y * y / x)
    return ComplexStructure(model, J)


def hopf_eta(model: LieModel, w: complex) -> tuple[Form, Form]:
    eta1 = model.e(1) * 1j + model.e(4) * complex(w)
    eta2 = model.e(2) + model.e(3) * 1j
    return eta1, eta2


def hopf_psi(model: LieModel, w: complex) -> Form:
    eta1, eta2 = hopf_eta(model, w)
    return wedge(eta1, eta2)


def hopf_omega(model: LieModel, a: float, t: float) -> Form:
    return model.e(4, 1) * a + model.e(2, 3) * t


def hopf(w: complex = 1.0, a: float = 1.0, t: float | None = None, volume: float = 1.0) -> CatalogEntry:
    """Diagonal Hopf surface ``S^3 x S^1`` with structure ``J_w`` and ``omega_t``.

    With ``t`` omitted the entry uses ``t = a / x``, which together with the
    normalised ``psi`` solves the twisted system when ``w`` is real.
    """
    w = complex(w)
    x = w.real
    if x <= 0:
        raise ValueError("the stored orientation needs Re w > 0")
    if a <= 0:
        raise ValueError("a must be positive")
    if t is None:
        t = a / x
    if t <= 0:
        raise ValueError("t must be positive")
    model = hopf_model(volume)
    J = hopf_complex_structure(model, w)
    omega = hopf_omega(model, a, t)
    psi = hopf_psi(model, w)
    return CatalogEntry(
        name="hopf",
        model=model,
        J=J,
        omega=omega,
        psi=psi,
        params={"w": [w.real, w.imag], "a": a, "t": t},
        notes="S^3 x S^1 = SU(2) x U(1); orientation e^{4123}",
    )


def torus_model(n: int, volume: float = 1.0) -> LieModel:
    return LieModel(2 * n, {}, volume=volume, name=f"torus{2 * n}")


def standard_complex_structure(model: LieModel, pairs: list[tuple[int, int]]) -> ComplexStructure:
    """``J e^a = e^b`` and ``J e^b = -e^a`` for each 1-based pair ``(a, b)``."""
    J = np.zeros((model.dim, model.dim))
    for a, b in pairs:
        J[b - 1, a - 1] = 1.0
        J[a - 1, b - 1] = -1.0
    return ComplexStructure(model, J)


def torus(n: int = 2, scales: list[float] | None = None, volume: float = 1.0) -> CatalogEntry:
    """Flat complex torus of complex dimension ``n``.

    ``scales`` rescales each complex line of the Kaehler form.
    """
    model = torus_model(n, volume)
    pairs = [(2 * k + 1, 2 * k + 2) for k in range(n)]
    J = standard_complex_structure(model, pairs)
    scales = [1.0] * n if scales is None else list(scales)
    omega = model.zero(2)
    for (a, b), s in zip(pairs, scales):
        omega = omega + model.e(a, b) * s
    psi = model.one()
    for a, b in pairs:
        psi = wedge(psi, model.e(a) + model.e(b) * 1j)
    return CatalogEntry(
        name=f"torus{2 * n}",
        model=model,
        J=J,
        omega=omega,
        psi=psi,
        params={"n": n, "scales": scales},
        notes="abelian, d = 0",
    )


SU2_A = np.array([[1j, 1], [-1, -1j]]) / sqrt(2)


def su2_r3(w: float = 1.0, a: float = 1.0, volume: float = 1.0) -> CatalogEntry:
    """``su(2) + R^3`` with the product of the Hopf solution and flat ``C``.

    The discrete quotient by the Z^3-action generated from ``SU2_A`` does not
    change invariant data; it is carried as metadata only.
    """
    if w <= 0 or a <= 0:
        raise ValueError("need w > 0 and a > 0")
    structure = {1: {(2, 3): 1}, 2: {(3, 1): 1}, 3: {(1, 2): 1}}
    model = LieModel(6, structure, orientation=(4, 1, 2, 3, 5, 6), volume=volume, name="su2_r3")
    hopf_J = hopf_complex_structure(hopf_model(), w).matrix
    Jm = np.zeros((6, 6))
    Jm[:4, :4] = hopf_J
    Jm[5, 4] = 1.0
    Jm[4, 5] = -1.0
    J = ComplexStructure(model, Jm)
    t = a / w
    omega = model.e(4, 1) * a + model.e(2, 3) * t + model.e(5, 6)
    eta1 = model.e(1) * 1j + model.e(4) * w
    eta2 = model.e(2) + model.e(3) * 1j
    psi = wedge(eta1, eta2, model.e(5) + model.e(6) * 1j)
    return CatalogEntry(
        name="su2_r3",
        model=model,
        J=J,
        omega=omega,
        psi=psi,
        params={"w": [w, 0.0], "a": a, "t": t},
        notes="quotient of SU(2) x R^3 by rho: Z^3 -> SU(2); invariant data only",
        extras={"rho_generator": SU2_A},
    )


def h3(volume: float = 1.0) -> CatalogEntry:
    """Nilmanifold ``(0,0,0,0,0,12-34)`` with its balanced standard metric."""
    model = LieModel(6, {6: {(1, 2): 1, (3, 4): -1}}, volume=volume, name="h3")
    J = standard_complex_structure(model, [(1, 2), (3, 4), (5, 6)])
    omega = model.e(1, 2) + model.e(3, 4) + model.e(5, 6)
    psi = wedge(model.e(1) + model.e(2) * 1j, model.e(3) + model.e(4) * 1j, model.e(5) + model.e(6) * 1j)
    return CatalogEntry(
        name="h3",
        model=model,
        J=J,
        omega=omega,
        psi=psi,
        params={},
        notes="structure constants and smoke tests only",
    )


CATALOG: dict[str, Callable[..., CatalogEntry]] = {
    "hopf": hopf,
    "torus4": lambda **kw: torus(2, **kw),
    "torus6": lambda **kw: torus(3, **kw),
    "su2_r3": su2_r3,
    "h3": h3,
}


def load(name: str, **params: Any) -> CatalogEntry:
    """Catalog entry by name; unknown names raise ``KeyError``."""
    if name not in CATALOG:
        raise KeyError(f"unknown model {name!r}; choose from {sorted(CATALOG)}")
    return CATALOG[name](**params)


# ------------------------------------------------------------------ bundles
E_UPPER = np.array([[0, 1], [0, 0]], dtype=complex)
H_DIAG = np.diag([1.0, -1.0]).astype(complex)


def torus_eta(entry: CatalogEntry) -> list[Form]:
    """``e^{2k-1} + i e^{2k}`` for each complex line of a torus entry."""
    m = entry.model
    return [m.e(2 * k + 1) + m.e(2 * k + 2) * 1j for k in range(entry.n)]


def constant_bundle(algebra, J: ComplexStructure, pieces: list[tuple[np.ndarray, Form]]):
    """Bundle with ``dbar + sum_k X_k conj(eta_k)`` for matrices ``X_k`` and (1,0)-forms ``eta_k``."""
    from .gauge import AlgebraForm, HolomorphicBundle

    A = AlgebraForm.zero(algebra, J.model, 1)
    for X, eta in pieces:
        A = A + AlgebraForm.tensor(algebra, algebra.from_matrix(X), eta.conj())
    return HolomorphicBundle(algebra, J, A)


def hopf_su2_bundle(entry: CatalogEntry, coupling: float = 0.7, weight: float = 1.0):
    """Integrable SU(2) structure ``-w/(4x) H conj(eta1) + coupling E conj(eta2)`` over a Hopf entry.

    The sign of the first term is forced by integrability.
    """
    from .gauge import GaugeAlgebra

    w = complex(entry.params["w"][0], entry.params["w"][1])
    eta1, eta2 = hopf_eta(entry.model, w)
    alg = GaugeAlgebra.su(2, weight)
    return constant_bundle(alg, entry.J, [(-w / (4 * w.real) * H_DIAG, eta1), (coupling * E_UPPER, eta2)])


def torus_su2_bundle(entry: CatalogEntry, coeffs: list[float] | None = None, weight: float = 1.0):
    """Non-flat SU(2) bundle ``sum_k c_k E conj(eta_k)`` on a torus (commuting, hence integrable)."""
    from .gauge import GaugeAlgebra

    etas = torus_eta(entry)
    coeffs = [1.0, 0.5, 0.25][: len(etas)] if coeffs is None else coeffs
    alg = GaugeAlgebra.su(2, weight)
    return constant_bundle(alg, entry.J, [(c * E_UPPER, eta) for c, eta in zip(coeffs, etas)])


def torus_flat_bundle(entry: CatalogEntry, weight: float = 1.0):
    """Flat SU(2) bundle with diagonal (normal) constant data."""
    from .gauge import GaugeAlgebra

    etas = torus_eta(entry)
    alg = GaugeAlgebra.su(2, weight)
    return constant_bundle(alg, entry.J, [(0.3 * (k + 1) * H_DIAG, eta) for k, eta in enumerate(etas)])


def paired_bundle(entry: CatalogEntry, pieces: list[tuple[np.ndarray, Form]], weights: tuple[float, float]):
    """The same SU(r) data in both factors of ``su(r) + su(r)`` with ``c = w1 tr + w2 tr``.

    With ``weights = (a, -a)`` this is a standard-embedding bundle, for which
    ``c(F ^ F)`` cancels between the factors.
    """
    from .gauge import GaugeAlgebra

    r = pieces[0][0].shape[0]
    alg = GaugeAlgebra.direct_sum(GaugeAlgebra.su(r, weights[0]), GaugeAlgebra.su(r, weights[1]))
    doubled = [(np.kron(np.diag([1.0, 0.0]), X) + np.kron(np.diag([0.0, 1.0]), X), eta) for X, eta in pieces]
    return constant_bundle(alg, entry.J, doubled)

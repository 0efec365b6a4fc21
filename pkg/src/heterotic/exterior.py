"""Exterior algebra of left-invariant forms on a Lie group.

A Lie algebra is stored through its Chevalley-Eilenberg structure equations
``de^k = sum c^k_ij e^ij``.  Invariant forms are complex coefficient vectors
over strictly increasing multi-indices; every operator (wedge, d, contraction)
is a small dense matrix built once per model and cached.

Indices are 0-based internally.  The public helpers :meth:`LieModel.e` and the
``coeffs`` mapping of :class:`Form` use the 1-based labels ``e^1 ... e^m``.
"""
from __future__ import annotations

import itertools
import re
from fractions import Fraction
from functools import cached_property
from math import comb
from typing import Iterable, Mapping, Sequence

import numpy as np


class DimensionError(ValueError):
    """Raised when a product or operator would leave the exterior algebra."""


def permutation_sign(seq: Sequence[int]) -> int:
    """Sign of the permutation sorting ``seq`` (0 if an entry repeats)."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def _canonical(indices: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    return permutation_sign(indices), tuple(sorted(indices))


class LieModel:
    """A real Lie algebra given by the differentials of its dual basis.

    ``structure`` maps a 1-based generator label ``k`` to a mapping
    ``{(i, j): c}`` meaning ``de^k = sum c e^i ^ e^j`` (labels 1-based, the
    pair need not be sorted).  Missing generators are closed.  ``orientation``
    is the 1-based ordering of the positive top form and ``volume`` the total
    volume of the compact quotient against that top form.
    """

    def __init__(
        self,
        dim: int,
        structure: Mapping[int, Mapping[tuple[int, int], complex]] | None = None,
        orientation: Sequence[int] | None = None,
        volume: float = 1.0,
        name: str = "model",
    ):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.dim = dim
        self.name = name
        self.volume = float(volume)
        if self.volume <= 0:
            raise ValueError("volume must be positive")
        orientation = tuple(range(1, dim + 1)) if orientation is None else tuple(orientation)
        if sorted(orientation) != list(range(1, dim + 1)):
            raise ValueError(f"orientation {orientation} is not a permutation of 1..{dim}")
        self.orientation = orientation
        self.orientation_sign = permutation_sign([k - 1 for k in orientation])

        self.basis: list[list[tuple[int, ...]]] = [
            list(itertools.combinations(range(dim), k)) for k in range(dim + 1)
        ]
        self.index: list[dict[tuple[int, ...], int]] = [
            {multi: pos for pos, multi in enumerate(b)} for b in self.basis
        ]

        self.structure: dict[int, dict[tuple[int, int], complex]] = {}
        d1 = np.zeros((comb(dim, 2), dim), dtype=complex)
        for k, terms in (structure or {}).items():
            if not 1 <= k <= dim:
                raise ValueError(f"generator e^{k} outside 1..{dim}")
            clean: dict[tuple[int, int], complex] = {}
            for (i, j), c in terms.items():
                if not (1 <= i <= dim and 1 <= j <= dim):
                    raise ValueError(f"index pair {(i, j)} outside 1..{dim}")
                value = complex(Fraction(c)) if isinstance(c, (int, Fraction)) else complex(c)
                if i == j or value == 0:
                    continue
                sign, multi = _canonical((i - 1, j - 1))
                d1[self.index[2][multi], k - 1] += sign * value
                clean[(i, j)] = value
            self.structure[k] = clean
        self._d1 = d1
        self._wedge_tables: dict[tuple[int, int], tuple[np.ndarray, ...]] = {}
        self._dmats: dict[int, np.ndarray] = {}
        residual = np.abs(self.dmatrix(2) @ self.dmatrix(1)).max() if dim >= 3 else 0.0
        if residual > 1e-12:
            raise ValueError(f"structure equations violate d^2 = 0 (residual {residual:.3e})")

    def __repr__(self) -> str:
        return f"LieModel({self.name!r}, dim={self.dim})"

    def size(self, degree: int) -> int:
        return comb(self.dim, degree) if 0 <= degree <= self.dim else 0

    # ------------------------------------------------------------------ forms
    def form(self, degree: int, vec: Iterable[complex] | None = None) -> "Form":
        if vec is None:
            vec = np.zeros(self.size(degree), dtype=complex)
        return Form(self, degree, vec)

    def zero(self, degree: int) -> "Form":
        return self.form(degree)

    def one(self) -> "Form":
        return self.form(0, [1.0])

    def e(self, *labels: int) -> "Form":
        """The basis product ``e^{l1} ^ ... ^ e^{lk}`` for 1-based labels."""
        if not labels:
            return self.one()
        idx = [lab - 1 for lab in labels]
        if any(not 0 <= i < self.dim for i in idx):
            raise ValueError(f"labels {labels} outside 1..{self.dim}")
        sign, multi = _canonical(idx)
        out = self.zero(len(idx))
        if sign:
            vec = out.vec.copy()
            vec[self.index[len(idx)][multi]] = sign
            out = self.form(len(idx), vec)
        return out

    def from_coeffs(self, degree: int, coeffs: Mapping[tuple[int, ...], complex]) -> "Form":
        vec = np.zeros(self.size(degree), dtype=complex)
        for labels, c in coeffs.items():
            if len(labels) != degree:
                raise ValueError(f"multi-index {labels} does not have degree {degree}")
            sign, multi = _canonical([lab - 1 for lab in labels])
            if sign:
                vec[self.index[degree][multi]] += sign * complex(c)
        return self.form(degree, vec)

    def top(self) -> "Form":
        """The positively oriented top form ``e^{orientation}``."""
        return self.e(*self.orientation)

    # -------------------------------------------------------------- operators
    def _wedge_table(self, p: int, q: int) -> tuple[np.ndarray, ...]:
        key = (p, q)
        if key not in self._wedge_tables:
            rows_a, rows_b, rows_c, signs = [], [], [], []
            for ia, a in enumerate(self.basis[p]):
                for ib, b in enumerate(self.basis[q]):
                    sign, multi = _canonical(a + b)
                    if sign:
                        rows_a.append(ia)
                        rows_b.append(ib)
                        rows_c.append(self.index[p + q][multi])
                        signs.append(sign)
            self._wedge_tables[key] = (
                np.array(rows_a, dtype=int),
                np.array(rows_b, dtype=int),
                np.array(rows_c, dtype=int),
                np.array(signs, dtype=float),
            )
        return self._wedge_tables[key]

    def wedge_vectors(self, a: np.ndarray, p: int, b: np.ndarray, q: int) -> np.ndarray:
        if p + q > self.dim:
            raise DimensionError(f"degree {p}+{q} exceeds dimension {self.dim}")
        ia, ib, ic, sign = self._wedge_table(p, q)
        out = np.zeros(self.size(p + q), dtype=np.result_type(a, b, float))
        np.add.at(out, ic, sign * a[ia] * b[ib])
        return out

    def wedge_matrix(self, a: "Form", q: int) -> np.ndarray:
        """Matrix of ``b -> a ^ b`` from degree ``q`` to degree ``deg a + q``."""
        p = a.degree
        if p + q > self.dim:
            raise DimensionError(f"degree {p}+{q} exceeds dimension {self.dim}")
        ia, ib, ic, sign = self._wedge_table(p, q)
        mat = np.zeros((self.size(p + q), self.size(q)), dtype=complex)
        np.add.at(mat, (ic, ib), sign * a.vec[ia])
        return mat

    def dmatrix(self, degree: int) -> np.ndarray:
        """Matrix of the Chevalley-Eilenberg differential on ``degree``-forms."""
        if degree not in self._dmats:
            rows, cols = self.size(degree + 1), self.size(degree)
            mat = np.zeros((rows, cols), dtype=complex)
            if degree == 1:
                mat = self._d1.copy()
            elif 1 < degree < self.dim:
                for col, multi in enumerate(self.basis[degree]):
                    acc = np.zeros(rows, dtype=complex)
                    for r, i in enumerate(multi):
                        left = self._unit(multi[:r])
                        right = self._unit(multi[r + 1:])
                        piece = self.wedge_vectors(left, r, self._d1[:, i], 2)
                        piece = self.wedge_vectors(piece, r + 2, right, degree - r - 1)
                        acc += (-1) ** r * piece
                    mat[:, col] = acc
            self._dmats[degree] = mat
        return self._dmats[degree]

    def _unit(self, multi: tuple[int, ...]) -> np.ndarray:
        vec = np.zeros(self.size(len(multi)), dtype=complex)
        vec[self.index[len(multi)][multi]] = 1.0
        return vec

    def derivation_matrix(self, endo: np.ndarray, degree: int) -> np.ndarray:
        """Extend an endomorphism of 1-forms to ``degree``-forms as a derivation.

        ``endo`` acts on coefficient column vectors of 1-forms.
        """
        size = self.size(degree)
        mat = np.zeros((size, size), dtype=complex)
        for col, multi in enumerate(self.basis[degree]):
            for r, i in enumerate(multi):
                for j in range(self.dim):
                    c = endo[j, i]
                    if c == 0:
                        continue
                    sign, new = _canonical(multi[:r] + (j,) + multi[r + 1:])
                    if sign:
                        mat[self.index[degree][new], col] += sign * c
        return mat

    def automorphism_matrix(self, endo: np.ndarray, degree: int) -> np.ndarray:
        """Extend a linear map of 1-forms to ``degree``-forms multiplicatively."""
        size = self.size(degree)
        mat = np.zeros((size, size), dtype=complex)
        for col, multi in enumerate(self.basis[degree]):
            vec = np.ones(1, dtype=complex)
            deg = 0
            for i in multi:
                vec = self.wedge_vectors(vec, deg, endo[:, i].astype(complex), 1)
                deg += 1
            mat[:, col] = vec
        return mat

    def contraction_matrix(self, vector: np.ndarray, degree: int) -> np.ndarray:
        """Matrix of interior product by a vector, from ``degree`` to ``degree-1``."""
        mat = np.zeros((self.size(degree - 1), self.size(degree)), dtype=complex)
        for col, multi in enumerate(self.basis[degree]):
            for r, i in enumerate(multi):
                rest = multi[:r] + multi[r + 1:]
                mat[self.index[degree - 1][rest], col] += (-1) ** r * vector[i]
        return mat

    # ------------------------------------------------------------ Lie bracket
    @cached_property
    def bracket_constants(self) -> np.ndarray:
        """``C[k, i, j]`` with ``[e_i, e_j] = sum_k C[k, i, j] e_k``.

        Uses ``dalpha(X, Y) = -alpha([X, Y])`` for invariant forms.
        """
        m = self.dim
        C = np.zeros((m, m, m), dtype=complex)
        for pos, (i, j) in enumerate(self.basis[2]):
            C[:, i, j] = -self._d1[pos, :]
            C[:, j, i] = self._d1[pos, :]
        return C

    @property
    def is_unimodular(self) -> bool:
        trace = np.einsum("kkj->j", self.bracket_constants)
        return bool(np.abs(trace).max() < 1e-12)


class Form:
    """An invariant exterior form with complex coefficients."""

    __slots__ = ("model", "degree", "vec")

    def __init__(self, model: LieModel, degree: int, vec: Iterable[complex]):
        if not 0 <= degree <= model.dim:
            raise DimensionError(f"degree {degree} outside 0..{model.dim}")
        arr = np.array(vec, dtype=complex).reshape(-1)
        if arr.size != model.size(degree):
            raise ValueError(f"expected {model.size(degree)} coefficients, got {arr.size}")
        arr.flags.writeable = False
        self.model = model
        self.degree = degree
        self.vec = arr

    @property
    def coeffs(self) -> dict[tuple[int, ...], complex]:
        """Nonzero coefficients keyed by 1-based increasing multi-indices."""
        basis = self.model.basis[self.degree]
        return {
            tuple(i + 1 for i in basis[pos]): complex(c)
            for pos, c in enumerate(self.vec)
            if c != 0
        }

    def _check(self, other: "Form") -> None:
        if other.model is not self.model:
            raise ValueError("forms live on different models")
        if other.degree != self.degree:
            raise ValueError(f"degree mismatch: {self.degree} vs {other.degree}")

    def __add__(self, other: "Form") -> "Form":
        self._check(other)
        return Form(self.model, self.degree, self.vec + other.vec)

    def __sub__(self, other: "Form") -> "Form":
        self._check(other)
        return Form(self.model, self.degree, self.vec - other.vec)

    def __neg__(self) -> "Form":
        return Form(self.model, self.degree, -self.vec)

    def __mul__(self, scalar: complex) -> "Form":
        if isinstance(scalar, Form):
            raise TypeError("use wedge() for products of forms")
        return Form(self.model, self.degree, self.vec * complex(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar: complex) -> "Form":
        return Form(self.model, self.degree, self.vec / complex(scalar))

    def wedge(self, other: "Form") -> "Form":
        return wedge(self, other)

    def conj(self) -> "Form":
        return Form(self.model, self.degree, self.vec.conj())

    @property
    def real(self) -> "Form":
        return Form(self.model, self.degree, self.vec.real)

    @property
    def imag(self) -> "Form":
        return Form(self.model, self.degree, self.vec.imag)

    def norm_max(self) -> float:
        return float(np.abs(self.vec).max()) if self.vec.size else 0.0

    def allclose(self, other: "Form", atol: float = 1e-12) -> bool:
        self._check(other)
        return bool(np.abs(self.vec - other.vec).max(initial=0.0) <= atol)

    def __repr__(self) -> str:
        terms = [
            f"({c.real:+.6g}{c.imag:+.6g}j) e^{''.join(map(str, k))}"
            for k, c in self.coeffs.items()
            if abs(c) > 1e-15
        ]
        return f"Form(deg={self.degree}: " + (" ".join(terms) or "0") + ")"


def wedge(*forms: Form) -> Form:
    """Exterior product of one or more forms on the same model."""
    if not forms:
        raise ValueError("wedge needs at least one form")
    out = forms[0]
    for b in forms[1:]:
        if b.model is not out.model:
            raise ValueError("forms live on different models")
        vec = out.model.wedge_vectors(out.vec, out.degree, b.vec, b.degree)
        out = Form(out.model, out.degree + b.degree, vec)
    return out


def power(a: Form, k: int) -> Form:
    """``a^k`` with the convention ``a^0 = 1``."""
    out = a.model.one()
    for _ in range(k):
        out = wedge(out, a)
    return out


def d(a: Form) -> Form:
    """Chevalley-Eilenberg differential, extended to all degrees by Leibniz."""
    if a.degree == a.model.dim:
        raise DimensionError("d of a top-degree form leaves the exterior algebra")
    return Form(a.model, a.degree + 1, a.model.dmatrix(a.degree) @ a.vec)


def contract(vector: Sequence[complex], a: Form) -> Form:
    """Interior product ``i_X a`` for a vector given in the basis ``e_1..e_m``."""
    if a.degree == 0:
        raise DimensionError("cannot contract a function")
    mat = a.model.contraction_matrix(np.asarray(vector, dtype=complex), a.degree)
    return Form(a.model, a.degree - 1, mat @ a.vec)


def top_coefficient(a: Form) -> complex:
    """Coefficient of ``a`` against the model's oriented top form."""
    if a.degree != a.model.dim:
        raise DimensionError(f"expected a top form, got degree {a.degree}")
    return complex(a.vec[0] * a.model.orientation_sign)


def integrate_top(a: Form) -> complex:
    """Integral over the compact quotient: oriented top coefficient times volume."""
    return top_coefficient(a) * a.model.volume


# ------------------------------------------------------------------ file I/O
_TERM = re.compile(
    r"([+-]?)\s*([0-9./]*\s*(?:[0-9.]*j)?)\s*\*?\s*e\^\{?([0-9,]+)\}?"
)


def _parse_coefficient(text: str) -> complex:
    text = text.replace(" ", "")
    if not text:
        return 1.0
    if text.endswith("j"):
        return complex(text)
    return complex(Fraction(text))


def _parse_labels(text: str, dim_hint: int | None = None) -> tuple[int, ...]:
    if "," in text:
        return tuple(int(x) for x in text.split(",") if x)
    return tuple(int(ch) for ch in text)


def parse_model(text: str, name: str = "model") -> LieModel:
    """Parse the plain-text model format.

    One line per generator ``de^k = c e^{ij} + ...`` (``0`` for closed), plus
    optional ``dim = m``, ``orientation = 4123`` (or ``4,1,2,3``) and
    ``volume = V`` lines.  ``#`` starts a comment.  Labels with more than one
    digit need commas, as in ``e^{1,10}``.
    """
    structure: dict[int, dict[tuple[int, int], complex]] = {}
    orientation: tuple[int, ...] | None = None
    volume = 1.0
    dim: int | None = None
    max_label = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'lhs = rhs'")
        lhs, rhs = (s.strip() for s in line.split("=", 1))
        key = lhs.replace(" ", "")
        if key == "dim":
            dim = int(rhs)
        elif key == "volume":
            volume = float(Fraction(rhs))
        elif key == "orientation":
            labels = rhs.replace("e^", "").strip("{} ")
            orientation = _parse_labels(labels)
        elif key.startswith("de^"):
            k = int(key[3:].strip("{}"))
            max_label = max(max_label, k)
            terms: dict[tuple[int, int], complex] = {}
            body = rhs.replace(" ", "")
            if body not in ("0", ""):
                consumed = 0
                for match in _TERM.finditer(body):
                    if match.start() != consumed:
                        raise ValueError(f"line {lineno}: cannot parse {body[consumed:]!r}")
                    consumed = match.end()
                    sign = -1.0 if match.group(1) == "-" else 1.0
                    coef = sign * _parse_coefficient(match.group(2))
                    labels = _parse_labels(match.group(3))
                    if len(labels) != 2:
                        raise ValueError(f"line {lineno}: de^{k} must be a 2-form")
                    max_label = max(max_label, *labels)
                    terms[labels] = terms.get(labels, 0) + coef
                if consumed != len(body):
                    raise ValueError(f"line {lineno}: cannot parse {body[consumed:]!r}")
            structure[k] = terms
        else:
            raise ValueError(f"line {lineno}: unknown key {lhs!r}")
    if dim is None:
        dim = max(max_label, len(orientation or ()))
    return LieModel(dim, structure, orientation=orientation, volume=volume, name=name)


def format_model(model: LieModel) -> str:
    """Inverse of :func:`parse_model` (coefficients printed as floats)."""
    sep = "," if model.dim >= 10 else ""
    lines = [f"dim = {model.dim}"]
    for k in range(1, model.dim + 1):
        terms = model.structure.get(k, {})
        parts = []
        for (i, j), c in terms.items():
            value = c.real if abs(c.imag) < 1e-15 else c
            parts.append(f"{value:+g} e^{{{i}{sep}{j}}}")
        lines.append(f"de^{k} = " + (" ".join(parts) if parts else "0"))
    lines.append("orientation = " + sep.join(map(str, model.orientation)))
    lines.append(f"volume = {model.volume!r}")
    return "\n".join(lines) + "\n"

"""The dilaton functional, its variations along metric paths, and concave paths.

Paths are ``h_t = h_0 e^{s(t) u}`` with ``s(t) = t + kappa t^2 / 2`` and
``omega_t = omega_0 + (Id + J) d xi_t + R(h_t, h_0)`` with
``xi_t = t xi_1 + t^2 xi_2 / 2``.  Integrals of invariant top forms reduce to
coefficients times the model volume.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from math import factorial
from typing import Any, Callable, Iterable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import root

from .algebroid import MetricPair, unitary_frame
from .exterior import Form, d, integrate_top, power
from .gauge import AlgebraForm, Connection, ReductionPath, bracket_wedge, c_pair, cc_form, donaldson_R
from .hermitian import ComplexStructure, HermitianStructure
from .linalg import column_space
from .systems import appendix_constants

FD_STEPS = (1e-3, 5e-4, 2.5e-4)
MIN_SAMPLES = 33


# ------------------------------------------------------------- finite differences
@dataclass
class FiniteDifference:
    value: float
    steps: tuple[float, ...]
    richardson_order: int
    spread: float

    def to_dict(self) -> dict[str, Any]:
        return {"value": self.value, "steps": list(self.steps), "richardson_order": self.richardson_order, "spread": self.spread}


def central_difference(func: Callable[[float], float], order: int = 1, steps: Sequence[float] = FD_STEPS) -> FiniteDifference:
    """Central difference at 0 for ``order`` 1 or 2, with one Richardson pass.

    ``steps`` must halve successively; the spread between the last two
    extrapolations is reported as an error estimate.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    f0 = func(0.0) if order == 2 else 0.0
    raw = []
    for h in steps:
        fp, fm = func(h), func(-h)
        raw.append((fp - fm) / (2 * h) if order == 1 else (fp - 2 * f0 + fm) / h**2)
    extrap = [(4 * b - a) / 3 for a, b in zip(raw, raw[1:])]
    spread = abs(extrap[-1] - extrap[-2]) if len(extrap) > 1 else float("nan")
    return FiniteDifference(float(extrap[-1]), tuple(steps), 1, float(spread))


def relative_error(analytic: float, fd: float, floor: float) -> float:
    return abs(analytic - fd) / max(abs(fd), abs(analytic), floor)


# ------------------------------------------------------------------ functional
def _hermitian(pair: MetricPair | HermitianStructure, mu: Form | None) -> HermitianStructure:
    if isinstance(pair, HermitianStructure):
        return pair if mu is None else pair.with_mu(mu)
    if mu is None:
        raise ValueError("a volume form mu is needed")
    return pair.hermitian(mu)


def dilaton_values(pair: MetricPair | HermitianStructure, mu: Form | None = None) -> tuple[float, float]:
    """``(int e^{-f} omega^n/n!, int e^{f} mu)``."""
    H = _hermitian(pair, mu)
    if not H.is_positive:
        raise ValueError("omega is not positive")
    f = H.dilaton_function()
    first = float(integrate_top(H.volume_form).real) * np.exp(-f)
    second = float(integrate_top(H.mu).real) * np.exp(f)
    return first, second


def dilaton_functional(pair: MetricPair | HermitianStructure, mu: Form | None = None, tol: float = 1e-12) -> float:
    """``M = int e^{-f} omega^n / n!``, checked against ``int e^{f} mu``."""
    first, second = dilaton_values(pair, mu)
    if abs(first - second) > tol * max(abs(first), abs(second)):
        raise ArithmeticError(f"the two expressions for M disagree ({first!r} vs {second!r})")
    return first


def hopf_dilaton(a: float, x: float, t: float, volume: float = 1.0) -> float:
    """Closed form ``2 sqrt(a x t) V`` of the functional on ``omega_t`` with ``mu = |psi_w|^2``."""
    return 2.0 * np.sqrt(a * x * t) * volume


def hopf_dilaton_quoted(a: float, x: float, t: float, volume: float = 1.0) -> float:
    """The alternative constant ``sqrt(2 a x t) V``, kept for comparison reports."""
    return np.sqrt(2.0 * a * x * t) * volume


# ---------------------------------------------------------------- building blocks
def ddbar_h(connection: Connection, J: ComplexStructure, x: np.ndarray) -> AlgebraForm:
    """``dbar del^h x`` for a constant section ``x``: the derivative of ``F_{h e^{t x}}`` at 0."""
    theta = connection.theta
    alg = theta.algebra
    const = AlgebraForm.tensor(alg, np.asarray(x, dtype=complex), J.model.one())
    del_x = bracket_wedge(theta.component(J, 1, 0), const)
    return del_x.d() + bracket_wedge(theta, del_x)


def lefschetz_split(H: HermitianStructure, a: Form) -> tuple[Form, complex]:
    """``a = sigma + beta omega / n`` with ``sigma`` primitive."""
    beta = H.trace(a)
    return a - H.omega * (beta / H.n), beta


def symmetric_11(J: ComplexStructure, xi: Form) -> Form:
    """``(Id + J) d xi = 2 (d xi)^{1,1}``."""
    dxi = d(xi)
    return dxi + J.act(dxi)


def pair_at(base: MetricPair, xi: Form, u: np.ndarray, order: int | None = None) -> MetricPair:
    """``omega_0 + (Id + J) d xi + R(h_0 e^u, h_0)`` with ``h = h_0 e^u``."""
    J = base.J
    alg = base.bundle.algebra
    omega = base.omega + symmetric_11(J, xi)
    h = list(base.h)
    u = np.asarray(u, dtype=complex)
    if np.abs(u).max(initial=0.0) > 0:
        path = ReductionPath(alg, u, list(base.h), **({} if order is None else {"order": order}))
        omega = omega + donaldson_R(path, base.bundle, check=False)
        h = path.end_base()
    return MetricPair(omega.real, base.bundle, h)


def generator(base: MetricPair, s: np.ndarray) -> np.ndarray:
    """``u = i U s`` with ``U`` the unitary frame of ``h_0``."""
    return 1j * (unitary_frame(base.bundle.algebra, base.h) @ np.asarray(s, dtype=complex))


# ------------------------------------------------------------------ first variation
def first_variation(pair: MetricPair, mu: Form, xi: Form, s: np.ndarray | None = None) -> float:
    """``dM = (1 / (2 (n-1)!)) int delta omega ^ e^{-f} omega^{n-1}``.

    ``delta omega = (Id + J) d xi + i c(u, F_h)`` with ``u`` built from
    ``s`` as in :func:`generator`.
    """
    H = pair.hermitian(mu)
    n = H.n
    delta = symmetric_11(pair.J, xi)
    if s is not None and np.abs(s).max(initial=0.0) > 0:
        delta = delta + c_pair(generator(pair, s), pair.curvature) * 1j
    f = H.dilaton_function()
    top = integrate_top(delta.wedge(power(H.omega, n - 1)))
    return float((top * np.exp(-f)).real) / (2 * factorial(n - 1))


def first_variation_fd(base: MetricPair, mu: Form, xi: Form, s: np.ndarray | None = None, steps: Sequence[float] = FD_STEPS) -> FiniteDifference:
    u = np.zeros(base.bundle.algebra.dim, dtype=complex) if s is None else generator(base, s)
    return central_difference(lambda e: dilaton_functional(pair_at(base, xi * e, u * e), mu), 1, steps)


# ------------------------------------------------------------------- paths
@dataclass
class PathSample:
    """A point on a metric path with the velocities needed by the second variation.

    ``omega_xi_dot`` and ``omega_xi_ddot`` are the ``(Id + J) d xi`` parts of
    the first two derivatives of ``omega_t``; ``hvel = h^{-1} dh/dt`` and
    ``hacc`` its time derivative.
    """

    t: float
    pair: MetricPair
    mu: Form
    omega_xi_dot: Form
    omega_xi_ddot: Form
    hvel: np.ndarray
    hacc: np.ndarray

    @property
    def H(self) -> HermitianStructure:
        return self.pair.hermitian(self.mu)

    @property
    def n(self) -> int:
        return self.pair.J.n

    def _F(self) -> AlgebraForm:
        return self.pair.curvature

    def curvature_rate(self) -> AlgebraForm:
        return ddbar_h(self.pair.connection, self.pair.J, self.hvel)

    def omega_dot(self) -> Form:
        return self.omega_xi_dot + c_pair(self.hvel, self._F()) * 1j

    def bundle_acceleration(self) -> Form:
        """``i c(h^{-1}h', dbar del^h (h^{-1}h')) + i c((h^{-1}h')', F)``."""
        return (c_pair(self.hvel, self.curvature_rate()) + c_pair(self.hacc, self._F())) * 1j

    def omega_ddot(self) -> Form:
        return self.omega_xi_ddot + self.bundle_acceleration()

    @property
    def split(self) -> tuple[Form, complex]:
        return lefschetz_split(self.H, self.omega_dot())

    @property
    def sigma(self) -> Form:
        return self.split[0]

    @property
    def beta(self) -> float:
        return float(self.split[1].real)

    def primitivity_defect(self) -> float:
        return abs(self.H.trace(self.sigma))


def dilaton_rate(sample: PathSample) -> float:
    """``dM/dt = (1/2) int Lambda(omega') e^{-f} omega^n/n!``."""
    M = dilaton_functional(sample.pair, sample.mu)
    return 0.5 * M * float(sample.H.trace(sample.omega_dot()).real)


def second_variation(sample: PathSample) -> float:
    """``d^2 M / dt^2`` along the path through ``sample``.

    ``(1/2) int e^{-f} (Lambda(xi'') - |sigma|^2 + (n-2)/(2n) beta^2
    + Lambda(bundle acceleration)) omega^n / n!``.
    """
    H = sample.H
    n = sample.n
    M = dilaton_functional(sample.pair, sample.mu)
    sigma, beta = sample.split
    beta = beta.real
    density = (
        H.trace(sample.omega_xi_ddot).real
        - H.inner(sigma, sigma).real
        + (n - 2) / (2 * n) * beta**2
        + H.trace(sample.bundle_acceleration()).real
    )
    return 0.5 * M * density


@dataclass
class MetricPath:
    """``xi_t = t xi1 + t^2 xi2 / 2`` and ``h_t = h_0 e^{(t + kappa t^2/2) u}``."""

    base: MetricPair
    mu: Form
    xi1: Form
    xi2: Form | None = None
    u: np.ndarray | None = None
    kappa: float = 0.0
    order: int | None = None

    def __post_init__(self) -> None:
        model = self.base.J.model
        self.xi2 = model.zero(1) if self.xi2 is None else self.xi2
        dim = self.base.bundle.algebra.dim
        self.u = np.zeros(dim, dtype=complex) if self.u is None else np.asarray(self.u, dtype=complex)

    def s(self, t: float) -> tuple[float, float, float]:
        return t + 0.5 * self.kappa * t * t, 1.0 + self.kappa * t, self.kappa

    def pair(self, t: float) -> MetricPair:
        s, _, _ = self.s(t)
        return pair_at(self.base, self.xi1 * t + self.xi2 * (0.5 * t * t), self.u * s, self.order)

    def sample(self, t: float) -> PathSample:
        J = self.base.J
        _, sd, sdd = self.s(t)
        return PathSample(
            t,
            self.pair(t),
            self.mu,
            symmetric_11(J, self.xi1 + self.xi2 * t),
            symmetric_11(J, self.xi2),
            self.u * sd,
            self.u * sdd,
        )

    def functional(self, t: float) -> float:
        return dilaton_functional(self.pair(t), self.mu)


@dataclass
class VariationReport:
    value: float
    first_analytic: float
    first_fd: FiniteDifference
    second_analytic: float
    second_fd: FiniteDifference
    first_rel_err: float = field(init=False)
    second_rel_err: float = field(init=False)

    def __post_init__(self) -> None:
        M = abs(self.value)
        self.first_rel_err = relative_error(self.first_analytic, self.first_fd.value, 1e-9 * M)
        self.second_rel_err = relative_error(self.second_analytic, self.second_fd.value, 1e-7 * M)

    def to_dict(self) -> dict[str, Any]:
        return {
            "M": self.value,
            "first": {"analytic": self.first_analytic, "fd": self.first_fd.to_dict(), "rel_err": self.first_rel_err},
            "second": {"analytic": self.second_analytic, "fd": self.second_fd.to_dict(), "rel_err": self.second_rel_err},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def variation_report(path: MetricPath, t: float = 0.0, steps: Sequence[float] = FD_STEPS) -> VariationReport:
    sample = path.sample(t)
    return VariationReport(
        value=path.functional(t),
        first_analytic=dilaton_rate(sample),
        first_fd=central_difference(lambda e: path.functional(t + e), 1, steps),
        second_analytic=second_variation(sample),
        second_fd=central_difference(lambda e: path.functional(t + e), 2, steps),
    )


def random_path(base: MetricPair, mu: Form, rng: np.random.Generator, bundle_scale: float = 0.3, kappa: float | None = None) -> MetricPath:
    """A path with random real ``xi1, xi2`` and a random ``h_0``-self-adjoint ``u``."""
    model = base.J.model
    xi1 = Form(model, 1, rng.standard_normal(model.dim) * 0.3)
    xi2 = Form(model, 1, rng.standard_normal(model.dim) * 0.3)
    alg = base.bundle.algebra
    u = generator(base, rng.standard_normal(alg.dim) * bundle_scale)
    kappa = float(rng.standard_normal()) * 0.5 if kappa is None else kappa
    return MetricPath(base, mu, xi1, xi2, u, kappa)


# ------------------------------------------------------------------ concave paths
def concave_path_residual(samples: Sequence[PathSample]) -> list[float]:
    """Residual of the concave-path equation at each sample.

    ``Lambda(xi'') - (2-n)/(2n) beta^2 + Lambda(bundle acceleration)`` where
    ``xi''`` is the ``(Id + J) d xi`` part of the acceleration.
    """
    if len(samples) < 3:
        raise ValueError("a path needs at least 3 samples")
    out = []
    for smp in samples:
        H = smp.H
        n = smp.n
        beta = smp.beta
        lhs = H.trace(smp.omega_xi_ddot).real
        rhs = (2 - n) / (2 * n) * beta**2 - H.trace(smp.bundle_acceleration()).real
        out.append(float(abs(lhs - rhs)))
    return out


def samples_from_grid(
    base: MetricPair, mu: Form, ts: Sequence[float], xis: Sequence[Form], s_values: Sequence[float] | None = None, u: np.ndarray | None = None
) -> list[PathSample]:
    """Samples at interior grid points, with derivatives by central differencing.

    ``xis[k]`` is ``xi`` at ``ts[k]``; the bundle metric is
    ``h_0 e^{s_k u}``.  The grid must be uniform.
    """
    ts = np.asarray(ts, dtype=float)
    if len(ts) < 3:
        raise ValueError("a path needs at least 3 samples")
    dt = np.diff(ts)
    if np.abs(dt - dt[0]).max() > 1e-12 * max(1.0, abs(dt[0])):
        raise ValueError("the grid must be uniform")
    dt = dt[0]
    J = base.J
    alg = base.bundle.algebra
    u = np.zeros(alg.dim, dtype=complex) if u is None else np.asarray(u, dtype=complex)
    s_values = np.zeros(len(ts)) if s_values is None else np.asarray(s_values, dtype=float)
    out = []
    for k in range(1, len(ts) - 1):
        xi_dot = (xis[k + 1] - xis[k - 1]) * (1 / (2 * dt))
        xi_ddot = (xis[k + 1] - xis[k] * 2 + xis[k - 1]) * (1 / dt**2)
        s_dot = (s_values[k + 1] - s_values[k - 1]) / (2 * dt)
        s_ddot = (s_values[k + 1] - 2 * s_values[k] + s_values[k - 1]) / dt**2
        out.append(
            PathSample(
                float(ts[k]),
                pair_at(base, xis[k], u * s_values[k]),
                mu,
                symmetric_11(J, xi_dot),
                symmetric_11(J, xi_ddot),
                u * s_dot,
                u * s_ddot,
            )
        )
    return out


def concave_path(
    base: MetricPair,
    mu: Form,
    xi_dir: Form,
    u: np.ndarray,
    t_max: float = 1.0,
    count: int = MIN_SAMPLES,
    rtol: float = 1e-12,
    velocity: float = 1.0,
) -> list[PathSample]:
    """Solve the concave-path equation with ``xi_t = a(t) xi_dir`` and ``h_t = h_0 e^{t u}``.

    The path starts at ``a = 0`` with ``a' = velocity``.

    The scalar ``a`` is integrated together with ``R(h_t, h_0)``; each
    returned sample carries the exact acceleration from the equation, so its
    residual reflects only the integration error.
    """
    J = base.J
    model = J.model
    D = symmetric_11(J, xi_dir)
    u = np.asarray(u, dtype=complex)
    alg = base.bundle.algebra
    base_path = ReductionPath(alg, u, list(base.h))
    n = J.n

    def state_pair(t: float, a: float, Rvec: np.ndarray) -> MetricPair:
        omega = base.omega + D * a + Form(model, 2, Rvec)
        h = list(base.h) + ([u * t] if t != 0 else [])
        return MetricPair(omega.real, base.bundle, h)

    def curvature_at(t: float) -> Connection:
        return base.bundle.chern_connection(base_path.ad_hinv(t))

    def accel(t: float, a: float, adot: float, Rvec: np.ndarray) -> tuple[float, Form]:
        conn = curvature_at(t)
        H = HermitianStructure(J, base.omega + D * a + Form(model, 2, Rvec), check=False)
        F = conn.curvature
        Rdot = c_pair(u, F) * 1j
        beta = H.trace(D * adot + Rdot).real
        bundle_acc = c_pair(u, ddbar_h(conn, J, u)) * 1j
        lamD = H.trace(D).real
        if abs(lamD) < 1e-14:
            raise ValueError("xi_dir has no trace part, so the path equation cannot be solved for it")
        addot = ((2 - n) / (2 * n) * beta**2 - H.trace(bundle_acc).real) / lamD
        return addot, Rdot

    size = model.size(2)

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        addot, Rdot = accel(t, y[0], y[1], y[2:])
        return np.concatenate([[y[1], addot], Rdot.vec.real])

    ts = np.linspace(0.0, t_max, count)
    y0 = np.zeros(2 + size)
    y0[1] = velocity
    sol = solve_ivp(rhs, (0.0, t_max), y0, t_eval=ts, method="DOP853", rtol=rtol, atol=1e-14)
    if not sol.success:
        raise RuntimeError(f"path integration failed: {sol.message}")
    samples = []
    for k, t in enumerate(sol.t):
        a, adot, Rvec = sol.y[0, k], sol.y[1, k], sol.y[2:, k]
        addot, _ = accel(t, a, adot, Rvec)
        samples.append(
            PathSample(float(t), state_pair(float(t), a, Rvec), mu, D * adot, D * addot, u.copy(), np.zeros_like(u))
        )
    return samples


def linear_path(base: MetricPair, mu: Form, xi: Form, t_max: float = 1.0, count: int = MIN_SAMPLES) -> list[PathSample]:
    """``omega_t = omega_0 + t (Id + J) d xi`` with the bundle metric fixed."""
    J = base.J
    zero_u = np.zeros(base.bundle.algebra.dim, dtype=complex)
    velocity = symmetric_11(J, xi)
    still = J.model.zero(2)
    return [
        PathSample(float(t), pair_at(base, xi * t, zero_u), mu, velocity, still, zero_u, zero_u)
        for t in np.linspace(0.0, t_max, count)
    ]


# ---------------------------------------------------------------------- sweeps
SWEEP_COLUMNS = ("t", "M", "dM", "d2M", "residual")


@dataclass
class SweepTable:
    rows: list[dict[str, float]]

    @property
    def values(self) -> np.ndarray:
        return np.array([r["M"] for r in self.rows])

    def second_differences(self) -> np.ndarray:
        M = self.values
        return M[2:] - 2 * M[1:-1] + M[:-2] if len(M) >= 3 else np.zeros(0)

    def slope_changes(self) -> np.ndarray:
        """Differences of consecutive secant slopes; works on non-uniform grids."""
        t = np.array([r["t"] for r in self.rows])
        slopes = np.diff(self.values) / np.diff(t) if len(t) >= 2 else np.zeros(0)
        return np.diff(slopes)

    def is_concave(self, tol: float = 1e-10) -> bool:
        return bool((self.slope_changes() <= tol).all())

    def is_increasing(self) -> bool:
        return bool((np.diff(self.values) > 0).all())

    def argmax(self) -> int:
        return int(np.argmax(self.values))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for r in self.rows:
            writer.writerow([repr(float(r[c])) for c in SWEEP_COLUMNS])
        return buf.getvalue()


def concavity_sweep(samples: Sequence[PathSample]) -> SweepTable:
    """``M``, ``dM/dt``, analytic ``d^2M/dt^2`` and the path residual per sample."""
    samples = list(samples)
    if not samples:
        return SweepTable([])
    residuals = concave_path_residual(samples) if len(samples) >= 3 else [float("nan")] * len(samples)
    rows = []
    for smp, res in zip(samples, residuals):
        rows.append({
            "t": smp.t,
            "M": dilaton_functional(smp.pair, smp.mu),
            "dM": dilaton_rate(smp),
            "d2M": second_variation(smp),
            "residual": res,
        })
    return SweepTable(rows)


def functional_sweep(build: Callable[[float], HermitianStructure], ts: Iterable[float]) -> SweepTable:
    """``M`` along a family of structures, with derivatives left to differencing."""
    ts = list(ts)
    values = [dilaton_functional(build(t)) for t in ts]
    dM = np.gradient(values, ts) if len(ts) >= 2 else np.zeros(len(ts))
    d2M = np.gradient(dM, ts) if len(ts) >= 3 else np.zeros(len(ts))
    return SweepTable([
        {"t": t, "M": m, "dM": float(a), "d2M": float(b), "residual": float("nan")}
        for t, m, a, b in zip(ts, values, dM, d2M)
    ])


def hopf_sweep(a: float, x: float, ts: Iterable[float], volume: float = 1.0) -> SweepTable:
    """The functional on ``omega_t`` over the diagonal Hopf surface (class fixed by ``a``)."""
    from .models import hopf

    def build(t: float) -> HermitianStructure:
        return hopf(w=x, a=a, t=t, volume=volume).hermitian()

    return functional_sweep(build, ts)


# ------------------------------------------------------------- balanced classes
def omega_from_power(J: ComplexStructure, target: Form, guess: Form, tol: float = 1e-14) -> Form:
    """The real (1,1)-form ``omega`` near ``guess`` with ``omega^{n-1} = target``."""
    n = J.n
    if n == 1:
        return guess
    model = J.model
    basis = column_space(J.projector(2, 1).real)
    basis = np.linalg.qr(np.real(basis))[0] if basis.size else basis
    c0 = basis.T @ guess.vec.real

    def fun(c: np.ndarray) -> np.ndarray:
        om = Form(model, 2, basis @ c)
        return (power(om, n - 1) - target).vec.real

    def jac(c: np.ndarray) -> np.ndarray:
        om = Form(model, 2, basis @ c)
        W = model.wedge_matrix(power(om, n - 2), 2).real if n > 2 else np.eye(model.size(2))
        return (n - 1) * W @ basis

    sol = root(fun, c0, jac=jac, method="lm", options={"xtol": tol, "ftol": tol})
    om = Form(model, 2, basis @ sol.x)
    if np.abs(fun(sol.x)).max() > 1e-10 * max(1.0, np.abs(target.vec).max()):
        raise ArithmeticError("no (n-1)-th root of the target near the guess")
    return om


@dataclass
class BalancedPath:
    """``omega_t^{n-1} = omega^{n-1} + dd^c(t phi1 + t^2 phi2 / 2)`` and ``h_t = h_0 e^{(t + kappa t^2/2) u}``."""

    base: MetricPair
    mu: Form
    tau0: Form
    phi1: Form
    phi2: Form | None = None
    u: np.ndarray | None = None
    kappa: float = 0.0
    order: int | None = None

    def __post_init__(self) -> None:
        n = self.base.J.n
        appendix_constants(n)
        model = self.base.J.model
        self.phi2 = model.zero(2 * n - 4) if self.phi2 is None else self.phi2
        dim = self.base.bundle.algebra.dim
        self.u = np.zeros(dim, dtype=complex) if self.u is None else np.asarray(self.u, dtype=complex)

    def phi(self, t: float) -> tuple[Form, Form, Form]:
        return self.phi1 * t + self.phi2 * (0.5 * t * t), self.phi1 + self.phi2 * t, self.phi2

    def s(self, t: float) -> tuple[float, float, float]:
        return t + 0.5 * self.kappa * t * t, 1.0 + self.kappa * t, self.kappa

    def pair(self, t: float) -> tuple[MetricPair, Form]:
        """The pair at ``t`` and ``R(h_t, h_0)``."""
        J = self.base.J
        n = J.n
        phi, _, _ = self.phi(t)
        target = power(self.base.omega, n - 1) + J.ddc(phi)
        omega = omega_from_power(J, target, self.base.omega) if np.abs(J.ddc(phi).vec).max() > 0 else self.base.omega
        s, _, _ = self.s(t)
        alg = self.base.bundle.algebra
        if np.abs(self.u).max(initial=0.0) > 0 and s != 0:
            path = ReductionPath(alg, self.u * s, list(self.base.h))
            R = donaldson_R(path, self.base.bundle, check=False)
            h = path.end_base()
        else:
            R, h = J.model.zero(2), list(self.base.h)
        return MetricPair(omega, self.base.bundle, h), R

    def functional(self, t: float) -> float:
        pair, R = self.pair(t)
        return appendix_functional(pair, self.mu, self.tau0, R)


def appendix_functional(pair: MetricPair, mu: Form, tau0: Form, R: Form) -> float:
    """``int gamma e^{(lambda-2) f} omega^n - (tau0 + R(h, h_0)) ^ omega^{n-1}``."""
    H = pair.hermitian(mu)
    n = H.n
    lam, gamma = appendix_constants(n)
    f = H.dilaton_function()
    dil = gamma * np.exp((lam - 2) * f) * integrate_top(power(H.omega, n))
    don = integrate_top((tau0 + R).wedge(power(H.omega, n - 1)))
    return float((dil - don).real)


def gauge_energy(connection: Connection, J: ComplexStructure, omega: Form, x: np.ndarray) -> float:
    """``int |d^h x|^2_c omega^n`` with ``i c(del^h x ^ dbar x) ^ omega^{n-1} = |d^h x|^2_c omega^n / n``."""
    from .gauge import c_wedge

    theta = connection.theta
    const = AlgebraForm.tensor(theta.algebra, np.asarray(x, dtype=complex), J.model.one())
    dx = bracket_wedge(theta, const)
    n = J.n
    dens = c_wedge(dx.component(J, 1, 0), dx.component(J, 0, 1)) * 1j
    return float((integrate_top(dens.wedge(power(omega, n - 1))) * n).real)


def appendix_hessian_terms(path: BalancedPath, t: float = 0.0) -> dict[str, float]:
    """The second derivative of the balanced-class functional split into its terms."""
    J = path.base.J
    n = J.n
    lam, _ = appendix_constants(n)
    pair, _ = path.pair(t)
    H = pair.hermitian(path.mu)
    om = H.omega
    f = H.dilaton_function()
    _, phid, phidd = path.phi(t)
    _, sd, sdd = path.s(t)
    conn = pair.connection
    F = conn.curvature
    hvel = path.u * sd
    hacc = path.u * sdd
    ddphi = J.ddc(phid)
    residual = J.ddc(om * np.exp((lam - 2) * f)) - cc_form(conn)
    # Lefschetz split ddc(phi') = sigma ^ omega^{n-2} + beta omega^{n-1} / n!
    beta = H.star(ddphi.wedge(om)).vec[0].real
    rest = ddphi - power(om, n - 1) * (beta / factorial(n))
    W = J.model.wedge_matrix(power(om, n - 2), 2) if n > 2 else np.eye(J.model.size(2))
    sig_vec, *_ = np.linalg.lstsq(W, rest.vec, rcond=None)
    sigma_wedge = Form(J.model, 2, sig_vec).wedge(power(om, n - 2))
    vol = integrate_top(H.volume_form).real
    k = (n * (lam - 2) + 2) / (2 * n * (n - 1))
    terms = {
        "residual": float(integrate_top(phidd.wedge(residual)).real),
        "dilaton": float(np.exp((lam - 2) * f) * (k * beta**2 - H.inner(sigma_wedge, sigma_wedge).real) * vol / factorial(n - 1)),
        "mixed": float((-2j * integrate_top(c_pair(hvel, F).wedge(ddphi))).real),
        "gauge": -gauge_energy(conn, J, om, hvel) / n,
        "gauge_rate": float((-1j * integrate_top(c_pair(hacc, F).wedge(power(om, n - 1)))).real),
    }
    return terms


def appendix_hessian(path: BalancedPath, t: float = 0.0) -> float:
    return float(sum(appendix_hessian_terms(path, t).values()))

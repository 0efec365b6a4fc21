"""Residuals of the coupled metric/connection systems on invariant data.

Every norm is the L^2 norm induced by the Hermitian form being tested.  On
invariant forms functions are constants, so a scalar residual ``c`` has L^2
norm ``|c| sqrt(vol)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .algebroid import MetricPair
from .exterior import Form, d, power
from .gauge import AlgebraForm, Connection, cc_form
from .hermitian import HermitianStructure, SUnStructure, canonical_volume

EXACT_TOL = 1e-10
QUADRATURE_TOL = 1e-8


@dataclass
class ResidualReport:
    """Named residual norms with per-equation tolerances."""

    residuals: dict[str, float]
    tol: dict[str, float]
    model: str = ""
    params: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.residuals[k] <= self.tol[k] for k in self.residuals)

    def failures(self) -> list[str]:
        return [k for k in self.residuals if self.residuals[k] > self.tol[k]]

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.model,
            "params": self.params,
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "tol": {k: float(v) for k, v in self.tol.items()},
            "pass": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _report(residuals: dict[str, float], tol: float | dict[str, float], model: str, params: dict | None) -> ResidualReport:
    tols = {k: (tol.get(k, EXACT_TOL) if isinstance(tol, dict) else tol) for k in residuals}
    return ResidualReport(residuals, tols, model, dict(params or {}))


def _scalar_norm(value: complex, H: HermitianStructure) -> float:
    return float(abs(value) * np.sqrt(H.total_volume))


def _as_connection(theta: Connection | AlgebraForm | None, H: HermitianStructure) -> Connection | None:
    if theta is None or isinstance(theta, Connection):
        return theta
    return Connection(theta)


def hermite_einstein_norm(theta: Connection | None, H: HermitianStructure) -> float:
    """``|F ^ omega^{n-1}|``; zero for a missing connection."""
    if theta is None:
        return 0.0
    return theta.curvature.wedge_form(power(H.omega, H.n - 1)).norm(H)


def anomaly_form(H: HermitianStructure, theta: Connection | None, weight: float | None = None) -> Form:
    """``dd^c(e^{w} omega) - c(F ^ F)``, with ``e^{w}`` a constant factor."""
    model = H.model
    omega = H.omega if weight is None else H.omega * np.exp(weight)
    out = H.J.ddc(omega)
    if theta is not None:
        out = out - cc_form(theta)
    return out if model.dim >= 4 else model.zero(min(4, model.dim))


def _psi_form(psi: Form | SUnStructure, H: HermitianStructure) -> Form:
    if isinstance(psi, SUnStructure):
        return psi.psi
    return SUnStructure(H.J, psi).psi


def twisted_hs_residual(
    psi: Form | SUnStructure,
    H: HermitianStructure,
    theta: Connection | AlgebraForm | None = None,
    normalization: bool = True,
    tol: float | dict[str, float] = EXACT_TOL,
    model: str = "",
    params: dict | None = None,
) -> ResidualReport:
    """Hermite-Einstein, ``d psi = theta_omega ^ psi``, ``d theta_omega = 0`` and the anomaly.

    With ``normalization`` the equation ``|psi|_omega = 1`` is included.
    ``psi`` must have type (n,0); otherwise ``ValueError`` is raised.
    """
    psi = _psi_form(psi, H)
    theta = _as_connection(theta, H)
    lee = H.lee_form()
    res = {
        "hermite_einstein": hermite_einstein_norm(theta, H),
        "psi_lee": H.l2_norm(d(psi) - lee.wedge(psi)) if psi.degree < H.model.dim else 0.0,
        "lee_closed": H.l2_norm(d(lee)),
        "anomaly": H.l2_norm(anomaly_form(H, theta)),
    }
    if normalization:
        res["psi_norm"] = _scalar_norm(H.psi_norm(psi) - 1.0, H)
    return _report(res, tol, model, params)


def hs_residual(
    H: HermitianStructure,
    theta: Connection | AlgebraForm | None,
    Omega: Form | SUnStructure,
    tol: float | dict[str, float] = EXACT_TOL,
    model: str = "",
    params: dict | None = None,
) -> ResidualReport:
    """Hermite-Einstein, ``d^* omega = d^c log |Omega|_omega`` and the anomaly.

    ``Omega`` must be a closed (n,0)-form.  Its norm is constant on invariant
    data, so the right side of the second equation vanishes.
    """
    Omega = _psi_form(Omega, H)
    if Omega.degree < H.model.dim and d(Omega).norm_max() > 1e-12 * max(1.0, Omega.norm_max()):
        raise ValueError("Omega is not closed")
    theta = _as_connection(theta, H)
    res = {
        "hermite_einstein": hermite_einstein_norm(theta, H),
        "conformally_balanced": H.l2_norm(H.codifferential(H.omega)),
        "anomaly": H.l2_norm(anomaly_form(H, theta)),
    }
    return _report(res, tol, model, params)


def twisted_from_hs(H: HermitianStructure, Omega: Form) -> Form:
    """The normalised section ``Omega / |Omega|_omega``."""
    return Omega * (1.0 / H.psi_norm(Omega))


def calabi_residual(
    pair: MetricPair,
    mu: Form,
    tol: float | dict[str, float] = EXACT_TOL,
    model: str = "",
    params: dict | None = None,
) -> ResidualReport:
    """Hermite-Einstein and ``d(e^{-f} omega^{n-1}) = 0`` for a metric pair.

    ``lee_exact`` measures ``theta_omega + df`` directly; ``df`` vanishes on
    invariant data.  The two second-equation residuals agree up to the factor
    ``e^{-f}`` times the norm of ``omega^{n-1}``-wedging.
    """
    H = pair.hermitian(mu)
    n = H.n
    f = H.dilaton_function()
    om = power(H.omega, n - 1)
    res = {
        "hermite_einstein": hermite_einstein_norm(pair.connection, H),
        "conformally_balanced": H.l2_norm(d(om) * np.exp(-f)),
        "lee_exact": H.l2_norm(H.lee_form()),
    }
    return _report(res, tol, model, params)


def calabi_residual_at(base: MetricPair, xi: Form, s: np.ndarray | None, mu: Form, **kw: Any) -> ResidualReport:
    """:func:`calabi_residual` at the pair parametrised by ``(xi, s)`` around ``base``."""
    from .algebroid import metric_from_parameters

    return calabi_residual(metric_from_parameters(base, xi, s), mu, **kw)


# ------------------------------------------------------------ balanced class
def appendix_constants(n: int) -> tuple[float, float]:
    """``(lambda, gamma) = (2(n-1)/(n-2), (n-2)/n)``; ``n = 2`` is singular."""
    if n <= 2:
        raise ValueError("the balanced-class constants need complex dimension n >= 3")
    lam = 2.0 * (n - 1) / (n - 2)
    return lam, (n - 2) / n


def appendix_residual(
    pair: MetricPair,
    mu: Form,
    tau0: Form | None = None,
    base: MetricPair | None = None,
    tol: float | dict[str, float] = EXACT_TOL,
    model: str = "",
    params: dict | None = None,
) -> ResidualReport:
    """Hermite-Einstein, ``d omega^{n-1} = 0`` and ``dd^c(e^{(lambda-2) f} omega) = c(F ^ F)``.

    When ``tau0`` and ``base`` are given, ``dd^c tau0 = c(F_0 ^ F_0)`` is
    reported as ``tau0``.
    """
    H = pair.hermitian(mu)
    n = H.n
    lam, _ = appendix_constants(n)
    f = H.dilaton_function()
    theta = pair.connection
    res = {
        "hermite_einstein": hermite_einstein_norm(theta, H),
        "balanced": H.l2_norm(d(power(H.omega, n - 1))),
        "anomaly": H.l2_norm(anomaly_form(H, theta, (lam - 2) * f)),
    }
    if tau0 is not None:
        if base is None:
            raise ValueError("checking tau0 needs the base pair")
        res["tau0"] = H.l2_norm(H.J.ddc(tau0) - cc_form(base.connection))
    return _report(res, tol, model, params)


def appendix_to_hs(pair: MetricPair, mu: Form) -> MetricPair:
    """``(e^{2f/(n-2)} omega, h)``."""
    H = pair.hermitian(mu)
    n = H.n
    appendix_constants(n)
    f = H.dilaton_function()
    return MetricPair(pair.omega * np.exp(2.0 * f / (n - 2)), pair.bundle, list(pair.h))


def hs_to_appendix(pair: MetricPair, Omega: Form) -> MetricPair:
    """``(|Omega|^{1/(n-1)} omega, h)``."""
    H = pair.hermitian(canonical_volume(Omega))
    n = H.n
    appendix_constants(n)
    return MetricPair(pair.omega * H.psi_norm(Omega) ** (1.0 / (n - 1)), pair.bundle, list(pair.h))


def appendix_bridge(
    pair: MetricPair, Omega: Form, tol: float | dict[str, float] = QUADRATURE_TOL, model: str = "", params: dict | None = None
) -> ResidualReport:
    """Residuals of the Hull-Strominger system at the rescaled pair, plus the round trip."""
    mu = canonical_volume(Omega)
    image = appendix_to_hs(pair, mu)
    H = image.hermitian(mu)
    report = hs_residual(H, image.connection, Omega, tol=tol, model=model, params=params)
    back = hs_to_appendix(image, Omega)
    report.residuals["round_trip"] = float(np.abs(back.omega.vec - pair.omega.vec).max())
    report.tol["round_trip"] = tol.get("round_trip", QUADRATURE_TOL) if isinstance(tol, dict) else tol
    return report


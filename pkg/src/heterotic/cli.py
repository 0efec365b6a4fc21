"""Command-line front end: residual checks, sweeps and operator reports.

Every command prints a JSON report on stdout (sorted keys) and exits with
0 when its checks pass, 1 when one fails and 2 on a usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from . import cohomology, linearization, models, systems, variation
from .algebroid import MetricPair, trivial_bundle
from .exterior import Form
from .gauge import QUADRATURE_ORDER
from .hermitian import HermitianStructure, canonical_volume

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SYSTEMS = ("twisted-hs", "hs", "calabi", "appendix")
BUNDLES = ("default", "trivial", "su2", "flat")
COMMANDS = ("check", "functional", "variation", "path", "linearize", "cohomology", "symbol", "catalog")


class UsageError(Exception):
    pass


# ------------------------------------------------------------------ config
def parse_grid(text: str) -> list[float]:
    """``value`` or ``min:max:count`` (inclusive, evenly spaced)."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return [float(parts[0])]
        if len(parts) == 3:
            lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
            if count < 1:
                raise ValueError
            return [float(v) for v in np.linspace(lo, hi, count)]
    except ValueError:
        pass
    raise UsageError(f"cannot read grid {text!r}; use a number or min:max:count")


def parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise UsageError(f"cannot read complex number {text!r}") from None


@dataclass
class RunConfig:
    command: str
    model: str = "hopf"
    w: complex = 1.0
    a: float = 1.0
    x: float | None = None
    t: list[float] | None = None
    system: str = "twisted-hs"
    bundle: str = "default"
    tol: float | None = None
    quad_order: int = QUADRATURE_ORDER
    seed: int = 0
    trials: int | None = None
    json_path: str | None = None
    csv_path: str | None = None

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        cfg = cls(
            command=ns.command,
            model=ns.model,
            w=parse_complex(ns.w),
            a=ns.a,
            x=ns.x,
            t=parse_grid(ns.t) if ns.t is not None else None,
            system=ns.system,
            bundle=ns.bundle,
            tol=ns.tol,
            quad_order=ns.quad_order,
            seed=ns.seed,
            trials=ns.trials,
            json_path=ns.json,
            csv_path=ns.csv,
        )
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.model not in models.CATALOG:
            raise UsageError(f"unknown model {self.model!r}; choose from {', '.join(sorted(models.CATALOG))}")
        if self.system not in SYSTEMS:
            raise UsageError(f"unknown system {self.system!r}; choose from {', '.join(SYSTEMS)}")
        if self.quad_order < 2:
            raise UsageError("--quad-order must be at least 2")
        if self.trials is not None and self.trials < 1:
            raise UsageError("--trials must be positive")

    def params(self) -> dict[str, Any]:
        out: dict[str, Any] = {"model": self.model}
        if self.model == "hopf":
            out.update(w=[self.w.real, self.w.imag], a=self.a)
        elif self.model == "su2_r3":
            out.update(w=self.w.real, a=self.a)
        if self.t is not None:
            out["t"] = self.t if len(self.t) > 1 else self.t[0]
        return out


# ------------------------------------------------------------------ setup
@dataclass
class Setup:
    entry: models.CatalogEntry
    pair: MetricPair
    mu: Form

    @property
    def H(self) -> HermitianStructure:
        return self.pair.hermitian(self.mu)


def load_entry(cfg: RunConfig, t: float | None = None) -> models.CatalogEntry:
    try:
        if cfg.model == "hopf":
            return models.hopf(w=cfg.w, a=cfg.a, t=t)
        if cfg.model == "su2_r3":
            return models.su2_r3(w=cfg.w.real, a=cfg.a)
        return models.load(cfg.model)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def make_bundle(cfg: RunConfig, entry: models.CatalogEntry):
    kind = cfg.bundle
    if kind == "default":
        kind = "flat" if entry.name.startswith("torus") else "trivial"
    if kind == "trivial":
        return trivial_bundle(entry.J)
    if kind == "su2":
        if entry.name == "hopf":
            return models.hopf_su2_bundle(entry)
        if entry.name.startswith("torus"):
            return models.torus_su2_bundle(entry)
    if kind == "flat" and entry.name.startswith("torus"):
        return models.torus_flat_bundle(entry)
    raise UsageError(f"bundle {cfg.bundle!r} is not available on {entry.name}")


def build(cfg: RunConfig) -> Setup:
    t = cfg.t[0] if cfg.t is not None and cfg.command == "check" else None
    entry = load_entry(cfg, t)
    pair = MetricPair(entry.omega, make_bundle(cfg, entry))
    mu = canonical_volume(entry.psi) if entry.psi is not None else entry.model.top()
    return Setup(entry, pair, mu)


# ---------------------------------------------------------------- commands
def cmd_check(cfg: RunConfig) -> dict[str, Any]:
    setup = build(cfg)
    tol = systems.EXACT_TOL if cfg.tol is None else cfg.tol
    H = setup.H
    theta = setup.pair.connection
    params = cfg.params()
    if cfg.system == "twisted-hs":
        psi = setup.entry.psi * (1.0 / H.psi_norm(setup.entry.psi))
        report = systems.twisted_hs_residual(psi, H, theta, tol=tol, model=cfg.model, params=params)
    elif cfg.system == "hs":
        try:
            report = systems.hs_residual(H, theta, setup.entry.psi, tol=tol, model=cfg.model, params=params)
        except ValueError as exc:
            return {"model": cfg.model, "params": params, "system": cfg.system, "error": str(exc), "pass": False}
    elif cfg.system == "calabi":
        report = systems.calabi_residual(setup.pair, setup.mu, tol=tol, model=cfg.model, params=params)
    else:
        try:
            systems.appendix_constants(H.n)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        report = systems.appendix_residual(setup.pair, setup.mu, tol=tol, model=cfg.model, params=params)
    out = report.to_dict()
    out["system"] = cfg.system
    return out


def cmd_functional(cfg: RunConfig) -> tuple[dict[str, Any], str]:
    ts = cfg.t or parse_grid("0.1:10:100")
    if min(ts) <= 0:
        raise UsageError("--t values must be positive")
    if cfg.model == "hopf":
        x = cfg.w.real if cfg.x is None else cfg.x
        table = variation.hopf_sweep(cfg.a, x, ts)
        closed = [variation.hopf_dilaton(cfg.a, x, t) for t in ts]
        quoted = [variation.hopf_dilaton_quoted(cfg.a, x, t) for t in ts]
        err = max(abs(m - c) / c for m, c in zip(table.values, closed))
        extra = {
            "closed_form": "2 sqrt(a x t) V",
            "closed_form_rel_err": err,
            "quoted_form": "sqrt(2 a x t) V",
            "quoted_ratio": float(table.values[0] / quoted[0]),
        }
        passed = err <= 1e-12
    else:
        entry = load_entry(cfg)
        table = variation.functional_sweep(lambda t: entry.hermitian(omega=entry.omega * t), ts)
        extra = {"family": "t omega"}
        passed = True
    out = {
        "model": cfg.model,
        "params": cfg.params(),
        "rows": len(table.rows),
        "concave": table.is_concave(),
        "increasing": table.is_increasing(),
        "pass": passed,
        **extra,
    }
    return out, table.to_csv()


def cmd_variation(cfg: RunConfig) -> dict[str, Any]:
    setup = build(cfg)
    rng = np.random.default_rng(cfg.seed)
    trials = cfg.trials or 5
    reports = []
    for _ in range(trials):
        path = variation.random_path(setup.pair, setup.mu, rng)
        path.order = cfg.quad_order
        reports.append(variation.variation_report(path))
    first = max(r.first_rel_err for r in reports)
    second = max(r.second_rel_err for r in reports)
    return {
        "model": cfg.model,
        "params": cfg.params(),
        "seed": cfg.seed,
        "trials": trials,
        "first_rel_err": first,
        "second_rel_err": second,
        "tol": {"first": 1e-6, "second": 1e-5},
        "reports": [r.to_dict() for r in reports],
        "pass": first <= 1e-6 and second <= 1e-5,
    }


def _random_direction(setup: Setup, rng: np.random.Generator) -> Form:
    """A real 1-form whose ``(Id + J) d`` has nonzero trace, or any 1-form if none exists."""
    model = setup.entry.model
    H = setup.H
    for _ in range(20):
        xi = Form(model, 1, rng.standard_normal(model.dim))
        if abs(H.trace(variation.symmetric_11(H.J, xi))) > 1e-6:
            return xi
    return xi


def cmd_path(cfg: RunConfig) -> tuple[dict[str, Any], str]:
    setup = build(cfg)
    rng = np.random.default_rng(cfg.seed)
    grid = cfg.t or parse_grid("0:0.5:33")
    if len(grid) < 3 or grid[0] != 0.0:
        raise UsageError("--t must be a grid 0:t_max:count with count >= 3")
    xi = _random_direction(setup, rng) * 0.2
    H = setup.H
    if abs(H.trace(variation.symmetric_11(H.J, xi))) > 1e-8:
        u = variation.generator(setup.pair, rng.standard_normal(setup.pair.bundle.algebra.dim) * 0.2)
        samples = variation.concave_path(setup.pair, setup.mu, xi, u, grid[-1], len(grid))
        kind = "concave"
    else:
        samples = variation.linear_path(setup.pair, setup.mu, xi, grid[-1], len(grid))
        kind = "linear"
    table = variation.concavity_sweep(samples)
    residual = max(r["residual"] for r in table.rows)
    d2M = max(r["d2M"] for r in table.rows)
    solved = residual <= 1e-8
    out = {
        "model": cfg.model,
        "params": cfg.params(),
        "seed": cfg.seed,
        "kind": kind,
        "max_residual": residual,
        "max_d2M": d2M,
        "discrete_concave": table.is_concave(1e-9),
        "pass": (not solved) or (d2M <= 1e-9 and table.is_concave(1e-9)),
    }
    return out, table.to_csv()


def cmd_linearize(cfg: RunConfig) -> dict[str, Any]:
    setup = build(cfg)
    pair, mu = setup.pair, setup.mu
    lin = linearization.assemble_L(pair, mu)
    checks = {
        "jacobian": linearization.jacobian_error(pair, mu, cfg.quad_order),
        "closed_forms": linearization.closed_forms_defect(lin, pair),
        "complex": linearization.complex_defect(lin, pair, mu),
        "rescaling": max(linearization.rescaling_defect(pair, r, mu) for r in (1.0, 2.0, 10.0)),
    }
    tols = {"jacobian": 1e-6, "closed_forms": 1e-12, "complex": 1e-12, "rescaling": 1e-12}
    try:
        checks["duality"] = linearization.duality_defect(pair, mu)
        tols["duality"] = 1e-10
    except ValueError:
        checks["duality"] = None
    index = linearization.index_report(lin, pair)
    passed = all(checks[k] <= tols[k] for k in tols) and index.index == 0
    return {
        "model": cfg.model,
        "params": cfg.params(),
        "on_shell": lin.on_shell,
        "warnings": lin.L.warnings,
        "shape": list(lin.L.shape),
        "checks": checks,
        "tol": tols,
        "index": index.to_dict(),
        "pass": passed,
    }


def cmd_cohomology(cfg: RunConfig) -> dict[str, Any]:
    entry = load_entry(cfg)
    model, J = entry.model, entry.J
    n = J.n
    groups: dict[str, Any] = {
        "betti": cohomology.betti_numbers(model),
        "dolbeault": {f"{p},{q}": cohomology.compute_group(model, "dolbeault", (p, q), J=J).dim for p in range(n + 1) for q in range(n + 1)},
        "aeppli_11": cohomology.compute_group(model, "aeppli", (1, 1), J=J).dim,
        "bottchern_11": cohomology.compute_group(model, "bottchern", (1, 1), J=J).dim,
    }
    pm = cohomology.partial_map(J)
    groups["partial_map"] = {
        "rank": pm.rank,
        "kernel_dim": pm.kernel_dim,
        "domain_dim": pm.domain_dim,
        "target_dim": pm.target_dim,
        "isomorphism": pm.is_isomorphism,
        "zero": pm.is_zero,
    }
    passed = pm.rank + pm.kernel_dim == groups["aeppli_11"]
    return {"model": cfg.model, "params": cfg.params(), "groups": groups, "pass": passed}


def cmd_symbol(cfg: RunConfig) -> dict[str, Any]:
    setup = build(cfg)
    report = linearization.ellipticity_scan(setup.H, cfg.trials or 200, cfg.seed)
    return {"model": cfg.model, "params": cfg.params(), **report.to_dict()}


def cmd_catalog(cfg: RunConfig) -> dict[str, Any]:
    entries = {}
    for name in sorted(models.CATALOG):
        e = models.load(name)
        entries[name] = {"dim": e.model.dim, "n": e.n, "unimodular": e.model.is_unimodular, "notes": e.notes}
    return {"models": entries, "pass": True}


HANDLERS: dict[str, Callable[[RunConfig], Any]] = {
    "check": cmd_check,
    "functional": cmd_functional,
    "variation": cmd_variation,
    "path": cmd_path,
    "linearize": cmd_linearize,
    "cohomology": cmd_cohomology,
    "symbol": cmd_symbol,
    "catalog": cmd_catalog,
}


# -------------------------------------------------------------------- main
def _clean(obj: Any) -> Any:
    """Plain Python values for JSON, with non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heterotic", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--model", default="hopf", help="catalog name (see the catalog command)")
    parser.add_argument("--w", default="1", help="Hopf parameter, e.g. 1 or 1+0.5j")
    parser.add_argument("--a", type=float, default=1.0)
    parser.add_argument("--x", type=float, default=None, help="Re w for functional sweeps (defaults to Re of --w)")
    parser.add_argument("--t", default=None, help="scalar or min:max:count")
    parser.add_argument("--system", default="twisted-hs", help="one of " + ", ".join(SYSTEMS))
    parser.add_argument("--bundle", default="default", choices=BUNDLES)
    parser.add_argument("--tol", type=float, default=None)
    parser.add_argument("--quad-order", type=int, default=QUADRATURE_ORDER)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--trials", type=int, default=None)
    parser.add_argument("--json", default=None, metavar="PATH")
    parser.add_argument("--csv", default=None, metavar="PATH")
    return parser


def run(cfg: RunConfig) -> tuple[int, str, str | None]:
    """Exit status, JSON text and optional CSV text for a validated config."""
    result = HANDLERS[cfg.command](cfg)
    report, table = result if isinstance(result, tuple) else (result, None)
    text = json.dumps(_clean(report), sort_keys=True, indent=2)
    return (EXIT_PASS if report.get("pass") else EXIT_FAIL), text, table


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    try:
        cfg = RunConfig.from_args(ns)
        status, text, table = run(cfg)
    except UsageError as exc:
        print(f"heterotic: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(text)
    if cfg.json_path:
        with open(cfg.json_path, "w") as fh:
            fh.write(text + "\n")
    if table is not None and cfg.csv_path:
        with open(cfg.csv_path, "w", newline="") as fh:
            fh.write(table)
    return status


if __name__ == "__main__":
    sys.exit(main())

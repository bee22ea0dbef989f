"""Command-line front end: JSON problem configs in, CSV/JSON artifacts out.

Subcommands:
    solve       run the configured solver, write solution CSV + report JSON
    verify      run the property suite (or one property), emit report JSON
    apply       apply a fractional operator to tabulated data
    hypotheses  validate the configured nonlinearity against its regime

Exit codes: 0 success/converged, 1 configuration error, 2 non-converged
run or failed property, 3 I/O failure.  All numeric output is written
with 17 significant digits and no locale formatting, so identical
configs and seeds give byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .energy import ProblemState
from .fracops import OpKind, build_operators
from .grid import FracParams, Grid, GridFunction, make_grid
from .nonlinearity import (
    CoefficientFn,
    Family,
    NonlinearitySpec,
    validate_hypotheses,
)
from .solvers import (
    GeometryError,
    MultiplicityReport,
    SolveReport,
    minimize_direct,
    mountain_pass,
    multiplicity_search,
)
from .verify import PropertyId, VerificationReport, run_suite, verify

__all__ = ["main", "load_config", "ConfigError", "RunConfig"]


class ConfigError(ValueError):
    """Configuration rejected; the message names the offending key."""


def _fmt(x: float) -> str:
    return f"{x:.17g}"


# ---------------------------------------------------------------- config ---

_COEFF_KEYS = {
    "constant": {"value"},
    "affine": {"value", "slope"},
    "sine": {"value", "amplitude", "frequency", "phase"},
    "table": {"values", "T"},
}

_SOLVER_DEFAULTS = {
    "tol": 1e-6,
    "max_iter": 2000,
    "k": 3,
    "seed": 0,
    "eps_reg": None,
    "path_points": 21,
}


def _reject_unknown(d: dict, allowed, path: str) -> None:
    for key in d:
        if key not in allowed:
            raise ConfigError(f"{path}.{key} is not a recognized key")


def _coeff_from(d, path: str) -> CoefficientFn:
    if d is None:
        return CoefficientFn()
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError(f"{path} must be an object with a 'kind'")
    kind = d["kind"]
    if kind not in _COEFF_KEYS:
        raise ConfigError(f"{path}.kind must be one of {sorted(_COEFF_KEYS)}")
    _reject_unknown(d, _COEFF_KEYS[kind] | {"kind"}, path)
    try:
        if kind == "constant":
            return CoefficientFn(kind="constant", value=float(d.get("value", 1.0)))
        if kind == "affine":
            return CoefficientFn(
                kind="affine",
                value=float(d.get("value", 1.0)),
                slope=float(d.get("slope", 0.0)),
            )
        if kind == "sine":
            return CoefficientFn(
                kind="sine",
                value=float(d.get("value", 0.0)),
                amplitude=float(d.get("amplitude", 1.0)),
                frequency=float(d.get("frequency", math.pi)),
                phase=float(d.get("phase", 0.0)),
            )
        return CoefficientFn(
            kind="table",
            table_values=np.asarray(d["values"], dtype=float),
            table_T=float(d.get("T", 1.0)),
        )
    except (TypeError, KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


@dataclass
class RunConfig:
    params: FracParams
    n: int
    spec: NonlinearitySpec
    method: str
    tol: float
    max_iter: int
    k: int
    seed: int
    eps_reg: Optional[float]
    path_points: int
    solution_path: str
    report_path: str
    raw: dict

    def build_state(self) -> tuple[Grid, ProblemState]:
        grid = make_grid(self.params.T, self.n)
        ops = build_operators(self.params, grid)
        st = ProblemState(
            params=self.params, grid=grid, ops=ops, spec=self.spec, eps_reg=self.eps_reg
        )
        return grid, st

    def to_dict(self) -> dict:
        """Normalized form: defaults filled in, key order fixed."""
        nl: dict = {"family": self.spec.family.value}
        if self.spec.q is not None:
            nl["q"] = self.spec.q
        if self.spec.mu is not None:
            nl["mu"] = self.spec.mu
        nl["r"] = self.spec.r
        if self.spec.b_const is not None:
            nl["b_const"] = self.spec.b_const
        for name, co in (("a_coeff", self.spec.a_coeff), ("b_coeff", self.spec.b_coeff)):
            entry = {"kind": co.kind}
            if co.kind == "constant":
                entry["value"] = co.value
            elif co.kind == "affine":
                entry.update(value=co.value, slope=co.slope)
            elif co.kind == "sine":
                entry.update(
                    value=co.value,
                    amplitude=co.amplitude,
                    frequency=co.frequency,
                    phase=co.phase,
                )
            else:
                entry.update(values=list(map(float, co.table_values)), T=co.table_T)
            nl[name] = entry
        if self.spec.family is Family.TABLE:
            nl["table"] = {
                "breakpoints": list(map(float, self.spec.table_breakpoints)),
                "values": list(map(float, self.spec.table_values)),
            }
        return {
            "problem": {
                "alpha": self.params.alpha,
                "p": self.params.p,
                "T": self.params.T,
                "n": self.n,
            },
            "nonlinearity": nl,
            "solver": {
                "method": self.method,
                "tol": self.tol,
                "max_iter": self.max_iter,
                "k": self.k,
                "seed": self.seed,
                "eps_reg": self.eps_reg,
                "path_points": self.path_points,
            },
            "output": {
                "solution_path": self.solution_path,
                "report_path": self.report_path,
            },
        }


def load_config(path) -> RunConfig:
    """Parse and eagerly validate a JSON run configuration.

    Every numeric invariant of the referenced domain types is checked
    here so a bad config fails before any computation, with the key path
    in the message.  Unknown keys are rejected.
    """
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    _reject_unknown(raw, {"problem", "nonlinearity", "solver", "output"}, "config")

    prob = raw.get("problem")
    if not isinstance(prob, dict):
        raise ConfigError("problem section is required")
    _reject_unknown(prob, {"alpha", "p", "T", "n"}, "problem")
    try:
        alpha = float(prob["alpha"])
        p = float(prob["p"])
        T = float(prob["T"])
        n = int(prob["n"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"problem section incomplete or malformed: {exc}") from exc
    if not 0.0 < alpha <= 1.0:
        raise ConfigError(f"problem.alpha out of (0,1]: {alpha}")
    if not p > 1.0:
        raise ConfigError(f"problem.p must exceed 1, got {p}")
    if not T > 0.0:
        raise ConfigError(f"problem.T must be positive, got {T}")
    if n < 2:
        raise ConfigError(f"problem.n must be at least 2, got {n}")
    params = FracParams(alpha=alpha, p=p, T=T)

    nl = raw.get("nonlinearity")
    if not isinstance(nl, dict):
        raise ConfigError("nonlinearity section is required")
    _reject_unknown(
        nl,
        {"family", "q", "mu", "r", "b_const", "a_coeff", "b_coeff", "table"},
        "nonlinearity",
    )
    fam_name = nl.get("family")
    try:
        family = Family(fam_name)
    except ValueError:
        raise ConfigError(
            f"nonlinearity.family must be one of {[f.value for f in Family]}, got {fam_name!r}"
        ) from None
    a_coeff = _coeff_from(nl.get("a_coeff"), "nonlinearity.a_coeff")
    if family is Family.SUBLINEAR_POWER and "b_coeff" not in nl:
        b_coeff = a_coeff  # the power family saturates the growth bound with b = a
    else:
        b_coeff = _coeff_from(nl.get("b_coeff"), "nonlinearity.b_coeff")
    table_bp = table_vals = None
    if family is Family.TABLE:
        tab = nl.get("table")
        if not isinstance(tab, dict):
            raise ConfigError("nonlinearity.table is required for the TABLE family")
        _reject_unknown(tab, {"breakpoints", "values"}, "nonlinearity.table")
        table_bp = tab.get("breakpoints")
        table_vals = tab.get("values")
    try:
        spec = NonlinearitySpec(
            family=family,
            q=None if nl.get("q") is None else float(nl["q"]),
            mu=None if nl.get("mu") is None else float(nl["mu"]),
            r=float(nl.get("r", 1.0)),
            b_const=None if nl.get("b_const") is None else float(nl["b_const"]),
            a_coeff=a_coeff,
            b_coeff=b_coeff,
            table_breakpoints=table_bp,
            table_values=table_vals,
        )
    except ValueError as exc:
        raise ConfigError(f"nonlinearity: {exc}") from exc

    sol = raw.get("solver")
    if not isinstance(sol, dict):
        raise ConfigError("solver section is required")
    _reject_unknown(sol, {"method"} | set(_SOLVER_DEFAULTS), "solver")
    method = sol.get("method")
    if method not in ("direct", "mountain_pass", "multiplicity"):
        raise ConfigError(
            f"solver.method must be direct, mountain_pass or multiplicity, got {method!r}"
        )
    merged = dict(_SOLVER_DEFAULTS)
    for key, val in sol.items():
        if key != "method":
            merged[key] = val
    try:
        tol = float(merged["tol"])
        max_iter = int(merged["max_iter"])
        k = int(merged["k"])
        seed = int(merged["seed"])
        eps_reg = None if merged["eps_reg"] is None else float(merged["eps_reg"])
        path_points = int(merged["path_points"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"solver section malformed: {exc}") from exc
    if tol <= 0:
        raise ConfigError(f"solver.tol must be positive, got {tol}")
    if max_iter < 1:
        raise ConfigError(f"solver.max_iter must be at least 1, got {max_iter}")
    if k < 1:
        raise ConfigError(f"solver.k must be at least 1, got {k}")
    if path_points < 3:
        raise ConfigError(f"solver.path_points must be at least 3, got {path_points}")

    out = raw.get("output")
    if not isinstance(out, dict):
        raise ConfigError("output section is required")
    _reject_unknown(out, {"solution_path", "report_path"}, "output")
    try:
        solution_path = str(out["solution_path"])
        report_path = str(out["report_path"])
    except KeyError as exc:
        raise ConfigError(f"output.{exc.args[0]} is required") from exc

    return RunConfig(
        params=params,
        n=n,
        spec=spec,
        method=method,
        tol=tol,
        max_iter=max_iter,
        k=k,
        seed=seed,
        eps_reg=eps_reg,
        path_points=path_points,
        solution_path=solution_path,
        report_path=report_path,
        raw=raw,
    )


# --------------------------------------------------------------- writers ---


def _sanitize(value):
    """Replace non-finite floats by string sentinels; report whether any."""
    if isinstance(value, float):
        if math.isnan(value):
            return "nan", True
        if math.isinf(value):
            return ("inf" if value > 0 else "-inf"), True
        return value, False
    if isinstance(value, dict):
        bad = False
        out = {}
        for k, v in value.items():
            out[k], b = _sanitize(v)
            bad = bad or b
        return out, bad
    if isinstance(value, (list, tuple)):
        bad = False
        out = []
        for v in value:
            cv, b = _sanitize(v)
            out.append(cv)
            bad = bad or b
        return out, bad
    return value, False


def _finalize(d: dict) -> dict:
    clean, bad = _sanitize(d)
    if bad and "passed" in clean:
        clean["passed"] = False
    if bad and "converged" in clean:
        clean["converged"] = False
    return clean


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def write_solution_csv(path, grid: Grid, u: GridFunction) -> None:
    lines = ["t,u"]
    for t, v in zip(grid.nodes, u.values):
        lines.append(f"{_fmt(t)},{_fmt(v)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def solve_report_dict(rep: SolveReport, solution_path: str) -> dict:
    return _finalize(
        {
            "method": rep.method,
            "energy_value": rep.energy_value,
            "residual": rep.residual,
            "iterations": rep.iterations,
            "converged": rep.converged,
            "seed": rep.seed,
            "eps_reg_used": rep.eps_reg_used,
            "trivial": rep.trivial,
            "rim_value": rep.rim_value,
            "endpoint_energy": rep.endpoint_energy,
            "solution_path": solution_path,
        }
    )


def verification_report_dict(r: VerificationReport) -> dict:
    return _finalize(
        {
            "property": r.property.value,
            "status": r.status,
            "samples": r.samples,
            "worst_margin": r.worst_margin,
            "bound_constant": r.bound_constant,
            "tolerance_used": r.tolerance_used,
            "passed": r.passed,
            "refinement_ratio": r.refinement_ratio,
            "reason": r.reason,
        }
    )


def _read_csv_column(path) -> tuple[np.ndarray, np.ndarray]:
    text = Path(path).read_text(encoding="utf-8")
    rows = [line for line in text.splitlines() if line.strip()]
    if rows and not rows[0][0].isdigit() and not rows[0].startswith("-"):
        rows = rows[1:]  # header
    data = np.array([[float(x) for x in line.split(",")[:2]] for line in rows])
    return data[:, 0], data[:, 1]


# ------------------------------------------------------------ subcommands ---


def _cmd_solve(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    grid, st = cfg.build_state()
    try:
        if cfg.method == "direct":
            init = GridFunction(
                0.1 * np.sin(np.pi * grid.nodes / grid.T), dirichlet=True
            )
            rep = minimize_direct(
                st, init, tol=cfg.tol, max_iter=cfg.max_iter, seed=cfg.seed
            )
            reports = [rep]
        elif cfg.method == "mountain_pass":
            rep = mountain_pass(
                st,
                path_points=cfg.path_points,
                tol=cfg.tol,
                max_iter=cfg.max_iter,
                seed=cfg.seed,
            )
            reports = [rep]
        else:
            mrep = multiplicity_search(st, k=cfg.k, tol=cfg.tol, seed=cfg.seed)
            reports = mrep.pairs
    except (ValueError, GeometryError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        if cfg.method == "multiplicity":
            base = Path(cfg.solution_path)
            pair_paths = []
            for j, rep in enumerate(reports, start=1):
                pth = base.with_name(f"{base.stem}_pair{j}{base.suffix}")
                write_solution_csv(pth, grid, rep.solution)
                pair_paths.append(str(pth))
            payload = _finalize(
                {
                    "method": "multiplicity",
                    "converged_count": mrep.converged_count,
                    "requested_pairs": cfg.k,
                    "separation": mrep.separation,
                    "seed": mrep.seed,
                    "pairs": [
                        solve_report_dict(rep, pth)
                        for rep, pth in zip(reports, pair_paths)
                    ],
                    "pairwise_distances": mrep.pairwise_distances.tolist(),
                }
            )
            Path(cfg.report_path).write_text(_dump_json(payload), encoding="utf-8")
            return 0 if mrep.converged_count >= cfg.k else 2
        rep = reports[0]
        write_solution_csv(cfg.solution_path, grid, rep.solution)
        Path(cfg.report_path).write_text(
            _dump_json(solve_report_dict(rep, cfg.solution_path)), encoding="utf-8"
        )
        return 0 if rep.converged else 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


def _cmd_verify(args) -> int:
    try:
        params = FracParams(alpha=args.alpha, p=args.p, T=args.T)
        grid = make_grid(args.T, args.n)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    if args.property is not None:
        try:
            prop = PropertyId(args.property)
        except ValueError:
            print(
                f"config error: unknown property {args.property!r}; "
                f"choose from {[p.value for p in PropertyId]}",
                file=sys.stderr,
            )
            return 1
        try:
            reports = [verify(prop, params, grid, samples=args.samples, seed=args.seed)]
        except ValueError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 1
    else:
        reports = run_suite([params], grid, seed=args.seed, samples=args.samples)
    payload = [verification_report_dict(r) for r in reports]
    text = _dump_json(payload)
    try:
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    ran = [r for r in reports if r.status != "skipped"]
    return 0 if all(r.passed for r in ran) else 2


def _cmd_apply(args) -> int:
    try:
        kind = OpKind(args.kind)
    except ValueError:
        print(
            f"config error: unknown kind {args.kind!r}; "
            f"choose from {[k.value for k in OpKind]}",
            file=sys.stderr,
        )
        return 1
    try:
        t, u = _read_csv_column(args.input)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"config error: malformed input CSV: {exc}", file=sys.stderr)
        return 1
    n = len(t) - 1
    try:
        params = FracParams(alpha=args.alpha, p=2.0, T=float(t[-1]))
        grid = make_grid(params.T, n)
        if not np.allclose(t, grid.nodes, rtol=0.0, atol=1e-12 * max(1.0, params.T)):
            raise ValueError("input t column is not a uniform grid starting at 0")
        ops = build_operators(params, grid)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    from .fracops import apply as apply_op

    out = apply_op(ops, kind, GridFunction(u))
    try:
        write_solution_csv(args.output, grid, out)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    return 0


def _cmd_hypotheses(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    regime = "SUPERLINEAR" if cfg.method == "mountain_pass" else "SUBLINEAR"
    report = validate_hypotheses(
        cfg.spec, cfg.params, regime, sample_count=400, seed=cfg.seed
    )
    payload = _finalize(
        {
            "regime": report.regime,
            "family": report.family,
            "all_hold": report.all_hold,
            "records": [
                {
                    "id": r.id,
                    "holds": r.holds,
                    "worst_margin": r.worst_margin,
                    "witness_t": r.witness[0],
                    "witness_u": r.witness[1],
                }
                for r in report.records
            ],
        }
    )
    sys.stdout.write(_dump_json(payload))
    return 0 if report.all_hold else 2


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="fracplap",
        description="Mixed-derivative fractional p-Laplacian solver and verifier",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="run the solver from a JSON config")
    ps.add_argument("--config", required=True)
    ps.set_defaults(func=_cmd_solve)

    pv = sub.add_parser("verify", help="run the property-verification suite")
    pv.add_argument("--alpha", type=float, required=True)
    pv.add_argument("--p", type=float, required=True)
    pv.add_argument("--T", type=float, required=True)
    pv.add_argument("--n", type=int, required=True)
    pv.add_argument("--seed", type=int, default=0)
    pv.add_argument("--samples", type=int, default=100)
    pv.add_argument("--property", default=None)
    pv.add_argument("--out", default=None)
    pv.set_defaults(func=_cmd_verify)

    pa = sub.add_parser("apply", help="apply a fractional operator to CSV data")
    pa.add_argument("--kind", required=True)
    pa.add_argument("--alpha", type=float, required=True)
    pa.add_argument("--input", required=True)
    pa.add_argument("--output", required=True)
    pa.set_defaults(func=_cmd_apply)

    ph = sub.add_parser("hypotheses", help="validate the configured nonlinearity")
    ph.add_argument("--config", required=True)
    ph.set_defaults(func=_cmd_hypotheses)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

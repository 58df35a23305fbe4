"""Command-line front end: ``varjet jets | verify | conjecture | list-builtins``.

Exit codes: 0 success, 1 verification or conjecture check failed,
2 kernel condition infeasible, 3 integration failure, 64 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import platform
import sys
import time
from dataclasses import asdict, dataclass, replace
from dataclasses import field as dc_field
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import jsonschema
import numpy as np
import scipy

from . import __version__
from .exprjet import GRAMMAR_VERSION, ParseError, SingularEvaluation, VectorField
from .firstint import (
    InfeasibleConstraint,
    JetResult,
    ZeroPivotError,
    admissibility_check,
    away_from_t0_residuals,
    compute_jets,
    conjecture_filter,
    constancy_scaling,
)
from .lve import kernel_residual
from .multiidx import check_size, dim_sym, lex_basis
from .symblock import SingularBlockError
from .systems import PARAMETERS, BuiltinSystem, InvalidParameters, UnknownSystem, builtin, builtin_names
from .transport import DEFAULT_ATOL, DEFAULT_RTOL, IntegrationError, integrate_variational

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INFEASIBLE = 2
EXIT_INTEGRATION = 3
EXIT_CONFIG = 64

SCHEMA_VERSION = 1
SCALING_EPS = (1e-1, 3e-2, 1e-2, 3e-3)
SCALING_SEED = 20240101
CONJECTURE_MAX_ORDER = 6
KERNEL_TOL = 1e-8
DUAL_TOL = 1e-5
REPRODUCTION_TOL = 1e-9
REFERENCE_TOL = 1e-6
SLOPE_MARGIN = 0.3
# Drifts at or below this fraction of the largest first-order term are
# round-off; no slope is fitted.
DRIFT_REL_FLOOR = 1e-9


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass(frozen=True)
class RunConfig:
    """Everything a run depends on. ``pivot`` is 1-based."""

    builtin: str | None = None
    params: dict = dc_field(default_factory=dict)
    variables: tuple[str, ...] | None = None
    field: tuple[str, ...] | None = None
    z0: tuple[float, ...] | None = None
    t0: float = 0.0
    span: float | None = None
    pivot: int | None = None
    order: int = 3
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    normalize: bool | None = None
    samples: int = 10
    scaling: bool = True

    def echo(self) -> dict:
        d = asdict(self)
        for key in ("variables", "field", "z0"):
            if d[key] is not None:
                d[key] = list(d[key])
        d["params"] = {k: float(v) for k, v in sorted(d["params"].items())}
        return d


@dataclass(frozen=True)
class OutputOptions:
    path: str | None = None
    csv: str | None = None
    timings: bool = True


@dataclass(frozen=True)
class ResolvedRun:
    config: RunConfig
    name: str
    field: VectorField
    system: BuiltinSystem | None
    z0: np.ndarray
    t_span: tuple[float, float]
    pivot: int  # 0-based

    @property
    def reference(self):
        return self.system.reference_rows if self.config.normalize else None


# ---------------------------------------------------------------------------
# configuration


def _load_schema(name: str) -> dict:
    return json.loads(resources.files("varjet").joinpath("schemas", name).read_text())


def _read_toml(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _validate(data: dict, schema: dict, what: str) -> None:
    try:
        jsonschema.validate(data, schema)
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{what}: {loc}: {exc.message}") from exc


def _system_table(data: dict) -> dict:
    out = {}
    if "builtin" in data:
        out["builtin"] = data["builtin"]
    if "params" in data:
        out["params"] = dict(data["params"])
    if "variables" in data:
        out["variables"] = tuple(data["variables"])
    if "field" in data:
        out["field"] = tuple(data["field"])
    return out


def config_from_toml(path: str) -> tuple[RunConfig, OutputOptions]:
    data = _read_toml(path)
    _validate(data, _load_schema("config.schema.json"), path)
    run = dict(data.get("run", {}))
    if "z0" in run:
        run["z0"] = tuple(float(v) for v in run["z0"])
    cfg = RunConfig(**_system_table(data.get("system", {})), **run)
    out = data.get("output", {})
    return cfg, OutputOptions(out.get("path"), out.get("csv"), out.get("timings", True))


def _parse_param(text: str) -> tuple[str, float]:
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"--param expects key=value, got {text!r}")
    try:
        return key.strip(), float(value)
    except ValueError as exc:
        raise ConfigError(f"--param {key.strip()}: {value!r} is not a number") from exc


def _parse_vector(text: str, flag: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.replace(" ", "").split(",") if v)
    except ValueError as exc:
        raise ConfigError(f"{flag} expects comma-separated numbers, got {text!r}") from exc


def config_from_args(args: argparse.Namespace,
                     initial: RunConfig | None = None) -> tuple[RunConfig, OutputOptions]:
    """``initial`` (or the config file), then the ``--system`` file, then individual flags."""
    if getattr(args, "config", None):
        cfg, out = config_from_toml(args.config)
    else:
        cfg, out = (initial or RunConfig()), OutputOptions()
    updates: dict[str, Any] = {}
    if getattr(args, "system", None):
        data = _read_toml(args.system)
        table = data.get("system", data)
        extra = sorted(set(table) - {"builtin", "params", "variables", "field", "z0"})
        if extra:
            raise ConfigError(f"{args.system}: unknown key(s) {', '.join(extra)}")
        updates.update(_system_table(table))
        if "z0" in table:
            updates["z0"] = tuple(float(v) for v in table["z0"])
        if "builtin" not in table:
            updates["builtin"] = None
    if args.builtin is not None:
        updates.update(builtin=args.builtin, variables=None, field=None)
    if args.param:
        params = dict(updates.get("params", cfg.params))
        params.update(_parse_param(p) for p in args.param)
        updates["params"] = params
    simple = {"order": "order", "pivot": "pivot", "t0": "t0", "span": "span", "rtol": "rtol",
              "atol": "atol", "normalize": "normalize", "samples": "samples", "scaling": "scaling"}
    for attr, key in simple.items():
        value = getattr(args, attr, None)
        if value is not None:
            updates[key] = value
    if getattr(args, "z0", None) is not None:
        updates["z0"] = _parse_vector(args.z0, "--z0")
    cfg = replace(cfg, **updates)
    out = OutputOptions(
        path=getattr(args, "output", None) or out.path,
        csv=getattr(args, "csv", None) or out.csv,
        timings=out.timings and not getattr(args, "no_timings", False),
    )
    return cfg, out


def resolve(cfg: RunConfig) -> ResolvedRun:
    """Build the field and fill defaults.

    Raises
    ------
    ConfigError
        On any invalid or inconsistent setting.
    """
    try:
        if cfg.builtin is not None:
            if cfg.field is not None:
                raise ConfigError("give either a built-in name or inline field expressions, not both")
            system = builtin(cfg.builtin, cfg.params)
            fld = system.field
            name = system.name
            z0 = cfg.z0 if cfg.z0 is not None else system.z0
            span = cfg.span if cfg.span is not None else system.t_span[1] - system.t_span[0]
            pivot = cfg.pivot if cfg.pivot is not None else system.pivot + 1
            normalize = cfg.normalize if cfg.normalize is not None else bool(system.references)
            if normalize and not system.references:
                raise ConfigError(f"{name} has no reference jets to normalize against")
        else:
            if cfg.field is None:
                raise ConfigError("no system: pass --builtin NAME, --system FILE or a config file")
            variables = cfg.variables or tuple(f"z{i + 1}" for i in range(len(cfg.field)))
            fld = VectorField.from_strings(cfg.field, variables, cfg.params)
            system, name = None, "inline"
            if cfg.z0 is None:
                raise ConfigError("an inline system needs an initial state (--z0)")
            z0 = cfg.z0
            if cfg.span is None:
                raise ConfigError("an inline system needs a time span (--span)")
            span = cfg.span
            pivot = cfg.pivot if cfg.pivot is not None else 1
            normalize = bool(cfg.normalize)
            if normalize:
                raise ConfigError("--normalize needs reference jets; only built-in systems carry them")
    except (InvalidParameters, UnknownSystem, ParseError) as exc:
        raise ConfigError(str(exc.args[0]) if isinstance(exc, UnknownSystem) else str(exc)) from exc
    n = fld.dim
    if len(z0) != n:
        raise ConfigError(f"initial state has {len(z0)} entries for a {n}-dimensional system")
    if cfg.order < 1:
        raise ConfigError(f"order must be >= 1, got {cfg.order}")
    if not 1 <= pivot <= n:
        raise ConfigError(f"pivot index must be within 1..{n}, got {pivot}")
    if not span or not math.isfinite(span):
        raise ConfigError(f"time span must be finite and nonzero, got {span}")
    if cfg.samples < 2:
        raise ConfigError(f"need at least 2 sample times, got {cfg.samples}")
    if not (cfg.rtol > 0 and cfg.atol > 0):
        raise ConfigError("tolerances must be positive")
    if n < 2:
        raise ConfigError("first integrals along a trajectory need dimension >= 2")
    try:
        check_size(n, cfg.order)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    full = replace(cfg, z0=tuple(float(v) for v in z0), span=float(span), pivot=int(pivot),
                   normalize=normalize, params=dict(system.params) if system else dict(cfg.params),
                   t0=float(cfg.t0))
    return ResolvedRun(full, name, fld, system, np.asarray(full.z0), (full.t0, full.t0 + full.span),
                       pivot - 1)


# ---------------------------------------------------------------------------
# pipeline


def _scaling_directions(n: int) -> np.ndarray:
    rng = np.random.default_rng(SCALING_SEED)
    dirs = np.vstack([np.ones(n), rng.standard_normal(n)])
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


def _finite(x: float) -> float | None:
    return float(x) if math.isfinite(x) else None


def _conjecture_section(run: ResolvedRun, order: int, with_away: bool = False) -> dict:
    report = conjecture_filter(run.field.blocks(run.z0, max(order - 1, 0)), run.pivot, order)
    out = {
        "order": order,
        "ukk_residual": {str(k): v for k, v in report.ukk_residual.items()},
        "hyp_residual": {str(k): v for k, v in report.hyp_residual.items()},
        "u_discrepancy": {str(k): {"binomial": b, "cyclotomic": c}
                          for k, (b, c) in report.u_discrepancy.items()},
        "max_identity_residual": report.max_identity_residual(),
        "max_u_discrepancy": report.max_u_discrepancy(),
        "passed": report.passed(),
    }
    if with_away:
        from .transport import integrate_base

        traj = integrate_base(run.field, run.z0, run.t_span, run.pivot,
                              run.config.rtol, run.config.atol)
        flow = integrate_variational(traj, order)
        rows = []
        for t in traj.sample_times(run.config.samples)[1:]:
            res = away_from_t0_residuals(report.filters, flow.upsilon(t), traj.blocks(t, order))
            rows.append({"t": float(t), "relative_kernel_residual": res.tolist()})
        out["away_from_t0"] = rows
    return out


def _jets_section(result: JetResult, times: np.ndarray) -> list[dict]:
    n = result.dim
    out = []
    for k in range(1, result.order + 1):
        out.append({
            "order": k,
            "dimension": dim_sym(n, k),
            "basis": [list(mi) for mi in lex_basis(n, k)],
            "coefficients": [result.block(k, t).tolist() for t in times],
        })
    return out


def run_jets(cfg: RunConfig, timings: bool = True) -> dict:
    """Compute the bundle for a validated configuration.

    Raises
    ------
    ConfigError, InfeasibleConstraint, IntegrationError
        Mapped to exit codes by :func:`main`.
    """
    run = resolve(cfg)
    c = run.config
    clock = {}
    start = time.perf_counter()
    result = compute_jets(run.field, run.z0, run.t_span, c.order, pivot=run.pivot,
                          rtol=c.rtol, atol=c.atol, reference=run.reference,
                          base_value=run.system.reference_value if c.normalize else None)
    clock["jets"] = time.perf_counter() - start
    traj = result.trajectory
    times = traj.sample_times(c.samples)

    start = time.perf_counter()
    kern, dual = [], []
    for i in range(result.count):
        rep = admissibility_check(lambda t, i=i: result.rows(t, i), traj, times, KERNEL_TOL, DUAL_TOL)
        kern.append(rep.kernel.tolist())
        dual.append(rep.dual.tolist())
    max_k = float(np.max(kern))
    max_d = float(np.max(dual))
    clock["admissibility"] = time.perf_counter() - start

    start = time.perf_counter()
    dirs = _scaling_directions(traj.dim)
    scaling = {"skipped": not c.scaling, "eps": list(SCALING_EPS), "directions": dirs.tolist(),
               "per_integral": []}
    if c.scaling:
        try:
            for i in range(result.count):
                sc = constancy_scaling(lambda t, i=i: result.rows(t, i), traj, dirs, SCALING_EPS)
                floor = DRIFT_REL_FLOOR * max(SCALING_EPS) * float(np.max(np.abs(result.block(1, traj.t0)[i])))
                slopes = [None if np.max(sc.drift[d]) <= floor else _finite(sc.slopes[d])
                          for d in range(len(dirs))]
                scaling["per_integral"].append({"drift": sc.drift.tolist(), "slopes": slopes})
        except RuntimeError as exc:
            scaling.update(skipped=True, per_integral=[], note=str(exc))
    clock["scaling"] = time.perf_counter() - start

    start = time.perf_counter()
    conj = _conjecture_section(run, min(c.order, CONJECTURE_MAX_ORDER))
    clock["conjecture"] = time.perf_counter() - start

    metadata = {
        "tool": "varjet",
        "version": __version__,
        "grammar_version": GRAMMAR_VERSION,
        "config": c.echo(),
        "versions": {"python": platform.python_version(), "numpy": np.__version__,
                     "scipy": scipy.__version__},
    }
    if timings:
        metadata["timings"] = {k: round(v, 6) for k, v in clock.items()}
    bundle = {
        "schema_version": SCHEMA_VERSION,
        "metadata": metadata,
        "system": {"name": run.name, "variables": list(run.field.variables),
                   "field": list(run.field.texts), "params": c.params},
        "trajectory": {"t0": traj.t0, "t_end": traj.t_end, "pivot": run.pivot + 1,
                       "z0": traj.z0.tolist(), "times": times.tolist(),
                       "states": [traj.phi(t).tolist() for t in times]},
        "integrals": result.count,
        "normalized": bool(c.normalize),
        "jets": _jets_section(result, times),
        "base_values": None if result.base_values is None else result.base_values.tolist(),
        "anchor_defects": [float(v) for v in result.anchor_defects],
        "feasibility": [float(v) for v in result.feasibility],
        "admissibility": {"kernel_tol": KERNEL_TOL, "dual_tol": DUAL_TOL, "kernel": kern,
                          "dual": dual, "max_kernel": max_k, "max_dual": max_d,
                          "passed": max_k < KERNEL_TOL and max_d < DUAL_TOL},
        "constancy_scaling": scaling,
        "conjecture": conj,
    }
    validate_bundle(bundle)
    return bundle


def validate_bundle(bundle: dict) -> None:
    """Raise ``jsonschema.ValidationError`` if ``bundle`` does not match the shipped schema."""
    jsonschema.validate(bundle, _load_schema("bundle.schema.json"))


def dumps_bundle(bundle: dict) -> str:
    return json.dumps(bundle, indent=1, allow_nan=False) + "\n"


def write_csv(bundle: dict, directory: str) -> list[Path]:
    """One table per order: ``t, integral`` then one column per multi-index."""
    out_dir = Path(directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    times = bundle["trajectory"]["times"]
    for jet in bundle["jets"]:
        path = out_dir / f"order_{jet['order']}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "integral"] + ["m_" + "_".join(map(str, mi)) for mi in jet["basis"]])
            for t, rows in zip(times, jet["coefficients"]):
                for i, row in enumerate(rows):
                    w.writerow([repr(t), i + 1] + [repr(v) for v in row])
        paths.append(path)
    return paths


# ---------------------------------------------------------------------------
# verification


@dataclass
class Criterion:
    name: str
    passed: bool
    value: float | None
    threshold: float | None
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        num = "" if self.value is None else f" value={self.value:.3e}"
        thr = "" if self.threshold is None else f" threshold={self.threshold:.1e}"
        return f"{status} {self.name}{num}{thr}" + (f" ({self.detail})" if self.detail else "")


def _worst_entry(bundle_jets: list[dict], other: dict[int, np.ndarray], tol: float, scale_floor=1e-300):
    """Largest relative entry mismatch; ``other[k]`` has shape (times, integrals, d)."""
    worst = (0.0, None)
    for jet in bundle_jets:
        k = jet["order"]
        if k not in other:
            continue
        got = np.asarray(jet["coefficients"], dtype=float)
        exp = other[k]
        scale = max(float(np.max(np.abs(exp))), scale_floor)
        err = np.abs(got - exp) / scale
        idx = np.unravel_index(int(np.argmax(err)), err.shape)
        if err[idx] > worst[0]:
            worst = (float(err[idx]), (k, idx, jet["basis"][idx[2]]))
    return worst


def _where(loc, times) -> str:
    if loc is None:
        return ""
    k, (it, i, j), mi = loc
    return (f"order {k}, integral {i + 1}, time index {it} (t={times[it]:.6g}), "
            f"basis index {j} {tuple(mi)}")


def run_verify(cfg: RunConfig, bundle: dict) -> tuple[list[Criterion], int]:
    """Check a bundle against its configuration; exit code 0 iff every criterion passes."""
    try:
        validate_bundle(bundle)
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        return [Criterion("schema", False, None, None, f"{loc}: {exc.message}")], EXIT_CHECK_FAILED
    run = resolve(cfg)
    c = run.config
    if bundle["metadata"]["config"] != c.echo():
        raise ConfigError("bundle was produced with a different configuration")
    criteria = [Criterion("schema", True, None, None)]
    times = np.asarray(bundle["trajectory"]["times"])
    jets = bundle["jets"]
    n_int = bundle["integrals"]

    result = compute_jets(run.field, run.z0, run.t_span, c.order, pivot=run.pivot, rtol=c.rtol,
                          atol=c.atol, reference=run.reference)
    fresh = {k: np.array([result.block(k, t) for t in times]) for k in range(1, c.order + 1)}
    err, loc = _worst_entry(jets, fresh, REPRODUCTION_TOL)
    criteria.append(Criterion("reproduction", err <= REPRODUCTION_TOL, err, REPRODUCTION_TOL,
                              _where(loc, times) if err > REPRODUCTION_TOL else ""))

    worst_k, where_k = 0.0, ""
    states = np.asarray(bundle["trajectory"]["states"])
    for it, z in enumerate(states):
        a = run.field.blocks(z, c.order)
        for i in range(n_int):
            rows = [np.asarray(j["coefficients"][it][i]) for j in jets]
            res = kernel_residual(rows, a, relative=True)
            k = int(np.argmax(res))
            if res[k] > worst_k:
                worst_k, where_k = float(res[k]), f"order {k + 1}, integral {i + 1}, t={times[it]:.6g}"
    criteria.append(Criterion("kernel_condition", worst_k < KERNEL_TOL, worst_k, KERNEL_TOL,
                              where_k if worst_k >= KERNEL_TOL else ""))

    worst_d = 0.0
    for i in range(result.count):
        rep = admissibility_check(lambda t, i=i: result.rows(t, i), result.trajectory, times,
                                  KERNEL_TOL, DUAL_TOL)
        worst_d = max(worst_d, float(rep.dual.max()))
    criteria.append(Criterion("dual_system", worst_d < DUAL_TOL, worst_d, DUAL_TOL))

    if c.normalize and run.system is not None:
        top = min(c.order, run.system.reference_order)
        refs = {k: np.array([run.system.reference_rows(k, z) for z in states]) for k in range(1, top + 1)}
        err, loc = _worst_entry(jets, refs, REFERENCE_TOL)
        criteria.append(Criterion("reference_jets", err <= REFERENCE_TOL, err, REFERENCE_TOL,
                                  _where(loc, times) if err > REFERENCE_TOL else f"orders 1..{top}"))

    sc = bundle["constancy_scaling"]
    if not sc["skipped"]:
        need = c.order + 1 - SLOPE_MARGIN
        slopes = [s for p in sc["per_integral"] for s in p["slopes"] if s is not None]
        low = min(slopes) if slopes else None
        criteria.append(Criterion("constancy_scaling", low is None or low >= need, low, need,
                                  "all drifts at round-off" if low is None else "minimum log-log slope"))

    conj = bundle["conjecture"]
    criteria.append(Criterion("conjecture_t0", conj["passed"], conj["max_identity_residual"], 1e-10,
                              f"U_k discrepancy {conj['max_u_discrepancy']:.1e}"))
    code = EXIT_OK if all(cr.passed for cr in criteria) else EXIT_CHECK_FAILED
    return criteria, code


def run_conjecture(cfg: RunConfig) -> tuple[dict, int]:
    run = resolve(cfg)
    if run.config.order > CONJECTURE_MAX_ORDER:
        raise ConfigError(f"conjecture harness supports orders up to {CONJECTURE_MAX_ORDER}")
    report = _conjecture_section(run, run.config.order, with_away=True)
    report["system"] = run.name
    return report, EXIT_OK if report["passed"] else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", help="TOML run configuration")
    p.add_argument("--builtin", metavar="NAME", help="built-in system name")
    p.add_argument("--param", action="append", metavar="K=V", help="system parameter (repeatable)")
    p.add_argument("--system", metavar="FILE", help="TOML file with an inline system")
    p.add_argument("--z0", metavar="V1,V2,...", help="initial state")
    p.add_argument("--order", type=int, help="jet order K")
    p.add_argument("--pivot", type=int, help="pivot coordinate, 1-based")
    p.add_argument("--t0", type=float, help="initial time")
    p.add_argument("--span", type=float, help="length of the time interval (negative runs backward)")
    p.add_argument("--rtol", type=float)
    p.add_argument("--atol", type=float)
    p.add_argument("--samples", type=int, help="number of output sample times")
    p.add_argument("--normalize", action=argparse.BooleanOptionalAction, default=None,
                   help="rescale jets to the built-in reference first integrals")
    p.add_argument("--scaling", action=argparse.BooleanOptionalAction, default=None,
                   help="run the constancy-scaling check")
    p.add_argument("-o", "--output", metavar="FILE")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="varjet", description="Jets of formal first integrals along trajectories.")
    parser.add_argument("--version", action="version", version=f"varjet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("jets", help="compute jets and write a result bundle")
    _add_run_flags(p)
    p.add_argument("--csv", metavar="DIR", help="also write one CSV table per order")
    p.add_argument("--no-timings", action="store_true", help="omit wall-clock timings from the bundle")
    p = sub.add_parser("verify", help="check a result bundle")
    _add_run_flags(p)
    p.add_argument("--bundle", required=True, metavar="FILE")
    p = sub.add_parser("conjecture", help="filter-matrix identities at t0 and residuals away from it")
    _add_run_flags(p)
    p = sub.add_parser("list-builtins", help="list built-in systems and their parameters")
    p.add_argument("--json", action="store_true")
    return parser


def _list_builtins(as_json: bool) -> None:
    info = []
    for name in builtin_names():
        s = builtin(name)
        info.append({"name": name, "description": s.description, "params": PARAMETERS[name],
                     "variables": list(s.variables), "field": list(s.field.texts),
                     "z0": list(s.z0), "t_span": list(s.t_span), "pivot": s.pivot + 1,
                     "reference_order": min(s.reference_order, 99),
                     "closed_forms": list(s.closed_forms)})
    if as_json:
        print(json.dumps(info, indent=1))
        return
    for d in info:
        params = ", ".join(f"{k}={v:g}" for k, v in d["params"].items())
        print(f"{d['name']:<11} {params}")
        print(f"{'':<11} {d['description']}")


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-builtins":
        _list_builtins(args.json)
        return EXIT_OK
    try:
        initial = _bundle_config(args) if args.command == "verify" else None
        cfg, out = config_from_args(args, initial)
        if args.command == "jets":
            bundle = run_jets(cfg, timings=out.timings)
            _emit(dumps_bundle(bundle), out.path)
            if out.csv:
                write_csv(bundle, out.csv)
            return EXIT_OK
        if args.command == "verify":
            criteria, code = run_verify(cfg, _read_bundle(args.bundle))
            print("\n".join(c.line() for c in criteria))
            # The config file's [output] section names the bundle, never the report.
            if args.output:
                Path(args.output).write_text(json.dumps([asdict(c) for c in criteria], indent=1) + "\n")
            return code
        if args.command == "conjecture":
            report, code = run_conjecture(cfg)
            _emit(json.dumps(report, indent=1) + "\n", args.output)
            print(f"{'PASS' if report['passed'] else 'FAIL'} t0 identities: residual "
                  f"{report['max_identity_residual']:.3e}, U_k discrepancy "
                  f"{report['max_u_discrepancy']:.3e}", file=sys.stderr)
            return code
    except ConfigError as exc:
        print(f"varjet: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleConstraint as exc:
        print(f"varjet: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (IntegrationError, ZeroPivotError, SingularEvaluation, SingularBlockError) as exc:
        print(f"varjet: integration failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    return EXIT_CONFIG


def _read_bundle(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read bundle {path}: {exc}") from exc


def _bundle_config(args: argparse.Namespace) -> RunConfig | None:
    """The configuration echoed in the bundle, used when no system is given on the command line."""
    if args.config or args.builtin or args.system:
        return None
    echo = _read_bundle(args.bundle).get("metadata", {}).get("config")
    if not isinstance(echo, dict):
        raise ConfigError(f"{args.bundle} carries no configuration; pass one explicitly")
    try:
        return RunConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in echo.items()})
    except TypeError as exc:
        raise ConfigError(f"{args.bundle}: unreadable configuration echo: {exc}") from exc


if __name__ == "__main__":
    sys.exit(main())

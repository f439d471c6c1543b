"""Declarative parameter sweeps with deterministic, ordered output.

A sweep config is a flat JSON object with one ``sweep`` block::

    {
      "model": "quadratic",
      "omega": 1.0, "Omega": 0.01, "epsilon": 0.33, "chi": 1.0,
      "g2_bar": 0.0,
      "outputs": ["energy", "sigma_z", "fq_ed"],
      "sweep": {"param": "g2_bar", "start": 0.0, "stop": 0.99, "count": 100,
                "spacing": "linear"},
      "workers": 4
    }
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import RabiError
from .metrology import PARAMETERS, qfi_fidelity, qfi_state_derivative, qfi_variational
from .model import Coupling, ModelParams, SolveOptions, ground_state
from .observables import spin_expectation, x_squared
from .variational import minimize_ansatz

OUTPUTS = ("energy", "gap", "sigma_x", "sigma_z", "x2", "fq_ed", "fq_fid",
           "fq_rho", "fq_xi", "xi_plus", "xi_minus", "c_plus_sq")
ED_OUTPUTS = frozenset(OUTPUTS[:7])
VARIATIONAL_OUTPUTS = frozenset(OUTPUTS[7:])

COUPLING_KEYS = ("g", "g_bar", "g2", "g2_bar", "g1", "g1_bar")
PHYSICAL_KEYS = ("omega", "Omega", "epsilon", "chi") + COUPLING_KEYS
SOLVER_KEYS = ("n_start", "n_cap", "growth", "energy_tol")
TOP_KEYS = ("model", "outputs", "sweep", "workers", "qfi_parameter", "delta", "format") \
    + PHYSICAL_KEYS + SOLVER_KEYS
SWEEP_KEYS = ("param", "start", "stop", "count", "spacing")

WORKERS_ENV = "NLRABI_WORKERS"


class ConfigError(RabiError, ValueError):
    """Invalid sweep/point configuration; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class SweepAxis:
    param: str
    start: float
    stop: float
    count: int
    spacing: str = "linear"

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class SweepSpec:
    model: str = "quadratic"
    physical: dict = field(default_factory=dict)
    outputs: tuple = ("energy",)
    axis: SweepAxis | None = None
    solver: SolveOptions = SolveOptions(strict=False)
    workers: int = 1
    qfi_parameter: str | None = None
    delta: float | None = None
    format: str = "csv"


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(int(raw), 1)
    except ValueError:
        raise ConfigError(WORKERS_ENV, f"expected an integer, got {raw!r}") from None


def _number(key, value, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if kind is int:
        if float(value) != int(value):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def make_params(model: str, physical: dict) -> ModelParams:
    """Build :class:`ModelParams` from flat keys, naming the bad key on failure."""
    try:
        coupling = Coupling(model)
    except ValueError:
        raise ConfigError("model", f"must be 'quadratic' or 'linear', got {model!r}") from None
    values = {k: physical[k] for k in ("omega", "Omega", "epsilon", "chi") if k in physical}
    given = [k for k in COUPLING_KEYS if k in physical]
    if len(given) > 1:
        raise ConfigError(given[1], f"coupling given twice ({', '.join(given)})")
    if coupling is Coupling.LINEAR:
        values.setdefault("Omega", 1.0)
        values.pop("chi", None)
        bad = [k for k in given if k.startswith("g2")]
    else:
        bad = [k for k in given if k.startswith("g1")]
    if bad:
        raise ConfigError(bad[0], f"not a coupling of the {model} model")
    try:
        params = ModelParams(coupling=coupling, **values)
        if given:
            key = given[0]
            value = physical[key]
            params = params.with_g_bar(value) if key.endswith("_bar") else params.replace(g=value)
    except RabiError as exc:
        key = given[0] if given and "collapse" in str(exc) else _guess_field(str(exc))
        raise ConfigError(key, str(exc)) from None
    return params


def _guess_field(message: str) -> str:
    for key in ("Omega", "omega", "epsilon", "chi"):
        if message.startswith(key):
            return key
    return "params"


def parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(config: dict, overrides: list[str]) -> dict:
    """Apply ``key=value`` overrides; dotted keys reach into the sweep block."""
    config = json.loads(json.dumps(config))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must look like key=value")
        key, raw = item.split("=", 1)
        value = parse_value(raw)
        if key == "outputs" and isinstance(value, str):
            value = [v for v in value.split(",") if v]
        if "." in key:
            head, sub = key.split(".", 1)
            config.setdefault(head, {})
            if not isinstance(config[head], dict):
                raise ConfigError(head, "expected an object")
            config[head][sub] = value
        else:
            config[key] = value
    return config


def parse_config(config: dict, require_sweep: bool = True) -> SweepSpec:
    if not isinstance(config, dict):
        raise ConfigError("config", "expected a JSON object")
    for key in config:
        if key not in TOP_KEYS:
            raise ConfigError(key, "unknown key")
    model = config.get("model", "quadratic")
    physical = {k: _number(k, config[k]) for k in PHYSICAL_KEYS if k in config}
    base = make_params(model, physical)

    outputs = config.get("outputs", ["energy"])
    if isinstance(outputs, str):
        outputs = [v for v in outputs.split(",") if v]
    if not isinstance(outputs, list) or not outputs:
        raise ConfigError("outputs", "expected a non-empty list")
    for name in outputs:
        if name not in OUTPUTS:
            raise ConfigError("outputs", f"unknown output {name!r}; valid: {', '.join(OUTPUTS)}")
    if len(set(outputs)) != len(outputs):
        raise ConfigError("outputs", "duplicate output names")
    wants_vm = any(o in VARIATIONAL_OUTPUTS for o in outputs)
    if wants_vm and not base.is_quadratic:
        raise ConfigError("model", "variational outputs require the quadratic model")
    if wants_vm and base.chi != 1.0:
        raise ConfigError("chi", f"variational outputs require chi = 1, got chi = {base.chi}")

    solver_kwargs = {}
    for key in SOLVER_KEYS:
        if key in config:
            kind = int if key in ("n_start", "n_cap") else float
            solver_kwargs[key] = _number(key, config[key], kind)
    solver = SolveOptions(strict=False, **solver_kwargs)

    workers = _number("workers", config["workers"], int) if "workers" in config \
        else default_workers()
    if workers < 1:
        raise ConfigError("workers", "must be at least 1")

    fmt = config.get("format", "csv")
    if fmt not in ("csv", "jsonl"):
        raise ConfigError("format", f"must be 'csv' or 'jsonl', got {fmt!r}")

    delta = _number("delta", config["delta"]) if "delta" in config else None
    qfi_parameter = config.get("qfi_parameter")
    if qfi_parameter is not None:
        if qfi_parameter not in PARAMETERS:
            raise ConfigError("qfi_parameter", f"must be one of {', '.join(PARAMETERS)}")
        if qfi_parameter.startswith("g2") != base.is_quadratic:
            raise ConfigError("qfi_parameter", f"{qfi_parameter!r} does not match model {model!r}")

    axis = None
    if "sweep" in config:
        axis = _parse_axis(config["sweep"], model, physical, wants_vm)
    elif require_sweep:
        raise ConfigError("sweep", "missing sweep block")

    return SweepSpec(model=model, physical=physical, outputs=tuple(outputs), axis=axis,
                     solver=solver, workers=workers, qfi_parameter=qfi_parameter,
                     delta=delta, format=fmt)


def _parse_axis(block, model, physical, wants_vm) -> SweepAxis:
    if not isinstance(block, dict):
        raise ConfigError("sweep", "expected an object")
    for key in block:
        if key not in SWEEP_KEYS:
            raise ConfigError(f"sweep.{key}", "unknown key")
    for key in ("param", "start", "stop", "count"):
        if key not in block:
            raise ConfigError(f"sweep.{key}", "missing")
    param = block["param"]
    if param not in PHYSICAL_KEYS:
        raise ConfigError("sweep.param", f"cannot sweep {param!r}; valid: {', '.join(PHYSICAL_KEYS)}")
    axis = SweepAxis(param=param, start=_number("sweep.start", block["start"]),
                     stop=_number("sweep.stop", block["stop"]),
                     count=_number("sweep.count", block["count"], int),
                     spacing=block.get("spacing", "linear"))
    if axis.count < 2:
        raise ConfigError("sweep.count", "must be at least 2")
    if axis.spacing not in ("linear", "log"):
        raise ConfigError("sweep.spacing", "must be 'linear' or 'log'")
    if axis.spacing == "log" and (axis.start <= 0 or axis.stop <= 0):
        raise ConfigError("sweep.start", "log spacing needs positive endpoints")
    if wants_vm and param == "chi" and (axis.start != 1.0 or axis.stop != 1.0):
        raise ConfigError("chi", "variational outputs require chi = 1 throughout the sweep")
    # both endpoints must be valid models (catches g2_bar >= 1)
    for end in ("start", "stop"):
        swept = {k: v for k, v in physical.items()
                 if not (param in COUPLING_KEYS and k in COUPLING_KEYS)}
        swept[param] = getattr(axis, end)
        try:
            make_params(model, swept)
        except ConfigError as exc:
            raise ConfigError(f"sweep.{end}", str(exc)) from None
    return axis


def point_params(spec: SweepSpec, value: float | None = None) -> ModelParams:
    physical = dict(spec.physical)
    if spec.axis is not None and value is not None:
        if spec.axis.param in COUPLING_KEYS:
            physical = {k: v for k, v in physical.items() if k not in COUPLING_KEYS}
        physical[spec.axis.param] = value
    return make_params(spec.model, physical)


def evaluate(params: ModelParams, outputs, solver: SolveOptions,
             qfi_parameter=None, delta=None) -> tuple[dict, bool, int]:
    """Requested outputs at one parameter point.

    Failures never raise: the affected outputs become NaN and the point is
    flagged unconverged.
    """
    values = {}
    ok = True
    n_max = 0
    if any(o in ED_OUTPUTS for o in outputs):
        gs = ground_state(params, solver)
        ok, n_max = gs.converged, gs.n_max
        ed = {
            "energy": lambda: gs.energy,
            "gap": lambda: gs.gap,
            "sigma_x": lambda: spin_expectation(gs, "x"),
            "sigma_z": lambda: spin_expectation(gs, "z"),
            "x2": lambda: x_squared(gs),
            "fq_ed": lambda: qfi_state_derivative(params, qfi_parameter, delta, solver,
                                                  center=gs).total,
            "fq_fid": lambda: qfi_fidelity(params, qfi_parameter, delta, solver,
                                           center=gs).total,
        }
        for name in outputs:
            if name in ed:
                try:
                    values[name] = float(ed[name]())
                except RabiError:
                    values[name], ok = math.nan, False
    if any(o in VARIATIONAL_OUTPUTS for o in outputs):
        try:
            sol = minimize_ansatz(params)
            vm = {"xi_plus": sol.xi_plus, "xi_minus": sol.xi_minus,
                  "c_plus_sq": sol.c_plus ** 2}
            if "fq_rho" in outputs or "fq_xi" in outputs:
                q = qfi_variational(params, qfi_parameter, delta, solution=sol)
                vm["fq_rho"], vm["fq_xi"] = q.rho_part, q.xi_part
        except RabiError:
            vm, ok = {}, False
        for name in outputs:
            if name in VARIATIONAL_OUTPUTS:
                values[name] = float(vm.get(name, math.nan))
    return values, ok, n_max


def make_row(spec: SweepSpec, value: float | None) -> dict:
    params = point_params(spec, value)
    values, ok, n_max = evaluate(params, spec.outputs, spec.solver,
                                 spec.qfi_parameter, spec.delta)
    row = {}
    if spec.axis is not None:
        row[spec.axis.param] = float(value)
    for name in spec.outputs:
        row[name] = values[name]
    row["converged"] = ok
    row["n_max"] = n_max
    return row


def _row_task(args):
    spec, value = args
    return make_row(spec, value)


def parallel_map(fn, items, workers: int):
    """Order-preserving map; ``workers == 1`` runs in-process."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items, chunksize=1))


def run_sweep(spec: SweepSpec) -> list[dict]:
    if spec.axis is None:
        raise ConfigError("sweep", "missing sweep block")
    values = [float(v) for v in spec.axis.values()]
    return parallel_map(_row_task, [(spec, v) for v in values], spec.workers)


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".17g")


def rows_to_csv(rows: list[dict], header: list[str] | None = None) -> str:
    header = header or (list(rows[0]) if rows else [])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(row[h]) for h in header])
    return buf.getvalue()


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def rows_to_jsonl(rows: list[dict]) -> str:
    return "".join(json.dumps({k: _json_safe(v) for k, v in row.items()}) + "\n"
                   for row in rows)


def spec_header(spec: SweepSpec) -> list[str]:
    head = [spec.axis.param] if spec.axis is not None else []
    return head + list(spec.outputs) + ["converged", "n_max"]


"""Scenario files: JSON schema, parsing with located errors, and compilation to geometry objects."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from ..exprjet import Expr, ExprBindError, ExprError, ExprSyntaxError, as_expr, bind
from ..exprjet.parser import constant_value
from ..geometry import Chart, GeometryError, MetricPatch
from ..soliton import SolitonInstance
from ..warp import PeriodicChart, WarpedProduct, WarpError, build_warped

DEFAULT_COUNT = 32
DEFAULT_SEED = 0
RETRY_FACTOR = 10
PRNG = "numpy.random.PCG64"


class InputError(Exception):
    """Bad scenario input; maps to exit code 2."""


_EXPR = {"type": ["string", "number"]}
_CHART = {
    "type": "object",
    "required": ["coordinates"],
    "properties": {
        "coordinates": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "constraints": {"type": "array", "items": _EXPR},
        "name": {"type": "string"},
    },
    "additionalProperties": False,
}
_MATRIX = {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": _EXPR}}
_SPACE = {
    "type": "object",
    "required": ["chart", "metric"],
    "properties": {"name": {"type": "string"}, "chart": _CHART, "metric": _MATRIX},
    "additionalProperties": False,
}
_REF = {"oneOf": [{"type": "string"}, _SPACE]}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["name", "checks"],
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "description": {"type": "string"},
        "chart": _CHART,
        "metric": _MATRIX,
        "fields": {"type": "object", "additionalProperties": _EXPR},
        "vector_fields": {
            "type": "object",
            "additionalProperties": {"type": "array", "minItems": 1, "items": _EXPR},
        },
        "sampling": {
            "type": "object",
            "properties": {
                "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
                "count": {"type": "integer", "minimum": 1},
                "box": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "number"}},
                },
            },
            "additionalProperties": False,
        },
        "checks": {
            "type": "array",
            "items": {
                "oneOf": [
                    {"type": "string"},
                    {
                        "type": "object",
                        "required": ["id"],
                        "properties": {
                            "id": {"type": "string"},
                            "tol": {"type": "number", "exclusiveMinimum": 0},
                            "expected": {
                                "oneOf": [
                                    _EXPR,
                                    {"type": "object", "additionalProperties": {"type": "number"}},
                                ]
                            },
                        },
                        "additionalProperties": False,
                    },
                ]
            },
        },
        "fit_coefficients": {"type": "boolean"},
        "warped": {
            "type": "object",
            "required": ["base", "fiber", "phi"],
            "properties": {"base": _REF, "fiber": _REF, "phi": _EXPR},
            "additionalProperties": False,
        },
        "periodic": {
            "type": "object",
            "required": ["periods"],
            "properties": {
                "periods": {"type": "array", "minItems": 1, "items": _EXPR},
                "resolution": {"type": "integer", "minimum": 2},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


def _path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def validate(data) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: (list(e.absolute_path), e.message))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        raise InputError(f"schema violation at {_path(err.absolute_path)}: {err.message}")


def parse_text(raw: bytes, source: str = "<scenario>") -> dict:
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise InputError(f"{source}: invalid UTF-8 at byte offset {e.start}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        offset = len(text[: e.pos].encode("utf-8"))
        raise InputError(f"{source}: malformed JSON at byte offset {offset}: {e.msg}") from None
    validate(data)
    return data


def serialize(data: dict) -> str:
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def load(path_or_name: str) -> dict:
    """Read a scenario file, or resolve a builtin name when no such file exists."""
    from .builtins import builtin, is_builtin

    p = Path(path_or_name)
    if p.is_file():
        return parse_text(p.read_bytes(), str(p))
    if is_builtin(path_or_name):
        return builtin(path_or_name)
    raise InputError(f"no scenario file or builtin named {path_or_name!r}")


# -- compilation ---------------------------------------------------------------


def _expr(value, where: str, coords=None) -> Expr:
    try:
        e = as_expr(value)
        return bind(e, coords) if coords is not None else e
    except ExprSyntaxError as err:
        raise InputError(f"{where}: {err}") from None
    except ExprBindError as err:
        raise InputError(f"{where}: {err}") from None


def _space(ref, where: str) -> MetricPatch:
    from .builtins import builtin

    if isinstance(ref, str):
        try:
            spec = builtin(ref)
        except KeyError as err:
            raise InputError(f"{where}: {err.args[0]}") from None
        where = f"{where}<{ref}>"
        if "warped" in spec:
            raise InputError(f"{where}: a warped scenario cannot serve as a factor")
    else:
        spec = ref
    return _chart_metric(spec["chart"], spec["metric"], where)


def _chart_metric(chart_spec: dict, matrix, where: str) -> MetricPatch:
    coords = tuple(chart_spec["coordinates"])
    cons = [_expr(c, f"{where}.chart.constraints[{i}]", coords) for i, c in enumerate(chart_spec.get("constraints", []))]
    try:
        chart = Chart(coords, tuple(cons), name=chart_spec.get("name", ""))
    except GeometryError as err:
        raise InputError(f"{where}.chart: {err}") from None
    n = chart.dimension
    if len(matrix) != n or any(len(r) != n for r in matrix):
        raise InputError(f"{where}.metric: expected a {n}x{n} matrix")
    rows = [[_expr(v, f"{where}.metric[{i}][{j}]", coords) for j, v in enumerate(r)] for i, r in enumerate(matrix)]
    try:
        return MetricPatch.from_matrix(chart, rows)
    except GeometryError as err:
        raise InputError(f"{where}.metric: {err}") from None


@dataclass
class Setup:
    """A compiled scenario ready for sampling and checks."""

    data: dict
    metric: MetricPatch
    fields: dict[str, Expr]
    vector_fields: dict[str, tuple[Expr, ...]]
    box: np.ndarray
    seed: int
    count: int
    warped: WarpedProduct | None = None
    periodic: PeriodicChart | None = None
    base_metric: MetricPatch | None = None
    checks: list[dict] = field(default_factory=list)

    @property
    def chart(self) -> Chart:
        return self.metric.chart

    @property
    def name(self) -> str:
        return self.data["name"]

    def base(self) -> MetricPatch:
        """The metric on which base-level conditions are evaluated."""
        return self.base_metric if self.base_metric is not None else self.metric

    def field_or(self, name: str, default):
        return self.fields[name] if name in self.fields else as_expr(default)

    def instance(self, lam=None, mu=None) -> SolitonInstance:
        if "f" in self.fields:
            kw = {"potential": self.fields["f"]}
        elif "xi" in self.vector_fields:
            kw = {"xi": self.vector_fields["xi"]}
        else:
            raise InputError("soliton checks need fields.f or vector_fields.xi")
        if "eta" in self.vector_fields:
            kw["eta"] = self.vector_fields["eta"]
        return SolitonInstance(
            self.metric,
            lam=self.field_or("lambda", 0.0) if lam is None else lam,
            mu=self.field_or("mu", 0.0) if mu is None else mu,
            **kw,
        )

    def sample(self, count: int | None = None, seed: int | None = None) -> np.ndarray:
        """Uniform draws in the box, rejected against the chart's domain constraints."""
        count = self.count if count is None else count
        seed = self.seed if seed is None else seed
        rng = np.random.Generator(np.random.PCG64(seed))
        lo, hi = self.box[:, 0], self.box[:, 1]
        cand = lo + (hi - lo) * rng.random((RETRY_FACTOR * count, len(lo)))
        ok = self.chart.admissible(cand)
        if ok.sum() < count:
            raise InputError(
                f"domain sampling exhausted: {int(ok.sum())} of {RETRY_FACTOR * count} draws "
                f"were admissible, {count} needed"
            )
        return cand[ok][:count]


def compile_scenario(data: dict) -> Setup:
    warped = None
    base_metric = None
    if "warped" in data:
        if "chart" in data or "metric" in data:
            raise InputError("$.warped: give either warped or chart/metric, not both")
        w = data["warped"]
        base = _space(w["base"], "$.warped.base")
        fiber = _space(w["fiber"], "$.warped.fiber")
        phi = _expr(w["phi"], "$.warped.phi", base.chart.coordinates)
        metric = None
        base_metric = base
    else:
        if "chart" not in data or "metric" not in data:
            raise InputError("$: a scenario needs chart and metric (or warped)")
        metric = _chart_metric(data["chart"], data["metric"], "$")

    coords = (base_metric.chart if base_metric is not None else metric.chart).coordinates
    if base_metric is not None:
        all_coords = coords + fiber.chart.coordinates
    else:
        all_coords = coords
    # scalar fields live on the base in the warped case
    fields = {k: _expr(v, f"$.fields.{k}", coords) for k, v in data.get("fields", {}).items()}
    if base_metric is not None and "phi" in fields:
        raise InputError("$.fields.phi: the warping function is given by warped.phi")
    vfs = {}
    for k, comps in data.get("vector_fields", {}).items():
        if len(comps) != len(all_coords):
            raise InputError(f"$.vector_fields.{k}: needs {len(all_coords)} components")
        vfs[k] = tuple(_expr(c, f"$.vector_fields.{k}[{i}]", all_coords) for i, c in enumerate(comps))

    samp = data.get("sampling", {})
    box = np.asarray(samp.get("box", [[-1.0, 1.0]] * len(all_coords)), dtype=float)
    if box.shape != (len(all_coords), 2):
        raise InputError(f"$.sampling.box: needs {len(all_coords)} [lo, hi] pairs")
    if np.any(box[:, 0] > box[:, 1]):
        raise InputError("$.sampling.box: lo > hi")

    setup = Setup(
        data=data,
        metric=metric,
        fields=fields,
        vector_fields=vfs,
        box=box,
        seed=int(samp.get("seed", DEFAULT_SEED)),
        count=int(samp.get("count", DEFAULT_COUNT)),
        base_metric=base_metric,
        checks=[c if isinstance(c, dict) else {"id": c} for c in data["checks"]],
    )
    if base_metric is not None:
        # phi positivity is validated on the base part of a sample plan
        probe = Setup(data, base_metric, {}, {}, box[: len(coords)], setup.seed, setup.count)
        try:
            warped = build_warped(base_metric, fiber, phi, probe.sample())
        except (WarpError, GeometryError) as err:
            raise InputError(f"$.warped: {err}") from None
        setup.metric = warped.metric
        setup.warped = warped
        setup.fields["phi"] = phi

    if "periodic" in data:
        per = data["periodic"]
        periods = []
        for i, p in enumerate(per["periods"]):
            v = constant_value(_expr(p, f"$.periodic.periods[{i}]"))
            periods.append(v)
        try:
            setup.periodic = PeriodicChart(setup.chart, tuple(periods), per.get("resolution", 64))
        except ValueError as err:
            raise InputError(f"$.periodic: {err}") from None
    return setup


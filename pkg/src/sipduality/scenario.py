"""Scenario files and verification reports.

A scenario is a JSON object with a ``schema_version`` field; a file may also
hold ``{"schema_version": 1, "scenarios": [...]}`` to run several in turn.
Reports serialize deterministically: keys are sorted, floats are written
with ``repr`` precision, and records are ordered by suite then check name.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from .fock import SiteSpace
from .sip import RateKernel

__all__ = [
    "SCHEMA_VERSION",
    "SUITES",
    "DEFAULT_THRESHOLDS",
    "ScenarioError",
    "ScenarioParseError",
    "ScenarioValidationError",
    "Scenario",
    "CheckRecord",
    "Table",
    "Report",
    "load_scenarios",
    "default_scenario",
]

SCHEMA_VERSION = 1
SUITES = ("algebra", "pascal", "sip", "meixner", "unitary", "intertwine")

DEFAULT_THRESHOLDS = {
    "exact": 1e-12,  # exact algebra, adjointness, reversibility
    "block_exact": 1e-10,  # sector-wise exact checks involving exponentials
    "meixner": 1e-9,  # truncated sums of Meixner identities
    "unitarity": 1e-10,
    "theorem": 1e-8,  # unitary vs Meixner expansion, truncation sensitive
    "transform": 1e-7,  # exponential-state transform
    "symmetry": 1e-7,  # P_t U - U P_t on low-sector probes
    "sigma": 4.0,  # Monte Carlo agreement in standard errors
    "significance": 1e-3,  # chi-square tests
    "detection": 1e-6,  # negative control must exceed this
}


class ScenarioError(Exception):
    exit_code = 1


class ScenarioParseError(ScenarioError):
    exit_code = 2


class ScenarioValidationError(ScenarioError):
    exit_code = 3


def _kernel_from_spec(spec: Any, m: int) -> RateKernel:
    if not isinstance(spec, dict) or "type" not in spec:
        raise ScenarioValidationError("kernel must be an object with a 'type'")
    kind = spec["type"]
    try:
        if kind == "constant":
            return RateKernel.constant(m, float(spec.get("value", 1.0)))
        if kind == "product":
            phi = np.asarray(spec["phi"], dtype=float)
            if phi.shape != (m,) or np.any(phi < 0):
                raise ScenarioValidationError(f"product kernel needs {m} non-negative phi values")
            return RateKernel.product_form(phi)
        if kind == "matrix":
            kern = RateKernel(spec["c"])
            if kern.m != m:
                raise ScenarioValidationError(f"kernel matrix is {kern.m}x{kern.m}, space has {m} sites")
            return kern
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioValidationError):
            raise
        raise ScenarioValidationError(f"bad kernel: {exc}") from exc
    raise ScenarioValidationError(f"unknown kernel type {kind!r}")


def _int(raw: dict, key: str, default: int, low: int) -> int:
    value = raw.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int) or value < low:
        raise ScenarioValidationError(f"{key} must be an integer >= {low}, got {value!r}")
    return value


@dataclass(frozen=True)
class Scenario:
    name: str
    alpha: tuple[float, ...]
    p: float
    kernel: dict
    n_max: int = 40
    exact_n_max: int = 12
    intertwine_n_max: int = 6
    convergence: tuple[int, ...] = (10, 20, 40)
    times: tuple[float, ...] = (0.1, 1.0, 5.0)
    mc_samples: int = 100_000
    gillespie_replicas: int = 10_000
    gillespie_time: float = 1.0
    trajectory_replicas: int = 3
    random_trials: int = 20
    seed: int = 42
    suites: tuple[str, ...] = SUITES
    thresholds: dict = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))

    @property
    def space(self) -> SiteSpace:
        return SiteSpace(self.alpha, self.p)

    @property
    def rate_kernel(self) -> RateKernel:
        return _kernel_from_spec(self.kernel, len(self.alpha))

    @classmethod
    def from_dict(cls, raw: Any) -> "Scenario":
        if not isinstance(raw, dict):
            raise ScenarioValidationError("a scenario must be a JSON object")
        version = raw.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ScenarioValidationError(f"unsupported schema_version {version!r}")
        space = raw.get("space")
        if not isinstance(space, dict):
            raise ScenarioValidationError("missing 'space' object with alpha and p")
        try:
            alpha = tuple(float(a) for a in space["alpha"])
            p = float(space["p"])
            SiteSpace(alpha, p)
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioValidationError(f"bad site space: {exc}") from exc
        kernel = raw.get("kernel", {"type": "constant", "value": 1.0})
        _kernel_from_spec(kernel, len(alpha))

        suites = raw.get("suites", list(SUITES))
        if not isinstance(suites, list) or any(s not in SUITES for s in suites):
            raise ScenarioValidationError(f"suites must be a list drawn from {list(SUITES)}")

        thresholds = dict(DEFAULT_THRESHOLDS)
        extra = raw.get("thresholds", {})
        if not isinstance(extra, dict) or any(k not in DEFAULT_THRESHOLDS for k in extra):
            raise ScenarioValidationError(f"threshold keys must be among {sorted(DEFAULT_THRESHOLDS)}")
        for k, v in extra.items():
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
                raise ScenarioValidationError(f"threshold {k} must be a non-negative number")
            thresholds[k] = float(v)

        times = raw.get("times", [0.1, 1.0, 5.0])
        if not isinstance(times, list) or not times or any(
            isinstance(t, bool) or not isinstance(t, (int, float)) or not math.isfinite(t) or t < 0 for t in times
        ):
            raise ScenarioValidationError("times must be a non-empty list of non-negative numbers")
        n_max = _int(raw, "n_max", 40, 2)
        convergence = raw.get("convergence", [10, 20, n_max])
        if (
            not isinstance(convergence, list)
            or len(convergence) < 2
            or any(isinstance(v, bool) or not isinstance(v, int) or v < 2 for v in convergence)
            or sorted(set(convergence)) != convergence
        ):
            raise ScenarioValidationError("convergence must be a strictly increasing list of at least two n_max >= 2")
        gt = raw.get("gillespie_time", 1.0)
        if isinstance(gt, bool) or not isinstance(gt, (int, float)) or not math.isfinite(gt) or gt < 0:
            raise ScenarioValidationError("gillespie_time must be a non-negative number")
        seed = raw.get("seed", 42)
        if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
            raise ScenarioValidationError("seed must be a 64-bit non-negative integer")
        name = raw.get("name", "scenario")
        if not isinstance(name, str) or not name:
            raise ScenarioValidationError("name must be a non-empty string")
        return cls(
            name=name,
            alpha=alpha,
            p=p,
            kernel=kernel,
            n_max=n_max,
            exact_n_max=_int(raw, "exact_n_max", 12, 2),
            intertwine_n_max=_int(raw, "intertwine_n_max", 6, 2),
            convergence=tuple(convergence),
            times=tuple(float(t) for t in times),
            mc_samples=_int(raw, "mc_samples", 100_000, 2),
            gillespie_replicas=_int(raw, "gillespie_replicas", 10_000, 2),
            gillespie_time=float(gt),
            trajectory_replicas=_int(raw, "trajectory_replicas", 3, 0),
            random_trials=_int(raw, "random_trials", 20, 1),
            seed=seed,
            suites=tuple(sorted(suites, key=SUITES.index)),
            thresholds=thresholds,
        )

    def with_overrides(self, seed: int | None = None, suites: list[str] | None = None) -> "Scenario":
        out = self
        if seed is not None:
            if not 0 <= seed < 2**64:
                raise ScenarioValidationError("seed must be a 64-bit non-negative integer")
            out = replace(out, seed=seed)
        if suites is not None:
            if any(s not in SUITES for s in suites):
                raise ScenarioValidationError(f"suites must be drawn from {list(SUITES)}")
            out = replace(out, suites=tuple(sorted(set(suites), key=SUITES.index)))
        return out


def default_scenario(**changes) -> Scenario:
    """Two unit-mass sites, ``p = 0.3``, unit rates, ``n_max = 40``, seed 42."""
    base = {"name": "default", "space": {"alpha": [1.0, 1.0], "p": 0.3}, "kernel": {"type": "constant", "value": 1.0}}
    base.update(changes)
    return Scenario.from_dict(base)


def load_scenarios(path: str | Path) -> list[Scenario]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioParseError(f"cannot read {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{path}: {exc}") from exc
    if isinstance(raw, dict) and "scenarios" in raw:
        items = raw["scenarios"]
        if not isinstance(items, list):
            raise ScenarioValidationError("'scenarios' must be a list")
        scenarios = [Scenario.from_dict({"schema_version": raw.get("schema_version", SCHEMA_VERSION), **s}) for s in items]
        names = [s.name for s in scenarios]
        if len(set(names)) != len(names):
            raise ScenarioValidationError("scenario names must be unique")
        return scenarios
    return [Scenario.from_dict(raw)]


@dataclass(frozen=True)
class CheckRecord:
    suite: str
    name: str
    anchor: str
    statistic: float
    threshold: float
    comparison: str  # "le", "lt" or "ge": how statistic must relate to threshold
    passed: bool
    runtime: float
    coverage: float | None = None
    n_max: int | None = None

    @staticmethod
    def judge(statistic: float, threshold: float, comparison: str) -> bool:
        if math.isnan(statistic):
            return False
        if comparison == "le":
            return statistic <= threshold
        if comparison == "lt":
            return statistic < threshold
        if comparison == "ge":
            return statistic >= threshold
        raise ValueError(f"unknown comparison {comparison!r}")


@dataclass(frozen=True)
class Table:
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
        return buf.getvalue()


@dataclass(frozen=True)
class Report:
    scenario: str
    seed: int
    suites: tuple[str, ...]
    records: tuple[CheckRecord, ...]
    tables: dict  # name -> Table
    schema_version: int = SCHEMA_VERSION

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def to_dict(self, runtime: bool = True) -> dict:
        records = []
        for r in self.records:
            d = asdict(r)
            if not runtime:
                d.pop("runtime")
            records.append(d)
        return {
            "schema_version": self.schema_version,
            "scenario": self.scenario,
            "seed": self.seed,
            "suites": list(self.suites),
            "passed": self.passed,
            "records": records,
            "tables": {k: {"columns": list(t.columns), "rows": [list(r) for r in t.rows]} for k, t in sorted(self.tables.items())},
        }

    def to_json(self, runtime: bool = True) -> str:
        return json.dumps(self.to_dict(runtime), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Report":
        raw = json.loads(text)
        records = tuple(CheckRecord(**r) for r in raw["records"])
        tables = {k: Table(tuple(t["columns"]), tuple(tuple(r) for r in t["rows"])) for k, t in raw["tables"].items()}
        return cls(
            scenario=raw["scenario"],
            seed=raw["seed"],
            suites=tuple(raw["suites"]),
            records=records,
            tables=tables,
            schema_version=raw["schema_version"],
        )

    def records_csv(self) -> str:
        cols = [f for f in CheckRecord.__dataclass_fields__]
        return Table(tuple(cols), tuple(tuple(getattr(r, c) for c in cols) for r in self.records)).to_csv()

    @staticmethod
    def merge(scenario: str, seed: int, suites, records, tables) -> "Report":
        """Assemble a report with records in (suite, name) order."""
        ordered = tuple(sorted(records, key=lambda r: (r.suite, r.name)))
        keys = [(r.suite, r.name) for r in ordered]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate check records")
        return Report(scenario, seed, tuple(suites), ordered, dict(tables))

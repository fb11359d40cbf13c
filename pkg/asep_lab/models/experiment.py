"""
Experiment specifications, per-trial records and reports
"""
import math
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from asep_lab.errors import SpecError
from asep_lab.models.lattice import ModelParams

SCHEMA_VERSION = 1


class ExperimentKind(str, Enum):
    SPEED = "speed"
    COUPLING_AUDIT = "coupling_audit"
    IDENTITY = "identity"
    BLOCK = "block"
    FIT_ALPHA = "fit_alpha"
    ALPHA_SWEEP = "alpha_sweep"


INITIAL_DATA = ("two_species", "single_second_class", "coupled")


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to re-run an experiment bit for bit"""
    kind: ExperimentKind
    p: float = 1.0
    L: int = 0
    t: float = 500.0
    n_trials: int = 10000
    master_seed: int = 0
    initial_data: str = "two_species"
    vacate_origin: bool = False
    safety: float = 5.0
    s_grid: Tuple[float, float, int] = (-1.0, 1.0, 201)
    identity_I: Tuple[int, ...] = ()
    identity_J: Tuple[int, ...] = ()
    identity_P: int = 0
    block_s: float = 0.0
    t_grid: Tuple[float, ...] = ()
    p_grid: Tuple[float, ...] = ()
    audit_stride: int = 1
    ks_threshold: Optional[float] = None
    median_tolerance: Optional[float] = None
    z_threshold: float = 3.0
    block_tolerance: float = 0.02
    alpha_range: Optional[Tuple[float, float]] = None

    @property
    def params(self) -> ModelParams:
        return ModelParams(p=self.p, L=self.L)

    @property
    def ks_limit(self) -> float:
        """Explicit threshold, else 0.03 for the TASEP uniform law and 0.04 otherwise"""
        if self.ks_threshold is not None:
            return self.ks_threshold
        return 0.03 if self.p == 1.0 and self.L == 0 else 0.04

    @property
    def block_times(self) -> Tuple[float, ...]:
        return tuple(sorted(self.t_grid)) if self.t_grid else (self.t,)

    def validate(self) -> "ExperimentSpec":
        errors: List[str] = []
        try:
            params = self.params
        except ValueError as e:
            errors.append(str(e))
            params = None
        if self.n_trials < 1:
            errors.append("n_trials must be at least 1")
        if self.t < 0 or math.isnan(self.t):
            errors.append("t must be non-negative")
        if self.kind in (ExperimentKind.SPEED, ExperimentKind.FIT_ALPHA, ExperimentKind.ALPHA_SWEEP) and self.t <= 0:
            errors.append("speed experiments need t > 0")
        if not 0 <= self.master_seed < 2 ** 64:
            errors.append("master_seed must fit in 64 unsigned bits")
        if self.initial_data not in INITIAL_DATA:
            errors.append(f"initial_data must be one of {', '.join(INITIAL_DATA)}")
        if self.kind in (ExperimentKind.FIT_ALPHA, ExperimentKind.ALPHA_SWEEP) and self.initial_data != "single_second_class":
            errors.append("alpha fits use single_second_class initial data")
        if self.safety < 1:
            errors.append("safety must be at least 1")
        lo, hi, steps = self.s_grid
        if not lo < hi or steps < 2:
            errors.append("s_grid needs lo < hi and at least 2 steps")
        if self.audit_stride < 0:
            errors.append("audit_stride must be non-negative")

        if self.kind == ExperimentKind.IDENTITY:
            I, J, P = self.identity_I, self.identity_J, self.identity_P
            if list(I) != sorted(set(I)) or list(J) != sorted(set(J)):
                errors.append("I and J must be strictly increasing")
            if any(i > P for i in I):
                errors.append("every element of I must be <= P")
            if any(j < 1 for j in J):
                errors.append("every element of J must be >= 1")
            if not I and not J:
                errors.append("I and J cannot both be empty")
        if self.kind == ExperimentKind.BLOCK:
            if params is not None and abs(self.block_s) > params.gamma:
                errors.append(f"|s| must not exceed gamma={params.gamma:g}")
            if any(t <= 0 for t in self.t_grid):
                errors.append("t_grid entries must be positive")
        if self.kind == ExperimentKind.ALPHA_SWEEP:
            if not self.p_grid:
                errors.append("alpha sweep needs a p grid")
            for p in self.p_grid:
                if not 0.5 < p <= 1.0:
                    errors.append(f"p={p} outside (1/2, 1]")
        if self.alpha_range is not None and not 0 < self.alpha_range[0] <= self.alpha_range[1]:
            errors.append("alpha_range must satisfy 0 < lo <= hi")

        if errors:
            raise SpecError("; ".join(errors))
        return self

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["kind"] = self.kind.value
        for key, value in data.items():
            if isinstance(value, tuple):
                data[key] = list(value)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise SpecError(f"unknown spec fields: {', '.join(sorted(unknown))}")
        values = dict(data)
        values["kind"] = ExperimentKind(values["kind"])
        for key in ("s_grid", "identity_I", "identity_J", "t_grid", "p_grid", "alpha_range"):
            if values.get(key) is not None:
                values[key] = tuple(values[key])
        if "s_grid" in values:
            lo, hi, steps = values["s_grid"]
            values["s_grid"] = (float(lo), float(hi), int(steps))
        return cls(**values)


@dataclass
class TrialRecord:
    """Terminal observables of one trial; replayable from (master_seed, trial_index)

    `position` is authoritative. `speed` is the float quotient position / t and is not
    guaranteed to multiply back to position exactly.
    """
    trial_index: int
    master_seed: int
    p: float
    L: int
    t: float
    position: Optional[int] = None
    speed: Optional[float] = None
    events: int = 0
    accepted: int = 0
    wall_time: float = 0.0
    observables: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TrialRecord":
        return cls(**data)

    def comparable(self) -> Dict[str, Any]:
        """Everything except the wall time"""
        data = self.to_dict()
        data.pop("wall_time")
        return data


@dataclass
class Report:
    spec: ExperimentSpec
    records: List[TrialRecord]
    aggregates: Dict[str, Any]
    passed: bool
    curve: Optional[List[Dict[str, float]]] = None
    schema_version: int = SCHEMA_VERSION

    def summary(self) -> Dict[str, Any]:
        return {
            "schema_version": self.schema_version,
            "spec": self.spec.to_dict(),
            "aggregates": self.aggregates,
            "passed": self.passed,
            "n_records": len(self.records),
        }

    def comparable(self) -> Dict[str, Any]:
        """Report content that must not depend on scheduling: no wall times"""
        aggregates = {k: v for k, v in self.aggregates.items() if k != "wall_time"}
        return {
            "summary": {**self.summary(), "aggregates": aggregates},
            "records": [r.comparable() for r in self.records],
            "curve": self.curve,
        }

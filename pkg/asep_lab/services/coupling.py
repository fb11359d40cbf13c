"""
Coupling of the colored step process with the two-species process.

The colored system runs on its own clock. Its particle of color c is paired with the two-species
particle f(c) sitting on the same site. A colored jump into a vacancy is copied by the paired
particle. When colors r > s interchange, the pair labels are swapped if f(r) and f(s) have the
same class (the two-species particles do not move), otherwise the two two-species particles
swap as well. Colors 1..L+1 are exactly the ones paired with second-class particles, so the
leftmost of them tracks the leftmost second-class particle.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np
import structlog

from asep_lab.config import get_settings
from asep_lab.errors import CorruptedStateError, NoParticlesError
from asep_lab.models.lattice import Direction, Label, ModelParams, Window
from asep_lab.services import kernels
from asep_lab.services.dynamics import (
    Event, Observer, SimState, chunk_size, leftmost_of_colors, leftmost_second_class, next_event,
)
from asep_lab.services.initial_data import class_of_colors, init_colored_step, init_two_species
from asep_lab.services.rng import RngStream

logger = structlog.get_logger(__name__)

OUTCOMES = {
    kernels.REJECTED: "rejected",
    kernels.VACANCY_MOVE: "vacancy_move",
    kernels.LABEL_SWAP: "label_swap",
    kernels.CLASS_SWAP: "class_swap",
}
VIOLATIONS = {
    kernels.PROJECTION_VIOLATION: "projection",
    kernels.IDENTITY_VIOLATION: "identity",
    kernels.LABEL_VIOLATION: "site_class",
}


@dataclass
class CouplingStatus:
    """f as a dense array: f[c] is the label id of color c (ids 1..L+1 are n*, larger ids first class)"""
    f: np.ndarray
    L: int

    def label(self, color: int) -> Label:
        return Label.from_id(int(self.f[color]), self.L)

    def second_class_count(self) -> int:
        return int(np.count_nonzero((self.f[1:] >= 1) & (self.f[1:] <= self.L + 1)))

    def is_bijection(self) -> bool:
        ids = self.f[1:]
        return bool(np.array_equal(np.sort(ids), np.arange(1, ids.size + 1)))

    def to_dict(self) -> Dict[int, str]:
        return {c: str(self.label(c)) for c in range(1, self.f.size)}


@dataclass
class CoupledState:
    colored: SimState
    twospec: SimState
    status: CouplingStatus
    label_swaps: int = 0
    last_outcome: Optional[str] = None

    @property
    def L(self) -> int:
        return self.status.L

    @property
    def clock(self) -> float:
        return self.colored.clock


@dataclass
class AuditOutcome:
    events: int = 0
    accepted: int = 0
    label_swaps: int = 0
    violation: Optional[Dict[str, Any]] = None
    checks: Dict[str, int] = field(default_factory=dict)


def init_coupling(params: ModelParams, window: Window) -> CoupledState:
    twospec = SimState.start(init_two_species(params, window), params)
    colored = SimState.start(init_colored_step(window), params)
    # label ids coincide with the colors at time 0, so f starts as the identity
    twospec.config.attach_identities(colored.config.occupancy.copy())
    f = np.arange(colored.config.color_position.size, dtype=np.int64)
    return CoupledState(colored=colored, twospec=twospec, status=CouplingStatus(f=f, L=params.L))


def _arrays(state: CoupledState):
    c = state.colored.config
    t = state.twospec.config
    return (c.occupancy, c.particles, c.slot, c.color_position,
            t.occupancy, t.particles, t.slot, t.identity, t.identity_position,
            state.status.f)


def check_labels(state: CoupledState) -> bool:
    """Every colored particle sits on the two-species particle it is paired with"""
    c = state.colored.config
    t = state.twospec.config
    return bool(kernels.labels_hold(c.occupancy, t.occupancy, t.identity, state.status.f, state.L))


def check_identity(state: CoupledState) -> bool:
    L = state.L
    return leftmost_second_class(state.twospec) == leftmost_of_colors(state.colored, range(1, L + 2))


def check_projection(state: CoupledState) -> bool:
    projected = class_of_colors(state.colored.config.occupancy, state.L)
    return bool(np.array_equal(projected, state.twospec.config.occupancy))


def coupled_step(state: CoupledState, stream: RngStream) -> CoupledState:
    if not check_labels(state):
        raise CorruptedStateError("site-class consistency violated before the step")
    event = next_event(state.colored, stream)
    outcome = kernels.coupled_move(*_arrays(state), state.L, state.colored.config.window.lo,
                                   event.site, int(event.direction))
    accepted = outcome != kernels.REJECTED
    for sim in (state.colored, state.twospec):
        sim.clock = event.time
        sim.events += 1
    state.colored.accepted += int(accepted)
    state.colored.last_event = Event(event.time, event.site, event.direction, accepted)
    state.twospec.accepted += int(outcome in (kernels.VACANCY_MOVE, kernels.CLASS_SWAP))
    state.label_swaps += int(outcome == kernels.LABEL_SWAP)
    state.last_outcome = OUTCOMES[int(outcome)]
    return state


def run_coupled_until(state: CoupledState, t_end: float, stream: RngStream, stride: int = 1,
                      observer: Optional[Observer] = None, chunk_events: Optional[int] = None) -> AuditOutcome:
    """
    Advance the coupled pair to t_end, auditing after every event (full-window projection and
    label scans every `stride` events). Stops at the first violation and describes it.
    """
    outcome = AuditOutcome()
    if not (check_projection(state) and check_identity(state) and check_labels(state)):
        outcome.violation = {"kind": "initial", "time": state.clock, "event_index": 0}
        return outcome
    if t_end <= state.clock:
        state.colored.clock = state.twospec.clock = max(state.clock, t_end)
        return outcome
    if state.colored.config.particle_count == 0:
        raise NoParticlesError("configuration has no particles")

    settings = get_settings()
    chunk = chunk_size(state.colored.config.particle_count, t_end - state.clock,
                       int(chunk_events or settings.chunk_events))
    record = observer is not None
    size = chunk if record else 0
    out_time = np.empty(size, dtype=np.float64)
    out_site = np.empty(size, dtype=np.int64)
    out_step = np.empty(size, dtype=np.int64)
    out_outcome = np.empty(size, dtype=np.int64)
    lo = state.colored.config.window.lo
    p = state.colored.params.p

    clock = state.clock
    while True:
        uniforms = stream.peek(3 * chunk)
        clock, used, events, accepted, label_swaps, finished, violation, last_site, last_step = kernels.advance_coupled(
            *_arrays(state), state.L, lo, p, clock, float(t_end), uniforms, int(stride),
            record, out_time, out_site, out_step, out_outcome)
        stream.advance(used)
        outcome.events += events
        outcome.accepted += accepted
        outcome.label_swaps += label_swaps
        if record:
            for e in range(events):
                observer(Event(float(out_time[e]), int(out_site[e]), Direction(int(out_step[e])),
                               bool(out_outcome[e] != kernels.REJECTED)))
        if violation != kernels.OK:
            outcome.violation = {
                "kind": VIOLATIONS[int(violation)],
                "time": float(clock),
                "event_index": outcome.events,
                "site": int(last_site),
                "direction": Direction(int(last_step)).label,
                "counter": stream.counter,
            }
            logger.error("coupling_violation", **outcome.violation)
            break
        if finished:
            clock = float(t_end)
            break

    for sim in (state.colored, state.twospec):
        sim.clock = float(clock)
        sim.events += outcome.events
    state.colored.accepted += outcome.accepted
    state.label_swaps += outcome.label_swaps
    outcome.checks = {"events_checked": outcome.events, "full_scans": outcome.events // stride if stride > 0 else 0}
    if settings.audit:
        state.colored.config.audit()
        state.twospec.config.audit()
    return outcome

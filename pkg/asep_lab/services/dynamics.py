"""
Continuous-time dynamics of the single-species, two-species and colored exclusion processes.

All three variants share one swap rule and one uniformized event clock: events arrive at total
rate N (the particle count), the mover is a uniformly chosen particle and it tries a right jump
with probability p. A jump is carried out iff the target color is strictly lower than the
mover's; jumps leaving the window are suppressed.
"""
import csv
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Optional, TextIO

import numpy as np
import structlog

from asep_lab.config import get_settings
from asep_lab.errors import DomainError, NoParticlesError
from asep_lab.models.lattice import SECOND_CLASS, Configuration, Direction, Mode, ModelParams
from asep_lab.services import kernels
from asep_lab.services.rng import RngStream

logger = structlog.get_logger(__name__)

_NO_COLORS = np.empty(1, dtype=np.int64)
# smallest chunk handed to the compiled loops
MIN_CHUNK = 64


@dataclass(frozen=True)
class Event:
    time: float
    site: int
    direction: Direction
    accepted: bool = False

    def to_row(self):
        return [repr(float(self.time)), self.site, self.direction.label, int(self.accepted)]


@dataclass
class SimState:
    config: Configuration
    params: ModelParams
    mode: Mode
    clock: float = 0.0
    events: int = 0
    accepted: int = 0
    last_event: Optional[Event] = None

    @classmethod
    def start(cls, config: Configuration, params: ModelParams) -> "SimState":
        return cls(config=config, params=params, mode=config.mode)

    def _color_index(self):
        if self.mode == Mode.COLORED:
            return self.config.color_position, True
        return _NO_COLORS, False


Observer = Callable[[Event], None]


def chunk_size(particles: int, span: float, limit: int) -> int:
    """Events per compiled chunk: about the expected number of events left, capped at `limit`"""
    expected = particles * span
    return int(min(limit, max(MIN_CHUNK, 1.25 * expected + MIN_CHUNK)))


def swap_permitted(src: int, dst: int) -> bool:
    if src < 1:
        raise DomainError("the mover must be a particle (color >= 1)")
    return dst < src


def next_event(state: SimState, stream: RngStream) -> Event:
    """Sample the next event; consumes exactly three uniforms (waiting time, mover, direction)"""
    n = state.config.particle_count
    if n == 0:
        raise NoParticlesError("configuration has no particles")
    u1 = stream.next_uniform()
    u2 = stream.next_uniform()
    u3 = stream.next_uniform()
    time, k, right = kernels.draw_event(u1, u2, u3, n, state.clock, state.params.p)
    return Event(time=float(time), site=int(state.config.particles[k]),
                 direction=Direction.RIGHT if right else Direction.LEFT)


def apply_event(state: SimState, event: Event) -> SimState:
    if event.time <= state.clock:
        raise DomainError(f"event at {event.time} does not follow the clock {state.clock}")
    config = state.config
    if config.color_at(event.site) == 0:
        raise DomainError(f"no particle at site {event.site}")
    color_pos, track = state._color_index()
    ok = kernels.apply_move(config.occupancy, config.particles, config.slot, color_pos, track,
                            config.window.lo, event.site, int(event.direction))
    state.clock = event.time
    state.events += 1
    state.accepted += int(ok)
    state.last_event = replace(event, accepted=bool(ok))
    return state


def run_until(state: SimState, t_end: float, stream: RngStream,
              observer: Optional[Observer] = None, chunk_events: Optional[int] = None) -> SimState:
    """Apply events until the next one would land after t_end, then set the clock to t_end"""
    if t_end < state.clock:
        raise DomainError(f"t_end={t_end} precedes the clock {state.clock}")
    if t_end == state.clock:
        return state
    config = state.config
    if config.particle_count == 0:
        raise NoParticlesError("configuration has no particles")

    settings = get_settings()
    chunk = chunk_size(config.particle_count, t_end - state.clock, int(chunk_events or settings.chunk_events))
    record = observer is not None
    size = chunk if record else 0
    out_time = np.empty(size, dtype=np.float64)
    out_site = np.empty(size, dtype=np.int64)
    out_step = np.empty(size, dtype=np.int64)
    out_accepted = np.empty(size, dtype=np.bool_)
    color_pos, track = state._color_index()

    clock = state.clock
    while True:
        uniforms = stream.peek(3 * chunk)
        clock, used, events, accepted, finished = kernels.advance(
            config.occupancy, config.particles, config.slot, color_pos, track, config.window.lo,
            state.params.p, clock, float(t_end), uniforms,
            record, out_time, out_site, out_step, out_accepted)
        stream.advance(used)
        state.events += events
        state.accepted += accepted
        if record:
            for e in range(events):
                event = Event(float(out_time[e]), int(out_site[e]), Direction(int(out_step[e])), bool(out_accepted[e]))
                observer(event)
                state.last_event = event
        if finished:
            break

    state.clock = float(t_end)
    if settings.audit:
        config.audit()
    return state


def position_of_color(state: SimState, c: int) -> int:
    if state.mode != Mode.COLORED:
        raise DomainError("colors are only tracked in colored mode")
    return state.config.position_of(c)


def leftmost_of_colors(state: SimState, colors: Iterable[int]) -> int:
    colors = list(colors)
    if not colors:
        raise DomainError("empty color set")
    return min(position_of_color(state, c) for c in colors)


def leftmost_second_class(state: SimState) -> int:
    if state.mode != Mode.TWO_SPECIES:
        raise DomainError("second-class particles only exist in two-species mode")
    sites = state.config.sites_with(SECOND_CLASS)
    if sites.size == 0:
        raise DomainError("no second-class particle left in the window")
    return int(sites[0])


class EventTraceWriter:
    """Observer writing one CSV row per applied event: time, site, direction, accepted"""

    header = ["time", "site", "direction", "accepted"]

    def __init__(self, handle: TextIO):
        self._writer = csv.writer(handle, lineterminator="\n")
        self._writer.writerow(self.header)
        self.rows = 0

    def __call__(self, event: Event) -> None:
        self._writer.writerow(event.to_row())
        self.rows += 1

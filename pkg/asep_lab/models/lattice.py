"""
Lattice models: windows, model parameters, configurations and coupling labels
"""
import math
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Any, Dict, Iterable, Optional

import numpy as np

from asep_lab.errors import ConfigurationError, DomainError, LookupColorError

# Color values
EMPTY = 0
SECOND_CLASS = 1
FIRST_CLASS = 2

# color_position / identity_position entry for a color that is not on the lattice
ABSENT = np.iinfo(np.int64).min


class Mode(str, Enum):
    """Process variant a configuration belongs to"""
    SINGLE = "single"
    TWO_SPECIES = "two_species"
    COLORED = "colored"


class Direction(IntEnum):
    LEFT = -1
    RIGHT = 1

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, label: str) -> "Direction":
        return cls[label.upper()]


@dataclass(frozen=True)
class Window:
    """Finite stretch [lo, hi] of the integer lattice; all dynamics stay inside it"""
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise ConfigurationError(f"window lo={self.lo} exceeds hi={self.hi}")

    @property
    def width(self) -> int:
        return self.hi - self.lo + 1

    def contains(self, site: int) -> bool:
        return self.lo <= site <= self.hi

    def to_dict(self) -> Dict[str, int]:
        return {"lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class ModelParams:
    """Right-jump probability p and the number L+1 of second-class particles"""
    p: float
    L: int = 0

    def __post_init__(self):
        if not (0.5 < self.p <= 1.0) or math.isnan(self.p):
            raise DomainError(f"p must lie in (1/2, 1], got {self.p}")
        if int(self.L) != self.L or self.L < 0:
            raise DomainError(f"L must be a non-negative integer, got {self.L}")

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def gamma(self) -> float:
        return self.p - self.q

    @property
    def is_tasep(self) -> bool:
        return self.p == 1.0

    def to_dict(self) -> Dict[str, Any]:
        return {"p": self.p, "L": self.L}


@dataclass(frozen=True)
class Label:
    """Two-species particle label: first-class index k >= 1 or starred second-class index k* in [0, L]"""
    kind: str
    index: int

    def __post_init__(self):
        if self.kind not in ("first", "second"):
            raise DomainError(f"unknown label kind {self.kind!r}")
        if self.kind == "first" and self.index < 1:
            raise DomainError("first-class indices start at 1")
        if self.kind == "second" and self.index < 0:
            raise DomainError("second-class indices start at 0")

    @property
    def is_second(self) -> bool:
        return self.kind == "second"

    def to_id(self, L: int) -> int:
        """Dense integer id: n* -> n+1, first k -> L+1+k (ids coincide with the initial colors)"""
        if self.is_second:
            if self.index > L:
                raise DomainError(f"second-class index {self.index} exceeds L={L}")
            return self.index + 1
        return L + 1 + self.index

    @classmethod
    def from_id(cls, ident: int, L: int) -> "Label":
        if ident < 1:
            raise DomainError(f"label ids start at 1, got {ident}")
        if ident <= L + 1:
            return cls("second", ident - 1)
        return cls("first", ident - L - 1)

    def __str__(self) -> str:
        return f"{self.index}*" if self.is_second else str(self.index)


@dataclass
class Configuration:
    """
    Occupancy of a window plus the index structures the event loop needs.

    occupancy[i] is the color at site window.lo + i. particles lists occupied sites in slot
    order and slot[i] is the position of site window.lo + i in particles (-1 when empty).
    color_position (colored mode) maps color -> site. identity/identity_position carry
    two-species particle labels when the configuration is driven through a coupling.
    """
    window: Window
    mode: Mode
    occupancy: np.ndarray
    particles: np.ndarray
    slot: np.ndarray
    color_position: Optional[np.ndarray] = None
    identity: Optional[np.ndarray] = None
    identity_position: Optional[np.ndarray] = None

    @classmethod
    def from_occupancy(cls, window: Window, values: Iterable[int], mode: Mode = Mode.COLORED) -> "Configuration":
        """Build the index structures from a list of colors aligned with window sites"""
        occupancy = np.asarray(list(values), dtype=np.int64)
        if occupancy.shape != (window.width,):
            raise ConfigurationError(f"expected {window.width} sites, got {occupancy.size}")
        if np.any(occupancy < 0):
            raise ConfigurationError("colors must be non-negative")
        if mode == Mode.SINGLE and np.any(occupancy > 1):
            raise ConfigurationError("single-species configurations only hold color 1")
        if mode == Mode.TWO_SPECIES and np.any(occupancy > FIRST_CLASS):
            raise ConfigurationError("two-species configurations only hold colors 0, 1, 2")

        occupied = np.flatnonzero(occupancy)
        particles = occupied.astype(np.int64) + window.lo
        slot = np.full(window.width, -1, dtype=np.int64)
        slot[occupied] = np.arange(occupied.size, dtype=np.int64)

        color_position = None
        if mode == Mode.COLORED:
            colors = occupancy[occupied]
            if np.unique(colors).size != colors.size:
                raise ConfigurationError("colored configurations need distinct colors")
            top = int(colors.max()) if colors.size else 0
            color_position = np.full(top + 1, ABSENT, dtype=np.int64)
            color_position[colors] = particles

        return cls(window, mode, occupancy, particles, slot, color_position)

    @property
    def particle_count(self) -> int:
        return int(self.particles.size)

    def color_at(self, site: int) -> int:
        if not self.window.contains(site):
            raise DomainError(f"site {site} outside window [{self.window.lo}, {self.window.hi}]")
        return int(self.occupancy[site - self.window.lo])

    def position_of(self, color: int) -> int:
        if self.color_position is None:
            raise LookupColorError(f"{self.mode.value} configurations carry no color index")
        if color < 1 or color >= self.color_position.size or self.color_position[color] == ABSENT:
            raise LookupColorError(f"color {color} is not present")
        return int(self.color_position[color])

    def sites_with(self, color: int) -> np.ndarray:
        return np.flatnonzero(self.occupancy == color) + self.window.lo

    def color_counts(self) -> Dict[int, int]:
        colors, counts = np.unique(self.occupancy[self.occupancy > 0], return_counts=True)
        return {int(c): int(n) for c, n in zip(colors, counts)}

    def attach_identities(self, identity: np.ndarray) -> None:
        """Attach per-site two-species labels (label ids, 0 on empty sites)"""
        identity = np.asarray(identity, dtype=np.int64)
        if identity.shape != self.occupancy.shape or np.any((identity > 0) != (self.occupancy > 0)):
            raise ConfigurationError("identities must cover exactly the occupied sites")
        self.identity = identity
        self.identity_position = np.full(int(identity.max(initial=0)) + 1, ABSENT, dtype=np.int64)
        occupied = np.flatnonzero(identity)
        self.identity_position[identity[occupied]] = occupied + self.window.lo

    def copy(self) -> "Configuration":
        def dup(a):
            return None if a is None else a.copy()
        return Configuration(self.window, self.mode, self.occupancy.copy(), self.particles.copy(),
                             self.slot.copy(), dup(self.color_position), dup(self.identity),
                             dup(self.identity_position))

    def audit(self) -> None:
        """Full-scan consistency check of occupancy, particle index, slots and color index"""
        lo = self.window.lo
        occupied = np.flatnonzero(self.occupancy)
        if occupied.size != self.particles.size:
            raise ConfigurationError(f"{occupied.size} occupied sites but {self.particles.size} indexed particles")
        idx = self.particles - lo
        if np.any(idx < 0) or np.any(idx >= self.window.width):
            raise ConfigurationError("particle index points outside the window")
        if np.any(self.occupancy[idx] == EMPTY):
            raise ConfigurationError("particle index points at an empty site")
        if np.any(self.slot[idx] != np.arange(self.particles.size)):
            raise ConfigurationError("slot map disagrees with particle index")
        if np.count_nonzero(self.slot >= 0) != self.particles.size:
            raise ConfigurationError("slot map marks empty sites as occupied")
        if self.color_position is not None:
            colors = self.occupancy[occupied]
            if np.unique(colors).size != colors.size:
                raise ConfigurationError("duplicate colors")
            if np.any(self.color_position[colors] != occupied + lo):
                raise ConfigurationError("color index is not the inverse of occupancy")
        if self.identity is not None:
            ids = self.identity[occupied]
            if np.any((self.identity > 0) != (self.occupancy > 0)):
                raise ConfigurationError("identities do not match occupied sites")
            if np.any(self.identity_position[ids] != occupied + lo):
                raise ConfigurationError("identity index is not the inverse of identities")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "window": self.window.to_dict(),
            "mode": self.mode.value,
            "occupancy": self.occupancy.tolist(),
        }

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return (self.window == other.window and self.mode == other.mode
                and np.array_equal(self.occupancy, other.occupancy))

    __hash__ = None

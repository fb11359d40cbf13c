"""
Windows, initial data and class projections
"""
import math

import numpy as np

from asep_lab.errors import ConfigurationError, DomainError
from asep_lab.models.lattice import (
    EMPTY, FIRST_CLASS, SECOND_CLASS, Configuration, Mode, ModelParams, Window,
)

DEFAULT_SAFETY = 5.0
# sites added on both sides beyond the light cone
MARGIN = 10


def make_window(t_max: float, L: int = 0, safety: float = DEFAULT_SAFETY) -> Window:
    """
    Truncation of the lattice for a run up to time t_max.

    Every particle makes Poisson(t) jump attempts by time t, so nothing beyond distance
    safety*t of the origin influences the observables near it except with exponentially
    small probability.
    """
    if t_max < 0 or math.isnan(t_max):
        raise DomainError(f"t_max must be non-negative, got {t_max}")
    if safety < 1:
        raise DomainError(f"safety must be at least 1, got {safety}")
    if L < 0:
        raise DomainError(f"L must be non-negative, got {L}")
    half = math.ceil(safety * t_max)
    return Window(lo=-(half + L + MARGIN), hi=half + MARGIN)


def _sites(window: Window) -> np.ndarray:
    return np.arange(window.lo, window.hi + 1, dtype=np.int64)


def _require_origin(window: Window) -> None:
    if not window.lo <= 0 <= window.hi:
        raise ConfigurationError(f"window [{window.lo}, {window.hi}] must contain the origin")


def init_two_species(params: ModelParams, window: Window) -> Configuration:
    """Second-class particles on -L..0, first-class particles on every site left of -L"""
    L = params.L
    if window.lo > -L - 1 or window.hi < 1:
        raise ConfigurationError(f"window [{window.lo}, {window.hi}] too small for L={L}")
    sites = _sites(window)
    values = np.where(sites <= -L - 1, FIRST_CLASS, np.where(sites <= 0, SECOND_CLASS, EMPTY))
    return Configuration.from_occupancy(window, values, Mode.TWO_SPECIES)


def init_colored_step(window: Window) -> Configuration:
    """Site -n holds color n+1; colors grow leftward from 1 at the origin"""
    _require_origin(window)
    sites = _sites(window)
    values = np.where(sites <= 0, 1 - sites, EMPTY)
    return Configuration.from_occupancy(window, values, Mode.COLORED)


def init_asep_step(window: Window) -> Configuration:
    _require_origin(window)
    sites = _sites(window)
    return Configuration.from_occupancy(window, (sites <= 0).astype(np.int64), Mode.SINGLE)


def init_single_second_class(L: int, window: Window, vacate_origin: bool = False) -> Configuration:
    """
    One second-class particle at -L, first-class particles on the other non-positive sites.

    With vacate_origin the origin is left empty when L > 0 (the alternative reading of the
    initial data that excludes site 0).
    """
    if L < 0:
        raise DomainError(f"L must be non-negative, got {L}")
    if not window.lo <= -L <= 0 <= window.hi:
        raise ConfigurationError(f"window [{window.lo}, {window.hi}] does not contain -L={-L} and the origin")
    sites = _sites(window)
    values = np.where(sites <= 0, FIRST_CLASS, EMPTY)
    values[sites == -L] = SECOND_CLASS
    if vacate_origin and L > 0:
        values[sites == 0] = EMPTY
    return Configuration.from_occupancy(window, values, Mode.TWO_SPECIES)


def class_of_colors(colors: np.ndarray, L: int) -> np.ndarray:
    """Colors 1..L+1 -> second class, colors >= L+2 -> first class, 0 stays empty"""
    colors = np.asarray(colors, dtype=np.int64)
    return np.where(colors == EMPTY, EMPTY, np.where(colors <= L + 1, SECOND_CLASS, FIRST_CLASS))


def project_two_species(config: Configuration, L: int) -> Configuration:
    if config.mode != Mode.COLORED:
        raise DomainError("only colored configurations project onto two species")
    return Configuration.from_occupancy(config.window, class_of_colors(config.occupancy, L), Mode.TWO_SPECIES)


def project_single(config: Configuration) -> Configuration:
    """Forget colors: every particle becomes color 1"""
    values = (config.occupancy != EMPTY).astype(np.int64)
    return Configuration.from_occupancy(config.window, values, Mode.SINGLE)

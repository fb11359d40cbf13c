"""
Limit laws, empirical CDFs, goodness of fit and the alpha fit
"""
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
import structlog
from numpy.polynomial import Polynomial
from scipy import stats

from asep_lab.errors import DomainError, FitError
from asep_lab.services.rng import RngStream

logger = structlog.get_logger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
ALPHA_BRACKET = (1e-3, 1.0)
ALPHA_TOLERANCE = 1e-4
GRID_STEP = 1e-3
COARSE_POINTS = 21


@dataclass(frozen=True)
class SpeedLaw:
    """
    Law on [-alpha, alpha] with P(U >= s) = ((1 - s/alpha)/2)^(L+1): the minimum of L+1
    independent uniforms on [-alpha, alpha]. alpha defaults to gamma.
    """
    gamma: float
    L: int
    alpha: Optional[float] = None

    def __post_init__(self):
        if self.L < 0:
            raise DomainError(f"L must be non-negative, got {self.L}")
        if self.scale <= 0:
            raise DomainError(f"alpha must be positive, got {self.scale}")

    @property
    def scale(self) -> float:
        return self.gamma if self.alpha is None else self.alpha

    @property
    def exponent(self) -> int:
        return self.L + 1


def _maybe_scalar(values: np.ndarray, like: ArrayLike):
    return float(values) if np.ndim(like) == 0 else values


def speed_survival(s: ArrayLike, law: SpeedLaw):
    """P(U >= s); 1 left of the support, 0 right of it"""
    alpha = law.scale
    x = np.clip(np.asarray(s, dtype=np.float64) / alpha, -1.0, 1.0)
    return _maybe_scalar(((1.0 - x) / 2.0) ** law.exponent, s)


def speed_cdf(s: ArrayLike, law: SpeedLaw):
    return _maybe_scalar(1.0 - np.asarray(speed_survival(s, law)), s)


def speed_quantile(u: ArrayLike, law: SpeedLaw):
    """Inverse of the CDF: the s with P(U <= s) = u"""
    u = np.asarray(u, dtype=np.float64)
    if np.any((u < 0) | (u > 1)):
        raise DomainError("quantile levels must lie in [0, 1]")
    return _maybe_scalar(law.scale * (1.0 - 2.0 * (1.0 - u) ** (1.0 / law.exponent)), u)


def speed_median(law: SpeedLaw) -> float:
    return float(speed_quantile(0.5, law))


def speed_mean(law: SpeedLaw) -> float:
    """Mean of the minimum of m uniforms on [-alpha, alpha]: alpha (1 - 2m/(m+1))"""
    m = law.exponent
    return law.scale * (1.0 - 2.0 * m / (m + 1))


def _inverse_survival(v: np.ndarray, law: SpeedLaw) -> np.ndarray:
    return law.scale * (1.0 - 2.0 * v ** (1.0 / law.exponent))


def sample_speed_law(law: SpeedLaw, stream: RngStream) -> float:
    return float(_inverse_survival(np.float64(stream.next_uniform()), law))


def sample_speed_law_batch(law: SpeedLaw, stream: RngStream, n: int) -> np.ndarray:
    return _inverse_survival(stream.take(n), law)


def min_of_uniforms_batch(law: SpeedLaw, stream: RngStream, n: int) -> np.ndarray:
    """Brute-force sampler: minimum of L+1 uniforms on [-alpha, alpha]"""
    u = stream.take(n * law.exponent).reshape(n, law.exponent)
    return law.scale * (2.0 * u.min(axis=1) - 1.0)


def block_prob_target(s: float, gamma: float, L: int) -> float:
    """Limit of P(sites floor(st)..floor(st)+L all occupied) under step initial data"""
    if abs(s) > gamma:
        raise DomainError(f"|s|={abs(s)} exceeds gamma={gamma}")
    sigma = ((1.0 - s / gamma) / 2.0) ** 2
    return sigma ** ((L + 1) / 2.0)


class EmpiricalCdf:
    """Sorted sample with F(x) = #(samples <= x) / n"""

    def __init__(self, samples: ArrayLike):
        self.samples = np.sort(np.asarray(samples, dtype=np.float64).ravel())
        if np.any(np.isnan(self.samples)):
            raise DomainError("samples contain NaN")

    @property
    def n(self) -> int:
        return int(self.samples.size)

    def __call__(self, x: ArrayLike):
        if self.n == 0:
            raise DomainError("empty sample")
        counts = np.searchsorted(self.samples, np.asarray(x, dtype=np.float64), side="right")
        return _maybe_scalar(counts / self.n, x)

    def survival(self, x: ArrayLike):
        """#(samples >= x) / n"""
        if self.n == 0:
            raise DomainError("empty sample")
        counts = self.n - np.searchsorted(self.samples, np.asarray(x, dtype=np.float64), side="left")
        return _maybe_scalar(counts / self.n, x)

    def median(self) -> float:
        return float(np.median(self.samples))

    def mean(self) -> float:
        return float(self.samples.mean())


def _evaluate(cdf: Callable, x: np.ndarray) -> np.ndarray:
    values = np.asarray(cdf(x), dtype=np.float64)
    if values.shape != x.shape:
        values = np.array([cdf(float(v)) for v in x], dtype=np.float64)
    return values


def ks_distance(ecdf: EmpiricalCdf, cdf: Callable) -> float:
    """sup |F_n - F| evaluated on both sides of every jump of F_n"""
    n = ecdf.n
    if n == 0:
        raise DomainError("empty sample")
    values = _evaluate(cdf, ecdf.samples)
    i = np.arange(1, n + 1)
    return float(max(np.max(np.abs(i / n - values)), np.max(np.abs((i - 1) / n - values))))


def ks_two_sample(a: ArrayLike, b: ArrayLike) -> float:
    return float(stats.ks_2samp(np.asarray(a), np.asarray(b)).statistic)


def ks_critical_value(n: int, level: float = 0.05) -> float:
    """D such that P(D_n > D) = level under the null"""
    return float(stats.kstwo.isf(level, n))


def binomial_se(phat: float, n: int) -> float:
    if n < 1:
        raise DomainError("binomial_se needs n >= 1")
    return math.sqrt(max(phat * (1.0 - phat), 0.0) / n)


def mean_and_se(values: ArrayLike) -> Tuple[float, float]:
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise DomainError("empty sample")
    if values.size == 1:
        return float(values[0]), 0.0
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


class GoldenSearch:
    """Golden-section minimisation of a unimodal function on [a, d]"""

    def __init__(self, func: Callable[[float], float], a: float, d: float):
        self.func = func
        self.a, self.d = a, d
        self.b = d - GOLDEN * (d - a)
        self.c = a + GOLDEN * (d - a)
        self.fb, self.fc = func(self.b), func(self.c)

    def step(self) -> None:
        if self.fb < self.fc:
            self.d, self.c, self.fc = self.c, self.b, self.fb
            self.b = self.d - GOLDEN * (self.d - self.a)
            self.fb = self.func(self.b)
        else:
            self.a, self.b, self.fb = self.b, self.c, self.fc
            self.c = self.a + GOLDEN * (self.d - self.a)
            self.fc = self.func(self.c)

    def run(self, tol: float) -> Tuple[float, float]:
        while self.d - self.a > tol:
            self.step()
        return (self.b, self.fb) if self.fb < self.fc else (self.c, self.fc)


def _alpha_objective(ecdf: EmpiricalCdf, L: int) -> Callable[[float], float]:
    x = ecdf.samples
    target = ecdf(x)

    def sse(alpha: float) -> float:
        model = speed_cdf(x, SpeedLaw(gamma=alpha, L=L))
        return float(np.sum((target - model) ** 2))

    return sse


def _local_minima(values: np.ndarray) -> int:
    inner = (values[1:-1] < values[:-2]) & (values[1:-1] < values[2:])
    return int(np.count_nonzero(inner)) + int(values[0] < values[1]) + int(values[-1] < values[-2])


def fit_alpha(ecdf: EmpiricalCdf, L: int) -> Tuple[float, float]:
    """
    Least-squares fit of the survival form ((1 - s/alpha)/2)^(L+1) to an empirical CDF.

    A coarse scan locates the basin; golden-section refines it to ALPHA_TOLERANCE. If the coarse
    profile has more than one local minimum the whole bracket is grid-scanned instead.
    """
    if ecdf.n < 10:
        raise FitError(f"need at least 10 samples, got {ecdf.n}")
    if ecdf.samples[0] == ecdf.samples[-1]:
        raise FitError("degenerate sample: all values equal")
    sse = _alpha_objective(ecdf, L)
    lo, hi = ALPHA_BRACKET

    coarse = np.linspace(lo, hi, COARSE_POINTS)
    profile = np.array([sse(a) for a in coarse])
    if _local_minima(profile) > 1:
        logger.warning("alpha_objective_multimodal", L=L, n=ecdf.n)
        grid = np.arange(lo, hi + GRID_STEP / 2, GRID_STEP)
        values = np.array([sse(a) for a in grid])
        best = int(np.argmin(values))
        return float(grid[best]), float(values[best])

    best = int(np.argmin(profile))
    a = coarse[max(best - 1, 0)]
    d = coarse[min(best + 1, COARSE_POINTS - 1)]
    alpha, value = GoldenSearch(sse, a, d).run(ALPHA_TOLERANCE)
    # the bracket ends are never evaluated by the search itself
    for end in (a, d):
        end_value = sse(end)
        if end_value < value:
            alpha, value = end, end_value
    return float(alpha), float(value)


def fit_polynomial_cdf(ecdf: EmpiricalCdf, degree: int) -> Tuple[np.ndarray, float]:
    """Least-squares polynomial through the empirical CDF; coefficients in increasing degree"""
    if degree < 0:
        raise DomainError("degree must be non-negative")
    if ecdf.n <= degree:
        raise FitError(f"need more than {degree} samples for a degree-{degree} fit")
    x = ecdf.samples
    y = ecdf(x)
    poly = Polynomial.fit(x, y, degree).convert()
    residual = float(np.sum((poly(x) - y) ** 2))
    return poly.coef, residual

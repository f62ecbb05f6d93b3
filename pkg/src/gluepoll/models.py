"""Model descriptions: the single queue with vacations and the cyclic polling system.

Both carry a deterministic glue period before every visit and a retrial rate for
the orbit.  ``INFINITY`` is an admissible retrial rate: every orbiting customer is
then back in the queue by the end of the glue period, and the probability of
staying in orbit is exactly zero (see :func:`orbit_stay_probability`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

from .distributions import DistributionSpec, check_distribution, moments
from .errors import DomainError, InstabilityError

INFINITY = math.inf


def orbit_stay_probability(nu: float, glue: float) -> float:
    """exp(-nu G), with the infinite-rate case mapped to an exact zero."""
    if math.isinf(nu):
        return 0.0
    return math.exp(-nu * glue)


def orbit_return_probability(nu: float, glue: float) -> float:
    """1 - exp(-nu G), evaluated without cancellation for small nu G."""
    if math.isinf(nu):
        return 1.0
    return -math.expm1(-nu * glue)


def _check_rate(nu: float, glue: float) -> None:
    if not (nu > 0):
        raise DomainError(f"retrial rate must be > 0 or INFINITY, got {nu}")
    if not (glue >= 0 and math.isfinite(glue)):
        raise DomainError(f"glue period must be finite and >= 0, got {glue}")


@dataclass(frozen=True)
class SingleQueueModel:
    lam: float
    service: DistributionSpec
    vacation: DistributionSpec
    glue: float
    retrial_rate: float

    def __post_init__(self):
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise DomainError(f"arrival rate must be finite and >= 0, got {self.lam}")
        check_distribution(self.service)
        check_distribution(self.vacation)
        _check_rate(self.retrial_rate, self.glue)

    @property
    def rho(self) -> float:
        return self.lam * moments(self.service).m1

    def with_glue(self, glue: float) -> "SingleQueueModel":
        return replace(self, glue=glue)

    def to_polling(self) -> "PollingModel":
        return PollingModel((Station(self.lam, self.service, self.vacation, self.glue, self.retrial_rate),))


@dataclass(frozen=True)
class Station:
    lam: float
    service: DistributionSpec
    switchover: DistributionSpec
    glue: float
    retrial_rate: float

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise DomainError(f"station arrival rate must be > 0, got {self.lam}")
        check_distribution(self.service)
        check_distribution(self.switchover)
        _check_rate(self.retrial_rate, self.glue)

    @property
    def rho(self) -> float:
        return self.lam * moments(self.service).m1


@dataclass(frozen=True)
class PollingModel:
    stations: tuple

    def __post_init__(self):
        st = tuple(self.stations)
        if len(st) < 1:
            raise DomainError("a polling model needs at least one station")
        for s in st:
            if not isinstance(s, Station):
                raise DomainError(f"expected Station, got {type(s).__name__}")
        object.__setattr__(self, "stations", st)

    @property
    def n(self) -> int:
        return len(self.stations)

    @property
    def rho_total(self) -> float:
        return math.fsum(s.rho for s in self.stations)

    def rotated(self, first: int) -> "PollingModel":
        """The same cycle, relabelled so that station ``first`` is visited first."""
        return PollingModel(self.stations[first:] + self.stations[:first])

    def with_stations(self, stations: Sequence[Station]) -> "PollingModel":
        return PollingModel(tuple(stations))


def require_stable(rho_total: float) -> None:
    if not rho_total < 1.0:
        raise InstabilityError(rho_total)

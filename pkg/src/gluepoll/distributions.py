"""Nonnegative service / switchover distributions.

The analytic engines only ever need the Laplace-Stieltjes transform at real
arguments and the first two raw moments, so every supported family has both in
closed form.  The simulator additionally needs a sampler, which it reads off the
flat encoding produced by :func:`encode`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from .errors import DomainError

# kind codes understood by the simulation kernels
KIND_DETERMINISTIC = 0
KIND_EXPONENTIAL = 1
KIND_ERLANG = 2
KIND_HYPEREXPONENTIAL = 3


@dataclass(frozen=True)
class MomentPair:
    m1: float
    m2: float

    def __post_init__(self):
        if self.m2 < self.m1 * self.m1 * (1.0 - 1e-12):
            raise DomainError(f"second moment {self.m2} below squared mean {self.m1 ** 2}")

    @property
    def variance(self) -> float:
        return max(self.m2 - self.m1 * self.m1, 0.0)


def _check_s(s: float) -> None:
    if s < 0 or math.isnan(s):
        raise DomainError(f"LST argument must be nonnegative, got {s}")


@dataclass(frozen=True)
class Deterministic:
    value: float

    def __post_init__(self):
        # zero is allowed: it expresses vacations / switchovers of length zero
        if not (self.value >= 0 and math.isfinite(self.value)):
            raise DomainError(f"deterministic value must be finite and >= 0, got {self.value}")

    def lst(self, s: float) -> float:
        _check_s(s)
        return math.exp(-s * self.value)

    def lst_complement(self, s: float) -> float:
        _check_s(s)
        return -math.expm1(-s * self.value)

    def moments(self) -> MomentPair:
        return MomentPair(self.value, self.value * self.value)

    def with_mean(self, mean: float) -> "Deterministic":
        return Deterministic(mean)


@dataclass(frozen=True)
class Exponential:
    rate: float

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise DomainError(f"exponential rate must be > 0, got {self.rate}")

    def lst(self, s: float) -> float:
        _check_s(s)
        return self.rate / (self.rate + s)

    def lst_complement(self, s: float) -> float:
        _check_s(s)
        return s / (self.rate + s)

    def moments(self) -> MomentPair:
        return MomentPair(1.0 / self.rate, 2.0 / self.rate ** 2)

    def with_mean(self, mean: float) -> "Exponential":
        return Exponential(1.0 / mean)


@dataclass(frozen=True)
class Erlang:
    shape: int
    rate: float

    def __post_init__(self):
        if int(self.shape) != self.shape or self.shape < 1:
            raise DomainError(f"Erlang shape must be a positive integer, got {self.shape}")
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise DomainError(f"Erlang rate must be > 0, got {self.rate}")
        object.__setattr__(self, "shape", int(self.shape))

    def lst(self, s: float) -> float:
        _check_s(s)
        return (self.rate / (self.rate + s)) ** self.shape

    def lst_complement(self, s: float) -> float:
        _check_s(s)
        return -math.expm1(self.shape * math.log1p(-s / (self.rate + s)))

    def moments(self) -> MomentPair:
        k, r = self.shape, self.rate
        return MomentPair(k / r, k * (k + 1) / r ** 2)

    def with_mean(self, mean: float) -> "Erlang":
        return Erlang(self.shape, self.shape / mean)


@dataclass(frozen=True)
class HyperExponential:
    weights: tuple
    rates: tuple

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        r = tuple(float(x) for x in self.rates)
        if len(w) == 0 or len(w) != len(r):
            raise DomainError("hyperexponential needs equally many (>= 1) weights and rates")
        if any(x <= 0 for x in w) or any(not (x > 0 and math.isfinite(x)) for x in r):
            raise DomainError("hyperexponential weights and rates must be strictly positive")
        if abs(math.fsum(w) - 1.0) > 1e-12:
            raise DomainError(f"hyperexponential weights sum to {math.fsum(w)}, not 1")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "rates", r)

    def lst(self, s: float) -> float:
        _check_s(s)
        return math.fsum(w * r / (r + s) for w, r in zip(self.weights, self.rates))

    def lst_complement(self, s: float) -> float:
        _check_s(s)
        return math.fsum(w * s / (r + s) for w, r in zip(self.weights, self.rates))

    def moments(self) -> MomentPair:
        m1 = math.fsum(w / r for w, r in zip(self.weights, self.rates))
        m2 = math.fsum(2.0 * w / r ** 2 for w, r in zip(self.weights, self.rates))
        return MomentPair(m1, m2)

    def with_mean(self, mean: float) -> "HyperExponential":
        scale = self.moments().m1 / mean
        return HyperExponential(self.weights, tuple(r * scale for r in self.rates))


DistributionSpec = Union[Deterministic, Exponential, Erlang, HyperExponential]
_KINDS = (Deterministic, Exponential, Erlang, HyperExponential)


def lst(d: DistributionSpec, s: float) -> float:
    """E[exp(-s X)] for ``s >= 0``."""
    return d.lst(s)


def lst_complement(d: DistributionSpec, s: float) -> float:
    """1 - lst(d, s) without cancellation near s = 0."""
    return d.lst_complement(s)


def moments(d: DistributionSpec) -> MomentPair:
    return d.moments()


def mean(d: DistributionSpec) -> float:
    return d.moments().m1


def is_zero(d: DistributionSpec) -> bool:
    return isinstance(d, Deterministic) and d.value == 0.0


def from_dict(obj: dict) -> DistributionSpec:
    """Parse a distribution literal such as ``{"kind": "exponential", "rate": 1.0}``.

    ``mean`` may replace the natural parameter for the one-parameter kinds.
    """
    if not isinstance(obj, dict) or "kind" not in obj:
        raise DomainError(f"distribution literal needs a 'kind' field: {obj!r}")
    kind = str(obj["kind"]).lower()
    extra = set(obj) - {"kind", "value", "rate", "shape", "weights", "rates", "mean"}
    if extra:
        raise DomainError(f"unknown distribution fields {sorted(extra)}")
    try:
        if kind == "deterministic":
            return Deterministic(float(obj["value"] if "value" in obj else obj["mean"]))
        if kind == "exponential":
            if "mean" in obj:
                return Exponential(1.0 / float(obj["mean"]))
            return Exponential(float(obj["rate"]))
        if kind == "erlang":
            shape = int(obj["shape"])
            if "mean" in obj:
                return Erlang(shape, shape / float(obj["mean"]))
            return Erlang(shape, float(obj["rate"]))
        if kind == "hyperexponential":
            return HyperExponential(tuple(obj["weights"]), tuple(obj["rates"]))
    except KeyError as exc:
        raise DomainError(f"distribution {kind!r} is missing field {exc}") from None
    raise DomainError(f"unsupported distribution kind {kind!r} (closed-form LST required)")


def to_dict(d: DistributionSpec) -> dict:
    if isinstance(d, Deterministic):
        return {"kind": "deterministic", "value": d.value}
    if isinstance(d, Exponential):
        return {"kind": "exponential", "rate": d.rate}
    if isinstance(d, Erlang):
        return {"kind": "erlang", "shape": d.shape, "rate": d.rate}
    if isinstance(d, HyperExponential):
        return {"kind": "hyperexponential", "weights": list(d.weights), "rates": list(d.rates)}
    raise DomainError(f"not a distribution: {d!r}")


def encode(d: DistributionSpec) -> tuple[int, int, list[float]]:
    """Flat ``(kind code, integer parameter, float parameters)`` for the kernels."""
    if isinstance(d, Deterministic):
        return KIND_DETERMINISTIC, 1, [d.value]
    if isinstance(d, Exponential):
        return KIND_EXPONENTIAL, 1, [d.rate]
    if isinstance(d, Erlang):
        return KIND_ERLANG, d.shape, [d.rate]
    if isinstance(d, HyperExponential):
        return KIND_HYPEREXPONENTIAL, len(d.weights), list(d.weights) + list(d.rates)
    raise DomainError(f"not a distribution: {d!r}")


def check_distribution(d) -> DistributionSpec:
    if not isinstance(d, _KINDS):
        raise DomainError(f"expected a distribution spec, got {type(d).__name__}")
    return d

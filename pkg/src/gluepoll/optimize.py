"""Choosing the glue-period length that minimises the mean number in system.

E[R] is convex in G (the second derivative below is a sum of two nonnegative
terms), so a golden-section search on the closed form is both safe and cheap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import Deterministic, Exponential, moments
from .errors import DomainError, NumericalError
from .models import SingleQueueModel, orbit_return_probability, orbit_stay_probability, require_stable
from .single_queue import asymptotic_ER, mean_customers, retrial_queue_ER

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
DEFAULT_TOL = 1e-8
CERTIFICATE_POINTS = 100
MAX_EXPANSION_FACTOR = 1e6


@dataclass(frozen=True)
class OptimizationResult:
    g_min: float
    er_min: float
    iterations: int
    bracket: tuple
    certificate: dict = field(default_factory=dict)


def _check(m: SingleQueueModel, G: float) -> None:
    require_stable(m.rho)
    if not (G > 0 and math.isfinite(G)):
        raise DomainError(f"glue period must be finite and > 0, got {G}")


def dER_dG(m: SingleQueueModel, G: float) -> float:
    """First derivative of E[R] with respect to G."""
    _check(m, G)
    b, s = moments(m.service), moments(m.vacation)
    lam, r, nu = m.lam, m.rho, m.retrial_rate
    c0 = G + s.m1
    out = lam / 2 * (1 - s.variance / c0 ** 2) + lam * r / (1 - r)
    if not math.isinf(nu):
        e, p = orbit_stay_probability(nu, G), orbit_return_probability(nu, G)
        if e > 0:
            q, dq = e / p, -nu * e / (p * p)
            out += lam / (1 - r) * (r * q + (r * G + s.m1) * dq)
    return out


def d2_ER_dG2(m: SingleQueueModel, G: float) -> float:
    """Second derivative of E[R] with respect to G, in closed form.

    First term: lam Var(S) / (G + E[S])^3 (vanishes exactly for constant S).
    Second term: the orbit contribution, nonnegative for every G > 0.  With an
    infinite retrial rate the orbit is empty and only the first term remains.
    """
    _check(m, G)
    s = moments(m.vacation)
    lam, r, nu = m.lam, m.rho, m.retrial_rate
    c0 = G + s.m1
    first = lam * s.variance / c0 ** 3
    if math.isinf(nu):
        return first
    e, p = orbit_stay_probability(nu, G), orbit_return_probability(nu, G)
    if e == 0.0:
        return first
    # nu (rho G + E[S]) (1+e)/p - 2 rho, split so that the rho part stays
    # accurate as nu G -> 0, where it is O((nu G)^2)
    x = nu * G
    bracket = nu * s.m1 * (1 + e) / p + r * _xcoth_minus_two(x)
    second = lam * nu * e / ((1 - r) * p * p) * bracket
    return first + second


def _xcoth_minus_two(x: float) -> float:
    """x coth(x/2) - 2 without cancellation for small x."""
    if x < 1e-2:
        x2 = x * x
        return x2 / 6 - x2 * x2 / 360 + x2 ** 3 / 15120
    return x / math.tanh(x / 2) - 2


def _er(m: SingleQueueModel, G: float) -> float:
    return mean_customers(m.with_glue(G))


def _seed(m: SingleQueueModel) -> float:
    small = asymptotic_ER(m, "small_G")
    large = asymptotic_ER(m, "large_G")
    if small > 0:
        return math.sqrt(small / large)
    # no 1/G blow-up: fall back to the natural time scale of the model
    return max(moments(m.vacation).m1, moments(m.service).m1, 1.0)


def _expand(m: SingleQueueModel, g_lo: float, g_hi: float, limit: float, floor: float):
    """Widen (g_lo, g_hi) until E[R] decreases at g_lo and increases at g_hi.

    Returns None for g_lo when E[R] is increasing all the way down to ``floor``,
    i.e. the infimum is the G -> 0 limit.
    """
    while dER_dG(m, g_hi) < 0:
        g_lo = max(g_lo, g_hi)
        g_hi *= 4.0
        if g_hi > limit:
            raise NumericalError(f"bracket expansion passed {limit:g} without finding an increase")
    while dER_dG(m, g_lo) > 0:
        g_hi = min(g_hi, g_lo)
        g_lo /= 4.0
        if g_lo < floor:
            return None, g_hi
    return g_lo, g_hi


def golden_section(fn, a: float, b: float, tol: float, max_iter: int = 10_000):
    """Minimise a unimodal ``fn`` on [a, b]; returns (x, f(x), iterations)."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = fn(c), fn(d)
    it = 0
    while b - a >= tol:
        if it >= max_iter:
            raise NumericalError("golden-section search did not converge")
        it += 1
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = fn(d)
    return (c, fc, it) if fc <= fd else (d, fd, it)


def convexity_certificate(m: SingleQueueModel, g_lo: float, g_hi: float,
                          points: int = CERTIFICATE_POINTS) -> dict:
    grid = np.geomspace(g_lo, g_hi, points)
    values = [d2_ER_dG2(m, float(g)) for g in grid]
    return {"second_derivative_min": float(min(values)), "grid": (float(g_lo), float(g_hi), points)}


def minimize_glue(m: SingleQueueModel, g_lo: float | None = None, g_hi: float | None = None,
                  tol: float = DEFAULT_TOL) -> OptimizationResult:
    """Golden-section minimum of E[R] over the glue period.

    Without an explicit bracket the search starts around the crossover of the
    small-G and large-G asymptotes and widens geometrically.  When E[S] = 0 and
    E[R] increases all the way down to G -> 0 the result is the vanishing-glue
    limit (``g_min = 0``): the ordinary retrial queue.
    """
    require_stable(m.rho)
    if tol <= 0:
        raise DomainError("tol must be positive")
    seed = _seed(m)
    lo = seed / 4.0 if g_lo is None else float(g_lo)
    hi = seed * 4.0 if g_hi is None else float(g_hi)
    if not (0 < lo < hi):
        raise DomainError(f"need 0 < g_lo < g_hi, got ({lo}, {hi})")
    scale = moments(m.vacation).m1 or max(seed, moments(m.service).m1)
    limit = MAX_EXPANSION_FACTOR * scale
    lo, hi = _expand(m, lo, hi, limit, floor=min(tol, 1e-12 * scale))

    if lo is None:
        er0 = _limit_at_zero(m)
        cert = convexity_certificate(m, hi * 1e-6, hi)
        return OptimizationResult(0.0, er0, 0, (0.0, hi), cert)

    g, fg, it = golden_section(lambda x: _er(m, x), lo, hi, tol)
    cert = convexity_certificate(m, lo, hi)
    return OptimizationResult(g, fg, it, (lo, hi), cert)


def _limit_at_zero(m: SingleQueueModel) -> float:
    """E[R] as G -> 0 when it stays finite (E[S] = 0)."""
    if math.isinf(m.retrial_rate):
        if moments(m.vacation).m1 > 0:
            return mean_customers(m.with_glue(0.0))
        b = moments(m.service)
        return m.rho + m.lam ** 2 * b.m2 / (2 * (1 - m.rho))
    if moments(m.vacation).m1 > 0:
        raise NumericalError("E[R] diverges as G -> 0 with positive vacations")
    return retrial_queue_ER(m.lam, m.service, m.retrial_rate)


# --- the E[S] sweep tabulated for exponential and constant vacations

TABLE1_ES = (0.0, 0.1, 0.5, 1.0, 5.0, 10.0, 50.0, 100.0)
TABLE1_KINDS = ("exponential", "deterministic")


def vacation_of_kind(kind: str, mean: float):
    if kind == "deterministic":
        return Deterministic(mean)
    if kind == "exponential":
        if mean == 0:
            return Deterministic(0.0)
        return Exponential(1.0 / mean)
    raise DomainError(f"vacation kind must be 'exponential' or 'deterministic', got {kind!r}")


def glue_table(lam: float = 0.5, service=None, nu: float = 0.5, es_values=TABLE1_ES,
               kinds=TABLE1_KINDS, tol: float = DEFAULT_TOL) -> list[dict]:
    """Optimal glue length and minimal E[R] for a sweep of mean vacation lengths."""
    service = Exponential(1.0) if service is None else service
    rows = []
    for kind in kinds:
        for es in es_values:
            m = SingleQueueModel(lam, service, vacation_of_kind(kind, es), 1.0, nu)
            res = minimize_glue(m, tol=tol)
            rows.append({"ES": es, "S_kind": kind, "g_min": res.g_min, "er_min": res.er_min,
                         "iterations": res.iterations,
                         "second_derivative_min": res.certificate["second_derivative_min"]})
    return rows

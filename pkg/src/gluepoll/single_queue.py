"""Single queue with vacations, a deterministic glue period and retrials.

Customers arriving (or retrying) during the glue period stick to the queue and
are served, gated, in the visit that follows; everybody else goes to an orbit
and retries after an Exp(nu) time.  Numbers of customers at glue, visit and
vacation starts form a branching process with immigration, so the glue-start
generating function is an infinite product of the immigration GF ``K`` over the
iterates of the offspring GF ``f``.

Production moment formulas are closed form; the generating functions exist for
cross-validation and for arbitrary-time distributions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate

from ._numerics import log_divided_difference
from .distributions import lst, lst_complement, moments
from .errors import DomainError, NumericalError
from .models import (
    SingleQueueModel,
    orbit_return_probability,
    orbit_stay_probability,
    require_stable,
)

DEFAULT_TOL = 1e-12
MAX_ITER = 10 ** 6


@dataclass(frozen=True)
class EmbeddedMoments:
    EX: float
    EYq: float
    EYo: float
    EZ: float
    EXX1: float
    EYqYq1: float
    EYqYo: float


@dataclass(frozen=True)
class ArbitraryTimeMeans:
    R_va: float
    R_gl: float
    R_vi: float
    R: float


def rho(m: SingleQueueModel) -> float:
    return m.lam * moments(m.service).m1


def _check_z(z: float) -> None:
    if not (0.0 <= z <= 1.0):
        raise DomainError(f"generating-function argument must lie in [0, 1], got {z}")


def _params(m: SingleQueueModel):
    b, s = moments(m.service), moments(m.vacation)
    return b.m1, b.m2, s.m1, s.m2


def _return_prob(m: SingleQueueModel) -> float:
    if m.glue == 0.0 and not math.isinf(m.retrial_rate):
        raise DomainError("glue period 0 with a finite retrial rate: the orbit never drains")
    return orbit_return_probability(m.retrial_rate, m.glue)


def beta(m: SingleQueueModel, z: float) -> float:
    """PGF of the number of arrivals during one service."""
    return lst(m.service, m.lam * (1.0 - z))


def sigma(m: SingleQueueModel, z: float) -> float:
    """PGF of the number of arrivals during one vacation."""
    return lst(m.vacation, m.lam * (1.0 - z))


def f_of_z(m: SingleQueueModel, z: float) -> float:
    """Offspring PGF of one orbiting customer over a glue + visit."""
    _check_z(z)
    e = orbit_stay_probability(m.retrial_rate, m.glue)
    if e == 0.0:
        return beta(m, z)
    return (1.0 - e) * beta(m, z) + e * z


def K_of_z(m: SingleQueueModel, z: float) -> float:
    """Immigration PGF: arrivals during the vacation and the glue period."""
    _check_z(z)
    return sigma(m, z) * math.exp(-m.lam * (1.0 - beta(m, z)) * m.glue)


# --- generating functions, evaluated in u = 1 - z to keep precision near z = 1

def _one_minus_f(m: SingleQueueModel, u: float, p: float, e: float) -> float:
    return p * lst_complement(m.service, m.lam * u) + e * u


def _log_K(m: SingleQueueModel, u: float) -> float:
    s = m.lam * u
    return math.log1p(-lst_complement(m.vacation, s)) - m.lam * m.glue * lst_complement(m.service, s)


def _log_X_u(m: SingleQueueModel, u: float, tol: float, max_iter: int = MAX_ITER) -> float:
    """log E[(1 - u)^X] at glue-period starts, summed over iterates of f in u-space."""
    p = _return_prob(m)
    e = orbit_stay_probability(m.retrial_rate, m.glue)
    contraction = 1.0 - (e + p * rho(m))  # 1 - f'(1)
    total = 0.0
    for _ in range(max_iter):
        lk = _log_K(m, u)
        total += lk
        # log K <= 0 shrinks geometrically; stop once the tail is negligible relative
        # to the sum, which keeps precision when every factor is close to one
        if abs(lk) <= tol * contraction * abs(total):
            return total
        u = _one_minus_f(m, u, p, e)
    raise NumericalError(f"infinite product did not converge within {max_iter} factors")


def _log_Y_u(m: SingleQueueModel, uq: float, uo: float, tol: float) -> float:
    p = _return_prob(m)
    e = orbit_stay_probability(m.retrial_rate, m.glue)
    return -m.lam * uq * m.glue + _log_X_u(m, p * uq + e * uo, tol)


def gf_X(m: SingleQueueModel, z: float, tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER) -> float:
    """E[z^X] at glue-period starts as the truncated product of K over iterates of f."""
    _check_z(z)
    if tol <= 0:
        raise DomainError("tol must be positive")
    require_stable(rho(m))
    return math.exp(_log_X_u(m, 1.0 - z, tol, max_iter))


def gf_Y(m: SingleQueueModel, zq: float, zo: float, tol: float = DEFAULT_TOL) -> float:
    """Joint PGF of (queue, orbit) at the start of a visit."""
    _check_z(zq)
    _check_z(zo)
    require_stable(rho(m))
    return math.exp(_log_Y_u(m, 1.0 - zq, 1.0 - zo, tol))


def gf_Z(m: SingleQueueModel, z: float, tol: float = DEFAULT_TOL) -> float:
    """PGF of the orbit size at the start of a vacation."""
    return gf_Y(m, beta(m, z), z, tol)


# --- closed-form moments

def embedded_moments(m: SingleQueueModel) -> EmbeddedMoments:
    r = rho(m)
    require_stable(r)
    EB, EB2, ES, ES2 = _params(m)
    lam, G = m.lam, m.glue
    p = _return_prob(m)
    e = orbit_stay_probability(m.retrial_rate, G)

    k1 = lam * ES + lam * r * G
    k2 = lam ** 2 * ES2 + 2 * r * lam ** 2 * G * ES + lam ** 3 * G * EB2 + (lam * G * r) ** 2
    fp = r * p + e  # f'(1)
    EX = k1 / ((1 - r) * p)
    EXX1 = (k2 / ((1 - r) * p * (1 + fp))
            + k1 * (2 * k1 * fp + p * lam ** 2 * EB2) / ((1 - r) ** 2 * p ** 2 * (1 + fp)))
    EYq = lam * G + p * EX
    EYo = e * EX
    EZ = r * EYq + EYo
    EYqYo = lam * G * e * EX + p * e * EXX1
    EYqYq1 = (lam * G) ** 2 + p * p * EXX1 + 2 * lam * G * p * EX
    return EmbeddedMoments(EX, EYq, EYo, EZ, EXX1, EYqYq1, EYqYo)


def mean_customers(m: SingleQueueModel) -> float:
    """E[R] in its compact closed form (the decomposition-free expression)."""
    r = rho(m)
    require_stable(r)
    EB, EB2, ES, ES2 = _params(m)
    lam, G = m.lam, m.glue
    cycle0 = G + ES
    if cycle0 <= 0:
        raise DomainError("glue period and mean vacation are both zero: the cycle is degenerate")
    p = _return_prob(m)
    e = orbit_stay_probability(m.retrial_rate, G)
    second = G * G + 2 * G * ES + ES2  # E[(G+S)^2]
    out = (r + lam ** 2 * EB2 / (2 * (1 - r)) + lam * second / (2 * cycle0)
           + lam * r * cycle0 / (1 - r))
    if e > 0.0:
        out += lam * (r * G + ES) * e / ((1 - r) * p)
    return out


def arbitrary_time_means(m: SingleQueueModel, check: bool = True) -> ArbitraryTimeMeans:
    """Mean number in system during vacation, glue and visit periods, and overall.

    The overall mean is the time-weighted mixture of the three period means; with
    ``check`` it is also compared to :func:`mean_customers` at 1e-9 relative.
    """
    mo = embedded_moments(m)
    r = rho(m)
    EB, EB2, ES, ES2 = _params(m)
    lam, G = m.lam, m.glue
    cycle0 = G + ES
    if cycle0 <= 0:
        raise DomainError("glue period and mean vacation are both zero: the cycle is degenerate")

    R_va = mo.EZ + (lam * ES2 / (2 * ES) if ES > 0 else 0.0)
    R_gl = mo.EX + lam * G / 2
    R_vi = 1 + lam * EB2 / (2 * EB)
    if mo.EYq > 0:
        R_vi += mo.EYqYo / mo.EYq + (1 + r) * mo.EYqYq1 / (2 * mo.EYq)
    R = r * R_vi + (1 - r) * (G / cycle0) * R_gl + (1 - r) * (ES / cycle0) * R_va

    if check:
        closed = mean_customers(m)
        if abs(R - closed) > 1e-9 * max(1.0, abs(closed)):
            raise NumericalError(f"period mixture {R!r} disagrees with closed form {closed!r}")
    return ArbitraryTimeMeans(R_va, R_gl, R_vi, R)


# --- arbitrary-time generating functions

def _elapsed_factor(d, lam: float, z: float, mean_len: float) -> float:
    """PGF of arrivals during the elapsed part of an interval drawn from ``d``."""
    s = lam * (1.0 - z)
    if s == 0.0 or mean_len == 0.0:
        return 1.0
    return lst_complement(d, s) / (s * mean_len)


def _gf_vacation(m: SingleQueueModel, zo: float, tol: float) -> float:
    ES = moments(m.vacation).m1
    return gf_Z(m, zo, tol) * _elapsed_factor(m.vacation, m.lam, zo, ES)


def _gf_glue(m: SingleQueueModel, zq: float, zo: float, tol: float) -> float:
    lam, G, nu = m.lam, m.glue, m.retrial_rate
    if G == 0.0:
        return gf_X(m, zq if math.isinf(nu) else zo, tol)
    if math.isinf(nu):
        # the whole orbit is glued at the first instant
        a = lam * (1.0 - zq)
        mean_exp = -math.expm1(-a * G) / (a * G) if a > 0 else 1.0
        return mean_exp * gf_X(m, zq, tol)

    def integrand(t):
        e = math.exp(-nu * t)
        return math.exp(-lam * (1.0 - zq) * t) * gf_X(m, (1.0 - e) * zq + e * zo, tol)

    val, err = integrate.quad(integrand, 0.0, G, epsabs=1e-10, epsrel=1e-10, limit=200)
    if not err <= 1e-8:
        raise NumericalError(f"glue-period quadrature error estimate {err:g} too large")
    return val / G


def _gf_visit(m: SingleQueueModel, zq: float, zo: float, tol: float) -> float:
    mo = embedded_moments(m)
    EB = moments(m.service).m1
    uo = 1.0 - zo
    # customers present at a service start: glued ones not yet served, plus the
    # arrivals brought by each served one (1 - beta in u-space)
    ub = lst_complement(m.service, m.lam * uo)
    quotient = log_divided_difference(lambda ua: _log_Y_u(m, ua, uo, tol), 1.0 - zq, ub, mo.EYq)
    return zq * quotient / mo.EYq * _elapsed_factor(m.service, m.lam, zo, EB)


def gf_arbitrary(m: SingleQueueModel, zq: float, zo: float, period: str = "mixture",
                 tol: float = DEFAULT_TOL) -> float:
    """Joint PGF of (queue, orbit) at an arbitrary time within ``period``.

    ``period`` is one of ``vacation``, ``glue``, ``visit`` or ``mixture``.
    """
    _check_z(zq)
    _check_z(zo)
    require_stable(rho(m))
    if zq == 1.0 and zo == 1.0:
        return 1.0
    if period == "vacation":
        return _gf_vacation(m, zo, tol)
    if period == "glue":
        return _gf_glue(m, zq, zo, tol)
    if period == "visit":
        return _gf_visit(m, zq, zo, tol)
    if period == "mixture":
        r = rho(m)
        ES = moments(m.vacation).m1
        cycle0 = m.glue + ES
        out = r * _gf_visit(m, zq, zo, tol)
        if m.glue > 0:
            out += (1 - r) * m.glue / cycle0 * _gf_glue(m, zq, zo, tol)
        if ES > 0:
            out += (1 - r) * ES / cycle0 * _gf_vacation(m, zo, tol)
        return out
    raise DomainError(f"unknown period {period!r}")


# --- asymptotics and limiting models

def asymptotic_ER(m: SingleQueueModel, regime: str) -> float:
    """Coefficient c with E[R] ~ c / G (``small_G``) or E[R] ~ c G (``large_G``)."""
    r = rho(m)
    require_stable(r)
    if regime == "small_G":
        if math.isinf(m.retrial_rate):
            return 0.0
        return m.lam * moments(m.vacation).m1 / (m.retrial_rate * (1 - r))
    if regime == "large_G":
        return m.lam * (1 + r) / (2 * (1 - r))
    raise DomainError(f"regime must be 'small_G' or 'large_G', got {regime!r}")


def gated_vacation_ER(lam: float, service, vacation_mean: float, vacation_second: float) -> float:
    """M/G/1 with gated service and multiple vacations of the given first two moments."""
    b = moments(service)
    r = lam * b.m1
    require_stable(r)
    return (r + lam ** 2 * b.m2 / (2 * (1 - r)) + lam * vacation_second / (2 * vacation_mean)
            + lam * r * vacation_mean / (1 - r))


def binomial_gated_ER(lam: float, service, vacation, p: float) -> float:
    """Vacations with binomially gated service: each waiting customer is taken w.p. ``p``."""
    b, s = moments(service), moments(vacation)
    r = lam * b.m1
    require_stable(r)
    if not 0 < p <= 1:
        raise DomainError(f"admission probability must lie in (0, 1], got {p}")
    return (r + lam ** 2 * b.m2 / (2 * (1 - r)) + lam * s.m2 / (2 * s.m1)
            + lam * r * s.m1 / (1 - r) + lam * s.m1 * (1 - p) / (p * (1 - r)))


def retrial_queue_ER(lam: float, service, nu: float) -> float:
    """Ordinary M/G/1 retrial queue (the zero-vacation, vanishing-glue limit)."""
    b = moments(service)
    r = lam * b.m1
    require_stable(r)
    return r + lam ** 2 * b.m2 / (2 * (1 - r)) + lam * r / (nu * (1 - r))

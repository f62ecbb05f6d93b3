import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_single_queue
from gluepoll import INFINITY, Deterministic, Erlang, Exponential, HyperExponential, SingleQueueModel
from gluepoll import single_queue as sq
from gluepoll.errors import DomainError, InstabilityError

BASE = SingleQueueModel(0.5, Exponential(1.0), Exponential(1.0), 1.846, 0.5)


def _backward(f, h=1e-4):
    """First and second derivative at 1 of a function of z from backward differences."""
    v = [f(1.0 - k * h) for k in range(4)]
    d1 = (11 * v[0] - 18 * v[1] + 9 * v[2] - 2 * v[3]) / (6 * h)
    d2 = (2 * v[0] - 5 * v[1] + 4 * v[2] - v[3]) / h ** 2
    return d1, d2


def test_rho_and_validation():
    assert sq.rho(BASE) == pytest.approx(0.5)
    with pytest.raises(InstabilityError):
        sq.embedded_moments(SingleQueueModel(1.0, Exponential(1.0), Exponential(1.0), 1.0, 0.5))
    with pytest.raises(DomainError):
        SingleQueueModel(0.5, Exponential(1.0), Exponential(1.0), -1.0, 0.5)
    with pytest.raises(DomainError):
        SingleQueueModel(0.5, Exponential(1.0), Exponential(1.0), 1.0, 0.0)
    with pytest.raises(DomainError):
        sq.gf_X(BASE, 1.5)


def test_f_and_k_at_one_and_derivative_of_f():
    assert sq.f_of_z(BASE, 1.0) == 1.0
    assert sq.K_of_z(BASE, 1.0) == 1.0
    d1, _ = _backward(lambda z: sq.f_of_z(BASE, z))
    e = math.exp(-BASE.retrial_rate * BASE.glue)
    # an orbiting customer stays (w.p. e) or is served and brings lam*B arrivals
    assert d1 == pytest.approx(e + (1 - e) * 0.5, rel=1e-8)


def test_flow_balance_of_embedded_moments():
    em = sq.embedded_moments(BASE)
    cycle = (BASE.glue + 1.0) / (1 - 0.5)
    assert em.EYq == pytest.approx(BASE.lam * cycle, rel=1e-12)
    p = -math.expm1(-BASE.retrial_rate * BASE.glue)
    assert em.EX == pytest.approx(BASE.lam * (cycle - BASE.glue) / p, rel=1e-12)
    assert em.EYo == pytest.approx(em.EX * (1 - p), rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_gf_derivatives_give_embedded_moments(seed):
    m = random_single_queue(np.random.default_rng(seed))
    em = sq.embedded_moments(m)
    d1, d2 = _backward(lambda z: math.log(sq.gf_X(m, z, tol=1e-15)))
    assert d1 == pytest.approx(em.EX, rel=1e-5)
    assert d2 + d1 * d1 == pytest.approx(em.EXX1, rel=1e-4)
    d1z, _ = _backward(lambda z: math.log(sq.gf_Z(m, z, tol=1e-15)))
    assert d1z == pytest.approx(em.EZ, rel=1e-5)
    d1q, _ = _backward(lambda z: math.log(sq.gf_Y(m, z, 1.0, tol=1e-15)))
    assert d1q == pytest.approx(em.EYq, rel=1e-5)


@pytest.mark.parametrize("seed", range(5))
def test_closed_form_matches_period_mixture_and_displayed_expression(seed):
    m = random_single_queue(np.random.default_rng(100 + seed), allow_infinite_nu=True)
    at = sq.arbitrary_time_means(m)
    er = sq.mean_customers(m)
    assert at.R == pytest.approx(er, rel=1e-9)
    # displayed compact expression, written out independently
    eb, eb2 = m.service.moments().m1, m.service.moments().m2
    es, es2 = m.vacation.moments().m1, m.vacation.moments().m2
    lam, g, r = m.lam, m.glue, m.rho
    e = 0.0 if math.isinf(m.retrial_rate) else math.exp(-m.retrial_rate * g)
    want = (r + lam ** 2 * eb2 / (2 * (1 - r)) + lam * (g * g + 2 * g * es + es2) / (2 * (g + es))
            + lam * r * (g + es) / (1 - r) + lam * (r * g + es) * e / ((1 - r) * (1 - e)))
    assert er == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("period", ["vacation", "glue", "visit", "mixture"])
def test_period_gf_derivatives_give_period_means(period):
    m = SingleQueueModel(0.4, Erlang(2, 2.0), HyperExponential((0.3, 0.7), (0.5, 2.0)), 1.5, 0.8)
    at = sq.arbitrary_time_means(m)
    want = {"vacation": at.R_va, "glue": at.R_gl, "visit": at.R_vi, "mixture": at.R}[period]
    d1, _ = _backward(lambda z: sq.gf_arbitrary(m, z, z, period), h=1e-4)
    assert d1 == pytest.approx(want, rel=1e-5)


def test_gf_arbitrary_is_a_pgf():
    for period in ("vacation", "glue", "visit", "mixture"):
        assert sq.gf_arbitrary(BASE, 1.0, 1.0, period) == 1.0
        v = sq.gf_arbitrary(BASE, 0.3, 0.6, period)
        assert 0.0 < v < 1.0
    with pytest.raises(DomainError):
        sq.gf_arbitrary(BASE, 0.5, 0.5, "lunch")


def test_limits_and_asymptotes():
    m = SingleQueueModel(0.5, Exponential(1.0), Deterministic(0.0), 1e-7, 0.5)
    assert sq.mean_customers(m) == pytest.approx(sq.retrial_queue_ER(0.5, Exponential(1.0), 0.5), abs=1e-5)
    assert sq.retrial_queue_ER(0.5, Exponential(1.0), 0.5) == pytest.approx(2.0, rel=1e-14)
    gated = SingleQueueModel(0.5, Exponential(1.0), Exponential(1.0), 1.0, INFINITY)
    s_second = 1 + 2 * 1 + 2  # E[(G+S)^2] with G=1, S~Exp(1)
    assert sq.mean_customers(gated) == pytest.approx(
        sq.gated_vacation_ER(0.5, Exponential(1.0), 2.0, s_second), rel=1e-13)
    small, large = sq.asymptotic_ER(BASE, "small_G"), sq.asymptotic_ER(BASE, "large_G")
    assert 1e-6 * sq.mean_customers(BASE.with_glue(1e-6)) == pytest.approx(small, rel=1e-4)
    assert sq.mean_customers(BASE.with_glue(1e6)) / 1e6 == pytest.approx(large, rel=1e-4)
    with pytest.raises(DomainError):
        sq.asymptotic_ER(BASE, "medium_G")


def test_zero_glue_with_finite_rate_is_rejected():
    m = SingleQueueModel(0.5, Exponential(1.0), Exponential(1.0), 0.0, 0.5)
    with pytest.raises(DomainError):
        sq.mean_customers(m)


def test_zero_arrival_rate_gives_an_empty_system():
    m = SingleQueueModel(0.0, Exponential(1.0), Exponential(1.0), 1.0, 0.5)
    assert sq.mean_customers(m) == 0.0
    assert sq.gf_X(m, 0.3) == 1.0


@settings(max_examples=40, deadline=None)
@given(g=st.floats(0.01, 50), nu=st.floats(0.01, 20), r=st.floats(0.01, 0.95))
def test_functional_equation_holds(g, nu, r):
    m = SingleQueueModel(r, Exponential(1.0), Erlang(2, 1.0), g, nu)
    for z in (0.0, 0.4, 0.95):
        lhs = sq.gf_X(m, z)
        rhs = sq.K_of_z(m, z) * sq.gf_X(m, sq.f_of_z(m, z))
        assert abs(lhs - rhs) <= 1e-9

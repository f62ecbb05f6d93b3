import math

import numpy as np
import pytest

from conftest import random_polling, two_station
from gluepoll import INFINITY, Deterministic, Exponential, PollingModel, Station
from gluepoll import polling
from gluepoll.errors import DomainError, InstabilityError


def _logf_vec(pm, station=0):
    return lambda z: math.log(polling.gf_polling_embedded(pm, z, tol=1e-15, station=station))


def test_stability_agrees_with_spectral_radius():
    rng = np.random.default_rng(0)
    for _ in range(20):
        pm = random_polling(rng, int(rng.integers(1, 5)))
        b = polling.branching_structure(pm)
        eig = max(abs(np.linalg.eigvals(b.M)))
        assert b.spectral_radius_M == pytest.approx(eig, rel=1e-8)
        rep = polling.check_stability(pm)
        assert rep.stable and rep.spectral_radius_M < 1
    heavy = PollingModel((Station(3.0, Exponential(5.0), Deterministic(0.5), 1.0, 1.0),
                          Station(3.0, Exponential(5.0), Deterministic(0.5), 1.0, 1.0)))
    rep = polling.check_stability(heavy)
    assert not rep.stable and rep.rho_total == pytest.approx(1.2) and rep.spectral_radius_M > 1
    with pytest.raises(InstabilityError):
        polling.polling_means(heavy)


def test_flow_balance_two_station():
    pm = two_station()
    f = polling.embedded_first_moments(pm)
    ec = (0.5 + 1.0 + 2.0 + 2.0) / (1 - 0.6)
    assert f.EC == pytest.approx(ec, rel=1e-14)
    assert f.EYq == pytest.approx([2.0 * ec, 1.0 * ec], rel=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_first_moments_are_gf_derivatives(seed):
    rng = np.random.default_rng(10 + seed)
    pm = random_polling(rng, int(rng.integers(2, 4)))
    f = polling.embedded_second_moments(pm)
    h = 1e-5
    for i in range(pm.n):
        logf = _logf_vec(pm, station=i)
        for j in range(pm.n):
            e = np.zeros(pm.n)
            e[j] = h
            d1 = (logf(np.ones(pm.n)) - logf(1 - e)) / h
            # one-sided difference: O(h) truncation from the second moment
            assert d1 == pytest.approx(f.EX[i, j], rel=1e-3)


@pytest.mark.parametrize("seed", range(3))
def test_cross_moments_are_mixed_gf_derivatives(seed):
    rng = np.random.default_rng(20 + seed)
    pm = random_polling(rng, 3)
    f = polling.embedded_second_moments(pm)
    logf = _logf_vec(pm)
    h = 1e-4
    one = np.ones(3)
    for j, k in [(0, 1), (0, 2), (1, 2)]:
        ej, ek = np.eye(3)[j] * h, np.eye(3)[k] * h
        # mixed partial of log f, central-ish in the (1-h, 1-2h) stencil, second order
        d = (logf(one - ej - ek) - logf(one - ej) - logf(one - ek) + logf(one)) / h ** 2
        d2 = (logf(one - 2 * ej - 2 * ek) - logf(one - 2 * ej) - logf(one - 2 * ek) + logf(one)) / (4 * h * h)
        mixed = 2 * d - d2  # Richardson
        want = f.second[0, j, k] - f.EX[0, j] * f.EX[0, k]  # covariance = mixed partial of log PGF
        assert mixed == pytest.approx(want, rel=2e-3, abs=1e-4 * max(1.0, f.second[0, j, k]))


def test_two_station_regression_values():
    # analytic engine regression; independently confirmed by simulation in the acceptance suite
    m = polling.polling_means(two_station())
    assert m.R_i == pytest.approx([23.83898803, 32.72980276], rel=1e-8)
    assert m.R_total == pytest.approx(float(np.sum(m.R_i)), rel=1e-14)
    assert m.R_i_mixture == pytest.approx(m.R_i, rel=1e-9)


@pytest.mark.parametrize("seed", range(3))
def test_mixture_gf_gives_per_class_means(seed):
    rng = np.random.default_rng(30 + seed)
    pm = random_polling(rng, int(rng.integers(2, 4)))
    m = polling.polling_means(pm)
    h = 1e-5
    for j in range(pm.n):
        z = np.ones(pm.n)
        z[j] = 1 - h
        d1 = (1 - polling.gf_polling_arbitrary(pm, z, z)) / h
        assert d1 == pytest.approx(m.R_i[j], rel=1e-3)
    for period, means in (("switchover", m.R_sw), ("glue", m.R_gl), ("visit", m.R_vi)):
        for i in range(pm.n):
            z = np.full(pm.n, 1 - h)
            d1 = (1 - polling.gf_polling_arbitrary(pm, z, z, period=period, station=i)) / h
            assert d1 == pytest.approx(means[i], rel=1e-3)


def test_relabelling_the_start_station_changes_nothing():
    rng = np.random.default_rng(40)
    pm = random_polling(rng, 4)
    base = polling.polling_means(pm)
    for k in range(1, 4):
        rot = polling.polling_means(pm.rotated(k))
        assert rot.R_total == pytest.approx(base.R_total, rel=1e-11)
        assert rot.R_i == pytest.approx(np.roll(base.R_i, -k), rel=1e-11)


def test_immigration_mean_is_gradient_of_k():
    rng = np.random.default_rng(50)
    for n in (1, 2, 3):
        pm = random_polling(rng, n)
        h = 1e-6
        grad = sum((1 - polling.gf_polling_K(pm, np.ones(n) - h * np.eye(n)[j])) / h for j in range(n))
        assert polling.immigration_mean(pm) == pytest.approx(grad, rel=1e-4)


def test_pcl_and_waiting_times():
    pm = two_station()
    rep = polling.pcl_verify(pm)
    assert abs(rep.residual) < 1e-10
    m = polling.polling_means(pm)
    lam = np.array([2.0, 1.0])
    assert rep.EW == pytest.approx(m.R_i / lam - 0.2, rel=1e-12)
    assert np.all(rep.EF > 0)


def test_symmetric_stations_share_means():
    st = Station(0.3, Exponential(2.0), Deterministic(0.4), 1.2, 0.7)
    pm = PollingModel((st,) * 3)
    m = polling.polling_means(pm)
    assert np.ptp(m.R_i) < 1e-10 * m.R_total
    assert polling.symmetric_ER(0.9, Exponential(2.0), Deterministic(0.4), 1.2, 0.7, 3) == pytest.approx(
        m.R_total, rel=1e-12)


def test_infinite_retrial_rate_station_has_empty_orbit():
    pm = PollingModel((Station(1.0, Exponential(4.0), Deterministic(0.5), 1.0, INFINITY),
                       Station(0.5, Exponential(4.0), Deterministic(0.5), 1.0, 0.5)))
    f = polling.embedded_first_moments(pm)
    assert f.EYo[0] == 0.0
    assert polling.pcl_verify(pm).residual == pytest.approx(0.0, abs=1e-10)


def test_functional_equation_n_queue():
    rng = np.random.default_rng(60)
    pm = random_polling(rng, 3)
    for _ in range(5):
        z = rng.uniform(0, 1, 3)
        lhs = polling.gf_polling_embedded(pm, z)
        rhs = polling.gf_polling_K(pm, z) * polling.gf_polling_embedded(pm, polling.gf_polling_h(pm, z))
        assert abs(lhs - rhs) < 1e-10


def test_argument_validation():
    pm = two_station()
    with pytest.raises(DomainError):
        polling.gf_polling_embedded(pm, [0.5])
    with pytest.raises(DomainError):
        polling.gf_polling_embedded(pm, [0.5, 1.2])
    with pytest.raises(DomainError):
        polling.gf_polling_arbitrary(pm, [0.5, 0.5], [0.5, 0.5], period="glue")
    with pytest.raises(DomainError):
        polling.symmetric_ER(0.5, Exponential(1.0), Deterministic(1.0), 1.0, 0.5, 0)
    with pytest.raises(DomainError):
        PollingModel(())

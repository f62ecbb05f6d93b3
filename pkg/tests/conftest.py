import math

import numpy as np
import pytest

from gluepoll import (
    Deterministic, Erlang, Exponential, HyperExponential, PollingModel, SingleQueueModel, Station,
)


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    def record(number: int, passed: bool, detail: str):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} -- {detail}"
        request.config._acceptance_lines.append(line)
        print(line)
        assert passed, line
    return record


# --------------------------------------------------------------------------
# shared models

def two_station(g1: float = 2.0, g2: float = 2.0) -> PollingModel:
    return PollingModel((
        Station(2.0, Exponential(5.0), Deterministic(0.5), g1, 1.0),
        Station(1.0, Exponential(5.0), Deterministic(1.0), g2, 0.2),
    ))


def random_distribution(rng, mean: float, allow_zero: bool = False):
    kind = rng.integers(0, 5 if allow_zero else 4)
    if kind == 0:
        return Deterministic(mean)
    if kind == 1:
        return Exponential(1.0 / mean)
    if kind == 2:
        k = int(rng.integers(2, 5))
        return Erlang(k, k / mean)
    if kind == 3:
        w = float(rng.uniform(0.1, 0.9))
        r1 = float(rng.uniform(0.2, 5.0))
        # second rate chosen so that the mixture has the requested mean
        rest = mean - w / r1
        if rest <= 0:
            return Exponential(1.0 / mean)
        return HyperExponential((w, 1.0 - w), (r1, (1.0 - w) / rest))
    return Deterministic(0.0)


def random_single_queue(rng, allow_infinite_nu: bool = False) -> SingleQueueModel:
    eb = float(rng.uniform(0.2, 2.0))
    rho = float(rng.uniform(0.05, 0.9))
    svc = random_distribution(rng, eb)
    vac = random_distribution(rng, float(rng.uniform(0.05, 20.0)))
    nu = math.inf if allow_infinite_nu and rng.random() < 0.2 else float(rng.uniform(0.05, 5.0))
    return SingleQueueModel(rho / eb, svc, vac, float(rng.uniform(0.05, 10.0)), nu)


def random_polling(rng, n: int) -> PollingModel:
    total = float(rng.uniform(0.1, 0.85))
    shares = rng.dirichlet(np.ones(n))
    stations = []
    for i in range(n):
        eb = float(rng.uniform(0.1, 1.5))
        lam = total * shares[i] / eb
        es = float(rng.uniform(0.05, 3.0))
        nu = float(rng.uniform(0.1, 3.0)) if rng.random() < 0.85 else math.inf
        stations.append(Station(max(lam, 1e-3), random_distribution(rng, eb),
                                random_distribution(rng, es), float(rng.uniform(0.1, 4.0)), nu))
    return PollingModel(tuple(stations))

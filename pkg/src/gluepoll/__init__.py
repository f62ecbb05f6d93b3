"""Vacation queues and cyclic polling systems with retrials and glue periods.

Customers that find the server absent go to an orbit and retry after
exponential delays; a customer arriving or retrying during the deterministic
glue period that precedes a visit sticks and is served (gated) in that visit.

Subpackages and modules:

* :mod:`gluepoll.distributions` -- service, vacation and switchover laws with closed-form LSTs
* :mod:`gluepoll.single_queue`  -- generating functions and moments of the single queue
* :mod:`gluepoll.optimize`      -- derivatives of E[R] in the glue length and its minimiser
* :mod:`gluepoll.polling`       -- branching-process analysis of the N-station polling system
* :mod:`gluepoll.sim`           -- discrete-event simulator (compiled kernel, Python fallback)
* :mod:`gluepoll.cli`           -- scenario-driven batch front end
"""
from .distributions import Deterministic, Erlang, Exponential, HyperExponential, lst, moments
from .errors import DomainError, GluepollError, InstabilityError, NumericalError
from .models import INFINITY, PollingModel, SingleQueueModel, Station
from .optimize import OptimizationResult, d2_ER_dG2, minimize_glue
from .polling import (
    check_stability, embedded_first_moments, embedded_second_moments, pcl_verify, polling_means,
    symmetric_ER,
)
from .single_queue import arbitrary_time_means, embedded_moments, gf_X

__version__ = "0.1.0"

__all__ = [
    "Deterministic", "DomainError", "Erlang", "Exponential", "GluepollError", "HyperExponential",
    "INFINITY", "InstabilityError", "NumericalError", "OptimizationResult", "PollingModel",
    "SingleQueueModel", "Station", "arbitrary_time_means", "check_stability", "d2_ER_dG2",
    "embedded_first_moments", "embedded_moments", "embedded_second_moments", "gf_X", "lst",
    "minimize_glue", "moments", "pcl_verify", "polling_means", "symmetric_ER",
]

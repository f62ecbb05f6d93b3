"""Event codes, model flattening and the accumulator layout shared by both kernels."""
from __future__ import annotations

import math

import numpy as np

from ..distributions import encode
from ..models import PollingModel

EV_ARRIVAL = 0
EV_RETRIAL = 1
EV_GLUE_START = 2
EV_VISIT_START = 3
EV_SERVICE_START = 4
EV_SERVICE_END = 5
EV_SWITCH_START = 6
EV_SWITCH_END = 7

EVENT_NAMES = ("arrival", "retrial", "glue_start", "visit_start",
               "service_start", "service_end", "switch_start", "switch_end")


def new_accumulators(n: int) -> dict:
    """Zeroed accumulators for one replication of an n-station model."""
    return {
        "phase_time": np.zeros(3 * n),
        "phase_area": np.zeros((3 * n, n)),
        "X": np.zeros((n, n)),
        "X2": np.zeros((n, n, n)),
        "Y": np.zeros((n, n)),
        "Yq": np.zeros(n),
        "Yo": np.zeros(n),
        "YqYo": np.zeros(n),
        "YqYq1": np.zeros(n),
        "YqY": np.zeros((n, n)),
        "Z": np.zeros((n, n)),
        "F": np.zeros(n),
        "W": np.zeros(n),
        "W_count": np.zeros(n),
        "served_work": np.zeros(n),
        "cycles_at": np.zeros(n),
        "immigrants": np.zeros(1),
        "t_start": np.zeros(1),
        "t_end": np.zeros(1),
        "cycles": np.zeros(1),
    }


def _pack(dists) -> tuple[list, list, list]:
    kinds, ints, pars = [], [], []
    for d in dists:
        k, i, f = encode(d)
        kinds.append(k)
        ints.append(i)
        pars.append([float(x) for x in f])
    return kinds, ints, pars


def flatten(pm: PollingModel) -> dict:
    """Plain-typed parameters for the kernels."""
    svc = _pack(s.service for s in pm.stations)
    sw = _pack(s.switchover for s in pm.stations)
    width = max(len(x) for x in svc[2] + sw[2])
    return {
        "n": pm.n,
        "lam": [float(s.lam) for s in pm.stations],
        "glue": [float(s.glue) for s in pm.stations],
        "nu": [0.0 if math.isinf(s.retrial_rate) else float(s.retrial_rate) for s in pm.stations],
        "nu_inf": [bool(math.isinf(s.retrial_rate)) for s in pm.stations],
        "svc_kind": svc[0], "svc_int": svc[1], "svc_par": svc[2],
        "sw_kind": sw[0], "sw_int": sw[1], "sw_par": sw[2],
        "width": width,
    }


def padded(pars: list, width: int) -> np.ndarray:
    out = np.zeros((len(pars), width))
    for i, row in enumerate(pars):
        out[i, : len(row)] = row
    return out

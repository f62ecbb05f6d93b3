"""Replication driver, estimators and event-log utilities for the simulator."""
from __future__ import annotations

import csv
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ..errors import DomainError
from ..models import PollingModel, SingleQueueModel
from . import _kernel_py
from .layout import (
    EV_ARRIVAL, EV_RETRIAL, EV_SERVICE_START, EV_VISIT_START, EV_GLUE_START, EVENT_NAMES, flatten,
)
from .streams import StreamBank

try:  # pragma: no cover - depends on the build
    from . import _ckernel
except ImportError:  # pragma: no cover
    _ckernel = None

BACKENDS = ("c", "python")


def available_backends() -> tuple[str, ...]:
    return BACKENDS if _ckernel is not None else ("python",)


def default_backend() -> str:
    """Compiled kernel when built, unless ``GLUEPOLL_BACKEND=python`` asks otherwise."""
    want = os.environ.get("GLUEPOLL_BACKEND", "").strip().lower()
    if want in ("python", "py"):
        return "python"
    if want in ("c", "cython", "compiled"):
        if _ckernel is None:
            raise DomainError("GLUEPOLL_BACKEND requests the compiled kernel but it is not built")
        return "c"
    return "c" if _ckernel is not None else "python"


def _kernel(backend: str):
    if backend == "python":
        return _kernel_py.run
    if backend == "c":
        if _ckernel is None:
            raise DomainError("compiled kernel is not available; install with a C compiler or use 'python'")
        return _ckernel.run
    raise DomainError(f"unknown backend {backend!r}; choose from {BACKENDS}")


@dataclass(frozen=True)
class SimConfig:
    model: object
    horizon_cycles: int
    warmup_cycles: int | None = None
    replications: int = 10
    seed: int = 0
    explicit_retrials: bool = False
    record_events: bool = False
    backend: str | None = None
    workers: int = 1

    def __post_init__(self):
        if not isinstance(self.model, (SingleQueueModel, PollingModel)):
            raise DomainError("model must be a SingleQueueModel or a PollingModel")
        if isinstance(self.model, SingleQueueModel) and not self.model.lam > 0:
            raise DomainError("simulation needs a positive arrival rate")
        if int(self.horizon_cycles) != self.horizon_cycles or self.horizon_cycles < 1:
            raise DomainError("horizon_cycles must be a positive integer")
        if self.warmup_cycles is None:
            object.__setattr__(self, "warmup_cycles", int(self.horizon_cycles) // 10)
        if not 0 <= self.warmup_cycles < self.horizon_cycles:
            raise DomainError("need 0 <= warmup_cycles < horizon_cycles")
        if int(self.replications) != self.replications or self.replications < 1:
            raise DomainError("replications must be a positive integer")
        if self.workers < 1:
            raise DomainError("workers must be >= 1")

    @property
    def polling(self) -> PollingModel:
        m = self.model
        return m.to_polling() if isinstance(m, SingleQueueModel) else m


@dataclass(frozen=True)
class SimulationEstimate:
    name: str
    point: float
    ci_half_width_95: float
    replications: int

    @property
    def low(self) -> float:
        return self.point - self.ci_half_width_95

    @property
    def high(self) -> float:
        return self.point + self.ci_half_width_95

    def contains(self, value: float, widen: float = 1.0) -> bool:
        return abs(value - self.point) <= widen * self.ci_half_width_95


@dataclass
class Replication:
    index: int
    acc: dict
    events: list | None = None
    values: dict = field(default_factory=dict)


def run_replication(cfg: SimConfig, index: int) -> Replication:
    pm = cfg.polling
    backend = cfg.backend or default_backend()
    log = [] if cfg.record_events else None
    bank = StreamBank(cfg.seed, index, pm.n)
    acc = _kernel(backend)(flatten(pm), bank, int(cfg.warmup_cycles), int(cfg.horizon_cycles),
                           bool(cfg.explicit_retrials), log)
    rep = Replication(index, acc, log)
    rep.values = replication_values(pm, acc)
    return rep


def time_average_tracker(pm: PollingModel, acc: dict) -> dict:
    """Per-period time averages and time fractions from one replication's integrals.

    Keys: ``R_sw``/``R_gl``/``R_vi`` (mean total count while the server is in that
    period of each station) and ``frac_sw``/``frac_gl``/``frac_vi``.
    """
    n = pm.n
    total = float(acc["t_end"][0] - acc["t_start"][0])
    pt = acc["phase_time"].reshape(n, 3)
    pa = acc["phase_area"].sum(axis=1).reshape(n, 3)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(pt > 0, pa / np.where(pt > 0, pt, 1.0), np.nan)
    return {
        "R_gl": means[:, 0], "R_vi": means[:, 1], "R_sw": means[:, 2],
        "frac_gl": pt[:, 0] / total, "frac_vi": pt[:, 1] / total, "frac_sw": pt[:, 2] / total,
        "total_time": total,
    }


def replication_values(pm: PollingModel, acc: dict) -> dict:
    """Named scalar observations of one replication (names are 1-based)."""
    n = pm.n
    cyc = float(acc["cycles"][0])
    total = float(acc["t_end"][0] - acc["t_start"][0])
    per_class = acc["phase_area"].sum(axis=0) / total
    rho = np.array([s.rho for s in pm.stations])
    ta = time_average_tracker(pm, acc)
    out = {"R": float(per_class.sum()), "C": total / cyc,
           "immigrants": float(acc["immigrants"][0]) / cyc}
    W = np.divide(acc["W"], acc["W_count"], out=np.full(n, np.nan), where=acc["W_count"] > 0)
    for i in range(n):
        a = i + 1
        out[f"R[{a}]"] = float(per_class[i])
        out[f"R_sw[{a}]"] = float(ta["R_sw"][i])
        out[f"R_gl[{a}]"] = float(ta["R_gl"][i])
        out[f"R_vi[{a}]"] = float(ta["R_vi"][i])
        out[f"frac_sw[{a}]"] = float(ta["frac_sw"][i])
        out[f"frac_gl[{a}]"] = float(ta["frac_gl"][i])
        out[f"frac_vi[{a}]"] = float(ta["frac_vi"][i])
        out[f"Yq[{a}]"] = float(acc["Yq"][i]) / cyc
        out[f"Yo[{a}]"] = float(acc["Yo"][i]) / cyc
        out[f"YqYo[{a}]"] = float(acc["YqYo"][i]) / cyc
        out[f"YqYq1[{a}]"] = float(acc["YqYq1"][i]) / cyc
        out[f"W[{a}]"] = float(W[i])
        out[f"F[{a}]"] = float(acc["F"][i]) / cyc
        out[f"rho[{a}]"] = float(acc["served_work"][i]) / total
        for j in range(n):
            b = j + 1
            out[f"X[{a}][{b}]"] = float(acc["X"][i, j]) / cyc
            out[f"Y[{a}][{b}]"] = float(acc["Y"][i, j]) / cyc
            out[f"Z[{a}][{b}]"] = float(acc["Z"][i, j]) / cyc
            out[f"YqY[{a}][{b}]"] = float(acc["YqY"][i, j]) / cyc
            for k in range(n):
                # factorial moments: E[X_j X_k] off the diagonal, E[X_j (X_j - 1)] on it
                raw = float(acc["X2"][i, j, k]) - (float(acc["X"][i, j]) if j == k else 0.0)
                out[f"XX[{a}][{b}][{k + 1}]"] = raw / cyc
    out["PCL"] = float(np.nansum(rho * W))
    return out


def _t_half_width(values: np.ndarray) -> float:
    k = len(values)
    if k < 2:
        return math.inf
    return float(stats.t.ppf(0.975, k - 1) * np.std(values, ddof=1) / math.sqrt(k))


def aggregate(reps: list[Replication]) -> list[SimulationEstimate]:
    """Point estimate and 95% t-interval across replication means, per named quantity."""
    names = list(reps[0].values)
    out = []
    for name in names:
        vals = np.array([r.values[name] for r in reps], dtype=float)
        vals = vals[~np.isnan(vals)]
        if len(vals) == 0:
            out.append(SimulationEstimate(name, math.nan, math.inf, 0))
            continue
        out.append(SimulationEstimate(name, float(vals.mean()), _t_half_width(vals), len(vals)))
    return out


def _worker_count(cfg: SimConfig) -> int:
    cap = os.environ.get("GLUEPOLL_THREADS")
    workers = cfg.workers
    if cap:
        try:
            workers = min(workers, max(1, int(cap)))
        except ValueError:
            raise DomainError(f"GLUEPOLL_THREADS must be an integer, got {cap!r}") from None
    return max(1, min(workers, cfg.replications))


def _run_one(args):
    cfg, index = args
    return run_replication(cfg, index)


def run_replications(cfg: SimConfig) -> list[Replication]:
    if cfg.polling.rho_total >= 1.0:
        warnings.warn(f"simulating an unstable model (sum of rho_i = {cfg.polling.rho_total:.6g})",
                      RuntimeWarning, stacklevel=2)
    jobs = [(cfg, r) for r in range(cfg.replications)]
    workers = _worker_count(cfg)
    if workers == 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, jobs))


def simulate(cfg: SimConfig) -> list[SimulationEstimate]:
    """Independent replications of the model; one estimate per observed quantity."""
    return aggregate(run_replications(cfg))


def estimates_by_name(estimates: list[SimulationEstimate]) -> dict:
    return {e.name: e for e in estimates}


# --------------------------------------------------------------------------
# event logs

def write_event_log(events: list, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "kind", "station", "customer_id"])
        for t, kind, st, cid in events:
            w.writerow([repr(float(t)), EVENT_NAMES[kind], st + 1, "" if cid < 0 else cid])


def write_estimates(estimates: list[SimulationEstimate], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "point", "ci95", "reps"])
        for e in estimates:
            w.writerow([e.name, f"{e.point:.12g}", f"{e.ci_half_width_95:.12g}", e.replications])


def check_gating(events: list) -> list[str]:
    """Violations of the gated discipline found in an event log (empty when clean).

    Every customer served in a visit of station i must have entered queue i --
    by arriving or retrying -- during the glue period that immediately precedes
    that visit.
    """
    problems = []
    last_entry = {}
    glue_start = {}
    visit_start = {}
    for t, kind, st, cid in events:
        if kind == EV_GLUE_START:
            glue_start[st] = t
        elif kind == EV_VISIT_START:
            visit_start[st] = t
        elif kind in (EV_ARRIVAL, EV_RETRIAL):
            last_entry[cid] = (t, st)
        elif kind == EV_SERVICE_START:
            entry = last_entry.get(cid)
            if entry is None:
                problems.append(f"customer {cid} served without an arrival record")
                continue
            te, se = entry
            if se != st or not (glue_start.get(st, -math.inf) <= te <= visit_start.get(st, math.inf)):
                problems.append(f"customer {cid} entered at t={te} outside the glue period before its visit")
    return problems


def retrial_gaps(events: list, station: int | None = None) -> np.ndarray:
    """Times between a customer's entry to orbit and each of its successive retrials.

    Only meaningful for logs recorded with explicit retrials.  A gap that is still
    open when the run ends is dropped.
    """
    last = {}
    gaps = []
    in_glue = {}
    for t, kind, st, cid in events:
        if kind == EV_GLUE_START:
            in_glue[st] = True
        elif kind == EV_VISIT_START:
            in_glue[st] = False
        elif kind == EV_ARRIVAL:
            if not in_glue.get(st, False):
                last[cid] = t
        elif kind == EV_RETRIAL:
            if station is not None and st != station:
                last.pop(cid, None)
                continue
            prev = last.get(cid)
            if prev is not None:
                gaps.append(t - prev)
            if in_glue.get(st, False):
                last.pop(cid, None)  # the retrial succeeded: customer left the orbit
            else:
                last[cid] = t
    return np.array(gaps)

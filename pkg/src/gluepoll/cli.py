"""Batch front end: ``gluepoll <command> SCENARIO [--seed] [--out-dir] [--tol] [--parallel]``.

Commands: ``run`` executes every task of the scenario in order; ``analyze``,
``optimize``, ``simulate``, ``validate`` and ``sweep`` execute only the tasks of
that type (or one default task of that type when the scenario lists none).
Each task writes ``<out-dir>/<scenario>/<NN>_<type>.csv`` and a JSON report
next to it.  Exit codes: 0 success, 1 a validation check failed, 2 the scenario
does not parse, 3 the model is unstable, 4 a numerical routine failed.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np
from scipy import stats

from . import optimize as opt
from . import polling, single_queue
from .errors import DomainError, InstabilityError, NumericalError
from .models import PollingModel, SingleQueueModel
from .scenario import Scenario, Task, load_scenario, parse_grid
from .sim import SimConfig, aggregate, estimates_by_name, run_replications, write_event_log

EXIT_OK, EXIT_VALIDATION, EXIT_PARSE, EXIT_UNSTABLE, EXIT_NUMERICAL = 0, 1, 2, 3, 4
DEFAULT_SIM = {"horizon_cycles": 20000, "warmup_cycles": None, "replications": 10}
DEFAULT_PCL_TOL = 1e-8


def fmt(x) -> str:
    """Numbers with 12 significant digits; everything else verbatim."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.12g}"
    return str(x)


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else fmt(x)
    return obj


# --------------------------------------------------------------------------
# analytic summaries

def _polling_of(model) -> PollingModel:
    return model.to_polling() if isinstance(model, SingleQueueModel) else model


def analytic_values(model) -> dict:
    """Named analytic quantities, with the same names the simulator reports (1-based)."""
    pm = _polling_of(model)
    f = polling.embedded_second_moments(pm)
    means = polling.polling_means(pm)
    pcl = polling.pcl_verify(pm, means)
    n = pm.n
    out = {"R": means.R_total, "C": f.EC, "immigrants": polling.immigration_mean(pm)}
    fr = means.time_fractions
    for i in range(n):
        a = i + 1
        out[f"R[{a}]"] = means.R_i[i]
        if fr["switchover"][i] > 0:
            out[f"R_sw[{a}]"] = means.R_sw[i]
        if fr["glue"][i] > 0:
            out[f"R_gl[{a}]"] = means.R_gl[i]
        out[f"R_vi[{a}]"] = means.R_vi[i]
        out[f"frac_sw[{a}]"] = fr["switchover"][i]
        out[f"frac_gl[{a}]"] = fr["glue"][i]
        out[f"frac_vi[{a}]"] = fr["visit"][i]
        out[f"Yq[{a}]"] = f.EYq[i]
        out[f"Yo[{a}]"] = f.EYo[i]
        out[f"YqYo[{a}]"] = f.EYqYo[i]
        out[f"YqYq1[{a}]"] = f.EYq2[i]
        out[f"W[{a}]"] = pcl.EW[i]
        out[f"F[{a}]"] = pcl.EF[i]
        out[f"rho[{a}]"] = pm.stations[i].rho
        for j in range(n):
            b = j + 1
            out[f"X[{a}][{b}]"] = f.EX[i, j]
            out[f"Y[{a}][{b}]"] = f.EY[i, j]
            out[f"Z[{a}][{b}]"] = f.EZ[i, j]
            out[f"YqY[{a}][{b}]"] = f.EYqYj[i, j]
            for k in range(n):
                out[f"XX[{a}][{b}][{k + 1}]"] = f.second[i, j, k]
    out["PCL"] = pcl.rhs
    return {k: float(v) for k, v in out.items()}


def analyze_model(model) -> dict:
    """Everything the analytic engines report about one model."""
    pm = _polling_of(model)
    stab = polling.check_stability(pm)
    if not stab.stable:
        raise InstabilityError(stab.rho_total)
    vals = {"rho_total": stab.rho_total, "spectral_radius_M": stab.spectral_radius_M}
    vals.update(analytic_values(model))
    pcl = polling.pcl_verify(pm)
    vals["PCL_lhs"] = pcl.lhs
    vals["PCL_residual"] = pcl.residual
    if isinstance(model, SingleQueueModel):
        em = single_queue.embedded_moments(model)
        at = single_queue.arbitrary_time_means(model)
        vals.update({"EX": em.EX, "EYq": em.EYq, "EYo": em.EYo, "EZ": em.EZ, "EXX1": em.EXX1,
                     "EYqYq1": em.EYqYq1, "EYqYo": em.EYqYo, "R_va": at.R_va, "R_gl": at.R_gl,
                     "R_vi": at.R_vi, "ER_closed_form": single_queue.mean_customers(model)})
        if model.glue > 0 and not math.isinf(model.retrial_rate):
            vals["dER_dG"] = opt.dER_dG(model, model.glue)
            vals["d2ER_dG2"] = opt.d2_ER_dG2(model, model.glue)
        for regime in ("small_G", "large_G"):
            try:
                vals[f"asymptotic_{regime}"] = single_queue.asymptotic_ER(model, regime)
            except DomainError:
                pass
    return {k: float(v) for k, v in vals.items()}


def model_ER(model) -> dict:
    if isinstance(model, SingleQueueModel):
        return {"R": single_queue.mean_customers(model)}
    m = polling.polling_means(model)
    out = {"R": m.R_total}
    out.update({f"R[{i + 1}]": float(r) for i, r in enumerate(m.R_i)})
    return out


# --------------------------------------------------------------------------
# tasks

class Runner:
    def __init__(self, scenario: Scenario, out_dir: Path, seed: int | None, tol: float | None,
                 workers: int):
        self.sc = scenario
        self.out = out_dir / scenario.name
        self.seed = seed
        self.tol = tol
        self.workers = workers
        self.failed = False

    def _variants(self, task: Task) -> list[tuple[str, object]]:
        """(label, model) pairs: one per variant, or the base model alone."""
        variants = task.params.get("variants") or {}
        if not variants:
            return [("base", None)]
        return list(variants.items())

    def _write(self, index: int, task: Task, header: list, rows: list, report: dict) -> None:
        self.out.mkdir(parents=True, exist_ok=True)
        stem = f"{index:02d}_{task.type}"
        with open(self.out / f"{stem}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([fmt(x) for x in r])
        report = {"scenario": self.sc.name, "task": task.type, "index": index,
                  "params": task.params, "model": self.sc.model_literal, **report}
        with open(self.out / f"{stem}.json", "w") as fh:
            json.dump(_json_safe(report), fh, indent=2, sort_keys=True)
            fh.write("\n")

    # -- analyze
    def analyze(self, index: int, task: Task) -> None:
        rows, results = [], {}
        for label, over in self._variants(task):
            vals = analyze_model(self.sc.model_with(over))
            results[label] = vals
            rows.extend([label, k, v] for k, v in vals.items())
        self._write(index, task, ["variant", "quantity", "value"], rows, {"results": results})

    # -- optimize
    def optimize(self, index: int, task: Task) -> None:
        p = task.params
        tol = p.get("tol", self.tol if self.tol is not None else opt.DEFAULT_TOL)
        path = p.get("path")
        grid = parse_grid(p["grid"]) if path else [None]
        rows, results = [], []
        for label, over in self._variants(task):
            for v in grid:
                model = self.sc.model_with(over, path, v)
                if not isinstance(model, SingleQueueModel):
                    raise DomainError("optimize applies to single-queue models only")
                res = opt.minimize_glue(model, p.get("g_lo"), p.get("g_hi"), tol)
                cert = res.certificate["second_derivative_min"]
                rows.append([label, "" if v is None else v, res.g_min, res.er_min, res.iterations,
                             res.bracket[0], res.bracket[1], cert])
                results.append({"variant": label, "value": v, "g_min": res.g_min,
                                "er_min": res.er_min, "iterations": res.iterations,
                                "bracket": list(res.bracket), "second_derivative_min": cert})
        header = ["variant", path or "value", "g_min", "er_min", "iterations", "bracket_lo",
                  "bracket_hi", "second_derivative_min"]
        self._write(index, task, header, rows, {"tol": tol, "results": results})

    # -- sweep
    def sweep(self, index: int, task: Task) -> None:
        p = task.params
        path, grid = p["path"], parse_grid(p["grid"])
        rows, results, names = [], [], None
        for label, over in self._variants(task):
            for v in grid:
                vals = model_ER(self.sc.model_with(over, path, v))
                names = names or list(vals)
                rows.append([label, v] + [vals[k] for k in names])
                results.append({"variant": label, "value": v, **vals})
        self._write(index, task, ["variant", path] + names, rows, {"results": results})

    # -- simulate
    def _sim_config(self, model, p: dict) -> SimConfig:
        cfg = {**DEFAULT_SIM, **{k: p[k] for k in DEFAULT_SIM if k in p}}
        seed = self.seed if self.seed is not None else p.get("seed", 0)
        return SimConfig(model, int(cfg["horizon_cycles"]), cfg["warmup_cycles"],
                         int(cfg["replications"]), seed=int(seed),
                         explicit_retrials=bool(p.get("explicit_retrials", False)),
                         record_events=bool(p.get("record_events", False)),
                         backend=p.get("backend"), workers=self.workers)

    def simulate(self, index: int, task: Task) -> None:
        cfg = self._sim_config(self.sc.model, task.params)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            reps = run_replications(cfg)
        est = aggregate(reps)
        rows = [[e.name, e.point, e.ci_half_width_95, e.replications] for e in est]
        report = {"seed": cfg.seed, "horizon_cycles": cfg.horizon_cycles,
                  "warmup_cycles": cfg.warmup_cycles, "replications": cfg.replications,
                  "warnings": [str(w.message) for w in caught],
                  "estimates": {e.name: {"point": e.point, "ci95": e.ci_half_width_95,
                                         "reps": e.replications} for e in est}}
        if cfg.record_events:
            self.out.mkdir(parents=True, exist_ok=True)
            path = self.out / f"{index:02d}_events.csv"
            write_event_log(reps[0].events, path)
            report["event_log"] = path.name
        self._write(index, task, ["name", "point", "ci95", "reps"], rows, report)

    # -- validate
    def validate(self, index: int, task: Task) -> None:
        p = task.params
        model = self.sc.model
        cfg = self._sim_config(model, p)
        tol = p.get("tolerances", {})
        pcl_tol = tol.get("pcl_residual", self.tol if self.tol is not None else DEFAULT_PCL_TOL)
        alpha = tol.get("family_alpha", 0.05)
        analytic = analytic_values(model)
        est = estimates_by_name(aggregate(run_replications(cfg)))
        checks = [k for k in analytic if k in est and est[k].replications == cfg.replications]
        # simultaneous intervals: Bonferroni over all compared quantities
        k = max(1, len(checks))
        dof = cfg.replications - 1
        widen = tol.get("ci_widen")
        if widen is None:
            widen = float(stats.t.ppf(1 - alpha / (2 * k), dof) / stats.t.ppf(0.975, dof))
        rows, results = [], []
        for name in checks:
            e = est[name]
            a = analytic[name]
            allowed = widen * e.ci_half_width_95
            ok = abs(a - e.point) <= allowed
            rows.append([name, a, e.point, e.ci_half_width_95, allowed, ok])
            results.append({"check": name, "analytic": a, "simulated": e.point,
                            "ci95": e.ci_half_width_95, "allowed": allowed, "passed": bool(ok)})
        pcl = polling.pcl_verify(_polling_of(model))
        ok = abs(pcl.residual) <= pcl_tol
        rows.append(["PCL_residual", 0.0, abs(pcl.residual), 0.0, pcl_tol, ok])
        results.append({"check": "PCL_residual", "analytic": 0.0, "simulated": abs(pcl.residual),
                        "ci95": 0.0, "allowed": pcl_tol, "passed": bool(ok)})
        passed = all(r["passed"] for r in results)
        self.failed |= not passed
        self._write(index, task, ["check", "analytic", "simulated", "ci95", "allowed", "passed"], rows,
                    {"passed": passed, "ci_widen": widen, "family_alpha": alpha,
                     "seed": cfg.seed, "replications": cfg.replications,
                     "horizon_cycles": cfg.horizon_cycles, "results": results})

    def run(self, only: str | None) -> int:
        tasks = [(i, t) for i, t in enumerate(self.sc.tasks) if only is None or t.type == only]
        if only is not None and not tasks:
            tasks = [(len(self.sc.tasks), Task(only, {}))]
            if only == "sweep":
                raise DomainError("the scenario has no sweep task (a sweep needs 'path' and 'grid')")
        for i, t in tasks:
            getattr(self, t.type)(i, t)
        return EXIT_VALIDATION if self.failed else EXIT_OK


# --------------------------------------------------------------------------
# entry point

def _workers(arg) -> int:
    if arg is None:
        return 1
    n = arg if arg > 0 else (os.cpu_count() or 1)
    cap = os.environ.get("GLUEPOLL_THREADS")
    if cap and cap.isdigit() and int(cap) > 0:
        n = min(n, int(cap))
    return max(1, n)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gluepoll",
        description="Analyze, optimize, simulate and validate vacation and polling models with "
                    "retrials and glue periods, driven by a scenario file.",
        epilog="exit codes: 0 ok, 1 validation failed, 2 bad scenario, 3 unstable model, "
               "4 numerical failure")
    ap.add_argument("command", choices=("run", "analyze", "optimize", "simulate", "validate", "sweep"))
    ap.add_argument("scenario", help="scenario JSON file, or builtin:<name>")
    ap.add_argument("--seed", type=int, default=None, help="master seed for simulation tasks")
    ap.add_argument("--out-dir", default="gluepoll-out", help="output directory (default: %(default)s)")
    ap.add_argument("--tol", type=float, default=None,
                    help="optimizer tolerance and analytic residual tolerance")
    ap.add_argument("--parallel", type=int, nargs="?", const=0, default=None, metavar="N",
                    help="run replications in N processes (all cores when N is omitted)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sc = load_scenario(args.scenario)
        runner = Runner(sc, Path(args.out_dir), args.seed, args.tol, _workers(args.parallel))
        code = runner.run(None if args.command == "run" else args.command)
    except InstabilityError as exc:
        print(f"gluepoll: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except NumericalError as exc:
        print(f"gluepoll: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DomainError as exc:
        print(f"gluepoll: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if code == EXIT_VALIDATION:
        print("gluepoll: validation failed", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

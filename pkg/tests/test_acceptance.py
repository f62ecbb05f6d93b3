"""Acceptance criteria, one test per criterion.

Each test records a single ``criterion N: PASS|FAIL -- detail`` line (shown in the
pytest terminal summary).  ``python3 tests/test_acceptance.py`` prints the same
lines without pytest.  Tolerances are the contractual ones; none is loosened.
"""
from __future__ import annotations

import csv
import math
import sys
import time
from functools import lru_cache
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))
from conftest import random_polling, random_single_queue, two_station  # noqa: E402

from gluepoll import (  # noqa: E402
    INFINITY, Deterministic, Erlang, Exponential, HyperExponential, PollingModel, SingleQueueModel,
    Station, moments,
)
from gluepoll import cli, optimize, polling, single_queue  # noqa: E402
from gluepoll.sim import SimConfig, estimates_by_name, simulate  # noqa: E402

# Table 1 of the source: (E[S], g_min exp, g_min const, E[R_min] exp, E[R_min] const)
TABLE1 = [
    (0.1, 0.608, 0.606, 2.476, 2.473),
    (0.5, 1.334, 1.320, 3.419, 3.385),
    (1.0, 1.846, 1.801, 4.259, 4.170),
    (5.0, 3.694, 3.508, 9.276, 8.549),
    (10.0, 4.785, 4.495, 14.778, 13.070),
    (50.0, 7.783, 7.225, 56.027, 45.156),
    (100.0, 9.167, 8.521, 106.606, 83.634),
]
G_TOL, ER_TOL = 2e-3, 5e-3

SIM_SEED = 1
SIM_REPS = 20
SIM_CYCLES = 50_000


# --------------------------------------------------------------------------
# 1. Table 1

def check_table1():
    t0 = time.perf_counter()
    bad = []
    worst_g = worst_r = 0.0
    for es, g_exp, g_det, r_exp, r_det in TABLE1:
        for kind, g_ref, r_ref in (("exponential", g_exp, r_exp), ("deterministic", g_det, r_det)):
            m = SingleQueueModel(0.5, Exponential(1.0), optimize.vacation_of_kind(kind, es), 1.0, 0.5)
            res = optimize.minimize_glue(m)
            dg, dr = abs(res.g_min - g_ref), abs(res.er_min - r_ref)
            worst_g, worst_r = max(worst_g, dg), max(worst_r, dr)
            if dg > G_TOL or dr > ER_TOL:
                bad.append(f"{kind[:3]} E[S]={es:g}: {res.g_min:.4f}/{res.er_min:.4f} vs {g_ref}/{r_ref}")
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 5.0
    detail = (f"{14 - len(bad)}/14 rows within tolerance, max |dG|={worst_g:.4f}, "
              f"max |dE[R]|={worst_r:.4f}, {elapsed:.2f}s")
    if bad:
        detail += "; e.g. " + "; ".join(bad[:3])
    return ok, detail


# --------------------------------------------------------------------------
# 2. M/G/1 retrial limit

def check_retrial_limit():
    lam, nu = 0.5, 0.5
    b = moments(Exponential(1.0))
    rho = lam * b.m1
    target = rho + lam ** 2 * b.m2 / (2 * (1 - rho)) + lam * rho / (nu * (1 - rho))
    m = SingleQueueModel(lam, Exponential(1.0), Deterministic(0.0), 1e-6, nu)
    er = single_queue.mean_customers(m)
    err = abs(er - target)
    return err <= 1e-3 and abs(target - 2.0) < 1e-12, f"E[R]={er:.9f}, target={target}, |err|={err:.2e}"


# --------------------------------------------------------------------------
# 3. gated-vacation limit

def _gated_oracle(lam, service, vac_mean, vac_second):
    # one-station gated polling system: E[W] = lam E[B^2]/(2(1-rho)) + E[V^2]/(2E[V]) + rho E[V]/(1-rho)
    b = moments(service)
    rho = lam * b.m1
    ew = lam * b.m2 / (2 * (1 - rho)) + vac_second / (2 * vac_mean) + rho * vac_mean / (1 - rho)
    return rho + lam * ew


def check_gated_limit():
    worst = 0.0
    cases = [
        (0.5, Exponential(1.0), Exponential(1.0), 1.0),
        (0.6, Erlang(2, 2.0), HyperExponential((0.4, 0.6), (0.5, 3.0)), 0.5),
        (0.3, HyperExponential((0.5, 0.5), (1.0, 4.0)), Deterministic(3.0), 2.0),
    ]
    for lam, svc, vac, g in cases:
        m = SingleQueueModel(lam, svc, vac, g, INFINITY)
        s = moments(vac)
        v1, v2 = g + s.m1, g * g + 2 * g * s.m1 + s.m2
        worst = max(worst, abs(single_queue.mean_customers(m) - _gated_oracle(lam, svc, v1, v2)))
    total = 4.0
    vals = [single_queue.mean_customers(SingleQueueModel(0.5, Exponential(1.0), Deterministic(total - g), g,
                                                         INFINITY))
            for g in np.linspace(0.0, total, 9)]
    spread = max(vals) - min(vals)
    return (worst <= 1e-10 and spread <= 1e-10,
            f"max |E[R] - gated closed form|={worst:.1e}, spread over G+S split={spread:.1e}")


# --------------------------------------------------------------------------
# 4. binomial-gated limit

def _binomial_oracle(lam, service, vacation, p):
    b, s = moments(service), moments(vacation)
    rho = lam * b.m1
    return (rho + lam ** 2 * b.m2 / (2 * (1 - rho)) + lam * s.m2 / (2 * s.m1)
            + lam * rho * s.m1 / (1 - rho) + lam * s.m1 * (1 - p) / (p * (1 - rho)))


def check_binomial_limit():
    details, ok = [], True
    for lam, svc, vac, c in ((0.5, Exponential(1.0), Exponential(1.0), 1.0),
                             (0.4, Erlang(3, 3.0), Deterministic(2.0), 0.3)):
        target = _binomial_oracle(lam, svc, vac, -math.expm1(-c))
        errs = []
        for g in (1e-2, 1e-3, 1e-4):
            m = SingleQueueModel(lam, svc, vac, g, c / g)
            errs.append(abs(single_queue.mean_customers(m) - target))
        ok &= errs[0] > errs[1] > errs[2] and errs[2] < 1e-3
        details.append("/".join(f"{e:.1e}" for e in errs))
    return ok, "errors at G=1e-2/1e-3/1e-4: " + ", ".join(details)


# --------------------------------------------------------------------------
# 5. convexity certificate

def check_convexity():
    rng = np.random.default_rng(5)
    worst = math.inf
    grid = np.geomspace(1e-4, 1e4, 100)
    for _ in range(20):
        m = random_single_queue(rng)
        worst = min(worst, min(optimize.d2_ER_dG2(m, g) for g in grid))
    return worst >= -1e-9, f"min d2E[R]/dG2 over 20 models x 100 points = {worst:.3e}"


# --------------------------------------------------------------------------
# 6. functional-equation residuals

def check_functional_equations():
    rng = np.random.default_rng(6)
    worst1 = worst_n = 0.0
    for _ in range(10):
        m = random_single_queue(rng)
        for z in rng.uniform(0, 1, 10):
            r = abs(single_queue.gf_X(m, z) - single_queue.K_of_z(m, z) * single_queue.gf_X(m, single_queue.f_of_z(m, z)))
            worst1 = max(worst1, r)
    for n in (2, 3, 4):
        for _ in range(4):
            pm = random_polling(rng, n)
            for _ in range(5):
                z = rng.uniform(0, 1, n)
                lhs = polling.gf_polling_embedded(pm, z)
                rhs = polling.gf_polling_K(pm, z) * polling.gf_polling_embedded(pm, polling.gf_polling_h(pm, z))
                worst_n = max(worst_n, abs(lhs - rhs))
    return max(worst1, worst_n) <= 1e-8, f"max residual single={worst1:.1e}, N-queue={worst_n:.1e}"


# --------------------------------------------------------------------------
# 7. GF derivatives against closed-form moments

def _derivs_at_one(logf, h):
    """First and second derivative at z=1 of exp(logf(z)) from backward differences of log f."""
    l0, l1, l2, l3 = (logf(1.0 - k * h) for k in range(4))
    d1 = (11 * l0 - 18 * l1 + 9 * l2 - 2 * l3) / (6 * h)  # O(h^3)
    d2 = (2 * l0 - 5 * l1 + 4 * l2 - l3) / h ** 2  # O(h^2)
    return d1, d2 + d1 * d1  # (log f)'' + ((log f)')^2 = f''/f at 1


def check_gf_moments():
    rng = np.random.default_rng(7)
    worst = 0.0
    h = 1e-4  # truncation ~ (h * moment scale)^2 stays well below the tolerance
    for _ in range(10):
        m = random_single_queue(rng)
        em = single_queue.embedded_moments(m)
        d1, d2 = _derivs_at_one(lambda z: math.log(single_queue.gf_X(m, z, tol=1e-15)), h)
        worst = max(worst, abs(d1 / em.EX - 1), abs(d2 / em.EXX1 - 1))
    for n in (2, 3):
        for _ in range(3):
            pm = random_polling(rng, n)
            f = polling.embedded_second_moments(pm)
            for j in range(n):
                def logf(z, j=j):
                    v = np.ones(n)
                    v[j] = z
                    return math.log(polling.gf_polling_embedded(pm, v, tol=1e-15))
                d1, d2 = _derivs_at_one(logf, h)
                worst = max(worst, abs(d1 / f.EX[0, j] - 1), abs(d2 / f.second[0, j, j] - 1))
    return worst <= 1e-4, f"max relative error of finite-difference moments = {worst:.1e}"


# --------------------------------------------------------------------------
# 8. N = 1 reduction

def _rel(a, b):
    return abs(a - b) / max(1.0, abs(b))


def check_n1_reduction():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(10):
        m = random_single_queue(rng, allow_infinite_nu=True)
        pm = m.to_polling()
        em = single_queue.embedded_moments(m)
        at = single_queue.arbitrary_time_means(m)
        f = polling.embedded_second_moments(pm)
        pmeans = polling.polling_means(pm)
        pairs = [
            (f.EX[0, 0], em.EX), (f.EYq[0], em.EYq), (f.EYo[0], em.EYo), (f.EZ[0, 0], em.EZ),
            (f.second[0, 0, 0], em.EXX1), (f.EYq2[0], em.EYqYq1), (f.EYqYo[0], em.EYqYo),
            (pmeans.R_sw[0], at.R_va), (pmeans.R_gl[0], at.R_gl), (pmeans.R_vi[0], at.R_vi),
            (pmeans.R_total, at.R), (pmeans.R_i[0], single_queue.mean_customers(m)),
        ]
        for z in (0.1, 0.5, 0.9):
            pairs.append((polling.gf_polling_embedded(pm, [z]), single_queue.gf_X(m, z)))
            pairs.append((polling.gf_polling_arbitrary(pm, [z], [1 - z / 2]),
                          single_queue.gf_arbitrary(m, z, 1 - z / 2)))
        worst = max(worst, max(_rel(a, b) for a, b in pairs))
    return worst <= 1e-10, f"max relative difference over 10 models = {worst:.1e}"


# --------------------------------------------------------------------------
# 9. symmetric closed form

def check_symmetric():
    rng = np.random.default_rng(9)
    worst = 0.0
    from conftest import random_distribution
    for _ in range(10):
        n = int(rng.integers(2, 6))
        eb = float(rng.uniform(0.2, 1.5))
        lam_total = float(rng.uniform(0.1, 0.9)) / eb
        svc = random_distribution(rng, eb)
        sw = random_distribution(rng, float(rng.uniform(0.05, 3.0)))
        g = float(rng.uniform(0.1, 4.0))
        nu = float(rng.uniform(0.1, 3.0)) if rng.random() < 0.8 else INFINITY
        pm = PollingModel(tuple(Station(lam_total / n, svc, sw, g, nu) for _ in range(n)))
        worst = max(worst, _rel(polling.symmetric_ER(lam_total, svc, sw, g, nu, n),
                                polling.polling_means(pm).R_total))
    return worst <= 1e-9, f"max relative difference over 10 symmetric models = {worst:.1e}"


# --------------------------------------------------------------------------
# 10 & 11. simulation

SINGLE_QUEUE_SIM_MODELS = {
    "exp/exp G=1.846": SingleQueueModel(0.5, Exponential(1.0), Exponential(1.0), 1.846, 0.5),
    "erl/hyp nu=inf": SingleQueueModel(0.6, Erlang(2, 2.0), HyperExponential((0.4, 0.6), (0.5, 3.0)), 0.5,
                                       INFINITY),
    "hyp/det G=3": SingleQueueModel(0.4, HyperExponential((0.5, 0.5), (1.0, 4.0)), Deterministic(5.0), 3.0,
                                    0.2),
}


SIM_SECONDS: dict = {}


@lru_cache(maxsize=None)
def _simulated(label: str):
    model = two_station() if label == "two-station" else SINGLE_QUEUE_SIM_MODELS[label]
    cfg = SimConfig(model, SIM_CYCLES, SIM_CYCLES // 10, SIM_REPS, seed=SIM_SEED)
    t0 = time.perf_counter()
    est = estimates_by_name(simulate(cfg))
    SIM_SECONDS[label] = time.perf_counter() - t0
    return est


def check_pcl():
    rng = np.random.default_rng(10)
    models = [two_station()] + [random_polling(rng, n) for n in (1, 2, 3, 5) for _ in range(3)]
    worst = max(abs(polling.pcl_verify(pm).residual) for pm in models)
    rep = polling.pcl_verify(two_station())
    est = _simulated("two-station")["PCL"]
    gap = abs(est.point - rep.rhs)
    ok = worst <= 1e-8 and gap <= 2 * est.ci_half_width_95
    return ok, (f"analytic residual max={worst:.1e} on {len(models)} models; simulated "
                f"{est.point:.4f} +/- {est.ci_half_width_95:.4f} vs {rep.rhs:.4f} "
                f"({gap / est.ci_half_width_95:.2f} half-widths)")


def _targets(model):
    pm = model.to_polling() if isinstance(model, SingleQueueModel) else model
    f = polling.embedded_first_moments(pm)
    means = polling.polling_means(pm)
    out = {}
    for i in range(pm.n):
        a = i + 1
        out[f"R[{a}]"] = means.R_i[i]
        out[f"Yq[{a}]"] = f.EYq[i]
        out[f"X[{a}][{a}]"] = f.EX[i, i]
        for j in range(pm.n):
            out[f"Z[{a}][{j + 1}]"] = f.EZ[i, j]
    return out


def check_sim_agreement():
    misses, total = [], 0
    for label in ["two-station", *SINGLE_QUEUE_SIM_MODELS]:
        model = two_station() if label == "two-station" else SINGLE_QUEUE_SIM_MODELS[label]
        est = _simulated(label)
        for name, value in _targets(model).items():
            total += 1
            e = est[name]
            if not e.contains(value):
                misses.append(f"{label} {name}: {value:.4f} vs {e.point:.4f}+/-{e.ci_half_width_95:.4f}")
    elapsed = sum(SIM_SECONDS.values())
    ok = not misses and elapsed < 120
    detail = f"{total - len(misses)}/{total} analytic values inside 95% CIs ({SIM_REPS} reps x {SIM_CYCLES} cycles), simulation {elapsed:.1f}s"
    if misses:
        detail += "; " + "; ".join(misses)
    return ok, detail


# --------------------------------------------------------------------------
# 12. Fig. 1 shape

def check_fig1(out_dir: Path):
    code = cli.main(["sweep", "builtin:fig1", "--out-dir", str(out_dir)])
    if code != 0:
        return False, f"sweep exited with {code}"
    rows = list(csv.DictReader(open(out_dir / "fig1" / "00_sweep.csv")))
    sc = cli.load_scenario("builtin:fig1")
    task = next(t for t in sc.tasks if t.type == "sweep")
    details, ok = [], True
    for label, over in task.params["variants"].items():
        pts = sorted((float(r["glue"]), float(r["R"])) for r in rows if r["variant"] == label)
        g = np.array([p[0] for p in pts])
        er = np.array([p[1] for p in pts])
        k = int(np.argmin(er))
        d = np.diff(er)
        unimodal = 0 < k < len(er) - 1 and np.all(d[:k] < 0) and np.all(d[k:] > 0)
        m = sc.model_with(over)
        b = moments(m.service)
        rho = m.lam * b.m1
        es = moments(m.vacation).m1
        large = m.lam * (1 + rho) / (2 * (1 - rho))
        small = m.lam * es / (m.retrial_rate * (1 - rho))
        r_large = single_queue.mean_customers(m.with_glue(1e3)) / 1e3 / large
        r_small = 1e-3 * single_queue.mean_customers(m.with_glue(1e-3)) / small
        good = unimodal and abs(r_large - 1) <= 0.02 and abs(r_small - 1) <= 0.02
        ok &= good
        if not good:
            details.append(f"{label}: interior-min={unimodal}, ratios {r_large:.4f}/{r_small:.4f}")
    detail = f"{len(task.params['variants'])} curves, G in [1e-3, 1e3]: unique interior minimum and both asymptotes within 2%"
    return ok, detail if ok else "; ".join(details)


# --------------------------------------------------------------------------
# pytest wrappers

def test_criterion_01_table1(acceptance):
    acceptance(1, *check_table1())


def test_criterion_02_retrial_limit(acceptance):
    acceptance(2, *check_retrial_limit())


def test_criterion_03_gated_vacation_limit(acceptance):
    acceptance(3, *check_gated_limit())


def test_criterion_04_binomial_gated_limit(acceptance):
    acceptance(4, *check_binomial_limit())


def test_criterion_05_convexity(acceptance):
    acceptance(5, *check_convexity())


def test_criterion_06_functional_equations(acceptance):
    acceptance(6, *check_functional_equations())


def test_criterion_07_gf_moments(acceptance):
    acceptance(7, *check_gf_moments())


def test_criterion_08_n1_reduction(acceptance):
    acceptance(8, *check_n1_reduction())


def test_criterion_09_symmetric(acceptance):
    acceptance(9, *check_symmetric())


def test_criterion_10_pcl(acceptance):
    acceptance(10, *check_pcl())


def test_criterion_11_simulation(acceptance):
    acceptance(11, *check_sim_agreement())


def test_criterion_12_fig1_shape(acceptance, tmp_path):
    acceptance(12, *check_fig1(tmp_path))


if __name__ == "__main__":
    import tempfile

    checks = [check_table1, check_retrial_limit, check_gated_limit, check_binomial_limit, check_convexity,
              check_functional_equations, check_gf_moments, check_n1_reduction, check_symmetric, check_pcl,
              check_sim_agreement]
    with tempfile.TemporaryDirectory() as tmp:
        results = [fn() for fn in checks] + [check_fig1(Path(tmp))]
    for i, (ok, detail) in enumerate(results, start=1):
        print(f"criterion {i}: {'PASS' if ok else 'FAIL'} -- {detail}")
    sys.exit(0 if all(ok for ok, _ in results) else 1)

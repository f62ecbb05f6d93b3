"""Pure-Python simulation kernel (reference implementation and fallback).

``_ckernel.pyx`` implements the same algorithm statement by statement; both
consume the same uniforms in the same order and therefore produce bit-identical
accumulators.  Keep the two in sync.

Server phases are numbered ``3*i + {0: glue, 1: visit, 2: switchover}``.  The
orbit of each station is served by one superposed retrial clock of rate
``n * nu`` with a uniformly chosen member, which by memorylessness is the same
process as independent per-customer Exp(nu) timers.  In the default *lazy* mode
the clock of station i only runs during glue period i (a retrial at any other
time changes nothing); *explicit* mode runs every clock all the time so that
the event log contains every retrial.
"""
from __future__ import annotations

import math

from .layout import (
    EV_ARRIVAL, EV_GLUE_START, EV_RETRIAL, EV_SERVICE_END, EV_SERVICE_START,
    EV_SWITCH_END, EV_SWITCH_START, EV_VISIT_START, new_accumulators,
)

INF = math.inf


def run(p: dict, bank, warmup: int, horizon: int, explicit: bool, log) -> dict:
    N = p["n"]
    lam, glue, nu, nu_inf = p["lam"], p["glue"], p["nu"], p["nu_inf"]
    sk, si, sf = p["svc_kind"], p["svc_int"], p["svc_par"]
    wk, wi, wf = p["sw_kind"], p["sw_int"], p["sw_par"]
    buf, pos = bank.buf, bank.pos
    block = buf.shape[1]
    acc = new_accumulators(N)
    # plain lists are much faster than numpy scalars inside the event loop
    phase_time = [0.0] * (3 * N)
    area = [[0.0] * N for _ in range(3 * N)]

    def uni(k):
        j = pos[k]
        if j == block:
            bank.refill(k)
            j = 0
        pos[k] = j + 1
        return buf[k, j]

    def expo(k, rate):
        return -math.log1p(-uni(k)) / rate

    def draw(k, kind, n_int, par):
        if kind == 0:
            return par[0]
        if kind == 1:
            return -math.log1p(-uni(k)) / par[0]
        if kind == 2:
            x = 0.0
            for _ in range(n_int):
                x += -math.log1p(-uni(k)) / par[0]
            return x
        u = uni(k)
        c = 0.0
        ph = n_int - 1
        for j in range(n_int):
            c += par[j]
            if u < c:
                ph = j
                break
        return -math.log1p(-uni(k)) / par[n_int + ph]

    # customers
    c_arr, c_svc, c_imm = [], [], []
    free = []
    queue = [[] for _ in range(N)]
    qhead = [0] * N
    orbit = [[] for _ in range(N)]
    cnt = [0] * N
    work = [0.0] * N

    next_arr = [expo(4 * k, lam[k]) for k in range(N)]
    next_ret = [INF] * N

    t = 0.0
    cycle = 0
    measuring = warmup == 0
    st = 0
    phase = 0  # 0 glue, 1 visit, 2 switchover
    cur = -1
    t_end = 0.0
    start_glue = True
    first = True

    while True:
        if start_glue:
            start_glue = False
            # ---- glue start at station st
            if st == 0 and not first:
                cycle += 1
                if cycle - 1 >= warmup:
                    tag = cycle - 1
                    n_imm = 0
                    for k in range(N):
                        for cid in orbit[k]:
                            if c_imm[cid] == tag:
                                n_imm += 1
                    acc["immigrants"][0] += n_imm
                if cycle == horizon:
                    break
                measuring = cycle >= warmup
                if measuring and cycle == warmup:
                    acc["t_start"][0] = t
            if log is not None:
                log.append((t, EV_GLUE_START, st, -1))
            if measuring:
                xs = acc["X"][st]
                x2 = acc["X2"][st]
                for j in range(N):
                    nj = len(orbit[j])
                    xs[j] += nj
                    for k in range(N):
                        x2[j, k] += nj * len(orbit[k])
                acc["cycles_at"][st] += 1
            phase = 0
            if nu_inf[st]:
                ob = orbit[st]
                for cid in ob:
                    if log is not None:
                        log.append((t, EV_RETRIAL, st, cid))
                    queue[st].append(cid)
                ob.clear()
            elif not explicit:
                n = len(orbit[st])
                next_ret[st] = t + expo(4 * st + 1, n * nu[st]) if n > 0 else INF
            t_end = t + glue[st]
            first = False

        # ---- next event: phase end wins exact ties
        tmin = t_end
        ev = 0
        who = -1
        for k in range(N):
            if next_arr[k] < tmin:
                tmin = next_arr[k]
                ev = 1
                who = k
        for k in range(N):
            if next_ret[k] < tmin:
                tmin = next_ret[k]
                ev = 2
                who = k

        if measuring:
            dt = tmin - t
            ph = 3 * st + phase
            phase_time[ph] += dt
            row = area[ph]
            for k in range(N):
                row[k] += dt * cnt[k]
        t = tmin

        if ev == 1:
            k = who
            if free:
                cid = free.pop()
                c_arr[cid] = t
            else:
                cid = len(c_arr)
                c_arr.append(t)
                c_svc.append(0.0)
                c_imm.append(0)
            s = draw(4 * k + 2, sk[k], si[k], sf[k])
            c_svc[cid] = s
            if phase == 1:
                c_imm[cid] = cycle if c_imm[cur] == cycle else -1
            else:
                c_imm[cid] = cycle
            cnt[k] += 1
            work[k] += s
            if log is not None:
                log.append((t, EV_ARRIVAL, k, cid))
            if phase == 0 and st == k:
                queue[k].append(cid)
            else:
                orbit[k].append(cid)
                if explicit and not nu_inf[k]:
                    next_ret[k] = t + expo(4 * k + 1, len(orbit[k]) * nu[k])
            next_arr[k] = t + expo(4 * k, lam[k])
            continue

        if ev == 2:
            k = who
            ob = orbit[k]
            n = len(ob)
            idx = int(uni(4 * k + 1) * n)
            if idx >= n:
                idx = n - 1
            cid = ob[idx]
            if log is not None:
                log.append((t, EV_RETRIAL, k, cid))
            if phase == 0 and st == k:
                ob[idx] = ob[-1]
                ob.pop()
                queue[k].append(cid)
            n = len(ob)
            next_ret[k] = t + expo(4 * k + 1, n * nu[k]) if n > 0 else INF
            continue

        # ---- phase end
        if phase == 0:
            # glue end: gate the queue and start the visit
            if not explicit:
                next_ret[st] = INF
            phase = 1
            q = queue[st]
            if log is not None:
                log.append((t, EV_VISIT_START, st, -1))
            if measuring:
                nq = len(q)
                no = len(orbit[st])
                acc["Yq"][st] += nq
                acc["Yo"][st] += no
                acc["YqYo"][st] += nq * no
                acc["YqYq1"][st] += nq * (nq - 1)
                ys = acc["Y"][st]
                yy = acc["YqY"][st]
                for j in range(N):
                    nj = nq + no if j == st else len(orbit[j])
                    ys[j] += nj
                    yy[j] += nq * (nq - 1 if j == st else len(orbit[j]))
        elif phase == 1:
            # service completion
            s = c_svc[cur]
            if log is not None:
                log.append((t, EV_SERVICE_END, st, cur))
            cnt[st] -= 1
            work[st] -= s
            if measuring:
                acc["served_work"][st] += s
            free.append(cur)
            cur = -1
        else:
            # switchover end: on to the next station's glue period
            if log is not None:
                log.append((t, EV_SWITCH_END, st, -1))
            st = st + 1 if st + 1 < N else 0
            start_glue = True
            continue

        # in a visit: serve the next gated customer or leave
        q = queue[st]
        h = qhead[st]
        if h < len(q):
            cur = q[h]
            qhead[st] = h + 1
            if measuring:
                acc["W"][st] += t - c_arr[cur]
                acc["W_count"][st] += 1
            if log is not None:
                log.append((t, EV_SERVICE_START, st, cur))
            t_end = t + c_svc[cur]
        else:
            q.clear()
            qhead[st] = 0
            phase = 2
            if log is not None:
                log.append((t, EV_SWITCH_START, st, -1))
            if measuring:
                zs = acc["Z"][st]
                for j in range(N):
                    zs[j] += len(orbit[j])
                acc["F"][st] += work[st]
            t_end = t + draw(4 * st + 3, wk[st], wi[st], wf[st])

    acc["phase_time"][:] = phase_time
    acc["phase_area"][:, :] = area
    acc["t_end"][0] = t
    acc["cycles"][0] = horizon - warmup
    return acc

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled simulation kernel.

A statement-by-statement port of ``_kernel_py.run``: same uniforms, same order
of floating-point operations, hence bit-identical accumulators.
"""
import numpy as np

from libc.math cimport log1p, INFINITY
from libc.stdlib cimport malloc, realloc, free

from .layout import (
    EV_ARRIVAL, EV_GLUE_START, EV_RETRIAL, EV_SERVICE_END, EV_SERVICE_START,
    EV_SWITCH_END, EV_SWITCH_START, EV_VISIT_START, new_accumulators, padded,
)


cdef struct Vec:
    long long* data
    Py_ssize_t n
    Py_ssize_t cap


cdef int vec_init(Vec* v) except -1:
    v.cap = 16
    v.n = 0
    v.data = <long long*> malloc(v.cap * sizeof(long long))
    if v.data == NULL:
        raise MemoryError()
    return 0


cdef inline int vec_push(Vec* v, long long x) except -1:
    cdef long long* p
    if v.n == v.cap:
        p = <long long*> realloc(v.data, 2 * v.cap * sizeof(long long))
        if p == NULL:
            raise MemoryError()
        v.data = p
        v.cap *= 2
    v.data[v.n] = x
    v.n += 1
    return 0


cdef class _Uniforms:
    cdef double[:, ::1] buf
    cdef long long[::1] pos
    cdef Py_ssize_t block
    cdef object bank

    def __init__(self, bank):
        self.bank = bank
        self.buf = bank.buf
        self.pos = bank.pos
        self.block = bank.buf.shape[1]

    cdef inline double uni(self, Py_ssize_t k) except? -1.0:
        cdef long long j = self.pos[k]
        if j == self.block:
            self.bank.refill(k)
            j = 0
        self.pos[k] = j + 1
        return self.buf[k, j]

    cdef inline double expo(self, Py_ssize_t k, double rate) except? -1.0:
        return -log1p(-self.uni(k)) / rate

    cdef double draw(self, Py_ssize_t k, long kind, long n_int, double[:, ::1] par, Py_ssize_t row) except? -1.0:
        cdef double x, u, c
        cdef long j, ph
        if kind == 0:
            return par[row, 0]
        if kind == 1:
            return -log1p(-self.uni(k)) / par[row, 0]
        if kind == 2:
            x = 0.0
            for j in range(n_int):
                x += -log1p(-self.uni(k)) / par[row, 0]
            return x
        u = self.uni(k)
        c = 0.0
        ph = n_int - 1
        for j in range(n_int):
            c += par[row, j]
            if u < c:
                ph = j
                break
        return -log1p(-self.uni(k)) / par[row, n_int + ph]


def run(dict p, bank, long long warmup, long long horizon, bint explicit, log):
    cdef Py_ssize_t N = p["n"]
    cdef _Uniforms rng = _Uniforms(bank)
    cdef double[::1] lam = np.asarray(p["lam"], dtype=np.float64)
    cdef double[::1] glue = np.asarray(p["glue"], dtype=np.float64)
    cdef double[::1] nu = np.asarray(p["nu"], dtype=np.float64)
    cdef long[::1] nu_inf = np.asarray(p["nu_inf"], dtype=np.int_)
    cdef long[::1] sk = np.asarray(p["svc_kind"], dtype=np.int_)
    cdef long[::1] si = np.asarray(p["svc_int"], dtype=np.int_)
    cdef double[:, ::1] sf = padded(p["svc_par"], p["width"])
    cdef long[::1] wk = np.asarray(p["sw_kind"], dtype=np.int_)
    cdef long[::1] wi = np.asarray(p["sw_int"], dtype=np.int_)
    cdef double[:, ::1] wf = padded(p["sw_par"], p["width"])
    cdef bint logging = log is not None

    acc = new_accumulators(N)
    cdef double[::1] phase_time = acc["phase_time"]
    cdef double[:, ::1] area = acc["phase_area"]
    cdef double[:, ::1] aX = acc["X"]
    cdef double[:, :, ::1] aX2 = acc["X2"]
    cdef double[:, ::1] aY = acc["Y"]
    cdef double[::1] aYq = acc["Yq"]
    cdef double[::1] aYo = acc["Yo"]
    cdef double[::1] aYqYo = acc["YqYo"]
    cdef double[::1] aYqYq1 = acc["YqYq1"]
    cdef double[:, ::1] aYqY = acc["YqY"]
    cdef double[:, ::1] aZ = acc["Z"]
    cdef double[::1] aF = acc["F"]
    cdef double[::1] aW = acc["W"]
    cdef double[::1] aWc = acc["W_count"]
    cdef double[::1] aserved = acc["served_work"]
    cdef double[::1] acyc = acc["cycles_at"]
    cdef double[::1] aimm = acc["immigrants"]
    cdef double[::1] at_start = acc["t_start"]

    # customers
    cdef Py_ssize_t ccap = 1024, cn = 0
    cdef double* c_arr = <double*> malloc(ccap * sizeof(double))
    cdef double* c_svc = <double*> malloc(ccap * sizeof(double))
    cdef long long* c_imm = <long long*> malloc(ccap * sizeof(long long))
    cdef Vec freelist
    cdef Vec* queue = <Vec*> malloc(N * sizeof(Vec))
    cdef Vec* orbit = <Vec*> malloc(N * sizeof(Vec))
    cdef Py_ssize_t* qhead = <Py_ssize_t*> malloc(N * sizeof(Py_ssize_t))
    cdef long long* cnt = <long long*> malloc(N * sizeof(long long))
    cdef double* work = <double*> malloc(N * sizeof(double))
    cdef double* next_arr = <double*> malloc(N * sizeof(double))
    cdef double* next_ret = <double*> malloc(N * sizeof(double))
    if (c_arr == NULL or c_svc == NULL or c_imm == NULL or queue == NULL or orbit == NULL
            or qhead == NULL or cnt == NULL or work == NULL or next_arr == NULL or next_ret == NULL):
        raise MemoryError()

    cdef Py_ssize_t k, j, h, idx, ph, st = 0, who
    cdef long long cid, cur = -1, n, nq, no, nj, tag, n_imm
    cdef long long cycle = 0
    cdef int phase = 0, ev
    cdef double t = 0.0, t_end = 0.0, tmin, dt, s
    cdef bint measuring = warmup == 0
    cdef bint start_glue = True, first = True
    cdef double* grow_d
    cdef long long* grow_l
    cdef Vec* ob
    cdef Vec* q

    freelist.data = NULL
    for k in range(N):
        queue[k].data = NULL
        orbit[k].data = NULL

    try:
        vec_init(&freelist)
        for k in range(N):
            vec_init(&queue[k])
            vec_init(&orbit[k])
            qhead[k] = 0
            cnt[k] = 0
            work[k] = 0.0
        for k in range(N):
            next_arr[k] = rng.expo(4 * k, lam[k])
        for k in range(N):
            next_ret[k] = INFINITY

        while True:
            if start_glue:
                start_glue = False
                if st == 0 and not first:
                    cycle += 1
                    if cycle - 1 >= warmup:
                        tag = cycle - 1
                        n_imm = 0
                        for k in range(N):
                            for j in range(orbit[k].n):
                                if c_imm[orbit[k].data[j]] == tag:
                                    n_imm += 1
                        aimm[0] += n_imm
                    if cycle == horizon:
                        break
                    measuring = cycle >= warmup
                    if measuring and cycle == warmup:
                        at_start[0] = t
                if logging:
                    log.append((t, EV_GLUE_START, st, -1))
                if measuring:
                    for j in range(N):
                        nj = orbit[j].n
                        aX[st, j] += nj
                        for k in range(N):
                            aX2[st, j, k] += nj * orbit[k].n
                    acyc[st] += 1
                phase = 0
                if nu_inf[st]:
                    ob = &orbit[st]
                    for j in range(ob.n):
                        cid = ob.data[j]
                        if logging:
                            log.append((t, EV_RETRIAL, st, cid))
                        vec_push(&queue[st], cid)
                    ob.n = 0
                elif not explicit:
                    n = orbit[st].n
                    next_ret[st] = t + rng.expo(4 * st + 1, n * nu[st]) if n > 0 else INFINITY
                t_end = t + glue[st]
                first = False

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
                for k in range(N):
                    area[ph, k] += dt * cnt[k]
            t = tmin

            if ev == 1:
                k = who
                if freelist.n > 0:
                    freelist.n -= 1
                    cid = freelist.data[freelist.n]
                    c_arr[cid] = t
                else:
                    if cn == ccap:
                        ccap *= 2
                        grow_d = <double*> realloc(c_arr, ccap * sizeof(double))
                        if grow_d == NULL:
                            raise MemoryError()
                        c_arr = grow_d
                        grow_d = <double*> realloc(c_svc, ccap * sizeof(double))
                        if grow_d == NULL:
                            raise MemoryError()
                        c_svc = grow_d
                        grow_l = <long long*> realloc(c_imm, ccap * sizeof(long long))
                        if grow_l == NULL:
                            raise MemoryError()
                        c_imm = grow_l
                    cid = cn
                    cn += 1
                    c_arr[cid] = t
                    c_svc[cid] = 0.0
                    c_imm[cid] = 0
                s = rng.draw(4 * k + 2, sk[k], si[k], sf, k)
                c_svc[cid] = s
                if phase == 1:
                    c_imm[cid] = cycle if c_imm[cur] == cycle else -1
                else:
                    c_imm[cid] = cycle
                cnt[k] += 1
                work[k] += s
                if logging:
                    log.append((t, EV_ARRIVAL, k, cid))
                if phase == 0 and st == k:
                    vec_push(&queue[k], cid)
                else:
                    vec_push(&orbit[k], cid)
                    if explicit and not nu_inf[k]:
                        next_ret[k] = t + rng.expo(4 * k + 1, orbit[k].n * nu[k])
                next_arr[k] = t + rng.expo(4 * k, lam[k])
                continue

            if ev == 2:
                k = who
                ob = &orbit[k]
                n = ob.n
                idx = <Py_ssize_t> (rng.uni(4 * k + 1) * n)
                if idx >= n:
                    idx = n - 1
                cid = ob.data[idx]
                if logging:
                    log.append((t, EV_RETRIAL, k, cid))
                if phase == 0 and st == k:
                    ob.data[idx] = ob.data[ob.n - 1]
                    ob.n -= 1
                    vec_push(&queue[k], cid)
                n = ob.n
                next_ret[k] = t + rng.expo(4 * k + 1, n * nu[k]) if n > 0 else INFINITY
                continue

            if phase == 0:
                if not explicit:
                    next_ret[st] = INFINITY
                phase = 1
                if logging:
                    log.append((t, EV_VISIT_START, st, -1))
                if measuring:
                    nq = queue[st].n
                    no = orbit[st].n
                    aYq[st] += nq
                    aYo[st] += no
                    aYqYo[st] += nq * no
                    aYqYq1[st] += nq * (nq - 1)
                    for j in range(N):
                        nj = nq + no if j == st else orbit[j].n
                        aY[st, j] += nj
                        aYqY[st, j] += nq * (nq - 1 if j == st else orbit[j].n)
            elif phase == 1:
                s = c_svc[cur]
                if logging:
                    log.append((t, EV_SERVICE_END, st, cur))
                cnt[st] -= 1
                work[st] -= s
                if measuring:
                    aserved[st] += s
                vec_push(&freelist, cur)
                cur = -1
            else:
                if logging:
                    log.append((t, EV_SWITCH_END, st, -1))
                st = st + 1 if st + 1 < N else 0
                start_glue = True
                continue

            q = &queue[st]
            h = qhead[st]
            if h < q.n:
                cur = q.data[h]
                qhead[st] = h + 1
                if measuring:
                    aW[st] += t - c_arr[cur]
                    aWc[st] += 1
                if logging:
                    log.append((t, EV_SERVICE_START, st, cur))
                t_end = t + c_svc[cur]
            else:
                q.n = 0
                qhead[st] = 0
                phase = 2
                if logging:
                    log.append((t, EV_SWITCH_START, st, -1))
                if measuring:
                    for j in range(N):
                        aZ[st, j] += orbit[j].n
                    aF[st] += work[st]
                t_end = t + rng.draw(4 * st + 3, wk[st], wi[st], wf, st)
    finally:
        free(c_arr)
        free(c_svc)
        free(c_imm)
        free(freelist.data)
        for k in range(N):
            free(queue[k].data)
            free(orbit[k].data)
        free(queue)
        free(orbit)
        free(qhead)
        free(cnt)
        free(work)
        free(next_arr)
        free(next_ret)

    acc["t_end"][0] = t
    acc["cycles"][0] = horizon - warmup
    return acc

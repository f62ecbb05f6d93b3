"""Cyclic polling with retrials and glue periods.

State is tracked at three epochs per station i: the start of glue period i
(vector X^(i) of orbit sizes), the start of visit i (Y^(i), where station i's
customers are split into those glued to the queue, Yq, and those still in
orbit, Yo) and the start of the switchover out of i (Z^(i)).  Each step between
epochs is a branching step with independent immigration:

* glue i:   every type-i orbiter joins the queue w.p. p_i = 1 - exp(-nu_i G_i),
            plus Poisson(lambda_j G_i) arrivals of every type;
* visit i:  every glued customer is replaced by the arrivals during its service;
* switch i: Poisson(lambda_j S_i) arrivals of every type.

First and second factorial moments therefore propagate through affine maps, and
the steady state is the fixed point of the composed cycle map, found by a direct
linear solve.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ._numerics import log_divided_difference
from .distributions import lst, lst_complement, moments
from .errors import DomainError, NumericalError
from .models import (
    PollingModel,
    Station,
    orbit_return_probability,
    orbit_stay_probability,
    require_stable,
)

DEFAULT_TOL = 1e-12
MAX_ITER = 10 ** 6
POWER_TOL = 1e-12
POWER_MAX_ITER = 10 ** 5


# --------------------------------------------------------------------------
# parameters

@dataclass(frozen=True)
class _Params:
    lam: np.ndarray
    EB: np.ndarray
    EB2: np.ndarray
    ES: np.ndarray
    ES2: np.ndarray
    VS: np.ndarray
    G: np.ndarray
    p: np.ndarray  # return probability during the glue period
    e: np.ndarray  # stay-in-orbit probability

    @property
    def n(self) -> int:
        return len(self.lam)

    @property
    def rho(self) -> np.ndarray:
        return self.lam * self.EB


def _return_prob(st: Station) -> float:
    if st.glue == 0.0 and not math.isinf(st.retrial_rate):
        raise DomainError("glue period 0 with a finite retrial rate: the orbit never drains")
    return orbit_return_probability(st.retrial_rate, st.glue)


def _params(pm: PollingModel) -> _Params:
    b = [moments(s.service) for s in pm.stations]
    s = [moments(s.switchover) for s in pm.stations]
    return _Params(
        lam=np.array([st.lam for st in pm.stations], dtype=float),
        EB=np.array([x.m1 for x in b]),
        EB2=np.array([x.m2 for x in b]),
        ES=np.array([x.m1 for x in s]),
        ES2=np.array([x.m2 for x in s]),
        VS=np.array([x.variance for x in s]),
        G=np.array([st.glue for st in pm.stations], dtype=float),
        p=np.array([_return_prob(st) for st in pm.stations]),
        e=np.array([orbit_stay_probability(st.retrial_rate, st.glue) for st in pm.stations]),
    )


def mean_cycle_time(pm: PollingModel) -> float:
    """E[C] = sum_i (E[S_i] + G_i) / (1 - rho)."""
    require_stable(pm.rho_total)
    P = _params(pm)
    total = float(np.sum(P.ES + P.G))
    if total <= 0:
        raise DomainError("all switchovers and glue periods are zero: the cycle is degenerate")
    return total / (1.0 - pm.rho_total)


# --------------------------------------------------------------------------
# branching structure and stability

@dataclass(frozen=True)
class BranchingStructure:
    M: np.ndarray
    F: np.ndarray
    H: np.ndarray
    spectral_radius_M: float


def _offspring_matrix(P: _Params) -> np.ndarray:
    """f_ij: mean type-j replacements of a type-i orbiter over glue + visit i."""
    F = np.outer(P.p * P.EB, P.lam)
    F[np.diag_indices(P.n)] = P.e + P.p * P.rho
    return F


def _mean_matrix(F: np.ndarray) -> np.ndarray:
    n = F.shape[0]
    M = np.zeros_like(F)
    for i in range(n - 1, -1, -1):
        M[i, : i + 1] = F[i, : i + 1]
        if i + 1 < n:
            M[i] += F[i, i + 1:] @ M[i + 1:]
    return M


def spectral_radius(M: np.ndarray, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER) -> float:
    """Dominant eigenvalue of a nonnegative matrix by power iteration.

    Falls back to norm ratios of repeated squares when the iteration does not
    settle (reducible or periodic matrices).
    """
    v = np.ones(M.shape[0])
    est = 0.0
    for _ in range(max_iter):
        w = M @ v
        nw = float(np.max(np.abs(w)))
        if nw == 0.0:
            return 0.0
        w /= nw
        if abs(nw - est) <= tol * nw and np.max(np.abs(w - v)) <= math.sqrt(tol):
            return nw
        v, est = w, nw
    return _radius_by_squaring(M)


def _radius_by_squaring(M: np.ndarray, squarings: int = 20) -> float:
    A = np.array(M, dtype=float)
    log_scale = 0.0
    for k in range(squarings):
        nrm = float(np.max(np.sum(np.abs(A), axis=1)))
        if nrm == 0.0:
            return 0.0
        A = A / nrm
        log_scale = 2.0 * (log_scale + math.log(nrm))
        A = A @ A
    nrm = float(np.max(np.sum(np.abs(A), axis=1)))
    if nrm == 0.0:
        return 0.0
    return math.exp((log_scale + math.log(nrm)) / 2 ** squarings)


def branching_structure(pm: PollingModel) -> BranchingStructure:
    P = _params(pm)
    F = _offspring_matrix(P)
    M = _mean_matrix(F)
    return BranchingStructure(M=M, F=F, H=F.copy(), spectral_radius_M=spectral_radius(M))


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    rho_total: float
    spectral_radius_M: float


def check_stability(pm: PollingModel) -> StabilityReport:
    """Stable iff sum rho_i < 1; cross-checked against the branching mean matrix."""
    rho_total = pm.rho_total
    sr = branching_structure(pm).spectral_radius_M
    stable = rho_total < 1.0
    if stable != (sr < 1.0) and abs(rho_total - 1.0) > 1e-9 and abs(sr - 1.0) > 1e-9:
        raise NumericalError(
            f"load criterion (sum rho = {rho_total:.12g}) disagrees with spectral radius {sr:.12g}")
    return StabilityReport(stable, rho_total, sr)


# --------------------------------------------------------------------------
# moment propagation

def _glue_map(P: _Params, i: int):
    """X^(i) (n) -> Y^(i) (n+1): slot i holds Yq, slot n holds Yo."""
    n = P.n
    T = np.zeros((n + 1, n))
    for j in range(n):
        T[j, j] = 1.0
    T[i, i] = P.p[i]
    T[n, i] = P.e[i]
    a = np.append(P.lam * P.G[i], 0.0)
    return T, a, np.outer(a, a)


def _visit_map(P: _Params, i: int):
    """Y^(i) (n+1) -> Z^(i) (n): glued customers replaced by service-time arrivals."""
    n = P.n
    T = np.zeros((n, n + 1))
    for j in range(n):
        T[j, j] = 1.0
    T[:, i] = P.lam * P.EB[i]
    T[i, n] = 1.0
    C2 = P.EB2[i] * np.outer(P.lam, P.lam)
    return T, C2


def _switch_map(P: _Params, i: int):
    a = P.lam * P.ES[i]
    return a, P.ES2[i] * np.outer(P.lam, P.lam)


def _propagate(P: _Params, m0: np.ndarray, Q0: np.ndarray | None, record: bool = False):
    """Run one cycle from X^(0); returns (m, Q) at the next X^(0), plus epochs if ``record``."""
    m, Q = m0, Q0
    epochs = []
    for i in range(P.n):
        x = (m, Q)
        T, a, A2 = _glue_map(P, i)
        tm = T @ m
        m = tm + a
        if Q is not None:
            Q = T @ Q @ T.T + np.outer(tm, a) + np.outer(a, tm) + A2
        y = (m, Q)
        T, C2 = _visit_map(P, i)
        mq = m[i]
        m = T @ m
        if Q is not None:
            Q = T @ Q @ T.T + mq * C2
        z = (m, Q)
        a, A2 = _switch_map(P, i)
        if Q is not None:
            Q = Q + np.outer(m, a) + np.outer(a, m) + A2
        m = m + a
        if record:
            epochs.append((x, y, z))
    return m, Q, epochs


def _solve_first(P: _Params) -> np.ndarray:
    n = P.n
    b, _, _ = _propagate(P, np.zeros(n), None)
    A = np.empty((n, n))
    for k in range(n):
        unit = np.zeros(n)
        unit[k] = 1.0
        A[:, k] = _propagate(P, unit, None)[0] - b
    return np.linalg.solve(np.eye(n) - A, b), A


def _solve_second(P: _Params, m: np.ndarray, A: np.ndarray) -> np.ndarray:
    n = P.n
    _, c, _ = _propagate(P, m, np.zeros((n, n)))
    L = np.eye(n * n) - np.kron(A, A)
    try:
        q = np.linalg.solve(L, c.reshape(-1))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - excluded by stability
        raise NumericalError(f"second-moment cycle system is singular: {exc}") from None
    Q = q.reshape(n, n)
    return (Q + Q.T) / 2.0


@dataclass(frozen=True)
class EmbeddedMomentField:
    """Moments at glue starts (X), visit starts (Y) and switchover starts (Z).

    Row i of ``EX``, ``EY`` and ``EZ`` refers to the epochs of station i; ``EY[i][i]``
    is Yq_i + Yo_i.  ``second[i]`` is the joint factorial-moment matrix of X^(i)
    (off-diagonal E[X_j X_k], diagonal E[X_j (X_j - 1)]).  ``EYqYj[i][j]`` is
    E[Yq_i Y_j] for j != i (the diagonal holds E[Yq_i (Yq_i - 1)]).
    """
    EX: np.ndarray
    EY: np.ndarray
    EZ: np.ndarray
    EYq: np.ndarray
    EYo: np.ndarray
    EC: float
    second: np.ndarray | None = None
    second_Y: np.ndarray | None = None
    second_Z: np.ndarray | None = None
    EYqYo: np.ndarray | None = None
    EYqYj: np.ndarray | None = None
    EYq2: np.ndarray | None = None


def _field(pm: PollingModel, with_second: bool) -> EmbeddedMomentField:
    require_stable(pm.rho_total)
    P = _params(pm)
    n = P.n
    EC = mean_cycle_time(pm)
    m0, A = _solve_first(P)
    Q0 = _solve_second(P, m0, A) if with_second else None
    _, _, epochs = _propagate(P, m0, Q0, record=True)

    EX = np.array([x[0] for x, _, _ in epochs])
    EZ = np.array([z[0] for _, _, z in epochs])
    Yext = np.array([y[0] for _, y, _ in epochs])
    EYq = np.array([Yext[i, i] for i in range(n)])
    EYo = np.array([Yext[i, n] for i in range(n)])
    EY = Yext[:, :n].copy()
    for i in range(n):
        EY[i, i] = EYq[i] + EYo[i]

    # flow balance: glued customers per visit equal arrivals per cycle; orbit balance
    for i in range(n):
        want_q = P.lam[i] * EC
        want_x = P.lam[i] * (EC - P.G[i]) / P.p[i]
        if not (math.isclose(EYq[i], want_q, rel_tol=1e-9, abs_tol=1e-12)
                and math.isclose(EX[i, i], want_x, rel_tol=1e-9, abs_tol=1e-12)):
            raise NumericalError(f"moment fixed point violates flow balance at station {i + 1}")

    if not with_second:
        return EmbeddedMomentField(EX, EY, EZ, EYq, EYo, EC)

    second = np.array([x[1] for x, _, _ in epochs])
    second_Y = np.array([y[1] for _, y, _ in epochs])
    second_Z = np.array([z[1] for _, _, z in epochs])
    EYqYo = np.array([second_Y[i, i, n] for i in range(n)])
    EYq2 = np.array([second_Y[i, i, i] for i in range(n)])
    EYqYj = np.array([second_Y[i, i, :n] for i in range(n)])
    return EmbeddedMomentField(EX, EY, EZ, EYq, EYo, EC, second, second_Y, second_Z,
                               EYqYo, EYqYj, EYq2)


def embedded_first_moments(pm: PollingModel) -> EmbeddedMomentField:
    return _field(pm, with_second=False)


def embedded_second_moments(pm: PollingModel) -> EmbeddedMomentField:
    return _field(pm, with_second=True)


embedded_moments = embedded_second_moments


# --------------------------------------------------------------------------
# arbitrary-time means

@dataclass(frozen=True)
class PollingMeans:
    R_sw: np.ndarray
    R_gl: np.ndarray
    R_vi: np.ndarray
    R_i: np.ndarray
    R_total: float
    R_i_mixture: np.ndarray
    time_fractions: dict


def _period_class_means(P: _Params, f: EmbeddedMomentField):
    """Mean number of each type during switchover / glue / visit periods of every station.

    Returns three n x n arrays indexed [station, type].
    """
    n = P.n
    lam = P.lam
    sw = np.empty((n, n))
    gl = np.empty((n, n))
    vi = np.empty((n, n))
    for i in range(n):
        resid_s = P.ES2[i] / (2 * P.ES[i]) if P.ES[i] > 0 else 0.0
        sw[i] = f.EZ[i] + lam * resid_s
        gl[i] = f.EX[i] + lam * P.G[i] / 2
        resid_b = P.EB2[i] / (2 * P.EB[i])
        eyq = f.EYq[i]
        # other types: size-biased count at visit start + arrivals during past services
        vi[i] = f.EYqYj[i] / eyq + lam * resid_b + lam * P.EB[i] * f.EYq2[i] / (2 * eyq)
        vi[i, i] = (1 + lam[i] * resid_b + f.EYqYo[i] / eyq
                    + (1 + P.rho[i]) * f.EYq2[i] / (2 * eyq))
    return sw, gl, vi


def polling_means(pm: PollingModel) -> PollingMeans:
    """Period means per station, per-class means and the overall mean number in system.

    The total is computed twice -- as the time-weighted mixture of the period means
    and as the sum of the per-class closed forms -- and the two must agree to 1e-9.
    """
    f = embedded_second_moments(pm)
    P = _params(pm)
    n = P.n
    rho = pm.rho_total
    sw, gl, vi = _period_class_means(P, f)
    R_sw, R_gl, R_vi = sw.sum(axis=1), gl.sum(axis=1), vi.sum(axis=1)

    idle = float(np.sum(P.G + P.ES))
    w_vi = P.rho
    w_gl = (1 - rho) * P.G / idle
    w_sw = (1 - rho) * P.ES / idle
    R_mix = float(np.sum(w_vi * R_vi + w_gl * R_gl + w_sw * R_sw))
    R_i_mix = w_vi @ vi + w_gl @ gl + w_sw @ sw

    R_i = P.rho + f.EYqYo / f.EYq + (1 + P.rho) * f.EYq2 / (2 * f.EYq)
    R_total = float(np.sum(R_i))
    if abs(R_mix - R_total) > 1e-9 * max(1.0, abs(R_total)):
        raise NumericalError(f"period mixture {R_mix!r} disagrees with per-class sum {R_total!r}")
    fractions = {"visit": w_vi, "glue": w_gl, "switchover": w_sw}
    return PollingMeans(R_sw, R_gl, R_vi, R_i, R_total, R_i_mix, fractions)


def symmetric_ER(lambda_total: float, service, switchover, glue: float, nu: float, n: int) -> float:
    """Mean number in system when all n stations are identical (total arrival rate given)."""
    if n < 1:
        raise DomainError("need at least one station")
    b, s = moments(service), moments(switchover)
    lam = lambda_total
    r = lam * b.m1
    require_stable(r)
    c0 = glue + s.m1
    out = (r + lam ** 2 * b.m2 / (2 * (1 - r)) + lam * n * c0 / 2 + lam * s.variance / (2 * c0)
           + (n + 1) * lam * r * c0 / (2 * (1 - r)))
    e = orbit_stay_probability(nu, glue)
    if e > 0.0:
        if glue == 0.0:
            raise DomainError("glue period 0 with a finite retrial rate: the orbit never drains")
        p = orbit_return_probability(nu, glue)
        out += lam * e / p * (n * c0 / (1 - r) - glue)
    return out


# --------------------------------------------------------------------------
# pseudo conservation law

@dataclass(frozen=True)
class PCLReport:
    lhs: float
    rhs: float
    EF: np.ndarray
    EW: np.ndarray
    residual: float


def work_at_switch_start(pm: PollingModel) -> np.ndarray:
    """E[F_i]: work left at station i when the server leaves it."""
    P = _params(pm)
    EC = mean_cycle_time(pm)
    return P.rho ** 2 * EC + P.rho * (P.e / P.p) * (EC - P.G)


def pcl_verify(pm: PollingModel, means: PollingMeans | None = None) -> PCLReport:
    """Compare sum_i rho_i E[W_i] from the exact means with its closed form.

    E[W_i] is the mean time until start of service; by Little's law on the
    sojourn time it equals E[R_i] / lambda_i - E[B_i].
    """
    means = polling_means(pm) if means is None else means
    P = _params(pm)
    rho = pm.rho_total
    EW = means.R_i / P.lam - P.EB
    lhs = float(np.sum(P.rho * EW))

    idle = float(np.sum(P.ES + P.G))
    idle2 = float(np.sum(P.VS)) + idle ** 2
    EC = idle / (1 - rho)
    rhs = (rho * (float(np.sum(P.lam * P.EB2)) / (2 * (1 - rho)) + idle2 / (2 * idle))
           + idle / (2 * (1 - rho)) * (rho ** 2 + float(np.sum(P.rho ** 2)))
           + float(np.sum(P.rho * (P.e / P.p) * (EC - P.G))))
    EF = work_at_switch_start(pm)
    return PCLReport(lhs, rhs, EF, EW, lhs - rhs)


# --------------------------------------------------------------------------
# immigration per generation

def _service_descendants(P: _Params, M: np.ndarray) -> np.ndarray:
    """b_ij: mean type-j individuals of the next generation per type-i customer served in visit i."""
    n = P.n
    Bm = np.zeros((n, n))
    for i in range(n):
        direct = np.zeros(n)
        direct[: i + 1] = P.lam[: i + 1]
        via_later = P.lam[i + 1:] @ M[i + 1:] if i + 1 < n else np.zeros(n)
        Bm[i] = P.EB[i] * (direct + via_later)
    return Bm


def immigration_mean(pm: PollingModel) -> float:
    """Expected number of immigrants per generation of the glue-start branching process.

    A type-i arrival that is glued in visit i contributes its service descendants
    sum_j b_ij; one that enters the orbit before glue period i contributes them
    with probability p_i and itself otherwise; later arrivals contribute one.
    """
    P = _params(pm)
    M = branching_structure(pm).M
    Bm = _service_descendants(P, M)
    n = P.n
    total = 0.0
    for i in range(n):
        before = float(np.sum(P.G[:i] + P.ES[:i]))
        after = float(np.sum(P.ES[i:])) + float(np.sum(P.G[i + 1:]))
        desc = float(np.sum(Bm[i]))
        total += P.lam[i] * ((before * P.p[i] + P.G[i]) * desc + before * P.e[i] + after)
    return total


# --------------------------------------------------------------------------
# generating functions (evaluated in u = 1 - z)

def _check_vec(z, n: int) -> np.ndarray:
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.shape != (n,):
        raise DomainError(f"expected a vector of length {n}, got shape {z.shape}")
    if np.any(z < 0) or np.any(z > 1) or np.any(np.isnan(z)):
        raise DomainError("generating-function arguments must lie in [0, 1]")
    return z


def _h_and_logK(pm: PollingModel, P: _Params, u: np.ndarray):
    """One step of the cycle recursion: returns (1 - h(z), log K(z)) for u = 1 - z."""
    n = P.n
    uh = np.empty(n)  # 1 - h_j
    logk = 0.0
    for i in range(n - 1, -1, -1):
        w = np.concatenate((u[: i + 1], uh[i + 1:]))
        s = float(np.dot(P.lam, w))
        one_minus_beta = lst_complement(pm.stations[i].service, s)
        uh[i] = P.p[i] * one_minus_beta + P.e[i] * u[i]
        D = float(np.dot(P.lam[:i], u[:i])) + P.lam[i] * one_minus_beta + float(np.dot(P.lam[i + 1:], uh[i + 1:]))
        logk += math.log1p(-lst_complement(pm.stations[i].switchover, s)) - P.G[i] * D
    return uh, logk


def _log_gf_first(pm: PollingModel, u: np.ndarray, tol: float, max_iter: int, contraction: float) -> float:
    P = _params(pm)
    total = 0.0
    for _ in range(max_iter):
        uh, lk = _h_and_logK(pm, P, u)
        total += lk
        # log K <= 0 shrinks geometrically; stop once the tail is negligible relative
        # to the sum, which keeps precision when every factor is close to one
        if abs(lk) <= tol * contraction * abs(total):
            return total
        u = uh
    raise NumericalError(f"infinite product did not converge within {max_iter} factors")


def _log_X_u(pm: PollingModel, u: np.ndarray, station: int, tol: float, max_iter: int = MAX_ITER) -> float:
    """log of the glue-start PGF of ``station`` at z = 1 - u."""
    rm = pm.rotated(station)
    sr = branching_structure(rm).spectral_radius_M
    return _log_gf_first(rm, np.roll(u, -station), tol, max_iter, max(1.0 - sr, 1e-300))


def gf_polling_embedded(pm: PollingModel, z, tol: float = DEFAULT_TOL, station: int = 0,
                        max_iter: int = MAX_ITER) -> float:
    """E[prod_j z_j^{X_j^(station)}] at the start of the given station's glue period."""
    require_stable(pm.rho_total)
    if tol <= 0:
        raise DomainError("tol must be positive")
    n = pm.n
    z = _check_vec(z, n)
    if not 0 <= station < n:
        raise DomainError(f"station index {station} out of range")
    return math.exp(_log_X_u(pm, 1.0 - z, station, tol, max_iter))


def gf_polling_K(pm: PollingModel, z) -> float:
    """Immigration generating function of the glue-start process of station 1."""
    z = _check_vec(z, pm.n)
    return math.exp(_h_and_logK(pm, _params(pm), 1.0 - z)[1])


def gf_polling_h(pm: PollingModel, z) -> np.ndarray:
    z = _check_vec(z, pm.n)
    return 1.0 - _h_and_logK(pm, _params(pm), 1.0 - z)[0]


def _log_visit_start_u(pm: PollingModel, P: _Params, u: np.ndarray, uq: float, uo: float, i: int,
                       tol: float) -> float:
    arr = float(np.dot(P.lam, u)) - P.lam[i] * u[i] + P.lam[i] * uq
    w = u.copy()
    w[i] = P.p[i] * uq + P.e[i] * uo
    return -arr * P.G[i] + _log_X_u(pm, w, i, tol)


def gf_polling_visit_start(pm: PollingModel, z, zq: float, zo: float, station: int,
                           tol: float = DEFAULT_TOL) -> float:
    """E[prod_{j != i} z_j^{Y_j} zq^{Yq_i} zo^{Yo_i}] at the start of visit ``station``."""
    require_stable(pm.rho_total)
    z = _check_vec(z, pm.n)
    return math.exp(_log_visit_start_u(pm, _params(pm), 1.0 - z, 1.0 - zq, 1.0 - zo, station, tol))


def gf_polling_switch_start(pm: PollingModel, z, station: int, tol: float = DEFAULT_TOL) -> float:
    P = _params(pm)
    z = _check_vec(z, pm.n)
    b = lst(pm.stations[station].service, float(np.dot(P.lam, 1.0 - z)))
    return gf_polling_visit_start(pm, z, b, z[station], station, tol)


def _elapsed(d, s: float, mean_len: float) -> float:
    if s == 0.0 or mean_len == 0.0:
        return 1.0
    return lst_complement(d, s) / (s * mean_len)


def _gf_switch(pm, P, zo, i, tol):
    s = float(np.dot(P.lam, 1.0 - zo))
    return gf_polling_switch_start(pm, zo, i, tol) * _elapsed(pm.stations[i].switchover, s, P.ES[i])


def _gf_glue(pm, P, zq, zo, i, tol):
    G, nu = P.G[i], pm.stations[i].retrial_rate
    other = float(np.dot(P.lam, 1.0 - zo)) - P.lam[i] * (1.0 - zo[i])
    rate = other + P.lam[i] * (1.0 - zq[i])

    def inner(t):
        w = zo.copy()
        if math.isinf(nu):
            w[i] = zq[i]
        else:
            e = math.exp(-nu * t)
            w[i] = (1.0 - e) * zq[i] + e * zo[i]
        return math.exp(-rate * t) * gf_polling_embedded(pm, w, tol, station=i)

    if G == 0.0:
        return inner(0.0)
    val, err = integrate.quad(inner, 0.0, G, epsabs=1e-10, epsrel=1e-10, limit=200)
    if not err <= 1e-8:
        raise NumericalError(f"glue-period quadrature error estimate {err:g} too large")
    return val / G


def _gf_visit(pm, P, zq, zo, i, tol, EYq):
    uo = 1.0 - zo
    s = float(np.dot(P.lam, uo))
    ub = lst_complement(pm.stations[i].service, s)
    quotient = log_divided_difference(
        lambda ua: _log_visit_start_u(pm, P, uo, ua, uo[i], i, tol), 1.0 - zq[i], ub, EYq)
    return zq[i] * quotient / EYq * _elapsed(pm.stations[i].service, s, P.EB[i])


def gf_polling_arbitrary(pm: PollingModel, zq, zo, period: str = "mixture", station: int | None = None,
                         tol: float = DEFAULT_TOL) -> float:
    """Joint PGF of all queue and orbit sizes at an arbitrary time.

    ``period`` is ``switchover``, ``glue`` or ``visit`` (with ``station`` giving
    which one) or ``mixture`` for an arbitrary time in the cycle.  Customers
    outside the glued queue of the station being visited are all in orbit, so
    ``zq[j]`` only matters for that station.
    """
    require_stable(pm.rho_total)
    n = pm.n
    zq, zo = _check_vec(zq, n), _check_vec(zo, n)
    if np.all(zq == 1.0) and np.all(zo == 1.0):
        return 1.0
    P = _params(pm)
    if period == "mixture":
        EYq = P.lam * mean_cycle_time(pm)
        idle = float(np.sum(P.G + P.ES))
        rho = pm.rho_total
        out = 0.0
        for i in range(n):
            out += P.rho[i] * _gf_visit(pm, P, zq, zo, i, tol, EYq[i])
            if P.G[i] > 0:
                out += (1 - rho) * P.G[i] / idle * _gf_glue(pm, P, zq, zo, i, tol)
            if P.ES[i] > 0:
                out += (1 - rho) * P.ES[i] / idle * _gf_switch(pm, P, zo, i, tol)
        return out
    if station is None or not 0 <= station < n:
        raise DomainError(f"period {period!r} needs a station index in [0, {n})")
    if period == "switchover":
        return _gf_switch(pm, P, zo, station, tol)
    if period == "glue":
        return _gf_glue(pm, P, zq, zo, station, tol)
    if period == "visit":
        return _gf_visit(pm, P, zq, zo, station, tol, P.lam[station] * mean_cycle_time(pm))
    raise DomainError(f"unknown period {period!r}")

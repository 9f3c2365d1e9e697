"""Partial-observation fault detection with a dead-beat observer.

Only the first ``p`` agents are measured, ``y(t) = [I_p 0] x(t)``.  The
observer ``x̂(t+1) = A x̂(t) - G (y(t) - [I_p 0] x̂(t))`` has a nilpotent error
matrix ``A_L = A + G [I_p 0]``, so its residual ``r(t) = [I_p 0] x̂(t) - y(t)``
is exactly zero ``τ0`` steps after start-up until the network changes.

Identification tests each candidate arc against the residual window after
detection: the composite observer/plant dynamics is fitted by least squares
with the plant state free, allowing for the arc coming back at an unknown
step inside the window.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from .discernibility import TOL_SHARED, discernible_partial, pbh_observable
from .dynamics import ConsensusSystem, disconnect_edge
from .errors import (
    AssumptionViolated,
    IllConditioned,
    NoSuchArc,
    NotObservable,
    WindowTooShort,
)
from .fdi_full import Ambiguous, IdentifiabilityReport
from .graph import is_strongly_connected
from .spectral import TOL_EIG, TOL_NIL, match_spectra, numerical_rank

EPS = 1e-9
TOL_FIT = 1e-6
COND_LIMIT = 1e12

__all__ = [
    "EPS",
    "TOL_FIT",
    "COND_LIMIT",
    "DeadBeatObserver",
    "ObserverRun",
    "PartialIdentification",
    "design_deadbeat",
    "run_observer",
    "check_identifiability_partial",
    "identify_partial",
    "composite_matrix",
    "observer_pbh_matrix",
    "plant_pbh_matrix",
    "comparison_pbh_matrix",
    "write_observer_log",
]


def output_matrix(n, p):
    return np.eye(n)[:p]


@dataclass(frozen=True, eq=False)
class DeadBeatObserver:
    """Observer gain ``G`` (N x p) and the nilpotency index ``tau0`` of ``A + G C``.

    ``indices`` are the observability indices picked for the outputs and
    ``condition`` is the condition number of the canonical-form transform.
    """

    p: int
    G: np.ndarray
    tau0: int
    system: ConsensusSystem
    indices: tuple = ()
    condition: float = 1.0

    @property
    def C(self):
        return output_matrix(self.system.n, self.p)

    @property
    def A_L(self):
        return self.system.A + self.G @ self.C


def _observability_indices(F, B, tol):
    """Greedy cyclic scan of ``F^k b_i``; each column is kept while it adds rank."""
    n, m = B.shape
    mu = [0] * m
    done = [False] * m
    kept = np.zeros((n, 0))
    powers = B.copy()
    for _ in range(n):
        for i in range(m):
            if done[i] or kept.shape[1] == n:
                continue
            cand = np.column_stack([kept, powers[:, i]])
            if numerical_rank(cand, tol) > kept.shape[1]:
                kept = cand
                mu[i] += 1
            else:
                done[i] = True
        if kept.shape[1] == n or all(done):
            break
        powers = F @ powers
    return mu


def design_deadbeat(sys: ConsensusSystem, p: int, cond_limit=COND_LIMIT, tol=1e-10) -> DeadBeatObserver:
    """Dead-beat gain via the controller canonical form of the dual pair ``(A^T, C^T)``.

    The observability indices come from a cyclic greedy scan of the outputs
    in order ``1..p``; all closed-loop poles are then placed at zero.
    """
    n = sys.n
    if not 1 <= p <= n:
        raise ValueError(f"observed count must be in [1, {n}]")
    ok, bad = pbh_observable(sys.A, p)
    if not ok:
        raise NotObservable(bad)
    F = sys.A.T
    B = output_matrix(n, p).T
    mu = _observability_indices(F, B, tol)
    if sum(mu) != n:
        raise NotObservable([])
    chains = [np.linalg.matrix_power(F, k) @ B[:, i] for i in range(p) for k in range(mu[i])]
    Cbar = np.column_stack(chains)
    Cinv = np.linalg.inv(Cbar)
    sigma = np.cumsum(mu)
    rows = []
    for i in range(p):
        if mu[i] == 0:
            continue
        q = Cinv[sigma[i] - 1]
        for k in range(mu[i]):
            rows.append(q @ np.linalg.matrix_power(F, k))
    P = np.array(rows)
    cond = float(np.linalg.cond(P))
    if not np.isfinite(cond) or cond > cond_limit:
        raise IllConditioned(f"canonical-form transform has condition number {cond:.3g}")
    Ac = P @ F @ np.linalg.inv(P)
    Bc = P @ B
    last = [sigma[i] - 1 for i in range(p) if mu[i] > 0]
    used = [i for i in range(p) if mu[i] > 0]
    Am = Ac[last]
    Bm = Bc[np.ix_(last, used)]
    K = np.zeros((p, n))
    K[used] = -np.linalg.solve(Bm, Am @ P)
    G = K.T
    # the closed loop is a set of nilpotent chains of lengths mu, so its index is max(mu);
    # the numerical check only guards against a construction that lost accuracy
    tau0 = max(mu)
    A_L = sys.A + G @ output_matrix(n, p)
    bound = TOL_NIL * max(1.0, float(np.max(np.abs(A_L)))) ** tau0
    if np.max(np.abs(np.linalg.matrix_power(A_L, tau0))) >= bound:
        raise IllConditioned("closed-loop error matrix is not numerically nilpotent")
    G.flags.writeable = False
    return DeadBeatObserver(p, G, tau0, sys, tuple(mu), cond)


@dataclass(frozen=True, eq=False)
class ObserverRun:
    """Observer trajectory ``x̂(0..T)``, residuals ``r(t)`` and raw flags ``d(t)``."""

    xhat_states: np.ndarray
    residuals: np.ndarray
    detection_signal: np.ndarray
    tau0: int
    eps: float

    @property
    def residual_norms(self):
        return np.max(np.abs(self.residuals), axis=1)

    @property
    def events(self):
        """Detection times: rising edges of ``d`` at ``t >= tau0``."""
        d = self.detection_signal
        return [t for t in range(self.tau0, len(d))
                if d[t] and (t == self.tau0 or not d[t - 1])]


def run_observer(obs: DeadBeatObserver, y_stream, eps=EPS, xhat0=None) -> ObserverRun:
    """Feed the measurements ``y(0..T)`` through the observer, ``x̂(0) = 0`` by default."""
    Y = np.atleast_2d(np.asarray(y_stream, dtype=float))
    n, p = obs.system.n, obs.p
    if Y.shape[1] != p:
        raise ValueError(f"measurements must have {p} columns")
    A, G = obs.system.A, obs.G
    xhat = np.zeros(n) if xhat0 is None else np.asarray(xhat0, dtype=float).copy()
    T = Y.shape[0]
    Xh = np.empty((T, n))
    Rs = np.empty((T, p))
    for t in range(T):
        Xh[t] = xhat
        Rs[t] = xhat[:p] - Y[t]
        xhat = A @ xhat - G @ (Y[t] - xhat[:p])
    d = np.max(np.abs(Rs), axis=1) > eps
    return ObserverRun(Xh, Rs, d, obs.tau0, eps)


# --- PBH matrices ----------------------------------------------------------


def composite_matrix(obs: DeadBeatObserver, j: int, i: int) -> np.ndarray:
    """``[[A_L, -G C], [0, Ā_ij]]`` for the observer driven by the plant without arc ``j -> i``."""
    sys = obs.system
    if not sys.graph.has_arc(j, i):
        raise NoSuchArc(f"no arc {j}->{i} in the communication graph")
    n = sys.n
    C = obs.C
    return np.block([
        [obs.A_L, -obs.G @ C],
        [np.zeros((n, n)), disconnect_edge(sys, j, i)],
    ])


def observer_pbh_matrix(obs, Abar, lam):
    """PBH matrix of the observer/faulty-plant composite at ``lam``."""
    n = obs.system.n
    C = obs.C
    I = np.eye(n)
    return np.block([
        [lam * I - obs.A_L, obs.G @ C],
        [np.zeros((n, n)), lam * I - Abar],
        [C, -C],
    ])


def plant_pbh_matrix(A, Abar, p, lam):
    """PBH matrix of the healthy/faulty plant pair observed through the first ``p`` states."""
    n = A.shape[0]
    C = output_matrix(n, p)
    I = np.eye(n)
    return np.block([
        [lam * I - A, np.zeros((n, n))],
        [np.zeros((n, n)), lam * I - Abar],
        [C, -C],
    ])


def comparison_pbh_matrix(obs, arc1, arc2, lam):
    """PBH matrix of two composites side by side with differenced residuals."""
    n = obs.system.n
    C = obs.C
    M1 = composite_matrix(obs, *arc1)
    M2 = composite_matrix(obs, *arc2)
    Z = np.zeros((2 * n, 2 * n))
    I = np.eye(2 * n)
    out = np.hstack([C, -C])
    return np.block([
        [lam * I - M1, Z],
        [Z, lam * I - M2],
        [out, -out],
    ])


# --- identifiability -------------------------------------------------------


def check_identifiability_partial(sys: ConsensusSystem, p: int) -> IdentifiabilityReport:
    """Candidate arcs and failures for identification from the first ``p`` states.

    Arcs whose removal breaks strong connectivity are excluded (such a fault
    is visible by other means).  Remaining arcs must be discernible with an
    observable faulty pair; every pair of them must have faulty spectra that
    meet only at 1.
    """
    ok, bad = pbh_observable(sys.A, p)
    if not ok:
        return IdentifiabilityReport(False, [(None, "original-not-observable")])
    failures, candidates, excluded = [], [], []
    faulty = {}
    for tail, head, _ in sorted(sys.graph.arcs):
        arc = (tail, head)
        if not is_strongly_connected(sys.graph.without_arc(tail, head)):
            excluded.append(arc)
            continue
        try:
            v = discernible_partial(sys, tail, head, p)
        except AssumptionViolated as exc:
            failures.append((arc, exc.which))
            continue
        if not v.discernible:
            failures.append((arc, "not-discernible"))
            continue
        candidates.append(arc)
        faulty[arc] = disconnect_edge(sys, tail, head)
    scale = max(1.0, np.linalg.norm(sys.A, 2))
    for a1, a2 in combinations(candidates, 2):
        shared = [z for z in match_spectra(faulty[a1], faulty[a2], TOL_SHARED)
                  if abs(z - 1.0) >= TOL_EIG * scale]
        if shared:
            failures.append(((a1, a2), "shared-spectrum"))
    return IdentifiabilityReport(not failures, failures, candidates, excluded)


# --- identification --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PartialIdentification:
    """Result of the hypothesis bank.

    ``result`` is an arc ``(tail, head)``, :class:`Ambiguous`, or ``None``
    when the window shows no fault.  ``misfits`` maps each candidate to its
    best relative misfit and ``restored_after`` to the matching number of
    faulty steps (``None`` when the arc stays down through the window).
    """

    result: object
    detection_time: int
    window: tuple
    misfits: dict = field(default_factory=dict)
    restored_after: dict = field(default_factory=dict)
    truncated: bool = False


def _hypothesis_fit(obs, Abar, xhat0, r_obs, steps):
    """Least-squares residual fit with the plant state free and ``x̂`` known.

    The plant follows ``Ā`` for ``steps`` transitions and ``A`` afterwards.
    Returns the residual misfit norm.
    """
    sys = obs.system
    n, p = sys.n, obs.p
    A_L, GC = obs.A_L, obs.G @ obs.C
    K = r_obs.shape[0]
    # e(k) = x̂(k) - x(k); x̂ known part and a linear map in x(0)
    xh_free = np.array(xhat0, dtype=float)
    xh_lin = np.zeros((n, n))
    x_lin = np.eye(n)
    rows_const = np.empty((K, p))
    rows_lin = np.empty((K, p, n))
    for k in range(K):
        rows_const[k] = xh_free[:p]
        rows_lin[k] = xh_lin[:p] - x_lin[:p]
        M = Abar if k < steps else sys.A
        xh_free = A_L @ xh_free
        xh_lin = A_L @ xh_lin - GC @ x_lin
        x_lin = M @ x_lin
    Amat = rows_lin.reshape(K * p, n)
    b = (r_obs - rows_const).reshape(K * p)
    z, *_ = np.linalg.lstsq(Amat, b, rcond=None)
    return float(np.linalg.norm(Amat @ z - b))


def identify_partial(obs: DeadBeatObserver, run: ObserverRun, y_stream=None, detection_time=None,
                     candidates=None, tol_fit=TOL_FIT, end=None) -> PartialIdentification:
    """Which arc explains the residual window after a detection?

    The window starts one step before detection and spans ``4N + 1``
    samples (or up to ``end``, exclusive, when a later episode cuts it
    short).  Each candidate arc ``(j, i)`` is fitted with every possible
    restoration step inside the window; it is consistent when the best
    misfit is at most ``tol_fit`` times the norm of the residual window.
    """
    sys = obs.system
    n = sys.n
    if detection_time is None:
        ev = run.events
        if not ev:
            return PartialIdentification(None, -1, (0, 0))
        detection_time = ev[0]
    t0 = detection_time - 1
    stop = t0 + 4 * n + 1
    total = run.residuals.shape[0]
    truncated = end is not None and end < stop
    stop = min(stop, total, end if end is not None else stop)
    if stop - detection_time < 4 * n:
        raise WindowTooShort(
            f"{stop - detection_time} samples after t={detection_time}; {4 * n} required"
        )
    r_obs = run.residuals[t0:stop]
    scale = float(np.linalg.norm(r_obs))
    if scale == 0.0:
        return PartialIdentification(None, detection_time, (t0, stop), truncated=truncated)
    if candidates is None:
        candidates = check_identifiability_partial(sys, obs.p).candidates
    K = r_obs.shape[0]
    misfits, restored = {}, {}
    for arc in candidates:
        Abar = disconnect_edge(sys, *arc)
        best, best_s = np.inf, None
        for s in range(1, K):
            m = _hypothesis_fit(obs, Abar, run.xhat_states[t0], r_obs, s) / scale
            if m < best:
                best, best_s = m, s
        misfits[arc] = best
        restored[arc] = None if best_s == K - 1 else best_s
    consistent = frozenset(a for a, m in misfits.items() if m <= tol_fit)
    result = next(iter(consistent)) if len(consistent) == 1 else Ambiguous(consistent)
    return PartialIdentification(result, detection_time, (t0, stop), misfits, restored, truncated)


def write_observer_log(path, y_stream, run: ObserverRun):
    """CSV ``t,y1..yp,xhat1..xhatN,residual_norm,d``."""
    Y = np.atleast_2d(np.asarray(y_stream, dtype=float))
    p = Y.shape[1]
    n = run.xhat_states.shape[1]
    norms = run.residual_norms
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"y{i}" for i in range(1, p + 1)]
                   + [f"xhat{i}" for i in range(1, n + 1)] + ["residual_norm", "d"])
        for t in range(Y.shape[0]):
            w.writerow([t] + [format(v, ".17g") for v in Y[t]]
                       + [format(v, ".17g") for v in run.xhat_states[t]]
                       + [format(norms[t], ".17g"), int(run.detection_signal[t])])

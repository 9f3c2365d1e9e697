"""Full-state residual generation and arc identification.

The projector ``W`` annihilates the consensus direction and satisfies
``W A = J̃ W``, so ``r(t) = W x(t) - J̃ W x(t-1)`` vanishes on healthy steps.
After the loss of arc ``r -> h`` every residual is a multiple of ``W e_h``;
the multiple equals ``-κ ℓ_hr (x_h - x_r)`` at the previous step, which pins
down the tail.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from .discernibility import TOL_SHARED, discernible_full
from .dynamics import ConsensusSystem, disconnect_edge
from .errors import EmptyCandidateSet, NoDirectionMatch
from .graph import is_strongly_connected
from .spectral import TOL_EIG, match_spectra, real_block_form

EPS = 1e-9
TOL_DIR = 1e-6
TOL_ID = 1e-6

__all__ = [
    "EPS",
    "TOL_DIR",
    "TOL_ID",
    "ResidualProjector",
    "Ambiguous",
    "IdentificationTrace",
    "IdentifiabilityReport",
    "FullStateEpisode",
    "build_projector",
    "residual",
    "residual_series",
    "detect",
    "identify_head",
    "identify_tail",
    "check_identifiability_full",
    "run_full_fdi",
    "write_full_log",
]


@dataclass(frozen=True, eq=False)
class ResidualProjector:
    W: np.ndarray
    Jtilde: np.ndarray
    system: ConsensusSystem

    def direction(self, h):
        """``W e_h``."""
        return self.W[:, h - 1]


@dataclass(frozen=True)
class Ambiguous:
    """Several arcs (or tails) remain consistent with the data."""

    candidates: frozenset

    def __contains__(self, item):
        return item in self.candidates


def build_projector(sys: ConsensusSystem) -> ResidualProjector:
    """``W = [0 I] T^{-1}`` from the real block form of ``A``."""
    form = real_block_form(sys.A)
    W = np.linalg.inv(form.T)[1:]
    W.flags.writeable = False
    Jt = np.array(form.Jtilde)
    Jt.flags.writeable = False
    return ResidualProjector(W, Jt, sys)


def residual(proj, x_t, x_prev):
    return proj.W @ np.asarray(x_t, dtype=float) - proj.Jtilde @ (proj.W @ np.asarray(x_prev, dtype=float))


def _states(traj):
    return np.asarray(getattr(traj, "states", traj), dtype=float)


def residual_series(proj, traj):
    """Residuals ``r(1..T)`` as rows; row 0 is zero (no previous state)."""
    X = _states(traj)
    R = np.zeros((X.shape[0], proj.W.shape[0]))
    WX = X @ proj.W.T
    R[1:] = WX[1:] - WX[:-1] @ proj.Jtilde.T
    return R


def detect(proj, traj, eps=EPS, start=1):
    """First ``t >= start`` with ``||r(t)||_inf > eps``, or ``None`` when no fault shows."""
    R = residual_series(proj, traj)
    norms = np.max(np.abs(R), axis=1)
    hits = np.nonzero(norms[start:] > eps)[0]
    return int(hits[0]) + start if hits.size else None


def identify_head(proj, r_vec, tol_dir=TOL_DIR):
    """Vertex ``h`` whose direction ``W e_h`` is collinear with ``r_vec``, and the coefficient."""
    r_vec = np.asarray(r_vec, dtype=float)
    nr = np.linalg.norm(r_vec)
    if nr == 0:
        raise ValueError("residual vector is zero")
    cols = proj.W
    norms = np.linalg.norm(cols, axis=0)
    cos = np.abs(r_vec @ cols) / (nr * norms)
    h = int(np.argmax(cos)) + 1
    if cos[h - 1] <= 1.0 - tol_dir:
        raise NoDirectionMatch(f"best collinearity {cos[h - 1]:.9f} at vertex {h} is below threshold")
    w = cols[:, h - 1]
    return h, float(w @ r_vec / (w @ w))


@dataclass(frozen=True, eq=False)
class IdentificationTrace:
    """Record of one identification run.

    ``candidate_sets[i]`` is the set consistent with the step at
    ``times[i]``; ``tail`` is a vertex or :class:`Ambiguous`.
    """

    detection_time: int
    k_star: int | None
    head: int
    c_values: list = field(default_factory=list)
    candidate_sets: list = field(default_factory=list)
    times: list = field(default_factory=list)
    tail: object = None

    @property
    def arc(self):
        if isinstance(self.tail, Ambiguous):
            return self.tail
        return (self.tail, self.head)

    def intersections(self):
        out = []
        cur = None
        for s in self.candidate_sets:
            cur = set(s) if cur is None else cur & s
            out.append(frozenset(cur))
        return out


def identify_tail(proj, traj, detection_time, head=None, eps=EPS, tol_id=TOL_ID,
                  fault_time=None, tol_dir=TOL_DIR) -> IdentificationTrace:
    """Intersect the tail candidate sets over at most ``2N`` residual samples.

    A candidate ``i`` (an in-neighbour of ``h``) survives step ``t`` when
    ``x_i(t-1) = c_t / (κ ℓ_hi) + x_h(t-1)`` holds within ``tol_id``, where
    ``c_t`` is the least-squares coefficient of ``r(t)`` on ``W e_h``.
    Samples with ``||r(t)|| <= eps`` carry no information and are skipped.
    """
    sys = proj.system
    X = _states(traj)
    R = residual_series(proj, X)
    n = sys.n
    if head is None:
        head, _ = identify_head(proj, R[detection_time], tol_dir)
    w = proj.direction(head)
    ww = w @ w
    neighbours = sorted(sys.graph.in_neighbors(head))
    ell = {i: sys.L[head - 1, i - 1] for i in neighbours}
    c_values, sets, times = [], [], []
    current = set(neighbours)
    t = detection_time
    while t < X.shape[0] and len(times) < 2 * n:
        r = R[t]
        if np.max(np.abs(r)) > eps:
            c = float(w @ r / ww)
            xp = X[t - 1]
            Rk = frozenset(
                i for i in neighbours
                if abs(xp[i - 1] - c / (sys.kappa * ell[i]) - xp[head - 1]) < tol_id
            )
            c_values.append(c)
            sets.append(Rk)
            times.append(t)
            current &= Rk
            if not current:
                raise EmptyCandidateSet(
                    f"no in-neighbour of {head} is consistent with the residual at t={t}"
                )
            if len(current) == 1:
                break
        t += 1
    tail = next(iter(current)) if len(current) == 1 else Ambiguous(frozenset(current))
    k_star = None if fault_time is None else detection_time - fault_time
    return IdentificationTrace(detection_time, k_star, head, c_values, sets, times, tail)


# --- identifiability -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class IdentifiabilityReport:
    """Outcome of an identifiability pre-check; truthy when nothing failed.

    ``failures`` lists ``(item, reason)`` where ``item`` is an arc or a pair
    of arcs.  ``excluded`` lists arcs left out of the candidate set without
    counting as a failure.
    """

    ok: bool
    failures: list = field(default_factory=list)
    candidates: list = field(default_factory=list)
    excluded: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


def _shared_non_unit(M1, M2, scale):
    return [z for z in match_spectra(M1, M2, TOL_SHARED) if abs(z - 1.0) >= TOL_EIG * scale]


def check_identifiability_full(sys: ConsensusSystem, h: int) -> IdentifiabilityReport:
    """Pairwise conditions over the in-neighbours ``j, j'`` of ``h``.

    Each removal ``j -> h`` must keep the graph strongly connected and be
    discernible, and ``σ(Ā_hj) ∩ σ(Ā_hj') = {1}``.  Heads with fewer than two
    in-neighbours pass vacuously.
    """
    nbrs = sorted(sys.graph.in_neighbors(h))
    if len(nbrs) < 2:
        return IdentifiabilityReport(True, [], [(j, h) for j in nbrs])
    failures = []
    faulty = {}
    for j in nbrs:
        if not is_strongly_connected(sys.graph.without_arc(j, h)):
            failures.append(((j, h), "disconnects"))
            continue
        faulty[j] = disconnect_edge(sys, j, h)
        if not discernible_full(sys, j, h).discernible:
            failures.append(((j, h), "not-discernible"))
    scale = max(1.0, np.linalg.norm(sys.A, 2))
    for j1, j2 in combinations(nbrs, 2):
        if j1 in faulty and j2 in faulty:
            shared = _shared_non_unit(faulty[j1], faulty[j2], scale)
            if shared:
                failures.append((((j1, h), (j2, h)), "shared-spectrum"))
    return IdentifiabilityReport(not failures, failures, [(j, h) for j in nbrs])


# --- end-to-end runs -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FullStateEpisode:
    """One detection event and what could be inferred from it."""

    detection_time: int
    head: int | None = None
    trace: IdentificationTrace | None = None
    status: str = "identified"

    @property
    def arc(self):
        return None if self.trace is None else self.trace.arc


def run_full_fdi(proj, traj, eps=EPS, tol_id=TOL_ID, tol_dir=TOL_DIR):
    """Detect every fault episode (rising edge of the residual) and identify it."""
    R = residual_series(proj, traj)
    norms = np.max(np.abs(R), axis=1)
    flag = norms > eps
    flag[0] = False
    episodes = []
    for t in range(1, len(flag)):
        if not flag[t] or flag[t - 1]:
            continue
        try:
            head, _ = identify_head(proj, R[t], tol_dir)
        except NoDirectionMatch:
            episodes.append(FullStateEpisode(t, None, None, "detected-unidentified"))
            continue
        try:
            trace = identify_tail(proj, traj, t, head, eps, tol_id)
        except EmptyCandidateSet:
            episodes.append(FullStateEpisode(t, head, None, "tail-unidentified"))
            continue
        status = "ambiguous" if isinstance(trace.tail, Ambiguous) else "identified"
        episodes.append(FullStateEpisode(t, head, trace, status))
    return episodes, norms


def write_full_log(path, norms, episodes, eps=EPS):
    """CSV ``t,residual_norm,detected,head_candidate,c_value,tail_candidates``."""
    info = {}
    for ep in episodes:
        if ep.trace is None:
            info[ep.detection_time] = (ep.head, None, None)
            continue
        for t, c, s in zip(ep.trace.times, ep.trace.c_values, ep.trace.intersections()):
            info[t] = (ep.head, c, s)
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "residual_norm", "detected", "head_candidate", "c_value", "tail_candidates"])
        for t, v in enumerate(norms):
            head, c, s = info.get(t, (None, None, None))
            w.writerow([
                t,
                format(v, ".17g"),
                int(v > eps),
                "" if head is None else head,
                "" if c is None else format(c, ".17g"),
                "" if s is None else ";".join(str(i) for i in sorted(s)),
            ])

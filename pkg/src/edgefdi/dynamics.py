"""Consensus networks ``x(t+1) = (I - κL) x(t)`` and fault-injection runs."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    AsymmetricWeights,
    KappaOutOfRange,
    NoSuchArc,
    NotStronglyConnected,
    ScheduleInvalid,
)
from .graph import WeightedDigraph, is_strongly_connected, laplacian
from .spectral import left_perron_vector

__all__ = [
    "ConsensusSystem",
    "Disconnect",
    "Restore",
    "FaultSchedule",
    "Trajectory",
    "build_system",
    "consensus_matrix",
    "disconnect_edge",
    "disconnect_edge_undirected",
    "simulate",
    "consensus_value",
    "consensus_gap",
    "HEALTHY",
]

HEALTHY = "healthy"


def consensus_matrix(L, kappa):
    """``I - κL`` with the diagonal set to ``1 - (off-diagonal row sum)``."""
    A = -kappa * np.asarray(L, dtype=float)
    np.fill_diagonal(A, 0.0)
    np.fill_diagonal(A, 1.0 - A.sum(axis=1))
    return A


@dataclass(frozen=True, eq=False)
class ConsensusSystem:
    graph: WeightedDigraph
    kappa: float
    L: np.ndarray
    A: np.ndarray

    @property
    def n(self):
        return self.graph.n


def build_system(g: WeightedDigraph, kappa: float) -> ConsensusSystem:
    """Validate ``κ`` and strong connectivity, then form ``A = I - κL``."""
    if not is_strongly_connected(g):
        raise NotStronglyConnected("communication graph is not strongly connected")
    L = laplacian(g)
    bound = 1.0 / float(np.max(np.diag(L)))
    if not (0.0 < kappa < bound):
        raise KappaOutOfRange(f"kappa={kappa} outside the open interval (0, {bound})")
    A = consensus_matrix(L, kappa)
    L.flags.writeable = False
    A.flags.writeable = False
    return ConsensusSystem(g, float(kappa), L, A)


def _require_arc(sys, r, h):
    if not sys.graph.has_arc(r, h):
        raise NoSuchArc(f"no arc {r}->{h} in the communication graph")


def disconnect_edge(sys: ConsensusSystem, r: int, h: int) -> np.ndarray:
    """System matrix after losing arc ``r -> h``: ``A - κ ℓ_hr e_h (e_h - e_r)^T``."""
    _require_arc(sys, r, h)
    h0, r0 = h - 1, r - 1
    A = np.array(sys.A)
    c = sys.kappa * sys.L[h0, r0]
    A[h0, r0] += c
    # diagonal recomputed from the row so that A @ 1 == 1 survives rounding
    A[h0, h0] = 0.0
    A[h0, h0] = 1.0 - A[h0].sum()
    return A


def disconnect_edge_undirected(sys: ConsensusSystem, r: int, h: int) -> np.ndarray:
    """Drop both ``r -> h`` and ``h -> r``: ``A - κ ℓ_hr (e_h - e_r)(e_h - e_r)^T``."""
    _require_arc(sys, r, h)
    _require_arc(sys, h, r)
    if sys.graph.weight(r, h) != sys.graph.weight(h, r):
        raise AsymmetricWeights(f"arcs {r}->{h} and {h}->{r} carry different weights")
    d = np.zeros(sys.n)
    d[h - 1], d[r - 1] = 1.0, -1.0
    A = np.array(sys.A) - sys.kappa * sys.L[h - 1, r - 1] * np.outer(d, d)
    for i in (h - 1, r - 1):
        A[i, i] = 0.0
        A[i, i] = 1.0 - A[i].sum()
    return A


# --- fault schedules -------------------------------------------------------


@dataclass(frozen=True)
class Disconnect:
    tail: int
    head: int


@dataclass(frozen=True)
class Restore:
    tail: int
    head: int


@dataclass(frozen=True)
class FaultSchedule:
    """Time-ordered ``(t, action)`` events.

    An event at time ``t`` changes the matrix used for the step
    ``x(t) -> x(t+1)``.
    """

    events: tuple = ()

    def __post_init__(self):
        ev = tuple((int(t), a) for t, a in self.events)
        times = [t for t, _ in ev]
        if any(t < 0 for t in times):
            raise ScheduleInvalid("event times must be non-negative")
        if times != sorted(times):
            raise ScheduleInvalid("event times must be non-decreasing")
        object.__setattr__(self, "events", ev)

    @classmethod
    def from_intervals(cls, intervals):
        """Faults given as ``(first, last, tail, head)`` state intervals.

        The arc is missing while the network produces ``x(first) .. x(last)``:
        the faulty matrix drives the steps ``x(first-1) -> x(first)`` through
        ``x(last-1) -> x(last)``.  ``last=None`` keeps the arc down for good.
        """
        events = []
        for first, last, tail, head in intervals:
            if first < 1:
                raise ScheduleInvalid("interval start must be >= 1")
            if last is not None and last < first:
                raise ScheduleInvalid(f"interval [{first}, {last}] is empty")
            events.append((first - 1, 0, Disconnect(tail, head)))
            if last is not None:
                events.append((last, 1, Restore(tail, head)))
        # restorations precede disconnections sharing a time stamp
        events.sort(key=lambda e: (e[0], -e[1]))
        return cls(tuple((t, a) for t, _, a in events))

    def validate(self, g: WeightedDigraph):
        down = None
        for t, action in self.events:
            arc = (action.tail, action.head)
            if not g.has_arc(*arc):
                raise ScheduleInvalid(f"t={t}: arc {arc[0]}->{arc[1]} is not in the base graph")
            if isinstance(action, Disconnect):
                if down is not None:
                    raise ScheduleInvalid(
                        f"t={t}: arc {down[0]}->{down[1]} is already down; single faults only"
                    )
                down = arc
            elif isinstance(action, Restore):
                if down != arc:
                    raise ScheduleInvalid(f"t={t}: arc {arc[0]}->{arc[1]} is not disconnected")
                down = None
            else:
                raise ScheduleInvalid(f"unknown action {action!r}")


def fault_tag(tail, head):
    return f"cut:{tail}-{head}"


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States ``x(0..T)`` and, per step, the tag of the matrix that produced it.

    ``tags[t]`` names the matrix used for ``x(t) -> x(t+1)``.
    """

    states: np.ndarray
    tags: tuple

    @property
    def horizon(self):
        return self.states.shape[0] - 1

    def to_csv(self, path):
        n = self.states.shape[1]
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"x{i}" for i in range(1, n + 1)] + ["matrix_tag"])
            for t, x in enumerate(self.states):
                tag = "initial" if t == 0 else self.tags[t - 1]
                w.writerow([t] + [format(v, ".17g") for v in x] + [tag])


def simulate(sys, x0, schedule=None, T=50, require_connected=False) -> Trajectory:
    """Iterate the network for ``T`` steps, switching matrices per ``schedule``."""
    schedule = schedule or FaultSchedule()
    schedule.validate(sys.graph)
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (sys.n,):
        raise ValueError(f"x0 must have shape ({sys.n},)")
    pending = list(schedule.events)
    M, tag = sys.A, HEALTHY
    states = np.empty((T + 1, sys.n))
    states[0] = x
    tags = []
    for t in range(T):
        while pending and pending[0][0] == t:
            _, action = pending.pop(0)
            if isinstance(action, Disconnect):
                if not is_strongly_connected(sys.graph.without_arc(action.tail, action.head)):
                    msg = f"t={t}: removing {action.tail}->{action.head} breaks strong connectivity"
                    if require_connected:
                        raise ScheduleInvalid(msg)
                    warnings.warn(msg, RuntimeWarning, stacklevel=2)
                M, tag = disconnect_edge(sys, action.tail, action.head), fault_tag(action.tail, action.head)
            else:
                M, tag = sys.A, HEALTHY
        x = M @ x
        states[t + 1] = x
        tags.append(tag)
    return Trajectory(states, tuple(tags))


def consensus_value(sys, x0) -> float:
    """``w_A^T x0`` with ``w_A`` the normalised left Perron vector."""
    return float(left_perron_vector(sys.A) @ np.asarray(x0, dtype=float))


def consensus_gap(x, alpha) -> float:
    """``max_i |x_i - α|``."""
    return float(np.max(np.abs(np.asarray(x, dtype=float) - alpha)))

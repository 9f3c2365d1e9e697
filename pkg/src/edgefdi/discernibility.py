"""Can a single-arc disconnection be told apart from the healthy network?

Full-state tests reduce to eigenvectors of ``A`` whose entries at the two arc
endpoints coincide; partial-observation tests build the stacked PBH matrix of
the healthy/faulty pair at every shared eigenvalue.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import ConsensusSystem, disconnect_edge
from .errors import AssumptionViolated, FaultDisconnectsGraph, NoSuchArc
from .graph import is_strongly_connected
from .spectral import TOL_EIG, eigen, match_spectra, null_space, numerical_rank

TOL_SHARED = 1e-7
TOL_WIT = 1e-7

FULL = "full"
PARTIAL = "partial"

__all__ = [
    "TOL_SHARED",
    "TOL_WIT",
    "FULL",
    "PARTIAL",
    "Witness",
    "DiscernibilityVerdict",
    "AuditEntry",
    "discernible_full",
    "discernible_partial",
    "pbh_observable",
    "shared_eigenstructure",
    "condition_eigenvector",
    "condition_common_eigenpair",
    "condition_pbh",
    "audit_graph",
    "write_audit_csv",
    "format_audit",
]


@dataclass(frozen=True, eq=False)
class Witness:
    """Eigen-data that defeats discernibility.

    Full-state: ``vector`` is an eigenvector of ``A`` with equal entries at the
    arc endpoints.  Partial: ``vector`` (healthy) and ``faulty_vector`` are
    eigenvectors of ``A`` and ``Ā`` with the same first ``p`` entries.
    """

    value: complex
    vector: np.ndarray
    faulty_vector: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class DiscernibilityVerdict:
    edge: tuple
    mode: str
    p: int | None
    discernible: bool
    witnesses: list = field(default_factory=list)
    shared_spectrum: list = field(default_factory=list)
    margin: float = np.inf

    def __bool__(self):
        return self.discernible


def _unit(sys, lam):
    return abs(lam - 1.0) < TOL_EIG * max(1.0, np.linalg.norm(sys.A, 2))


def _faulty(sys, r, h):
    if not sys.graph.has_arc(r, h):
        raise NoSuchArc(f"no arc {r}->{h} in the communication graph")
    if not is_strongly_connected(sys.graph.without_arc(r, h)):
        raise FaultDisconnectsGraph(f"removing {r}->{h} breaks strong connectivity")
    return disconnect_edge(sys, r, h)


def _shared_nontrivial(sys, Abar):
    return [lam for lam in match_spectra(sys.A, Abar, TOL_SHARED) if not _unit(sys, lam)]


def condition_eigenvector(sys, r, h):
    """Eigenpairs ``(λ ≠ 1, v)`` of ``A`` with ``v_r == v_h``, plus the smallest gap seen.

    An eigenvalue of geometric multiplicity above one always yields such a
    vector, built as the combination of two kernel vectors that cancels
    ``v_r - v_h``.
    """
    witnesses = []
    margin = np.inf
    for pair in eigen(sys.A):
        if _unit(sys, pair.value):
            continue
        if pair.geometric_multiplicity > 1:
            K = pair.kernel
            c = null_space((K[r - 1] - K[h - 1])[None, :], TOL_EIG)[:, 0]
            v = K @ c
            witnesses.append(Witness(pair.value, v / np.linalg.norm(v)))
            margin = 0.0
            continue
        v = pair.vector
        gap = abs(v[r - 1] - v[h - 1]) / np.linalg.norm(v)
        margin = min(margin, gap)
        if gap < TOL_WIT:
            witnesses.append(Witness(pair.value, v))
    return witnesses, margin


def condition_common_eigenpair(sys, r, h):
    """True iff ``A`` and ``Ā`` share no eigenpair besides ``(1, 1)``."""
    Abar = _faulty(sys, r, h)
    return not any(not s.trivial for s in shared_eigenstructure(sys.A, Abar))


def condition_pbh(sys, r, h):
    """True iff ``(A, (e_r - e_h)^T)`` is unobservable only along ``1``, at ``λ = 1``."""
    _faulty(sys, r, h)
    n = sys.n
    c = np.zeros(n)
    c[r - 1], c[h - 1] = 1.0, -1.0
    for pair in eigen(sys.A):
        M = np.vstack([pair.value * np.eye(n) - sys.A, c[None, :]])
        deficient = numerical_rank(M) < n
        if _unit(sys, pair.value):
            # kernel must be exactly <1>, which needs the unit eigenvalue simple
            if pair.geometric_multiplicity != 1:
                return False
        elif deficient:
            return False
    return True


def discernible_full(sys: ConsensusSystem, r: int, h: int) -> DiscernibilityVerdict:
    """Full-state discernibility of the network with arc ``r -> h`` removed."""
    Abar = _faulty(sys, r, h)
    witnesses, margin = condition_eigenvector(sys, r, h)
    return DiscernibilityVerdict(
        edge=(r, h),
        mode=FULL,
        p=None,
        discernible=not witnesses,
        witnesses=witnesses,
        shared_spectrum=_shared_nontrivial(sys, Abar),
        margin=margin,
    )


def _output_matrix(n, p):
    return np.eye(n)[:p]


def pbh_observable(M, p):
    """PBH test for ``(M, [I_p 0])``; returns ``(observable, unobservable eigenvalues)``."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    C = _output_matrix(n, p)
    bad = []
    for pair in eigen(M):
        if numerical_rank(np.vstack([pair.value * np.eye(n) - M, C])) < n:
            bad.append(pair.value)
    return not bad, bad


def _stacked_pbh(A, Abar, p, lam):
    n = A.shape[0]
    C = _output_matrix(n, p)
    Z = np.zeros((n, n))
    return np.block([
        [lam * np.eye(n) - A, Z],
        [Z, lam * np.eye(n) - Abar],
        [C, -C],
    ])


def discernible_partial(sys: ConsensusSystem, r: int, h: int, p: int) -> DiscernibilityVerdict:
    """Discernibility from the first ``p`` agent states (rank test per shared eigenvalue)."""
    if not 1 <= p <= sys.n:
        raise ValueError(f"observed count must be in [1, {sys.n}]")
    Abar = _faulty(sys, r, h)
    ok, bad = pbh_observable(sys.A, p)
    if not ok:
        raise AssumptionViolated("original-not-observable", bad)
    ok, bad = pbh_observable(Abar, p)
    if not ok:
        raise AssumptionViolated("faulty-not-observable", bad)
    n = sys.n
    shared = _shared_nontrivial(sys, Abar)
    witnesses = []
    margin = np.inf
    for lam in shared:
        M = _stacked_pbh(sys.A, Abar, p, lam)
        s = np.linalg.svd(M, compute_uv=False)
        margin = min(margin, s[-1] / s[0])
        if numerical_rank(M) < 2 * n:
            z = null_space(M, rtol=1e-10, scale=s[0])[:, 0]
            witnesses.append(Witness(lam, z[:n], z[n:]))
    return DiscernibilityVerdict(
        edge=(r, h),
        mode=PARTIAL,
        p=p,
        discernible=not witnesses,
        witnesses=witnesses,
        shared_spectrum=shared,
        margin=margin,
    )


@dataclass(frozen=True, eq=False)
class SharedEigenpair:
    value: complex
    vector: np.ndarray
    trivial: bool


def shared_eigenstructure(M1, M2, tol=TOL_SHARED) -> list:
    """Common eigenpairs ``M1 v = λ v = M2 v``; ``(1, 1)`` is flagged ``trivial``."""
    M1 = np.asarray(M1, dtype=float)
    M2 = np.asarray(M2, dtype=float)
    n = M1.shape[0]
    scale = max(1.0, np.linalg.norm(M1, 2), np.linalg.norm(M2, 2))
    others = eigen(M2)
    out = []
    for pair in eigen(M1):
        if not any(abs(pair.value - q.value) < tol for q in others):
            continue
        lam = pair.value
        I = np.eye(n)
        K = null_space(np.vstack([lam * I - M1, lam * I - M2]), TOL_EIG, scale)
        trivial = abs(lam - 1.0) < TOL_EIG * scale
        for v in K.T:
            v = np.real(v) if lam.imag == 0 else v
            out.append(SharedEigenpair(lam, v / np.linalg.norm(v), trivial))
    return out


# --- audits ----------------------------------------------------------------

OK = "ok"
DISCONNECTS = "fault-disconnects-graph"


@dataclass(frozen=True, eq=False)
class AuditEntry:
    edge: tuple
    status: str
    verdict: DiscernibilityVerdict | None = None
    detail: str = ""


def audit_graph(sys: ConsensusSystem, mode=FULL, p=None) -> list:
    """One :class:`AuditEntry` per arc, sorted by ``(tail, head)``."""
    out = []
    for tail, head, _ in sorted(sys.graph.arcs):
        try:
            if mode == FULL:
                v = discernible_full(sys, tail, head)
            else:
                v = discernible_partial(sys, tail, head, p)
        except FaultDisconnectsGraph as exc:
            out.append(AuditEntry((tail, head), DISCONNECTS, None, str(exc)))
        except AssumptionViolated as exc:
            out.append(AuditEntry((tail, head), exc.which, None, str(exc)))
        else:
            out.append(AuditEntry((tail, head), OK, v))
    return out


def _fmt_complex(z):
    z = complex(z)
    if z.imag == 0:
        return format(z.real, ".10g")
    return f"{z.real:.10g}{z.imag:+.10g}j"


def write_audit_csv(entries, path, mode=FULL):
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tail", "head", "mode", "discernible", "shared_eigenvalues", "margin"])
        for e in entries:
            if e.verdict is None:
                w.writerow([e.edge[0], e.edge[1], mode, e.status, "", ""])
                continue
            v = e.verdict
            w.writerow([
                e.edge[0],
                e.edge[1],
                mode if v.p is None else f"{mode}:{v.p}",
                str(v.discernible).lower(),
                ";".join(_fmt_complex(z) for z in v.shared_spectrum),
                format(v.margin, ".6g"),
            ])


def format_audit(entries) -> str:
    lines = []
    bad = [e for e in entries if e.verdict is not None and not e.verdict.discernible]
    cut = [e for e in entries if e.status == DISCONNECTS]
    other = [e for e in entries if e.verdict is None and e.status != DISCONNECTS]
    good = [e for e in entries if e.verdict is not None and e.verdict.discernible]
    lines.append(f"{len(entries)} arcs: {len(good)} discernible, {len(bad)} not discernible, "
                 f"{len(cut)} disconnect the graph, {len(other)} violate observability")
    for e in bad:
        vals = ", ".join(_fmt_complex(w.value) for w in e.verdict.witnesses)
        lines.append(f"  {e.edge[0]}->{e.edge[1]}: NOT discernible (witness eigenvalues {vals})")
    for e in cut:
        lines.append(f"  {e.edge[0]}->{e.edge[1]}: removal breaks strong connectivity")
    for e in other:
        lines.append(f"  {e.edge[0]}->{e.edge[1]}: {e.status}")
    return "\n".join(lines)

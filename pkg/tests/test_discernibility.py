import numpy as np
import pytest

from edgefdi.discernibility import (
    DISCONNECTS,
    audit_graph,
    condition_common_eigenpair,
    condition_eigenvector,
    condition_pbh,
    discernible_full,
    discernible_partial,
    format_audit,
    pbh_observable,
    shared_eigenstructure,
    write_audit_csv,
)
from edgefdi.dynamics import build_system, disconnect_edge
from edgefdi.errors import AssumptionViolated, FaultDisconnectsGraph, NoSuchArc
from edgefdi.fixtures import (
    complete_graph,
    k4_partition,
    random_almost_equitable,
    random_strongly_connected,
    safe_kappa,
    seven_node_graph,
)
from edgefdi.graph import cell_edge_pairs, is_strongly_connected


@pytest.fixture(scope="module")
def seven():
    return build_system(seven_node_graph(), 0.25)


def connected_arcs(g):
    return [(r, h) for r, h, _ in g.arcs if is_strongly_connected(g.without_arc(r, h))]


def random_cases(seed, count, n_range=(4, 9), unit=False):
    """Random systems; unit weights make coincident eigen-data common."""
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(*n_range))
        if unit:
            g = random_strongly_connected(rng, n, weights=(1.0, 1.0))
        else:
            g = random_strongly_connected(rng, n)
        yield rng, build_system(g, safe_kappa(g, float(rng.uniform(0.3, 0.9))))


def test_seven_node_full_verdicts(seven):
    v65 = discernible_full(seven, 6, 5)
    assert not v65
    assert [round(w.value.real, 12) for w in v65.witnesses] == [0.5]
    assert any(abs(z - 0.5) < 1e-12 for z in v65.shared_spectrum)
    v57 = discernible_full(seven, 5, 7)
    assert v57 and v57.witnesses == [] and v57.shared_spectrum == []


def test_seven_node_partial_verdicts(seven):
    assert not discernible_partial(seven, 6, 5, 3)
    w = discernible_partial(seven, 6, 5, 3).witnesses[0]
    assert abs(w.value - 0.5) < 1e-12
    assert discernible_partial(seven, 5, 7, 3)


def test_errors(seven):
    with pytest.raises(FaultDisconnectsGraph):
        discernible_full(seven, 4, 1)
    with pytest.raises(NoSuchArc):
        discernible_full(seven, 1, 4)
    with pytest.raises(FaultDisconnectsGraph):
        discernible_partial(seven, 4, 1, 3)


def test_partial_requires_observability():
    # K4 with p=1: symmetric modes are invisible from one vertex
    s = build_system(complete_graph(4), 0.2)
    with pytest.raises(AssumptionViolated) as exc:
        discernible_partial(s, 1, 2, 1)
    assert exc.value.which == "original-not-observable"
    assert exc.value.eigenvalues


def test_faulty_observability_is_checked():
    found = False
    for _, s in random_cases(11, 50, (4, 7), unit=True):
        for p in range(1, s.n):
            if not pbh_observable(s.A, p)[0]:
                continue
            for r, h in connected_arcs(s.graph):
                if not pbh_observable(disconnect_edge(s, r, h), p)[0]:
                    with pytest.raises(AssumptionViolated) as exc:
                        discernible_partial(s, r, h, p)
                    assert exc.value.which == "faulty-not-observable"
                    found = True
                    break
            if found:
                break
        if found:
            break
    assert found


def test_witnesses_are_common_eigenpairs(seven):
    cases = [(seven, 6, 5)]
    for _, s in random_cases(1, 40, unit=True):
        for r, h in connected_arcs(s.graph):
            cases.append((s, r, h))
    flagged = 0
    for s, r, h in cases:
        v = discernible_full(s, r, h)
        Abar = disconnect_edge(s, r, h)
        for w in v.witnesses:
            flagged += 1
            assert np.linalg.norm(s.A @ w.vector - w.value * w.vector) < 1e-8
            assert np.linalg.norm(Abar @ w.vector - w.value * w.vector) < 1e-8
            assert abs(np.linalg.norm(w.vector) - 1) < 1e-12
    assert flagged > 20


def test_condition_equivalence_random():
    checked = 0
    verdicts = set()
    for unit in (False, True):
        for _, s in random_cases(2, 40, (4, 11), unit=unit):
            for r, h in connected_arcs(s.graph):
                iv = not condition_eigenvector(s, r, h)[0]
                assert iv == condition_common_eigenpair(s, r, h) == condition_pbh(s, r, h)
                verdicts.add(iv)
                checked += 1
    assert checked > 200 and verdicts == {True, False}


def test_full_partial_consistency():
    for rng, s in random_cases(3, 30, (4, 8), unit=True):
        for r, h in connected_arcs(s.graph):
            full = discernible_full(s, r, h).discernible
            try:
                assert discernible_partial(s, r, h, s.n).discernible == full
            except AssumptionViolated:
                pass
            for p in range(1, s.n):
                try:
                    part = discernible_partial(s, r, h, p).discernible
                except AssumptionViolated:
                    continue
                if part:
                    assert full


def test_partial_can_be_weaker_than_full():
    # there are arcs visible from the full state but hidden from a prefix of agents
    for _, s in random_cases(4, 40, (4, 7), unit=True):
        for r, h in connected_arcs(s.graph):
            if not discernible_full(s, r, h):
                continue
            for p in range(1, s.n):
                try:
                    if not discernible_partial(s, r, h, p):
                        return
                except AssumptionViolated:
                    continue
    pytest.fail("no arc distinguishes the two notions")


def test_full_witness_freezes_trajectory(seven):
    cases = [(seven, 6, 5)] + [(s, r, h) for _, s in random_cases(5, 40, unit=True) for r, h in connected_arcs(s.graph)]
    seen = 0
    for s, r, h in cases:
        v = discernible_full(s, r, h)
        Abar = disconnect_edge(s, r, h)
        for w in v.witnesses:
            seen += 1
            x = y = np.real(w.vector) if np.linalg.norm(np.real(w.vector)) > 1e-6 else np.imag(w.vector)
            for _ in range(2 * s.n):
                x, y = s.A @ x, Abar @ y
                assert np.max(np.abs(x - y)) < 1e-8
    assert seen > 20


def test_partial_witness_hides_outputs(seven):
    cases = [(seven, 6, 5, 3)]
    for _, s in random_cases(6, 30, (4, 8), unit=True):
        for r, h in connected_arcs(s.graph):
            for p in range(1, s.n):
                cases.append((s, r, h, p))
    seen = 0
    for s, r, h, p in cases:
        try:
            v = discernible_partial(s, r, h, p)
        except AssumptionViolated:
            continue
        Abar = disconnect_edge(s, r, h)
        for w in v.witnesses:
            seen += 1
            x, y = np.real(w.vector), np.real(w.faulty_vector)
            if np.linalg.norm(x) < 1e-6:
                x, y = np.imag(w.vector), np.imag(w.faulty_vector)
            for _ in range(2 * s.n):
                assert np.max(np.abs(x[:p] - y[:p])) < 1e-8
                x, y = s.A @ x, Abar @ y
    assert seen > 20


def test_pbh_observable_examples(seven):
    assert pbh_observable(seven.A, 3) == (True, [])
    ok, bad = pbh_observable(np.eye(2), 1)
    assert not ok and bad == [1]
    ok, bad = pbh_observable(np.diag([1.0, 0.5]), 1)
    assert not ok and bad == [0.5]


def test_shared_eigenstructure(seven):
    M = seven.A
    same = shared_eigenstructure(M, M)
    assert len(same) == 7
    s65 = shared_eigenstructure(M, disconnect_edge(seven, 6, 5))
    nontrivial = [p for p in s65 if not p.trivial]
    assert len(nontrivial) == 1 and abs(nontrivial[0].value - 0.5) < 1e-12
    v = nontrivial[0].vector
    assert np.linalg.norm(M @ v - 0.5 * v) < 1e-12
    s57 = shared_eigenstructure(M, disconnect_edge(seven, 5, 7))
    assert len(s57) == 1 and s57[0].trivial
    assert np.allclose(np.abs(s57[0].vector), 1 / np.sqrt(7))


def test_k4_audit_everything_connected():
    s = build_system(complete_graph(4), 0.2)
    entries = audit_graph(s)
    assert len(entries) == 12
    assert all(e.status != DISCONNECTS for e in entries)


def test_seven_node_audit(seven):
    entries = audit_graph(seven)
    bad = {e.edge for e in entries if e.verdict is not None and not e.verdict}
    assert (6, 5) in bad
    cut = {e.edge for e in entries if e.status == DISCONNECTS}
    assert cut == {(4, 1), (5, 2), (6, 3), (7, 4), (1, 5), (2, 6), (3, 7)}
    part = audit_graph(seven, "partial", 3)
    ok = {e.edge for e in part if e.verdict is not None and e.verdict.discernible}
    assert ok == {(5, 7)}


def test_same_cell_arcs_flagged():
    cases = [(complete_graph(4), k4_partition())]
    rng = np.random.default_rng(7)
    for _ in range(20):
        k = int(rng.integers(2, 4))
        sizes = [int(v) for v in rng.integers(2, 4, size=k)]
        cases.append(random_almost_equitable(rng, sizes, rng.uniform(0.5, 2.0, size=(k, k))))
    flagged = 0
    for g, part in cases:
        s = build_system(g, safe_kappa(g))
        verdicts = {e.edge: e for e in audit_graph(s)}
        for arc in cell_edge_pairs(part, g):
            e = verdicts[arc]
            if e.status == DISCONNECTS:
                continue
            assert not e.verdict.discernible
            flagged += 1
    assert flagged > 30


def test_audit_csv_and_summary(tmp_path, seven):
    entries = audit_graph(seven, "partial", 3)
    path = tmp_path / "audit.csv"
    write_audit_csv(entries, path, "partial")
    lines = path.read_text().splitlines()
    assert lines[0] == "tail,head,mode,discernible,shared_eigenvalues,margin"
    rows = {tuple(map(int, l.split(",")[:2])): l.split(",") for l in lines[1:]}
    assert rows[(5, 7)][2:4] == ["partial:3", "true"]
    assert rows[(6, 5)][3] == "false" and rows[(6, 5)][4] == "0.5"
    assert rows[(4, 1)][3] == DISCONNECTS
    text = format_audit(entries)
    assert text.startswith("9 arcs: 1 discernible, 1 not discernible, 7 disconnect the graph")

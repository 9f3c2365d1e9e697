import warnings

import numpy as np
import pytest

from edgefdi.dynamics import (
    Disconnect,
    FaultSchedule,
    Restore,
    build_system,
    consensus_gap,
    consensus_value,
    disconnect_edge,
    disconnect_edge_undirected,
    simulate,
)
from edgefdi.errors import (
    AsymmetricWeights,
    KappaOutOfRange,
    NoSuchArc,
    NotStronglyConnected,
    ScheduleInvalid,
)
from edgefdi.fixtures import (
    SEVEN_NODE_A,
    SIM1_X0,
    SIM_FAULTS,
    cycle_graph,
    random_strongly_connected,
    random_undirected_connected,
    safe_kappa,
    seven_node_graph,
)
from edgefdi.graph import WeightedDigraph, is_strongly_connected
from edgefdi.spectral import left_perron_vector


@pytest.fixture
def seven():
    return build_system(seven_node_graph(), 0.25)


def limit(M, x0, steps=1000):
    x = np.asarray(x0, dtype=float)
    for _ in range(steps):
        x = M @ x
    return x


def test_seven_node_matrix_exact(seven):
    assert np.array_equal(seven.A, SEVEN_NODE_A)


def test_kappa_bounds():
    g = seven_node_graph()
    with pytest.raises(KappaOutOfRange):
        build_system(g, 0.5)
    with pytest.raises(KappaOutOfRange):
        build_system(g, 0.0)
    build_system(g, 0.4999)


def test_two_cycle():
    g = WeightedDigraph(2, ((1, 2), (2, 1)))
    # for the 2-cycle max L_ii = 1, so 0.5 is inside the interval
    assert np.array_equal(build_system(g, 0.5).A, [[0.5, 0.5], [0.5, 0.5]])


def test_requires_strong_connectivity():
    with pytest.raises(NotStronglyConnected):
        build_system(WeightedDigraph(3, ((1, 2), (2, 3))), 0.1)


def test_disconnect_matches_rebuild():
    rng = np.random.default_rng(0)
    checked = 0
    for _ in range(30):
        g = random_strongly_connected(rng, int(rng.integers(3, 9)))
        s = build_system(g, safe_kappa(g))
        for r, h, _ in g.arcs:
            Abar = disconnect_edge(s, r, h)
            assert np.all(Abar @ np.ones(s.n) == 1.0) or np.max(np.abs(Abar @ np.ones(s.n) - 1)) < 1e-15
            gg = g.without_arc(r, h)
            if is_strongly_connected(gg):
                assert np.max(np.abs(Abar - build_system(gg, s.kappa).A)) < 1e-15
                checked += 1
    assert checked > 50


def test_disconnect_formula(seven):
    Abar = disconnect_edge(seven, 5, 7)
    e7, e5 = np.eye(7)[6], np.eye(7)[4]
    expected = SEVEN_NODE_A - 0.25 * seven.L[6, 4] * np.outer(e7, e7 - e5)
    assert np.array_equal(Abar, expected)
    with pytest.raises(NoSuchArc):
        disconnect_edge(seven, 7, 5)


def test_shared_spectrum_seven_node(seven):
    eig_a = np.linalg.eigvals(seven.A)
    e65 = np.linalg.eigvals(disconnect_edge(seven, 6, 5))
    e57 = np.linalg.eigvals(disconnect_edge(seven, 5, 7))
    assert np.min(np.abs(e65 - 0.5)) < 1e-12 and np.min(np.abs(eig_a - 0.5)) < 1e-12
    shared = [z for z in eig_a if np.min(np.abs(e57 - z)) < 1e-7]
    assert len(shared) == 1 and abs(shared[0] - 1) < 1e-12


def test_disconnect_undirected():
    g = cycle_graph(3, directed=False)
    s = build_system(g, 0.25)
    Abar = disconnect_edge_undirected(s, 1, 2)
    chain = g.without_arc(1, 2).without_arc(2, 1)
    assert np.array_equal(Abar, Abar.T)
    assert np.max(np.abs(Abar - build_system(chain, 0.25).A)) < 1e-15
    with pytest.raises(AsymmetricWeights):
        gw = WeightedDigraph(3, ((1, 2, 1.0), (2, 1, 2.0), (2, 3), (3, 2), (3, 1), (1, 3)))
        disconnect_edge_undirected(build_system(gw, 0.1), 1, 2)
    with pytest.raises(NoSuchArc):
        disconnect_edge_undirected(build_system(cycle_graph(3), 0.25), 1, 2)


def test_undirected_four_cycle_keeps_average():
    s = build_system(cycle_graph(4, directed=False), 0.25)
    x0 = np.array([1.0, 2.0, 3.0, 4.0])
    healthy = limit(s.A, x0)
    faulty = limit(disconnect_edge_undirected(s, 1, 2), x0, 3000)
    assert np.allclose(healthy, 2.5, atol=1e-12)
    assert np.allclose(faulty, 2.5, atol=1e-9)


def test_schedule_from_intervals():
    sch = FaultSchedule.from_intervals(SIM_FAULTS)
    assert sch.events == (
        (9, Disconnect(6, 5)), (14, Restore(6, 5)), (19, Disconnect(5, 7)), (24, Restore(5, 7)),
    )
    back_to_back = FaultSchedule.from_intervals([(3, 5, 1, 2), (6, None, 2, 3)])
    assert back_to_back.events == ((2, Disconnect(1, 2)), (5, Restore(1, 2)), (5, Disconnect(2, 3)))


def test_schedule_validation(seven):
    with pytest.raises(ScheduleInvalid):
        FaultSchedule(((3, Disconnect(5, 7)), (2, Restore(5, 7))))
    with pytest.raises(ScheduleInvalid):
        FaultSchedule(((1, Disconnect(6, 5)), (2, Disconnect(5, 7)))).validate(seven.graph)
    with pytest.raises(ScheduleInvalid):
        FaultSchedule(((1, Restore(5, 7)),)).validate(seven.graph)
    with pytest.raises(ScheduleInvalid):
        FaultSchedule(((1, Disconnect(7, 5)),)).validate(seven.graph)


def test_empty_schedule_constant_trajectory(seven):
    traj = simulate(seven, np.ones(7), T=20)
    assert np.all(traj.states == 1.0)


def test_simulation_uses_logged_matrices(seven):
    traj = simulate(seven, SIM1_X0, FaultSchedule.from_intervals(SIM_FAULTS), T=30)
    mats = {"healthy": seven.A, "cut:6-5": disconnect_edge(seven, 6, 5), "cut:5-7": disconnect_edge(seven, 5, 7)}
    for t, tag in enumerate(traj.tags):
        assert np.array_equal(traj.states[t + 1], mats[tag] @ traj.states[t])
    assert traj.tags[8] == "healthy" and traj.tags[9] == "cut:6-5" and traj.tags[13] == "cut:6-5"
    assert traj.tags[14] == "healthy" and traj.tags[19] == "cut:5-7" and traj.tags[24] == "healthy"


def test_disconnecting_fault_warns_or_raises(seven):
    sch = FaultSchedule(((0, Disconnect(4, 1)),))
    with pytest.warns(RuntimeWarning):
        simulate(seven, SIM1_X0, sch, T=3)
    with pytest.raises(ScheduleInvalid):
        simulate(seven, SIM1_X0, sch, T=3, require_connected=True)


def test_simulation_deterministic(seven):
    sch = FaultSchedule.from_intervals(SIM_FAULTS)
    a = simulate(seven, SIM1_X0, sch, T=60)
    b = simulate(seven, SIM1_X0, sch, T=60)
    assert a.states.tobytes() == b.states.tobytes() and a.tags == b.tags


def test_healthy_convergence_to_perron_value(seven):
    alpha = float(left_perron_vector(seven.A) @ np.array(SIM1_X0))
    traj = simulate(seven, SIM1_X0, T=500)
    assert consensus_gap(traj.states[-1], alpha) < 1e-9


def test_consensus_value(seven):
    assert abs(consensus_value(seven, np.ones(7)) - 1) < 1e-15
    assert abs(consensus_value(seven, SIM1_X0) - limit(seven.A, SIM1_X0)[0]) < 1e-8
    rng = np.random.default_rng(3)
    g = random_undirected_connected(rng, 6)
    s = build_system(g, safe_kappa(g))
    x0 = rng.normal(size=6)
    assert abs(consensus_value(s, x0) - x0.mean()) < 1e-12


def test_row_sums_preserved():
    rng = np.random.default_rng(4)
    for _ in range(30):
        g = random_undirected_connected(rng, int(rng.integers(3, 9)))
        s = build_system(g, safe_kappa(g))
        assert np.max(np.abs(s.A.sum(axis=1) - 1)) < 1e-15
        for r, h, _ in g.arcs:
            assert np.max(np.abs(disconnect_edge(s, r, h).sum(axis=1) - 1)) < 1e-15
            if r < h:
                assert np.max(np.abs(disconnect_edge_undirected(s, r, h).sum(axis=1) - 1)) < 1e-15


def test_directed_fault_drifts(seven):
    alpha = consensus_value(seven, SIM1_X0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        traj = simulate(seven, SIM1_X0, FaultSchedule(((0, Disconnect(5, 7)),)), T=1000)
    assert abs(traj.states[-1][0] - alpha) > 1e-6
    assert np.ptp(traj.states[-1]) < 1e-9


def test_undirected_fault_preserves_consensus():
    rng = np.random.default_rng(5)
    trials = 0
    while trials < 100:
        g = random_undirected_connected(rng, int(rng.integers(3, 8)))
        s = build_system(g, safe_kappa(g))
        r, h, _ = g.arcs[int(rng.integers(len(g.arcs)))]
        if not is_strongly_connected(g.without_arc(r, h).without_arc(h, r)):
            continue
        x = rng.normal(size=s.n) * 5
        alpha = x.mean()
        Abar = disconnect_edge_undirected(s, r, h)
        tau = int(rng.integers(0, 20))
        for _ in range(tau):
            x = s.A @ x
        x = limit(Abar, x, 4000)
        assert consensus_gap(x, alpha) < 1e-9
        trials += 1


def test_trajectory_csv(tmp_path, seven):
    traj = simulate(seven, SIM1_X0, FaultSchedule.from_intervals(SIM_FAULTS), T=12)
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,x1,x2,x3,x4,x5,x6,x7,matrix_tag"
    assert lines[1].endswith(",initial") and lines[10].endswith(",healthy") and lines[11].endswith(",cut:6-5")
    row = lines[5].split(",")
    assert np.array_equal([float(v) for v in row[1:8]], traj.states[4])

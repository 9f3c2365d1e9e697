"""
Where does the network agree after a link loss?
===============================================

On an undirected network the average is invariant, so a lost link (both
directions) only changes how fast agents agree, not on what.  On a directed
network the agreement value is a weighted average set by the left Perron
vector, and a permanent outage moves it.
"""

import numpy as np

from edgefdi.dynamics import (
    Disconnect,
    FaultSchedule,
    build_system,
    consensus_value,
    disconnect_edge,
    disconnect_edge_undirected,
    simulate,
)
from edgefdi.fixtures import SEVEN_NODE_KAPPA, SIM1_X0, cycle_graph, seven_node_graph

rng = np.random.default_rng(0)

# %%
# Undirected 6-cycle that loses edge 2-3 (both directions) at step 7.  The
# faulty matrix is still symmetric and stochastic, so the mean is kept.
sys = build_system(cycle_graph(6, directed=False), 0.25)
Abar = disconnect_edge_undirected(sys, 2, 3)
x = x0 = rng.normal(size=6)
for t in range(400):
    x = (sys.A if t < 7 else Abar) @ x
print("average:", x0.mean(), " final:", x)

# %%
# Directed seven-agent network, arc 5->7 lost for good at t=0.
sys = build_system(seven_node_graph(), SEVEN_NODE_KAPPA)
healthy = consensus_value(sys, SIM1_X0)
traj = simulate(sys, SIM1_X0, FaultSchedule(((0, Disconnect(5, 7)),)), T=2000)
Abar = disconnect_edge(sys, 5, 7)
print("healthy agreement:", healthy)
print("faulty agreement: ", traj.states[-1].mean())
print("faulty spectrum:", np.sort_complex(np.linalg.eigvals(Abar)).round(4))

"""
Watching every agent: residual-based link monitoring
=====================================================

Seven agents run a linear consensus protocol.  We can read every state, so
a projector ``W`` that annihilates the healthy dynamics turns each step into
a residual vector.  It stays at zero until a link goes down, points along a
column of ``W`` that names the receiving agent, and a short sequence of
state checks then names the sender.
"""

import numpy as np

from edgefdi.dynamics import FaultSchedule, build_system, simulate
from edgefdi.fdi_full import build_projector, check_identifiability_full, residual_series, run_full_fdi
from edgefdi.fixtures import SEVEN_NODE_KAPPA, SIM1_X0, SIM_FAULTS, SIM_HORIZON, seven_node_graph

np.set_printoptions(precision=4, suppress=True)

# %%
# The network and its consensus matrix ``A = I - κL``.
sys = build_system(seven_node_graph(), SEVEN_NODE_KAPPA)
print("A =\n", sys.A)
print("eigenvalues:", np.sort_complex(np.linalg.eigvals(sys.A)))

# %%
# The projector satisfies ``W A = J W`` with ``J`` the non-unit part of the
# real block form, so ``r(t) = W x(t) - J W x(t-1)`` vanishes on healthy steps.
proj = build_projector(sys)
print("max |WA - JW| =", np.max(np.abs(proj.W @ sys.A - proj.Jtilde @ proj.W)))

# %%
# Two outages: arc 6->5 is down while x(10)..x(14) are produced and arc
# 5->7 while x(20)..x(24) are.
traj = simulate(sys, SIM1_X0, FaultSchedule.from_intervals(SIM_FAULTS), SIM_HORIZON)
norms = np.max(np.abs(residual_series(proj, traj)), axis=1)
for t in range(8, 27):
    print(f"t={t:2d}  |r|={norms[t]:.3e}  step={traj.tags[t - 1]}")

# %%
# Each rising edge of the residual is one episode.  Arc 6->5 hides only from
# states in the shared 0.5 eigenspace; this x(10) is not one of them.  Head identification
# needs the receiving agent's column of W to be distinct from the others;
# tail identification needs the pre-check below.
episodes, _ = run_full_fdi(proj, traj)
for ep in episodes:
    print(ep.detection_time, ep.status, ep.arc)
for h in (5, 7):
    rep = check_identifiability_full(sys, h)
    print(f"head {h}: identifiable={bool(rep)}", rep.failures[:2])

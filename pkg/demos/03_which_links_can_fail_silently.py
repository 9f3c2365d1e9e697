"""
Which links can fail silently?
==============================

A link loss is invisible when the healthy and faulty matrices share an
eigenpair that the available measurements cannot separate.  The audit runs
that test for every arc, and almost equitable partitions explain a whole
family of silent failures: arcs inside one cell never show.
"""

import numpy as np

from edgefdi.discernibility import audit_graph, format_audit, shared_eigenstructure
from edgefdi.dynamics import build_system, disconnect_edge
from edgefdi.fixtures import SEVEN_NODE_KAPPA, complete_graph, k4_partition, seven_node_graph
from edgefdi.graph import cell_edge_pairs, laplacian, quotient_laplacian

np.set_printoptions(precision=4, suppress=True)

sys = build_system(seven_node_graph(), SEVEN_NODE_KAPPA)

# %%
# Losing 6->5 keeps the eigenpair at 0.5; losing 5->7 shares only the
# consensus eigenvalue 1.
for arc in ((6, 5), (5, 7)):
    pairs = shared_eigenstructure(sys.A, disconnect_edge(sys, *arc))
    print(arc, [(np.round(p.value, 6), p.vector.round(3)) for p in pairs])

# %%
print(format_audit(audit_graph(sys)))
print(format_audit(audit_graph(sys, mode="partial", p=3)))

# %%
# K4 split into {1,2} and {3,4}: the quotient Laplacian's spectrum sits in
# the full one and every arc inside a cell is silent.
g, part = complete_graph(4), k4_partition()
q = quotient_laplacian(g, part)
print("quotient =\n", q.matrix)
print("spectra:", np.linalg.eigvals(q.matrix), np.linalg.eigvals(laplacian(g)))
k4 = build_system(g, 0.2)
verdicts = {e.edge: e.verdict for e in audit_graph(k4)}
for arc in cell_edge_pairs(part, g):
    print(arc, "discernible" if verdicts[arc] else "silent")

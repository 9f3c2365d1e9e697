"""Single-arc fault detection and identification for linear consensus networks."""

from .discernibility import audit_graph, discernible_full, discernible_partial, pbh_observable, shared_eigenstructure
from .dynamics import FaultSchedule, build_system, consensus_value, disconnect_edge, disconnect_edge_undirected, simulate
from .fdi_full import build_projector, check_identifiability_full, detect, identify_head, identify_tail, residual
from .fdi_partial import check_identifiability_partial, composite_matrix, design_deadbeat, identify_partial, run_observer
from .graph import Partition, WeightedDigraph, is_almost_equitable, is_strongly_connected, laplacian, quotient_laplacian

__version__ = "0.1.0"

"""Simulation and search of sLOCC generation schemes for multipartite entangled states of identical qubits."""

from .detlike import Statistics, eta_det
from .scheme import Scheme, Spin, load_scheme, save_scheme
from .slocc import ClassTag, fidelity, genuine_threshold, make_target, post_select

__all__ = [
    "ClassTag",
    "Scheme",
    "Spin",
    "Statistics",
    "eta_det",
    "fidelity",
    "genuine_threshold",
    "load_scheme",
    "make_target",
    "post_select",
    "save_scheme",
]
__version__ = "0.1.0"

"""Spectral analysis of kinetic transition networks.

Zero-temperature asymptotics from a minimum spanning tree, continuation of
eigenpairs to finite temperature, eigencurrents and transition path theory.
"""
from ._backend import BACKEND
from .errors import ConvergenceError, DomainError, KTNError, ParseError, StructuralError
from .rates import Generator, equilibrium_distribution, generator, pairwise_rate
from .mst import asymptotic_spectrum, check_genericness, minimum_spanning_tree
from .network import (MinimumRecord, Network, TransitionStateRecord, build_network,
                      cap_network, largest_connected_component)
from .spectral import (EigenpairCurve, EigenpairRecord, arrhenius_fit, continue_eigenpair,
                       continue_spectrum, dense_spectrum, evolve_distribution,
                       rayleigh_quotient_iteration, refine_eigenpair)

try:
    from importlib.metadata import version as _version

    __version__ = _version("artifact")
except Exception:  # pragma: no cover - source checkout without metadata
    __version__ = "0+unknown"

__all__ = [
    "BACKEND", "ConvergenceError", "DomainError", "KTNError", "ParseError", "StructuralError",
    "Generator", "equilibrium_distribution", "generator", "pairwise_rate",
    "asymptotic_spectrum", "check_genericness", "minimum_spanning_tree",
    "MinimumRecord", "Network", "TransitionStateRecord", "build_network", "cap_network",
    "largest_connected_component", "EigenpairCurve", "EigenpairRecord", "arrhenius_fit",
    "continue_eigenpair", "continue_spectrum", "dense_spectrum", "evolve_distribution",
    "rayleigh_quotient_iteration", "refine_eigenpair",
]

"""Bin packing with a partition matroid: an asymptotic approximation scheme
built on the configuration LP, plus exact and heuristic baselines."""

from .core import Instance, InstanceError, Packing, constants, make_instance, parse_rational, validate_instance, validate_packing
from .greedy import greedy
from .oracle import exact_opt, first_fit_decreasing
from .pipeline import SolveResult, StageError, afptas_structured, auto_epsilon, gen_afptas

__all__ = [
    "Instance",
    "InstanceError",
    "Packing",
    "SolveResult",
    "StageError",
    "afptas_structured",
    "auto_epsilon",
    "constants",
    "exact_opt",
    "first_fit_decreasing",
    "gen_afptas",
    "greedy",
    "make_instance",
    "parse_rational",
    "validate_instance",
    "validate_packing",
]

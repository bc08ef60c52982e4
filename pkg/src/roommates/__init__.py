"""Exact probabilities that random stable-roommates instances are solvable."""

__version__ = "0.1.0"

from .cycletype import CycleFamily, CycleType, enumerate_partitions, family_members  # noqa: E402
from .polyint import FactorList, SparsePoly, evaluate_integral  # noqa: E402
from .stability import build_integrand, integral_P, p_even, p_n, p_odd  # noqa: E402

__all__ = [
    "CycleFamily",
    "CycleType",
    "FactorList",
    "SparsePoly",
    "build_integrand",
    "enumerate_partitions",
    "evaluate_integral",
    "family_members",
    "integral_P",
    "p_even",
    "p_n",
    "p_odd",
]

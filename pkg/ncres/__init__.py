# ncres/__init__.py

__version__ = "0.1.0"

from .boundary import enumerate_cases, integrate_xi_n, phi_case, phi_total, pi_minus, pi_plus, sphere_integrate
from .clifford import CliffordEnd, verify_relations, verify_trace_block
from .functionals import F_UV, einstein_closed, einstein_comparison, einstein_general, trace_E
from .scalar import NCResError, XiRational, partial_fractions
from .symbols import GradedSymbol, catalog, compose, parametrix_report

__all__ = [
    "CliffordEnd",
    "F_UV",
    "GradedSymbol",
    "NCResError",
    "XiRational",
    "catalog",
    "compose",
    "einstein_closed",
    "einstein_comparison",
    "einstein_general",
    "enumerate_cases",
    "integrate_xi_n",
    "parametrix_report",
    "partial_fractions",
    "phi_case",
    "phi_total",
    "pi_minus",
    "pi_plus",
    "sphere_integrate",
    "trace_E",
    "verify_relations",
    "verify_trace_block",
]

"""Tight nonclassicality inequalities for photocounting and unbalanced homodyne detection."""

__version__ = "0.1.0"

from .detectors import CLICK, PNR, DetectorModel  # noqa: E402
from .geometry import (HullVerdict, curve_hull_membership, evaluate_inequality,  # noqa: E402
                       generalized_cross, hull_membership)
from .photocount import (TestFunction, ViolationReport, lambda_n2, lambda_n3, lambda_odd,  # noqa: E402
                         max_violation, nonlinear_n2, nonlinear_n3, verify_statement2)
from .sampling import EmpiricalDist, estimate_margin, sample_counts  # noqa: E402
from .states import (coherent, fock, phase_squeezed, photocount_dist, photon_number_dist,  # noqa: E402
                     squeezed_coherent, uhd_click_prob)
from .uhd import UhdConfig, boundary_curve, lambda_uhd, linear_tight_uhd, triangle_test  # noqa: E402

__all__ = [
    "CLICK", "PNR", "DetectorModel",
    "HullVerdict", "curve_hull_membership", "evaluate_inequality", "generalized_cross", "hull_membership",
    "TestFunction", "ViolationReport", "lambda_n2", "lambda_n3", "lambda_odd", "max_violation",
    "nonlinear_n2", "nonlinear_n3", "verify_statement2",
    "EmpiricalDist", "estimate_margin", "sample_counts",
    "coherent", "fock", "phase_squeezed", "photocount_dist", "photon_number_dist", "squeezed_coherent",
    "uhd_click_prob",
    "UhdConfig", "boundary_curve", "lambda_uhd", "linear_tight_uhd", "triangle_test",
]

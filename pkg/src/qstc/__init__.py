"""Quantized self-triggered control of contracting Lur'e systems.

Certification with weighted infinity norms, logarithmic and zooming
quantizers, self-triggering mechanisms, closed-loop simulation and
post-hoc verification.
"""

__version__ = "0.1.0"

from .certify import Certificate, certify_lure, kappa_bounds, lp_feasible_theta
from .norms import WeightedNorm, log_norm_weighted_inf, weighted_norm
from .plant import LurePlant, Plant, TwoTank, lqr_gain, lure_from_two_tank
from .quantize import LogQuantizer, ZoomQuantizer
from .simulate import run_ideal, run_log, run_zoom
from .stm import StmLogConfig, StmZoomConfig

__all__ = [
    "Certificate", "LogQuantizer", "LurePlant", "Plant", "StmLogConfig", "StmZoomConfig",
    "TwoTank", "WeightedNorm", "ZoomQuantizer", "certify_lure", "kappa_bounds", "lqr_gain",
    "log_norm_weighted_inf", "lp_feasible_theta", "lure_from_two_tank", "run_ideal", "run_log",
    "run_zoom", "weighted_norm",
]

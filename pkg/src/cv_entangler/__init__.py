"""Gaussian three-mode entanglement certification and dense-coding capacities.

Modules
-------
gaussian
    Covariance-matrix algebra: symplectic maps, noise, PPT tests.
protocols
    States of the three LOCC-plus-beam-splitter protocols and their
    separability reports.
densecoding
    Decoding chain, capacities and their optimisation.
certification
    Covariance-matrix files, Monte Carlo error propagation, reports.
validation
    Regression checks against the published numbers.
"""

from . import certification, densecoding, gaussian, protocols
from .certification import MeasuredCM, certify, parse_cm, read_cm, render_report
from .densecoding import DecodingConfig, baseline_capacities, capacity, optimize_capacity, propagate
from .protocols import Protocol, classify, protocol_state, separability_report

__version__ = "0.1.0"

__all__ = [
    "DecodingConfig",
    "MeasuredCM",
    "Protocol",
    "baseline_capacities",
    "capacity",
    "certification",
    "certify",
    "classify",
    "densecoding",
    "gaussian",
    "optimize_capacity",
    "parse_cm",
    "propagate",
    "protocol_state",
    "protocols",
    "read_cm",
    "render_report",
    "separability_report",
]

"""Radial Brezis-Nirenberg problems with a general profile a(x).

Non-existence thresholds mu* and lambda*, the conformal reformulation,
a shooting solver and numerical checks of the integral identities.
"""

__version__ = "0.1.0"

from .errors import BnradError  # noqa: E402
from .profile import ProblemSpec, make_profile, validate_hypotheses  # noqa: E402
from .thresholds import ThresholdReport, compute_thresholds  # noqa: E402

__all__ = [
    "BnradError",
    "ProblemSpec",
    "ThresholdReport",
    "__version__",
    "compute_thresholds",
    "make_profile",
    "validate_hypotheses",
]

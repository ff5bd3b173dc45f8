"""Robustness certificates, risk-gap and generalization bounds for randomized classifiers."""
from . import bounds, classifiers, distributions, generalization, harness, smoothing
from .bounds import *  # noqa: F401,F403
from .classifiers import *  # noqa: F401,F403
from .distributions import *  # noqa: F401,F403
from .errors import CapabilityError, DimensionError, RandcertError, ValidationError
from .generalization import *  # noqa: F401,F403
from .harness import *  # noqa: F401,F403
from .smoothing import *  # noqa: F401,F403

__version__ = "0.1.0"

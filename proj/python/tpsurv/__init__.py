"""Two-phase survival modeling toolkit.

Thin Python face over the C++ core: expert-guided two-stage penalized Cox
fitting for two-phase data, the comparison estimators (CCA, NI, MI-Wood,
MI-Bartlett), survival prediction metrics, and the simulation harness.
"""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401

"""DP-MRM: nonparametric topic modeling for labeled corpora.

Python bindings over the C++ core: corpus handling, collapsed Gibbs chains
for DP-MRM and Labeled-LDA, the ddCRP-MRM segmenter, synthetic-data
generation, and the evaluation suite.
"""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401

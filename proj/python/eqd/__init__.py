from ._eqd import *  # noqa: F401,F403
from ._eqd import __version__  # noqa: F401

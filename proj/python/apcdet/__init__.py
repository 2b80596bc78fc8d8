from ._apcdet import *  # noqa: F401,F403
from ._apcdet import __doc__  # noqa: F401

from ._levy_default import *  # noqa: F401,F403
from ._levy_default import __doc__, version

__version__ = version()

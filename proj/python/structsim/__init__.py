from ._structsim import *  # noqa: F401,F403
from ._structsim import __version__  # noqa: F401

"""

    rln2.__init__.py
    ~~~~~~~~~~~~~~~~
    Retinex-guided ambient lighting normalization.

    @author: z33k

"""
from rln2.utils import init_log

__version__ = "0.1.0"

init_log()

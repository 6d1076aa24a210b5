"""

    rln2.__main__.py
    ~~~~~~~~~~~~~~~~
    Allow ``python -m rln2``.

    @author: z33k

"""
import sys

from rln2.harness.cli import main

sys.exit(main())

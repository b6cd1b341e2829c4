'''Runs the acex command line: python -m acex.'''

import sys

from .cli import main

sys.exit(main())

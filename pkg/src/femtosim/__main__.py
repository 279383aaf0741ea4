"""Run the command-line tool with ``python3 -m femtosim``."""

import sys

from .cli import main

sys.exit(main())

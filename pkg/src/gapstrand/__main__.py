"""``python -m gapstrand``."""

import sys

from .cli import main

sys.exit(main())

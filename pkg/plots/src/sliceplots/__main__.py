"""python3 -m sliceplots, same entry point as the plots script."""

import sys

from .cli import main

sys.exit(main())
